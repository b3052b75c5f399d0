import numpy as np
import pytest

from higgstorus import check_polystable, commutation_residual, gen_negative, gen_planted, joint_spectrum, serialize
from higgstorus.generators import GRID, parse_truth, random_conjugator, rng_for
from higgstorus.model import dumps
from oracles import exact_is_semisimple


def test_same_seed_same_bytes():
    for seed in (0, 1, 2**63 + 5, -7):
        a, ta = gen_planted(3, [4, 2], seed=seed)
        b, tb = gen_planted(3, [4, 2], seed=seed)
        assert serialize(a) == serialize(b)
        assert dumps(ta.to_dict()) == dumps(tb.to_dict())
    assert serialize(gen_planted(3, [4], seed=1)[0]) != serialize(gen_planted(3, [4], seed=2)[0])
    for kind in ("nilpotent", "noncommuting", "nonsemisimple_mixed"):
        assert serialize(gen_negative(kind, 3, 2, seed=9)) == serialize(gen_negative(kind, 3, 2, seed=9))


def test_blocks_use_independent_streams():
    one, _ = gen_planted(2, [3], seed=5)
    two, _ = gen_planted(2, [3, 4], seed=5)
    assert one.blocks[0] == two.blocks[0]


def test_identity_conjugator_example():
    datum, truth = gen_planted(2, [2], spectra=[[((1, 3), 1), ((2, 4), 1)]], identity_conjugator=True)
    t1, t2 = datum.blocks[0].higgs
    assert np.array_equal(t1, np.diag([1, 2]))
    assert np.array_equal(t2, np.diag([3, 4]))
    assert truth.blocks[0].eigenspace_dims == [1, 1]


def test_planted_recovered_spectrum_matches_truth():
    for seed in range(20):
        datum, truth = gen_planted(3, [6], seed=seed)
        found = joint_spectrum(datum.blocks[0].higgs)
        entries = truth.blocks[0].spectrum
        assert found.multiplicities == [m for _, m in entries]
        assert found.matches(entries, 1e-8)


def test_planted_properties():
    for seed in range(30):
        datum, truth = gen_planted(2, [5, 3], seed=seed, cond_bound=100)
        for block, planted in zip(datum.blocks, truth.blocks):
            assert commutation_residual(block) <= 1e-10
            assert np.linalg.cond(planted.conjugator) <= 100 * (1 + 1e-9)
            for tup, _ in planted.spectrum:
                assert set(tup.real) <= set(GRID) and set(tup.imag) <= set(GRID)
            assert sum(planted.eigenspace_dims) == block.multiplicity


def test_truth_round_trip():
    _, truth = gen_planted(2, [3, 2], seed=3)
    back = parse_truth(dumps(truth.to_dict()))
    for a, b in zip(back.blocks, truth.blocks):
        assert np.array_equal(a.conjugator, b.conjugator)
        assert [m for _, m in a.spectrum] == [m for _, m in b.spectrum]


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(d=0, sizes=[2]),
        dict(d=1, sizes=[]),
        dict(d=1, sizes=[0]),
        dict(d=2, sizes=[2], spectra=[[((1,), 2)]]),
        dict(d=1, sizes=[2], spectra=[[((1,), 1)]]),
        dict(d=1, sizes=[2], spectra=[]),
        dict(d=1, sizes=[2], cond_bound=1000),
    ],
)
def test_gen_planted_errors(kwargs):
    with pytest.raises(ValueError):
        gen_planted(**kwargs)


def test_random_conjugator_condition():
    rng = rng_for(1)
    for n in range(1, 10):
        assert np.linalg.cond(random_conjugator(rng, n, 50.0)) <= 50 * (1 + 1e-9)


def test_negative_examples():
    t = gen_negative("nilpotent", 2, 1).blocks[0].higgs[0]
    assert np.array_equal(t, [[0, 1], [0, 0]])

    t1, t2 = gen_negative("noncommuting", 2, 2).blocks[0].higgs
    assert np.array_equal(t1, [[0, 1], [1, 0]])
    assert np.array_equal(t2, [[1, 0], [0, -1]])
    assert commutation_residual(gen_negative("noncommuting", 2, 2).blocks[0]) == pytest.approx(2 * np.sqrt(2))

    j, p = gen_negative("nonsemisimple_mixed", 3, 2, seed=1).blocks[0].higgs
    assert np.allclose(j - j[0, 0] * np.eye(3), np.eye(3, k=1))
    assert np.array_equal(j @ p, p @ j)


@pytest.mark.parametrize("size", [2, 3, 5])
@pytest.mark.parametrize("d", [1, 2, 3])
def test_negative_kinds_break_one_condition(size, d):
    for seed in range(5):
        nil = check_polystable(gen_negative("nilpotent", size, d, seed))
        mixed = check_polystable(gen_negative("nonsemisimple_mixed", size, d, seed))
        assert nil.verdict == mixed.verdict == "fails_semisimplicity"
        assert nil.commutation_residual == mixed.commutation_residual == 0
        if d >= 2:
            datum = gen_negative("noncommuting", size, d, seed)
            assert check_polystable(datum).verdict == "fails_commutation"
            for t in datum.blocks[0].higgs:
                assert exact_is_semisimple(t)


def test_negative_errors():
    with pytest.raises(ValueError):
        gen_negative("nilpotent", 1, 1)
    with pytest.raises(ValueError):
        gen_negative("noncommuting", 2, 1)
    with pytest.raises(ValueError):
        gen_negative("unipotent", 2, 1)
