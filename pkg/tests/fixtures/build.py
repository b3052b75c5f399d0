"""Regenerate the CLI fixture corpus: ``python3 tests/fixtures/build.py``."""

import json
from pathlib import Path

import numpy as np

from higgstorus import BlockSpec, HiggsDatum, MetricDatum, construct_ym_metric, gen_negative, gen_planted, serialize
from higgstorus.model import dumps, gauge_to_dict, trivialization_to_dict, GaugeTransform, ChangeOfTrivialization

HERE = Path(__file__).parent


def write(name, data: bytes):
    (HERE / name).write_bytes(data)


def main():
    two_block, truth = gen_planted(
        2, [2, 1], spectra=[[((1, -2j), 2)], [((3, 1 + 1j), 1)]], seed=11
    )
    write("planted_two_block.higgs.json", serialize(two_block))
    write("planted_two_block.truth.json", dumps(truth.to_dict()))

    generic, truth = gen_planted(3, [6], seed=2024)
    write("planted_d3_n6.higgs.json", serialize(generic))
    write("planted_d3_n6.truth.json", dumps(truth.to_dict()))
    write("planted_d3_n6_identity.metric.json", dumps(MetricDatum.identity([6]).to_dict()))
    write("planted_d3_n6.gauge.json", dumps(gauge_to_dict(GaugeTransform((np.eye(6) + np.eye(6, k=1),)))))

    diag, _ = gen_planted(2, [2], spectra=[[((1, 3), 1), ((2, 4), 1)]], identity_conjugator=True)
    write("planted_diag.higgs.json", serialize(diag))

    tri = HiggsDatum(1, (BlockSpec("E1", 1, 2, 0.0, (np.array([[1, 1], [0, 2]]),)),))
    write("triangular.higgs.json", serialize(tri))
    write("triangular.metric.json", dumps(construct_ym_metric(tri).to_dict()))
    write("identity2.metric.json", dumps(MetricDatum.identity([2]).to_dict()))
    write("identity3.metric.json", dumps(MetricDatum.identity([3]).to_dict()))
    write("swap2.trivialization.json", dumps(trivialization_to_dict(ChangeOfTrivialization([[0, 1], [1, 0]]))))
    write("singular2.trivialization.json", dumps(trivialization_to_dict(ChangeOfTrivialization([[1, 1], [1, 1]]))))

    write("nilpotent.higgs.json", serialize(gen_negative("nilpotent", 2, 1)))
    write("noncommuting.higgs.json", serialize(gen_negative("noncommuting", 2, 2)))
    write("mixed.higgs.json", serialize(gen_negative("nonsemisimple_mixed", 3, 2, seed=5)))

    text = serialize(diag).decode()
    write("truncated.higgs.json", text[: len(text) // 2].encode())
    doc = json.loads(serialize(tri))
    doc["blocks"][0]["higgs"][0][0][0] = [float("nan"), 0.0]
    write("nan.higgs.json", json.dumps(doc).encode())
    doc = json.loads(serialize(two_block))
    doc["blocks"][1]["label"] = doc["blocks"][0]["label"]
    write("duplicate_labels.higgs.json", dumps(doc))
    doc = json.loads(serialize(two_block))
    doc["blocks"][0]["higgs"] = doc["blocks"][0]["higgs"][:1]
    write("short_arity.higgs.json", dumps(doc))


if __name__ == "__main__":
    main()
