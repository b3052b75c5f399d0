"""Command-line front end.

Exit codes: 0 affirmative verdict, 1 negative verdict, 2 usage or format
error, 3 numerical failure. JSON reports go to stdout (or ``-o``); a one-line
summary goes to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .generators import NEGATIVE_KINDS, gen_negative, gen_planted
from .levi import centralizer_basis
from .linalg import LinAlgFailure, Tolerances
from .model import (
    SCHEMA,
    ParseError,
    datum_to_dict,
    dumps,
    parse,
    parse_gauge,
    parse_trivialization,
    validate,
    apply_trivialization_change,
    conjugate_datum,
)
from .polystability import PreconditionError, check_polystable, joint_spectrum
from .yang_mills import (
    BUDGET_EXHAUSTED,
    CONVERGED,
    MetricDatum,
    apply_gauge,
    construct_ym_metric,
    flow_solve,
    parse_metric,
    ym_residual,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class Outcome:
    def __init__(self, exit_code: int, report: dict, summary: str):
        self.exit_code = exit_code
        self.report = report
        self.summary = summary


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _write(path, data: bytes):
    Path(path).write_bytes(data)


def _tolerances(args) -> Tolerances:
    try:
        return Tolerances(args.tau_commute, args.tau_rank, args.tau_cluster, args.kappa_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _report(command: str, summary: str, **fields) -> dict:
    return {"schema": SCHEMA, "command": command, "summary": summary, **fields}


def _load_datum(path, tol, check=True):
    return parse(_read(path), tol, check=check)


def _levi_summary(spectra) -> list[int]:
    return sorted((m for s in spectra for m in s.multiplicities), reverse=True)


# -- subcommands -----------------------------------------------------------

def cmd_gen(args, tol) -> Outcome:
    try:
        if args.kind == "planted":
            sizes = [int(x) for x in args.sizes.split(",")]
            datum, truth = gen_planted(
                args.dim, sizes, seed=args.seed, identity_conjugator=args.identity_conjugator,
                cond_bound=args.cond_bound,
            )
        else:
            datum, truth = gen_negative(args.kind, args.size, args.dim, seed=args.seed), None
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.truth_out:
        if truth is None:
            raise UsageError("--truth-out only applies to planted instances")
        _write(args.truth_out, dumps(truth.to_dict()))
    summary = f"generated {args.kind}; dim={datum.dim}; sizes={datum.multiplicities}; seed={args.seed}"
    return Outcome(EXIT_OK, datum_to_dict(datum), summary)


def cmd_validate(args, tol) -> Outcome:
    datum = _load_datum(args.input, tol, check=False)
    report = validate(datum, tol)
    summary = "valid" if report.ok else f"invalid: {'; '.join(str(v) for v in report.violations)}"
    return Outcome(
        EXIT_OK if report.ok else EXIT_NEGATIVE,
        _report("validate", summary, valid=report.ok,
                violations=[{"path": v.path, "message": v.message} for v in report.violations]),
        summary,
    )


def _check_one(path, tol, seed) -> Outcome:
    try:
        datum = _load_datum(path, tol)
        report = check_polystable(datum, tol, seed)
    except (ParseError, UsageError) as exc:
        return Outcome(EXIT_USAGE, _report("check", f"error: {exc}", input=str(path), error=str(exc)), f"error: {exc}")
    except LinAlgFailure as exc:
        return Outcome(EXIT_NUMERICAL, _report("check", f"numerical failure: {exc}", input=str(path),
                                               error=str(exc)), f"numerical failure: {exc}")
    if report.polystable:
        summary = f"polystable; blocks={len(datum.blocks)}; levi={_levi_summary(report.spectrum)}"
        code = EXIT_OK
    else:
        summary = f"{report.verdict}; blocks={len(datum.blocks)}"
        code = EXIT_NEGATIVE
    return Outcome(code, _report("check", summary, input=str(path), **report.to_dict()), summary)


def cmd_check(args, tol) -> Outcome:
    if len(args.inputs) == 1:
        return _check_one(args.inputs[0], tol, args.seed)
    jobs = [(p, tol, args.seed) for p in args.inputs]
    if args.parallel > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            outcomes = list(pool.map(_check_one, *zip(*jobs)))
    else:
        outcomes = [_check_one(*job) for job in jobs]
    code = max(o.exit_code for o in outcomes)
    summary = "; ".join(f"{p}: {o.summary}" for p, o in zip(args.inputs, outcomes))
    return Outcome(code, _report("check", summary, reports=[o.report for o in outcomes]), summary)


def cmd_spectrum(args, tol) -> Outcome:
    datum = _load_datum(args.input, tol)
    try:
        spectra = [joint_spectrum(b.higgs, tol, args.seed) for b in datum.blocks]
    except PreconditionError as exc:
        summary = f"no joint spectrum: {exc}"
        return Outcome(EXIT_NEGATIVE, _report("spectrum", summary, spectra=None, error=str(exc)), summary)
    summary = f"spectra for {len(spectra)} block(s); levi={_levi_summary(spectra)}"
    return Outcome(EXIT_OK, _report("spectrum", summary, spectra=[s.to_dict() for s in spectra]), summary)


def cmd_levi(args, tol) -> Outcome:
    datum = _load_datum(args.input, tol)
    results = [centralizer_basis(b.higgs, tol, args.seed) for b in datum.blocks]
    dims = [r.dim for r in results]
    types = [None if r.levi_type is None else list(r.levi_type) for r in results]
    summary = f"centralizer dims={dims}; levi={types}"
    code = EXIT_OK if all(t is not None for t in types) else EXIT_NEGATIVE
    blocks = [r.to_dict(include_basis=not args.no_basis) for r in results]
    return Outcome(code, _report("levi", summary, blocks=blocks), summary)


def cmd_solve(args, tol) -> Outcome:
    datum = _load_datum(args.input, tol)
    if args.direct:
        try:
            metric = construct_ym_metric(datum, tol, args.seed)
        except PreconditionError as exc:
            summary = f"direct construction refused: {exc}"
            return Outcome(EXIT_NEGATIVE, _report("solve", summary, method="direct", verdict="not_polystable"), summary)
        check = ym_residual(datum, metric, tol)
        if args.metric_out:
            _write(args.metric_out, dumps(metric.to_dict()))
        summary = f"constructed; ym_residual={check.ym_residual:.3e}; flatness={check.flatness_residual:.3e}"
        return Outcome(
            EXIT_OK,
            _report("solve", summary, method="direct", verdict="constructed", metric=metric.to_dict()["blocks"],
                    ym_report=check.to_dict()),
            summary,
        )
    initial = parse_metric(_read(args.initial)) if args.initial else None
    try:
        result = flow_solve(datum, initial, max_steps=args.steps, step_size=args.lr, tol=tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.metric_out:
        _write(args.metric_out, dumps(result.metric.to_dict()))
    code = {CONVERGED: EXIT_OK, BUDGET_EXHAUSTED: EXIT_NUMERICAL}.get(result.verdict, EXIT_NEGATIVE)
    summary = (f"{result.verdict}; steps={result.steps}; residual={result.residual_history[-1]:.3e}; "
               f"max_condition={result.max_condition:.3e}")
    flow = result.to_dict(args.history_every)
    flow.pop("schema")
    return Outcome(code, _report("solve", summary, method="flow", **flow), summary)


def cmd_verify(args, tol) -> Outcome:
    datum = _load_datum(args.input, tol)
    metric = parse_metric(_read(args.metric))
    try:
        report = ym_residual(datum, metric, tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ok = report.yang_mills and report.eh_verdict
    summary = (f"{'verified' if ok else 'rejected'}; ym_residual={report.ym_residual:.3e}; "
               f"flatness={report.flatness_residual:.3e}; eh={report.eh_verdict}")
    return Outcome(EXIT_OK if ok else EXIT_NEGATIVE, _report("verify", summary, **report.to_dict()), summary)


def cmd_gauge(args, tol) -> Outcome:
    gauge = parse_gauge(_read(args.gauge))
    if not args.datum and not args.metric:
        raise UsageError("gauge needs --datum and/or --metric")
    fields = {}
    try:
        if args.datum:
            datum = conjugate_datum(_load_datum(args.datum, tol), gauge, tol)
            fields["datum"] = datum_to_dict(datum)
            if args.datum_out:
                _write(args.datum_out, dumps(fields["datum"]))
        if args.metric:
            metric = apply_gauge(parse_metric(_read(args.metric)), gauge, tol)
            fields["metric"] = metric.to_dict()
            if args.metric_out:
                _write(args.metric_out, dumps(fields["metric"]))
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise UsageError(str(exc)) from exc
    summary = "gauged " + " and ".join(k for k in ("datum", "metric") if k in fields)
    return Outcome(EXIT_OK, _report("gauge", summary, **fields), summary)


def cmd_trivialize(args, tol) -> Outcome:
    datum = _load_datum(args.input, tol)
    change = parse_trivialization(_read(args.matrix))
    try:
        new = apply_trivialization_change(datum, change, tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return Outcome(EXIT_OK, datum_to_dict(new), f"changed trivialization of a dim={datum.dim} datum")


# -- argument parsing ------------------------------------------------------

def _default_seed() -> int:
    value = os.environ.get("HIGGS_SEED")
    if value is None:
        return 0
    try:
        return int(value, 0)
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    defaults = Tolerances()
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit the JSON report (always on; kept for scripts)")
    common.add_argument("-o", "--output", help="write the report here instead of stdout")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                        help="random seed (default: $HIGGS_SEED or 0)")
    common.add_argument("--tau-commute", type=float, default=defaults.tau_commute)
    common.add_argument("--tau-rank", type=float, default=defaults.tau_rank)
    common.add_argument("--tau-cluster", type=float, default=defaults.tau_cluster)
    common.add_argument("--kappa-max", type=float, default=defaults.kappa_max)

    parser = argparse.ArgumentParser(prog="higgs-torus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a planted or negative datum")
    p.add_argument("kind", choices=("planted", *NEGATIVE_KINDS))
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--sizes", default="3", help="planted: comma-separated multiplicities")
    p.add_argument("--size", type=int, default=2, help="negative: block size")
    p.add_argument("--cond-bound", type=float, default=10.0)
    p.add_argument("--identity-conjugator", action="store_true")
    p.add_argument("--truth-out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("validate", parents=[common], help="check structural invariants")
    p.add_argument("input")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", parents=[common], help="polystability verdict")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("spectrum", parents=[common], help="joint spectrum per block")
    p.add_argument("input")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("levi", parents=[common], help="centralizer basis and Levi type")
    p.add_argument("input")
    p.add_argument("--no-basis", action="store_true")
    p.set_defaults(func=cmd_levi)

    p = sub.add_parser("solve", parents=[common], help="Yang-Mills metric by flow or direct construction")
    p.add_argument("input")
    p.add_argument("--direct", action="store_true")
    p.add_argument("--metric-out")
    p.add_argument("--initial", help="starting metric file")
    p.add_argument("--steps", type=int, default=50_000)
    p.add_argument("--lr", type=float, default=None, help="initial step size (default 0.05/scale)")
    p.add_argument("--history-every", type=int, default=1)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="Yang-Mills and Einstein-Hermitian check")
    p.add_argument("input")
    p.add_argument("metric")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gauge", parents=[common], help="apply a gauge transform")
    p.add_argument("--gauge", required=True)
    p.add_argument("--datum")
    p.add_argument("--metric")
    p.add_argument("--datum-out")
    p.add_argument("--metric-out")
    p.set_defaults(func=cmd_gauge)

    p = sub.add_parser("trivialize", parents=[common], help="change the cotangent trivialization")
    p.add_argument("input")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_trivialize)
    return parser


def run(argv=None) -> Outcome:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = EXIT_OK if exc.code == 0 else EXIT_USAGE
        return Outcome(code, {}, "")
    if args.seed is None:
        args.seed = _default_seed()
    try:
        tol = _tolerances(args)
        outcome = args.func(args, tol)
    except (UsageError, ParseError) as exc:
        outcome = Outcome(EXIT_USAGE, _report(args.command, f"error: {exc}", error=str(exc)), f"error: {exc}")
    except LinAlgFailure as exc:
        outcome = Outcome(EXIT_NUMERICAL, _report(args.command, f"numerical failure: {exc}", error=str(exc)),
                          f"numerical failure: {exc}")
    payload = dumps(outcome.report)
    if args.output:
        _write(args.output, payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    return outcome


def main(argv=None) -> int:
    outcome = run(argv)
    if outcome.summary:
        print(outcome.summary, file=sys.stderr)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
