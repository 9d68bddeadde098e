"""Command-line front end.

Subcommands: ``analyze``, ``simulate``, ``distribution``, ``wf``.

Exit codes: 0 success, 2 invalid input, 3 impossible observation pair,
4 simulation failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .chain import classify, load_matrix
from .elapsed import (
    VARIANCE_MODES,
    ElapsedQuery,
    distribution_of_elapsed,
    variance_elapsed,
)
from .errors import (
    AbsorbTimeError,
    ChainValidationError,
    ImpossibleObservationError,
    SimulationError,
)
from .oracle import SimConfig, simulate_elapsed
from .passage import passage_summary
from .wright_fisher import WrightFisherParams, allele_age, load_params

SCHEMA = "absorbtime.report/1"
EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_IMPOSSIBLE, EXIT_SIMULATION = 0, 1, 2, 3, 4
#: relative tolerance beyond which two modes are flagged as disagreeing
DISCREPANCY_RTOL = 1e-9


def dumps(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        return format(x, ".17g")
    return json.dumps(str(obj))


def _fmt(x) -> str:
    if x is None:
        return "undefined"
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _disagree(a, b) -> bool:
    if a is None or b is None:
        return False
    return abs(a - b) > DISCREPANCY_RTOL * max(1.0, abs(a), abs(b))


def _elapsed_section(ps, i, j, epsilon):
    out = {}
    for mode in VARIANCE_MODES:
        m = variance_elapsed(ps, ElapsedQuery(i, j, mode, series_epsilon=epsilon))
        if not m.defined:
            raise ImpossibleObservationError(m.reason)
        entry = {"expectation": m.expectation, "variance": m.variance}
        if mode == "series":
            entry["variance_as_printed"] = m.variance_as_printed
            entry["truncation_n"] = m.truncation_n
        out[mode] = entry
    return out


def _passage_section(ps, i):
    rec = {
        mode: (None if r is None else {"tau_jj": r.tau, "v_jj": r.var})
        for mode, r in ps.recurrence.items()
    }
    first = ps.first_segment(i, "corrected")
    return {
        "H_ij": ps.hit(i),
        "H_jj": ps.Hjj,
        "H_jj_identity": ps.Hjj_identity,
        "tau_ij": None if first is None else first[0],
        "v_ij": None if first is None else first[1],
        "recurrence": rec,
    }


def _discrepancies(passage, elapsed):
    flags = []
    paper, corr = passage["recurrence"]["paper"], passage["recurrence"]["corrected"]
    for key in ("tau_jj", "v_jj"):
        a = paper and paper[key]
        b = corr and corr[key]
        flags.append({"quantity": key, "modes": ["paper", "corrected"], "values": [a, b],
                      "flag": _disagree(a, b)})
    for key in ("expectation", "variance"):
        a, b = elapsed["paper"][key], elapsed["corrected"][key]
        flags.append({"quantity": key, "modes": ["paper", "corrected"], "values": [a, b],
                      "flag": _disagree(a, b)})
    return flags


def _analysis(P, i, j, args):
    ps = passage_summary(P, j)
    if i not in ps.transient:
        raise ChainValidationError(
            f"state {P.labels[i]} is absorbing; both observed states must be transient"
        )
    passage = _passage_section(ps, i)
    elapsed = _elapsed_section(ps, i, j, args.epsilon)
    mode = args.variance_mode
    return ps, {
        "schema": SCHEMA,
        "inputs": {
            "matrix": args.matrix,
            "states": P.n,
            "i": i,
            "j": j,
            "i_label": P.labels[i],
            "j_label": P.labels[j],
            "variance_mode": mode,
            "epsilon": args.epsilon,
        },
        "passage": passage,
        "elapsed": elapsed,
        "headline": {"mode": mode, **{k: elapsed[mode][k] for k in ("expectation", "variance")}},
        "discrepancies": _discrepancies(passage, elapsed),
    }


def _distribution_rows(cs, ps, i, j, args):
    q = ElapsedQuery(i, j, tmax=args.tmax)
    pmf = distribution_of_elapsed(cs, ps, q, tail=args.tail)
    cum = np.minimum(np.cumsum(pmf), 1.0)
    rows = [{"t": t + 1, "p": float(p), "cumulative": float(c)} for t, (p, c) in enumerate(zip(pmf, cum))]
    return rows, max(0.0, 1.0 - float(cum[-1]))


def _print_table(report, out):
    inp = report["inputs"]
    print(f"# {report['command']}  ({SCHEMA})", file=out)
    for k, v in inp.items():
        print(f"input.{k} = {_fmt(v)}", file=out)
    if "passage" in report:
        pas = report["passage"]
        for k in ("H_ij", "H_jj", "H_jj_identity", "tau_ij", "v_ij"):
            print(f"passage.{k} = {_fmt(pas[k])}", file=out)
        for mode, r in pas["recurrence"].items():
            for k in ("tau_jj", "v_jj"):
                print(f"passage.{k}[{mode}] = {_fmt(None if r is None else r[k])}", file=out)
    if "elapsed" in report:
        for mode, e in report["elapsed"].items():
            for k, v in e.items():
                print(f"elapsed.{k}[{mode}] = {_fmt(v)}", file=out)
        h = report["headline"]
        print(f"headline.expectation[{h['mode']}] = {_fmt(h['expectation'])}", file=out)
        print(f"headline.variance[{h['mode']}] = {_fmt(h['variance'])}", file=out)
        for d in report["discrepancies"]:
            if d["flag"]:
                a, b = (_fmt(x) for x in d["values"])
                print(f"DISCREPANCY {d['quantity']}: paper={a} corrected={b}", file=out)
    if "age" in report:
        for k, v in report["age"].items():
            print(f"age.{k} = {_fmt(v)}", file=out)
    if "simulation" in report:
        for k, v in report["simulation"].items():
            print(f"simulation.{k} = {_fmt(v)}", file=out)
    if "distribution" in report:
        print("t\tP(T=t)\tcumulative", file=out)
        for row in report["distribution"]:
            print(f"{row['t']}\t{_fmt(row['p'])}\t{_fmt(row['cumulative'])}", file=out)
        print(f"# residual tail mass <= {_fmt(report['residual'])}", file=out)


def cmd_analyze(args):
    P = load_matrix(args.matrix)
    i, j = P.index(args.i), P.index(args.j)
    _, report = _analysis(P, i, j, args)
    return {"command": "analyze", **report}


def cmd_simulate(args):
    P = load_matrix(args.matrix)
    i, j = P.index(args.i), P.index(args.j)
    cfg = SimConfig(seed=args.seed, trajectories=args.trajectories, workers=args.workers)
    # simulate first so an unreachable target reports as a simulation failure
    est = simulate_elapsed(P, i, j, cfg)
    _, report = _analysis(P, i, j, args)
    sim = {
        "seed": args.seed,
        "trajectories": args.trajectories,
        "mean": est.mean,
        "variance": est.variance,
        "se_mean": est.se_mean,
        "se_variance": est.se_variance,
        "accepted": est.accepted,
        "rejected": est.rejected,
        "acceptance_rate": est.acceptance_rate,
    }
    for mode, e in report["elapsed"].items():
        sim[f"z_expectation[{mode}]"] = est.z_mean(e["expectation"])
        sim[f"z_variance[{mode}]"] = est.z_variance(e["variance"])
    return {"command": "simulate", **report, "simulation": sim}


def cmd_distribution(args):
    P = load_matrix(args.matrix)
    i, j = P.index(args.i), P.index(args.j)
    cs = classify(P)
    ps = passage_summary(P, j)
    if i not in ps.transient:
        raise ChainValidationError(
            f"state {P.labels[i]} is absorbing; both observed states must be transient"
        )
    rows, residual = _distribution_rows(cs, ps, i, j, args)
    inputs = {"matrix": args.matrix, "i": i, "j": j, "i_label": P.labels[i], "j_label": P.labels[j]}
    return {"command": "distribution", "schema": SCHEMA, "inputs": inputs,
            "distribution": rows, "residual": residual}


def cmd_wf(args):
    count = args.observed_count
    if args.params:
        params, file_count = load_params(args.params)
        count = count if count is not None else file_count
    else:
        if args.N is None:
            raise ChainValidationError("give a parameter file or --N")
        params = WrightFisherParams(args.N, args.s, args.h, args.u, args.v)
    if count is None:
        raise ChainValidationError("--observed-count is required")
    res = allele_age(params, count, variance_mode=args.variance_mode,
                     distribution=args.distribution, tail=args.tail)
    report = {
        "command": "wf",
        "schema": SCHEMA,
        "inputs": {"N": params.N, "s": params.s, "h": params.h, "u": params.u,
                   "v": params.v, "observed_count": res.observed_count,
                   "variance_mode": res.variance_mode},
        "age": {"expected_age": res.expected_age, "age_variance": res.age_variance},
    }
    if res.distribution is not None:
        cum = np.minimum(np.cumsum(res.distribution), 1.0)
        report["distribution"] = [
            {"t": t + 1, "p": float(p), "cumulative": float(c)}
            for t, (p, c) in enumerate(zip(res.distribution, cum))
        ]
        report["residual"] = max(0.0, 1.0 - float(cum[-1]))
    return report


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a JSON report")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trajectories", type=int, default=100_000)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--variance-mode", choices=VARIANCE_MODES, default="corrected")
    common.add_argument("--epsilon", type=float, default=1e-14,
                        help="series truncation threshold on Hjj**n")
    common.add_argument("--tail", type=float, default=1e-10)
    common.add_argument("--tmax", type=int, default=None)

    parser = argparse.ArgumentParser(prog="absorbtime", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, text in (
        ("analyze", cmd_analyze, "moments of the elapsed time between two observations"),
        ("simulate", cmd_simulate, "analytic moments checked against Monte Carlo"),
        ("distribution", cmd_distribution, "table of P(T = t)"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("matrix", help="CSV or JSON transition matrix")
        p.add_argument("i", help="first observed state (index or label)")
        p.add_argument("j", help="second observed state (index or label)")
        p.set_defaults(func=func)

    p = sub.add_parser("wf", parents=[common], help="Wright-Fisher allele age")
    p.add_argument("params", nargs="?", help="JSON parameter file")
    p.add_argument("--N", type=int)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--h", type=float, default=0.5)
    p.add_argument("--u", type=float, default=0.0)
    p.add_argument("--v", type=float, default=0.0)
    p.add_argument("--observed-count", type=int)
    p.add_argument("--distribution", action="store_true")
    p.set_defaults(func=cmd_wf)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = args.func(args)
    except ImpossibleObservationError as e:
        print(f"error: impossible observation pair: {e}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except SimulationError as e:
        print(f"error: simulation failed: {e}", file=sys.stderr)
        return EXIT_SIMULATION
    except ChainValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except AbsorbTimeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    if args.json:
        sys.stdout.write(dumps(report) + "\n")
    else:
        _print_table(report, sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
