"""Command-line front end: simulations, searches, certifications, sweeps.

Subcommands: ``simulate``, ``search``, ``verify-claims``, ``progress-trace``,
``scaling``.  Every run is a pure function of (configuration, seed):
per-trial generators are derived from the base seed with a splittable
counter scheme, and re-running a command reproduces its CSV byte for byte.

Exit codes: 0 = run complete / all checks pass, 1 = usage error,
2 = verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import lowerbound, runtime, search
from .oracles import NoiseSpec, TruthTable
from .reporting import emit_plot, write_csv

__all__ = ["main", "cli_dispatch", "UsageError"]

OUTDIR_ENV = "NOISYSEARCH_OUTDIR"

# Supported parameter ranges: larger requests are refused with a clear error
# rather than allowed to exhaust memory.
WORST_ENVELOPE = {"n": 6, "t": 3, "ell": 2}
RANDOM_ENVELOPE = {"n": 3, "m": 4, "t": 2, "ell": 2}
EXACT_SIM_MAX_DIM = 4096  # density-matrix side length for `simulate`


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage errors to 1
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def _outdir(args) -> Path:
    out = args.out or os.environ.get(OUTDIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _trial_rng(base_seed: int, grid_index: int, trial_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(base_seed, spawn_key=(grid_index, trial_index))
    return np.random.Generator(np.random.PCG64(ss))


def _check_envelope(mode: str, n: int, m: int, t: int, ell: int = 0) -> None:
    env = WORST_ENVELOPE if mode == "worst" else RANDOM_ENVELOPE
    caps = dict(env)
    if mode == "worst" and m != 2:
        raise UsageError("worst mode uses binary outputs (m = 2)")
    if n > env["n"] or t > env["t"] or ell > env.get("ell", 2) or m > env.get("m", 2):
        raise UsageError(
            f"parameters (n={n}, m={m}, t={t}, ell={ell}) outside the supported "
            f"envelope for mode {mode!r}: {caps}"
        )


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    cfg = {
        "subcommand": "simulate", "n": args.n, "p": args.p, "kind": args.kind,
        "signaling": args.signaling, "tau": args.tau, "family": args.family,
        "seed": args.seed,
    }
    rows = []
    for gi, n in enumerate(args.n):
        alg = (runtime.load_algorithm(args.algorithm) if args.algorithm
               else search.grover_algorithm(n, args.tau))
        dim = alg.n * alg.m * 2 ** (alg.ell + (alg.tau if args.signaling else 0))
        if dim > EXACT_SIM_MAX_DIM:
            raise UsageError(
                f"simulate: exact density dimension {dim} exceeds the cap of "
                f"{EXACT_SIM_MAX_DIM}; lower n or tau, or drop --signaling"
            )
        for p in args.p:
            spec = NoiseSpec(args.kind, p, signaling=args.signaling)
            succ = runtime.average_success(alg, args.family, spec, seed=args.seed)
            rows.append([n, alg.m, p, args.kind, args.signaling, alg.tau,
                         succ, alg.tau, args.seed])
    rows.sort(key=lambda r: (r[0], r[2]))
    out = _outdir(args) / "simulate.csv"
    write_csv(out, ["n", "m", "p", "kind", "signaling", "tau", "success",
                    "queries", "seed"], rows, cfg)
    print(out)
    return 0


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------

def _cmd_search(args) -> int:
    cfg = {
        "subcommand": "search", "n": args.n, "kind": args.kind, "p": args.p,
        "eps": args.eps, "trials": args.trials, "seed": args.seed,
        "true_p": args.true_p,
    }
    unknown = args.p == "unknown"
    true_p = args.true_p if unknown else float(args.p)
    rows = []
    for gi, n in enumerate(args.n):
        for trial in range(args.trials):
            rng = _trial_rng(args.seed, gi, trial)
            marked = int(rng.integers(n))
            table = TruthTable.unique_marked(n, marked)
            spec = NoiseSpec(args.kind, true_p, signaling=False)
            oracle = search.NoisyOracle(table, spec, rng)
            outcome = search.noisy_search(
                oracle, args.eps, p_known=None if unknown else float(args.p))
            found = -1 if outcome.found is None else outcome.found
            ok = outcome.found is not None and table.outputs[outcome.found] == 1
            rows.append([n, args.kind, args.p, args.eps, trial, args.seed,
                         found, ok, outcome.queries_used])
    out = _outdir(args) / "search.csv"
    write_csv(out, ["n", "kind", "p", "eps", "trial", "seed", "found",
                    "marked", "queries"], rows, cfg)
    print(out)
    return 0


# ---------------------------------------------------------------------------
# verify-claims
# ---------------------------------------------------------------------------

def _verify_rows(results) -> list[list]:
    rows = []
    for r in results:
        rows.append([r.mode, r.n, r.m, r.t, "" if r.p is None else r.p, r.name,
                     r.computed, r.expected, r.residual, r.passed])
    return rows


def _cmd_verify_claims(args) -> int:
    cfg = {
        "subcommand": "verify-claims", "mode": args.mode, "n": args.n,
        "m": args.m, "t": args.t, "checks": args.checks,
        "lemma_algs": args.lemma_algs, "p": args.p, "tau": args.tau,
        "ell": args.ell, "seed": args.seed,
    }
    results = []
    for n in args.n:
        for m in (args.m if args.mode == "random" else [2]):
            for t in args.t:
                _check_envelope(args.mode, n, m, t + 1)
                if args.checks in ("identities", "all"):
                    results += lowerbound.verify_claim_identities(n, m, t, args.mode)
                if args.checks in ("norms", "all"):
                    results += lowerbound.verify_claim_norms(n, m, t, args.mode)
            if args.lemma_algs > 0:
                _check_envelope(args.mode, n, m, args.tau, args.ell)
                for k in range(args.lemma_algs):
                    alg = lowerbound.random_algorithm(
                        n, m, args.tau, args.ell,
                        np.random.SeedSequence(args.seed, spawn_key=(n, m, k)))
                    for p in args.p:
                        rs, _ = lowerbound.verify_lemma_inequalities(alg, p, args.mode)
                        results += rs
    rows = _verify_rows(results)
    out = _outdir(args) / "verify_claims.csv"
    write_csv(out, ["mode", "n", "m", "t", "p", "check-name", "computed",
                    "expected", "residual", "pass"], rows, cfg)
    print(out)
    failed = [r for r in results if not r.passed]
    print(f"checks: {len(results)}  passed: {len(results) - len(failed)}  "
          f"failed: {len(failed)}")
    for r in failed:
        print(f"FAIL {r.name} (mode={r.mode} n={r.n} m={r.m} t={r.t}): "
              f"computed={r.computed!r} expected={r.expected!r} residual={r.residual!r}")
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# progress-trace
# ---------------------------------------------------------------------------

def _cmd_progress_trace(args) -> int:
    cfg = {
        "subcommand": "progress-trace", "mode": args.mode, "n": args.n,
        "m": args.m, "tau": args.tau, "ell": args.ell, "p": args.p,
        "algorithm": args.alg, "seed": args.seed,
    }
    _check_envelope(args.mode, args.n, args.m, args.tau, args.ell)
    if args.alg == "grover":
        alg = search.grover_algorithm(args.n, args.tau)
    else:
        alg = lowerbound.random_algorithm(args.n, args.m, args.tau, args.ell, args.seed)
    trace, _ = lowerbound.run_extended(alg, args.p, args.mode)
    rows = []
    for step in trace.steps:
        inc = ""
        bound = ""
        if step.t > 0:
            tr = trace.transitions[step.t - 1]
            inc, bound = tr.increment, tr.increment_bound
        q = trace.q_succ if step.t == trace.tau else ""
        rows.append([step.t, step.classical, step.quantum, step.active,
                     step.passive, step.psi, inc, bound, q])
    out = _outdir(args) / "progress_trace.csv"
    write_csv(out, ["t", "classical", "quantum", "active", "passive", "psi",
                    "increment", "increment_bound", "q_succ"], rows, cfg)
    print(out)
    return 0


# ---------------------------------------------------------------------------
# scaling
# ---------------------------------------------------------------------------

def _cmd_scaling(args) -> int:
    cfg = {
        "subcommand": "scaling", "kind": args.kind, "p": args.p, "n": args.n,
        "eps": args.eps, "trials": args.trials, "seed": args.seed,
    }
    rows = []
    for gi, n in enumerate(args.n):
        succ = 0
        queries = []
        for trial in range(args.trials):
            rng = _trial_rng(args.seed, gi, trial)
            marked = int(rng.integers(n))
            table = TruthTable.unique_marked(n, marked)
            oracle = search.NoisyOracle(table, NoiseSpec(args.kind, args.p), rng)
            outcome = search.noisy_search(oracle, args.eps, p_known=args.p)
            if outcome.found is not None and table.outputs[outcome.found] == 1:
                succ += 1
            queries.append(outcome.queries_used)
        mean_q = float(np.mean(queries))
        stderr = float(np.std(queries, ddof=1) / math.sqrt(len(queries))) \
            if len(queries) > 1 else 0.0
        rows.append([n, args.kind, args.p, args.eps, args.trials,
                     succ / args.trials, mean_q, stderr])
    out_csv = _outdir(args) / "scaling.csv"
    header = ["n", "kind", "p", "eps", "trials", "success_rate",
              "mean_queries", "stderr_queries"]
    write_csv(out_csv, header, rows, cfg)
    dict_rows = [dict(zip(header, row)) for row in rows]
    out_svg = _outdir(args) / "scaling.svg"
    emit_plot(dict_rows, "n", ["mean_queries"], out_svg)
    print(out_csv)
    print(out_svg)
    return 0


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="noisysearch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None,
                       help=f"output directory (default: ${OUTDIR_ENV} or '.')")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("simulate", help="exact noisy runs over an instance family")
    common(p)
    p.add_argument("--n", type=_int_list, default=[4])
    p.add_argument("--p", type=_float_list, default=[0.0])
    p.add_argument("--kind", choices=["dephasing", "depolarizing", "none"],
                   default="dephasing")
    p.add_argument("--signaling", action="store_true")
    p.add_argument("--tau", type=int, default=1)
    p.add_argument("--family", choices=["unique", "uniform"], default="unique")
    p.add_argument("--algorithm", default=None, help="algorithm config JSON file")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("search", help="run the noisy search end to end")
    common(p)
    p.add_argument("--n", type=_int_list, default=[64])
    p.add_argument("--kind", choices=["dephasing", "depolarizing", "none"],
                   default="dephasing")
    p.add_argument("--p", default="0.0", help="noise rate, or 'unknown'")
    p.add_argument("--true-p", type=float, default=0.0,
                   help="actual rate when --p unknown")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("verify-claims", help="certify operator identities and norms")
    common(p)
    p.add_argument("--mode", choices=["worst", "random"], default="worst")
    p.add_argument("--n", type=_int_list, default=[4])
    p.add_argument("--m", type=_int_list, default=[2])
    p.add_argument("--t", type=_int_list, default=[1])
    p.add_argument("--checks", choices=["identities", "norms", "all"], default="all")
    p.add_argument("--lemma-algs", type=int, default=0,
                   help="additionally run this many random algorithms per point")
    p.add_argument("--p", type=_float_list, default=[0.5])
    p.add_argument("--tau", type=int, default=2)
    p.add_argument("--ell", type=int, default=1)
    p.set_defaults(func=_cmd_verify_claims)

    p = sub.add_parser("progress-trace", help="per-call progress table of one run")
    common(p)
    p.add_argument("--mode", choices=["worst", "random"], default="worst")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--tau", type=int, default=2)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--alg", choices=["grover", "random"], default="grover")
    p.set_defaults(func=_cmd_progress_trace)

    p = sub.add_parser("scaling", help="mean queries of the search over n")
    common(p)
    p.add_argument("--kind", choices=["dephasing", "depolarizing", "none"],
                   default="dephasing")
    p.add_argument("--p", type=float, default=0.25)
    p.add_argument("--n", type=_int_list, default=[256, 1024])
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=_cmd_scaling)
    return parser


def cli_dispatch(argv=None) -> int:
    """Parse and run; returns the process exit code."""
    parser = _build_parser()
    try:
        if argv is None:
            argv = sys.argv[1:]
        argv = list(argv)
        if argv and argv[0] == "--config":
            if len(argv) < 2:
                raise UsageError("--config needs a JSON file path")
            with open(argv[1], "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
            argv = _argv_from_config(cfg) + argv[2:]
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


def _argv_from_config(cfg: dict) -> list[str]:
    if "subcommand" not in cfg:
        raise UsageError("config file must contain a 'subcommand' key")
    argv = [str(cfg["subcommand"])]
    for key, value in cfg.items():
        if key == "subcommand":
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        elif isinstance(value, list):
            argv += [flag, ",".join(str(v) for v in value)]
        else:
            argv += [flag, str(value)]
    return argv


def main(argv=None) -> int:
    return cli_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
