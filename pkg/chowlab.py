#!/usr/bin/env python3
"""
Chowlab command line

Reconstructs linear threshold functions from (approximate) Chow parameters,
builds low integer-weight approximators, checks them against the exact LP
oracle and runs the structural probes.

Usage:
    python chowlab.py chow --target f.json [--mode exact|estimated] [--out chow.json]
    python chowlab.py reconstruct --alpha chow.json --eps 0.1 [--mode exact] --out lbf.json --trace trace.json
    python chowlab.py exact --alpha chow.json --out table.json
    python chowlab.py weights --table table.json --out ltf.json
    python chowlab.py approx --target ltf.json --eps 0.1 [--threshold-search] [--out ltf.json]
    python chowlab.py learn-rfa --target ltf.json --n 11 --acc 0.0018 --delta 0.1 --seed 7
    python chowlab.py learn-agnostic --target ltf.json --noise 0.05 --eps 0.1 --acc 0.1
    python chowlab.py probe --pairs 50 --n 10 --flip-rate 0.05 --seed 1 --out probe.csv
    python chowlab.py random-ltf --n 8 --model integer --W 12 --seed 3 --out ltf.json
    python chowlab.py experiments --out experiments.xlsx

The JSON run report goes to stdout; progress goes to stderr.
Exit codes: 0 success, 2 bad parameters or input, 3 algorithmic failure
(step cap reached, LP infeasible, non-integral solution).

Environment:
    CHOWLAB_CAP, CHOWLAB_LP_CAP, CHOWLAB_BATCH_SIZE, CHOWLAB_WORKERS,
    CHOWLAB_LOG_LEVEL (see settings.py and .env.example)
"""

import argparse
import logging
import math
import sys
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

import settings
from chow import ChowVector, EstimatorConfig, chow_distance, chow_estimate, chow_exact, dist_l1
from exact_lp import recover_weights, solve_exact_chow
from func_core import (
    LTF,
    STREAM_INSTANCES,
    WEIGHT_MODELS,
    AlgorithmError,
    ParameterError,
    TruthTable,
    derive_seed,
    function_source_from_dict,
    lbf_to_ltf,
    random_ltf,
    tabulate,
)
from learners import ExampleOracle, RFAOracle, default_accuracy, learn_agnostic, learn_rfa
from reconstruct import CHOW_MODES, ReconstructParams, best_threshold_ltf, chow_reconstruct
from report_helpers import RunReport, banner, fail, ok, read_json, warn, write_json, write_rows, write_xlsx
from structural import probe_pairs

logger = logging.getLogger("chowlab")

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_ALGORITHM = 3


# ============================================================================
# LOADING
# ============================================================================

def load_ltf(path: str) -> LTF:
    return LTF.from_dict(read_json(path))


def load_chow(path: str) -> ChowVector:
    return ChowVector.from_dict(read_json(path))


def load_table(path: str) -> TruthTable:
    return TruthTable.from_dict(read_json(path))


def _within_cap(n: int) -> bool:
    return n <= settings.enumeration_cap()


# ============================================================================
# PIPELINES
# ============================================================================

def approx_weights(f: LTF, eps: float, mode: str = "exact", seed: int = 0, delta: float = 0.1,
                   threshold_search: bool = False, max_iters: Optional[int] = None) -> Tuple[LTF, RunReport]:
    """
    chi_f (exact or estimated), then ChowReconstruct, then the integer-weight
    LTF sign(v0 + sum v_i x_i). Distances are filled in when n <= cap.
    """
    params = ReconstructParams(eps=eps, delta=delta, chow_mode=mode, max_iters=max_iters, seed=seed)
    n = f.n
    report = RunReport(command="approx", seed=seed,
                       params={"n": n, "eps": eps, "delta": delta, "mode": mode,
                               "threshold_search": threshold_search, "max_iters": max_iters})

    with report.phase("chow"):
        if mode == "exact":
            alpha = chow_exact(f)
        else:
            cfg = EstimatorConfig(t=eps / math.sqrt(n + 1), delta=delta / 2.0, seed=seed)
            alpha = chow_estimate(f, n, cfg)

    with report.phase("reconstruct"):
        g, trace = chow_reconstruct(alpha, params, target=f if mode == "exact" else None)
        trace.raise_for_status()

    with report.phase("convert"):
        f_star, degenerate = lbf_to_ltf(g)
        shift = 0
        if threshold_search:
            if not _within_cap(n):
                raise ParameterError(f"--threshold-search needs n <= {settings.enumeration_cap()}")
            choice = best_threshold_ltf(g, alpha)
            f_star, shift = choice.ltf, choice.shift

    v_sq = sum(int(c) * int(c) for c in g.v)
    report.metrics = {
        "iterations": trace.iterations,
        "stop_reason": trace.stop_reason,
        "kappa": g.kappa,
        "v": [int(c) for c in g.v],
        "v_norm_sq": v_sq,
        "v_norm": math.sqrt(v_sq),
        "degenerate": degenerate,
        "threshold_shift": shift,
        "dchow_final": None,
        "dist_final": None,
    }
    if _within_cap(n):
        with report.phase("evaluate"):
            chi_f = chow_exact(f)
            report.metrics["dchow_final"] = chow_distance(chi_f, chow_exact(g))
            report.metrics["dist_final"] = dist_l1(tabulate(f), tabulate(f_star))
    return f_star, report


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_chow(args) -> Tuple[RunReport, int]:
    source = function_source_from_dict(read_json(args.target))
    report = RunReport(command="chow", seed=args.seed,
                       params={"mode": args.mode, "t": args.t, "delta": args.delta, "samples": args.samples})
    with report.phase("chow"):
        if args.mode == "exact":
            alpha = chow_exact(source)
        else:
            cfg = EstimatorConfig(t=args.t, delta=args.delta, seed=args.seed, samples=args.samples)
            alpha = chow_estimate(source, source.n, cfg)
            report.metrics["samples"] = cfg.sample_count(source.n + 1)
    report.metrics.update({"n": alpha.n, "values": alpha.values, "norm": alpha.norm()})
    if args.out:
        write_json(args.out, alpha.to_dict())
        report.outputs["chow"] = args.out
    ok(f"Chow vector of n={alpha.n} function computed ({args.mode})")
    return report, EXIT_OK


def cmd_reconstruct(args) -> Tuple[RunReport, int]:
    alpha = load_chow(args.alpha)
    target = function_source_from_dict(read_json(args.target)) if args.target else None
    params = ReconstructParams(eps=args.eps, delta=args.delta, chow_mode=args.mode,
                               max_iters=args.max_iters, seed=args.seed)
    report = RunReport(command="reconstruct", seed=args.seed,
                       params={"n": alpha.n, "eps": args.eps, "delta": args.delta, "mode": args.mode,
                               "max_iters": params.iteration_cap})
    with report.phase("reconstruct"):
        g, trace = chow_reconstruct(alpha, params, target=target)

    report.metrics = {
        "iterations": trace.iterations,
        "stop_reason": trace.stop_reason,
        "rho_final": trace.records[-1].rho,
        "kappa": trace.kappa,
        "v_norm": float(np.linalg.norm(g.v.astype(float))),
    }
    if args.mode == "exact":
        report.metrics["dchow_final"] = chow_distance(alpha, chow_exact(g))
    if args.out:
        write_json(args.out, g.to_dict())
        report.outputs["lbf"] = args.out
    if args.trace:
        write_json(args.trace, trace.to_dict())
        report.outputs["trace"] = args.trace

    if not trace.ok:
        fail(f"Step cap {params.iteration_cap} reached with rho={trace.records[-1].rho:.6g}")
        return report, EXIT_ALGORITHM
    ok(f"Stopped after {trace.iterations} step(s) with rho={trace.records[-1].rho:.6g}")
    return report, EXIT_OK


def cmd_exact(args) -> Tuple[RunReport, int]:
    alpha = load_chow(args.alpha)
    report = RunReport(command="exact", params={"n": alpha.n})
    with report.phase("lp"):
        table = solve_exact_chow(alpha)
    report.metrics = {"n": table.n, "positives": int(np.count_nonzero(table.values > 0))}
    if args.out:
        write_json(args.out, table.to_dict())
        report.outputs["table"] = args.out
    ok(f"Recovered the unique table for n={table.n}")
    return report, EXIT_OK


def cmd_weights(args) -> Tuple[RunReport, int]:
    table = load_table(args.table)
    report = RunReport(command="weights", params={"n": table.n})
    with report.phase("lp"):
        ltf = recover_weights(table)
    report.metrics = {"weights": ltf.weights, "theta": ltf.threshold}
    if args.out:
        write_json(args.out, ltf.to_dict())
        report.outputs["ltf"] = args.out
    ok("Table is an LTF; separating weights verified by re-tabulation")
    return report, EXIT_OK


def cmd_approx(args) -> Tuple[RunReport, int]:
    f = load_ltf(args.target)
    f_star, report = approx_weights(f, args.eps, mode=args.mode, seed=args.seed, delta=args.delta,
                                    threshold_search=args.threshold_search, max_iters=args.max_iters)
    report.metrics["ltf"] = f_star.to_dict()
    if args.out:
        write_json(args.out, f_star.to_dict())
        report.outputs["ltf"] = args.out
    ok(f"Integer-weight approximator with ||v||^2 = {report.metrics['v_norm_sq']}")
    return report, EXIT_OK


def _accuracy(args) -> float:
    if args.acc is not None:
        return args.acc
    if args.eps is None:
        raise ParameterError("give --acc, or --eps (optionally with --weight-bound)")
    return default_accuracy(args.eps, args.weight_bound)


def _learn_report(command: str, args, result, f: LTF) -> RunReport:
    report = RunReport(command=command, seed=args.seed)
    report.metrics = result.to_dict()
    if _within_cap(f.n):
        report.metrics["dist_final"] = dist_l1(tabulate(f), tabulate(result.hypothesis))
    if args.out:
        write_json(args.out, result.to_dict())
        report.outputs["result"] = args.out
    return report


def cmd_learn_rfa(args) -> Tuple[RunReport, int]:
    f = load_ltf(args.target)
    n = args.n if args.n is not None else f.n
    accuracy = _accuracy(args)
    oracle = RFAOracle(f, args.seed)
    banner(f"1-RFA LEARNER: n={n}, accuracy={accuracy:.6g}")
    result = learn_rfa(oracle, n, accuracy, delta=args.delta, seed=args.seed, max_iters=args.max_iters)
    report = _learn_report("learn-rfa", args, result, f)
    report.params = {"n": n, "accuracy": accuracy, "delta": args.delta}
    ok(f"{result.samples_consumed} single-coordinate queries, {result.trace.iterations} step(s)")
    return report, EXIT_OK


def cmd_learn_agnostic(args) -> Tuple[RunReport, int]:
    f = load_ltf(args.target)
    n = args.n if args.n is not None else f.n
    accuracy = _accuracy(args)
    oracle = ExampleOracle(f, args.seed, eta=args.noise)
    banner(f"AGNOSTIC LEARNER: n={n}, eta={args.noise}, accuracy={accuracy:.6g}")
    eps = args.eps if args.eps is not None else accuracy
    result = learn_agnostic(oracle, n, eps=eps,
                            delta=args.delta, accuracy=accuracy, seed=args.seed, max_iters=args.max_iters)
    report = _learn_report("learn-agnostic", args, result, f)
    report.params = {"n": n, "noise": args.noise, "eps": eps, "accuracy": accuracy, "delta": args.delta}
    ok(f"{result.samples_consumed} examples, {result.trace.iterations} step(s)")
    return report, EXIT_OK


def cmd_probe(args) -> Tuple[RunReport, int]:
    report = RunReport(command="probe", seed=args.seed,
                       params={"pairs": args.pairs, "n": args.n, "flip_rate": args.flip_rate})
    with report.phase("probe"):
        rows = probe_pairs(args.pairs, args.n, args.flip_rate, args.seed)
    violations = sum(1 for r in rows if not r.envelope_ok)
    report.metrics = {
        "pairs": len(rows),
        "envelope_violations": violations,
        "max_dchow": max(r.dchow for r in rows),
        "max_dist": max(r.dist for r in rows),
    }
    if args.out:
        write_rows(args.out, [r.to_dict() for r in rows], sheet="probe")
        report.outputs["rows"] = args.out
    if violations:
        warn(f"{violations} pair(s) outside dchow <= 2 sqrt(dist)")
    else:
        ok(f"All {len(rows)} pairs inside dchow <= 2 sqrt(dist)")
    return report, EXIT_OK


def cmd_random_ltf(args) -> Tuple[RunReport, int]:
    f = random_ltf(args.n, args.model, args.seed, W=args.W, signed=args.signed)
    report = RunReport(command="random-ltf", seed=args.seed,
                       params={"n": args.n, "model": args.model, "W": args.W, "signed": args.signed})
    report.metrics = f.to_dict()
    if args.out:
        write_json(args.out, f.to_dict())
        report.outputs["ltf"] = args.out
    return report, EXIT_OK


# ============================================================================
# EXPERIMENTS
# ============================================================================

def run_reconstruction_battery(runs: int, n_min: int, n_max: int, eps: float, seed: int) -> List[Dict[str, Any]]:
    rows = []
    for r in range(runs):
        n = n_min + r % (n_max - n_min + 1)
        f = random_ltf(n, "gaussian", derive_seed(seed, STREAM_INSTANCES, r))
        alpha = chow_exact(f)
        g, trace = chow_reconstruct(alpha, ReconstructParams(eps=eps), target=f)
        potentials = trace.potential_history or []
        drops = np.diff(potentials)
        rows.append({
            "run": r,
            "n": n,
            "iterations": trace.iterations,
            "stop_reason": trace.stop_reason,
            "rho_final": trace.records[-1].rho,
            "dchow": chow_distance(alpha, chow_exact(g)),
            "v_norm": float(np.linalg.norm(g.v.astype(float))),
            "potential_start": potentials[0] if potentials else None,
            "potential_min": min(potentials) if potentials else None,
            "max_potential_drop": float(drops.max()) if drops.size else None,
            "within_6eps": chow_distance(alpha, chow_exact(g)) <= 6 * eps + 1e-9,
        })
    return rows


def run_lp_battery(per_n: int, n_min: int, n_max: int, seed: int) -> List[Dict[str, Any]]:
    rows = []
    for n in range(n_min, n_max + 1):
        for r in range(per_n):
            f = random_ltf(n, "gaussian", derive_seed(seed, STREAM_INSTANCES, n, r))
            table = tabulate(f)
            row = {"n": n, "run": r, "table_match": False, "weights_match": False, "error": ""}
            try:
                row["table_match"] = bool(np.array_equal(solve_exact_chow(chow_exact(f)).values, table.values))
                row["weights_match"] = bool(np.array_equal(tabulate(recover_weights(table)).values, table.values))
            except AlgorithmError as e:
                row["error"] = str(e)[:100]
            rows.append(row)
    return rows


def cmd_experiments(args) -> Tuple[RunReport, int]:
    report = RunReport(command="experiments", seed=args.seed,
                       params={"runs": args.runs, "n_min": args.n_min, "n_max": args.n_max, "eps": args.eps,
                               "lp_max": args.lp_max, "pairs": args.pairs, "probe_n": args.probe_n})
    if args.n_min > args.n_max:
        raise ParameterError("--n-min must not exceed --n-max")

    banner("RECONSTRUCTION BATTERY")
    with report.phase("reconstruction"):
        recon = run_reconstruction_battery(args.runs, args.n_min, args.n_max, args.eps, args.seed)
    ok(f"{sum(r['within_6eps'] for r in recon)}/{len(recon)} runs within 6 eps")

    banner("EXACT LP BATTERY")
    with report.phase("exact_lp"):
        lp = run_lp_battery(args.lp_runs, min(4, args.lp_max), args.lp_max, args.seed)
    ok(f"{sum(r['table_match'] and r['weights_match'] for r in lp)}/{len(lp)} instances recovered")

    banner("CHOW DISTANCE ENVELOPE")
    envelope = []
    with report.phase("envelope"):
        for b, rate in enumerate((0.01, 0.05, 0.2)):
            rows = probe_pairs(args.pairs, args.probe_n, rate, derive_seed(args.seed, STREAM_INSTANCES, 1000 + b))
            envelope.extend(r.to_dict() for r in rows)
    ok(f"{sum(r['envelope_ok'] for r in envelope)}/{len(envelope)} pairs inside the envelope")

    report.metrics = {
        "reconstruction_runs": len(recon),
        "reconstruction_within_6eps": sum(r["within_6eps"] for r in recon),
        "lp_instances": len(lp),
        "lp_recovered": sum(r["table_match"] and r["weights_match"] for r in lp),
        "envelope_pairs": len(envelope),
        "envelope_ok": sum(r["envelope_ok"] for r in envelope),
    }
    write_xlsx(args.out, {"reconstruction": recon, "exact_lp": lp, "envelope": envelope})
    report.outputs["workbook"] = args.out
    return report, EXIT_OK


# ============================================================================
# PARSER
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chowlab", description="Chow parameters and low-weight LTFs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chow", help="Chow vector of a function (LTF, LBF or table JSON)")
    p.add_argument("--target", required=True)
    p.add_argument("--mode", choices=CHOW_MODES, default="exact")
    p.add_argument("--t", type=float, default=0.01, help="per-coefficient accuracy (estimated mode)")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=None, help="explicit sample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("reconstruct", help="run ChowReconstruct on a Chow vector")
    p.add_argument("--alpha", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--mode", choices=CHOW_MODES, default="exact")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--target", help="function alpha approximates, to record the potential")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--trace")

    p = sub.add_parser("exact", help="exact LP: the unique table with this Chow vector")
    p.add_argument("--alpha", required=True)
    p.add_argument("--out")

    p = sub.add_parser("weights", help="separating weights of an LTF table")
    p.add_argument("--table", required=True)
    p.add_argument("--out")

    p = sub.add_parser("approx", help="low integer-weight approximator of an LTF")
    p.add_argument("--target", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--mode", choices=CHOW_MODES, default="exact")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--threshold-search", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    for name, text in (("learn-rfa", "learn from single-coordinate queries"),
                       ("learn-agnostic", "learn from noisy uniform examples")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--target", required=True)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--acc", type=float, default=None, help="Chow accuracy")
        p.add_argument("--eps", type=float, default=None)
        p.add_argument("--weight-bound", type=int, default=None, help="W, for the default accuracy eps/(12W)")
        p.add_argument("--delta", type=float, default=0.1)
        p.add_argument("--max-iters", type=int, default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        if name == "learn-agnostic":
            p.add_argument("--noise", type=float, default=0.0)

    p = sub.add_parser("probe", help="(dchow, dist) pairs for plotting")
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--flip-rate", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV, or .xlsx")

    p = sub.add_parser("random-ltf", help="seeded random LTF instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--model", choices=WEIGHT_MODELS, default="gaussian")
    p.add_argument("--W", type=int, default=None)
    p.add_argument("--signed", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("experiments", help="run the check batteries into an .xlsx workbook")
    p.add_argument("--out", required=True)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--n-min", type=int, default=4)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--lp-max", type=int, default=8)
    p.add_argument("--lp-runs", type=int, default=5)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--probe-n", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    return parser


COMMANDS = {
    "chow": cmd_chow,
    "reconstruct": cmd_reconstruct,
    "exact": cmd_exact,
    "weights": cmd_weights,
    "approx": cmd_approx,
    "learn-rfa": cmd_learn_rfa,
    "learn-agnostic": cmd_learn_agnostic,
    "probe": cmd_probe,
    "random-ltf": cmd_random_ltf,
    "experiments": cmd_experiments,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_PARAMETER
    settings.configure_logging()
    logger.info("%s: started", args.command)

    try:
        report, code = COMMANDS[args.command](args)
    except ParameterError as e:
        fail(f"Error: {e}")
        return EXIT_PARAMETER
    except AlgorithmError as e:
        fail(f"Error: {e}")
        return EXIT_ALGORITHM
    except OSError as e:
        fail(f"Error writing output: {e}")
        return EXIT_PARAMETER

    logger.info("%s: finished with exit code %d", args.command, code)
    print(report.to_json())
    return code


if __name__ == "__main__":
    sys.exit(main())
