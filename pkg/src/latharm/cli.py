"""Command-line front end: experiment orchestration and report emission.

Subcommands: solve, kernel-check, three-cubes, extend, counterexample,
nodes-check.  Reports go to --out (or stdout) as canonical JSON or flat CSV;
identical configuration and seed produce byte-identical reports.  Progress
and timing go to stderr only.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 validation
failure (a checked bound was violated), 4 resource cap hit.

Defaults < config file (--config PATH or $LATHARM_CONFIG) < explicit flags.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import interp, kernel, oracle, polyext, threecubes
from .lattice import Box, LatticeSpec, face_interior_points, residual_field, sup_norm
from .report import Report, to_csv_bytes, to_json_bytes

CONFIG_ENV_VAR = "LATHARM_CONFIG"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VALIDATION = 3
EXIT_RESOURCE = 4


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def build_parser() -> _Parser:
    p = _Parser(prog="latharm", description=__doc__, add_help=True)
    p.add_argument("--config", default=None, help="JSON config file; flags override its entries")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        sp.add_argument("--out", default=None, help="report path (default: stdout)")
        sp.add_argument("--seed", type=int, default=None)
        # accepted both before and after the subcommand
        sp.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON config file; flags override its entries")

    sp = sub.add_parser("solve", help="cross-check the kernel solver against the direct solver")
    common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--law", choices=("uniform", "lowfreq"), default=None)
    sp.add_argument("--boundary-file", default=None, help="JSON boundary data file")
    sp.add_argument("--tol", type=float, default=None)

    sp = sub.add_parser("kernel-check", help="kernel delta/harmonicity/rate-bound checks")
    common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--holomorphic", action="store_true", default=None,
                    help="also sweep the complex-strip sup over mesh counts")

    sp = sub.add_parser("three-cubes", help="calibrate and validate the nested-cube estimates")
    common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--r", type=float, default=None)
    sp.add_argument("--R", type=float, default=None)
    sp.add_argument("--samples", type=int, default=None)
    sp.add_argument("--calibration-samples", type=int, default=None)
    sp.add_argument("--margin", type=float, default=None)
    sp.add_argument("--A1", type=float, default=None, help="skip calibration, use this A1")
    sp.add_argument("--calibrate", action="store_true", default=None,
                    help="force calibration even if the config provides A1")
    sp.add_argument("--law", choices=("uniform", "lowfreq"), default=None)
    sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("extend", help="extend a harmonic cube to a harmonic polynomial")
    common(sp)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--cube-file", default=None, help="JSON cube data file")
    sp.add_argument("--side", default=None,
                    help="constant padding side value (default: polynomial extrapolation)")
    sp.add_argument("--bit-budget", type=int, default=None)

    sp = sub.add_parser("counterexample", help="alternating-data growth counterexample")
    common(sp)
    sp.add_argument("--N", type=int, default=None)
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--K-max", type=int, default=None)
    sp.add_argument("--r", type=float, default=None, help="inner radius for the sandwich row")
    sp.add_argument("--R", type=float, default=None, help="middle radius for the sandwich row")
    sp.add_argument("--A", type=float, default=None, help="calibrated constant for the sandwich row")

    sp = sub.add_parser("nodes-check", help="classical and mesh-constrained node certification")
    common(sp)
    sp.add_argument("--m-max", type=int, default=None)
    sp.add_argument("--classical-m-max", type=int, default=None)
    sp.add_argument("--gap-m-max", type=int, default=None)
    return p


_DEFAULTS: dict[str, dict[str, Any]] = {
    "solve": {"n": 2, "N": 8, "law": "uniform", "seed": 0, "tol": 1e-9,
              "boundary_file": None, "format": "json", "out": None},
    "kernel-check": {"n": 2, "N": 8, "tol": 1e-10, "holomorphic": False,
                     "seed": 0, "format": "json", "out": None},
    "three-cubes": {"n": 2, "N": 512, "r": 2 / 512, "R": 3 / 512, "samples": 100,
                    "calibration_samples": 20, "margin": 2.0, "A1": None,
                    "calibrate": False, "law": "uniform", "workers": 1, "seed": 0,
                    "format": "json", "out": None},
    "extend": {"n": 2, "N": 2, "cube_file": None, "side": None,
               "bit_budget": polyext.DEFAULT_BIT_BUDGET, "seed": 0,
               "format": "json", "out": None},
    "counterexample": {"N": 64, "M": 2, "K_max": None, "r": None, "R": None,
                       "A": None, "seed": 0, "format": "json", "out": None},
    "nodes-check": {"m_max": 8, "classical_m_max": 30, "gap_m_max": 100,
                    "seed": 0, "format": "json", "out": None},
}


def _load_config_file(path: str | None) -> dict[str, Any]:
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise DataError(f"config file {path} must hold a JSON object")
    return data


def _effective_config(args: argparse.Namespace) -> dict[str, Any]:
    cmd = args.command
    merged = dict(_DEFAULTS[cmd])
    file_cfg = _load_config_file(args.config)
    for key, val in file_cfg.items():
        key = key.replace("-", "_")
        if key in merged:
            merged[key] = val
    for key in merged:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    return merged


def _emit(rep: Report, cfg: dict[str, Any]) -> None:
    payload = to_json_bytes(rep) if cfg["format"] == "json" else to_csv_bytes(rep)
    out = cfg.get("out")
    if out:
        with open(out, "wb") as fh:
            fh.write(payload)
    else:
        sys.stdout.buffer.write(payload)


def _config_echo(cfg: dict[str, Any]) -> dict[str, Any]:
    # out/format/workers describe the run's plumbing, not the experiment;
    # reports must be byte-identical across worker counts
    echo = {}
    for k, v in cfg.items():
        if k in ("out", "format", "workers"):
            continue
        echo[k] = v
    return echo


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _load_boundary_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        values = data["values"]
        out = {}
        for key, val in values.items():
            pt = tuple(int(c) for c in key.split(","))
            out[pt] = float(val)
    except (OSError, json.JSONDecodeError, KeyError, ValueError, AttributeError) as exc:
        raise DataError(f"malformed boundary file {path}: {exc}") from exc
    return out


def cmd_solve(cfg: dict[str, Any]) -> tuple[Report, int]:
    spec = LatticeSpec(cfg["n"], cfg["N"])
    cube = spec.unit_cube()
    if cfg["boundary_file"]:
        g = _load_boundary_file(cfg["boundary_file"])
    else:
        rng = np.random.default_rng((cfg["seed"], 0))
        g = threecubes.sample_boundary(spec, cfg["law"], rng)
    try:
        rep = oracle.solve_dirichlet(cube, g)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    table = kernel.kernel_table(spec)
    u_kernel = kernel.batch_solve(table, g, cube)
    scale = max(1.0, sup_norm(rep.solution))
    discrepancy = float(np.max(np.abs(u_kernel.values - rep.solution.values))) / scale
    kernel_res = float(np.max(np.abs(residual_field(u_kernel))))
    row = {
        "discrepancy_rel": discrepancy,
        "oracle_residual": rep.max_residual,
        "kernel_residual": kernel_res,
        "unknowns": rep.solver_stats["unknowns"],
        "method": rep.solver_stats["method"],
    }
    ok = discrepancy <= cfg["tol"]
    report = Report("solve", _config_echo(cfg), [row], {"within_tol": ok})
    return report, EXIT_OK if ok else EXIT_VALIDATION


def cmd_kernel_check(cfg: dict[str, Any]) -> tuple[Report, int]:
    spec = LatticeSpec(cfg["n"], cfg["N"])
    table = kernel.kernel_table(spec)
    cube = spec.unit_cube()
    tol = cfg["tol"]
    fis = face_interior_points(cube)
    worst_delta = 0.0
    worst_res = 0.0
    for y in fis:
        col = kernel.kernel_field(table, y)
        scale = max(1.0, sup_norm(col))
        res = float(np.max(np.abs(residual_field(col)))) / scale
        worst_res = max(worst_res, res)
        for z in fis:
            expect = 1.0 if z == y else 0.0
            worst_delta = max(worst_delta, abs(col.at(z) - expect))
    rate_violations = 0
    for K in np.ndindex(table.rates.shape):
        idx = tuple(int(k) + 1 for k in K)
        if table.rates[K] < kernel.rate_lower_bound(spec, idx):
            rate_violations += 1
    rows = [{
        "worst_delta_error": worst_delta,
        "worst_residual_rel": worst_res,
        "rate_bound_violations": rate_violations,
        "boundary_points": len(fis),
    }]
    summary: dict[str, Any] = {
        "delta_ok": worst_delta <= tol,
        "harmonic_ok": worst_res <= tol,
        "rates_ok": rate_violations == 0,
    }
    if cfg["holomorphic"]:
        Ns = tuple(sorted({8, 16, 32, 64, min(128, 8 * cfg["N"])}))
        C, slope = kernel.fit_bound_constant(cfg["n"], Ns)
        summary["holomorphic_C"] = C
        summary["holomorphic_slope"] = slope
        summary["holomorphic_ok"] = -1.3 <= slope <= -0.7
    ok = all(v for k, v in summary.items() if k.endswith("_ok"))
    report = Report("kernel-check", _config_echo(cfg), rows, summary)
    return report, EXIT_OK if ok else EXIT_VALIDATION


def cmd_three_cubes(cfg: dict[str, Any]) -> tuple[Report, int]:
    a1 = None if cfg["calibrate"] else cfg["A1"]
    exp_cfg = threecubes.ExperimentConfig(
        n=cfg["n"], N=cfg["N"], r=cfg["r"], R=cfg["R"], samples=cfg["samples"],
        seed=cfg["seed"], law=cfg["law"], calibration_samples=cfg["calibration_samples"],
        margin=cfg["margin"], A1=a1,
    )
    try:
        result = threecubes.run_experiment(exp_cfg, workers=cfg["workers"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = []
    for rec in result.records:
        rows.append({
            "index": rec.index,
            "calibration": rec.calibration,
            "eps": rec.eps,
            "mid": rec.mid,
            "total": rec.total,
            "m0": rec.m0,
            "m_cap": rec.m_cap,
            "implied_A_order": rec.implied_A_order,
            "implied_A_theorem": rec.implied_A_theorem,
            "theorem_bound": rec.theorem_bound,
            "satisfied": rec.satisfied,
        })
    c = result.constants
    summary = {
        "grid_r": result.grid_r,
        "grid_R": result.grid_R,
        "B1": c.B1, "q1": c.q1, "B": c.B, "q": c.q,
        "alpha": c.alpha, "delta": c.delta, "A1": c.A1, "A": c.A,
        "all_satisfied": result.all_satisfied,
    }
    report = Report("three-cubes", _config_echo(cfg), rows, summary)
    return report, EXIT_OK if result.all_satisfied else EXIT_VALIDATION


def _load_cube_file(path: str) -> tuple[Box, dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        n, N = int(data["n"]), int(data["N"])
        box = Box((-N,) * n, (N,) * n)
        vals = {}
        for key, val in data["values"].items():
            pt = tuple(int(c) for c in key.split(","))
            # strings carry exact "num/den"; JSON numbers are taken exactly
            vals[pt] = Fraction(val)
        return box, vals
    except (OSError, json.JSONDecodeError, KeyError, ValueError, AttributeError, TypeError) as exc:
        raise DataError(f"malformed cube file {path}: {exc}") from exc


def _random_harmonic_cube(n: int, N: int, seed: int) -> tuple[Box, dict]:
    from .lattice import enumerate_boundary

    box = Box((-N,) * n, (N,) * n)
    rng = np.random.default_rng((seed, 1))
    boundary = {pt: Fraction(int(rng.integers(-9, 10))) for pt in enumerate_boundary(box, "all")}
    return box, polyext.exact_harmonic_cube(box, boundary)


def cmd_extend(cfg: dict[str, Any]) -> tuple[Report, int]:
    if cfg["cube_file"]:
        box, vals = _load_cube_file(cfg["cube_file"])
    else:
        box, vals = _random_harmonic_cube(cfg["n"], cfg["N"], cfg["seed"])
    side = cfg["side"]
    if side is not None and not isinstance(side, (int, Fraction)):
        side = Fraction(str(side))
    try:
        result = polyext.extend_from_cube(vals, box, side=side, bit_budget=cfg["bit_budget"])
    except polyext.NonHarmonicInputError as exc:
        raise DataError(str(exc)) from exc
    n = box.ndim
    N = box.hi[0]
    row = {
        "degree": result.degree,
        "degree_bound": 6 * N * (n - 1) + 1,
        "match_verified": result.match_verified,
        "symbolic_stencil_zero": result.harmonicity_sample["symbolic_stencil_zero"],
        "max_coeff_bits": result.max_coeff_bits,
        "total_bits": result.total_bits,
        "terms": len(result.P.terms),
    }
    summary = {
        "polynomial": result.P.to_json_map(),
        "nvars": result.P.nvars,
        "verified": result.match_verified and result.degree <= 6 * N * (n - 1) + 1,
    }
    report = Report("extend", _config_echo(cfg), [row], summary)
    return report, EXIT_OK if summary["verified"] else EXIT_VALIDATION


def cmd_counterexample(cfg: dict[str, Any]) -> tuple[Report, int]:
    N, M = cfg["N"], cfg["M"]
    if N is None or M is None or not N > M >= 1:
        raise UsageError(f"need N > M >= 1, got N={N}, M={M}")
    K_max = cfg["K_max"] if cfg["K_max"] is not None else N
    try:
        log_sups = oracle.counterexample_log_sups(N, M)
        growth = oracle.growth_from_log_sups(log_sups, M, K_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rows = [{"K": k, "log_sup": s} for k, s in growth.log_layer_maxima]
    summary: dict[str, Any] = {
        "b": growth.b,
        "fit_residual": growth.fit_residual,
        "b_gt_1": growth.b > 1.0,
    }
    if cfg["r"] is not None and cfg["R"] is not None:
        k_r = int(round(cfg["r"] * N))
        k_R = int(round(cfg["R"] * N))
        m_cap = int(math.floor(math.sqrt(max(k_r, 0))))
        c = threecubes.estimate_constants(cfg["r"], cfg["R"], 2)
        A = cfg["A"] if cfg["A"] is not None else c.A
        log_ratio = log_sups[max(0, min(k_R, N))] - log_sups[N]
        log_bound = math.log(A) + m_cap * math.log(c.q) if m_cap >= 0 else math.log(A)
        summary["log_ratio_QR_Q1"] = log_ratio
        summary["log_bound_Aq_mcap"] = log_bound
        summary["m_cap"] = m_cap
        summary["sandwich_holds"] = log_ratio <= log_bound
    ok = summary["b_gt_1"] and summary.get("sandwich_holds", True)
    report = Report("counterexample", _config_echo(cfg), rows, summary)
    return report, EXIT_OK if ok else EXIT_VALIDATION


def cmd_nodes_check(cfg: dict[str, Any]) -> tuple[Report, int]:
    rows = []
    hard_fail = 0
    classical_hits = 0
    total = 0
    for m in range(1, cfg["m_max"] + 1):
        for M in (m * m + 1, 2 * m * m, 10 * m * m):
            ns = interp.discrete_nodes(m, M)
            total += 1
            classical_hits += 1 if ns.meets_classical() else 0
            hard_fail += 0 if ns.meets_relaxed() else 1
            rows.append({
                "m": m,
                "M": M,
                "achieved_bound": ns.achieved_bound,
                "classical_bound": ns.classical_bound(),
                "meets_classical": ns.meets_classical(),
                "meets_relaxed": ns.meets_relaxed(),
            })
    classical_ok = True
    for m in range(1, cfg["classical_m_max"] + 1):
        ns = interp.chebyshev_nodes(m)
        if ns.achieved_bound < m * 2.0 ** (1 - m) - 1e-12:
            classical_ok = False
    gaps_ok = True
    for m in range(2, cfg["gap_m_max"] + 1):
        nodes = interp.chebyshev_nodes(m).nodes
        if float(np.min(np.diff(nodes))) < m**-2:
            gaps_ok = False
    summary = {
        "classical_derivative_bound_ok": classical_ok,
        "classical_gap_bound_ok": gaps_ok,
        "discrete_sets": total,
        "fraction_meeting_classical": classical_hits / total if total else 1.0,
        "hard_failures": hard_fail,
    }
    ok = classical_ok and gaps_ok and hard_fail == 0
    report = Report("nodes-check", _config_echo(cfg), rows, summary)
    return report, EXIT_OK if ok else EXIT_VALIDATION


_COMMANDS = {
    "solve": cmd_solve,
    "kernel-check": cmd_kernel_check,
    "three-cubes": cmd_three_cubes,
    "extend": cmd_extend,
    "counterexample": cmd_counterexample,
    "nodes-check": cmd_nodes_check,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    started = time.monotonic()
    try:
        args = parser.parse_args(argv)
        cfg = _effective_config(args)
        try:
            report, code = _COMMANDS[args.command](cfg)
        except (UsageError, DataError):
            raise
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        _emit(report, cfg)
        print(f"latharm {args.command}: {time.monotonic() - started:.2f}s", file=sys.stderr)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except polyext.ResourceLimitError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
