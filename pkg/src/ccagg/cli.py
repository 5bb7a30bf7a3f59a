"""Command-line entry point: reproducible experiment pipelines.

Every randomized subcommand requires an explicit --seed and is pure given its
flags, so rerunning reproduces all artifacts byte-for-byte.  Each verify-*
subcommand writes CSV artifacts plus a verdict JSON {statistic, threshold,
pass, checks}; the process exits 0 iff every check passes, 1 on a failed
verdict, 2 on an operational error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import sys
from typing import Optional

from . import ensemble as ens
from . import latticed, stats, theory
from .errors import InvalidParams, SchemaMismatch
from .lattice1d import Config1D, run_full

# (p, L) used for the growth-exponent experiment, tuned so the largest
# clusters stay under L/4 at the final observation time and, for alpha < 0,
# well under the total particle count (mass exhaustion flattens growth)
GROWTH_DEFAULTS = {1.0: (0.5, 1024), 0.0: (0.5, 8192), -1.0: (0.1, 16384)}
GROWTH_TIMES = (256.0, 1024.0, 4096.0, 16384.0)


def _comma_floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _comma_ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _add_common(sp: argparse.ArgumentParser, *names: str) -> None:
    spec = {
        "alpha": dict(type=float, help="mobility exponent (rate = size**-alpha)"),
        "p": dict(type=float, help="site occupation probability in (0,1]"),
        "L": dict(type=int, help="torus circumference in sites"),
        "t-max": dict(type=float, help="simulation horizon (time units)"),
        "obs-times": dict(type=_comma_floats, metavar="T1,T2,...",
                          help="observation times (default: t-max only)"),
        "seed": dict(type=int, help="64-bit unsigned master seed (required)"),
        "replicas": dict(type=int, help="number of independent replicas"),
        "parallelism": dict(type=int, help="worker processes (default 1)"),
        "rate-cap": dict(type=float, metavar="M",
                         help="clamp clock rates at M (default: uncapped)"),
        "guard-fraction": dict(type=float, metavar="F",
                               help="contamination guard: abort a replica when "
                                    "max cluster size exceeds F*L (default 0.25)"),
        "out": dict(type=str, help="artifact directory (default ./out)"),
        "config": dict(type=str, metavar="FILE",
                       help="JSON config file; explicit flags win"),
        "from-csv": dict(type=str, metavar="FILE",
                         help="fit an existing t,y CSV instead of simulating"),
    }
    for name in names:
        sp.add_argument("--" + name, default=None, **spec[name])


def _merge_config_file(args: argparse.Namespace, defaults: dict) -> dict:
    """File values fill unset flags; built-in defaults fill the rest."""
    merged = {}
    file_vals = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as f:
            file_vals = json.load(f)
    for key, default in defaults.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
        elif key in file_vals:
            v = file_vals[key]
            merged[key] = tuple(v) if isinstance(v, list) else v
        else:
            merged[key] = default
    return merged


def _require_seed(merged: dict) -> int:
    if merged.get("seed") is None:
        raise InvalidParams("an explicit --seed is required (no wall-clock default)")
    return int(merged["seed"])


def _write_verdict(out_dir: str, command: str, statistic: float,
                   threshold: float, checks: list[dict], params: dict) -> bool:
    ok = all(c["pass"] for c in checks)
    payload = {
        "command": command,
        "params": params,
        "statistic": statistic,
        "threshold": threshold,
        "pass": ok,
        "checks": checks,
    }
    with open(os.path.join(out_dir, "verdict.json"), "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return ok


def _write_xy_csv(path: str, header: str, rows) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(repr(v) if isinstance(v, float) else str(v)
                             for v in row) + "\n")


# ---------------------------------------------------------------- simulate

def _cmd_simulate(args) -> int:
    merged = _merge_config_file(args, dict(
        alpha=None, p=None, L=None, t_max=None, obs_times=None, seed=None,
        guard_fraction=0.25, rate_cap=None, out="out",
        log_tagged_steps=bool(getattr(args, "log_tagged_steps", False))))
    for key in ("alpha", "p", "L", "t_max"):
        if merged[key] is None:
            raise InvalidParams(f"--{key.replace('_', '-')} is required")
    seed = _require_seed(merged)
    obs = merged["obs_times"] or (merged["t_max"],)
    cfg = Config1D(alpha=merged["alpha"], p=merged["p"], L=int(merged["L"]),
                   t_max=merged["t_max"], obs_times=obs, seed=seed,
                   guard_fraction=merged["guard_fraction"],
                   rate_cap=merged["rate_cap"],
                   log_tagged_steps=bool(merged["log_tagged_steps"]))
    series, log, _ = run_full(cfg)
    out_dir = merged["out"]
    os.makedirs(out_dir, exist_ok=True)
    rows = [(0, seed, t, series.c0_size[j], series.n_clusters[j],
             series.max_size[j], int(series.contaminated), int(series.saturated))
            for j, t in enumerate(series.times)]
    _write_xy_csv(os.path.join(out_dir, "series.csv"), ens.CSV_HEADER, rows)
    if log is not None:
        _write_xy_csv(
            os.path.join(out_dir, "tagged_steps.csv"),
            "step_index,time,size_before,size_after,kind",
            [(i, e.t, e.size_before, e.size_after, e.kind)
             for i, e in enumerate(log.entries)],
        )
    flags = [name for name, v in (("contaminated", series.contaminated),
                                  ("saturated", series.saturated),
                                  ("empty", series.empty)) if v]
    print(f"simulate: wrote {len(rows)} observations to {out_dir}/series.csv"
          + (f" ({', '.join(flags)})" if flags else ""))
    return 0


# ---------------------------------------------------------------- ensemble

def _cmd_ensemble(args) -> int:
    merged = _merge_config_file(args, dict(
        alpha=None, p=None, L=None, t_max=None, obs_times=None, seed=None,
        replicas=None, parallelism=1, guard_fraction=0.25, rate_cap=None,
        out="out"))
    for key in ("alpha", "p", "L", "t_max", "replicas"):
        if merged[key] is None:
            raise InvalidParams(f"--{key.replace('_', '-')} is required")
    seed = _require_seed(merged)
    obs = merged["obs_times"] or (merged["t_max"],)
    base = Config1D(alpha=merged["alpha"], p=merged["p"], L=int(merged["L"]),
                    t_max=merged["t_max"], obs_times=obs, seed=0,
                    guard_fraction=merged["guard_fraction"],
                    rate_cap=merged["rate_cap"])
    cfg = ens.EnsembleConfig(base=base, replicas=int(merged["replicas"]),
                             master_seed=seed,
                             parallelism=int(merged["parallelism"]))
    result = ens.run_ensemble(cfg)
    out_dir = merged["out"]
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "ensemble.csv")
    ens.write_csv(result, path, config=cfg)
    print(f"ensemble: {result.counts()} -> {path}")
    return 0


# ---------------------------------------------------------------- verify-limit-law

def _cmd_verify_limit_law(args) -> int:
    merged = _merge_config_file(args, dict(
        alpha=0.0, p=0.5, L=8192, t_max=4096.0, obs_times=None, seed=None,
        replicas=500, parallelism=1, guard_fraction=0.25, out="out",
        ks_threshold=0.08, mean_rtol=0.05, max_contaminated_fraction=0.01))
    if merged["alpha"] != 0.0:
        raise InvalidParams("the scaling-limit law holds for alpha = 0 only")
    seed = _require_seed(merged)
    t_final = float(merged["t_max"])
    obs = merged["obs_times"] or (t_final,)
    base = Config1D(alpha=0.0, p=merged["p"], L=int(merged["L"]),
                    t_max=t_final, obs_times=obs, seed=0,
                    guard_fraction=merged["guard_fraction"])
    cfg = ens.EnsembleConfig(base=base, replicas=int(merged["replicas"]),
                             master_seed=seed,
                             parallelism=int(merged["parallelism"]))
    result = ens.run_ensemble(cfg)
    out_dir = merged["out"]
    os.makedirs(out_dir, exist_ok=True)
    ens.write_csv(result, os.path.join(out_dir, "ensemble.csv"), config=cfg)

    t_obs = obs[-1]
    samples = [s.c0_size[-1] / math.sqrt(t_obs)
               for s in result.series if not s.empty]
    params = theory.LimitLawParams(p=merged["p"])
    ks = stats.ks_distance(stats.Ecdf.from_samples(samples),
                           lambda x: theory.limit_cdf(x, params))
    mean = statistics.fmean(samples)
    mean_expected = theory.limit_mean(params)
    contaminated_fraction = result.n_contaminated / len(result.series)

    checks = [
        {"name": "ks_distance", "statistic": ks,
         "threshold": merged["ks_threshold"],
         "pass": ks <= merged["ks_threshold"]},
        {"name": "contaminated_fraction", "statistic": contaminated_fraction,
         "threshold": merged["max_contaminated_fraction"],
         "pass": contaminated_fraction < merged["max_contaminated_fraction"]},
        {"name": "mean_relative_error",
         "statistic": abs(mean - mean_expected) / mean_expected,
         "threshold": merged["mean_rtol"],
         "pass": abs(mean - mean_expected) / mean_expected <= merged["mean_rtol"]},
    ]
    ok = _write_verdict(out_dir, "verify-limit-law", ks, merged["ks_threshold"],
                        checks, {"alpha": 0.0, "p": merged["p"],
                                 "L": int(merged["L"]), "t": t_obs,
                                 "replicas": int(merged["replicas"]),
                                 "seed": seed,
                                 "sample_mean": mean,
                                 "expected_mean": mean_expected})
    print(f"verify-limit-law: ks={ks:.4f} (<= {merged['ks_threshold']}), "
          f"mean={mean:.4f} vs {mean_expected:.4f}, "
          f"contaminated={contaminated_fraction:.3%} -> "
          f"{'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------- verify-exponent

def _cmd_verify_exponent(args) -> int:
    merged = _merge_config_file(args, dict(
        alpha=None, p=None, L=None, seed=None, replicas=200,
        parallelism=1, obs_times=None, out="out", slope_tol=0.07,
        from_csv=getattr(args, "from_csv", None)))
    if merged["alpha"] is None:
        raise InvalidParams("--alpha is required")
    alpha = float(merged["alpha"])
    expected = theory.growth_exponent(alpha)
    out_dir = merged["out"]
    os.makedirs(out_dir, exist_ok=True)

    if merged["from_csv"]:
        points = _read_xy_csv(merged["from_csv"])
    else:
        seed = _require_seed(merged)
        if merged["p"] is None or merged["L"] is None:
            if alpha not in GROWTH_DEFAULTS:
                raise InvalidParams(
                    f"no growth defaults for alpha={alpha}; pass --p and --L")
            dp, dL = GROWTH_DEFAULTS[alpha]
            p = merged["p"] if merged["p"] is not None else dp
            L = int(merged["L"]) if merged["L"] is not None else dL
        else:
            p, L = float(merged["p"]), int(merged["L"])
        ts = merged["obs_times"] or GROWTH_TIMES
        base = Config1D(alpha=alpha, p=p, L=L, t_max=ts[-1], obs_times=ts,
                        seed=0)
        cfg = ens.EnsembleConfig(base=base, replicas=int(merged["replicas"]),
                                 master_seed=seed,
                                 parallelism=int(merged["parallelism"]))
        result = ens.run_ensemble(cfg)
        ens.write_csv(result, os.path.join(out_dir, "ensemble.csv"), config=cfg)
        usable = [s for s in result.series if not s.empty]
        points = [(t, statistics.median(s.c0_size[j] for s in usable))
                  for j, t in enumerate(ts)]
        _write_xy_csv(os.path.join(out_dir, "growth.csv"), "t,y",
                      [(float(t), float(y)) for t, y in points])

    fit = stats.fit_power_law(points)
    err = abs(fit.slope - expected)
    checks = [{"name": "slope_error", "statistic": err,
               "threshold": merged["slope_tol"],
               "pass": err <= merged["slope_tol"]}]
    ok = _write_verdict(out_dir, "verify-exponent", fit.slope,
                        merged["slope_tol"], checks,
                        {"alpha": alpha, "expected_slope": expected,
                         "r2": fit.r2, "points": [[t, y] for t, y in points]})
    print(f"verify-exponent: alpha={alpha} slope={fit.slope:.4f} "
          f"expected={expected:.4f} (tol {merged['slope_tol']}) r2={fit.r2:.5f}"
          f" -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _read_xy_csv(path: str) -> list[tuple[float, float]]:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "t,y":
            raise SchemaMismatch(f"expected header 't,y', got {header!r}")
        return [(float(a), float(b)) for a, b in
                (line.strip().split(",") for line in f if line.strip())]


# ---------------------------------------------------------------- verify-timechange

def _cmd_verify_timechange(args) -> int:
    merged = _merge_config_file(args, dict(
        alpha=-1.0, p=0.5, L=4096, t_max=80.0, seed=None, replicas=100,
        guard_fraction=0.25, out="out", min_intervals=500,
        significance=0.01, pass_fraction=0.95))
    seed = _require_seed(merged)
    alpha = float(merged["alpha"])
    n_runs = int(merged["replicas"])
    min_n = int(merged["min_intervals"])
    crit = stats.ks_critical_value(min_n, float(merged["significance"]))
    rows = []
    n_pass = 0
    for i in range(n_runs):
        cfg = Config1D(alpha=alpha, p=merged["p"], L=int(merged["L"]),
                       t_max=merged["t_max"],
                       obs_times=(merged["t_max"],),
                       seed=ens.derive_replica_seed(seed, i),
                       guard_fraction=merged["guard_fraction"],
                       log_tagged_steps=True)
        _, log, _ = run_full(cfg)
        intervals = stats.time_change_intervals(log, alpha)
        if len(intervals) < min_n:
            raise InvalidParams(
                f"run {i} produced {len(intervals)} tagged steps < {min_n}; "
                f"raise --t-max")
        ks = stats.exp1_ks(intervals[:min_n])
        passed = ks <= crit
        n_pass += passed
        rows.append((i, len(intervals), float(ks), int(passed)))
    out_dir = merged["out"]
    os.makedirs(out_dir, exist_ok=True)
    _write_xy_csv(os.path.join(out_dir, "timechange.csv"),
                  "run,n_intervals,ks,passed", rows)
    need = math.ceil(float(merged["pass_fraction"]) * n_runs)
    checks = [{"name": "runs_passing_ks", "statistic": n_pass,
               "threshold": need, "pass": n_pass >= need}]
    ok = _write_verdict(out_dir, "verify-timechange", float(n_pass),
                        float(need), checks,
                        {"alpha": alpha, "p": merged["p"],
                         "L": int(merged["L"]), "runs": n_runs,
                         "intervals_per_run": min_n,
                         "ks_critical": crit, "seed": seed})
    print(f"verify-timechange: {n_pass}/{n_runs} runs under the "
          f"{merged['significance']:.0%} KS critical value {crit:.4f}"
          f" -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------- oracle-compare

def _cmd_oracle_compare(args) -> int:
    merged = _merge_config_file(args, dict(
        m=None, p=None, t=100.0, seed=None, engine_replicas=10000,
        oracle_replicas=100000, L=512, out="out", sigma=3.0))
    if merged["m"] is None or merged["p"] is None:
        raise InvalidParams("--m and --p are required")
    seed = _require_seed(merged)
    m = int(merged["m"])
    p = float(merged["p"])
    t = float(merged["t"])
    eng = stats.engine_connection_estimate(
        m, p, t, int(merged["engine_replicas"]), int(merged["L"]), seed)
    orc = stats.difference_walk_oracle(
        m, p, t, int(merged["oracle_replicas"]),
        ens.derive_replica_seed(seed, 1 << 20))
    diff = abs(eng.p_hat - orc.p_hat)
    bound = merged["sigma"] * math.hypot(eng.stderr, orc.stderr)
    checks = [{"name": "estimate_gap", "statistic": diff, "threshold": bound,
               "pass": diff <= bound}]
    out_dir = merged["out"]
    os.makedirs(out_dir, exist_ok=True)
    ok = _write_verdict(out_dir, "oracle-compare", diff, bound, checks,
                        {"m": m, "p": p, "t": t,
                         "engine": {"p_hat": eng.p_hat, "stderr": eng.stderr,
                                    "n": eng.n},
                         "oracle": {"p_hat": orc.p_hat, "stderr": orc.stderr,
                                    "n": orc.n},
                         "seed": seed})
    print(f"oracle-compare: m={m} p={p} engine={eng.p_hat:.4f} "
          f"oracle={orc.p_hat:.4f} |diff|={diff:.4f} <= {bound:.4f}"
          f" -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------- blowup-scan

def _cmd_blowup_scan(args) -> int:
    merged = _merge_config_file(args, dict(
        alpha=None, p=0.5, sizes=None, replicas=50, seed=None, out="out",
        max_ratio=None, min_ratio=None))
    if merged["alpha"] is None:
        raise InvalidParams("--alpha is required")
    alpha = float(merged["alpha"])
    seed = _require_seed(merged)
    sizes = merged["sizes"] or ((512, 4096) if alpha < -2 else (512, 2048))
    if isinstance(sizes, str):
        sizes = _comma_ints(sizes)
    max_ratio, min_ratio = merged["max_ratio"], merged["min_ratio"]
    if max_ratio is None and min_ratio is None:
        # blow-up signature below -2: coalescence time stays bounded in L;
        # diffusive regime: roughly quadratic growth, tested with slack
        if alpha < -2.0:
            max_ratio = 1.5
        else:
            min_ratio = 8.0

    scaling = stats.coalescence_scaling(alpha, sizes, int(merged["replicas"]),
                                        seed, p=float(merged["p"]))
    out_dir = merged["out"]
    os.makedirs(out_dir, exist_ok=True)
    _write_xy_csv(os.path.join(out_dir, "blowup.csv"),
                  "L,median_coalescence_time",
                  [(L, float(m)) for L, m in scaling])
    t_small = scaling[0][1]
    t_large = scaling[-1][1]
    ratio = t_large / t_small
    checks = []
    if max_ratio is not None:
        checks.append({"name": "ratio_max", "statistic": ratio,
                       "threshold": float(max_ratio),
                       "pass": ratio <= float(max_ratio)})
    if min_ratio is not None:
        checks.append({"name": "ratio_min", "statistic": ratio,
                       "threshold": float(min_ratio),
                       "pass": ratio >= float(min_ratio)})
    threshold = float(max_ratio if max_ratio is not None else min_ratio)
    ok = _write_verdict(out_dir, "blowup-scan", ratio, threshold, checks,
                        {"alpha": alpha, "p": merged["p"],
                         "sizes": list(sizes),
                         "replicas": int(merged["replicas"]),
                         "medians": {str(L): m for L, m in scaling},
                         "seed": seed})
    print(f"blowup-scan: alpha={alpha} T({scaling[-1][0]})/T({scaling[0][0]})"
          f" = {ratio:.3f} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------- simulate-2d

def _cmd_simulate_2d(args) -> int:
    merged = _merge_config_file(args, dict(
        d=2, alpha=None, p=None, L=None, t_max=None, obs_times=None,
        seed=None, rate_cap=None, out="out"))
    for key in ("alpha", "p", "L", "t_max"):
        if merged[key] is None:
            raise InvalidParams(f"--{key.replace('_', '-')} is required")
    seed = _require_seed(merged)
    obs = merged["obs_times"] or (merged["t_max"],)
    cfg = latticed.ConfigD(d=int(merged["d"]), alpha=merged["alpha"],
                           p=merged["p"], L=int(merged["L"]),
                           t_max=merged["t_max"], obs_times=obs, seed=seed,
                           rate_cap=merged["rate_cap"])
    series, snaps = latticed.run_d(cfg, snapshots=True)
    out_dir = merged["out"]
    os.makedirs(out_dir, exist_ok=True)
    coord_header = ",".join(f"x{i+1}" for i in range(cfg.d)) + ",cluster_id"
    for j, snap in enumerate(snaps):
        _write_xy_csv(os.path.join(out_dir, f"snapshot_{j}.csv"), coord_header,
                      [(*coords, cid) for coords, cid in snap])
    _write_xy_csv(os.path.join(out_dir, "series2d.csv"),
                  "t,n_clusters,max_size",
                  [(t, series.n_clusters[j],
                    series.sizes[j][0] if series.sizes[j] else 0)
                   for j, t in enumerate(series.times)])
    print(f"simulate-2d: {len(snaps)} snapshots -> {out_dir}")
    return 0


# ---------------------------------------------------------------- wiring

def parse(argv: Optional[list[str]] = None) -> argparse.Namespace:
    ap = argparse.ArgumentParser(
        prog="ccagg",
        description="Cluster aggregation on lattice tori: simulation and "
                    "statistical verification.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="one 1D replica, CSV series out")
    _add_common(sp, "alpha", "p", "L", "t-max", "obs-times", "seed",
                "guard-fraction", "rate-cap", "out", "config")
    sp.add_argument("--log-tagged-steps", action="store_true", default=False,
                    help="record every tagged-cluster event to tagged_steps.csv")
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("ensemble", help="replica ensemble, CSV + summary out")
    _add_common(sp, "alpha", "p", "L", "t-max", "obs-times", "seed",
                "replicas", "parallelism", "guard-fraction", "rate-cap",
                "out", "config")
    sp.set_defaults(func=_cmd_ensemble)

    sp = sub.add_parser("verify-limit-law",
                        help="KS + mean check of |c0|/sqrt(t) against the "
                             "alpha=0 limit law (defaults: p=0.5 L=8192 "
                             "t=4096 replicas=500)")
    _add_common(sp, "alpha", "p", "L", "t-max", "obs-times", "seed",
                "replicas", "parallelism", "guard-fraction", "out", "config")
    sp.add_argument("--ks-threshold", type=float, default=None,
                    help="max KS distance (default 0.08)")
    sp.add_argument("--mean-rtol", type=float, default=None,
                    help="max relative mean error (default 0.05)")
    sp.set_defaults(func=_cmd_verify_limit_law)

    sp = sub.add_parser("verify-exponent",
                        help="log-log growth slope vs 1/(alpha+2) "
                             "(defaults: 200 replicas at t=4^4..4^7)")
    _add_common(sp, "alpha", "p", "L", "obs-times", "seed", "replicas",
                "parallelism", "out", "config", "from-csv")
    sp.add_argument("--slope-tol", type=float, default=None,
                    help="max |slope - 1/(alpha+2)| (default 0.07)")
    sp.set_defaults(func=_cmd_verify_exponent)

    sp = sub.add_parser("verify-timechange",
                        help="KS of time-changed tagged step gaps vs Exp(1) "
                             "(defaults: alpha=-1, 100 runs, 500 gaps each)")
    _add_common(sp, "alpha", "p", "L", "t-max", "seed", "replicas",
                "guard-fraction", "out", "config")
    sp.add_argument("--min-intervals", type=int, default=None,
                    help="tagged steps used per run (default 500)")
    sp.add_argument("--significance", type=float, default=None,
                    help="KS significance level (default 0.01)")
    sp.add_argument("--pass-fraction", type=float, default=None,
                    help="required fraction of passing runs (default 0.95)")
    sp.set_defaults(func=_cmd_verify_timechange)

    sp = sub.add_parser("oracle-compare",
                        help="engine vs difference-walk estimates of the "
                             "two-particle connection probability (alpha=0)")
    _add_common(sp, "p", "seed", "L", "out", "config")
    sp.add_argument("--m", type=int, default=None,
                    help="particle index paired with particle 0 (required)")
    sp.add_argument("--t", type=float, default=None,
                    help="connection horizon (default 100)")
    sp.add_argument("--engine-replicas", type=int, default=None,
                    help="engine Monte-Carlo replicas (default 10000)")
    sp.add_argument("--oracle-replicas", type=int, default=None,
                    help="oracle Monte-Carlo replicas (default 100000)")
    sp.add_argument("--sigma", type=float, default=None,
                    help="agreement bound in combined stderrs (default 3)")
    sp.set_defaults(func=_cmd_oracle_compare)

    sp = sub.add_parser("blowup-scan",
                        help="median full-coalescence time vs torus size; "
                             "bounded ratio signals finite-time blow-up")
    _add_common(sp, "alpha", "p", "seed", "replicas", "out", "config")
    sp.add_argument("--sizes", type=_comma_ints, default=None,
                    metavar="L1,L2,...",
                    help="torus sizes (default 512,4096 below alpha=-2, "
                         "else 512,2048)")
    sp.add_argument("--max-ratio", type=float, default=None,
                    help="pass iff T(Lmax)/T(Lmin) <= this")
    sp.add_argument("--min-ratio", type=float, default=None,
                    help="pass iff T(Lmax)/T(Lmin) >= this")
    sp.set_defaults(func=_cmd_blowup_scan)

    sp = sub.add_parser("simulate-2d",
                        help="d>=2 torus run with per-observation snapshot CSVs")
    _add_common(sp, "alpha", "p", "L", "t-max", "obs-times", "seed",
                "rate-cap", "out", "config")
    sp.add_argument("--d", type=int, default=None,
                    help="lattice dimension (default 2)")
    sp.set_defaults(func=_cmd_simulate_2d)

    return ap.parse_args(argv)


def dispatch(args: argparse.Namespace) -> int:
    try:
        return args.func(args)
    except (InvalidParams, SchemaMismatch, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv: Optional[list[str]] = None) -> None:
    sys.exit(dispatch(parse(argv)))


if __name__ == "__main__":
    main()
