"""Command-line experiment runner.

Subcommands:

    run       execute the selected experiment families and write a report
    validate  run only the cross-check family (exit 0 iff all checks green)
    plot      re-render figures for an existing report directory

Exit codes: 0 all selected checks passed, 1 a check failed or an experiment
errored, 2 configuration error.  The resolved configuration (defaults, then
config file, then flags) is SHA-256 hashed into every output filename, and
identical configurations produce byte-identical CSV tables.
"""

import argparse
import copy
import json
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, StrichartzLabError
from .experiments import (bilinear_ratio, endpoint_growth, khinchine_check,
                          nlogn_divergence)
from .grid_sim import (GridField, GridSpec, crosscheck_kernel,
                       direct_endpoint_constant, discretization_check,
                       gram_crosscheck, l4_strichartz_ratio, propagate,
                       random_band_limited)
from .kernels import KernelEvaluator, probe_rows
from .reports import ExperimentReport, refit_from_series, write_report
from .symbols import Symbol, SymbolProduct, galilean_recenter, symbol_integral
from .walk_gram import assemble_gram, min_eigenvalue, sample_walk

KNOWN_EXPERIMENTS = ("validate", "nlogn", "sandwich", "bilinear",
                     "proposition", "contrast")

DEFAULT_CONFIG = {
    "symbol_p": {"center": [0.0, 0.0], "radius": 1.0, "label": "P"},
    "symbol_p_prime": {"center": [4.0, 0.0], "radius": 1.0, "label": "Pprime"},
    "v": 0.25,
    "seeds": [1, 2, 3, 4, 5, 6, 7, 8],
    "experiments": ["validate", "nlogn", "sandwich"],
    "nlogn_schedule": [64, 128, 256, 512, 1024, 2048, 4096, 8192],
    "sandwich_schedule": [64, 128, 256, 512, 1024],
    "bilinear_schedule": [16, 32, 64, 128, 256],
    "window_schedule": [2, 4, 8, 16, 32, 64],
    "grid": {"L": 32.0, "n": 512},
    "window_grid": {"L": 64.0, "n": 512},
    "crosscheck_grid": {"L": 256.0, "n": 2048},
    "crosscheck_m_max": 8,
    "khinchine_trials": 10000,
    "khinchine_weights": 5,
    "bilinear_draws": 64,
    "bilinear_sweeps": 30,
    "bilinear_sign_mode": "complex",
    "bilinear_seeds": [1],
    "lemma_pairs": 50,
    "lemma_T": 6,
    "lemma_samples_per_unit": 8,
    "l4_trials": 5,
    "endpoint_iters": 8,
    "endpoint_restarts": 2,
    "kernel_tolerance": 1e-8,
    "table_half_width": 24.0,
    "out_dir": "reports",
    "threads": 0,
}


def _ascending_ints(name, xs):
    if not xs:
        raise ConfigError(f"{name} must be nonempty")
    try:
        vals = [int(x) for x in xs]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of integers") from None
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"{name} must be strictly ascending")
    if vals[0] < 1:
        raise ConfigError(f"{name} entries must be >= 1")
    return vals


def validate_config(config):
    """Resolve and validate a config dict; raises ConfigError on any violation."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    for key, val in (config or {}).items():
        if key not in cfg:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(cfg[key], dict) and isinstance(val, dict):
            merged = dict(cfg[key])
            for k2, v2 in val.items():
                if k2 not in merged:
                    raise ConfigError(f"unknown config key {key}.{k2}")
                merged[k2] = v2
            cfg[key] = merged
        else:
            cfg[key] = val
    if not (isinstance(cfg["v"], (int, float)) and cfg["v"] > 0):
        raise ConfigError("v must be a positive number")
    for name in ("nlogn_schedule", "sandwich_schedule", "bilinear_schedule",
                 "window_schedule"):
        cfg[name] = _ascending_ints(name, cfg[name])
    if not cfg["seeds"]:
        raise ConfigError("seeds must be nonempty")
    cfg["seeds"] = [int(s) for s in cfg["seeds"]]
    cfg["bilinear_seeds"] = [int(s) for s in cfg["bilinear_seeds"]]
    for name in ("kernel_tolerance", "table_half_width"):
        if not cfg[name] > 0:
            raise ConfigError(f"{name} must be positive")
    unknown = [e for e in cfg["experiments"] if e not in KNOWN_EXPERIMENTS]
    if unknown:
        raise ConfigError(f"unknown experiments {unknown}; known: {KNOWN_EXPERIMENTS}")
    for s in ("symbol_p", "symbol_p_prime"):
        if cfg[s]["radius"] <= 0:
            raise ConfigError(f"{s}.radius must be positive")
    if cfg["bilinear_sign_mode"] not in ("complex", "signs"):
        raise ConfigError("bilinear_sign_mode must be 'complex' or 'signs'")
    return cfg


def _symbol(cfg, key):
    d = cfg[key]
    return Symbol(center=tuple(d["center"]), radius=d["radius"], label=d["label"])


def _evaluators(cfg):
    """Recentered kernel evaluators for both symbols (shared when identical)."""
    p = _symbol(cfg, "symbol_p")
    pp = _symbol(cfg, "symbol_p_prime")
    psi = SymbolProduct(base=galilean_recenter(p), power=2)
    psi_p = SymbolProduct(base=galilean_recenter(pp), power=2)
    ke = KernelEvaluator(psi, tolerance=cfg["kernel_tolerance"],
                         half_width=cfg["table_half_width"])
    if psi_p.radius == psi.radius:
        ke_p = ke
    else:
        ke_p = KernelEvaluator(psi_p, tolerance=cfg["kernel_tolerance"],
                               half_width=cfg["table_half_width"])
    return p, pp, ke, ke_p


# ---------------------------------------------------------------------------
# experiment families
# ---------------------------------------------------------------------------

def run_nlogn(cfg, report, ke):
    series = nlogn_divergence(cfg["nlogn_schedule"], cfg["v"], ke)
    for (N, q) in series.points:
        report.add_row("nlogn", int(N), None, "expected_quadratic_form", q, 1e-10)
    fit = report.add_series("nlogn", series.points)
    if fit:
        a, b, r2 = fit
        report.add_check("nlogn_positive_slope", a > 0, value=a, threshold=0.0)
        report.add_check("nlogn_r2", r2 >= 0.999, value=r2, threshold=0.999)


def run_sandwich(cfg, report, ke):
    res = endpoint_growth(cfg["sandwich_schedule"], cfg["v"], cfg["seeds"], ke)
    for (N, seed, lam) in res.lam_table:
        report.add_row("sandwich", int(N), seed, "lambda_max", lam, 1e-8)
    for (N, med) in res.lower.points:
        report.add_row("sandwich", int(N), None, "median_lambda_max", med)
    for (N, up) in res.upper.points:
        report.add_row("sandwich", int(N), None, "schur_upper", up, 1e-6)
    fit_lo = report.add_series("sandwich_lower", res.lower.points)
    fit_up = report.add_series("sandwich_upper", res.upper.points)
    pointwise = all(lo <= up for (_, lo), (_, up)
                    in zip(res.lower.points, res.upper.points))
    report.add_check("sandwich_lower_le_upper", pointwise)
    if fit_lo:
        report.add_check("sandwich_lower_slope", fit_lo[0] > 0, value=fit_lo[0], threshold=0.0)
        report.add_check("sandwich_lower_r2", fit_lo[2] >= 0.95, value=fit_lo[2], threshold=0.95)
    if fit_up:
        report.add_check("sandwich_upper_slope", fit_up[0] > 0, value=fit_up[0], threshold=0.0)
        report.add_check("sandwich_upper_r2", fit_up[2] >= 0.99, value=fit_up[2], threshold=0.99)


def run_bilinear(cfg, report, ke, ke_p):
    medians = []
    floor_ok = True
    for N in cfg["bilinear_schedule"]:
        vals = []
        for seed in cfg["bilinear_seeds"]:
            path = sample_walk(N, cfg["v"], seed)
            g = assemble_gram(path, ke)
            gp = g if ke_p is ke else assemble_gram(path, ke_p)
            wit = bilinear_ratio(g, gp, trials=cfg["bilinear_draws"], seed=seed,
                                 sweeps=cfg["bilinear_sweeps"],
                                 mode=cfg["bilinear_sign_mode"])
            report.add_row("bilinear", N, seed, "bilinear_ratio", wit.ratio)
            report.add_row("bilinear", N, seed, "lambda_max", wit.lam, 1e-8)
            report.add_row("bilinear", N, seed, "khinchine_floor", wit.khinchine_floor)
            vals.append(wit.ratio)
            floor_ok = floor_ok and (wit.ratio >= 0.9 * wit.khinchine_floor)
        med = float(np.median(vals))
        medians.append((N, med))
        report.add_row("bilinear", N, None, "median_bilinear_ratio", med)
    fit = report.add_series("bilinear", medians)
    report.add_check("bilinear_floor", floor_ok)
    if fit:
        a, b, r2 = fit
        report.add_check("bilinear_positive_slope", a > 0, value=a, threshold=0.0)
        report.add_check("bilinear_r2", r2 >= 0.95, value=r2, threshold=0.95)


def run_proposition(cfg, report):
    spec = GridSpec(**cfg["window_grid"])
    p = galilean_recenter(_symbol(cfg, "symbol_p"))
    series = direct_endpoint_constant(spec, p, cfg["window_schedule"],
                                      iters=cfg["endpoint_iters"],
                                      seed=cfg["seeds"][0],
                                      restarts=cfg["endpoint_restarts"])
    for (T, val) in series.points:
        report.add_row("proposition", int(T), None, "endpoint_constant_sq", val)
    fit = report.add_series("proposition", series.points)
    mono = all(b >= a for (_, a), (_, b) in zip(series.points, series.points[1:]))
    report.add_check("proposition_monotone", mono)
    if fit:
        report.add_check("proposition_positive_slope", fit[0] > 0, value=fit[0], threshold=0.0)


def run_contrast(cfg, report):
    spec = GridSpec(**cfg["window_grid"])
    p = galilean_recenter(_symbol(cfg, "symbol_p"))
    series = l4_strichartz_ratio(spec, p, cfg["window_schedule"],
                                 trials=cfg["l4_trials"], seed=cfg["seeds"][0])
    for (T, val) in series.points:
        report.add_row("contrast", int(T), None, "l4_ratio_max", val)
    report.add_series("contrast", series.points)
    if len(series.points) >= 2:
        (t1, r1), (t2, r2) = series.points[-2], series.points[-1]
        change = abs(r2 - r1) / r1
        report.add_row("contrast", None, None, "top_window_rel_change", change)
        report.add_check("contrast_l4_stable", change < 0.10, value=change, threshold=0.10)


def run_validate(cfg, report, p_sym, pp_sym, ke, ke_p):
    v = cfg["v"]
    # kernel engine vs grid: plane-faithful box
    big = GridSpec(**cfg["crosscheck_grid"])
    rel = crosscheck_kernel(ke, big, cfg["crosscheck_m_max"])
    report.add_row("validate", None, None, "crosscheck_max_rel_err", rel, 1e-4)
    report.add_check("crosscheck_kernel_vs_grid", rel <= 1e-4, value=rel, threshold=1e-4)

    path5 = sample_walk(2, v, cfg["seeds"][0])
    rel5 = gram_crosscheck(ke, big, path5.points, v=v, seed=cfg["seeds"][0])
    report.add_row("validate", None, None, "gram_crosscheck_max_rel_err", rel5, 1e-4)
    report.add_check("gram_crosscheck", rel5 <= 1e-4, value=rel5, threshold=1e-4)

    # cross-method probe agreement (direct vs convolution)
    worst = max(r[6] for r in probe_rows(ke, (1, 5, 40)))
    report.add_row("validate", None, None, "probe_cross_method_abs_err", worst, 1e-6)
    report.add_check("probe_cross_method", worst <= 1e-6, value=worst, threshold=1e-6)

    # structural invariants on a moderate instance
    path = sample_walk(24, v, cfg["seeds"][0])
    g = assemble_gram(path, ke)
    herm = float(np.abs(g.entries - g.entries.conj().T).max())
    diag = float(np.abs(np.diag(g.entries).real - ke.int_psi).max())
    mineig = min_eigenvalue(g)
    report.add_row("validate", None, None, "gram_hermiticity_defect", herm, 0.0)
    report.add_row("validate", None, None, "gram_diagonal_defect", diag, 1e-8)
    report.add_row("validate", None, None, "gram_min_eigenvalue", mineig)
    report.add_check("gram_hermitian", herm == 0.0, value=herm, threshold=0.0)
    report.add_check("gram_diagonal", diag <= 1e-8, value=diag, threshold=1e-8)
    report.add_check("gram_psd", mineig >= -1e-6 * ke.int_psi,
                     value=mineig, threshold=-1e-6 * ke.int_psi)

    # spectral simulator invariants on the default grid
    spec = GridSpec(**cfg["grid"])
    f = random_band_limited(spec, galilean_recenter(p_sym), cfg["seeds"][0])
    fp = f.to_phys()
    n0 = fp.l2_norm()
    unit = abs(propagate(fp, 3.7).l2_norm() / n0 - 1.0)
    grp_field = propagate(propagate(fp, 1.3), 2.4)
    grp = float(np.abs(grp_field.values - propagate(fp, 3.7).values).max()
                * spec.dx / n0)
    rt = float(np.abs(fp.to_freq().to_phys().values - fp.values).max() * spec.dx / n0)
    report.add_row("validate", None, None, "propagator_unitarity_defect", unit, 1e-12)
    report.add_row("validate", None, None, "propagator_group_law_defect", grp, 1e-12)
    report.add_row("validate", None, None, "parseval_roundtrip_defect", rt, 1e-10)
    report.add_check("unitarity", unit <= 1e-12, value=unit, threshold=1e-12)
    report.add_check("group_law", grp <= 1e-12, value=grp, threshold=1e-12)
    report.add_check("parseval", rt <= 1e-10, value=rt, threshold=1e-10)

    # integer-vs-continuum time ratio over random localized pairs
    kappas = []
    refine_ok = True
    T, spu = cfg["lemma_T"], cfg["lemma_samples_per_unit"]
    for i in range(cfg["lemma_pairs"]):
        fb = random_band_limited(spec, p_sym, 1000 + 2 * i)
        gb = random_band_limited(spec, pp_sym, 1001 + 2 * i)
        res = discretization_check(fb, gb, T, spu)
        if res.degenerate:
            report.notices.append(f"lemma pair {i}: degenerate (B = 0)")
            continue
        kappas.append(res.kappa)
        report.add_row("validate", T, 1000 + 2 * i, "lemma_kappa", res.kappa)
        if i < 3:
            res2 = discretization_check(fb, gb, T, 2 * spu)
            change = abs(res2.B - res.B) / res.B
            refine_ok = refine_ok and (change < 0.01)
            report.add_row("validate", T, 1000 + 2 * i, "lemma_refinement_change", change, 0.01)
    spread = max(kappas) / min(kappas) if kappas else np.inf
    report.add_row("validate", None, None, "lemma_kappa_spread", spread, 50)
    report.add_check("lemma_kappa_finite_spread", bool(kappas) and spread < 50,
                     value=spread, threshold=50)
    report.add_check("lemma_refinement_stable", refine_ok)

    # random-sign expectation identity
    rng = np.random.Generator(np.random.Philox(key=cfg["seeds"][0]))
    gk = assemble_gram(sample_walk(16, v, cfg["seeds"][0]),
                       ke_p if ke_p is not ke else ke)
    kh_ok = True
    for i in range(cfg["khinchine_weights"]):
        w = rng.random(gk.dim)
        rep = khinchine_check(gk, w, trials=cfg["khinchine_trials"], seed=7000 + i)
        kh_ok = kh_ok and rep.within_band
        report.add_row("validate", None, 7000 + i, "khinchine_exact", rep.exact)
        report.add_row("validate", None, 7000 + i, "khinchine_mc_mean", rep.mc_mean,
                       rep.band)
    report.add_check("khinchine_identity", kh_ok)

    # report determinism: regenerate one table and compare bytes
    r2 = ExperimentReport(cfg)
    run_nlogn({**cfg, "nlogn_schedule": cfg["nlogn_schedule"][:4]}, r2, ke)
    r3 = ExperimentReport(cfg)
    run_nlogn({**cfg, "nlogn_schedule": cfg["nlogn_schedule"][:4]}, r3, ke)
    same = r2.table_text("nlogn") == r3.table_text("nlogn")
    report.add_check("report_determinism", same)

    # self-containment: every stored fit is recomputable from its points
    for name, s in list(report.series.items()):
        if s["fit"] is None:
            continue
        ref = refit_from_series(s)
        if any(abs(x - y) > 1e-10 for x, y in zip(ref, s["fit"])):
            report.add_check(f"refit_{name}", False)


def run(config):
    """Execute the selected experiments; returns the populated ExperimentReport."""
    cfg = validate_config(config)
    if cfg["threads"]:
        try:
            import threadpoolctl
            threadpoolctl.threadpool_limits(int(cfg["threads"]))
        except ImportError:
            pass
    report = ExperimentReport(cfg)
    p_sym, pp_sym, ke, ke_p = _evaluators(cfg)
    report.notices.append(
        f"symbols recentered for kernel work: P center {p_sym.center} -> (0,0), "
        f"P' center {pp_sym.center} -> (0,0)")
    selected = cfg["experiments"]
    runners = {
        "nlogn": lambda: run_nlogn(cfg, report, ke),
        "sandwich": lambda: run_sandwich(cfg, report, ke),
        "bilinear": lambda: run_bilinear(cfg, report, ke, ke_p),
        "proposition": lambda: run_proposition(cfg, report),
        "contrast": lambda: run_contrast(cfg, report),
        "validate": lambda: run_validate(cfg, report, p_sym, pp_sym, ke, ke_p),
    }
    for name in selected:
        try:
            runners[name]()
        except StrichartzLabError as exc:
            report.add_error(name, f"{type(exc).__name__}: {exc}")
    return report


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------

def _build_parser():
    ap = argparse.ArgumentParser(prog="strichartz-lab",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="JSON config file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--experiments", metavar="LIST",
                       help="comma-separated experiment names")
        p.add_argument("--seeds", metavar="LIST", help="comma-separated seeds")
        p.add_argument("--nmax", type=int, metavar="INT",
                       help="truncate every N schedule at this value")
        p.add_argument("--threads", type=int, metavar="INT",
                       help="BLAS/FFT thread cap")
        p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")

    common(sub.add_parser("run", help="run the selected experiments"))
    common(sub.add_parser("validate", help="run only the cross-check family"))
    pp = sub.add_parser("plot", help="re-render figures for an existing report")
    pp.add_argument("--report", metavar="DIR", required=True,
                    help="report directory written by a previous run")
    return ap


def _config_from_args(args):
    cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    if args.out:
        cfg["out_dir"] = args.out
    if args.experiments is not None:
        cfg["experiments"] = [e.strip() for e in args.experiments.split(",") if e.strip()]
    if args.seeds is not None:
        cfg["seeds"] = [int(s) for s in args.seeds.split(",") if s.strip()]
    if args.threads is not None:
        cfg["threads"] = args.threads
    if args.nmax is not None:
        base = validate_config(cfg)
        for name in ("nlogn_schedule", "sandwich_schedule", "bilinear_schedule"):
            cfg[name] = [n for n in base[name] if n <= args.nmax]
    return cfg


def _plot_command(args):
    from .reports import config_hash, render_series_plot

    config, summary, _tables = __import__(
        "strichartz_lab.reports", fromlist=["load_report_dir"]).load_report_dir(args.report)
    h = config_hash(config)
    plots_dir = os.path.join(args.report, "plots")
    os.makedirs(plots_dir, exist_ok=True)
    count = 0
    for name, s in summary.get("fits", {}).items():
        series = {"points": s["points"], "model": s["model"],
                  "xform": s.get("xform", "identity"),
                  "fit": (tuple(s["fit"].values()) if "fit" in s else None)}
        if not series["points"]:
            print(f"notice: series {name} empty, skipped")
            continue
        path = os.path.join(plots_dir, f"{h[:12]}_{name}.svg")
        render_series_plot(name, series, path, hashsalt=h)
        count += 1
    print(f"rendered {count} figure(s) into {plots_dir}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    if args.command == "plot":
        return _plot_command(args)
    try:
        cfg = _config_from_args(args)
        if args.command == "validate":
            cfg["experiments"] = ["validate"]
        report = run(cfg)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    final = write_report(report, report.config["out_dir"], plots=not args.no_plots)
    n_checks = len(report.checks)
    n_fail = sum(1 for c in report.checks.values() if not c["passed"])
    for name, c in sorted(report.checks.items()):
        status = "PASS" if c["passed"] else "FAIL"
        extra = "" if c["value"] is None else f" (value {c['value']:.6g})"
        print(f"[{status}] {name}{extra}")
    for name, msg in report.errors.items():
        print(f"[ERROR] {name}: {msg}")
    print(f"report: {final}  ({n_checks - n_fail}/{n_checks} checks passed)")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
