"""Report assembly: delimited tables, JSON summary, and rendered figures.

Every experiment contributes rows to one CSV table with the fixed schema
``experiment, N_or_T, seed, quantity, value, err_est``.  Values are rounded
to 9 significant digits at ingestion -- above every solver tolerance, below
any run-to-run jitter -- and all fits are recomputed from the rounded rows,
so the emitted JSON summary is reproducible from the tables alone and
repeated runs of one configuration produce byte-identical CSVs.

A report directory is assembled in a temp sibling and renamed into place:

    <out>/<hash12>/
        config.json                resolved configuration (sorted keys)
        summary.json               stamp, fits, checks, errors
        <hash12>_<experiment>.csv  one table per executed experiment
        plots/<hash12>_<name>.svg  one figure per growth series

where <hash12> is the first 12 hex digits of the SHA-256 of the resolved
configuration.
"""

import hashlib
import json
import os
import platform
import shutil
import tempfile

import numpy as np

from .experiments import fit_growth, model_value

CSV_HEADER = "experiment,N_or_T,seed,quantity,value,err_est"

# per-series plotting/fit instructions: (model, x_transform, x_axis_label)
SERIES_SPECS = {
    "nlogn": ("nlogn", "identity", "N"),
    "sandwich_lower": ("log", "identity", "ln N"),
    "sandwich_upper": ("log", "identity", "ln N"),
    "bilinear": ("sqrtlog", "identity", "sqrt(ln N)"),
    "proposition": ("log", "window", "ln(2+2T)"),
    "contrast": ("log", "window", "ln(2+2T)"),
}


def round9(x):
    """Round to 9 significant digits (the reporting precision)."""
    return float(f"{float(x):.9g}")


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


class ExperimentReport:
    """Accumulates tables, fitted series, checks, and errors for one run."""

    def __init__(self, config):
        self.config = config
        self.hash = config_hash(config)
        self.tables = {}       # experiment -> list of row tuples
        self.series = {}       # series name -> dict(points, model, xform, fit)
        self.checks = {}       # check name -> dict(value, threshold, passed)
        self.errors = {}       # experiment -> message
        self.notices = []

    # -- ingestion ----------------------------------------------------------

    def add_row(self, experiment, n_or_t, seed, quantity, value, err_est=""):
        row = (experiment,
               "" if n_or_t is None else str(n_or_t),
               "" if seed is None else str(seed),
               quantity,
               f"{round9(value):.9g}",
               "" if err_est == "" else f"{float(err_est):.3g}")
        self.tables.setdefault(experiment, []).append(row)

    def add_series(self, name, points, model=None, xform=None):
        if name in SERIES_SPECS:
            spec_model, spec_xform, xlabel = SERIES_SPECS[name]
        else:
            spec_model, spec_xform, xlabel = model or "log", xform or "identity", "x"
        pts = [(float(x), round9(y)) for (x, y) in points]
        fit = None
        if len(pts) >= 3:
            xs = [2.0 + 2.0 * x for (x, _) in pts] if spec_xform == "window" \
                else [x for (x, _) in pts]
            fit = fit_growth(list(zip(xs, [y for (_, y) in pts])), spec_model)
        self.series[name] = {"points": pts, "model": spec_model,
                             "xform": spec_xform, "xlabel": xlabel, "fit": fit}
        return fit

    def add_check(self, name, passed, value=None, threshold=None):
        self.checks[name] = {
            "passed": bool(passed),
            "value": None if value is None else round9(value),
            "threshold": None if threshold is None else round9(threshold),
        }

    def add_error(self, experiment, message):
        self.errors[experiment] = str(message)

    @property
    def all_passed(self):
        return all(c["passed"] for c in self.checks.values()) and not self.errors

    # -- serialization --------------------------------------------------------

    def stamp(self):
        import numpy
        import scipy

        from . import __version__
        return {
            "artifact_version": __version__,
            "config_sha256": self.hash,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        }

    def summary_json(self):
        fits = {}
        for name, s in self.series.items():
            fits[name] = {
                "model": s["model"], "xform": s["xform"],
                "points": [[x, y] for (x, y) in s["points"]],
            }
            if s["fit"] is not None:
                a, b, r2 = s["fit"]
                fits[name]["fit"] = {"a": a, "b": b, "r2": r2}
        return {
            "stamp": self.stamp(),
            "fits": fits,
            "checks": self.checks,
            "errors": self.errors,
            "notices": self.notices,
        }

    def table_text(self, experiment):
        lines = [CSV_HEADER]
        lines += [",".join(row) for row in self.tables[experiment]]
        return "\n".join(lines) + "\n"


def refit_from_series(series):
    """Recompute the fit of a stored series dict (self-containment check)."""
    pts = series["points"]
    xs = [2.0 + 2.0 * x for (x, _) in pts] if series["xform"] == "window" \
        else [x for (x, _) in pts]
    return fit_growth(list(zip(xs, [y for (_, y) in pts])), series["model"])


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def render_series_plot(series_name, series, path, hashsalt=""):
    """One line plot: data points on a log-transformed axis with the fitted curve."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = hashsalt or "strichartz-lab"
    pts = series["points"]
    if not pts:
        return False
    model, xform = series["model"], series["xform"]
    raw_x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    x_fit = 2.0 + 2.0 * raw_x if xform == "window" else raw_x

    if model == "nlogn":
        ax_x, ax_y = np.log(x_fit), y / x_fit
        xlabel, ylabel = "ln N", "value / N"
    elif model == "sqrtlog":
        ax_x, ax_y = np.sqrt(np.log(x_fit)), y
        xlabel, ylabel = series.get("xlabel", "sqrt(ln x)"), "value"
    else:
        ax_x, ax_y = np.log(x_fit), y
        xlabel, ylabel = series.get("xlabel", "ln x"), "value"

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(ax_x, ax_y, "o", ms=5, label=series_name)
    if series["fit"] is not None:
        a, b, r2 = series["fit"]
        xs = np.linspace(x_fit.min(), x_fit.max(), 200)
        ys = model_value(model, a, b, xs)
        if model == "nlogn":
            ax.plot(np.log(xs), ys / xs, "-", lw=1.2,
                    label=f"fit a={a:.4g} b={b:.4g} R2={r2:.4f}")
        elif model == "sqrtlog":
            ax.plot(np.sqrt(np.log(xs)), ys, "-", lw=1.2,
                    label=f"fit a={a:.4g} b={b:.4g} R2={r2:.4f}")
        else:
            ax.plot(np.log(xs), ys, "-", lw=1.2,
                    label=f"fit a={a:.4g} b={b:.4g} R2={r2:.4f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return True


def render_sandwich_plot(lower, upper, path, hashsalt=""):
    """Both endpoint series on a common ln N axis."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = hashsalt or "strichartz-lab"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, s, style in (("lower", lower, "o-"), ("upper", upper, "s-")):
        x = np.log([p[0] for p in s["points"]])
        y = [p[1] for p in s["points"]]
        lbl = name
        if s["fit"] is not None:
            a, b, r2 = s["fit"]
            lbl += f" (a={a:.3g}, R2={r2:.3f})"
        ax.plot(x, y, style, ms=4, lw=1.0, label=lbl)
    ax.set_xlabel("ln N")
    ax.set_ylabel("squared endpoint constant")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return True


def emit_plots(report, plots_dir):
    """Render every stored series; returns the list of written files."""
    os.makedirs(plots_dir, exist_ok=True)
    written = []
    h = report.hash[:12]
    done_sandwich = False
    for name, series in report.series.items():
        if name.startswith("sandwich"):
            if done_sandwich:
                continue
            lo = report.series.get("sandwich_lower")
            up = report.series.get("sandwich_upper")
            if lo and up:
                p = os.path.join(plots_dir, f"{h}_sandwich.svg")
                render_sandwich_plot(lo, up, p, hashsalt=report.hash)
                written.append(p)
                done_sandwich = True
                continue
        if not series["points"]:
            report.notices.append(f"series {name}: empty, no plot emitted")
            continue
        p = os.path.join(plots_dir, f"{h}_{name}.svg")
        if render_series_plot(name, series, p, hashsalt=report.hash):
            written.append(p)
    return written


# ---------------------------------------------------------------------------
# atomic directory write
# ---------------------------------------------------------------------------

def write_report(report, out_dir, plots=True):
    """Write the report atomically (temp dir, then rename); returns final path."""
    os.makedirs(out_dir, exist_ok=True)
    h = report.hash[:12]
    final = os.path.join(out_dir, h)
    tmp = tempfile.mkdtemp(prefix=f".partial-{h}-", dir=out_dir)
    try:
        with open(os.path.join(tmp, "config.json"), "w", encoding="utf-8") as fh:
            json.dump(report.config, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(tmp, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(report.summary_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        for experiment in sorted(report.tables):
            path = os.path.join(tmp, f"{h}_{experiment}.csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(report.table_text(experiment))
        if plots:
            emit_plots(report, os.path.join(tmp, "plots"))
        if os.path.exists(final):
            shutil.rmtree(final)
        os.replace(tmp, final)
    except Exception:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return final


def load_report_dir(path):
    """Reconstruct (config, summary, tables) from a written report directory."""
    with open(os.path.join(path, "config.json"), "r", encoding="utf-8") as fh:
        config = json.load(fh)
    with open(os.path.join(path, "summary.json"), "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    tables = {}
    h = config_hash(config)[:12]
    for name in os.listdir(path):
        if name.endswith(".csv") and name.startswith(h):
            exp = name[len(h) + 1:-4]
            with open(os.path.join(path, name), "r", encoding="utf-8") as fh:
                tables[exp] = fh.read()
    return config, summary, tables
