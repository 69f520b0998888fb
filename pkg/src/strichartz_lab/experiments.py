"""Growth-law experiments on walk Gram matrices.

Four quantitative narratives, all driven by the kernel engine:

  * nlogn: the expected all-ones quadratic form grows like a N ln N + b N,
    which is incompatible with any O(N) bound on the double sum;
  * sandwich: the per-configuration top eigenvalue (squared discrete endpoint
    constant) is sandwiched between a random lower series and the
    deterministic row-sum (Schur) upper series, both growing like ln N;
  * khinchine: averaging a random-sign quadratic form kills the off-diagonal
    terms, leaving exactly the weighted diagonal;
  * bilinear: from the top eigenvector c of the first Gram matrix, weights
    w = |Mc| and a phase vector eta give an explicit two-sided witness whose
    certified ratio R grows without bound along the N schedule.

Least-squares fits use closed-form normal equations in two parameters; the
R^2 of a zero-variance target is defined as 1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, InvalidParameterError
from .walk_gram import assemble_gram, lambda_max, sample_walk

GROWTH_MODELS = ("log", "nlogn", "sqrtlog")


@dataclass(frozen=True)
class GrowthSeries:
    """A fitted growth law: points (x, value) and (a, b, r2) for the model."""

    model: str
    points: tuple
    fit: tuple = None
    label: str = ""

    def to_json(self):
        d = {"model": self.model, "label": self.label,
             "points": [[float(x), float(y)] for (x, y) in self.points]}
        if self.fit is not None:
            d["fit"] = {"a": self.fit[0], "b": self.fit[1], "r2": self.fit[2]}
        return d


def _design(model, x):
    if model == "log":
        return np.column_stack([np.log(x), np.ones_like(x)])
    if model == "nlogn":
        return np.column_stack([x * np.log(x), x])
    if model == "sqrtlog":
        return np.column_stack([np.sqrt(np.log(x)), np.ones_like(x)])
    raise InvalidParameterError(f"unknown growth model {model!r}")


def model_value(model, a, b, x):
    x = np.asarray(x, dtype=float)
    if model == "log":
        return a * np.log(x) + b
    if model == "nlogn":
        return a * x * np.log(x) + b * x
    if model == "sqrtlog":
        return a * np.sqrt(np.log(x)) + b
    raise InvalidParameterError(f"unknown growth model {model!r}")


def fit_growth(points, model):
    """Ordinary least squares (a, b, r2) for the two-parameter model.

    Requires at least 3 points with distinct abscissae.  r2 uses the usual
    1 - SS_res/SS_tot about the mean; constant data fits exactly with r2 = 1
    by convention.
    """
    pts = [(float(x), float(y)) for (x, y) in points]
    if len(pts) < 3:
        raise InvalidParameterError("need at least 3 points to fit")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.unique(x).size < 2:
        raise InvalidParameterError("singular design: all abscissae equal")
    if np.any(x <= 1.0) and model in ("log", "sqrtlog", "nlogn"):
        if np.any(x < 1.0) or (model == "sqrtlog" and np.any(x <= 1.0)):
            raise InvalidParameterError("growth models need abscissae > 1")
    X = _design(model, x)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    yhat = X @ coef
    ss_res = float(np.sum((y - yhat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), float(coef[1]), float(r2)


def _maybe_fit(points, model):
    xs = [x for (x, _) in points]
    if len(points) >= 3 and len(set(xs)) >= 2 and min(xs) > 1.0:
        return fit_growth(points, model)
    return None


def _check_schedule(n_list):
    if len(n_list) == 0:
        raise InvalidParameterError("empty N schedule")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise InvalidParameterError("N schedule must be strictly ascending")


# ---------------------------------------------------------------------------
# expectation divergence
# ---------------------------------------------------------------------------

def nlogn_divergence(n_list, v, ke):
    """Series of expected all-ones quadratic forms, fitted to a N ln N + b N."""
    _check_schedule(n_list)
    if max(n_list) > 2 ** 16:
        raise InvalidParameterError("N schedule capped at 2^16 for this experiment")
    m_max = 2 * max(n_list)
    exp_re = np.array([ke.expected_kernel(m, v).real for m in range(1, m_max + 1)])
    points = []
    for N in n_list:
        mm = np.arange(1, 2 * N + 1)
        q = (2 * N + 1) * ke.int_psi + 2.0 * np.sum((2 * N + 1 - mm) * exp_re[:2 * N])
        points.append((N, float(q)))
    return GrowthSeries(model="nlogn", points=tuple(points),
                        fit=_maybe_fit(points, "nlogn"), label="expected_quadratic_form")


# ---------------------------------------------------------------------------
# endpoint sandwich
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EndpointGrowthResult:
    lower: GrowthSeries           # median over seeds of lambda_max
    upper: GrowthSeries           # deterministic Schur row-sum bound
    lam_table: tuple              # rows (N, seed, lambda_max)


def schur_upper_bound(ke, N):
    """int psi + 2 sum_{m=1}^{2N} sup|K_m|; dominates every row absolute sum."""
    return ke.int_psi + 2.0 * sum(ke.kernel_sup_norm(m) for m in range(1, 2 * N + 1))


def endpoint_growth(n_list, v, seeds, ke):
    """Lower/upper growth series for the squared endpoint constant.

    Lower: median over seeds of lambda_max of the assembled Gram matrix.
    Upper: the deterministic Schur bound, shared sup norms accumulated once
    across the whole schedule.  Both fitted to a ln N + b when the schedule
    supports a fit.
    """
    _check_schedule(n_list)
    if len(seeds) == 0:
        raise InvalidParameterError("need at least one seed")
    sups = np.array([ke.kernel_sup_norm(m) for m in range(1, 2 * max(n_list) + 1)])
    cum = np.concatenate([[0.0], np.cumsum(sups)])
    upper_pts = [(N, float(ke.int_psi + 2.0 * cum[2 * N])) for N in n_list]

    lam_rows = []
    lower_pts = []
    for N in n_list:
        lams = []
        for seed in seeds:
            path = sample_walk(N, v, seed)
            lam, _ = lambda_max(assemble_gram(path, ke))
            lams.append(lam)
            lam_rows.append((N, seed, lam))
        lower_pts.append((N, float(np.median(lams))))

    lower = GrowthSeries(model="log", points=tuple(lower_pts),
                         fit=_maybe_fit(lower_pts, "log"), label="median_lambda_max")
    upper = GrowthSeries(model="log", points=tuple(upper_pts),
                         fit=_maybe_fit(upper_pts, "log"), label="schur_upper")
    return EndpointGrowthResult(lower=lower, upper=upper, lam_table=tuple(lam_rows))


# ---------------------------------------------------------------------------
# dual witnesses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomField:
    """Coefficients of a finite atom combination sum_n c_n (loc)* e^{-i n D} delta_{x_n}."""

    path: object
    side: str                 # "P" or "Pprime"
    coefficients: np.ndarray
    lam: float = None         # top eigenvalue when built as an extremizer
    image: np.ndarray = None  # u = M c for the matching Gram matrix


def build_counterexample_f(g):
    """Extremal atom field: coefficients = top unit eigenvector of the Gram matrix."""
    lam, c = lambda_max(g)
    u = g.entries @ c
    return AtomField(path=g.path, side="P", coefficients=c, lam=lam, image=u)


@dataclass(frozen=True)
class KhinchineReport:
    exact: float
    mc_mean: float
    mc_sem: float
    band: float
    trials: int

    @property
    def within_band(self):
        return abs(self.mc_mean - self.exact) <= self.band


def khinchine_check(gprime, w, trials, seed):
    """Random-sign average of (w o eps)* M' (w o eps) against the exact diagonal sum.

    The expectation over independent signs kills every off-diagonal term, so
    the exact value is sum_n w_n^2 M'[n, n].  The Monte Carlo side reports a
    3-standard-error band.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (gprime.dim,):
        raise InvalidParameterError("weight vector length must match the matrix")
    if np.any(w < 0):
        raise InvalidParameterError("weights must be nonnegative")
    exact = float(np.sum(w ** 2 * np.real(np.diag(gprime.entries))))
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2 ** 64 - 1)))
    M = gprime.entries
    vals = np.empty(int(trials))
    for i in range(int(trials)):
        eps = rng.integers(0, 2, size=gprime.dim) * 2.0 - 1.0
        d = w * eps
        vals[i] = np.real(np.vdot(d, M @ d))
    mean = float(vals.mean())
    sem = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return KhinchineReport(exact=exact, mc_mean=mean, mc_sem=sem,
                           band=3.0 * sem, trials=int(trials))


@dataclass(frozen=True)
class BilinearWitness:
    ratio: float              # certified lower bound for the bilinear constant
    lam: float                # top eigenvalue of the first Gram matrix
    khinchine_floor: float    # sqrt(int psi' * lam)
    coefficients_f: np.ndarray
    coefficients_g: np.ndarray
    mode: str
    draws: int


def bilinear_ratio(g, gprime, trials, seed, sweeps=30, mode="complex"):
    """Search phase vectors maximizing the two-sided witness ratio.

    With c the top eigenvector of M, u = Mc and weights w = |u|, the ratio

        R(eta) = sum_n w_n |(M' d)_n| / (||f|| sqrt(d* M' d)),   d = w o eta,

    is a certified lower bound for the discrete bilinear constant.  The
    search runs ``trials`` random starts, each refined by the monotone phase
    alignment eta <- phase(M' d) (fixed sweep budget); the returned ratio is
    recomputed exactly from the final witness pair.  ``mode`` is "complex"
    for unit-modulus phases or "signs" to restrict eta to +-1.
    """
    if g.path is not None and gprime.path is not None and g.path is not gprime.path:
        if not np.array_equal(g.path.points, gprime.path.points):
            raise InvalidParameterError("both Gram matrices must share one walk path")
    if mode not in ("complex", "signs"):
        raise InvalidParameterError(f"unknown sign mode {mode!r}")
    trials = int(trials)
    lam, c = lambda_max(g)
    u = g.entries @ c
    w = np.abs(u)
    if not np.any(w > 0):
        raise DegenerateInputError("weight vector is identically zero")
    fnorm = np.sqrt(lam)
    Mp = gprime.entries
    rng = np.random.Generator(np.random.Philox(key=(int(seed) + 0x9E3779B9) & (2 ** 64 - 1)))

    D = g.dim
    if mode == "complex":
        eta = np.exp(2j * np.pi * rng.random((D, trials)))
    else:
        eta = (rng.integers(0, 2, size=(D, trials)) * 2.0 - 1.0).astype(complex)
    dmat = w[:, None] * eta

    def align(y):
        if mode == "complex":
            a = np.abs(y)
            return np.where(a > 0, y / np.where(a > 0, a, 1.0), 1.0)
        re = np.real(y)
        return np.where(re >= 0, 1.0, -1.0).astype(complex)

    for _ in range(int(sweeps)):
        dmat = w[:, None] * align(Mp @ dmat)

    y = Mp @ dmat
    num = (w[:, None] * np.abs(y)).sum(axis=0)
    qf = np.einsum("ij,ij->j", np.conj(dmat), y).real
    ratios = num / (fnorm * np.sqrt(np.maximum(qf, 1e-300)))
    j = int(np.argmax(ratios))
    d_best = dmat[:, j]

    # certified value, recomputed from the witnesses alone
    yb = Mp @ d_best
    ratio = float((w * np.abs(yb)).sum()
                  / (fnorm * np.sqrt(np.real(np.vdot(d_best, yb)))))
    int_psi_prime = float(np.real(gprime.entries[0, 0]))
    return BilinearWitness(ratio=ratio, lam=lam,
                           khinchine_floor=float(np.sqrt(int_psi_prime * lam)),
                           coefficients_f=c, coefficients_g=d_best,
                           mode=mode, draws=trials)
