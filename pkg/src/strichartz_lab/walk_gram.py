"""Random-walk atom configurations and their Gram matrices.

The configuration is a plane random walk x_n, n = -N..N, with x_0 = 0 and
i.i.d. centered Gaussian increments of per-coordinate variance v (the total
increment variance is 2v).  The Gram matrix of the propagated, localized
Dirac atoms at those points has entries

    M[n, n'] = K_{n - n'}(x_n - x_{n'}),

constant diagonal equal to int psi, exact Hermitian symmetry by mirrored
assembly, and is positive semidefinite up to solver tolerance.  Its largest
eigenvalue is the squared discrete endpoint constant of the configuration;
the expectation of the all-ones quadratic form is available in closed form
through the Gaussian characteristic function, at O(N) quadrature cost.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .errors import ConvergenceError, InvalidParameterError

# Dense eigen-solves switch from full diagonalization to Lanczos above this.
_EIGH_DIM_CUTOFF = 600


@dataclass(frozen=True)
class WalkPath:
    """A sampled walk; points has shape (2N+1, 2), row i holding x_{i-N}."""

    N: int
    points: np.ndarray
    v: float
    seed: int

    def point(self, n):
        return self.points[n + self.N]

    def to_json(self):
        p = self.points
        return {
            "N": self.N, "v": self.v, "seed": self.seed,
            "rms_displacement": float(np.sqrt((p ** 2).sum(axis=1).mean())),
            "max_displacement": float(np.sqrt((p ** 2).sum(axis=1).max())),
        }


def sample_walk(N, v, seed):
    """Sample a walk with x_0 = 0 and Gaussian increments, reproducibly.

    The increments come from a single counter-based Philox stream keyed by
    ``seed``, drawn in one block, so the result is bit-identical for a given
    (N, v, seed) regardless of evaluation order or thread count.
    """
    if N < 0 or N != int(N):
        raise InvalidParameterError(f"N must be a nonnegative integer, got {N}")
    if not (np.isfinite(v) and v > 0):
        raise InvalidParameterError(f"variance must be positive, got {v}")
    N = int(N)
    rng = np.random.Generator(np.random.Philox(key=int(seed) & (2 ** 64 - 1)))
    inc = rng.normal(0.0, np.sqrt(v), size=(2 * N, 2))
    pos = np.vstack([np.zeros((1, 2)), np.cumsum(inc[:N], axis=0)])
    neg = np.cumsum(inc[N:], axis=0)[::-1]
    points = np.vstack([neg, pos]) if N > 0 else pos
    points.setflags(write=False)
    return WalkPath(N=N, points=points, v=float(v), seed=int(seed))


@dataclass(frozen=True)
class GramMatrix:
    """Hermitian Gram matrix of propagated atoms at the walk points."""

    dim: int
    entries: np.ndarray
    int_psi: float
    psi_label: str = ""
    path: WalkPath = None

    def summary_json(self):
        return {
            "dim": self.dim,
            "int_psi": self.int_psi,
            "psi_label": self.psi_label,
            "max_offdiag_abs": float(np.abs(self.entries
                                            - np.diag(np.diag(self.entries))).max()),
            "path": self.path.to_json() if self.path is not None else None,
        }

    def save_binary(self, path_base):
        """Row-major complex128 little-endian dump plus a JSON sidecar."""
        raw = np.ascontiguousarray(self.entries.astype("<c16"))
        with open(str(path_base) + ".bin", "wb") as fh:
            fh.write(raw.tobytes())
        sidecar = {"dim": self.dim, "dtype": "complex128",
                   "byte_order": "little", "order": "row-major"}
        with open(str(path_base) + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)

    @staticmethod
    def load_binary(path_base):
        with open(str(path_base) + ".json", "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
        d = sidecar["dim"]
        raw = np.fromfile(str(path_base) + ".bin", dtype="<c16").reshape(d, d)
        return raw.astype(complex)


def assemble_gram(path, ke):
    """Fill M[n, n'] = K_{n-n'}(x_n - x_{n'}) diagonal-by-diagonal.

    The lower triangle is evaluated (one batched radial kernel call per lag m,
    all pair distances at that lag together) and mirrored by conjugation, so
    Hermitian symmetry is exact by construction; the diagonal is the analytic
    value int psi.
    """
    pts = path.points
    D = 2 * path.N + 1
    M = np.zeros((D, D), dtype=complex)
    np.fill_diagonal(M, ke.int_psi)
    idx = np.arange(D)
    for m in range(1, D):
        d = np.linalg.norm(pts[m:] - pts[:-m], axis=1)
        vals = ke.eval_radial(m, d)
        M[idx[m:], idx[:-m]] = vals
        M[idx[:-m], idx[m:]] = np.conj(vals)
    return GramMatrix(dim=D, entries=M, int_psi=ke.int_psi,
                      psi_label=ke.psi.label, path=path)


def quadratic_form(g, c):
    """c* M c, conjugate-linear in the left argument."""
    c = np.asarray(c)
    if c.shape != (g.dim,):
        raise InvalidParameterError(
            f"coefficient vector has shape {c.shape}, expected ({g.dim},)")
    return complex(np.vdot(c, g.entries @ c))


def lambda_max(g, maxiter=None):
    """Largest eigenvalue and unit eigenvector of the Gram matrix.

    Lanczos with a deterministic start vector above the dense cutoff, full
    diagonalization below; eigenvector phase is normalized so its largest
    entry is real positive.  Raises ConvergenceError (with the best estimate
    attached) if the iteration hits its cap.
    """
    M = g.entries
    D = g.dim
    if D <= _EIGH_DIM_CUTOFF:
        vals, vecs = np.linalg.eigh(M)
        lam, vec = float(vals[-1]), vecs[:, -1]
    else:
        v0 = np.ones(D) / np.sqrt(D)
        try:
            vals, vecs = eigsh(M, k=1, which="LA", v0=v0, tol=1e-12,
                               maxiter=maxiter)
        except ArpackNoConvergence as exc:
            best = float(exc.eigenvalues[-1]) if len(exc.eigenvalues) else None
            raise ConvergenceError(
                f"Lanczos failed to converge for dim {D}", best=best) from exc
        lam, vec = float(vals[0]), vecs[:, 0]
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    vec = vec * np.conj(phase)
    return lam, vec


def min_eigenvalue(g):
    """Smallest eigenvalue (for PSD checks)."""
    M = g.entries
    if g.dim <= _EIGH_DIM_CUTOFF:
        return float(np.linalg.eigvalsh(M)[0])
    v0 = np.ones(g.dim) / np.sqrt(g.dim)
    vals = eigsh(M, k=1, which="SA", v0=v0, tol=1e-10,
                 return_eigenvectors=False)
    return float(vals[0])


def expected_quadratic_form(N, v, ke, expected_re=None):
    """Re E[ones* M ones] in closed form over the walk distribution.

    Equals (2N+1) int psi + 2 sum_{m=1}^{2N} (2N+1-m) Re E[K_m], exact in the
    path law and quadrature-accurate in psi.  ``expected_re`` may carry a
    precomputed array of Re E[K_m] for m = 1.. (at least 2N) to amortize the
    quadratures across many N.
    """
    if N < 0 or N != int(N):
        raise InvalidParameterError(f"N must be a nonnegative integer, got {N}")
    if not (np.isfinite(v) and v > 0):
        raise InvalidParameterError(f"variance must be positive, got {v}")
    N = int(N)
    if N == 0:
        return ke.int_psi
    if expected_re is None:
        expected_re = np.array([ke.expected_kernel(m, v).real
                                for m in range(1, 2 * N + 1)])
    mm = np.arange(1, 2 * N + 1)
    return float((2 * N + 1) * ke.int_psi
                 + 2.0 * np.sum((2 * N + 1 - mm) * expected_re[:2 * N]))
