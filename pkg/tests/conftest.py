import numpy as np
import pytest

from strichartz_lab import KernelEvaluator, SymbolProduct, make_bump

V_DEFAULT = 0.25


@pytest.fixture(scope="session")
def psi():
    return SymbolProduct(base=make_bump((0.0, 0.0), 1.0, "P"), power=2)


@pytest.fixture(scope="session")
def ke(psi):
    """Shared kernel evaluator; table build is the expensive part."""
    return KernelEvaluator(psi)


@pytest.fixture(scope="session")
def int_psi(ke):
    return ke.int_psi


def slow_2d_kernel_quadrature(sp, m, y, n_r=1200, n_t=1600):
    """Independent slow oracle: polar tensor Gauss-Legendre x trapezoid for
    int s(xi) e^{-4 pi^2 i m |xi|^2} e^{2 pi i y.xi} dxi (recentered s)."""
    rho = sp.radius
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * rho * (x + 1.0)
    rw = 0.5 * rho * w
    t = np.linspace(0.0, 2.0 * np.pi, n_t, endpoint=False)
    dt = 2.0 * np.pi / n_t
    base = sp.value_radial(r) * np.exp(-4j * np.pi ** 2 * m * r ** 2) * r * rw
    ph = np.exp(2j * np.pi * (np.outer(np.cos(t), r) * y[0]
                              + np.outer(np.sin(t), r) * y[1]))
    return dt * np.sum(ph @ base)
