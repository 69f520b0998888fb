import json
import math

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from strichartz_lab import (BoxTooSmallError, InvalidParameterError, Symbol,
                            SymbolProduct, galilean_recenter, inverse_ft_table,
                            make_bump, symbol_integral, symbol_l2_norm_sq)
from strichartz_lab.symbols import (_LAP5_DEN_POW, _LAP5_NUM_COEFFS,
                                    _laplacian_ratio_poly, bump_profile,
                                    transform_tail_bound)

from conftest import slow_2d_kernel_quadrature


def polar_integral_oracle(s, power):
    """1D polar quadrature of int s(xi)^power dxi, independent of the implementation."""
    rho = s.radius
    val, _ = quad(lambda r: r * s.value_radial(np.array([r]))[0] ** power,
                  0.0, rho, epsabs=1e-14, epsrel=1e-13, limit=300)
    return 2.0 * np.pi * val


class TestBumpConstruction:
    def test_center_value_is_one(self):
        s = make_bump((0.0, 0.0), 1.0)
        assert s.value((0.0, 0.0)) == 1.0

    def test_boundary_value_is_zero(self):
        s = make_bump((0.0, 0.0), 1.0)
        assert s.value((1.0, 0.0)) == 0.0

    def test_half_radius_value(self):
        # direct evaluation of the profile: exp(1 - 1/(1 - 0.25)) = exp(-1/3)
        s = make_bump((4.0, 0.0), 1.0)
        got = s.value((4.0, 0.5))
        assert got == pytest.approx(math.exp(-1.0 / 3.0), rel=1e-12)

    def test_nonpositive_radius_rejected(self):
        with pytest.raises(InvalidParameterError):
            make_bump((0.0, 0.0), 0.0)
        with pytest.raises(InvalidParameterError):
            make_bump((0.0, 0.0), -2.0)

    def test_values_in_unit_interval_dense_sample(self):
        s = make_bump((1.0, -2.0), 1.5)
        rng = np.random.Generator(np.random.Philox(key=1))
        pts = rng.uniform(-5, 5, size=(4000, 2))
        v = s.value(pts)
        assert np.all(v >= 0.0) and np.all(v <= 1.0)
        d = np.hypot(pts[:, 0] - 1.0, pts[:, 1] + 2.0)
        assert np.all(v[d >= 1.5] == 0.0)

    def test_symbol_product_is_pointwise_power(self):
        s = make_bump((0.0, 0.0), 1.0)
        sp = SymbolProduct(base=s, power=2)
        rng = np.random.Generator(np.random.Philox(key=2))
        pts = rng.uniform(-1.2, 1.2, size=(500, 2))
        assert np.allclose(sp.value(pts), s.value(pts) ** 2, atol=0)

    def test_symbol_product_power_validated(self):
        s = make_bump((0.0, 0.0), 1.0)
        with pytest.raises(InvalidParameterError):
            SymbolProduct(base=s, power=0)


class TestIntegrals:
    @pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
    def test_l2_norm_radius_scaling(self, rho):
        unit = symbol_l2_norm_sq(make_bump((0.0, 0.0), 1.0))
        scaled = symbol_l2_norm_sq(make_bump((3.0, 1.0), rho))
        assert scaled == pytest.approx(rho ** 2 * unit, rel=1e-9)

    @pytest.mark.parametrize("rho", [0.5, 1.0, 2.0])
    def test_integral_radius_scaling(self, rho):
        unit = symbol_integral(make_bump((0.0, 0.0), 1.0))
        scaled = symbol_integral(make_bump((0.0, 0.0), rho))
        assert scaled == pytest.approx(rho ** 2 * unit, rel=1e-9)

    def test_positivity(self):
        s = make_bump((2.0, 2.0), 0.7)
        assert symbol_integral(s) > 0
        assert symbol_l2_norm_sq(s) > 0
        assert symbol_integral(SymbolProduct(base=s, power=2)) > 0

    def test_l2_norm_against_polar_oracle(self):
        s = make_bump((0.0, 0.0), 1.0)
        assert symbol_l2_norm_sq(s) == pytest.approx(
            polar_integral_oracle(s, 2), rel=1e-9)

    def test_integral_against_2d_adaptive_quadrature(self):
        # two independent routes: adaptive 2D quadrature vs the polar rule
        sp = SymbolProduct(base=make_bump((0.0, 0.0), 1.0), power=2)
        val2d, err = dblquad(
            lambda y, x: bump_profile(np.array([np.hypot(x, y)]), 2)[0],
            -1, 1, -1, 1, epsabs=1e-11)
        assert symbol_integral(sp) == pytest.approx(val2d, rel=1e-9)

    def test_product_integral_reduces_power(self):
        s = make_bump((0.0, 0.0), 1.0)
        sp = SymbolProduct(base=s, power=2)
        # int (phi^2)^2 = int phi^4
        assert symbol_l2_norm_sq(sp) == pytest.approx(
            polar_integral_oracle(s, 4), rel=1e-9)


class TestRecentering:
    def test_identity_case(self):
        s = make_bump((0.0, 0.0), 1.0, "P")
        r = galilean_recenter(s)
        assert r.center == (0.0, 0.0) and r.radius == 1.0 and r.label == "P"

    def test_translation(self):
        s = make_bump((4.0, 0.0), 1.0, "Pp")
        r = galilean_recenter(s)
        assert r.center == (0.0, 0.0) and r.radius == 1.0

    def test_norm_invariance(self):
        s = make_bump((4.0, 0.0), 1.0)
        assert symbol_l2_norm_sq(galilean_recenter(s)) == pytest.approx(
            symbol_l2_norm_sq(s), rel=1e-12)

    def test_recenter_product(self):
        sp = SymbolProduct(base=make_bump((4.0, 0.0), 1.0), power=2)
        assert galilean_recenter(sp).center == (0.0, 0.0)


class TestSerialization:
    def test_symbol_roundtrip(self):
        s = make_bump((4.0, -1.0), 2.0, "Pp")
        blob = json.dumps(s.to_json())
        back = Symbol.from_json(json.loads(blob))
        assert back == s

    def test_product_roundtrip(self):
        sp = SymbolProduct(base=make_bump((1.0, 1.0), 0.5, "q"), power=3)
        back = SymbolProduct.from_json(json.loads(json.dumps(sp.to_json())))
        assert back == sp


class TestInverseFtTable:
    def test_value_at_origin_is_integral(self, psi):
        table = inverse_ft_table(psi, 12.0, 64, tail_tol=1e-2)
        mid = 32  # axis[32] = 0 for endpoint-exclusive grid of 64 over [-12, 12)
        assert table.axis[mid] == 0.0
        assert table.values[mid, mid].real == pytest.approx(
            symbol_integral(psi), rel=1e-10)

    def test_centered_symbol_gives_real_table(self, psi):
        table = inverse_ft_table(psi, 12.0, 64, tail_tol=1e-2)
        assert np.abs(table.values.imag).max() == 0.0

    def test_modulation_for_offcenter_symbol(self):
        sp = SymbolProduct(base=make_bump((4.0, 0.0), 1.0), power=2)
        sp0 = galilean_recenter(sp)
        t1 = inverse_ft_table(sp, 8.0, 32, tail_tol=1.0)
        t0 = inverse_ft_table(sp0, 8.0, 32, tail_tol=1.0)
        z = np.array([t1.axis[20], t1.axis[9]])
        mod = np.exp(2j * np.pi * z[0] * 4.0)
        assert t1.values[20, 9] == pytest.approx(mod * t0.values[20, 9], rel=1e-10)

    def test_probe_grid_matches_slow_quadrature(self, psi):
        # 4x4 probe set against the slow 2D oracle at m = 0
        table = inverse_ft_table(psi, 16.0, 128, tail_tol=1e-3)
        idx = np.array([5, 40, 77, 120])
        for i in idx:
            for j in idx:
                z = np.array([table.axis[i], table.axis[j]])
                ref = slow_2d_kernel_quadrature(psi, 0, z)
                assert abs(table.values[i, j] - ref) < 1e-8

    def test_tail_bound_halving(self, psi):
        # certified tail decreases at least like half_width^{-8} per doubling
        taus = [transform_tail_bound(psi, hw) for hw in (8.0, 16.0, 32.0, 64.0)]
        for a, b in zip(taus, taus[1:]):
            assert b <= a * 2.0 ** -8 * 1.0001
            assert b < a  # monotone

    def test_box_too_small(self, psi):
        with pytest.raises(BoxTooSmallError):
            inverse_ft_table(psi, 6.0, 64, tail_tol=1e-6)

    def test_samples_must_be_power_of_two(self, psi):
        with pytest.raises(InvalidParameterError):
            inverse_ft_table(psi, 12.0, 100)

    def test_value_at_interpolates(self, psi):
        table = inverse_ft_table(psi, 12.0, 128, tail_tol=1e-2)
        z = np.array([0.37, -1.91])
        ref = slow_2d_kernel_quadrature(psi, 0, z)
        assert abs(table.value_at(z) - ref) < 1e-8


@pytest.mark.slow
def test_frozen_laplacian_coefficients_regenerate():
    """The certified-tail numerator polynomials are exact; regenerate and compare."""
    for p in (1, 2):
        coeffs, den_pow = _laplacian_ratio_poly(p)
        assert coeffs == _LAP5_NUM_COEFFS[p]
        assert den_pow == _LAP5_DEN_POW
