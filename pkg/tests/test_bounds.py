"""Per-step error bounds against independently derived oracles.

The Magnus remainder coefficients and the product-vs-truncation remainder
both get third-route checks here built on exact Fraction series from
``series_core`` (the module itself already cross-checks two float routes
internally; the tests below share no recurrence with either).
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from cfqm import bounds
from cfqm.bounds import (
    BoundParams,
    cfqm_remainder,
    magnus_remainder,
    quadrature_remainder,
    step_error,
    suzuki_step_cost,
    trotter_step_error,
)
from cfqm.errors import DivergentRegimeError, EpsilonTooLargeError
from cfqm.schemes import compute_cbar, load_scheme
from cfqm.series_core import PowerSeries, series_exp, series_geometric


def _magnus_series_fractions(c: Fraction, order: int) -> PowerSeries:
    """1/(1 - 2c*(x + x^2/2 + x^3/3 + ...)) with exact coefficients."""
    u = PowerSeries([Fraction(0)] + [2 * c / k for k in range(1, order + 1)])
    return series_geometric(u)


def test_magnus_coefficients_small_orders():
    # G_1 = 2c, G_2 = c + 4c^2, G_3 = 2c/3 + 4c^2 + 8c^3
    for c in (1.0, 0.25, 0.5):
        for coeffs in (bounds._magnus_coeffs_dp(c, 3), bounds._magnus_coeffs_gf(c, 3)):
            assert coeffs[1] == pytest.approx(2 * c, rel=1e-12)
            assert coeffs[2] == pytest.approx(c + 4 * c ** 2, rel=1e-12)
            assert coeffs[3] == pytest.approx(2 * c / 3 + 4 * c ** 2 + 8 * c ** 3,
                                              rel=1e-12)


def test_magnus_coefficients_against_fraction_series():
    c = Fraction(1, 4)
    exact = _magnus_series_fractions(c, 18)
    dp = bounds._magnus_coeffs_dp(float(c), 18)
    for p in range(1, 19):
        assert dp[p] == pytest.approx(float(exact.coeffs[p]), rel=1e-12)


def test_magnus_remainder_matches_fraction_tail():
    c, h, s = 1, 0.25, 1
    exact = _magnus_series_fractions(Fraction(c), 40)
    tail = sum(float(exact.coeffs[p]) * (h / 2.0) ** p for p in range(2 * s + 1, 41))
    got = magnus_remainder(c, h, s, rel_tol=1e-12)
    assert got == pytest.approx(tail, rel=1e-8)


def test_magnus_remainder_monotone_and_order():
    vals = [magnus_remainder(1.0, h, 2) for h in (0.1, 0.2, 0.3, 0.4)]
    assert vals == sorted(vals)
    # leading order h^(2s+1): quartering h divides the remainder by ~4^5
    lo = magnus_remainder(1.0, 0.02, 2)
    hi = magnus_remainder(1.0, 0.08, 2)
    assert hi / lo == pytest.approx(4 ** 5, rel=0.15)


def test_magnus_remainder_divergence_guard():
    # boundary: 2c*(-ln(1 - h/2)) >= 1, i.e. h >= 2*(1 - e^(-1/(2c)))
    h_star = 2.0 * (1.0 - math.exp(-0.5))
    with pytest.raises(DivergentRegimeError):
        magnus_remainder(1.0, h_star + 1e-9, 1)
    # just inside the radius the stopping rule still gives up (the term
    # ratio is ~1), which the guard reports the same way
    with pytest.raises(DivergentRegimeError):
        magnus_remainder(1.0, h_star - 1e-6, 1)
    assert magnus_remainder(1.0, h_star - 0.05, 1) > 0


def test_magnus_remainder_input_validation():
    with pytest.raises(ValueError):
        magnus_remainder(0.0, 0.1, 1)
    with pytest.raises(ValueError):
        magnus_remainder(1.0, -0.1, 1)
    with pytest.raises(ValueError):
        magnus_remainder(1.0, 0.1, 0)


def test_cfqm_remainder_matches_exponential_series():
    # For product bound purposes the closed form is the tail of
    # exp(u*t/(1-t)) with u = cbar*m; series_exp provides an independent
    # route with exact Fractions.
    cbar, m, s, h = Fraction(1, 2), 3, 2, 0.2
    u = cbar * m
    order = 60
    arg = PowerSeries([Fraction(0)] + [u] * order)  # u*(t + t^2 + ...)
    e = series_exp(arg)
    tail = sum(float(e.coeffs[p]) * h ** p for p in range(2 * s + 1, order + 1))
    got = cfqm_remainder(float(cbar), h, s, m, rel_tol=1e-12)
    assert got == pytest.approx(tail, rel=1e-9)


def test_cfqm_remainder_order_one_is_exact():
    assert cfqm_remainder(1.0, 0.5, 1, 1) == 0.0


def test_cfqm_remainder_guards():
    with pytest.raises(DivergentRegimeError):
        cfqm_remainder(1.0, 1.0, 2, 2)
    with pytest.raises(ValueError):
        cfqm_remainder(-1.0, 0.1, 2, 2)


def test_cfqm_remainder_large_exponent_bounds_do_not_overflow():
    # A split scheme with many exponentials pushes cbar*m to ~50; close to
    # h=1 the tail needs hundreds of orders, which used to overflow the
    # comb/factorial arithmetic instead of reporting the regime.
    with pytest.raises(DivergentRegimeError):
        cfqm_remainder(2.3, 0.9, 3, 20)
    loose = cfqm_remainder(2.3, 0.6, 3, 20)
    assert math.isfinite(loose) and loose > 1.0


def test_quadrature_inner_sum_value():
    # s=1, h=1, c=1: 2!/(1 - 1/2)^3 = 16
    assert bounds._quadrature_inner_sum(1.0, 1.0, 1) == pytest.approx(16.0, rel=1e-12)


def test_quadrature_remainder_frozen_values():
    # y=[[1]], c=1, h=1, s=1: (1/24) * 16 * 1 = 2/3
    got = quadrature_remainder([[1.0]], 1.0, 1.0, 1)
    assert got == pytest.approx(2.0 / 3.0, rel=1e-12)
    # y=[[0,1]], c=1, h=1, s=2: (16/69120) * 768 * 1 = 8/45
    got2 = quadrature_remainder([[0.0, 1.0]], 1.0, 1.0, 2)
    assert got2 == pytest.approx(8.0 / 45.0, rel=1e-12)


def test_quadrature_remainder_linear_in_c_and_rows():
    y = [[0.4, -1.3], [0.4, 1.3]]
    base = quadrature_remainder(y, 1.0, 0.3, 2)
    assert quadrature_remainder(y, 2.0, 0.3, 2) == pytest.approx(2 * base, rel=1e-12)
    doubled = quadrature_remainder(np.vstack([y, y]), 1.0, 0.3, 2)
    assert doubled == pytest.approx(2 * base, rel=1e-12)


def test_quadrature_remainder_requires_matching_columns():
    with pytest.raises(ValueError):
        quadrature_remainder([[1.0, 0.0]], 1.0, 0.3, 1)
    with pytest.raises(DivergentRegimeError):
        quadrature_remainder([[1.0]], 1.0, 2.0, 1)


def test_trotter_stage_constants_frozen():
    assert bounds._trotter_stage_constant(1, 1) == 3632.0
    assert bounds._trotter_stage_constant(1, 2) == 11246376945408.0
    assert bounds._trotter_stage_constant(3, 1) == 3 * 3632.0


def test_trotter_step_error_n_scaling():
    # per-step bound scales as n^(-2s) at fixed coefficients
    z = [[0.3, 0.7], [0.5, -0.5]]
    for s in (1, 2):
        e2 = trotter_step_error(z, 2, 0.2, s)
        e8 = trotter_step_error(z, 8, 0.2, s)
        assert e8 / e2 == pytest.approx(4.0 ** (-2 * s), rel=1e-12)


def test_trotter_step_error_row_additive():
    z1, z2 = [[0.3, 0.7]], [[0.5, -0.5]]
    both = trotter_step_error(np.vstack([z1, z2]), 4, 0.2, 1)
    assert both == pytest.approx(trotter_step_error(z1, 4, 0.2, 1)
                                 + trotter_step_error(z2, 4, 0.2, 1), rel=1e-12)


def test_suzuki_step_cost_hand_value():
    # 3*2*1*1*1*(25/3)*sqrt(2500) = 2500 exactly
    assert suzuki_step_cost(q=2, lam=1.0, h=1.0, s=1, eps_step=1.0 / 2500.0) == 2500


def test_suzuki_step_cost_validity_limit():
    limit = 0.9 * (5.0 / 3.0)  # s=1, lam=h=1
    assert suzuki_step_cost(2, 1.0, 1.0, 1, limit * 0.999) >= 1
    with pytest.raises(EpsilonTooLargeError):
        suzuki_step_cost(2, 1.0, 1.0, 1, limit * 1.001)


def test_step_error_assembly_non_split():
    scheme = load_scheme("CF4-2")
    c, h, n = 1.0, 0.25, 4
    params = BoundParams(c=c, cbar=compute_cbar(scheme, c), h=h,
                         s=scheme.s, m=scheme.m, n=n)
    bd = step_error(scheme, params)
    assert bd.magnus_taylor == pytest.approx(magnus_remainder(c, h, 2), rel=1e-9)
    assert bd.quadrature == pytest.approx(
        quadrature_remainder(scheme.y, c, h, 2), rel=1e-12)
    assert bd.trotter == pytest.approx(
        trotter_step_error(scheme.z, n, h, 2), rel=1e-12)
    assert bd.total == pytest.approx(
        bd.magnus_taylor + bd.cfqm_taylor + bd.quadrature + bd.trotter, rel=1e-15)


def test_step_error_assembly_split():
    scheme = load_scheme("GS6-4")
    params = BoundParams(c=1.0, cbar=compute_cbar(scheme, 1.0), h=0.25,
                         s=scheme.s, m=scheme.m, n=4)
    bd = step_error(scheme, params)
    assert bd.trotter == 0.0
    assert bd.quadrature == pytest.approx(
        quadrature_remainder(scheme.y_rho, 1.0, 0.25, 2)
        + quadrature_remainder(scheme.y_sigma, 1.0, 0.25, 2), rel=1e-12)
    # split product has 2m exponentials in the product-vs-truncation term
    assert bd.cfqm_taylor == pytest.approx(
        cfqm_remainder(params.cbar, 0.25, 2, 2 * scheme.m), rel=1e-9)


def test_step_error_first_order_has_no_product_term():
    scheme = load_scheme("CF2-1")
    params = BoundParams(c=1.0, cbar=compute_cbar(scheme, 1.0), h=0.3,
                         s=1, m=1, n=4)
    assert step_error(scheme, params).cfqm_taylor == 0.0


def test_step_error_rejects_mismatched_params():
    scheme = load_scheme("CF4-2")
    params = BoundParams(c=1.0, cbar=0.5, h=0.2, s=1, m=2, n=4)
    with pytest.raises(ValueError):
        step_error(scheme, params)
