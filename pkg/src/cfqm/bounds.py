"""A-priori error bounds for commutator-free quasi-Magnus steps.

All bounds are per step of size h for a generator A(t) = -i H(t) whose
midpoint Taylor coefficients satisfy ||a_j|| <= c (componentwise for the
split bounds).  Four sources of error are kept separate:

* ``magnus_remainder``   -- truncating the Magnus series at grade 2s,
* ``cfqm_remainder``     -- replacing the truncated exponential by the
                            m-exponential commutator-free product,
* ``quadrature_remainder`` -- evaluating the averaged generators with the
                            s-node Gauss-Legendre rule,
* ``trotter_step_error`` -- replacing each product exponential by a
                            (2s)-th order product formula over the odd/even
                            two-site blocks of a spin chain.

Tail sums share one stopping rule (see :func:`cfqm.series_core.sum_tail`):
stop once the current term is below ``rel_tol`` times the running sum and
terms have decreased three orders in a row.  Step sizes outside a bound's
convergence region raise :class:`~cfqm.errors.DivergentRegimeError` rather
than returning a number that means nothing.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DivergentRegimeError, EpsilonTooLargeError
from .series_core import (PowerSeries, compositions, series_geometric,
                          series_neg_log_one_minus, sum_tail,
                          weak_composition_factorial_sum, x_series)

#: Orders up to which the Magnus coefficients are computed along both
#: independent routes and asserted to agree (relative 1e-10).
DUAL_CHECK_ORDER = 40

_DUAL_CHECK_RTOL = 1e-10


# ---------------------------------------------------------------------------
# Magnus series truncation (remainder of the grade-2s truncation)
# ---------------------------------------------------------------------------


def _magnus_coeffs_dp(c: float, pmax: int) -> list[float]:
    """Coefficients G_p of the Magnus remainder majorant, by composition DP.

    Structurally this evaluates

        G_p = sum_{k in C(p)} 1/len(k)! * prod_l f(k_l),
        f(q) = sum_{j in C(q)} (2c)**len(j) / len(j) * prod_l 1/j_l,

    but through dynamic programs over the number of parts rather than by
    enumerating compositions:

        e_z(q) = [x**q] (sum_j x**j/j)**z     (inner parts DP)
        F_z(p) = [length-z part of the outer convolution of f]

    Every quantity is a sum of positive terms, so float accumulation is
    forward-stable.
    """
    # e_z(q): z from 0..pmax, q from 0..pmax
    e = [[0.0] * (pmax + 1) for _ in range(pmax + 1)]
    e[0][0] = 1.0
    for z in range(1, pmax + 1):
        for q in range(z, pmax + 1):
            acc = 0.0
            for j in range(1, q - z + 2):
                acc += e[z - 1][q - j] / j
            e[z][q] = acc
    f = [0.0] * (pmax + 1)
    for q in range(1, pmax + 1):
        f[q] = sum((2.0 * c) ** z / z * e[z][q] for z in range(1, q + 1))
    # outer convolution over the number of f-factors
    big_f = [[0.0] * (pmax + 1) for _ in range(pmax + 1)]
    big_f[0][0] = 1.0
    for z in range(1, pmax + 1):
        for p in range(z, pmax + 1):
            acc = 0.0
            for j in range(1, p - z + 2):
                acc += f[j] * big_f[z - 1][p - j]
            big_f[z][p] = acc
    out = [0.0] * (pmax + 1)
    for p in range(1, pmax + 1):
        out[p] = sum(big_f[z][p] / math.factorial(z) for z in range(1, p + 1))
    return out


def _magnus_coeffs_gf(c: float, pmax: int) -> list[float]:
    """Coefficients G_p via the generating function 1/(1 + 2c ln(1-x)) - 1."""
    log_series = series_neg_log_one_minus(x_series(pmax, one=1.0))
    geom = series_geometric(log_series.scale(2.0 * c))
    out = list(geom.coeffs)
    out[0] = 0.0
    return out


class _MagnusCoefficientTable:
    """G_p coefficients for a fixed c, extendable on demand.

    Both evaluation routes are run (and asserted against each other) up to
    ``DUAL_CHECK_ORDER``; beyond that only the generating-function route is
    extended, since the composition DP grows cubically with the order.
    """

    def __init__(self, c: float):
        self.c = c
        self._coeffs: list[float] = []
        self.ensure(DUAL_CHECK_ORDER)

    def ensure(self, pmax: int) -> None:
        if len(self._coeffs) > pmax:
            return
        gf = _magnus_coeffs_gf(self.c, pmax)
        dual_max = min(pmax, DUAL_CHECK_ORDER)
        dp = _magnus_coeffs_dp(self.c, dual_max)
        for p in range(1, dual_max + 1):
            if not math.isclose(gf[p], dp[p], rel_tol=_DUAL_CHECK_RTOL):
                raise AssertionError(
                    f"Magnus coefficient routes disagree at order {p}: "
                    f"DP {dp[p]!r} vs GF {gf[p]!r} (c={self.c})")
        self._coeffs = gf

    def __getitem__(self, p: int) -> float:
        if p >= len(self._coeffs):
            self.ensure(max(p, 2 * (len(self._coeffs) - 1)))
        return self._coeffs[p]


@lru_cache(maxsize=64)
def _magnus_table(c: float) -> _MagnusCoefficientTable:
    return _MagnusCoefficientTable(c)


def magnus_remainder(c: float, h: float, s: int, rel_tol: float = 1e-6) -> float:
    """Bound on the norm distance between exp(Omega) and exp(Omega^[2s]).

    Valid when 2c * (-ln(1 - h/2)) < 1; outside that region the majorant
    series diverges and :class:`DivergentRegimeError` is raised.  The
    remainder is sum_{p >= 2s+1} G_p (h/2)**p with the G_p checked along
    two independent routes (composition DP and generating function).
    """
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if h >= 2.0 or 2.0 * c * (-math.log1p(-h / 2.0)) >= 1.0:
        raise DivergentRegimeError(
            f"Magnus remainder series diverges at h={h}, c={c}: "
            f"need 2c*(-ln(1-h/2)) < 1")
    table = _magnus_table(c)
    x = h / 2.0
    return sum_tail(lambda p: table[p] * x ** p, 2 * s + 1, rel_tol)


# ---------------------------------------------------------------------------
# Commutator-free product vs. truncated Magnus exponential
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _validate_cfqm_counting(m: int) -> bool:
    """Assert the two combinatorial identities behind the closed form.

    * the number of compositions of p with z parts is binomial(p-1, z-1)
      (checked by enumeration for p <= 10), and
    * the weak-composition factorial sum over m parts equals m**z / z!
      (checked by exact enumeration for z <= 6).
    """
    for p in range(1, 11):
        counts = Counter(len(k) for k in compositions(p))
        for z in range(1, p + 1):
            assert counts[z] == math.comb(p - 1, z - 1), (p, z)
    for z in range(0, 7):
        assert weak_composition_factorial_sum(z, m) == Fraction(m ** z, math.factorial(z)), (z, m)
    return True


def cfqm_remainder(cbar: float, h: float, s: int, m: int,
                   rel_tol: float = 1e-6) -> float:
    """Bound on the distance between the m-exponential product and
    exp(Omega^[2s]), given componentwise exponent bounds cbar.

    Each order contributes

        term(p) = h**p * sum_{z=1}^{p} binomial(p-1, z-1) (cbar m)**z / z!

    summed from p = 2s+1 under the shared stopping rule.  The binomial
    counts compositions of p by number of parts and the (cbar m)**z / z!
    factor is the weak-composition factorial sum; both identities are
    asserted by enumeration once per m.  For s = 1 the single-exponential
    scheme reproduces exp(Omega^[2]) identically, so the remainder is 0.
    """
    if cbar <= 0:
        raise ValueError(f"cbar must be positive, got {cbar}")
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if s < 1 or m < 1:
        raise ValueError(f"s and m must be >= 1, got s={s}, m={m}")
    if s == 1:
        return 0.0
    if h >= 1.0:
        raise DivergentRegimeError(
            f"product-vs-truncation remainder requires h < 1, got h={h}")
    _validate_cfqm_counting(m)
    u = cbar * m

    def term(p: int) -> float:
        # a_z = binomial(p-1, z-1) u**z / z!, accumulated multiplicatively:
        # plain float products cannot trip the integer-to-float conversion
        # overflow that comb/factorial would at large p, and a genuinely
        # astronomical order saturates to inf, which the stopping rule then
        # reports as a divergent regime.
        a = u
        inner = u
        for z in range(1, p):
            a = a * (p - z) * u / (z * (z + 1))
            if not math.isfinite(a):
                return math.inf
            inner += a
        return h ** p * inner

    return sum_tail(term, 2 * s + 1, rel_tol)


# ---------------------------------------------------------------------------
# Gauss-Legendre quadrature remainder
# ---------------------------------------------------------------------------


def _quadrature_inner_sum(c: float, h: float, s: int) -> float:
    """c * (2s)! / (1 - h/2)**(2s+1), cross-checked against the direct tail.

    The closed form sums c * (2s+l)!/l! * (h/2)**l over l >= 0; the direct
    truncated summation of exactly that series (no binomial identity) is
    evaluated alongside and must agree to 1e-10 relative.
    """
    closed = c * math.factorial(2 * s) / (1.0 - h / 2.0) ** (2 * s + 1)
    direct = 0.0
    term = c * float(math.factorial(2 * s))
    l = 0
    while True:
        direct += term
        if term < 1e-16 * direct and l > 2 * s:
            break
        l += 1
        if l > 100_000:  # pragma: no cover - guarded by h < 2
            raise DivergentRegimeError("quadrature tail failed to converge")
        term *= (2 * s + l) / l * (h / 2.0)
    if not math.isclose(closed, direct, rel_tol=1e-10):
        raise AssertionError(
            f"quadrature inner-sum routes disagree: closed {closed!r} "
            f"vs direct {direct!r} (c={c}, h={h}, s={s})")
    return closed


def quadrature_remainder(y, c: float, h: float, s: int) -> float:
    """Bound on the error of evaluating the averaged generators A^(g) with
    the s-node Gauss-Legendre rule inside each exponential.

    ``y`` holds the scheme coefficients in the averaged-generator basis,
    one row per exponential and one column per g = 0..s-1.  The bound is

        h**(2s+1) (s!)**4 / ((2s+1) ((2s)!)**3)
            * sum_{i,g} |y_{i,g}| / h**g * c (2s)! / (1 - h/2)**(2s+1)

    and requires h < 2.  Note the 1/h**g weight: rows that draw strongly on
    the higher averaged generators make this term dominant at small h.
    """
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if h >= 2.0:
        raise DivergentRegimeError(
            f"quadrature remainder requires h < 2, got h={h}")
    ymat = np.atleast_2d(np.asarray(y, dtype=float))
    if ymat.shape[1] != s:
        raise ValueError(f"y must have s={s} columns, got shape {ymat.shape}")
    prefactor = (h ** (2 * s + 1) * math.factorial(s) ** 4
                 / ((2 * s + 1) * math.factorial(2 * s) ** 3))
    inner = _quadrature_inner_sum(c, h, s)
    weights = sum(abs(ymat[i, g]) / h ** g
                  for i in range(ymat.shape[0]) for g in range(s))
    return prefactor * inner * weights


# ---------------------------------------------------------------------------
# Product-formula (Trotter) error for the odd/even block split
# ---------------------------------------------------------------------------


def _trotter_stage_constant(n: int, s: int) -> float:
    """sum_{k=1}^{2*5**(s-1)} n (2k-1)**2s k (4k-4)**2s + n (2k+1)**2s k (4k)**2s."""
    total = 0
    for k in range(1, 2 * 5 ** (s - 1) + 1):
        total += (n * (2 * k - 1) ** (2 * s) * k * (4 * k - 4) ** (2 * s)
                  + n * (2 * k + 1) ** (2 * s) * k * (4 * k) ** (2 * s))
    return float(total)


def trotter_step_error(z, n: int, h: float, s: int) -> float:
    """Bound on replacing each CFQM exponential by the (2s)-th order
    canonical product formula over the odd/even two-site blocks.

    ``z`` holds the quadrature-node coefficients (one row per exponential).
    With Z_i = sum_k |z_{i,k}| / (4n), each exponential contributes

        [sum_k n(2k-1)**2s k (4k-4)**2s + n(2k+1)**2s k (4k)**2s]
            * (Z_i h)**(2s+1) / (2s+1)!

    with the stage sum running over k = 1..2*5**(s-1).
    """
    if n < 2:
        raise ValueError(f"need at least two spins, got n={n}")
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    zmat = np.atleast_2d(np.asarray(z, dtype=float))
    const = _trotter_stage_constant(n, s)
    fact = math.factorial(2 * s + 1)
    total = 0.0
    for i in range(zmat.shape[0]):
        z_i = np.abs(zmat[i]).sum() / (4.0 * n)
        total += const * (z_i * h) ** (2 * s + 1) / fact
    return total


# ---------------------------------------------------------------------------
# Per-step assembly and the Suzuki yardstick
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundParams:
    """Inputs the per-step bounds need beyond the scheme itself.

    c     componentwise bound on the midpoint Taylor coefficients of A(t)
    cbar  c times the largest extended-basis coefficient of the scheme
    h     step size
    s     half order (the scheme is order 2s)
    m     number of scheme stages (matches the scheme)
    n     number of spins (enters only the product-formula term)
    """

    c: float
    cbar: float
    h: float
    s: int
    m: int
    n: int


@dataclass(frozen=True)
class ErrorBreakdown:
    """Per-step error bound, split by source."""

    magnus_taylor: float
    cfqm_taylor: float
    quadrature: float
    trotter: float

    @property
    def total(self) -> float:
        return self.magnus_taylor + self.cfqm_taylor + self.quadrature + self.trotter


def step_error(scheme, params: BoundParams, rel_tol: float = 1e-6) -> ErrorBreakdown:
    """Assemble the full per-step bound for a scheme.

    For split schemes the product has 2m exponentials (one kinetic-like and
    one potential-like per stage), both coefficient families enter the
    quadrature term, and the Trotter term is zero because every exponential
    is a sum of commuting two-site blocks already.  For non-split schemes
    the Trotter term uses the scheme's quadrature-node coefficients; it is
    the cost of implementing each exponential on the spin chain.  The s=1
    scheme is the exact exponential of the truncated series, so its product
    term vanishes (see :func:`cfqm_remainder`).
    """
    if params.s != scheme.s or params.m != scheme.m:
        raise ValueError(
            f"params (s={params.s}, m={params.m}) do not match scheme "
            f"{scheme.scheme_id} (s={scheme.s}, m={scheme.m})")
    magnus = magnus_remainder(params.c, params.h, params.s, rel_tol)
    if scheme.is_split:
        cfqm = cfqm_remainder(params.cbar, params.h, params.s, 2 * params.m, rel_tol)
        quad = (quadrature_remainder(scheme.y_rho, params.c, params.h, params.s)
                + quadrature_remainder(scheme.y_sigma, params.c, params.h, params.s))
        trotter = 0.0
    else:
        cfqm = cfqm_remainder(params.cbar, params.h, params.s, params.m, rel_tol)
        quad = quadrature_remainder(scheme.y, params.c, params.h, params.s)
        trotter = trotter_step_error(scheme.z, params.n, params.h, params.s)
    return ErrorBreakdown(magnus, cfqm, quad, trotter)


def suzuki_step_cost(q: int, lam: float, h: float, s: int, eps_step: float) -> int:
    """Exponential count for one Suzuki step of order 2s on a q-local
    Hamiltonian with interaction strength lam, meeting per-step error
    eps_step.

    N = ceil(3 q lam h s (25/3)**s (lam h / eps_step)**(1/(2s))),
    valid for eps_step <= (9/10) (5/3)**s lam h; larger targets raise
    :class:`EpsilonTooLargeError` (the cost model is vacuous there).
    """
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if lam <= 0 or h <= 0 or eps_step <= 0:
        raise ValueError("lam, h and eps_step must be positive")
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    limit = 0.9 * (5.0 / 3.0) ** s * lam * h
    if eps_step > limit:
        raise EpsilonTooLargeError(
            f"eps_step={eps_step} exceeds validity limit {limit} "
            f"for the order-{2 * s} Suzuki cost model")
    count = (3.0 * q * lam * h * s * (25.0 / 3.0) ** s
             * (lam * h / eps_step) ** (1.0 / (2 * s)))
    return math.ceil(count)
