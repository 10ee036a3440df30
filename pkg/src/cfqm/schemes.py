"""Commutator-free quasi-Magnus scheme data and coefficient transforms.

A scheme of order 2s with m exponentials approximates one propagation step
over [t0, t0 + h] by

    U(h) = prod_{i=1}^m exp(sum_k z_{i,k} A_k h),     A_k = A(t_mid + c_k h/2),

with (c_k, w_k) the s-node Gauss-Legendre rule on [-1, 1] and t_mid the step
midpoint.  Three coefficient bases appear:

  graded      x[i, j], j = 1..s     multiplying alpha_j = a_{j-1} h^j, where
                                    a_j are midpoint Taylor coefficients of A
  averaged    y[i, g], g = 0..s-1   multiplying A^(g)(h) = h^{-g} *
                                    int_{-h/2}^{h/2} t^g A(t + t_mid) dt
  quadrature  z[i, k], k = 1..s     multiplying A_k h

connected by

    x = y @ T,        T[g, j] = (1 - (-1)^(g+j)) / ((g+j) 2^(g+j)),
    z = y @ Q,        Q[g, k] = w_k c_k^g / 2^(g+1),

so that R = T^{-1} maps graded to averaged coefficients and ``R @ Q @ 1 = e_1``
(the quadrature rule integrates the constant exactly).  Scheme files store the
y coefficients; z is derived on load.

Split schemes alternate exponentials of two self-commuting parts T(t), V(t)
of the generator,

    U(h) = prod_{i=1}^m exp(sum_k rho_{i,k} T_k h) exp(sum_k sigma_{i,k} V_k h),

with the last sigma row zero (the product ends on a T factor).  Their files
store rho and sigma directly; the averaged-basis rows used by the quadrature
bound are recovered through Q^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import (AsymptoticRegimeError, DataIntegrityError,
                     GridTooFineError, SchemeLookupError)

#: Scheme identifiers shipped with the package, in order of increasing cost.
SCHEME_IDS = ("CF2-1", "CF4-2", "CF4-3", "CF6-5", "CF6-6", "GS6-4", "GS10-6")

_ANTISYMMETRY_ATOL = 1e-10
_QUADRATURE_ATOL = 1e-13


def t_matrix(s: int, jmax: int | None = None) -> np.ndarray:
    """Matrix T[g, j] connecting averaged to graded coefficients, shape
    (s, jmax) with rows g = 0..s-1 and columns j = 1..jmax (default jmax=s)."""
    if s < 1:
        raise ValueError(f"s must be >= 1, got {s}")
    if jmax is None:
        jmax = s
    out = np.zeros((s, jmax))
    for g in range(s):
        for j in range(1, jmax + 1):
            out[g, j - 1] = _t_entry(g, j)
    return out


def _t_entry(g: int, j: int) -> float:
    return (1 - (-1) ** (g + j)) / ((g + j) * 2 ** (g + j))


def gauss_legendre(s: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the s-point Gauss-Legendre rule on [-1, 1].

    The rule is validated on load: it must integrate monomials up to degree
    2s - 1 exactly (to 1e-13), which is the property every downstream
    identity relies on.
    """
    if not 1 <= s <= 6:
        raise ValueError(f"s must be in 1..6, got {s}")
    nodes, weights = np.polynomial.legendre.leggauss(s)
    for g in range(2 * s):
        exact = 2.0 / (g + 1) if g % 2 == 0 else 0.0
        got = float(np.dot(weights, nodes ** g))
        if abs(got - exact) > _QUADRATURE_ATOL:
            raise AssertionError(
                f"Gauss-Legendre rule s={s} fails moment {g}: {got} vs {exact}")
    return nodes, weights


@dataclass(frozen=True, eq=False)
class TransformMatrices:
    """The three coefficient maps for a given s, built once and cached.

    T maps averaged -> graded, R = T^{-1}, Q maps averaged -> quadrature
    (already carrying the w_k c_k^g / 2^(g+1) scaling).
    """

    s: int
    T: np.ndarray
    R: np.ndarray
    Q: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=8)
def transform_matrices(s: int) -> TransformMatrices:
    t = t_matrix(s)
    r = np.linalg.inv(t)
    nodes, weights = gauss_legendre(s)
    q = np.array([[weights[k] * nodes[k] ** g / 2 ** (g + 1)
                   for k in range(s)] for g in range(s)])
    # the rule integrates constants exactly: Q @ 1 = T[:, 0], so R Q 1 = e_1
    if not np.allclose(q @ np.ones(s), t[:, 0], atol=_QUADRATURE_ATOL):
        raise AssertionError(f"quadrature map fails the constant moment at s={s}")
    if not np.allclose(r @ t, np.eye(s), atol=1e-12):
        raise AssertionError(f"T inversion failed at s={s}")
    return TransformMatrices(s=s, T=t, R=r, Q=q, nodes=nodes, weights=weights)


def z_from_y(y: np.ndarray) -> np.ndarray:
    """Quadrature-node coefficients z = y @ Q for averaged-basis rows y."""
    ymat = np.atleast_2d(np.asarray(y, dtype=float))
    return ymat @ transform_matrices(ymat.shape[1]).Q


def split_maps(a_mat: np.ndarray, b_mat: np.ndarray, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature-node coefficients (rho, sigma) for a split scheme given in
    the graded basis.

    ``a_mat`` and ``b_mat`` hold the graded coefficients of the T- and
    V-family exponentials (one row per exponential, columns j = 1..s);
    the returned rows satisfy rho = a_mat @ R @ Q and sigma = b_mat @ R @ Q.
    """
    tm = transform_matrices(s)
    a = np.atleast_2d(np.asarray(a_mat, dtype=float))
    b = np.atleast_2d(np.asarray(b_mat, dtype=float))
    if a.shape[1] != s or b.shape[1] != s:
        raise ValueError(f"coefficient rows must have s={s} columns")
    return a @ tm.R @ tm.Q, b @ tm.R @ tm.Q


def xbar(y_row: np.ndarray, j: int) -> float:
    """Extended-basis coefficient xbar_j = sum_g y_g T[g, j] for one row,
    defined for every j >= 1 (not only j <= s)."""
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    row = np.asarray(y_row, dtype=float).ravel()
    return float(sum(row[g] * _t_entry(g, j) for g in range(row.size)))


def _xbar_tail_bound(y_rows: np.ndarray, j: int) -> float:
    """max_i sum_g |y_{i,g}| |T[g, j']| <= (2^(1-j)/j) max_i sum_g |y_{i,g}|
    for every j' >= j (the bound is decreasing in j)."""
    biggest_row = float(np.abs(y_rows).sum(axis=1).max())
    return 2.0 ** (1 - j) / j * biggest_row


def compute_cbar(scheme: "CFQMScheme", c: float) -> float:
    """The constant cbar = c * max_{i,j} |xbar_{i,j}| entering the
    product-vs-truncation bound, maximized over all j >= 1.

    The scan runs j = 1..4s and is then extended until the analytic tail
    bound on the remaining |xbar| values drops below the current maximum,
    so the result is certified rather than truncated.
    """
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if scheme.is_split:
        rows = np.vstack([scheme.y_rho, scheme.y_sigma])
    else:
        rows = scheme.y
    best = 0.0
    j_scanned = 0
    j_limit = 4 * scheme.s
    while True:
        for j in range(j_scanned + 1, j_limit + 1):
            for i in range(rows.shape[0]):
                best = max(best, abs(xbar(rows[i], j)))
        j_scanned = j_limit
        if _xbar_tail_bound(rows, j_scanned + 1) <= best:
            break
        j_limit = 2 * j_scanned
    return c * best


@dataclass(frozen=True, eq=False)
class CFQMScheme:
    """One commutator-free quasi-Magnus scheme, as loaded from its data file.

    Non-split schemes carry y (averaged basis) and the derived z; split
    schemes carry the node coefficients rho/sigma of the two exponential
    families plus the averaged-basis rows y_rho/y_sigma recovered through
    the inverse quadrature map.  ``m`` counts stages: m exponentials for a
    non-split scheme, 2m - 1 nontrivial exponentials for a split one (the
    last sigma row is zero).
    """

    scheme_id: str
    s: int
    m: int
    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    rho: np.ndarray | None = None
    sigma: np.ndarray | None = None
    y_rho: np.ndarray | None = None
    y_sigma: np.ndarray | None = None

    @property
    def is_split(self) -> bool:
        return self.kind == "split"

    @property
    def order(self) -> int:
        return 2 * self.s


def parse_scheme_text(text: str, *, source: str = "<string>") -> CFQMScheme:
    """Parse a scheme data file.

    Grammar (``#`` starts a comment, blank lines ignored)::

        scheme <id> s=<s> m=<m> kind=<non-split|split>
        y <g0> <g1> ...          # m rows, non-split
        rho <k1> <k2> ...        # m rows, split
        sigma <k1> <k2> ...      # m rows, split

    All parsed schemes are validated: the graded coefficients must satisfy
    the time-antisymmetry x[m+1-i, j] = (-1)^(j+1) x[i, j] (per family for
    split schemes, whose sigma rows close with a zero row), and the node
    coefficients of a non-split scheme must equal y @ Q.
    """
    header = None
    rows: dict[str, list[list[float]]] = {"y": [], "rho": [], "sigma": []}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "scheme":
            if header is not None:
                raise DataIntegrityError(f"{source}:{lineno}: duplicate scheme header")
            if len(parts) != 5:
                raise DataIntegrityError(
                    f"{source}:{lineno}: header needs 'scheme <id> s= m= kind='")
            fields = {}
            for item in parts[2:]:
                key, _, value = item.partition("=")
                fields[key] = value
            try:
                header = (parts[1], int(fields["s"]), int(fields["m"]), fields["kind"])
            except (KeyError, ValueError) as exc:
                raise DataIntegrityError(f"{source}:{lineno}: bad header: {exc}") from exc
        elif parts[0] in rows:
            try:
                rows[parts[0]].append([float(tok) for tok in parts[1:]])
            except ValueError as exc:
                raise DataIntegrityError(f"{source}:{lineno}: bad number: {exc}") from exc
        else:
            raise DataIntegrityError(f"{source}:{lineno}: unknown directive {parts[0]!r}")
    if header is None:
        raise DataIntegrityError(f"{source}: missing scheme header")
    scheme_id, s, m, kind = header
    if kind not in ("non-split", "split"):
        raise DataIntegrityError(f"{source}: kind must be non-split or split, got {kind!r}")
    if not 1 <= s <= 6 or m < 1:
        raise DataIntegrityError(f"{source}: implausible sizes s={s}, m={m}")
    tm = transform_matrices(s)

    def as_matrix(name: str, expected_rows: int) -> np.ndarray:
        data = rows[name]
        if len(data) != expected_rows:
            raise DataIntegrityError(
                f"{source}: expected {expected_rows} {name} rows, got {len(data)}")
        if any(len(r) != s for r in data):
            raise DataIntegrityError(f"{source}: every {name} row needs {s} entries")
        mat = np.array(data, dtype=float)
        if not np.all(np.isfinite(mat)):
            raise DataIntegrityError(f"{source}: non-finite {name} entry")
        return mat

    if kind == "non-split":
        if rows["rho"] or rows["sigma"]:
            raise DataIntegrityError(f"{source}: non-split scheme with rho/sigma rows")
        y = as_matrix("y", m)
        scheme = CFQMScheme(scheme_id=scheme_id, s=s, m=m, kind=kind,
                            nodes=tm.nodes, weights=tm.weights,
                            y=y, z=y @ tm.Q)
    else:
        if rows["y"]:
            raise DataIntegrityError(f"{source}: split scheme with y rows")
        rho = as_matrix("rho", m)
        sigma = as_matrix("sigma", m)
        q_inv = np.linalg.inv(tm.Q)
        scheme = CFQMScheme(scheme_id=scheme_id, s=s, m=m, kind=kind,
                            nodes=tm.nodes, weights=tm.weights,
                            rho=rho, sigma=sigma,
                            y_rho=rho @ q_inv, y_sigma=sigma @ q_inv)
    _validate_scheme(scheme, source)
    return scheme


def _check_antisymmetry(x: np.ndarray, label: str, source: str) -> None:
    m = x.shape[0]
    for i in range(m):
        for j in range(1, x.shape[1] + 1):
            want = (-1) ** (j + 1) * x[i, j - 1]
            got = x[m - 1 - i, j - 1]
            if abs(got - want) > _ANTISYMMETRY_ATOL:
                raise DataIntegrityError(
                    f"{source}: {label} rows are not time-antisymmetric at "
                    f"(i={i + 1}, j={j}): {got} vs {want}")


def _validate_scheme(scheme: CFQMScheme, source: str) -> None:
    tm = transform_matrices(scheme.s)
    if scheme.is_split:
        sigma_last = np.abs(scheme.sigma[-1]).max()
        if sigma_last > _ANTISYMMETRY_ATOL:
            raise DataIntegrityError(
                f"{source}: split scheme must end on a zero sigma row, "
                f"max |sigma_m| = {sigma_last}")
        _check_antisymmetry(scheme.y_rho @ tm.T, "rho", source)
        _check_antisymmetry(scheme.y_sigma[:-1] @ tm.T, "sigma", source)
    else:
        _check_antisymmetry(scheme.y @ tm.T, "y", source)
        if not np.allclose(scheme.z, scheme.y @ tm.Q, atol=1e-12):
            raise DataIntegrityError(f"{source}: node coefficients disagree with y @ Q")


@lru_cache(maxsize=None)
def load_scheme(scheme_id: str) -> CFQMScheme:
    """Load a shipped scheme by identifier (see ``SCHEME_IDS``)."""
    if scheme_id not in SCHEME_IDS:
        raise SchemeLookupError(
            f"unknown scheme {scheme_id!r}; available: {', '.join(SCHEME_IDS)}")
    filename = scheme_id.lower() + ".txt"
    text = resources.files("cfqm.data").joinpath(filename).read_text()
    scheme = parse_scheme_text(text, source=filename)
    if scheme.scheme_id != scheme_id:
        raise DataIntegrityError(
            f"{filename}: header id {scheme.scheme_id!r} does not match {scheme_id!r}")
    return scheme


def slope_window(s: int) -> tuple[float, float]:
    """Accepted window for the measured convergence slope of an order-2s
    scheme: the ideal 2s+1 minus 0.15 (noise) and plus 0.3 (superconvergence
    at finite h)."""
    return 2 * s + 1 - 0.15, 2 * s + 1 + 0.3


def verify_order(scheme: CFQMScheme, model, h_grid, t0: float = 0.0,
                 reference_tol: float = 1e-12) -> float:
    """Measured convergence slope of single-step errors over ``h_grid``.

    For each h the scheme's one-step propagator (with exact exponentials)
    is compared against a converged midpoint reference, and the slope of
    log(error) against log(h) is fit by least squares.  Raises
    :class:`GridTooFineError` when any error sits below 1e-13 (roundoff
    floor, no slope is trustworthy) and :class:`AsymptoticRegimeError` when
    the errors fail to increase monotonically with h.
    """
    from . import propagators

    hs = np.sort(np.asarray(h_grid, dtype=float))
    if hs.size < 2:
        raise ValueError("need at least two grid points")
    if hs[0] <= 0:
        raise ValueError("step sizes must be positive")
    errs = np.empty_like(hs)
    for idx, h in enumerate(hs):
        if scheme.is_split:
            step = propagators.split_step(scheme, model, t0, h)
        else:
            step = propagators.cfqm_step(scheme, model, t0, h)
        ref = propagators.reference_propagator(model, t0, t0 + h, reference_tol)
        errs[idx] = propagators.spectral_distance(step, ref)
    if errs.min() < 1e-13:
        raise GridTooFineError(
            f"smallest step error {errs.min():.3e} is at roundoff level; "
            f"use larger steps")
    if not np.all(np.diff(errs) > 0):
        raise AsymptoticRegimeError(
            f"step errors are not monotone over the grid: {errs.tolist()}")
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    return float(slope)
