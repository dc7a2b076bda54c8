"""B-spline bases, least-squares spline regression, and plug-in variance formulas.

The regression step fits each state dimension of a noisy time series by ordinary
least squares on a shared B-spline basis.  The basis lives on an arbitrary
interval ``[t_lo, t_hi]``; interior knots are simple and strictly inside the
interval, and the endpoint knots are repeated ``order`` times so the basis is
clamped.  Evaluation uses the two-term recurrence with the usual 0/0 = 0
convention, half-open spans, and the last nonempty span closed on the right so
the basis still sums to one at ``t_hi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DerivativeOrderError,
    EmptyInputError,
    InvalidKnotsError,
    OutOfDomainError,
)

# Relative singular-value cutoff for every pseudoinverse / least-squares solve.
SV_CUTOFF = 1e-12


@dataclass(frozen=True)
class KnotSequence:
    """Interval, simple interior knots, and spline order (degree + 1).

    Immutable after construction; instances can be shared across threads.
    """

    interval: tuple[float, float]
    interior_knots: tuple[float, ...]
    order: int = 4

    def __post_init__(self):
        lo, hi = self.interval
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise InvalidKnotsError(f"interval must satisfy t_lo < t_hi, got {self.interval}")
        if self.order < 2:
            raise InvalidKnotsError(f"order must be >= 2, got {self.order}")
        ks = np.asarray(self.interior_knots, dtype=float)
        if ks.size:
            if np.any(np.diff(ks) <= 0.0):
                raise InvalidKnotsError("interior knots must be strictly increasing")
            if ks[0] <= lo or ks[-1] >= hi:
                raise InvalidKnotsError("interior knots must lie strictly inside the interval")
        object.__setattr__(self, "interval", (float(lo), float(hi)))
        object.__setattr__(self, "interior_knots", tuple(float(k) for k in ks))

    @property
    def num_interior(self) -> int:
        return len(self.interior_knots)

    @property
    def breakpoints(self) -> np.ndarray:
        lo, hi = self.interval
        return np.concatenate(([lo], self.interior_knots, [hi]))

    @property
    def mesh(self) -> float:
        """Largest spacing between adjacent breakpoints."""
        return float(np.max(np.diff(self.breakpoints)))


def augment_knots(knots: KnotSequence) -> np.ndarray:
    """Augmented knot vector: each endpoint repeated ``order`` times.

    Length is ``num_interior + 2 * order``.
    """
    lo, hi = knots.interval
    k = knots.order
    return np.concatenate((np.full(k, lo), knots.interior_knots, np.full(k, hi)))


@dataclass(frozen=True)
class BSplineBasis:
    """B-spline basis of dimension ``num_interior + order`` on a knot sequence."""

    knots: KnotSequence

    @property
    def dimension(self) -> int:
        return self.knots.num_interior + self.knots.order

    @property
    def interval(self) -> tuple[float, float]:
        return self.knots.interval

    @property
    def augmented(self) -> np.ndarray:
        return augment_knots(self.knots)


def _check_domain(interval: tuple[float, float], ts: np.ndarray) -> None:
    lo, hi = interval
    if ts.size and (ts.min() < lo or ts.max() > hi):
        raise OutOfDomainError(
            f"evaluation points must lie in [{lo}, {hi}], got range [{ts.min()}, {ts.max()}]"
        )


def _indicator_columns(tau: np.ndarray, ts: np.ndarray, hi: float) -> np.ndarray:
    # Order-1 basis: half-open span indicators, with the last nonempty span
    # closed at hi so the partition of unity extends to the right endpoint.
    cols = ((ts[:, None] >= tau[None, :-1]) & (ts[:, None] < tau[None, 1:])).astype(float)
    at_hi = ts == hi
    if np.any(at_hi):
        nonempty = np.nonzero(tau[1:] > tau[:-1])[0]
        cols[at_hi, :] = 0.0
        if nonempty.size:
            cols[at_hi, nonempty[-1]] = 1.0
    return cols


def _basis_columns(tau: np.ndarray, order: int, ts: np.ndarray, hi: float) -> np.ndarray:
    """Values of all order-``order`` B-splines on ``tau``; shape (len(ts), len(tau)-order)."""
    cols = _indicator_columns(tau, ts, hi)
    for kp in range(2, order + 1):
        nfun = len(tau) - kp
        d1 = tau[kp - 1 : kp - 1 + nfun] - tau[:nfun]
        d2 = tau[kp : kp + nfun] - tau[1 : 1 + nfun]
        # 0/0 = 0 convention on repeated knots
        left = np.where(d1 > 0.0, (ts[:, None] - tau[None, :nfun]) / np.where(d1 > 0.0, d1, 1.0), 0.0)
        right = np.where(d2 > 0.0, (tau[None, kp : kp + nfun] - ts[:, None]) / np.where(d2 > 0.0, d2, 1.0), 0.0)
        cols = left * cols[:, :nfun] + right * cols[:, 1 : nfun + 1]
    return cols


def _derivative_columns(tau: np.ndarray, order: int, ts: np.ndarray, hi: float, r: int) -> np.ndarray:
    if r == 0:
        return _basis_columns(tau, order, ts, hi)
    lower = _derivative_columns(tau, order - 1, ts, hi, r - 1)
    nfun = len(tau) - order
    d1 = tau[order - 1 : order - 1 + nfun] - tau[:nfun]
    d2 = tau[order : order + nfun] - tau[1 : 1 + nfun]
    c1 = np.where(d1 > 0.0, (order - 1) / np.where(d1 > 0.0, d1, 1.0), 0.0)
    c2 = np.where(d2 > 0.0, (order - 1) / np.where(d2 > 0.0, d2, 1.0), 0.0)
    return c1[None, :] * lower[:, :nfun] - c2[None, :] * lower[:, 1 : nfun + 1]


def eval_basis(basis: BSplineBasis, t) -> np.ndarray:
    """All basis function values at ``t``.

    Scalar ``t`` gives a vector of length ``basis.dimension``; an array of m
    points gives an (m, dimension) matrix.
    """
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    _check_domain(basis.interval, ts)
    out = _basis_columns(basis.augmented, basis.knots.order, ts, basis.interval[1])
    return out[0] if np.ndim(t) == 0 else out


def eval_basis_derivative(basis: BSplineBasis, t, r: int = 1) -> np.ndarray:
    """r-th derivative of every basis function at ``t`` (left limit at t_hi)."""
    k = basis.knots.order
    if not 1 <= r < k:
        raise DerivativeOrderError(f"derivative order must satisfy 1 <= r < {k}, got {r}")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    _check_domain(basis.interval, ts)
    out = _derivative_columns(basis.augmented, k, ts, basis.interval[1], r)
    return out[0] if np.ndim(t) == 0 else out


def design_matrix(basis: BSplineBasis, times: Sequence[float]) -> np.ndarray:
    """n x dimension matrix of basis values at the observation times."""
    ts = np.asarray(times, dtype=float)
    if ts.size == 0:
        raise EmptyInputError("design matrix needs at least one observation time")
    _check_domain(basis.interval, ts)
    return _basis_columns(basis.augmented, basis.knots.order, ts, basis.interval[1])


@dataclass(frozen=True)
class SplineFit:
    """Least-squares spline fit of a (possibly multivariate) time series.

    coefficients has one row per state dimension.  residual_variance is the
    per-dimension RSS / (n - K) estimate (zeros when n <= K).  rank_deficient
    flags a design matrix whose numerical rank fell below the basis dimension;
    the minimum-norm solution is stored in that case.
    """

    basis: BSplineBasis
    coefficients: np.ndarray
    residual_variance: np.ndarray
    times: np.ndarray
    rank_deficient: bool = False

    @property
    def dim(self) -> int:
        return self.coefficients.shape[0]


def fit_least_squares(basis: BSplineBasis, times, observations) -> SplineFit:
    """Fit every column of ``observations`` on the shared basis by least squares.

    observations is (n,) or (n, d).  All dimensions share the design matrix, so
    the normal equations are solved once (SVD of the design, relative cutoff
    1e-12, minimum-norm solution on rank deficiency).
    """
    ts = np.asarray(times, dtype=float)
    ys = np.asarray(observations, dtype=float)
    if ys.ndim == 1:
        ys = ys[:, None]
    if ts.size == 0 or ys.size == 0:
        raise EmptyInputError("fit_least_squares needs nonempty times and observations")
    if ys.shape[0] != ts.size:
        raise ValueError(f"times ({ts.size}) and observations ({ys.shape[0]}) disagree")
    if np.any(np.diff(ts) < 0):
        raise ValueError("observation times must be nondecreasing")
    design = design_matrix(basis, ts)
    n, kdim = design.shape
    coef, _, rank, _ = np.linalg.lstsq(design, ys, rcond=SV_CUTOFF)
    resid = ys - design @ coef
    dof = n - kdim
    if dof > 0:
        sigma2 = np.sum(resid**2, axis=0) / dof
    else:
        sigma2 = np.zeros(ys.shape[1])
    return SplineFit(
        basis=basis,
        coefficients=coef.T.copy(),
        residual_variance=sigma2,
        times=ts.copy(),
        rank_deficient=rank < kdim,
    )


def eval_fit(fit: SplineFit, t) -> np.ndarray:
    """Fitted path at ``t``: (d,) for scalar t, (m, d) for an array."""
    return eval_basis(fit.basis, t) @ fit.coefficients.T


def eval_fit_derivative(fit: SplineFit, t, r: int = 1) -> np.ndarray:
    """r-th derivative of the fitted path at ``t``."""
    return eval_basis_derivative(fit.basis, t, r) @ fit.coefficients.T


def _normal_matrix_pinv(fit: SplineFit) -> np.ndarray:
    """Pseudoinverse of design' * design via the design's SVD (cutoff 1e-12)."""
    design = design_matrix(fit.basis, fit.times)
    _, sv, vt = np.linalg.svd(design, full_matrices=False)
    keep = sv > SV_CUTOFF * sv[0]
    inv2 = np.zeros_like(sv)
    inv2[keep] = 1.0 / sv[keep] ** 2
    return (vt.T * inv2) @ vt


def pointwise_variance(fit: SplineFit, t) -> np.ndarray:
    """Plug-in variance of the fitted value at ``t``, one entry per dimension.

    Var x-hat_i(t) = sigma2_i * B(t)' (design'design)^+ B(t). A scalar ``t``
    gives a (d,) vector, an array of m times an (m, d) array, matching
    eval_fit.
    """
    bvec = eval_basis(fit.basis, t)
    quad = np.einsum("...k,kl,...l->...", bvec, _normal_matrix_pinv(fit), bvec)
    return np.asarray(quad)[..., None] * fit.residual_variance


@dataclass(frozen=True)
class LinearFunctional:
    """Integral functional x -> integral of a(s)' x(s) ds over an interval.

    weight_path maps an array of m times to an (m, d) array (or a scalar time
    to a (d,) vector).
    """

    interval: tuple[float, float]
    weight_path: Callable

    def value(self, path: Callable, num_nodes: int = 4097) -> float:
        """Apply the functional to a path by composite trapezoid quadrature."""
        ts = np.linspace(self.interval[0], self.interval[1], num_nodes)
        a = np.atleast_2d(np.asarray(self.weight_path(ts), dtype=float))
        x = np.atleast_2d(np.asarray(path(ts), dtype=float))
        return float(np.trapezoid(np.sum(a * x, axis=1), ts))


def _span_refined_grid(knots: KnotSequence, per_span: int = 64) -> np.ndarray:
    """Breakpoint-aware grid with ``per_span`` trapezoid cells per span."""
    bps = knots.breakpoints
    pieces = [np.linspace(bps[i], bps[i + 1], per_span + 1) for i in range(len(bps) - 1)]
    return np.unique(np.concatenate(pieces))


def functional_coefficients(fit: SplineFit, functional: LinearFunctional, per_span: int = 64) -> np.ndarray:
    """gamma = integral of B(s) a(s)' ds, shape (K, d); trapezoid on a knot-aware grid."""
    grid = _span_refined_grid(fit.basis.knots, per_span)
    bvals = eval_basis(fit.basis, grid)
    avals = np.atleast_2d(np.asarray(functional.weight_path(grid), dtype=float))
    # integrate each product column over the grid
    return np.trapezoid(bvals[:, :, None] * avals[:, None, :], grid, axis=0)


def functional_variance(fit: SplineFit, functional: LinearFunctional, per_span: int = 64) -> np.ndarray:
    """Plug-in variance matrix of the functional applied to the fit, d x d diagonal.

    Entry (i, i) is sigma2_i * gamma_i' (design'design)^+ gamma_i where gamma_i
    integrates basis * a_i.
    """
    gamma = functional_coefficients(fit, functional, per_span)
    pinv = _normal_matrix_pinv(fit)
    quad = np.einsum("ki,kl,li->i", gamma, pinv, gamma)
    return np.diag(fit.residual_variance * quad)


def gram_matrices(basis: BSplineBasis, times) -> tuple[np.ndarray, np.ndarray]:
    """Empirical and theoretical Gram matrices of the basis.

    Empirical: (1/n) design' design at the observation times.  Theoretical:
    integral of B B' against the uniform distribution on the interval,
    computed span by span with an ``order``-point Gauss-Legendre rule (exact for
    the degree 2*(order-1) integrand).
    """
    design = design_matrix(basis, times)
    emp = design.T @ design / design.shape[0]

    k = basis.knots.order
    nodes, weights = np.polynomial.legendre.leggauss(k)
    bps = basis.knots.breakpoints
    lo, hi = basis.interval
    theo = np.zeros((basis.dimension, basis.dimension))
    for a, b in zip(bps[:-1], bps[1:]):
        half = 0.5 * (b - a)
        ts = 0.5 * (a + b) + half * nodes
        bv = eval_basis(basis, ts)
        theo += half * (bv.T * weights) @ bv
    return emp, theo / (hi - lo)


def truncated_power_design(interval: tuple[float, float], interior_knots, order: int, times) -> np.ndarray:
    """Design matrix of the truncated power basis 1, t, .., t^(k-1), (t-xi_j)_+^(k-1).

    Spans the same space as the B-spline basis on the same knots but is much
    worse conditioned; exposed for cross-checks.
    """
    ts = np.asarray(times, dtype=float)
    _check_domain(interval, ts)
    ks = np.asarray(interior_knots, dtype=float)
    poly = ts[:, None] ** np.arange(order)[None, :]
    if ks.size:
        trunc = np.clip(ts[:, None] - ks[None, :], 0.0, None) ** (order - 1)
        return np.hstack([poly, trunc])
    return poly
