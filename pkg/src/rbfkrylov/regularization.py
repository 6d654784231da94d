"""Tikhonov parameter selection for small projected least-squares problems.

Both solvers reduce their regularization step to

    min_y ||B y - beta e1||^2 + lam ||y||^2

with a tall (m+1) x m projected matrix B.  The GCV score of a candidate lam is
evaluated from the SVD ``B = U diag(s) V^T`` as

    GCV(lam) = sum_i (g_i / (s_i^2 + lam))^2  /  (sum_i 1/(s_i^2 + lam))^2

with ``g = beta U^T e1`` over the m spectral modes (the residual component
outside the range of B is excluded from the score).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRID_POINTS = 200
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GcvSpectrum:
    """SVD data of a projected matrix: singular values (descending) and the
    rotated right-hand side ``gtilde = beta * U^T e1``."""

    singular_values: np.ndarray
    gtilde: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.singular_values, dtype=np.float64)
        g = np.asarray(self.gtilde, dtype=np.float64)
        if s.ndim != 1 or s.shape != g.shape:
            raise ValueError("singular values and gtilde must be 1-D and equally long")
        if (np.diff(s) > 0).any() or (s < 0).any():
            raise ValueError("singular values must be nonnegative and descending")
        object.__setattr__(self, "singular_values", s)
        object.__setattr__(self, "gtilde", g)


def spectrum_of(projected, beta: float) -> GcvSpectrum:
    """Thin SVD of the projected matrix, packaged for GCV evaluation."""
    projected = np.atleast_2d(np.asarray(projected, dtype=np.float64))
    u, s, _ = np.linalg.svd(projected, full_matrices=False)
    return GcvSpectrum(s, beta * u[0, :])


def gcv_value(spec: GcvSpectrum, lam: float) -> float:
    """GCV score at regularization weight ``lam > 0``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    denom = spec.singular_values ** 2 + lam
    num = np.sum((spec.gtilde / denom) ** 2)
    den = np.sum(1.0 / denom) ** 2
    return float(num / den)


def _lambda_grid(s: np.ndarray) -> np.ndarray:
    smax2 = s[0] ** 2
    lo = max(s[-1] ** 2, 1e-16 * smax2)
    hi = smax2
    if lo >= hi:
        return np.array([hi])
    return np.geomspace(lo, hi, GRID_POINTS)


def _golden_minimize(fn, lo: float, hi: float, iters: int = 80):
    """Golden-section minimum of fn over log-lambda in [lo, hi]."""
    a, b = np.log(lo), np.log(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(np.exp(c)), fn(np.exp(d))
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(np.exp(d))
    x = np.exp((a + b) / 2.0)
    return x, fn(x)


def gcv_minimize(projected, beta: float):
    """Minimize the GCV score over a 200-point log grid in
    ``[max(smin^2, 1e-16 smax^2), smax^2]`` with golden-section refinement
    around the best grid point.  Returns ``(lam, value)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    spec = spectrum_of(projected, beta)
    s = spec.singular_values
    if s[0] == 0.0:
        raise ValueError("projected matrix is zero; GCV undefined")
    grid = _lambda_grid(s)
    values = np.array([gcv_value(spec, lam) for lam in grid])
    best = int(np.argmin(values))
    lam, val = grid[best], values[best]
    if len(grid) > 1:
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, len(grid) - 1)]
        if hi > lo:
            lam_ref, val_ref = _golden_minimize(lambda x: gcv_value(spec, x), lo, hi)
            if val_ref < val:
                lam, val = lam_ref, val_ref
    return float(lam), float(val)


def _projected_residual(spec: GcvSpectrum, beta: float, lam: float) -> float:
    """||B y_lam - beta e1|| for the Tikhonov minimizer at weight lam."""
    s2 = spec.singular_values ** 2
    out_of_range = max(beta ** 2 - float(np.sum(spec.gtilde ** 2)), 0.0)
    in_range = np.sum((lam * spec.gtilde / (s2 + lam)) ** 2)
    return float(np.sqrt(in_range + out_of_range))


def discrepancy_select(projected, beta: float, noise_level: float,
                       safety: float = 1.01) -> float:
    """Regularization weight at which the projected residual equals
    ``safety * noise_level * beta``, located by bisection on log lambda.

    Saturated targets (>= beta) return the upper bracket; unattainable targets
    (below the residual at lam -> 0) return the lower bracket.
    """
    if noise_level <= 0:
        raise ValueError("noise level must be positive")
    spec = spectrum_of(projected, beta)
    s = spec.singular_values
    if s[0] == 0.0:
        raise ValueError("projected matrix is zero")
    lo = 1e-16 * s[0] ** 2
    hi = 1e16 * s[0] ** 2
    target = safety * noise_level * beta
    r_lo = _projected_residual(spec, beta, lo)
    r_hi = _projected_residual(spec, beta, hi)
    assert r_hi >= r_lo, "projected residual must be non-decreasing in lambda"
    if target >= r_hi:
        return float(hi)
    if target <= r_lo:
        return float(lo)
    a, b = np.log(lo), np.log(hi)
    for _ in range(200):
        mid = (a + b) / 2.0
        if _projected_residual(spec, beta, np.exp(mid)) < target:
            a = mid
        else:
            b = mid
    return float(np.exp((a + b) / 2.0))
