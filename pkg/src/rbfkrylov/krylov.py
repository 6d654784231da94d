"""Einstein-product Krylov processes and the two regularized solvers.

Both solvers are matrix-free: the operator argument is any object exposing
``shape`` (3-tuple of extents), ``apply(x)`` and ``apply_transpose(x)`` on
order-3 tensors, and both are exactly the classical matrix algorithms applied
to the flattened operator -- whole tensors play the role of vectors, with the
trace inner product in place of the dot product.

* ``etga``: global Arnoldi process producing an orthonormal slice stack V and
  an upper Hessenberg factor H with ``op * V_j = sum_i H[i, j] V_i``.
* ``ggkb``: global Golub-Kahan bidiagonalization producing two orthonormal
  stacks P (seeded with the right-hand side) and Q, with

      op   * Q_j = rho_j P_j + sigma_{j+1} P_{j+1}
      op^T * P_j = rho_j Q_j + sigma_j   Q_{j-1}

* ``gmres_tikhonov``: restarted global GMRES where each restart solves the
  projected Tikhonov problem ``min ||H y - beta e1||^2 + lam ||y||^2``.
* ``lsqr_tikhonov``: global LSQR growing the bidiagonalization one step at a
  time, solving ``min ||C y - sigma1 e1||^2 + lam ||y||^2`` after each step.

The regularization weight ``lam`` multiplies ``||y||^2`` in both reduced
problems and is chosen per cycle/step by GCV, a fixed value, or the
discrepancy principle.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .regularization import discrepancy_select, gcv_minimize
from .tensor_core import SliceStack, fro_norm, inner, mode4_vecmul

# A generated norm counts as an exact breakdown below this multiple of the
# (unit) basis-slice scale.
BREAKDOWN_TOL = 1e-14

# A second reorthogonalization pass fires when orthogonalization removed more
# than this fraction of a new slice's norm.  One pass always runs: the plain
# recurrences lose orthogonality on ill-conditioned operators, and a single
# triggered pass is not enough to hold the basis orthonormal near 1e-14.
REORTH_THRESHOLD = 0.7


def _reorthogonalize(w, basis, norm_before):
    """One classical reorthogonalization pass against the whole basis, with a
    second pass when cancellation ate most of the slice's norm."""
    for s in basis:
        w = w - inner(s, w) * s
    norm_after = fro_norm(w)
    if norm_after < REORTH_THRESHOLD * norm_before:
        for s in basis:
            w = w - inner(s, w) * s
        norm_after = fro_norm(w)
    return w, norm_after


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver knobs.

    ``restart`` is the Arnoldi cycle length (GMRES only); ``tau`` the
    relative-change stopping tolerance on successive iterates; ``tol`` the
    relative-residual stopping tolerance; ``maxit`` the maximum number of
    outer iterations (restart cycles for GMRES, bidiagonalization steps for
    LSQR).  ``mu_strategy`` is one of ``gcv``, ``fixed`` or ``discrepancy``;
    ``mu_param`` holds the fixed weight or the discrepancy noise level.
    """

    restart: int = 10
    tau: float = 1e-12
    tol: float = 1e-12
    maxit: int = 20
    mu_strategy: str = "gcv"
    mu_param: float = 0.0

    def __post_init__(self):
        if self.restart < 1 or self.maxit < 1:
            raise ValueError("restart and maxit must be >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.mu_strategy not in ("gcv", "fixed", "discrepancy"):
            raise ValueError(f"unknown mu strategy {self.mu_strategy!r}")
        if self.mu_strategy == "fixed" and self.mu_param < 0:
            raise ValueError("fixed regularization weight must be nonnegative")
        if self.mu_strategy == "discrepancy" and not self.mu_param > 0:
            raise ValueError("discrepancy strategy needs a positive noise level")


@dataclass
class SolveReport:
    """Outcome of a solver run; histories have one entry per outer iteration."""

    solution: np.ndarray
    outer_iterations: int
    inner_steps: int
    mu_history: np.ndarray
    residual_history: np.ndarray
    relchange_history: np.ndarray
    wall_time: float
    termination: str


@dataclass
class ArnoldiDecomposition:
    """Orthonormal slice stack and Hessenberg factor from the global Arnoldi
    process; on breakdown the stack and factor are truncated and flagged."""

    basis: SliceStack
    h: np.ndarray
    breakdown: bool = False


@dataclass
class BidiagFactor:
    """Lower-bidiagonal data from global Golub-Kahan: ``rho`` holds the m
    diagonal entries, ``sigma`` the m subdiagonal entries (the leading norm
    sigma_1 = ||f|| is kept by the caller)."""

    rho: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.rho.shape != self.sigma.shape:
            raise ValueError("rho and sigma must have equal length")

    def c_m(self) -> np.ndarray:
        m = len(self.rho)
        c = np.diag(self.rho)
        for j in range(m - 1):
            c[j + 1, j] = self.sigma[j]
        return c

    def c_tilde(self) -> np.ndarray:
        m = len(self.rho)
        ct = np.zeros((m + 1, m))
        ct[:m, :] = self.c_m()
        ct[m, m - 1] = self.sigma[m - 1]
        return ct


@dataclass
class GgkbDecomposition:
    q_basis: SliceStack
    p_basis: SliceStack
    factor: BidiagFactor
    breakdown: bool = False


def etga(op, v: np.ndarray, m: int) -> ArnoldiDecomposition:
    """Global Arnoldi process: ``m`` steps starting from tensor ``v``.

    Returns an orthonormal stack of ``m + 1`` slices and the ``(m+1) x m``
    Hessenberg factor; an exact breakdown (a vanishing subdiagonal norm)
    returns the shorter factorization with ``breakdown=True``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    beta = fro_norm(v)
    if beta <= 0:
        raise ValueError("Arnoldi start tensor is zero")
    slices = [v / beta]
    h = np.zeros((m + 1, m))
    for j in range(m):
        w = op.apply(slices[j])
        norm_before = fro_norm(w)
        for i in range(j + 1):
            h[i, j] = inner(slices[i], w)
            w = w - h[i, j] * slices[i]
        # one correction pass always, folded into h; second if norm collapsed
        for _ in range(2):
            for i in range(j + 1):
                c = inner(slices[i], w)
                h[i, j] += c
                w = w - c * slices[i]
            norm_after = fro_norm(w)
            if norm_after >= REORTH_THRESHOLD * norm_before:
                break
        h[j + 1, j] = norm_after
        if norm_after <= BREAKDOWN_TOL:
            return ArnoldiDecomposition(SliceStack(slices), h[: j + 2, : j + 1], True)
        slices.append(w / norm_after)
    return ArnoldiDecomposition(SliceStack(slices), h, False)


class _GgkbState:
    """Incremental global Golub-Kahan bidiagonalization of ``op`` seeded with
    ``f``; ``advance`` grows the factorization one step at a time."""

    def __init__(self, op, f):
        self.op = op
        self.sigma1 = fro_norm(f)
        if self.sigma1 <= 0:
            raise ValueError("right-hand side tensor is zero")
        self.p = [f / self.sigma1]
        self.q = []
        self.rho = []
        self.sigma = []
        self.breakdown = False
        w = op.apply_transpose(self.p[0])
        rho1 = fro_norm(w)
        if rho1 <= BREAKDOWN_TOL:
            self.breakdown = True
        else:
            self.rho.append(rho1)
            self.q.append(w / rho1)

    @property
    def steps(self) -> int:
        """Completed steps: sigma entries sigma_2..sigma_{m+1} available."""
        return len(self.sigma)

    def advance(self) -> bool:
        """Extend by one step (grow Q if needed, then P); returns False once a
        vanishing norm stops the recurrence."""
        if self.breakdown:
            return False
        j = self.steps
        if len(self.q) == j:          # grow Q: op^T P_{j+1} - sigma_{j+1} Q_j
            w = self.op.apply_transpose(self.p[j])
            norm_before = fro_norm(w)
            w = w - self.sigma[j - 1] * self.q[j - 1]
            w, rho = _reorthogonalize(w, self.q, norm_before)
            if rho <= BREAKDOWN_TOL:
                self.breakdown = True
                return False
            self.rho.append(rho)
            self.q.append(w / rho)
        w = self.op.apply(self.q[j])  # grow P: op Q_{j+1} - rho_{j+1} P_{j+1}
        norm_before = fro_norm(w)
        w = w - self.rho[j] * self.p[j]
        w, sig = _reorthogonalize(w, self.p, norm_before)
        self.sigma.append(sig)
        if sig <= BREAKDOWN_TOL:
            self.breakdown = True
            return False
        self.p.append(w / sig)
        return True

    def factor(self) -> BidiagFactor:
        m = self.steps
        return BidiagFactor(np.array(self.rho[:m]), np.array(self.sigma[:m]))


def ggkb(op, f: np.ndarray, m: int) -> GgkbDecomposition:
    """Global Golub-Kahan bidiagonalization: ``m`` steps seeded with ``f``.

    Returns stacks Q (m slices), P (m+1 slices) and the bidiagonal factor; a
    vanishing norm returns the shorter flagged factorization.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    state = _GgkbState(op, f)
    while state.steps < m and state.advance():
        pass
    if not state.q:
        raise ValueError("bidiagonalization broke down before the first step")
    return GgkbDecomposition(SliceStack(state.q), SliceStack(state.p),
                             state.factor(), state.breakdown)


def _solve_stacked(mat: np.ndarray, rhs0: float, lam: float) -> np.ndarray:
    """Minimizer of ``||mat y - rhs0 e1||^2 + lam ||y||^2`` via the stacked
    least-squares form ``[mat; sqrt(lam) I] y = [rhs0 e1; 0]``."""
    rows, cols = mat.shape
    if lam < 0:
        raise ValueError("regularization weight must be nonnegative")
    if lam > 0:
        stacked = np.vstack([mat, np.sqrt(lam) * np.eye(cols)])
        rhs = np.zeros(rows + cols)
    else:
        stacked = mat
        rhs = np.zeros(rows)
    rhs[0] = rhs0
    y, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    return y


def solve_reduced_gmres(h: np.ndarray, beta: float, lam: float) -> np.ndarray:
    """Projected GMRES-Tikhonov solve for the Hessenberg factor ``h``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return _solve_stacked(np.asarray(h, dtype=np.float64), beta, lam)


def solve_reduced_lsqr(factor: BidiagFactor, sigma1: float, lam: float) -> np.ndarray:
    """Projected LSQR-Tikhonov solve for the bidiagonal factor."""
    if not sigma1 > 0:
        raise ValueError("sigma1 must be positive")
    return _solve_stacked(factor.c_tilde(), sigma1, lam)


def _select_lambda(projected: np.ndarray, beta: float, cfg: SolverConfig) -> float:
    if cfg.mu_strategy == "fixed":
        return cfg.mu_param
    if cfg.mu_strategy == "discrepancy":
        return discrepancy_select(projected, beta, cfg.mu_param)
    lam, _ = gcv_minimize(projected, beta)
    return lam


def _relative_change(x_new: np.ndarray, x_old: np.ndarray) -> float:
    denom = fro_norm(x_old)
    if denom == 0.0:
        return np.inf
    return fro_norm(x_new - x_old) / denom


def gmres_tikhonov(op, f: np.ndarray, x0: np.ndarray | None = None,
                   cfg: SolverConfig | None = None, callback=None) -> SolveReport:
    """Restarted global GMRES with per-cycle Tikhonov regularization.

    Each cycle runs the Arnoldi process on the current residual, picks the
    regularization weight per ``cfg.mu_strategy``, solves the projected
    problem and restarts from the updated iterate.  Stops when the relative
    change of successive iterates drops to ``cfg.tau``, the true relative
    residual drops to ``cfg.tol``, or ``cfg.maxit`` cycles are spent.
    """
    cfg = cfg or SolverConfig()
    start = time.perf_counter()
    norm_f = fro_norm(f)
    norm_ref = norm_f if norm_f > 0 else 1.0
    x = np.zeros(tuple(op.shape)) if x0 is None else np.array(x0, dtype=np.float64)
    residual = f - op.apply(x)
    mu_hist, res_hist, change_hist = [], [], []
    inner_steps = 0
    termination = "maxiter"
    if fro_norm(residual) / norm_ref <= cfg.tol:
        termination = "residual"
    else:
        for _ in range(cfg.maxit):
            dec = etga(op, residual, cfg.restart)
            used = dec.h.shape[1]
            inner_steps += used
            beta = fro_norm(residual)
            lam = _select_lambda(dec.h, beta, cfg)
            y = solve_reduced_gmres(dec.h, beta, lam)
            x_new = x + mode4_vecmul(dec.basis.truncate(used), y)
            residual = f - op.apply(x_new)
            res_rel = fro_norm(residual) / norm_ref
            change = _relative_change(x_new, x)
            x = x_new
            mu_hist.append(lam)
            res_hist.append(res_rel)
            change_hist.append(change)
            if callback is not None:
                callback(x)
            if change <= cfg.tau:
                termination = "relchange"
                break
            if res_rel <= cfg.tol:
                termination = "residual"
                break
        else:
            termination = "maxiter"
    return SolveReport(solution=x, outer_iterations=len(mu_hist),
                       inner_steps=inner_steps,
                       mu_history=np.array(mu_hist),
                       residual_history=np.array(res_hist),
                       relchange_history=np.array(change_hist),
                       wall_time=time.perf_counter() - start,
                       termination=termination)


def lsqr_tikhonov(op, f: np.ndarray, cfg: SolverConfig | None = None,
                  callback=None) -> SolveReport:
    """Global LSQR with Tikhonov regularization and step-wise stopping.

    The bidiagonalization grows one step per outer iteration; after each step
    the regularization weight is selected per ``cfg.mu_strategy`` and the
    projected problem is solved.  Stops on the relative-change rule, on the
    projected relative residual reaching ``cfg.tol``, on a recurrence
    breakdown (solved in the spanned subspace), or after ``cfg.maxit`` steps.
    """
    cfg = cfg or SolverConfig(maxit=200)
    start = time.perf_counter()
    state = _GgkbState(op, f)
    mu_hist, res_hist, change_hist = [], [], []
    x_prev = None
    x = np.zeros(tuple(op.shape))
    termination = "maxiter"
    if state.breakdown:   # op^T f vanished: nothing to expand, solution stays 0
        termination = "breakdown"
    else:
        for _ in range(cfg.maxit):
            steps_before = state.steps
            state.advance()
            if state.steps == steps_before:
                # recurrence stopped without new information
                termination = "breakdown"
                break
            factor = state.factor()
            c_tilde = factor.c_tilde()
            lam = _select_lambda(c_tilde, state.sigma1, cfg)
            y = solve_reduced_lsqr(factor, state.sigma1, lam)
            x = mode4_vecmul(SliceStack(state.q[: state.steps]), y)
            rhs = np.zeros(c_tilde.shape[0])
            rhs[0] = state.sigma1
            res_rel = float(np.linalg.norm(c_tilde @ y - rhs)) / state.sigma1
            change = _relative_change(x, x_prev) if x_prev is not None else np.inf
            x_prev = x
            mu_hist.append(lam)
            res_hist.append(res_rel)
            change_hist.append(change)
            if callback is not None:
                callback(x)
            if change <= cfg.tau:
                termination = "relchange"
                break
            if res_rel <= cfg.tol:
                termination = "residual"
                break
            if state.breakdown:
                termination = "breakdown"
                break
        else:
            termination = "maxiter"
    return SolveReport(solution=x, outer_iterations=len(mu_hist),
                       inner_steps=len(mu_hist),
                       mu_history=np.array(mu_hist),
                       residual_history=np.array(res_hist),
                       relchange_history=np.array(change_hist),
                       wall_time=time.perf_counter() - start,
                       termination=termination)
