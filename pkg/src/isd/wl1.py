"""Weighted l1 minimisation by alternating directions on the dual.

Solves

    min  sum_i w_i |x_i|                      s.t. Ax = b      (rho = 0)
    min  sum_i w_i |x_i| + ||Ax - b||^2/(2 rho)                 (rho > 0)

Unit weights give basis pursuit, 0/1 weights the truncated model used by
ISD.  The iteration updates a dual vector ``y``, a dual slack ``z`` confined
to the box |z_i| <= w_i, and the primal ``x`` acting as the multiplier.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "SolverConfig",
    "SolverState",
    "NonFiniteError",
    "box_project",
    "admm_step",
    "solve_weighted_l1",
    "default_mu",
    "default_rho",
    "weighted_objective",
]

log = logging.getLogger(__name__)

GOLDEN = (1 + 5**0.5) / 2
FEAS_FACTOR = 1.0


class NonFiniteError(FloatingPointError):
    """Iterates of the weighted l1 solver stopped being finite."""


@dataclass(frozen=True)
class SolverConfig:
    mu: float | None = None
    gamma_step: float = 1.618
    rho: float = 0.0
    tol: float = 1e-6
    max_inner: int = 10000

    def __post_init__(self):
        if self.mu is not None and not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 0 < self.gamma_step < GOLDEN:
            raise ValueError("gamma_step must lie in (0, (1+sqrt 5)/2)")
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_inner < 1:
            raise ValueError("max_inner must be at least 1")


@dataclass
class SolverState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    inner_iters: int = 0
    converged: bool = False
    feasibility: float = np.nan

    @classmethod
    def zeros(cls, m, n):
        return cls(np.zeros(n), np.zeros(m), np.zeros(n))

    def copy(self):
        return replace(self, x=self.x.copy(), y=self.y.copy(), z=self.z.copy())


def box_project(v, w):
    """Project ``v`` onto the box {z : |z_i| <= w_i}."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != w.shape:
        raise ValueError(f"length mismatch: {v.shape} vs {w.shape}")
    return np.clip(v, -w, w)


def weighted_objective(x, w):
    return float(np.dot(w, np.abs(x)))


def _whitened(op, b):
    """b expressed in coordinates where the operator's rows are orthonormal."""
    if op.has_orthonormal_rows:
        return b
    lam, V = op.gram_eigh
    return (V.T @ b) / np.sqrt(lam)


def default_mu(op, b):
    """Mean absolute measurement after row orthonormalisation, floored at 1e-8."""
    return max(float(np.mean(np.abs(_whitened(op, np.asarray(b, dtype=float))))), 1e-8)


def default_rho(sigma, m):
    """Denoising weight matched to the expected residual norm sigma*sqrt(m)."""
    return float(sigma) * np.sqrt(m)


def _dual_solver(op, mu, rho):
    """Return r -> (mu A A^T + rho I)^{-1} r.

    With orthonormal rows this is division by mu + rho, which is the
    textbook update y = alpha A z - beta (A x - b) with alpha = mu/(mu+rho)
    and beta = 1/(mu+rho).
    """
    if op.has_orthonormal_rows:
        scale = 1.0 / (mu + rho)
        return lambda r: scale * r
    lam, V = op.gram_eigh
    inv = 1.0 / (mu * lam + rho)
    if not np.all(np.isfinite(inv)) or np.any(mu * lam + rho <= 0):
        raise np.linalg.LinAlgError("A A^T is singular; the equality-constrained dual step is undefined")
    return lambda r: V @ (inv * (V.T @ r))


def admm_step(state: SolverState, op, b, w, cfg: SolverConfig, mu=None, _dual=None) -> SolverState:
    """One sweep y -> z -> x; returns a new state."""
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    if b.shape != (op.m,) or w.shape != (op.n,):
        raise ValueError("dimension mismatch between operator, data and weights")
    mu = cfg.mu if mu is None else mu
    if mu is None:
        mu = default_mu(op, b)
    dual = _dual or _dual_solver(op, mu, cfg.rho)
    x, z = state.x, state.z
    y = dual(op.apply(mu * z - x) + b)
    aty = op.adjoint(y)
    z = box_project(aty + x / mu, w)
    x = x + cfg.gamma_step * mu * (aty - z)
    return SolverState(x, y, z, state.inner_iters + 1)


def solve_weighted_l1(op, b, w, cfg: SolverConfig = SolverConfig(), warm: SolverState | None = None):
    """Run the dual ADM iteration to the relative-change tolerance.

    Parameters
    ----------
    op : SensingOperator
    b : (m,) array
    w : (n,) array of nonnegative weights; zeros leave entries unpenalised
    cfg : SolverConfig
    warm : SolverState, optional
        Start from a previous solution (x, y, z).  The iteration counter
        keeps running from the warm state's count.

    Returns
    -------
    x : (n,) array
    state : SolverState
        Final iterate, reusable as ``warm`` for a related problem.  A run
        that hits ``max_inner`` returns with ``converged=False``.
    """
    b = np.asarray(b, dtype=float)
    w = np.asarray(w, dtype=float)
    if b.shape != (op.m,) or w.shape != (op.n,):
        raise ValueError("dimension mismatch between operator, data and weights")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    mu = cfg.mu if cfg.mu is not None else default_mu(op, b)
    dual = _dual_solver(op, mu, cfg.rho)
    gmu = cfg.gamma_step * mu
    state = SolverState.zeros(op.m, op.n) if warm is None else warm.copy()
    x, z = state.x, state.z
    y = state.y
    fwd, adj = op.apply, op.adjoint
    if op.kind == "dense":
        A = op.dense_entries
        fwd, adj = A.dot, A.T.dot
    count = state.inner_iters
    converged = False
    bzero = not np.any(b)
    bnorm = np.linalg.norm(b)
    for _ in range(cfg.max_inner):
        y = dual(fwd(mu * z - x) + b)
        aty = adj(y)
        z = np.clip(aty + x / mu, -w, w)
        step = gmu * (aty - z)
        x_norm = np.linalg.norm(x)
        x = x + step
        count += 1
        change = np.linalg.norm(step)
        if not np.isfinite(change):
            raise NonFiniteError(f"weighted l1 iterates diverged after {count} iterations")
        # x stuck at the zero start only means y has not reached the box yet
        if change <= cfg.tol * max(x_norm, 1e-12) and (x_norm > 0 or bzero):
            # plateaus of the dual iteration also show tiny primal changes;
            # with equality constraints insist on a matching residual
            if cfg.rho > 0 or np.linalg.norm(fwd(x) - b) <= FEAS_FACTOR * cfg.tol * bnorm:
                converged = True
                break
    feas = np.linalg.norm(fwd(x) - b) / max(1.0, bnorm)
    if not converged:
        log.debug("weighted l1 stopped at max_inner=%d (feasibility %.2e)", cfg.max_inner, feas)
    state = SolverState(x, y, z, count, converged, float(feas))
    return x, state
