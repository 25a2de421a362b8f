"""Reweighted baselines with p = 0: reweighted l1 (IRL1) and reweighted least squares (IRLS)."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg.lapack import dpocon

from .core import IterationDiagnostics, ReconReport
from .wl1 import SolverConfig, default_rho, solve_weighted_l1

__all__ = [
    "ReweightConfig",
    "DenseRequired",
    "SingularSystem",
    "irl1_weights",
    "irls_weights",
    "irl1_run",
    "irls_run",
    "min_norm_solution",
]


class DenseRequired(TypeError):
    """IRLS was handed an operator without explicit entries."""


class SingularSystem(np.linalg.LinAlgError):
    """A Q A^T is numerically singular."""


# zeta-dependent IRLS tolerance: eps = factor * sqrt(zeta)
IRLS_EPS_FACTOR = {"default": 1e-2, "power-law": 10 ** -1.5, "bernoulli": 1e-1}


@dataclass(frozen=True)
class ReweightConfig:
    outer_iters: int = 9
    eta0: float = 1.0
    eta_decay: float = 0.5
    zeta0: float = 1.0
    zeta_decay: float = 0.1
    zeta_floor: float = 1e-8
    p: float = 0.0
    eps_final: float = 1e-6
    eps_inner: float = 1e-6
    irls_eps: str = "default"
    irls_eps_min: float = 0.0
    irls_max_iters: int = 1000
    max_inner: int = 10000

    def __post_init__(self):
        if self.p != 0:
            raise ValueError("only p = 0 is supported")
        if not (0 < self.eta_decay < 1 and 0 < self.zeta_decay < 1):
            raise ValueError("decay factors must lie in (0, 1)")
        if not self.zeta_floor > 0:
            raise ValueError("zeta_floor must be positive")
        if self.irls_eps not in IRLS_EPS_FACTOR:
            raise ValueError(f"unknown IRLS tolerance scheme {self.irls_eps!r}")
        if self.outer_iters < 0:
            raise ValueError("outer_iters must be nonnegative")

    def irls_tol(self, zeta):
        return max(IRLS_EPS_FACTOR[self.irls_eps] * np.sqrt(zeta), self.irls_eps_min)


def irl1_weights(x, eta):
    """(|x_i| + eta)^(p-1) with p = 0."""
    return 1.0 / (np.abs(x) + eta)


def irls_weights(x, zeta):
    """(x_i^2 + zeta)^(p/2-1) with p = 0; IRLS uses their reciprocals as Q."""
    return 1.0 / (np.asarray(x) ** 2 + zeta)


def _diag(x, truth):
    if truth is None:
        return None
    truth = np.asarray(truth, dtype=float)
    err = float(np.linalg.norm(x - truth) / np.linalg.norm(truth))
    return IterationDiagnostics(int(np.count_nonzero(truth)), 0, 0, 0, err)


def irl1_run(op, b, cfg: ReweightConfig = ReweightConfig(), rho=None, sigma=0.0, truth=None,
              record_iterates=False) -> ReconReport:
    """Reweighted l1: BP (or its denoising form) followed by ``outer_iters`` weighted solves.

    Weights are ``1/(|x_i| + eta)``; eta is multiplied by ``eta_decay`` after
    every weighted solve.  Each solve is warm-started from the previous one.
    With ``record_iterates`` every solution, BP first, is kept on the report.
    """
    t0 = time.perf_counter()
    if rho is None:
        rho = default_rho(sigma, op.m) if sigma > 0 else 0.0
    scfg = SolverConfig(rho=rho, tol=cfg.eps_inner, max_inner=cfg.max_inner)
    x, state = solve_weighted_l1(op, b, np.ones(op.n), scfg)
    per_iter = [d for d in [_diag(x, truth)] if d]
    iterates = [x.copy()] if record_iterates else []
    eta = cfg.eta0
    for _ in range(cfg.outer_iters):
        x, state = solve_weighted_l1(op, b, irl1_weights(x, eta), scfg, warm=state)
        eta *= cfg.eta_decay
        if record_iterates:
            iterates.append(x.copy())
        if truth is not None:
            per_iter.append(_diag(x, truth))
    return ReconReport(
        x_final=x,
        outer_iters=cfg.outer_iters + 1,
        inner_iters_total=state.inner_iters,
        per_iter=per_iter,
        wall_seconds=time.perf_counter() - t0,
        converged=state.converged,
        state=state,
        iterates=iterates,
    )


def min_norm_solution(A, b):
    """A^T (A A^T)^{-1} b, the least-squares solution of smallest norm."""
    return np.linalg.lstsq(A, b, rcond=None)[0]


def _weighted_solve(A, b, q):
    M = (A * q) @ A.T
    try:
        c, low = scipy.linalg.cho_factor(M, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("A Q A^T is not positive definite") from exc
    rcond, info = dpocon(c, np.abs(M).sum(axis=0).max(), uplo="L" if low else "U")
    if info != 0 or rcond < 1e-14:
        raise SingularSystem(f"A Q A^T has reciprocal condition {rcond:.1e}")
    return q * (A.T @ scipy.linalg.cho_solve((c, low), b, check_finite=False))


def irls_run(op, b, cfg: ReweightConfig = ReweightConfig(), truth=None, record_iterates=False) -> ReconReport:
    """Reweighted least squares for p = 0 on an explicit matrix.

    Starts from the minimum-norm solution and iterates
    ``x = Q A^T (A Q A^T)^{-1} b`` with ``Q = diag(x_i^2 + zeta)``.  zeta is
    cut by ``zeta_decay`` whenever the relative change drops below the
    zeta-dependent tolerance; after it reaches ``zeta_floor`` the run stops
    at ``eps_final``.  ``record_iterates`` keeps every iterate, x(0) first.
    """
    if not getattr(op, "is_dense", False):
        raise DenseRequired("IRLS needs an operator with explicit entries")
    t0 = time.perf_counter()
    A = op.dense_entries
    b = np.asarray(b, dtype=float)
    x = min_norm_solution(A, b)
    per_iter = [d for d in [_diag(x, truth)] if d]
    iterates = [x.copy()] if record_iterates else []
    zeta = cfg.zeta0
    floor_reached = zeta <= cfg.zeta_floor * (1 + 1e-9)
    iters = 0
    converged = False
    while iters < cfg.irls_max_iters:
        x_new = _weighted_solve(A, b, x**2 + zeta)
        iters += 1
        change = np.linalg.norm(x_new - x) / max(np.linalg.norm(x), 1e-300)
        x = x_new
        if record_iterates:
            iterates.append(x.copy())
        if truth is not None:
            per_iter.append(_diag(x, truth))
        if not floor_reached:
            if change <= cfg.irls_tol(zeta):
                zeta = max(zeta * cfg.zeta_decay, cfg.zeta_floor)
                floor_reached = zeta <= cfg.zeta_floor * (1 + 1e-9)
        elif change <= cfg.eps_final:
            converged = True
            break
    return ReconReport(
        x_final=x,
        outer_iters=iters + 1,
        inner_iters_total=iters,
        per_iter=per_iter,
        wall_seconds=time.perf_counter() - t0,
        converged=converged,
        iterates=iterates,
    )
