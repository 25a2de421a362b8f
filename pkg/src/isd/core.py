"""Iterative support detection (ISD).

Alternates two steps: detect a support estimate ``I`` from the current
reconstruction, then re-solve the truncated problem that leaves entries in
``I`` unpenalised.  ``I`` is recomputed from scratch every outer iteration,
so earlier false detections can be dropped again.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .wl1 import SolverConfig, SolverState, default_rho, solve_weighted_l1

__all__ = [
    "Geometric",
    "Toll",
    "FirstJump",
    "IsdConfig",
    "IterationDiagnostics",
    "ReconReport",
    "tau_schedule",
    "detect_support",
    "half_m_rank_value",
    "stop_check",
    "support_diagnostics",
    "isd_run",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Geometric:
    """Threshold ||x||_inf / beta**(s+1)."""

    beta: float = 5.0

    def __post_init__(self):
        if not self.beta > 1:
            raise ValueError("Geometric rule needs beta > 1")


@dataclass(frozen=True)
class Toll:
    """Keep a prescribed number of largest entries at each outer iteration."""

    cardinality_schedule: tuple[int, ...] = (1, 2, 3, 4, 5, 6, 7, 8, 9)

    def __post_init__(self):
        sched = tuple(int(c) for c in self.cardinality_schedule)
        if not sched or sched[0] < 0 or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("Toll schedule must be a strictly increasing sequence of counts")
        object.__setattr__(self, "cardinality_schedule", sched)

    def count(self, s):
        return self.cardinality_schedule[min(s, len(self.cardinality_schedule) - 1)]


# Divisor of the jump threshold per signal class.
KAPPA = {
    "gaussian": 1,
    "wavelet": 1,
    "power-law-0.8": 5,
    "power-law-1": 5,
    "power-law-2": 2,
    "power-law-4": 2,
    "power-law-1/3": 20,
}


@dataclass(frozen=True)
class FirstJump:
    """Detect everything above the first gap larger than tau in the sorted magnitudes.

    ``tau = ||x||_inf / (m * kappa)``, inflated by ``conservative_mult/(s+1)``
    for the first ``conservative_iters`` outer iterations.
    """

    kappa: float = 1.0
    conservative_mult: float = 6.0
    conservative_iters: int = 5

    def __post_init__(self):
        if not self.kappa >= 1:
            raise ValueError("FirstJump kappa must be >= 1")

    @classmethod
    def for_signal(cls, kind, lam=None):
        """Preset for a signal class: 'gaussian', 'wavelet' or a power law with ``lam``."""
        if kind == "gaussian":
            return cls(1, 6, 5)
        if kind == "wavelet":
            return cls(1, 8, 8)
        if kind.startswith("power-law"):
            if lam is None:
                raise ValueError("power-law preset needs lam")
            if lam <= 0.5:
                kappa = 20
            elif lam <= 1.5:
                kappa = 5
            else:
                kappa = 2
            return cls(kappa, 8, 8)
        raise ValueError(f"no FirstJump preset for {kind!r}")


DetectionRule = Geometric | Toll | FirstJump


@dataclass(frozen=True)
class IsdConfig:
    max_outer: int = 9
    tol_first: float = 1e-1
    tol_middle: float = 1e-2
    tol_final: float = 1e-6
    stop_rule: str = "support-stable"
    max_inner: int = 10000
    mu: float | None = None
    gamma_step: float = 1.618

    def __post_init__(self):
        if not self.tol_final <= self.tol_middle <= self.tol_first:
            raise ValueError("need tol_final <= tol_middle <= tol_first")
        if self.stop_rule not in ("support-stable", "half-m-rank", "both"):
            raise ValueError(f"unknown stop rule {self.stop_rule!r}")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")

    def solver(self, tol, rho=0.0):
        return SolverConfig(mu=self.mu, gamma_step=self.gamma_step, rho=rho, tol=tol,
                            max_inner=self.max_inner)


@dataclass(frozen=True)
class IterationDiagnostics:
    total: int
    det: int
    c_det: int
    w_det: int
    err: float


@dataclass
class ReconReport:
    x_final: np.ndarray
    outer_iters: int
    inner_iters_total: int
    per_iter: list = field(default_factory=list)
    support_history: list = field(default_factory=list)
    wall_seconds: float = 0.0
    converged: bool = True
    state: SolverState | None = None
    iterates: list = field(default_factory=list)

    @property
    def final_support(self):
        return self.support_history[-1] if self.support_history else frozenset()


def tau_schedule(rule: FirstJump, s, m, xinf):
    if m < 1 or xinf < 0:
        raise ValueError("need m >= 1 and xinf >= 0")
    tau = xinf / (m * rule.kappa)
    if s < rule.conservative_iters:
        tau *= rule.conservative_mult / (s + 1)
    return tau


def detect_support(x, rule, s, m):
    """Support estimate from reconstruction ``x`` at outer iteration ``s``.

    Returns a frozenset of 0-based indices.
    """
    mag = np.abs(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(mag)):
        raise ValueError("cannot detect support of a non-finite vector")
    if mag.size == 0:
        return frozenset()
    if isinstance(rule, Geometric):
        eps = mag.max() / rule.beta ** (s + 1)
        return frozenset(np.flatnonzero(mag > eps).tolist())
    if isinstance(rule, Toll):
        cnt = min(rule.count(s), mag.size)
        # stable sort on -mag keeps the lowest index first among ties
        order = np.argsort(-mag, kind="stable")
        return frozenset(order[:cnt].tolist())
    if isinstance(rule, FirstJump):
        tau = tau_schedule(rule, s, m, mag.max())
        a = np.sort(mag)
        jumps = np.flatnonzero(np.diff(a) > tau)
        if jumps.size == 0:
            return frozenset()
        eps = a[jumps[0]]
        return frozenset(np.flatnonzero(mag > eps).tolist())
    raise TypeError(f"unknown detection rule {rule!r}")


def half_m_rank_value(x, m):
    """The (floor(m/2)+1)-th largest magnitude of ``x`` (0 if x is shorter)."""
    r = m // 2 + 1
    mag = np.abs(np.asarray(x, dtype=float))
    if r > mag.size:
        return 0.0
    return float(np.partition(mag, mag.size - r)[mag.size - r])


def stop_check(support_history, x, m, cfg: IsdConfig, rank_history=None):
    """Decide whether the outer loop should stop after the latest detection.

    ``support_history`` lists the detected sets, newest last.
    ``rank_history`` optionally lists earlier half-m-rank values (see
    :func:`half_m_rank_value`) for the stagnation test; the value for ``x``
    is appended implicitly.
    """
    if not support_history:
        raise ValueError("stop_check needs at least one completed iteration")
    stable = False
    h = support_history
    if len(h) >= 3:
        stable = h[-1] == h[-2] == h[-3]
    elif len(h) == 2 and len(h) >= cfg.max_outer - 1:
        stable = h[-1] == h[-2]

    xinf = float(np.max(np.abs(x))) if np.size(x) else 0.0
    v = half_m_rank_value(x, m)
    vals = list(rank_history or []) + [v]
    rank = v <= 1e-10 * xinf or (len(vals) >= 4 and vals[-1] >= vals[-4])

    if cfg.stop_rule == "support-stable":
        return stable
    if cfg.stop_rule == "half-m-rank":
        return rank
    return stable or rank


def support_diagnostics(detected, truth, x=None):
    """(total, det, c_det, w_det, err) against the true signal."""
    truth = np.asarray(truth, dtype=float)
    true_supp = set(np.flatnonzero(truth).tolist())
    detected = set(detected)
    c_det = len(detected & true_supp)
    err = np.nan
    if x is not None:
        err = float(np.linalg.norm(np.asarray(x) - truth) / np.linalg.norm(truth))
    return IterationDiagnostics(len(true_supp), len(detected), c_det, len(detected) - c_det, err)


def isd_run(op, b, rule, cfg: IsdConfig = IsdConfig(), sigma=0.0, truth=None, rho=None,
            warm: SolverState | None = None) -> ReconReport:
    """Threshold-ISD reconstruction.

    Iteration 0 is plain basis pursuit (or its denoising form when
    ``sigma > 0``); every later iteration drops the l1 penalty on the
    indices detected from the previous solution and re-solves, warm-started.
    Intermediate solves stop at the loose tolerances; once ``stop_check``
    fires (or ``max_outer`` is reached) the last solve is resumed to
    ``tol_final``.

    ``rho`` defaults to ``sigma * sqrt(m)`` for noisy data and 0 otherwise.
    """
    t0 = time.perf_counter()
    b = np.asarray(b, dtype=float)
    if rho is None:
        rho = default_rho(sigma, op.m) if sigma > 0 else 0.0
    w = np.ones(op.n)
    state = warm
    history, rank_history, per_iter = [], [], []
    for s in range(cfg.max_outer):
        tol = cfg.tol_first if s == 0 else cfg.tol_middle
        x, state = solve_weighted_l1(op, b, w, cfg.solver(tol, rho), warm=state)
        detected = detect_support(x, rule, s, op.m)
        history.append(detected)
        if truth is not None:
            per_iter.append(support_diagnostics(detected, truth, x))
        done = stop_check(history, x, op.m, cfg, rank_history)
        rank_history.append(half_m_rank_value(x, op.m))
        if done or s == cfg.max_outer - 1:
            break
        w = np.ones(op.n)
        w[list(detected)] = 0.0
    x, state = solve_weighted_l1(op, b, w, cfg.solver(cfg.tol_final, rho), warm=state)
    report = ReconReport(
        x_final=x,
        outer_iters=len(history),
        inner_iters_total=state.inner_iters - (warm.inner_iters if warm else 0),
        per_iter=per_iter,
        support_history=history,
        wall_seconds=time.perf_counter() - t0,
        converged=state.converged,
        state=state,
    )
    log.debug("isd: %d outer / %d inner iterations", report.outer_iters, report.inner_iters_total)
    return report
