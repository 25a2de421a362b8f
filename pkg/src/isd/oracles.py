"""Exact oracles for tiny problems and calculators for the recovery theory.

Everything here enumerates, so every routine hard-caps the problem size and
raises :class:`SizeLimit` instead of running for ever.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

__all__ = [
    "SizeLimit",
    "Infeasible",
    "GammaTooLarge",
    "NullSpaceBasis",
    "null_space_basis",
    "lp_truncated_bp",
    "l0_oracle",
    "TnspReport",
    "tnsp_gamma",
    "tnsp_ratio",
    "KdParams",
    "KdProfile",
    "kd_value",
    "kd_derivative",
    "kd_profile",
    "StabilityBound",
    "stability_bound",
    "stability_constant",
    "sigma_L",
]


class SizeLimit(ValueError):
    """Problem too large for exhaustive enumeration."""


class Infeasible(ValueError):
    """Ax = b has no solution."""


class GammaTooLarge(ValueError):
    """The null-space constant is not below one."""


@dataclass(frozen=True)
class NullSpaceBasis:
    columns: np.ndarray  # n x (n - rank), orthonormal

    @property
    def dim(self):
        return self.columns.shape[1]


def null_space_basis(A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return NullSpaceBasis(scipy.linalg.null_space(A))


def _independent_rows(A, b):
    """Drop redundant equations; raise Infeasible for inconsistent ones."""
    r = np.linalg.matrix_rank(A)
    if r == A.shape[0]:
        return A, b
    _, _, piv = scipy.linalg.qr(A.T, pivoting=True)
    keep = np.sort(piv[:r])
    A2, b2 = A[keep], b[keep]
    x = np.linalg.lstsq(A2, b2, rcond=None)[0]
    if np.linalg.norm(A @ x - b) > 1e-9 * max(1.0, np.linalg.norm(b)):
        raise Infeasible("inconsistent equations")
    return A2, b2


def lp_truncated_bp(A, b, T, weights=None):
    """Minimise sum_{i in T} |x_i| subject to Ax = b by vertex enumeration.

    The problem is written as an LP in (u, v) >= 0 with x = u - v and every
    basic solution of the 2n-column system ``[A, -A]`` is examined.

    Parameters
    ----------
    A : (m, n) array, n <= 12 and m <= 6
    b : (m,) array
    T : iterable of 0-based indices that are penalised
    weights : optional (n,) nonnegative array overriding the 0/1 pattern of T

    Returns
    -------
    x : (n,) array
        A minimising vertex.
    objective : float
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if n > 12 or m > 6:
        raise SizeLimit(f"lp_truncated_bp is limited to n <= 12, m <= 6 (got {m} x {n})")
    if weights is None:
        weights = np.zeros(n)
        weights[list(T)] = 1.0
    weights = np.asarray(weights, dtype=float)
    A, b = _independent_rows(A, b)
    r = A.shape[0]
    if r == 0:
        return np.zeros(n), 0.0
    cols = np.hstack([A, -A])
    cost = np.concatenate([weights, weights])
    combos = np.array(list(itertools.combinations(range(2 * n), r)))
    B = cols[:, combos].transpose(1, 0, 2)  # (nb, r, r)
    scale = np.abs(A).max()
    ok = np.abs(np.linalg.det(B / scale)) > 1e-10
    combos, B = combos[ok], B[ok]
    if len(combos) == 0:
        raise Infeasible("no nonsingular basis")
    sol = np.linalg.solve(B, np.broadcast_to(b, (len(B), r))[..., None])[..., 0]
    tol = 1e-9 * max(1.0, np.abs(sol).max(initial=0.0))
    feasible = np.all(sol >= -tol, axis=1)
    # singular-ish bases can produce garbage; keep only those that reproduce b
    resid = np.abs(np.einsum("kij,kj->ki", B, sol) - b).max(axis=1)
    feasible &= resid <= 1e-9 * max(1.0, np.abs(b).max())
    if not feasible.any():
        raise Infeasible("no feasible vertex")
    combos, sol = combos[feasible], np.maximum(sol[feasible], 0.0)
    obj = (cost[combos] * sol).sum(axis=1)
    best = int(np.argmin(obj))
    uv = np.zeros(2 * n)
    uv[combos[best]] = sol[best]
    x = uv[:n] - uv[n:]
    return x, float(np.dot(weights, np.abs(x)))


def l0_oracle(A, b, kmax):
    """Sparsest solution of Ax = b with at most ``kmax`` nonzeros, or None.

    Supports are tried by size and then lexicographically; a support is
    accepted when the least-squares residual is at most
    ``1e-9 * max(1, ||b||)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if n > 20 or kmax > 4:
        raise SizeLimit(f"l0_oracle is limited to n <= 20, kmax <= 4 (got n={n}, kmax={kmax})")
    tol = 1e-9 * max(1.0, np.linalg.norm(b))
    if np.linalg.norm(b) <= tol:
        return np.zeros(n)
    for k in range(1, kmax + 1):
        for supp in itertools.combinations(range(n), k):
            sub = A[:, supp]
            coef = np.linalg.lstsq(sub, b, rcond=None)[0]
            if np.linalg.norm(sub @ coef - b) <= tol:
                x = np.zeros(n)
                x[list(supp)] = coef
                return x
    return None


@dataclass(frozen=True)
class TnspReport:
    t: int
    L: int
    gamma_bar: float  # math.inf when unbounded
    witness: tuple | None  # (T, S, eta)
    mode: str = "exact"

    @property
    def unbounded(self):
        return math.isinf(self.gamma_bar)


def tnsp_ratio(eta, T, S):
    """||eta_S||_1 / ||eta_{T minus S}||_1 (inf when only the denominator vanishes)."""
    eta = np.abs(np.asarray(eta, dtype=float))
    S = sorted(S)
    D = sorted(set(T) - set(S))
    num, den = eta[S].sum(), eta[D].sum()
    if den == 0:
        return math.inf if num > 0 else math.nan
    return num / den


def _best_ratio(eta, t, L, zero_tol):
    """Largest ratio over (T, S) for a fixed eta, with the sets achieving it.

    S takes the L largest magnitudes and T minus S the t - L smallest ones.
    """
    mag = np.abs(eta)
    order = np.argsort(-mag, kind="stable")
    S = order[:L]
    D = order[len(order) - (t - L):] if t > L else order[:0]
    num, den = mag[S].sum(), mag[D].sum()
    if den <= zero_tol * num:
        ratio = math.inf
    else:
        ratio = num / den
    return ratio, frozenset((*S.tolist(), *D.tolist())), frozenset(S.tolist())


def _best_ratios(E, t, L):
    """Vectorised _best_ratio over the rows of E; returns the ratio array."""
    mag = np.sort(np.abs(E), axis=1)[:, ::-1]
    num = mag[:, :L].sum(axis=1)
    den = mag[:, mag.shape[1] - (t - L):].sum(axis=1) if t > L else np.zeros(len(E))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 1e-12 * num, num / den, np.inf)


def tnsp_gamma(A, t, L, mode="exact", samples=2000, seed=0):
    """Truncated null-space constant: sup ||eta_S||_1 / ||eta_{T minus S}||_1.

    The supremum runs over |T| = t, S subset of T with |S| <= L and nonzero
    eta in the null space of A.

    ``exact`` mode (n <= 10, null-space dimension <= 4): for a fixed pair
    (T, S) the ratio is a convex function maximised over the polytope
    {c : ||(N c)_{T minus S}||_1 <= 1}, whose vertices are the directions
    where N c vanishes on p - 1 independent rows.  Enumerating those
    directions and choosing the best (T, S) for each gives the exact value.

    ``sampled`` mode returns a lower bound from random null-space directions
    refined by a local search.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[1]
    if not 1 <= t <= n or L < 0:
        raise ValueError(f"need 1 <= t <= n and L >= 0 (t={t}, L={L}, n={n})")
    N = null_space_basis(A).columns
    p = N.shape[1]
    L = min(L, t)
    if p == 0 or L == 0:
        return TnspReport(t, L, 0.0, None, mode)
    if mode == "exact":
        if n > 10 or p > 4:
            raise SizeLimit(f"exact t-NSP needs n <= 10 and null dimension <= 4 (n={n}, dim={p})")
        dirs = []
        for Z in itertools.combinations(range(n), p - 1):
            rows = N[list(Z)]
            _, sv, vt = np.linalg.svd(rows, full_matrices=True) if Z else (None, np.array([]), np.eye(p))
            if Z and (len(sv) < p - 1 or sv[-1] < 1e-10):
                continue
            dirs.append(vt[-1])
        E = np.array(dirs) @ N.T
        # directions vanishing on the chosen rows: clean round-off zeros
        E[np.abs(E) < 1e-12 * np.abs(E).max(axis=1, keepdims=True)] = 0.0
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        C = rng.standard_normal((samples, p))
        E = _refine(C, N, t, L, rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    vals = _best_ratios(E, t, L)
    i = int(np.argmax(vals))
    ratio, T, S = _best_ratio(E[i], t, L, 1e-12)
    return TnspReport(t, L, ratio, (T, S, E[i]), mode)


def _refine(C, N, t, L, rng, rounds=60, keep=20):
    """Greedy random-perturbation ascent on the best sampled directions."""
    vals = _best_ratios(C @ N.T, t, L)
    top = C[np.argsort(-vals)[:keep]]
    topv = np.sort(vals)[::-1][:keep]
    step = 0.5
    for _ in range(rounds):
        trial = top + step * rng.standard_normal(top.shape)
        tv = _best_ratios(trial @ N.T, t, L)
        better = tv > topv
        top[better], topv[better] = trial[better], tv[better]
        step *= 0.9
    return np.vstack([C, top]) @ N.T


@dataclass(frozen=True)
class KdParams:
    n: int
    m: int
    d: float
    c: float = 1.0

    def __post_init__(self):
        if not (0 <= self.d < self.m < self.n):
            raise ValueError(f"need 0 <= d < m < n (n={self.n}, m={self.m}, d={self.d})")
        if not self.c > 0:
            raise ValueError("c must be positive")


class KdProfile(NamedTuple):
    k: float
    kprime: float
    premise_half: bool  # c / (1 + log(n/m)) < 1/2
    kprime_in_range: bool  # -1 < k'(d) < 0
    premise_quarter: bool  # c / (1 + log(n/m)) < 1/4
    kprime_in_half_range: bool  # -1/2 < k'(d) < 0
    gain_holds: bool  # k(0) < k(d) + d/2


def kd_value(n, m, d, c=1.0):
    """Sparsity capacity after d detections: c (m-d) / (1 + log((n-d)/(m-d)))."""
    return c * (m - d) / (1.0 + np.log((n - d) / (m - d)))


def kd_derivative(n, m, d, c=1.0):
    lg = 1.0 + np.log((n - d) / (m - d))
    return -c * (1.0 / lg + (n - m) / (lg**2 * (n - d)))


def kd_profile(p: KdParams) -> KdProfile:
    k = kd_value(p.n, p.m, p.d, p.c)
    kp = kd_derivative(p.n, p.m, p.d, p.c)
    ratio = p.c / (1.0 + np.log(p.n / p.m))
    return KdProfile(
        k=float(k),
        kprime=float(kp),
        premise_half=bool(ratio < 0.5),
        kprime_in_range=bool(-1 < kp < 0),
        premise_quarter=bool(ratio < 0.25),
        kprime_in_half_range=bool(-0.5 < kp < 0),
        gain_holds=bool(kd_value(p.n, p.m, 0, p.c) < k + p.d / 2),
    )


def sigma_L(x, L):
    """l1 mass of everything except the L largest-magnitude entries."""
    mag = np.sort(np.abs(np.asarray(x, dtype=float)))[::-1]
    if not 0 <= L <= mag.size:
        raise ValueError("need 0 <= L <= len(x)")
    return float(mag[L:].sum())


class StabilityBound(NamedTuple):
    C_T: float
    bound: float
    holds: bool | None


def stability_constant(gamma_bar, tc_size, L):
    if gamma_bar >= 1:
        raise GammaTooLarge(f"gamma_bar = {gamma_bar} is not below 1")
    return (1 + (1 + max(1.0, tc_size / L)) * gamma_bar) / (1 - gamma_bar)


def stability_bound(gamma_bar, tc_size, L, x_T, x_star=None, x_true=None):
    """l1 error bound 2 C_T sigma_L(x_T) for the truncated problem.

    ``x_T`` is the true signal restricted to T.  When both ``x_star`` (the
    computed minimiser) and ``x_true`` are given, ``holds`` reports whether
    ||x_star - x_true||_1 <= bound + 1e-8.
    """
    C = stability_constant(gamma_bar, tc_size, L)
    bound = 2 * C * sigma_L(x_T, L)
    holds = None
    if x_star is not None and x_true is not None:
        err = np.abs(np.asarray(x_star) - np.asarray(x_true)).sum()
        holds = bool(err <= bound + 1e-8)
    return StabilityBound(C, bound, holds)
