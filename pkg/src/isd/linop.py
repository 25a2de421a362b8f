"""Matrix-free sensing operators with adjoints."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .signals import haar2d_analyze, haar2d_synthesize, make_rng

__all__ = [
    "SensingOperator",
    "SynthesisTransform",
    "make_gaussian",
    "make_dense",
    "make_partial_dct",
    "compose_synthesis",
    "apply",
    "adjoint",
]


@dataclass(frozen=True)
class SynthesisTransform:
    """Orthonormal 2-D Haar basis on ``side x side`` images; ``levels=0`` is the identity."""

    side: int
    levels: int
    kind: str = "haar-2d"

    def __post_init__(self):
        if self.levels < 0 or self.side % (1 << self.levels):
            raise ValueError(f"side {self.side} not divisible by 2**{self.levels}")

    @property
    def n(self):
        return self.side * self.side

    def synthesize(self, coeffs):
        return haar2d_synthesize(coeffs, self.levels, self.side).ravel()

    def analyze(self, x):
        return haar2d_analyze(np.reshape(x, (self.side, self.side)), self.levels)


@dataclass(frozen=True, eq=False)
class SensingOperator:
    """Linear map R^n -> R^m.

    ``dense`` operators hold an explicit ``dense_entries`` grid,
    ``partial-dct`` operators keep only the selected ``rows`` of the
    orthonormal DCT-II, and ``composed-synthesis`` wraps a base operator
    behind a wavelet synthesis.
    """

    kind: str
    m: int
    n: int
    seed: int | None = None
    rows: np.ndarray | None = None
    dense_entries: np.ndarray | None = None
    base: SensingOperator | None = None
    transform: SynthesisTransform | None = None

    @property
    def shape(self):
        return (self.m, self.n)

    @property
    def is_dense(self):
        return self.dense_entries is not None

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected a vector of length {self.n}, got shape {x.shape}")
        if self.kind == "dense":
            return self.dense_entries @ x
        if self.kind == "partial-dct":
            return scipy.fft.dct(x, norm="ortho")[self.rows]
        return self.base.apply(self.transform.synthesize(x))

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise ValueError(f"expected a vector of length {self.m}, got shape {y.shape}")
        if self.kind == "dense":
            return self.dense_entries.T @ y
        if self.kind == "partial-dct":
            full = np.zeros(self.n)
            full[self.rows] = y
            return scipy.fft.idct(full, norm="ortho")
        return self.transform.analyze(self.base.adjoint(y))

    def to_dense(self):
        if self.is_dense:
            return self.dense_entries
        return np.column_stack([self.apply(e) for e in np.eye(self.n)])

    @cached_property
    def gram(self):
        """A A^T as an m x m array (materialised on first use)."""
        if self.is_dense:
            return self.dense_entries @ self.dense_entries.T
        if self.kind == "composed-synthesis":
            return self.base.gram
        if self.has_orthonormal_rows:
            return np.eye(self.m)
        return np.column_stack([self.apply(self.adjoint(e)) for e in np.eye(self.m)])

    @cached_property
    def gram_eigh(self):
        return np.linalg.eigh(self.gram)

    @cached_property
    def has_orthonormal_rows(self):
        if self.kind == "partial-dct":
            return True
        if self.kind == "composed-synthesis":
            return self.base.has_orthonormal_rows
        return bool(np.allclose(self.gram, np.eye(self.m), atol=1e-12))

    def __repr__(self):
        return f"SensingOperator(kind={self.kind!r}, m={self.m}, n={self.n}, seed={self.seed})"


def _check_dims(m, n):
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")


def make_gaussian(m, n, seed=0, rng=None):
    """m x n operator with i.i.d. standard normal entries."""
    _check_dims(m, n)
    rng = make_rng(seed) if rng is None else rng
    return SensingOperator("dense", m, n, seed, dense_entries=rng.standard_normal((m, n)))


def make_dense(entries, seed=None):
    entries = np.array(entries, dtype=float, ndmin=2)
    m, n = entries.shape
    return SensingOperator("dense", m, n, seed, dense_entries=entries)


def make_partial_dct(n, m, seed=0, rng=None):
    """Rows {0} plus m-1 rows drawn without replacement from 1..n-1 of the orthonormal DCT-II."""
    _check_dims(m, n)
    rng = make_rng(seed) if rng is None else rng
    rest = rng.choice(np.arange(1, n), size=m - 1, replace=False)
    rows = np.sort(np.concatenate([[0], rest])).astype(int)
    return SensingOperator("partial-dct", m, n, seed, rows=rows)


def compose_synthesis(op: SensingOperator, w: SynthesisTransform):
    if op.n != w.n:
        raise ValueError(f"operator has n={op.n} but transform acts on {w.n} pixels")
    if w.levels == 0:
        return op
    return SensingOperator("composed-synthesis", op.m, op.n, op.seed, base=op, transform=w)


def apply(op: SensingOperator, x):
    return op.apply(x)


def adjoint(op: SensingOperator, y):
    return op.adjoint(y)
