"""Test signals, measurement noise, 2-D Haar wavelets and an analytic phantom."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Signal",
    "make_rng",
    "gen_signal",
    "add_noise",
    "haar2d_analyze",
    "haar2d_synthesize",
    "shepp_logan",
    "write_signal",
    "read_signal",
]

KINDS = ("gaussian", "bernoulli", "power-law", "power-law-sparse")

_SQRT_HALF = np.sqrt(0.5)


@dataclass(frozen=True)
class Signal:
    values: np.ndarray
    kind: str
    k: int
    lam: float | None = None
    seed: int | None = None
    true_support: frozenset = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(
            self, "true_support", frozenset(np.flatnonzero(self.values).tolist())
        )

    @property
    def n(self):
        return self.values.size


def make_rng(seed, *stream):
    """Seedable generator; extra ``stream`` integers split off independent
    substreams, e.g. ``make_rng(master, m, rep)`` for one trial."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def gen_signal(kind, n, k, lam=None, seed=0, rng=None):
    """Generate a test signal.

    ``gaussian`` and ``bernoulli`` place ``k`` standard-normal (resp. +-1)
    values on a uniformly random ``k``-subset.  ``power-law`` builds the
    compressible signal with magnitudes ``i**(-1/lam)``, i = 1..n;
    ``power-law-sparse`` keeps only i = 1..k.  Both power-law kinds get random
    signs and a random permutation and are normalised to unit peak.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown signal kind {kind!r}")
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if kind.startswith("power-law") and (lam is None or lam <= 0):
        raise ValueError("power-law signals need lam > 0")
    rng = make_rng(seed) if rng is None else rng
    x = np.zeros(n)
    perm = rng.permutation(n)
    if kind == "gaussian":
        x[perm[:k]] = rng.standard_normal(k)
    elif kind == "bernoulli":
        x[perm[:k]] = np.where(rng.random(k) > 0.5, 1.0, -1.0)
    else:
        count = n if kind == "power-law" else k
        signs = np.where(rng.standard_normal(count) >= 0, 1.0, -1.0)
        x[perm[:count]] = signs * np.arange(1, count + 1) ** (-1.0 / lam)
        if count:
            x /= np.max(np.abs(x))
        k = count
    return Signal(x, kind, k, lam, seed)


def add_noise(b, sigma, seed=0, rng=None):
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    b = np.asarray(b, dtype=float)
    if sigma == 0:
        return b.copy()
    rng = make_rng(seed) if rng is None else rng
    return b + sigma * rng.standard_normal(b.shape)


def _check_side(side, levels):
    if levels < 0 or side % (1 << levels):
        raise ValueError(f"side {side} is not divisible by 2**{levels}")


def haar2d_analyze(image, levels):
    """Orthonormal multi-level 2-D Haar transform.

    Coefficients use the usual nested layout (approximation block in the
    top-left corner) and are returned flattened row-major.
    """
    c = np.array(image, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("image must be square")
    _check_side(c.shape[0], levels)
    s = c.shape[0]
    for _ in range(levels):
        blk = c[:s, :s]
        blk = np.concatenate(
            [(blk[0::2] + blk[1::2]) * _SQRT_HALF, (blk[0::2] - blk[1::2]) * _SQRT_HALF], axis=0
        )
        blk = np.concatenate(
            [(blk[:, 0::2] + blk[:, 1::2]) * _SQRT_HALF, (blk[:, 0::2] - blk[:, 1::2]) * _SQRT_HALF],
            axis=1,
        )
        c[:s, :s] = blk
        s //= 2
    return c.ravel()


def haar2d_synthesize(coeffs, levels, side=None):
    coeffs = np.asarray(coeffs, dtype=float)
    if side is None:
        side = int(round(np.sqrt(coeffs.size)))
    if side * side != coeffs.size:
        raise ValueError("coefficient count is not a square")
    _check_side(side, levels)
    c = coeffs.reshape(side, side).copy()
    for lev in reversed(range(levels)):
        s = side >> lev
        h = s // 2
        blk = c[:s, :s]
        tmp = np.empty_like(blk)
        tmp[:, 0::2] = (blk[:, :h] + blk[:, h:]) * _SQRT_HALF
        tmp[:, 1::2] = (blk[:, :h] - blk[:, h:]) * _SQRT_HALF
        out = np.empty_like(tmp)
        out[0::2] = (tmp[:h] + tmp[h:]) * _SQRT_HALF
        out[1::2] = (tmp[:h] - tmp[h:]) * _SQRT_HALF
        c[:s, :s] = out
    return c


# Modified Shepp-Logan table (Toft): intensity, semi-axes a, b, centre x0, y0, angle in degrees.
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)


def phantom_axis(N):
    """Pixel-centre coordinates on [-1, 1] (columns left to right)."""
    return np.linspace(-1.0, 1.0, N)


def shepp_logan(N):
    """N x N modified Shepp-Logan phantom; row 0 is the top (y = +1)."""
    if N < 8:
        raise ValueError("phantom side must be at least 8")
    ax = phantom_axis(N)
    X, Y = np.meshgrid(ax, ax[::-1])
    img = np.zeros((N, N))
    for amp, a, b, x0, y0, deg in SHEPP_LOGAN_ELLIPSES:
        th = np.deg2rad(deg)
        xr = (X - x0) * np.cos(th) + (Y - y0) * np.sin(th)
        yr = -(X - x0) * np.sin(th) + (Y - y0) * np.cos(th)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += amp
    return img


def write_signal(sig: Signal, path):
    lam = "none" if sig.lam is None else repr(float(sig.lam))
    seed = "none" if sig.seed is None else str(sig.seed)
    lines = [f"# isd-signal v1 kind={sig.kind} n={sig.n} k={sig.k} lambda={lam} seed={seed}"]
    lines += [f"{v:.17g}" for v in sig.values]
    Path(path).write_text("\n".join(lines) + "\n")


def read_signal(path) -> Signal:
    text = Path(path).read_text().splitlines()
    head = text[0].split()
    if head[:3] != ["#", "isd-signal", "v1"]:
        raise ValueError(f"{path}: not an isd-signal v1 file")
    meta = dict(tok.split("=", 1) for tok in head[3:])
    values = np.array([float(v) for v in text[1:] if v.strip()])
    if len(values) != int(meta["n"]):
        raise ValueError(f"{path}: header says n={meta['n']}, found {len(values)} values")
    lam = None if meta["lambda"] == "none" else float(meta["lambda"])
    seed = None if meta["seed"] == "none" else int(meta["seed"])
    return Signal(values, meta["kind"], int(meta["k"]), lam, seed)
