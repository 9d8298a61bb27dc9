"""Histograms, total-variation statistics, bootstrap intervals and fits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from ..errors import GridMismatch

MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class Histogram:
    """Counts on a regular grid over a rectangle (``torus`` marks periodic axes)."""

    chart: str
    extent: Tuple[Tuple[float, float], ...]
    counts: np.ndarray
    torus: bool = False

    @property
    def shape(self):
        return self.counts.shape

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def normalized(self) -> np.ndarray:
        t = self.total
        if t == 0:
            raise ValueError("empty histogram")
        return self.counts / t

    def _check(self, other: "Histogram"):
        if self.chart != other.chart or self.shape != other.shape or self.extent != other.extent:
            raise GridMismatch(f"grids differ: {self.chart}{self.shape} vs {other.chart}{other.shape}")

    def merge(self, other: "Histogram") -> "Histogram":
        self._check(other)
        return Histogram(self.chart, self.extent, self.counts + other.counts, self.torus)

    def tv(self, other: "Histogram", min_expected: float = MIN_EXPECTED) -> float:
        self._check(other)
        return tv_distance(self.counts, other.counts, min_expected)

    def to_dict(self) -> dict:
        return {"chart": self.chart, "extent": [list(e) for e in self.extent], "torus": self.torus,
                "counts": self.counts.tolist()}


def tv_distance(a, b, min_expected: float = MIN_EXPECTED) -> float:
    """TV between normalized count arrays; sparse bins are pooled into one cell.

    A bin is sparse when its expected count, taken from the pooled estimate
    (p + q) / 2 scaled to the smaller sample, is below ``min_expected``.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise GridMismatch("histograms have different numbers of bins")
    na, nb = a.sum(), b.sum()
    if na == 0 or nb == 0:
        raise ValueError("empty histogram")
    p, q = a / na, b / nb
    expected = 0.5 * (p + q) * min(na, nb)
    low = expected < min_expected
    return float(0.5 * (np.abs(p[~low] - q[~low]).sum() + abs(p[low].sum() - q[low].sum())))


def tv_to_uniform(counts, min_expected: float = MIN_EXPECTED) -> float:
    counts = np.asarray(counts, dtype=float)
    return tv_distance(counts, np.full(counts.shape, counts.sum() / counts.size), min_expected)


def invariance_statistic(H: Histogram, pushforwards: Sequence[Histogram]) -> list:
    """TV(H, sigma_* H) for each generator's pushforward histogram."""
    return [H.tv(P) for P in pushforwards]


def interior_mask(counts, torus: bool = False) -> np.ndarray:
    """Occupied bins whose four neighbours are occupied too."""
    occ = np.asarray(counts) > 0
    m = occ.copy()
    for axis in range(occ.ndim):
        for shift in (1, -1):
            nb = np.roll(occ, shift, axis=axis)
            if not torus:
                idx = [slice(None)] * occ.ndim
                idx[axis] = 0 if shift == 1 else -1
                nb[tuple(idx)] = False
            m &= nb
    return m


def flatness_cv(weighted, counts, torus: bool = True) -> float:
    """Coefficient of variation of density-normalized counts over interior bins."""
    m = interior_mask(counts, torus)
    v = np.asarray(weighted)[m]
    if v.size < 2:
        return float("nan")
    return float(v.std() / v.mean())


def bootstrap_ci(values, stat: Callable = np.mean, level: float = 0.99, n_boot: int = 10000,
                 rng: Optional[np.random.Generator] = None) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(0) if rng is None else rng
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    boots = np.array([stat(values[i]) for i in idx])
    a = (1.0 - level) / 2.0
    lo, hi = np.quantile(boots, [a, 1.0 - a])
    return float(lo), float(hi)


def loglog_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])
