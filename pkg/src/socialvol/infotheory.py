"""Histogram binning and plug-in entropy / mutual information.

All quantities are in bits. Mutual information is computed as
``H(x) + H(y) - H(x, y)`` from integer bin counts; the count multisets are
sorted before summation so that the estimate is exactly symmetric in its
arguments and exactly invariant to relabelling of bins.
"""

import math
from dataclasses import dataclass

import numpy as np

BINNING_MODES = ("equal_width", "equal_frequency")
_EDGE_SNAP = 1e-9


@dataclass(frozen=True)
class BinnedSeries:
    """Bin assignment of a real series.

    Attributes:
        edges: Strictly increasing bin edges, length ``k + 1``.
        indices: Bin index per observation, in ``[0, k)``.
        k: Number of bins actually used.
        collapsed: True when a constant series forced ``k`` down to 1.
    """

    edges: np.ndarray
    indices: np.ndarray
    k: int
    collapsed: bool = False


@dataclass(frozen=True)
class JointHistogram:
    counts: np.ndarray
    n: int

    @property
    def row_marginal(self):
        return self.counts.sum(axis=1)

    @property
    def col_marginal(self):
        return self.counts.sum(axis=0)


def sturges_bin_count(n):
    """Sturges' rule, ``ceil(log2(n) + 1)``."""
    n = int(n)
    if n < 1:
        raise ValueError(f"Sturges' rule needs n >= 1, got {n}")
    return int(math.ceil(math.log2(n) + 1))


def _as_finite(x):
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot bin an empty series")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains NaN or infinite values")
    return x


def bin_equal_width(x, k):
    """Assign ``x`` to ``k`` equal-width bins spanning ``[min(x), max(x)]``.

    Bins are half-open ``[e_j, e_{j+1})`` except the last, which is closed so
    the maximum lands in bin ``k - 1``. A constant series is placed in a
    single bin.
    """
    x = _as_finite(x)
    k = int(k)
    if k < 1:
        raise ValueError(f"bin count must be >= 1, got {k}")
    lo, hi = x.min(), x.max()
    if hi == lo:
        return BinnedSeries(
            edges=np.array([lo, hi]),
            indices=np.zeros(x.size, dtype=np.int64),
            k=1,
            collapsed=k > 1,
        )
    scaled = (x - lo) / (hi - lo) * k
    # values on an edge must bin the same way after any rescaling of x,
    # so quotients within rounding noise of an integer are snapped to it
    nearest = np.rint(scaled)
    scaled = np.where(np.abs(scaled - nearest) < _EDGE_SNAP, nearest, scaled)
    idx = np.floor(scaled).astype(np.int64)
    np.clip(idx, 0, k - 1, out=idx)
    return BinnedSeries(edges=np.linspace(lo, hi, k + 1), indices=idx, k=k)


def bin_equal_frequency(x, k):
    """Assign ``x`` to ``k`` bins of (nearly) equal occupancy.

    Tied values always share a bin, so heavily tied data may occupy fewer
    than ``k`` bins.
    """
    x = _as_finite(x)
    k = int(k)
    if k < 1:
        raise ValueError(f"bin count must be >= 1, got {k}")
    n = x.size
    # rank by value with ties sharing their lowest rank
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    first = np.searchsorted(sorted_x, sorted_x, side="left")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = first
    idx = (ranks * k) // n
    edges = np.quantile(x, np.linspace(0.0, 1.0, k + 1))
    used = np.unique(idx)
    return BinnedSeries(edges=edges, indices=idx, k=k, collapsed=used.size == 1 and k > 1)


def bin_series(x, k, binning="equal_width"):
    if binning == "equal_width":
        return bin_equal_width(x, k)
    if binning == "equal_frequency":
        return bin_equal_frequency(x, k)
    raise ValueError(f"unknown binning mode {binning!r}; expected one of {BINNING_MODES}")


def paired_defined(x, y):
    """Drop every position where either series is NaN."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    keep = ~(np.isnan(x) | np.isnan(y))
    return x[keep], y[keep]


def _entropy_from_counts(counts):
    c = np.sort(np.asarray(counts, dtype=np.int64).ravel())
    c = c[c > 0]
    n = c.sum()
    if n == 0:
        return 0.0
    cf = c.astype(float)
    h = math.log2(n) - float(np.sum(cf * np.log2(cf))) / n
    return max(h, 0.0)


def joint_histogram(bx, by):
    joint = np.bincount(bx.indices * by.k + by.indices, minlength=bx.k * by.k)
    return JointHistogram(counts=joint.reshape(bx.k, by.k), n=int(bx.indices.size))


def entropy(x, k=None, binning="equal_width"):
    """Plug-in Shannon entropy (bits) of the binned series.

    NaN entries are ignored. ``k`` defaults to Sturges' rule on the number
    of defined observations.
    """
    x = np.asarray(x, dtype=float).ravel()
    x = x[~np.isnan(x)]
    if x.size < 1:
        raise ValueError("entropy needs at least one defined observation")
    if k is None:
        k = sturges_bin_count(x.size)
    b = bin_series(x, k, binning)
    return _entropy_from_counts(np.bincount(b.indices, minlength=b.k))


def mutual_information(x, y, k=None, binning="equal_width"):
    """Plug-in mutual information (bits) between two paired real series.

    Positions where either series is undefined (NaN) are removed pairwise
    before binning, so both marginals come from the same sample.

    Args:
        x: First series.
        y: Second series, same length as ``x``.
        k: Bins per axis. Defaults to Sturges' rule on the paired sample size.
        binning: ``"equal_width"`` or ``"equal_frequency"``.

    Returns:
        Non-negative MI estimate in bits.
    """
    xs, ys = paired_defined(x, y)
    n = xs.size
    if n < 2:
        raise ValueError(f"mutual information needs >= 2 defined pairs, got {n}")
    if k is None:
        k = sturges_bin_count(n)
    bx = bin_series(xs, k, binning)
    by = bin_series(ys, k, binning)
    hist = joint_histogram(bx, by)
    hx = _entropy_from_counts(hist.row_marginal)
    hy = _entropy_from_counts(hist.col_marginal)
    hxy = _entropy_from_counts(hist.counts)
    return max((hx + hy) - hxy, 0.0)
