"""Per-symbol feature vectors, z-scoring and k-means profiling.

k-means uses Lloyd iterations seeded by greedy spreading: the first centre
is a uniformly drawn point, every further centre is the point farthest (in
squared distance) from its nearest chosen centre. Restarts differ only in
the first draw; the run with the lowest WCSS wins, lower restart index on
ties.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

TIME_MEAN_FEATURES = (
    "BULLISH_INTENSITY",
    "BEARISH_INTENSITY",
    "BULL_MINUS_BEAR",
    "BULL_SCORED_MESSAGES",
    "BEAR_SCORED_MESSAGES",
    "TOTAL_SCANNED_MESSAGES",
    "VOLUME",
    "LOG_RETURN",
    "TR",
    "LOG_TR_DIFF",
)
VERDICT_FEATURES = ("MAX_INF_SURP_PCT", "POS_LAG_COUNT", "MAX_LAG", "AVG_SURPLUS")
FEATURE_NAMES = TIME_MEAN_FEATURES + VERDICT_FEATURES
SURPLUS_FEATURE = "MAX_INF_SURP_PCT"
DEFAULT_K_SET = (2, 3, 4, 5, 6, 7)


class ClusterError(ValueError):
    pass


@dataclass(frozen=True)
class StockFeatureVector:
    symbol: str
    features: dict

    def values(self, names):
        return [self.features[n] for n in names]


@dataclass(frozen=True)
class Standardization:
    means: np.ndarray
    stds: np.ndarray
    constant: tuple = ()

    def apply(self, points):
        safe = np.where(self.stds == 0, 1.0, self.stds)
        z = (np.asarray(points, dtype=float) - self.means) / safe
        z[..., self.stds == 0] = 0.0
        return z

    def invert(self, z):
        return np.asarray(z, dtype=float) * self.stds + self.means


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    wcss: float
    iterations: int
    seed: int
    restart: int = 0
    history: list = field(default_factory=list)
    standardization: Optional[Standardization] = None
    feature_names: tuple = ()
    symbols: tuple = ()

    @property
    def assignments(self):
        return {s: int(c) for s, c in zip(self.symbols, self.labels)}

    def centroids_original(self):
        if self.standardization is None:
            return self.centroids.copy()
        return self.standardization.invert(self.centroids)


def build_feature_vectors(panels, verdicts, significant_only=True, names=TIME_MEAN_FEATURES):
    """One vector per symbol: time-means of panel columns plus verdict scores.

    A missing ``max_lag`` (no significant leading lag) enters as 0.

    Returns:
        ``(vectors, excluded)`` where ``excluded`` maps symbol to a reason.
    """
    vectors, excluded = [], {}
    for sym in sorted(verdicts):
        v = verdicts[sym]
        if significant_only and not v.significant:
            continue
        panel = panels.get(sym)
        if panel is None:
            excluded[sym] = "no panel"
            continue
        feats = {}
        for name in names:
            col = panel.column(name)
            col = col[~np.isnan(col)]
            if col.size == 0:
                excluded[sym] = f"{name} undefined on every day"
                break
            feats[name] = float(col.mean())
        else:
            feats["MAX_INF_SURP_PCT"] = float(v.max_inf_surp_pct)
            feats["POS_LAG_COUNT"] = float(v.pos_lag_count)
            feats["MAX_LAG"] = float(v.max_lag if v.max_lag is not None else 0)
            feats["AVG_SURPLUS"] = float(v.avg_surplus)
            if not all(np.isfinite(x) for x in feats.values()):
                excluded[sym] = "non-finite feature"
                continue
            vectors.append(StockFeatureVector(sym, feats))
    if not vectors:
        warnings.warn("no symbols available for clustering", stacklevel=2)
    return vectors, excluded


def standardize(points):
    """Column-wise z-score with the population standard deviation.

    Constant columns map to zero and are listed in ``constant`` (by index).
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ClusterError("standardize needs at least 2 vectors")
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    constant = tuple(int(i) for i in np.flatnonzero(stds == 0))
    if constant:
        warnings.warn(f"constant feature columns mapped to zero: {constant}", stacklevel=2)
    params = Standardization(means, stds, constant)
    return params.apply(x), params


def _sq_dists(points, centroids):
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _wcss(points, centroids, labels):
    diff = points - centroids[labels]
    return float(np.einsum("ij,ij->", diff, diff))


def spread_seeding(points, k, rng):
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    nearest = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[chosen].copy()


def _repair_empty(points, centroids, labels, k):
    for c in range(k):
        if np.any(labels == c):
            continue
        d = np.sum((points - centroids[labels]) ** 2, axis=1)
        # never strip a cluster of its only member
        sizes = np.bincount(labels, minlength=k)
        d[sizes[labels] <= 1] = -1.0
        far = int(np.argmax(d))
        labels[far] = c
        centroids[c] = points[far]
    return labels


def _lloyd(points, k, rng, max_iter, tol):
    centroids = spread_seeding(points, k, rng)
    labels = np.argmin(_sq_dists(points, centroids), axis=1)
    labels = _repair_empty(points, centroids, labels, k)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        for c in range(k):
            centroids[c] = points[labels == c].mean(axis=0)
        history.append(_wcss(points, centroids, labels))
        new = np.argmin(_sq_dists(points, centroids), axis=1)
        new = _repair_empty(points, centroids, new, k)
        if np.array_equal(new, labels):
            break
        labels = new
        if len(history) > 1 and history[-2] - history[-1] < tol:
            # one more centroid update keeps labels and centroids consistent
            for c in range(k):
                centroids[c] = points[labels == c].mean(axis=0)
            history.append(_wcss(points, centroids, labels))
            break
    return centroids, labels, history, it


def kmeans(points, k, seed=0, restarts=10, max_iter=300, tol=1e-10):
    """Best-of-restarts k-means minimising the within-cluster sum of squares.

    Args:
        points: ``(n, d)`` finite array.
        k: Number of clusters, ``1 <= k <= n``.
        seed: Seed for the first-centre draws; restart ``r`` uses ``(seed, r)``.
        restarts: Number of independent seedings.
        max_iter: Lloyd iteration cap.
        tol: Stop when WCSS improves by less than this.

    Returns:
        A :class:`ClusterModel`; ``history`` holds WCSS after every centroid
        update of the winning run.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim != 2:
        raise ClusterError("points must be a 2-D array")
    n = x.shape[0]
    if k < 1:
        raise ClusterError(f"k must be >= 1, got {k}")
    if k > n:
        raise ClusterError(f"k={k} exceeds the number of points ({n})")
    if not np.all(np.isfinite(x)):
        raise ClusterError("points must be finite")
    best = None
    for r in range(max(1, restarts)):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), r]))
        centroids, labels, history, it = _lloyd(x, k, rng, max_iter, tol)
        wcss = _wcss(x, centroids, labels)
        if best is None or wcss < best.wcss:
            best = ClusterModel(k=k, centroids=centroids, labels=labels, wcss=wcss,
                                iterations=it, seed=seed, restart=r, history=history)
    return best


def sweep_k(points, k_set=DEFAULT_K_SET, seed=0, restarts=10):
    """Fit one model per ``k``.

    Returns:
        ``(models, errors)``; a ``k`` that cannot be fitted is recorded in
        ``errors`` with its message and the others still run.
    """
    models, errors = {}, {}
    for k in sorted(set(k_set)):
        try:
            models[k] = kmeans(points, k, seed=seed, restarts=restarts)
        except ClusterError as exc:
            errors[k] = str(exc)
            logger.warning("k=%d skipped: %s", k, exc)
    return models, errors


def fit_profiles(vectors, k_set=DEFAULT_K_SET, seed=0, restarts=10, names=FEATURE_NAMES):
    """Standardize ``vectors`` and sweep ``k``; models carry symbols and scaling."""
    names = tuple(names)
    raw = np.array([v.values(names) for v in vectors], dtype=float)
    z, params = standardize(raw)
    models, errors = sweep_k(z, k_set, seed, restarts)
    symbols = tuple(v.symbol for v in vectors)
    for m in models.values():
        m.standardization = params
        m.feature_names = names
        m.symbols = symbols
    return models, errors


def top_surplus_cluster(model, feature=SURPLUS_FEATURE):
    """Cluster whose de-standardized centroid has the largest ``feature``.

    Ties go to the lower cluster id.

    Returns:
        ``(cluster_id, profile)`` with ``profile`` mapping every feature name
        to the centroid value in original units.
    """
    names = tuple(model.feature_names)
    j = names.index(feature)
    original = model.centroids_original()
    cid = int(np.argmax(original[:, j]))
    return cid, dict(zip(names, (float(x) for x in original[cid])))
