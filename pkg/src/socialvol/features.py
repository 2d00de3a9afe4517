"""Derived social and financial variables for a fused symbol panel."""

import logging
from dataclasses import dataclass, replace

import numpy as np

logger = logging.getLogger(__name__)

TR_MODES = ("verbatim", "absolute")

DEFAULT_PCA_FEATURES = (
    "BULLISH_INTENSITY",
    "BEARISH_INTENSITY",
    "BULL_SCORED_MESSAGES",
    "BEAR_SCORED_MESSAGES",
    "TOTAL_SCANNED_MESSAGES",
)

DERIVED_COLUMNS = (
    "TR",
    "LOG_TR_DIFF",
    "LOG_RETURN",
    "BULL_MINUS_BEAR",
    "PCA_SOCIAL",
    "PCA_SOCIAL_CHANGE",
)


class DegenerateInputError(ValueError):
    """Raised when every PCA input column is constant."""


@dataclass(frozen=True)
class FeatureConfig:
    tr_mode: str = "verbatim"
    tr_floor: float = 1e-8
    pca_features: tuple = DEFAULT_PCA_FEATURES

    def __post_init__(self):
        if self.tr_mode not in TR_MODES:
            raise ValueError(f"tr_mode must be one of {TR_MODES}, got {self.tr_mode!r}")
        if self.tr_floor < 0:
            raise ValueError("tr_floor must be non-negative")


@dataclass
class PcaModel:
    """First-component(s) PCA of z-scored social features.

    ``loadings`` has shape ``(n_components, n_features)``; ``scores`` has
    shape ``(n_components, n_obs)``.
    """

    feature_names: tuple
    means: np.ndarray
    stds: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    explained_variance_ratio: np.ndarray
    scores: np.ndarray
    constant_features: tuple = ()

    @property
    def first_scores(self):
        return self.scores[0]


def _check_price(*values):
    for v in values:
        if not v > 0:
            raise ValueError(f"prices must be positive, got {v!r}")


def true_range(high, low, close_prev, mode="verbatim"):
    """Daily True Range.

    ``verbatim`` is ``max(high - low, low - close_prev, high - close_prev)``
    with signed gap terms; ``absolute`` is Wilder's form with absolute gap
    terms. Either way the result is at least ``high - low``.
    """
    _check_price(high, low, close_prev)
    if high < low:
        raise ValueError(f"high {high} below low {low}")
    if mode == "verbatim":
        return max(high - low, low - close_prev, high - close_prev)
    if mode == "absolute":
        return max(high - low, abs(low - close_prev), abs(high - close_prev))
    raise ValueError(f"unknown TR mode {mode!r}")


def true_range_series(high, low, close, mode="verbatim"):
    """Vectorised TR over a panel. Day 0 has no prior close and uses ``high - low``."""
    high = np.asarray(high, dtype=float)
    low = np.asarray(low, dtype=float)
    close = np.asarray(close, dtype=float)
    if np.any(high <= 0) or np.any(low <= 0) or np.any(close <= 0):
        raise ValueError("prices must be positive")
    if np.any(high < low):
        raise ValueError("high below low")
    tr = high - low
    if tr.size > 1:
        prev = close[:-1]
        up, down = high[1:] - prev, low[1:] - prev
        if mode == "absolute":
            up, down = np.abs(up), np.abs(down)
        elif mode != "verbatim":
            raise ValueError(f"unknown TR mode {mode!r}")
        tr[1:] = np.maximum(tr[1:], np.maximum(up, down))
    return tr


def log_tr_diff(tr, floor=1e-8):
    """Day-over-day log-ratio ``ln((TR_t + floor) / (TR_{t-1} + floor))``.

    Element 0 is NaN.
    """
    tr = np.asarray(tr, dtype=float)
    if tr.size < 2:
        raise ValueError("log_tr_diff needs at least 2 observations")
    if np.any(tr < 0):
        raise ValueError("True Range must be non-negative")
    out = np.full(tr.size, np.nan)
    shifted = np.log(tr + floor)
    out[1:] = shifted[1:] - shifted[:-1]
    return out


def log_return(close):
    close = np.asarray(close, dtype=float)
    if close.size < 2:
        raise ValueError("log_return needs at least 2 observations")
    if np.any(close <= 0):
        raise ValueError("closes must be positive")
    out = np.full(close.size, np.nan)
    out[1:] = np.log(close[1:] / close[:-1])
    return out


def bull_minus_bear(row):
    return row.bullish_intensity - row.bearish_intensity


def fit_social_pca(panel, features=DEFAULT_PCA_FEATURES, n_components=1):
    """Fit PCA on z-scored social columns of ``panel``.

    Constant columns are standardized to zeros and listed in
    ``constant_features``. The sign of each loading vector is fixed so that
    its largest-magnitude entry is positive (first such entry on ties).

    Raises:
        ValueError: too few features or observations, or non-finite data.
        DegenerateInputError: every column is constant.
    """
    features = tuple(features)
    if len(features) < 2:
        raise ValueError("PCA needs at least 2 features")
    data = np.column_stack([panel.column(name) for name in features])
    n = data.shape[0]
    if n < len(features) + 1:
        raise ValueError(
            f"PCA on {len(features)} features needs >= {len(features) + 1} observations, got {n}"
        )
    if not np.all(np.isfinite(data)):
        raise ValueError("PCA input contains non-finite values")

    means = data.mean(axis=0)
    stds = data.std(axis=0, ddof=1)
    constant = stds == 0
    if constant.all():
        raise DegenerateInputError("all PCA input columns are constant")
    if constant.any():
        logger.warning("%s: constant PCA inputs mapped to zero: %s", panel.symbol,
                       [f for f, c in zip(features, constant) if c])
    safe = np.where(constant, 1.0, stds)
    z = (data - means) / safe
    z[:, constant] = 0.0

    cov = (z.T @ z) / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    n_components = int(min(n_components, len(features)))
    loadings = evecs[:, :n_components].T.copy()
    for row in loadings:
        mags = np.round(np.abs(row), 12)
        if row[int(np.argmax(mags))] < 0:
            row *= -1.0
        row /= np.linalg.norm(row)
    total = evals.sum()
    ratio = evals[:n_components] / total
    return PcaModel(
        feature_names=features,
        means=means,
        stds=stds,
        loadings=loadings,
        eigenvalues=evals[:n_components],
        explained_variance_ratio=ratio,
        scores=loadings @ z.T,
        constant_features=tuple(f for f, c in zip(features, constant) if c),
    )


def pca_social_change(model):
    """First difference of the first-component score; element 0 is NaN."""
    s = np.asarray(model.first_scores, dtype=float)
    if s.size < 2:
        raise ValueError("pca_social_change needs at least 2 scores")
    out = np.full(s.size, np.nan)
    out[1:] = np.diff(s)
    return out


def derive_all(panel, config=None):
    """Return a copy of ``panel`` with every derived column populated.

    One-lag columns (LOG_TR_DIFF, LOG_RETURN, PCA_SOCIAL_CHANGE) are NaN on
    the first panel day.
    """
    config = config or FeatureConfig()
    if len(panel) < 2:
        raise ValueError(f"{panel.symbol}: panel of length {len(panel)} cannot be differenced")
    tr = true_range_series(panel.column("HIGH"), panel.column("LOW"),
                           panel.column("CLOSE"), mode=config.tr_mode)
    model = fit_social_pca(panel, config.pca_features)
    derived = {
        "TR": tr,
        "LOG_TR_DIFF": log_tr_diff(tr, config.tr_floor),
        "LOG_RETURN": log_return(panel.column("CLOSE")),
        "BULL_MINUS_BEAR": np.array([bull_minus_bear(r) for r in panel.social], dtype=float),
        "PCA_SOCIAL": np.asarray(model.first_scores, dtype=float),
        "PCA_SOCIAL_CHANGE": pca_social_change(model),
    }
    return replace(panel, derived=derived, pca=model)
