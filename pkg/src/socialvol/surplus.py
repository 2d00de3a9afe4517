"""Lead-lag mutual information scan, information surplus and its validation.

Lag convention: a positive internal lag ``i`` pairs the social series
observed ``i`` days *before* the financial one (ex-ante, leading); ``-i``
pairs it ``i`` days after (ex-post, trailing). Reports use the opposite
sign, so the leading lag ``i`` is written as ``-i`` days ("-7 = one week
prior"). :func:`reported_lag` is the only place that conversion happens.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from .infotheory import mutual_information, paired_defined

logger = logging.getLogger(__name__)

STATISTICS = ("max_surplus", "pos_lag_count")
SHUFFLE_TARGETS = ("social", "financial")
DIRECTION_MODES = ("aggregate", "per_lag")

SOCIAL_SERIES = "PCA_SOCIAL_CHANGE"
FINANCIAL_SERIES = "LOG_TR_DIFF"


class ZeroBaselineError(ValueError):
    """Contemporaneous MI is zero, so the surplus ratio is undefined."""


class SeriesTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class SignificanceConfig:
    lag_window: int = 10
    n_perm: int = 100
    alpha: float = 0.05
    seed: int = 0
    min_sample: int = 100
    bins: Optional[int] = None
    binning: str = "equal_width"
    statistic: str = "max_surplus"
    shuffle: str = "social"
    direction_mode: str = "aggregate"
    workers: int = 1

    def __post_init__(self):
        if self.n_perm < 1:
            raise ValueError("n_perm must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.lag_window < 1:
            raise ValueError("lag_window must be >= 1")
        if self.statistic not in STATISTICS:
            raise ValueError(f"statistic must be one of {STATISTICS}")
        if self.shuffle not in SHUFFLE_TARGETS:
            raise ValueError(f"shuffle must be one of {SHUFFLE_TARGETS}")
        if self.direction_mode not in DIRECTION_MODES:
            raise ValueError(f"direction_mode must be one of {DIRECTION_MODES}")


@dataclass
class LagMiProfile:
    symbol: str
    lag_window: int
    mi: dict
    n_pairs: dict
    surplus: Optional[dict] = None

    @property
    def baseline(self):
        return self.mi[0]

    @property
    def lags(self):
        return range(-self.lag_window, self.lag_window + 1)

    @property
    def leading(self):
        return range(1, self.lag_window + 1)


class LagSummary(NamedTuple):
    pos_lag_count: int
    max_inf_surp_pct: float
    max_lag: Optional[int]
    avg_surplus: float
    threshold: float


@dataclass
class SurplusVerdict:
    symbol: str
    passed_direction_filter: bool = False
    passed_permutation: bool = False
    p_value_proxy: Optional[float] = None
    max_inf_surp_pct: float = 0.0
    max_lag: Optional[int] = None
    avg_surplus: float = 0.0
    pos_lag_count: int = 0
    failed_stage: Optional[str] = None
    reason: str = ""
    profile: Optional[LagMiProfile] = field(default=None, repr=False)

    @property
    def significant(self):
        return self.passed_direction_filter and self.passed_permutation


def reported_lag(i):
    """Internal leading lag ``i`` (days before) to the reported day offset."""
    return -int(i)


def lagged_pairs(s, f, lag):
    """Pair ``s`` shifted by ``lag`` with ``f``: ``(s[t - lag], f[t])``."""
    n = len(s)
    if lag > 0:
        return s[: n - lag], f[lag:]
    if lag < 0:
        return s[-lag:], f[: n + lag]
    return s, f


def lag_mi_profile(s, f, lag_window=10, symbol="", min_sample=100, bins=None,
                   binning="equal_width"):
    """MI between social ``s`` and financial ``f`` at every lag in ``[-L, L]``.

    The bin count is recomputed per lag from that lag's paired sample size
    unless ``bins`` is fixed.
    """
    s = np.asarray(s, dtype=float)
    f = np.asarray(f, dtype=float)
    if s.shape != f.shape:
        raise ValueError(f"length mismatch: {s.size} vs {f.size}")
    if s.size <= lag_window + min_sample:
        raise SeriesTooShortError(
            f"{symbol}: {s.size} observations, need more than {lag_window + min_sample}"
        )
    mi, n_pairs = {}, {}
    for lag in range(-lag_window, lag_window + 1):
        a, b = paired_defined(*lagged_pairs(s, f, lag))
        n_pairs[lag] = int(a.size)
        mi[lag] = mutual_information(a, b, k=bins, binning=binning)
    return LagMiProfile(symbol=symbol, lag_window=lag_window, mi=mi, n_pairs=n_pairs)


def information_surplus(profile):
    """Percent MI above the contemporaneous baseline, for every lag."""
    base = profile.baseline
    if base <= 0:
        raise ZeroBaselineError(f"{profile.symbol}: baseline MI is zero")
    surplus = {lag: (v - base) / base * 100.0 for lag, v in profile.mi.items()}
    surplus[0] = 0.0
    return replace(profile, surplus=surplus)


def trailing_dominant_lags(profile):
    """Leading lags ``i`` where ``mi[i] < mi[-i]``."""
    return [i for i in profile.leading if profile.mi[i] < profile.mi[-i]]


def direction_filter(profile, mode="aggregate"):
    """True when the profile is more leading than trailing.

    ``aggregate`` compares mean leading MI against mean trailing MI (strict).
    ``per_lag`` fails as soon as any leading lag carries less MI than its
    trailing mirror.
    """
    if mode == "per_lag":
        return not trailing_dominant_lags(profile)
    if mode != "aggregate":
        raise ValueError(f"unknown direction mode {mode!r}")
    lead = np.mean([profile.mi[i] for i in profile.leading])
    trail = np.mean([profile.mi[-i] for i in profile.leading])
    return bool(lead > trail)


def significant_lags(profile):
    """Count and size of leading lags whose surplus beats the ex-post mean.

    A leading lag ``i`` counts when ``surplus[i] > max(theta, 0)`` with
    ``theta`` the mean trailing surplus. ``max_lag`` is reported in days
    prior (negative) and is None when no lag counts.
    """
    if profile.surplus is None:
        raise ValueError("surplus not computed; call information_surplus first")
    sp = profile.surplus
    theta = float(np.mean([sp[-i] for i in profile.leading]))
    cut = max(theta, 0.0)
    hits = [i for i in profile.leading if sp[i] > cut]
    if hits:
        # first (smallest) lag wins ties
        best = max(hits, key=lambda i: (sp[i], -i))
        max_pct, max_lag = float(sp[best]), reported_lag(best)
    else:
        max_pct, max_lag = 0.0, None
    avg = float(np.mean([sp[i] for i in profile.leading]))
    return LagSummary(len(hits), max_pct, max_lag, avg, theta)


def _statistic(profile, kind):
    if kind == "max_surplus":
        return max(profile.surplus[i] for i in profile.leading)
    return float(significant_lags(profile).pos_lag_count)


def _replicate_seed(seed, r):
    return np.random.SeedSequence([int(seed), int(r)])


def _null_statistic(s, f, profile, cfg, r):
    rng = np.random.default_rng(_replicate_seed(cfg.seed, r))
    target = s if cfg.shuffle == "social" else f
    shuffled = target.copy()
    defined = np.flatnonzero(~np.isnan(shuffled))
    shuffled[defined] = shuffled[rng.permutation(defined)]
    ps, pf = (shuffled, f) if cfg.shuffle == "social" else (s, shuffled)
    null = lag_mi_profile(ps, pf, profile.lag_window, profile.symbol, min_sample=0,
                          bins=cfg.bins, binning=cfg.binning)
    try:
        null = information_surplus(null)
    except ZeroBaselineError:
        return np.inf
    return _statistic(null, cfg.statistic)


def null_distribution(s, f, profile, cfg):
    """Test statistic on ``cfg.n_perm`` shuffled surrogates.

    Replicate ``r`` draws its permutation from a seed derived from
    ``(cfg.seed, r)``, so the result does not depend on ``cfg.workers``.
    """
    s = np.asarray(s, dtype=float)
    f = np.asarray(f, dtype=float)

    def one(r):
        return _null_statistic(s, f, profile, cfg, r)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            values = list(pool.map(one, range(cfg.n_perm)))
    else:
        values = [one(r) for r in range(cfg.n_perm)]
    return np.asarray(values, dtype=float)


def permutation_test(s, f, profile, cfg):
    """Compare the observed statistic with shuffled-series surrogates.

    Passes when the observed statistic strictly exceeds the ``1 - alpha``
    quantile of the null values.

    Returns:
        ``(passed, p_value_proxy)`` where the proxy is
        ``(1 + #{null >= observed}) / (n_perm + 1)``.
    """
    if profile.surplus is None:
        profile = information_surplus(profile)
    observed = _statistic(profile, cfg.statistic)
    null = null_distribution(s, f, profile, cfg)
    # zero-baseline surrogates are +inf; cap so quantile interpolation stays finite
    capped = np.minimum(null, np.finfo(float).max)
    cut = np.quantile(capped, 1 - cfg.alpha)
    passed = bool(observed > cut)
    p = (1 + int(np.sum(null >= observed))) / (cfg.n_perm + 1)
    return passed, p


def evaluate_symbol(panel, cfg=None, features=None):
    """Run scan, surplus, direction filter and permutation test for one panel.

    Derived columns are computed with ``features`` when missing. A symbol
    that fails a gate gets a verdict naming the stage in ``failed_stage``
    (``"zero_baseline"``, ``"direction"`` or ``"permutation"``).
    """
    cfg = cfg or SignificanceConfig()
    if SOCIAL_SERIES not in panel.derived or FINANCIAL_SERIES not in panel.derived:
        from .features import derive_all

        panel = derive_all(panel, features)
    s = panel.column(SOCIAL_SERIES)
    f = panel.column(FINANCIAL_SERIES)
    profile = lag_mi_profile(s, f, cfg.lag_window, panel.symbol, cfg.min_sample,
                             cfg.bins, cfg.binning)
    verdict = SurplusVerdict(symbol=panel.symbol, profile=profile)
    try:
        profile = information_surplus(profile)
    except ZeroBaselineError as exc:
        verdict.failed_stage = "zero_baseline"
        verdict.reason = str(exc)
        return verdict
    verdict.profile = profile
    summary = significant_lags(profile)
    verdict.pos_lag_count = summary.pos_lag_count
    verdict.max_inf_surp_pct = summary.max_inf_surp_pct
    verdict.max_lag = summary.max_lag
    verdict.avg_surplus = summary.avg_surplus

    verdict.passed_direction_filter = direction_filter(profile, cfg.direction_mode)
    if not verdict.passed_direction_filter:
        verdict.failed_stage = "direction"
        verdict.reason = "trailing MI not below leading MI"
        return verdict
    passed, p = permutation_test(s, f, profile, cfg)
    verdict.passed_permutation = passed
    verdict.p_value_proxy = p
    if not passed:
        verdict.failed_stage = "permutation"
        verdict.reason = f"observed statistic below {1 - cfg.alpha:.2f} null quantile"
    return verdict
