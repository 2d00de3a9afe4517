"""Run configuration and its flat ``key = value`` file format."""

import os
from dataclasses import dataclass, fields, replace
from datetime import date
from typing import Optional

from .cluster import DEFAULT_K_SET
from .features import DEFAULT_PCA_FEATURES, FeatureConfig
from .fusion import DEFAULT_MIN_OBS, DEFAULT_PERIOD
from .surplus import SignificanceConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # data source: either sentiment + quotes files, or synth_symbols > 0
    sentiment: Optional[str] = None
    quotes: Optional[str] = None
    metadata: Optional[str] = None
    delimiter: str = ","
    synth_symbols: int = 0
    synth_coupled: int = 0
    synth_n_days: int = 1000
    synth_tau: int = 3
    synth_rho: float = 0.9
    # analysis
    period_start: date = DEFAULT_PERIOD[0]
    period_end: date = DEFAULT_PERIOD[1]
    min_obs: int = DEFAULT_MIN_OBS
    lag_window: int = 10
    n_perm: int = 100
    alpha: float = 0.05
    statistic: str = "max_surplus"
    shuffle: str = "social"
    direction_mode: str = "aggregate"
    tr_mode: str = "verbatim"
    pca_features: tuple = DEFAULT_PCA_FEATURES
    binning: str = "equal_width"
    bins: Optional[int] = None
    k_set: tuple = DEFAULT_K_SET
    restarts: int = 10
    significant_only: bool = True
    # execution
    output: str = "socialvol_out"
    seed: int = 0
    workers: int = 1

    @property
    def is_synth(self):
        return self.synth_symbols > 0

    def validate(self):
        has_files = bool(self.sentiment or self.quotes)
        if has_files and self.is_synth:
            raise ConfigError("give either input files or synth_symbols, not both")
        if not has_files and not self.is_synth:
            raise ConfigError("no data source: set sentiment + quotes or synth_symbols")
        if has_files:
            if not (self.sentiment and self.quotes):
                raise ConfigError("both sentiment and quotes paths are required")
            for p in (self.sentiment, self.quotes, self.metadata):
                if p and not os.access(p, os.R_OK):
                    raise ConfigError(f"cannot read {p}")
        elif self.metadata and not os.access(self.metadata, os.R_OK):
            raise ConfigError(f"cannot read {self.metadata}")
        if not 0 <= self.synth_coupled <= self.synth_symbols:
            raise ConfigError("synth_coupled must lie in [0, synth_symbols]")
        if self.period_end < self.period_start:
            raise ConfigError("period_end precedes period_start")
        try:
            self.significance()
            self.features()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.binning not in ("equal_width", "equal_frequency"):
            raise ConfigError(f"unknown binning {self.binning!r}")
        return self

    def significance(self):
        return SignificanceConfig(
            lag_window=self.lag_window, n_perm=self.n_perm, alpha=self.alpha,
            seed=self.seed, min_sample=self.min_obs, bins=self.bins,
            binning=self.binning, statistic=self.statistic, shuffle=self.shuffle,
            direction_mode=self.direction_mode,
        )

    def features(self):
        return FeatureConfig(tr_mode=self.tr_mode, pca_features=tuple(self.pca_features))


CONFIG_KEYS_HELP = """\
config file keys (flat `key = value`, `#` starts a comment):
  sentiment, quotes, metadata   input paths (metadata: SYMBOL,SECTOR[,MARKET_CAP])
  delimiter                     input field separator (default ,)
  synth_symbols, synth_coupled  synthetic source instead of files
  synth_n_days, synth_tau, synth_rho
  period_start, period_end      analysis period, YYYY-MM-DD
  min_obs                       minimum joint days per symbol (default 100)
  lag_window                    L, lags scanned in [-L, L] (default 10)
  n_perm, alpha                 permutation count and level (100, 0.05)
  statistic                     max_surplus | pos_lag_count
  shuffle                       social | financial
  direction_mode                aggregate | per_lag
  tr_mode                       verbatim | absolute
  pca_features                  comma-separated social columns
  binning, bins                 equal_width | equal_frequency; fixed bin count
  k_set, restarts               e.g. 2,3,4,5,6,7 and 10
  significant_only              cluster only significant symbols (true)
  output, seed, workers         output directory, global seed, threads
"""


def _to_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _to_optional_int(text):
    t = str(text).strip().lower()
    return None if t in ("", "none", "auto") else int(t)


_PARSERS = {
    "synth_symbols": int, "synth_coupled": int, "synth_n_days": int, "synth_tau": int,
    "synth_rho": float, "period_start": date.fromisoformat, "period_end": date.fromisoformat,
    "min_obs": int, "lag_window": int, "n_perm": int, "alpha": float,
    "pca_features": lambda t: tuple(x.strip().upper() for x in str(t).split(",") if x.strip()),
    "bins": _to_optional_int,
    "k_set": lambda t: tuple(int(x) for x in str(t).split(",") if x.strip()),
    "restarts": int, "significant_only": _to_bool, "seed": int, "workers": int,
}

FIELD_NAMES = tuple(f.name for f in fields(RunConfig))


def coerce(key, value):
    if key not in FIELD_NAMES:
        raise ConfigError(f"unknown config key {key!r}")
    if isinstance(value, str):
        try:
            return _PARSERS.get(key, str)(value.strip())
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc
    return value


def parse_config_text(text):
    values = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = coerce(key, value)
    return values


def load_config(path=None, **overrides):
    values = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    for k, v in overrides.items():
        if v is not None:
            values[k] = coerce(k, v)
    return replace(RunConfig(), **values)


def config_items(cfg):
    """``(key, text)`` pairs in declaration order, for echoing into manifests."""
    out = []
    for name in FIELD_NAMES:
        v = getattr(cfg, name)
        if isinstance(v, tuple):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, date):
            v = v.isoformat()
        out.append((name, "" if v is None else str(v)))
    return out
