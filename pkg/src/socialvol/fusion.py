"""Date alignment of sentiment and quote records into per-symbol panels."""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_PERIOD = (date(2012, 1, 1), date(2016, 1, 1))
DEFAULT_MIN_OBS = 100

_SOCIAL_FIELDS = {
    "BULLISH_INTENSITY": "bullish_intensity",
    "BEARISH_INTENSITY": "bearish_intensity",
    "BULL_SCORED_MESSAGES": "bull_scored_messages",
    "BEAR_SCORED_MESSAGES": "bear_scored_messages",
    "TOTAL_SCANNED_MESSAGES": "total_scanned_messages",
}
_QUOTE_FIELDS = {
    "OPEN": "open",
    "HIGH": "high",
    "LOW": "low",
    "CLOSE": "close",
    "VOLUME": "volume",
}


class NoJointCoverageError(ValueError):
    """No symbol has a single date present in both inputs within the period."""


@dataclass
class SymbolPanel:
    """Date-aligned social and financial records for one symbol.

    ``derived`` maps column name to a float array the length of ``dates``;
    NaN marks an undefined entry. ``dropped_dates`` holds dates inside the
    panel span that appeared in only one of the two inputs.
    """

    symbol: str
    dates: list
    social: list
    financial: list
    derived: dict = field(default_factory=dict)
    dropped_dates: tuple = ()
    pca: object = None

    def __post_init__(self):
        n = len(self.dates)
        if len(self.social) != n or len(self.financial) != n:
            raise ValueError(f"{self.symbol}: social/financial length differs from dates")
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise ValueError(f"{self.symbol}: dates must be strictly increasing")
        for name, col in self.derived.items():
            if len(col) != n:
                raise ValueError(f"{self.symbol}: derived column {name} has wrong length")

    def __len__(self):
        return len(self.dates)

    def column(self, name):
        """Float array for a raw attribute or derived column, by upper-case name."""
        key = name.upper()
        if key in self.derived:
            return np.asarray(self.derived[key], dtype=float)
        if key in _SOCIAL_FIELDS:
            attr = _SOCIAL_FIELDS[key]
            return np.array([getattr(r, attr) for r in self.social], dtype=float)
        if key in _QUOTE_FIELDS:
            attr = _QUOTE_FIELDS[key]
            return np.array([getattr(r, attr) for r in self.financial], dtype=float)
        raise KeyError(f"unknown column {name!r}")


@dataclass
class Alignment:
    panels: dict
    excluded: dict

    def all_panels(self):
        merged = dict(self.panels)
        merged.update(self.excluded)
        return {k: merged[k] for k in sorted(merged)}


def align(sentiment, quotes, period=DEFAULT_PERIOD, min_obs=DEFAULT_MIN_OBS):
    """Inner-join sentiment and quotes per symbol over ``period``.

    Args:
        sentiment: Validated ``SentimentDaily`` records.
        quotes: Validated ``QuoteDaily`` records.
        period: Inclusive ``(start, end)`` date pair.
        min_obs: Symbols with fewer joint days are moved to ``excluded``.

    Returns:
        An :class:`Alignment` with kept and excluded panels, keyed by symbol.

    Raises:
        NoJointCoverageError: no symbol has any joint day in the period.
    """
    start, end = period
    if end < start:
        raise ValueError(f"empty period {start}..{end}")
    social = defaultdict(dict)
    for rec in sentiment:
        if start <= rec.date <= end:
            social[rec.symbol][rec.date] = rec
    fin = defaultdict(dict)
    for rec in quotes:
        if start <= rec.date <= end:
            fin[rec.symbol][rec.date] = rec

    kept, excluded = {}, {}
    for sym in sorted(set(social) | set(fin)):
        s, q = social.get(sym, {}), fin.get(sym, {})
        joint = sorted(s.keys() & q.keys())
        if joint:
            lo, hi = joint[0], joint[-1]
            dropped = tuple(sorted(d for d in (s.keys() ^ q.keys()) if lo < d < hi))
        else:
            dropped = ()
        panel = SymbolPanel(
            symbol=sym,
            dates=joint,
            social=[s[d] for d in joint],
            financial=[q[d] for d in joint],
            dropped_dates=dropped,
        )
        if len(joint) < min_obs:
            logger.info("%s excluded: %d joint days < min_obs %d", sym, len(joint), min_obs)
            excluded[sym] = panel
        else:
            kept[sym] = panel
    if not any(len(p) for p in (*kept.values(), *excluded.values())):
        raise NoJointCoverageError("no joint coverage between sentiment and quotes")
    return Alignment(panels=kept, excluded=excluded)


@dataclass(frozen=True)
class CoverageRow:
    symbol: str
    joint_days: int
    first_date: object
    last_date: object
    gap_count: int
    included: bool


def coverage_report(panels, excluded=None):
    """One row per symbol; ``gap_count`` counts interior dates lost to the join."""
    rows = []
    excluded = excluded or {}
    for sym in sorted(set(panels) | set(excluded)):
        p = panels.get(sym) or excluded[sym]
        rows.append(CoverageRow(
            symbol=sym,
            joint_days=len(p),
            first_date=p.dates[0] if p.dates else None,
            last_date=p.dates[-1] if p.dates else None,
            gap_count=len(p.dropped_dates),
            included=sym in panels,
        ))
    return rows
