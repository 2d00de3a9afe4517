"""Synthetic panels with a known social-to-volatility coupling.

A latent daily social driver ``z_t ~ N(0, 1)`` generates every sentiment
field through monotone maps plus jitter, so the first principal component
of the social block tracks ``z_t`` up to sign. Daily volatility magnitude is

    v_t = (1 - rho) * |eps_t| + rho * |z_{t - tau}|

and each day's high/low range is built so its True Range (in either mode)
equals ``base_vol + v_t`` scaled to price units. The floor keeps TR away from
zero; without it the log-ratio of TR has heavy tails that swamp equal-width
bins.
"""

from dataclasses import dataclass
from datetime import date

import numpy as np

from .fusion import SymbolPanel
from .ingest import QuoteDaily, SentimentDaily

# daily range per unit of v, as a fraction of the previous close
_RANGE_SCALE = 0.01
_JITTER_SD = 0.15


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters.

    ``social_leads=False`` time-reverses the latent pair so that sentiment
    trails volatility by ``tau`` days instead of leading it.
    """

    n_days: int = 1000
    tau: int = 3
    rho: float = 0.9
    noise_sd: float = 1.0
    seed: int = 0
    base_price: float = 100.0
    base_vol: float = 0.5
    symbol: str = "SYN"
    start: date = date(2012, 1, 2)
    social_leads: bool = True

    def __post_init__(self):
        if self.n_days < 2:
            raise ValueError("n_days must be >= 2")
        if not 0 <= self.tau < self.n_days:
            raise ValueError("tau must satisfy 0 <= tau < n_days")
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if self.noise_sd <= 0:
            raise ValueError("noise_sd must be positive")
        if self.base_price <= 0:
            raise ValueError("base_price must be positive")
        if self.base_vol < 0:
            raise ValueError("base_vol must be non-negative")


def business_days(start, n):
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    days = np.busday_offset(first, np.arange(n))
    return [d.item() for d in days]


def latent_series(spec):
    """Return ``(z, v)``: social driver and volatility magnitude per day.

    ``v`` excludes the ``base_vol`` floor.
    """
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    total = spec.n_days + spec.tau
    z_full = rng.standard_normal(total)
    eps = rng.normal(0.0, spec.noise_sd, spec.n_days)
    z = z_full[spec.tau:]
    z_lagged = z_full[: spec.n_days]
    v = (1 - spec.rho) * np.abs(eps) + spec.rho * np.abs(z_lagged)
    if not spec.social_leads:
        z, v = z[::-1].copy(), v[::-1].copy()
    return z, v


def gen_coupled_panel(spec):
    """Generate one synthetic :class:`SymbolPanel` from ``spec``."""
    z, v = latent_series(spec)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
    n = spec.n_days
    dates = business_days(spec.start, n)

    jit = lambda: rng.normal(0.0, _JITTER_SD, n)  # noqa: E731
    bullish = np.exp(0.5 * z + jit())
    bearish = np.exp(-0.5 * z + jit())
    bull_n = rng.poisson(40.0 * np.exp(0.5 * z + jit()))
    bear_n = rng.poisson(20.0 * np.exp(-0.5 * z + jit()))
    total_n = bull_n + bear_n + rng.poisson(60.0, n)

    u_low = rng.uniform(0.0, 1.0, n)
    u_open = rng.uniform(0.0, 1.0, n)
    u_close = rng.uniform(0.0, 1.0, n)
    volume = rng.poisson(1_000_000, n)

    social, financial = [], []
    prev_close = spec.base_price
    for t in range(n):
        width = prev_close * min(_RANGE_SCALE * (spec.base_vol + v[t]), 0.5)
        # prior close sits inside [low, high], so both TR modes equal the width
        low = prev_close - u_low[t] * width
        high = low + width
        if t == 0:
            open_ = close = prev_close
        else:
            open_ = low + u_open[t] * width
            close = low + u_close[t] * width
        open_ = min(max(open_, low), high)
        close = min(max(close, low), high)
        financial.append(QuoteDaily(spec.symbol, dates[t], float(open_), float(high),
                                    float(low), float(close), int(volume[t])))
        social.append(SentimentDaily(spec.symbol, dates[t], float(bullish[t]),
                                     float(bearish[t]), int(bull_n[t]), int(bear_n[t]),
                                     int(total_n[t])))
        prev_close = close
    return SymbolPanel(symbol=spec.symbol, dates=dates, social=social, financial=financial)


def gen_null_panel(n_days, seed, symbol="NULL"):
    """Alias for an uncoupled panel (``rho = 0``)."""
    return gen_coupled_panel(SynthSpec(n_days=n_days, tau=0, rho=0.0, seed=seed, symbol=symbol))


def panel_records(panels):
    """Flatten panels into sorted sentiment and quote record lists."""
    sentiment, quotes = [], []
    for p in panels:
        sentiment.extend(p.social)
        quotes.extend(p.financial)
    return sorted(sentiment), sorted(quotes)
