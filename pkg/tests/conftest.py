from datetime import date, timedelta

import numpy as np
import pytest

from socialvol.cluster import FEATURE_NAMES, StockFeatureVector
from socialvol.fusion import SymbolPanel
from socialvol.ingest import QuoteDaily, SentimentDaily

ACCEPTANCE_RESULTS = []


def make_panel(social_cols=None, quote_cols=None, n=None, symbol="TST", start=date(2013, 5, 1)):
    """Build a panel from column lists; unspecified columns get benign defaults."""
    social_cols = social_cols or {}
    quote_cols = quote_cols or {}
    if n is None:
        n = len(next(iter({**social_cols, **quote_cols}.values())))
    dates = [start + timedelta(days=i) for i in range(n)]

    def col(src, name, default):
        return src.get(name, [default(i) for i in range(n)])

    bull = col(social_cols, "bullish_intensity", lambda i: 1.0 + (i % 3))
    bear = col(social_cols, "bearish_intensity", lambda i: 0.5 + (i % 2))
    bulln = col(social_cols, "bull_scored_messages", lambda i: 10 + i)
    bearn = col(social_cols, "bear_scored_messages", lambda i: 5 + (i * 7) % 4)
    total = col(social_cols, "total_scanned_messages", lambda i: 40 + (i * 3) % 11)
    close = col(quote_cols, "close", lambda i: 100.0 + i)
    high = col(quote_cols, "high", lambda i: close[i] + 1.0)
    low = col(quote_cols, "low", lambda i: close[i] - 1.0)
    open_ = col(quote_cols, "open", lambda i: close[i])
    vol = col(quote_cols, "volume", lambda i: 1000 + i)
    social = [SentimentDaily(symbol, d, float(bull[i]), float(bear[i]), int(bulln[i]),
                             int(bearn[i]), int(total[i])) for i, d in enumerate(dates)]
    fin = [QuoteDaily(symbol, d, float(open_[i]), float(high[i]), float(low[i]),
                      float(close[i]), int(vol[i])) for i, d in enumerate(dates)]
    return SymbolPanel(symbol=symbol, dates=dates, social=social, financial=fin)


def story_population(seed=0, n=60, noise=0.01):
    """Feature vectors where surplus rises with BULL_MINUS_BEAR and falls with volume.

    A latent score ``u`` drives the three story features with relative
    measurement noise ``noise``; the other features are unrelated noise.
    """
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, n)
    vectors = []
    for i in range(n):
        f = {name: float(rng.normal(1.0, 0.3)) for name in FEATURE_NAMES}
        f["MAX_INF_SURP_PCT"] = 10 + 60 * u[i] + rng.normal(0, 60 * noise)
        f["BULL_MINUS_BEAR"] = 0.1 + 0.8 * u[i] + rng.normal(0, 0.8 * noise)
        f["TOTAL_SCANNED_MESSAGES"] = 600 - 400 * u[i] + rng.normal(0, 400 * noise)
        f["AVG_SURPLUS"] = 2 + 8 * u[i] + rng.normal(0, 1)
        f["POS_LAG_COUNT"] = float(rng.integers(1, 4) + round(4 * u[i]))
        f["MAX_LAG"] = float(-rng.integers(1, 11))
        vectors.append(StockFeatureVector(f"S{i:02d}", f))
    return vectors


@pytest.fixture
def record(request):
    """Attach a one-line measurement to the acceptance summary."""
    def _record(text):
        request.node.user_properties.append(("detail", text))
    return _record


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties or ())
    if props.get("acceptance"):
        details = "; ".join(v for k, v in report.user_properties if k == "detail")
        ACCEPTANCE_RESULTS.append((props["acceptance"], report.outcome, details))


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    m = item.get_closest_marker("acceptance")
    if m:
        item.user_properties.append(("acceptance", f"C{m.args[0]:>2} {m.args[1]}"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, details in sorted(ACCEPTANCE_RESULTS):
        line = f"[{'PASS' if outcome == 'passed' else 'FAIL'}] {label}"
        terminalreporter.write_line(f"{line} ({details})" if details else line)
