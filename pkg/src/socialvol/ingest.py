"""Parsing and validation of daily sentiment aggregates and market quotes.

Both file formats are delimiter-separated text with a header row. Columns
are matched by case-insensitive name and may appear in any order. Rows that
break a record invariant are collected in an :class:`IngestReport` instead
of aborting the file; only a missing required column is fatal.
"""

import csv
import io
import logging
import math
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from datetime import date, datetime

logger = logging.getLogger(__name__)

SENTIMENT_COLUMNS = (
    "SYMBOL",
    "DATE",
    "BULLISH_INTENSITY",
    "BEARISH_INTENSITY",
    "BULL_SCORED_MESSAGES",
    "BEAR_SCORED_MESSAGES",
    "TOTAL_SCANNED_MESSAGES",
)
QUOTE_COLUMNS = ("SYMBOL", "DATE", "OPEN", "HIGH", "LOW", "CLOSE", "VOLUME")

# accepted header spellings for the date column
_DATE_ALIASES = ("DATE", "TIMESTAMP_UTC", "TIMESTAMP")


class SchemaError(ValueError):
    """A required column is missing or the header row is absent."""


class ValidationError(ValueError):
    """Fetched data contained rows that fail record validation."""

    def __init__(self, message, rejected=()):
        super().__init__(message)
        self.rejected = list(rejected)


class SourceUnavailableError(OSError):
    """The remote source could not be reached. Safe to retry."""


@dataclass(frozen=True, order=True)
class SentimentDaily:
    symbol: str
    date: date
    bullish_intensity: float
    bearish_intensity: float
    bull_scored_messages: int
    bear_scored_messages: int
    total_scanned_messages: int


@dataclass(frozen=True, order=True)
class QuoteDaily:
    symbol: str
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: int


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: list = field(default_factory=list)
    symbols_seen: set = field(default_factory=set)
    warnings: list = field(default_factory=list)

    @property
    def total_rows(self):
        return self.accepted + len(self.rejected)


class RowError(ValueError):
    pass


def parse_date(text):
    """Parse ``YYYY-MM-DD`` or ``YYYY-MM-DDTHH:MM:SSZ``; time of day is dropped."""
    text = text.strip()
    try:
        if len(text) == 10:
            return date.fromisoformat(text)
        if text.endswith("Z"):
            text = text[:-1]
        return datetime.fromisoformat(text).date()
    except ValueError:
        raise RowError(f"bad date {text!r}") from None


def _real(text, name):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise RowError(f"unparseable number in {name}: {text!r}") from None
    if not math.isfinite(value):
        raise RowError(f"non-finite value in {name}: {text!r}")
    return value


def _count(text, name):
    value = _real(text, name)
    if value != int(value):
        raise RowError(f"non-integer count in {name}: {text!r}")
    value = int(value)
    if value < 0:
        raise RowError(f"negative count in {name}: {value}")
    return value


def _symbol(text):
    sym = text.strip().lstrip("$").upper()
    if not sym or any(ch.isspace() for ch in sym):
        raise RowError(f"bad symbol {text!r}")
    return sym


def _text_stream(stream):
    if isinstance(stream, (bytes, bytearray)):
        return io.StringIO(bytes(stream).decode("utf-8-sig"), newline="")
    if isinstance(stream, str):
        return io.StringIO(stream, newline="")
    if isinstance(stream, io.TextIOBase):
        return stream
    # binary file-like
    return io.TextIOWrapper(stream, encoding="utf-8-sig", newline="")


def _header_map(header, required):
    names = [h.strip().lstrip("﻿").upper() for h in header]
    positions = {}
    for i, name in enumerate(names):
        if name in _DATE_ALIASES:
            name = "DATE"
        positions.setdefault(name, i)
    missing = [c for c in required if c not in positions]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    return positions


def _parse(stream, required, build, delimiter):
    reader = csv.reader(_text_stream(stream), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("input has no header row") from None
    except csv.Error as exc:
        raise SchemaError(f"malformed header: {exc}") from None
    cols = _header_map(header, required)
    report = IngestReport()
    records = {}
    try:
        rows = list(reader)
    except csv.Error as exc:
        raise SchemaError(f"malformed delimited text near line {reader.line_num}: {exc}") from None
    for line_no, row in enumerate(rows, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            if len(row) < len(header):
                raise RowError(f"expected {len(header)} fields, got {len(row)}")
            rec = build({name: row[i] for name, i in cols.items()})
        except RowError as exc:
            report.rejected.append((line_no, str(exc)))
            continue
        report.symbols_seen.add(rec.symbol)
        key = (rec.symbol, rec.date)
        if key in records:
            report.rejected.append((line_no, "duplicate"))
            continue
        records[key] = rec
        report.accepted += 1
    return [records[k] for k in sorted(records)], report


def _build_sentiment(f):
    rec = SentimentDaily(
        symbol=_symbol(f["SYMBOL"]),
        date=parse_date(f["DATE"]),
        bullish_intensity=_real(f["BULLISH_INTENSITY"], "BULLISH_INTENSITY"),
        bearish_intensity=_real(f["BEARISH_INTENSITY"], "BEARISH_INTENSITY"),
        bull_scored_messages=_count(f["BULL_SCORED_MESSAGES"], "BULL_SCORED_MESSAGES"),
        bear_scored_messages=_count(f["BEAR_SCORED_MESSAGES"], "BEAR_SCORED_MESSAGES"),
        total_scanned_messages=_count(f["TOTAL_SCANNED_MESSAGES"], "TOTAL_SCANNED_MESSAGES"),
    )
    if rec.bullish_intensity < 0 or rec.bearish_intensity < 0:
        raise RowError("negative intensity")
    return rec


def _build_quote(f):
    rec = QuoteDaily(
        symbol=_symbol(f["SYMBOL"]),
        date=parse_date(f["DATE"]),
        open=_real(f["OPEN"], "OPEN"),
        high=_real(f["HIGH"], "HIGH"),
        low=_real(f["LOW"], "LOW"),
        close=_real(f["CLOSE"], "CLOSE"),
        volume=_count(f["VOLUME"], "VOLUME"),
    )
    if min(rec.open, rec.high, rec.low, rec.close) <= 0:
        raise RowError("non-positive price")
    if rec.high < rec.low:
        raise RowError(f"high {rec.high} below low {rec.low}")
    if not (rec.low <= rec.open <= rec.high and rec.low <= rec.close <= rec.high):
        raise RowError("open/close outside [low, high]")
    return rec


def parse_sentiment(stream, delimiter=","):
    """Parse daily sentiment aggregates.

    Args:
        stream: Text or binary file object, or the raw content as str/bytes.
        delimiter: Field separator.

    Returns:
        ``(records, report)`` with records sorted by ``(symbol, date)``.

    Raises:
        SchemaError: a required column is missing.
    """
    records, report = _parse(stream, SENTIMENT_COLUMNS, _build_sentiment, delimiter)
    for rec in records:
        if rec.bull_scored_messages + rec.bear_scored_messages > rec.total_scanned_messages:
            report.warnings.append(
                f"{rec.symbol} {rec.date}: scored messages exceed total scanned"
            )
    if report.warnings:
        logger.warning("%d sentiment rows have scored > scanned messages", len(report.warnings))
    return records, report


def parse_quotes(stream, delimiter=","):
    """Parse daily OHLCV quotes. Same contract as :func:`parse_sentiment`."""
    return _parse(stream, QUOTE_COLUMNS, _build_quote, delimiter)


def read_sentiment_file(path, delimiter=","):
    with open(path, "rb") as fh:
        return parse_sentiment(fh.read(), delimiter)


def read_quotes_file(path, delimiter=","):
    with open(path, "rb") as fh:
        return parse_quotes(fh.read(), delimiter)


def write_sentiment(records, stream, delimiter=","):
    w = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    w.writerow(SENTIMENT_COLUMNS)
    for r in records:
        w.writerow([r.symbol, r.date.isoformat(), repr(r.bullish_intensity),
                    repr(r.bearish_intensity), r.bull_scored_messages,
                    r.bear_scored_messages, r.total_scanned_messages])


def write_quotes(records, stream, delimiter=","):
    w = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    w.writerow(QUOTE_COLUMNS)
    for r in records:
        w.writerow([r.symbol, r.date.isoformat(), repr(r.open), repr(r.high),
                    repr(r.low), repr(r.close), r.volume])


@dataclass(frozen=True)
class RemoteSource:
    """Where to fetch quotes from.

    ``url_template`` may use ``{symbol}``, ``{start}`` and ``{end}``
    placeholders (dates rendered as ``YYYY-MM-DD``). The response body must be
    in the :func:`parse_quotes` format.
    """

    url_template: str
    delimiter: str = ","
    timeout: float = 30.0

    def url_for(self, symbol, start, end):
        return self.url_template.format(symbol=symbol, start=start.isoformat(), end=end.isoformat())


def fetch_quotes(source, symbol, start, end):
    """Fetch and validate quotes for one symbol over ``[start, end]``.

    Raises:
        SourceUnavailableError: network failure or non-2xx response.
        ValidationError: the payload is malformed or has invalid rows; no
            partial result is returned in that case.
    """
    url = source.url_for(symbol, start, end)
    try:
        with urllib.request.urlopen(url, timeout=source.timeout) as resp:
            body = resp.read()
    except urllib.error.HTTPError as exc:
        raise SourceUnavailableError(f"{url}: HTTP {exc.code}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise SourceUnavailableError(f"{url}: {exc}") from exc
    if not body.strip():
        return []
    try:
        records, report = parse_quotes(body, source.delimiter)
    except SchemaError as exc:
        raise ValidationError(f"{url}: {exc}") from exc
    if report.rejected:
        raise ValidationError(
            f"{url}: {len(report.rejected)} invalid row(s), first: {report.rejected[0]}",
            report.rejected,
        )
    return [r for r in records if start <= r.date <= end]
