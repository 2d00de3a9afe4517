"""Delimiter-separated report artifacts.

Every writer here is deterministic: rows are sorted, floats are rendered
with a fixed format, and nothing time- or host-dependent is written.
"""

import csv
import math
from collections import defaultdict

import numpy as np
from scipy import stats

from .cluster import FEATURE_NAMES, top_surplus_cluster

SIGNIFICANT_COLUMNS = ("SYMBOL", "MAX_SURPLUS_PCT", "MAX_LAG", "AVG_SURPLUS",
                       "POS_LAG_COUNT", "SECTOR")
SURPLUS_COLUMNS = ("LAG", "MI_BITS", "SURPLUS_PCT", "N_PAIRS")
CORRELATION_FEATURES = FEATURE_NAMES[:10] + ("PCA_SOCIAL", "PCA_SOCIAL_CHANGE")
NA = "NA"


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return NA
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return format(x, ".10g")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def read_metadata(path):
    """``SYMBOL -> {"SECTOR": str, "MARKET_CAP": float | None}``."""
    meta = {}
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        cols = {c.strip().upper(): c for c in (reader.fieldnames or [])}
        if "SYMBOL" not in cols:
            raise ValueError(f"{path}: metadata needs a SYMBOL column")
        for row in reader:
            sym = row[cols["SYMBOL"]].strip().upper()
            cap = row.get(cols.get("MARKET_CAP", ""), "") if "MARKET_CAP" in cols else ""
            meta[sym] = {
                "SECTOR": row[cols["SECTOR"]].strip() if "SECTOR" in cols else "",
                "MARKET_CAP": float(cap) if cap and cap.strip() else None,
            }
    return meta


def emit_significant_table(verdicts, path, sectors=None):
    """Alphabetical table of significant symbols. Returns the row count."""
    sectors = sectors or {}
    rows = sorted((v for v in verdicts if v.significant), key=lambda v: v.symbol)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(SIGNIFICANT_COLUMNS)
        for v in rows:
            w.writerow([v.symbol, fmt(v.max_inf_surp_pct), fmt(v.max_lag),
                        fmt(v.avg_surplus), fmt(v.pos_lag_count), sectors.get(v.symbol, "")])
    return len(rows)


def emit_verdicts(verdicts, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["SYMBOL", "SIGNIFICANT", "FAILED_STAGE", "DIRECTION_FILTER",
                    "PERMUTATION", "P_VALUE_PROXY", "MAX_SURPLUS_PCT", "MAX_LAG",
                    "AVG_SURPLUS", "POS_LAG_COUNT", "REASON"])
        for v in sorted(verdicts, key=lambda v: v.symbol):
            w.writerow([v.symbol, fmt(v.significant), v.failed_stage or "",
                        fmt(v.passed_direction_filter), fmt(v.passed_permutation),
                        fmt(v.p_value_proxy), fmt(v.max_inf_surp_pct), fmt(v.max_lag),
                        fmt(v.avg_surplus), fmt(v.pos_lag_count), v.reason])


def emit_surplus_series(profile, path):
    """Write the surplus-vs-lag series of one profile.

    The first line is a ``#`` comment carrying the ex-post mean surplus (the
    significance threshold); then a header and one row per lag in ``[-L, L]``.
    Lags are written in the reported convention (negative = social leads).
    Profiles without a surplus (zero baseline) produce no file.

    Returns:
        True if the file was written.
    """
    if profile is None or profile.surplus is None:
        return False
    sp = profile.surplus
    theta = float(np.mean([sp[-i] for i in profile.leading]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# EXPOST_MEAN_SURPLUS_PCT={fmt(theta)}\n")
        w = _writer(fh)
        w.writerow(SURPLUS_COLUMNS)
        for lag in sorted(profile.mi, key=lambda l: -l):
            w.writerow([fmt(-lag), fmt(profile.mi[lag]), fmt(sp[lag]), fmt(profile.n_pairs[lag])])
    return True


def read_surplus_series(path):
    with open(path, newline="", encoding="utf-8") as fh:
        first = fh.readline().strip()
        theta = float(first.split("=", 1)[1])
        rows = list(csv.DictReader(fh))
    return theta, rows


def emit_coverage(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["SYMBOL", "JOINT_DAYS", "FIRST_DATE", "LAST_DATE", "GAP_COUNT", "INCLUDED"])
        for r in rows:
            w.writerow([r.symbol, r.joint_days,
                        r.first_date.isoformat() if r.first_date else "",
                        r.last_date.isoformat() if r.last_date else "",
                        r.gap_count, fmt(r.included)])


def emit_radar(models, path):
    """One row per ``(k, cluster, feature)`` with standardized and original values."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["K", "CLUSTER", "TOP_SURPLUS", "SIZE", "FEATURE", "STANDARDIZED", "ORIGINAL"])
        for k in sorted(models):
            m = models[k]
            top, _ = top_surplus_cluster(m)
            original = m.centroids_original()
            sizes = np.bincount(m.labels, minlength=m.k)
            for c in range(m.k):
                for j, name in enumerate(m.feature_names):
                    w.writerow([k, c, fmt(c == top), int(sizes[c]), name,
                                fmt(m.centroids[c, j]), fmt(original[c, j])])


def emit_cluster_models(models, errors, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["K", "WCSS", "ITERATIONS", "RESTART", "TOP_CLUSTER", "SEEDING",
                    "SCALING", "ERROR"])
        for k in sorted(set(models) | set(errors)):
            if k in models:
                m = models[k]
                w.writerow([k, fmt(m.wcss), m.iterations, m.restart, top_surplus_cluster(m)[0],
                            "greedy-spread", "z-score (population std)", ""])
            else:
                w.writerow([k, "", "", "", "", "", "", errors[k]])


def emit_assignments(models, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["K", "SYMBOL", "CLUSTER"])
        for k in sorted(models):
            for sym, c in sorted(models[k].assignments.items()):
                w.writerow([k, sym, c])


def message_volume(panels):
    """Per symbol: total messages, mean monthly messages, number of days."""
    out = {}
    for sym in sorted(panels):
        p = panels[sym]
        monthly = defaultdict(int)
        for d, rec in zip(p.dates, p.social):
            monthly[(d.year, d.month)] += rec.total_scanned_messages
        total = sum(monthly.values())
        out[sym] = (total, total / len(monthly) if monthly else float("nan"), len(p))
    return out


def volume_moments(values):
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        return {"N": 0}
    res = {"N": int(x.size), "TOTAL": float(x.sum()), "MEAN": float(x.mean())}
    res["STD"] = float(x.std(ddof=1)) if x.size > 1 else float("nan")
    if x.size > 2 and np.ptp(x) > 0:
        res["SKEWNESS"] = float(stats.skew(x))
        res["EXCESS_KURTOSIS"] = float(stats.kurtosis(x))
    else:
        res["SKEWNESS"] = res["EXCESS_KURTOSIS"] = float("nan")
    return res


def correlation_matrix(columns):
    """Pearson correlation over pairwise-defined rows; NaN when undefined."""
    names = list(columns)
    k = len(names)
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            a = np.asarray(columns[names[i]], dtype=float)
            b = np.asarray(columns[names[j]], dtype=float)
            keep = ~(np.isnan(a) | np.isnan(b))
            a, b = a[keep], b[keep]
            if a.size < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
                continue
            r = float(np.corrcoef(a, b)[0, 1])
            out[i, j] = out[j, i] = 1.0 if i == j else r
    return names, out


def emit_summary_stats(panels, outdir, metadata=None):
    """Message-volume table and moments, feature correlations, and market cap pairs.

    Returns the list of files written.
    """
    written = []
    vol = message_volume(panels)
    p = outdir / "message_volume.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["SYMBOL", "TOTAL_MESSAGES", "MONTHLY_MEAN_MESSAGES", "DAYS"])
        for sym, (total, monthly, days) in vol.items():
            w.writerow([sym, total, fmt(monthly), days])
    written.append(p)

    p = outdir / "message_volume_moments.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["STATISTIC", "VALUE"])
        for key, val in volume_moments([t for t, _, _ in vol.values()]).items():
            w.writerow([key, fmt(val)])
    written.append(p)

    pooled = defaultdict(list)
    for sym in sorted(panels):
        panel = panels[sym]
        for name in CORRELATION_FEATURES:
            try:
                pooled[name].append(panel.column(name))
            except KeyError:
                pooled[name].append(np.full(len(panel), np.nan))
    columns = {n: np.concatenate(v) if v else np.array([]) for n, v in pooled.items()}
    names, corr = correlation_matrix(columns)
    p = outdir / "correlation.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["FEATURE", *names])
        for i, n in enumerate(names):
            w.writerow([n, *(fmt(x) for x in corr[i])])
    written.append(p)

    caps = {s: m["MARKET_CAP"] for s, m in (metadata or {}).items() if m.get("MARKET_CAP")}
    if caps:
        p = outdir / "marketcap_volume.csv"
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = _writer(fh)
            w.writerow(["SYMBOL", "MARKET_CAP", "MONTHLY_MEAN_MESSAGES"])
            for sym in sorted(caps):
                if sym in vol:
                    w.writerow([sym, fmt(caps[sym]), fmt(vol[sym][1])])
        written.append(p)
    return written
