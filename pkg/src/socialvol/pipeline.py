"""End-to-end run: ingest, fuse, derive, test every symbol, cluster, report."""

import logging
import time
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .cluster import build_feature_vectors, fit_profiles
from .config import config_items
from .features import derive_all
from .fusion import NoJointCoverageError, align, coverage_report
from .ingest import SchemaError, read_quotes_file, read_sentiment_file
from .report import (
    emit_assignments,
    emit_cluster_models,
    emit_coverage,
    emit_radar,
    emit_significant_table,
    emit_summary_stats,
    emit_surplus_series,
    emit_verdicts,
    read_metadata,
)
from .surplus import evaluate_symbol
from .synth import SynthSpec, gen_coupled_panel, panel_records

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_INGEST, EXIT_PARTIAL = 0, 1, 2, 3


class IngestFailure(RuntimeError):
    pass


@dataclass
class RunManifest:
    config: list
    versions: dict
    timings: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    @property
    def exit_code(self):
        return EXIT_PARTIAL if self.errors else EXIT_OK

    def render(self):
        lines = ["[config]"]
        lines += [f"{k} = {v}" for k, v in self.config]
        lines.append("[versions]")
        lines += [f"{k} = {v}" for k, v in sorted(self.versions.items())]
        lines.append("[counts]")
        lines += [f"{k} = {v}" for k, v in self.counts.items()]
        lines.append("[outputs]")
        lines += [f"{k} = {v}" for k, v in self.outputs.items()]
        lines.append("[errors]")
        lines += [f"{k} = {v}" for k, v in sorted(self.errors.items())]
        lines.append("[warnings]")
        lines += [f"- {w}" for w in self.warnings]
        lines.append("[artifacts]")
        lines += [f"- {a}" for a in self.artifacts]
        return "\n".join(lines) + "\n"


def symbol_seed(seed, symbol):
    """Per-symbol seed independent of processing order."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(symbol.encode())])
    return int(ss.generate_state(1)[0])


def synth_symbols(cfg):
    specs = []
    for i in range(cfg.synth_symbols):
        coupled = i < cfg.synth_coupled
        name = f"CPL{i:03d}" if coupled else f"NUL{i:03d}"
        specs.append(SynthSpec(
            n_days=cfg.synth_n_days,
            tau=cfg.synth_tau if coupled else 0,
            rho=cfg.synth_rho if coupled else 0.0,
            seed=symbol_seed(cfg.seed, name),
            symbol=name,
            start=cfg.period_start,
        ))
    return specs


def load_records(cfg, manifest):
    if cfg.is_synth:
        panels = [gen_coupled_panel(s) for s in synth_symbols(cfg)]
        return panel_records(panels)
    try:
        sentiment, s_rep = read_sentiment_file(cfg.sentiment, cfg.delimiter)
        quotes, q_rep = read_quotes_file(cfg.quotes, cfg.delimiter)
    except (OSError, SchemaError, UnicodeDecodeError) as exc:
        raise IngestFailure(str(exc)) from exc
    for label, rep in (("sentiment", s_rep), ("quotes", q_rep)):
        if rep.rejected:
            manifest.warnings.append(f"{label}: {len(rep.rejected)} row(s) rejected")
        manifest.warnings.extend(f"{label}: {w}" for w in rep.warnings[:20])
    if not sentiment:
        raise IngestFailure(f"{cfg.sentiment}: no valid sentiment rows")
    if not quotes:
        raise IngestFailure(f"{cfg.quotes}: no valid quote rows")
    return sentiment, quotes


def _evaluate(panel, cfg):
    sig = replace(cfg.significance(), seed=symbol_seed(cfg.seed, panel.symbol))
    derived = derive_all(panel, cfg.features())
    return derived, evaluate_symbol(derived, sig)


def run(cfg):
    """Execute the pipeline and write every artifact under ``cfg.output``.

    Returns:
        The :class:`RunManifest`; its ``exit_code`` is 3 when some symbols
        errored. Global failures raise :class:`IngestFailure`.
    """
    cfg.validate()
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=config_items(cfg),
                           versions={"socialvol": __version__, "numpy": np.__version__})
    clock = time.perf_counter()

    def lap(stage):
        nonlocal clock
        now = time.perf_counter()
        manifest.timings[stage] = now - clock
        clock = now

    sentiment, quotes = load_records(cfg, manifest)
    symbols_in = {r.symbol for r in sentiment} | {r.symbol for r in quotes}
    lap("ingest")

    try:
        alignment = align(sentiment, quotes, (cfg.period_start, cfg.period_end), cfg.min_obs)
    except NoJointCoverageError as exc:
        raise IngestFailure(str(exc)) from exc
    for sym in sorted(alignment.excluded):
        manifest.warnings.append(
            f"{sym}: excluded, {len(alignment.excluded[sym])} joint days < {cfg.min_obs}")
    emit_coverage(coverage_report(alignment.panels, alignment.excluded), out / "coverage.csv")
    lap("fusion")

    symbols = sorted(alignment.panels)
    panels = [alignment.panels[s] for s in symbols]

    def job(panel):
        try:
            return _evaluate(panel, cfg)
        except Exception as exc:  # noqa: BLE001 - reported per symbol
            logger.warning("%s failed: %s", panel.symbol, exc)
            return panel, exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(job, panels))
    else:
        results = [job(p) for p in panels]

    derived, verdicts = {}, {}
    for sym, (panel, res) in zip(symbols, results):
        if isinstance(res, Exception):
            manifest.errors[sym] = f"{type(res).__name__}: {res}"
            continue
        derived[sym] = panel
        verdicts[sym] = res
        if res.failed_stage == "zero_baseline":
            manifest.warnings.append(f"{sym}: excluded, zero baseline MI")
    lap("significance")

    surplus_dir = out / "surplus"
    surplus_dir.mkdir(exist_ok=True)
    for stale in surplus_dir.glob("*.csv"):
        stale.unlink()
    written = 0
    for sym in sorted(verdicts):
        written += emit_surplus_series(verdicts[sym].profile, surplus_dir / f"{sym}.csv")

    metadata = read_metadata(cfg.metadata) if cfg.metadata else {}
    sectors = {s: m["SECTOR"] for s, m in metadata.items()}
    vlist = [verdicts[s] for s in sorted(verdicts)]
    emit_verdicts(vlist, out / "verdicts.csv")
    n_sig = emit_significant_table(vlist, out / "significant_stocks.csv", sectors)

    cluster_dir = out / "clusters"
    cluster_dir.mkdir(exist_ok=True)
    models, k_errors = {}, {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        vectors, excluded = build_feature_vectors(derived, verdicts, cfg.significant_only)
        if len(vectors) >= 2:
            models, k_errors = fit_profiles(vectors, cfg.k_set, cfg.seed, cfg.restarts)
    manifest.warnings.extend(f"clustering: {w.message}" for w in caught)
    for sym, why in sorted(excluded.items()):
        manifest.warnings.append(f"{sym}: not clustered, {why}")
    if len(vectors) < 2:
        manifest.warnings.append(f"clustering skipped: {len(vectors)} vector(s)")
    for k, msg in sorted(k_errors.items()):
        manifest.warnings.append(f"k={k}: {msg}")
    emit_radar(models, cluster_dir / "radar.csv")
    emit_cluster_models(models, k_errors, cluster_dir / "models.csv")
    emit_assignments(models, cluster_dir / "assignments.csv")
    lap("clustering")

    summary_dir = out / "summary"
    summary_dir.mkdir(exist_ok=True)
    emit_summary_stats(derived, summary_dir, metadata)
    lap("reports")

    # stage counts, non-increasing in this order
    manifest.counts = {
        "symbols_in": len(symbols_in),
        "aligned": len(symbols),
        "evaluated": len(verdicts),
        "direction_passed": sum(v.passed_direction_filter for v in vlist),
        "significant": n_sig,
    }
    manifest.outputs = {
        "significant_rows": n_sig,
        "surplus_series_written": written,
        "clustered": len(vectors) if models else 0,
    }
    manifest.artifacts = sorted(
        str(p.relative_to(out)) for p in out.rglob("*")
        if p.is_file() and p.name not in ("manifest.txt", "timings.txt")
    ) + ["manifest.txt"]
    (out / "manifest.txt").write_text(manifest.render(), encoding="utf-8")
    (out / "timings.txt").write_text(
        "".join(f"{k} = {v:.6f}\n" for k, v in manifest.timings.items()), encoding="utf-8")
    return manifest
