import csv
from datetime import date

import numpy as np
import pytest

from socialvol.cli import main
from socialvol.config import ConfigError, RunConfig, config_items, load_config, parse_config_text
from socialvol.pipeline import EXIT_CONFIG, EXIT_INGEST, EXIT_OK, run, symbol_seed


def test_parse_config_text():
    vals = parse_config_text("""
        # comment
        synth_symbols = 4   # trailing
        k_set = 2, 3
        period_start = 2013-01-01
        significant_only = no
        bins = auto
        pca_features = bullish_intensity, bearish_intensity
    """)
    assert vals == {"synth_symbols": 4, "k_set": (2, 3), "period_start": date(2013, 1, 1),
                    "significant_only": False, "bins": None,
                    "pca_features": ("BULLISH_INTENSITY", "BEARISH_INTENSITY")}


@pytest.mark.parametrize("text", ["nope = 1", "n_perm = many", "just words", "significant_only = maybe"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_overrides_win(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("n_perm = 50\nseed = 1\n")
    cfg = load_config(p, seed="7", alpha=None)
    assert (cfg.n_perm, cfg.seed, cfg.alpha) == (50, 7, 0.05)


@pytest.mark.parametrize("kw", [
    {}, dict(synth_symbols=2, sentiment="x"), dict(sentiment="/nonexistent", quotes="/nonexistent"),
    dict(synth_symbols=2, synth_coupled=3), dict(synth_symbols=1, n_perm=0),
    dict(synth_symbols=1, tr_mode="x"), dict(synth_symbols=1, binning="x"),
    dict(synth_symbols=1, period_start=date(2016, 1, 1), period_end=date(2015, 1, 1)),
])
def test_validate_rejects(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw).validate()


def test_config_items_render():
    items = dict(config_items(RunConfig(synth_symbols=2)))
    assert items["k_set"] == "2,3,4,5,6,7" and items["bins"] == "" and items["period_start"] == "2012-01-01"


def test_symbol_seed_stable():
    assert symbol_seed(0, "AAPL") == symbol_seed(0, "AAPL")
    assert symbol_seed(0, "AAPL") != symbol_seed(0, "MSFT")
    assert symbol_seed(0, "AAPL") != symbol_seed(1, "AAPL")


def _synth_cfg(out, **kw):
    base = dict(synth_symbols=4, synth_coupled=2, synth_n_days=400, n_perm=20,
                k_set=(2, 3), restarts=3, significant_only=False, output=str(out))
    base.update(kw)
    return RunConfig(**base)


def test_run_synthetic(tmp_path):
    m = run(_synth_cfg(tmp_path / "o", synth_n_days=1000))
    assert m.exit_code == 0 and m.counts["aligned"] == 4
    out = tmp_path / "o"
    for rel in ("coverage.csv", "verdicts.csv", "significant_stocks.csv", "clusters/radar.csv",
                "clusters/models.csv", "clusters/assignments.csv", "summary/correlation.csv",
                "manifest.txt", "timings.txt"):
        assert (out / rel).is_file(), rel
    assert len(list((out / "surplus").glob("*.csv"))) == m.outputs["surplus_series_written"] == 4
    with open(out / "significant_stocks.csv") as fh:
        syms = [r["SYMBOL"] for r in csv.DictReader(fh)]
    assert syms == sorted(syms) and set(syms) >= {"CPL000", "CPL001"}
    stages = list(m.counts.values())
    assert stages == sorted(stages, reverse=True)
    assert m.counts["significant"] == m.outputs["significant_rows"] == len(syms)
    with open(out / "verdicts.csv") as fh:
        assert len(list(csv.DictReader(fh))) == m.counts["evaluated"]
    with open(out / "clusters" / "assignments.csv") as fh:
        per_k = [r for r in csv.DictReader(fh) if r["K"] == "2"]
    assert len(per_k) == m.outputs["clustered"] == 4
    assert "[counts]" in (out / "manifest.txt").read_text()


def test_run_records_symbol_errors(tmp_path):
    # lag window too large for the panel: every symbol errors, run still completes
    m = run(_synth_cfg(tmp_path / "o", min_obs=300, lag_window=120))
    assert m.exit_code == 3 and len(m.errors) == 4


def test_cli_synth_then_run(tmp_path, capsys):
    data = tmp_path / "data"
    assert main(["synth", "--out", str(data), "--symbols", "3", "--coupled", "1",
                 "--n-days", "300"]) == EXIT_OK
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"sentiment = {data/'sentiment.csv'}\nquotes = {data/'quotes.csv'}\n"
                   f"metadata = {data/'metadata.csv'}\nn_perm = 10\nk_set = 2\n"
                   f"significant_only = false\nperiod_start = 2010-01-01\n")
    code = main(["run", "--config", str(cfg), "--output", str(tmp_path / "out")])
    assert code == EXIT_OK
    assert "aligned: 3" in capsys.readouterr().out
    with open(tmp_path / "out" / "significant_stocks.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert all(r["SECTOR"] in ("Coupled", "Null") for r in rows)


def test_cli_exit_codes(tmp_path):
    assert main(["run", "--n-perm", "5"]) == EXIT_CONFIG
    sent = tmp_path / "s.csv"
    quotes = tmp_path / "q.csv"
    sent.write_text("SYMBOL,DATE,BULLISH_INTENSITY,BEARISH_INTENSITY,BULL_SCORED_MESSAGES,"
                    "BEAR_SCORED_MESSAGES,TOTAL_SCANNED_MESSAGES\n")
    quotes.write_text("SYMBOL,DATE,OPEN,HIGH,LOW,CLOSE,VOLUME\nX,2013-01-02,1,1,1,1,1\n")
    args = ["run", "--sentiment", str(sent), "--quotes", str(quotes), "--output", str(tmp_path / "o")]
    assert main(args) == EXIT_INGEST
    sent.write_text("SYMBOL,DATE\n")
    assert main(args) == EXIT_INGEST
    sent.write_text("SYMBOL,DATE,BULLISH_INTENSITY,BEARISH_INTENSITY,BULL_SCORED_MESSAGES,"
                    "BEAR_SCORED_MESSAGES,TOTAL_SCANNED_MESSAGES\nX,2013-01-03,1,1,1,1,3\n")
    assert main(args) == EXIT_INGEST  # no joint coverage


def test_cli_mi(tmp_path, capsys):
    (tmp_path / "x").write_text("0\n0\n1\n1\n")
    (tmp_path / "y").write_text("0\n0\n1\n1\n")
    assert main(["mi", str(tmp_path / "x"), str(tmp_path / "y"), "--bins", "2"]) == 0
    out = capsys.readouterr().out
    assert "mi_bits: 1\n" in out and "n_pairs: 4" in out
    assert main(["mi", str(tmp_path / "x"), str(tmp_path / "missing")]) == EXIT_CONFIG


def test_cli_cluster(tmp_path, capsys):
    rng = np.random.default_rng(0)
    path = tmp_path / "v.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["SYMBOL", "MAX_INF_SURP_PCT", "BULL_MINUS_BEAR"])
        for i in range(10):
            w.writerow([f"S{i}", rng.normal() + 5 * (i % 2), rng.normal()])
    assert main(["cluster", str(path), "--out", str(tmp_path / "c"), "--k", "2,3,20"]) == 0
    captured = capsys.readouterr()
    assert "k=2 wcss=" in captured.out and "k=20 error" in captured.err
    with open(tmp_path / "c" / "assignments.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 20
    bad = tmp_path / "bad.csv"
    bad.write_text("SYMBOL,X\nA,1\nB,2\n")
    assert main(["cluster", str(bad), "--out", str(tmp_path / "c2")]) == EXIT_CONFIG


def test_run_independent_of_workers(tmp_path):
    outs = []
    for workers in (1, 3):
        out = tmp_path / f"w{workers}"
        run(_synth_cfg(out, workers=workers))
        outs.append({str(p.relative_to(out)): p.read_bytes() for p in out.rglob("*")
                     if p.is_file() and p.name not in ("timings.txt", "manifest.txt")})
    assert outs[0] == outs[1]
