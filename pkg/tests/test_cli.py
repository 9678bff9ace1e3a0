import hashlib
from pathlib import Path

import numpy as np
import polars as pl
import pytest

from delaytron.cli import main
from delaytron.config import RunConfig, build_config, dump_config, load_config, parse_pairs
from delaytron.errors import ConfigError
from delaytron.experiment import SweepRow, best_gamma, run_experiment

SMALL = ["--dataset-size", "1500", "--rounds", "1200", "--max-delay", "20"]


def _digest(folder):
    return {p.relative_to(folder).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(Path(folder).rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp") / "out"
    code = main(["run", "--gamma", "0.1,0.2", "--seeds", "2", "--out", str(out), *SMALL])
    assert code == 0
    return out


def test_file_counts(small_run):
    runs = sorted((small_run / "runs").glob("*.csv"))
    assert len(runs) == 4
    summary = pl.read_csv(small_run / "summary.csv")
    assert summary.height == 2
    assert summary["best"].sum() == 1
    assert (small_run / "error_rate.svg").exists() and (small_run / "metadata.txt").exists()


def test_round_csv_shape(small_run):
    for p in (small_run / "runs").glob("*.csv"):
        lines = p.read_text().splitlines()
        assert len(lines) == 1200 + 1
        assert lines[0] == "round,mistakes,error_rate,feedbacks_received,missing_so_far,epoch,eta,cum_hinge_loss"


def test_summary_matches_round_csvs(small_run):
    summary = pl.read_csv(small_run / "summary.csv")
    for row in summary.iter_rows(named=True):
        finals = [pl.read_csv(small_run / "runs" / f"delaytron_D20_g{row['gamma']!r}_s{s}.csv")
                  ["error_rate"][-1] for s in (0, 1)]
        assert row["mean_final_error"] == float(np.mean(finals))
        assert row["std_final_error"] == float(np.std(finals))
    best = min(summary.iter_rows(named=True), key=lambda r: (r["mean_final_error"], r["gamma"]))
    assert best["best"] == 1


def test_rerun_bit_identical(small_run, tmp_path):
    before = _digest(small_run)
    assert main(["run", "--gamma", "0.1,0.2", "--seeds", "2", "--out", str(small_run), *SMALL]) == 0
    assert _digest(small_run) == before
    other = tmp_path / "elsewhere"
    assert main(["run", "--gamma", "0.1,0.2", "--seeds", "2", "--out", str(other),
                 "--workers", "2", *SMALL]) == 0
    assert _digest(other) == before


def test_best_gamma_tie_rule():
    rows = [SweepRow(0.2, 1.0, (0.1, 0.3)), SweepRow(0.1, 1.0, (0.2, 0.2)), SweepRow(0.3, 1.0, (0.5,))]
    assert best_gamma(rows) == 0.1
    assert best_gamma([SweepRow(0.2, 1.0, (0.1,)), SweepRow(0.1, 1.0, (0.3,))]) == 0.2


def test_config_file_and_overrides(tmp_path):
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("# sweep\nalgorithm = banditron\ngamma = 0.05, 0.1\nseeds = 3  # few\n")
    cfg = load_config(cfg_file, {"seeds": "4"})
    assert (cfg.algorithm, cfg.gamma, cfg.seeds) == ("banditron", (0.05, 0.1), 4)
    assert build_config(parse_pairs(dump_config(cfg))) == cfg


@pytest.mark.parametrize("text", ["gamma = 0.6", "seeds = 0", "bogus = 1", "gamma = 0.1,0.1",
                                  "eta = -1", "dataset = /no/such.csv", "max_delay = x", "nokey",
                                  "seeds = 1\nseeds = 2", "eta = theoretical:case1"])
def test_bad_configs(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text + "\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_exit_codes(tmp_path):
    assert main(["run", "--dataset", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "o")]) == 1
    assert not (tmp_path / "o").exists()
    assert main(["run", "--gamma", "0.7", "--out", str(tmp_path / "o")]) == 1
    assert main(["run", "--bogus-flag"]) == 1
    assert main(["plot", "--in", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "p.svg")]) == 2


def test_rounds_beyond_dataset_cleans_up(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--dataset-size", "100", "--rounds", "200", "--seeds", "1",
                 "--gamma", "0.1", "--out", str(out)]) == 1
    assert not out.exists()


def test_gen_and_csv_run(tmp_path):
    csv = tmp_path / "syn.csv"
    assert main(["gen", "--dataset", "synnonsep", "--n", "400", "--seed", "3", "--out", str(csv)]) == 0
    assert len(csv.read_text().splitlines()) == 401
    cfg = RunConfig(dataset=str(csv), csv_header=True, gamma=(0.1,), seeds=1,
                    out=str(tmp_path / "o"), plot=False, algorithm="adaptive_delaytron", max_delay=5)
    res = run_experiment(cfg)
    assert len(list(res["runs_dir"].glob("*.csv"))) == 1 and res["svg"] is None


def test_plot_command(small_run, tmp_path):
    ins = [str(p) for p in sorted((small_run / "runs").glob("*.csv"))]
    svg = tmp_path / "p.svg"
    assert main(["plot", "--in", *ins, "--out", str(svg)]) == 0
    assert svg.read_text().count("<polyline") == 4


def test_theoretical_eta_in_summary(tmp_path):
    cfg = RunConfig(gamma=(0.25,), seeds=1, rounds=100, dataset_size=100, eta="theoretical:case1",
                    eta_w_norm=1.0, out=str(tmp_path / "o"), plot=False)
    rows = run_experiment(cfg)["rows"]
    assert rows[0].eta == pytest.approx(1 / np.sqrt(9 * 100 / 0.25))
