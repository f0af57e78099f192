"""
End-to-end tests for the command line.

A small experiment (120 news, 60 users, one epoch) is generated and trained
once per module; each test then runs one command against it through
dispatch() and checks the exit code, the outputs and the run manifest.
"""

import csv
import json

import pytest

from dwellrec.cli import dispatch
from dwellrec.domain.datagen import build_eval_set
from dwellrec.domain.entities import EvalMode
from dwellrec.infrastructure.manifest import MANIFEST_FILE, sha256_file
from dwellrec.services.evaluation import RandomScorer, evaluate
from dwellrec.services.logs import NEWS_FILE, TEST_FILE, TRAIN_FILE, read_impressions

SMALL_EXPERIMENT = """\
generator:
  n_news: 120
  n_users: 60
  history_min: 3
  history_max: 12
encoder:
  news_dim: 8
  dwell_dim: 4
  max_history: 12
  k_negatives: 2
training:
  epochs: 1
  batch_size: 32
"""


def run(*argv: str) -> int:
    return dispatch(list(argv))


def manifest(directory) -> dict:
    return json.loads((directory / MANIFEST_FILE).read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    """Config file, generated data and one trained run per variant."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "experiment.yaml"
    config.write_text(SMALL_EXPERIMENT, encoding="utf-8")
    data = root / "data"
    runs = root / "runs"

    assert run("gen", "--config", str(config), "--seed", "42", "--out", str(data)) == 0
    assert run("train", "--config", str(config), "--data", str(data), "--variant", "all", "--seed", "1", "--out", str(runs)) == 0
    return {"root": root, "config": config, "data": data, "runs": runs}


# ============================================================
# gen and stats
# ============================================================

class TestGenAndStats:
    """Tests for the gen and stats commands."""

    def test_gen_outputs(self, experiment):
        """Test the three logs and the manifest are written."""
        data = experiment["data"]
        for name in (NEWS_FILE, TRAIN_FILE, TEST_FILE):
            assert (data / name).exists()
        record = manifest(data)
        assert record["command"] == "gen"
        assert record["seed"] == 42
        assert record["config"]["generator"]["n_news"] == 120
        assert str(experiment["config"]) in record["input_digests"]

    def test_gen_is_reproducible(self, experiment, tmp_path):
        """Test the same seed regenerates identical logs."""
        out = tmp_path / "again"
        assert run("gen", "--config", str(experiment["config"]), "--seed", "42", "--out", str(out)) == 0
        for name in (NEWS_FILE, TRAIN_FILE, TEST_FILE):
            assert sha256_file(out / name) == sha256_file(experiment["data"] / name)

    def test_stats(self, experiment, tmp_path, capsys):
        """Test the bucket table and summary are written."""
        out = tmp_path / "stats"
        assert run("stats", "--data", str(experiment["data"]), "--out", str(out)) == 0
        rows = list(csv.reader((out / "dwell_buckets.csv").read_text().splitlines()))
        assert rows[0] == ["bucket", "count", "fraction"]
        assert sum(float(r[2]) for r in rows[1:]) == pytest.approx(1.0)
        summary = json.loads((out / "dwell_summary.json").read_text())
        assert 0.0 <= summary["unknown_fraction"] <= 1.0
        assert "bucket,count,fraction" in capsys.readouterr().out

    def test_stats_missing_data(self, tmp_path):
        """Test a directory without logs is a data error."""
        assert run("stats", "--data", str(tmp_path / "empty"), "--out", str(tmp_path / "o")) == 2


# ============================================================
# train and eval
# ============================================================

class TestTrainAndEval:
    """Tests for the train and eval commands."""

    def test_train_all_variants(self, experiment):
        """Test one run directory per configured variant."""
        runs = experiment["runs"]
        for variant in ("base_mha", "dwew", "dwea"):
            assert (runs / variant / "model.nrck").exists()
        record = manifest(runs)
        assert record["command"] == "train"
        train_path = str(experiment["data"] / TRAIN_FILE)
        assert record["input_digests"][train_path] == sha256_file(experiment["data"] / TRAIN_FILE)

    @pytest.mark.parametrize("eval_set", ["normal", "real", "robust"])
    def test_eval_sets(self, experiment, tmp_path, eval_set):
        """Test every evaluation set produces a report."""
        out = tmp_path / eval_set
        code = run(
            "eval", "--ckpt", str(experiment["runs"] / "dwea"), "--data", str(experiment["data"]),
            "--set", eval_set, "--theta", "5", "--out", str(out),
        )
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert set(report) == {"auc", "mrr", "ndcg5", "ndcg10", "n", "skipped"}
        assert 0.0 <= report["auc"] <= 1.0
        assert manifest(out)["command"] == "eval"

    def test_eval_mask_dwell(self, experiment, tmp_path):
        """Test masked evaluation writes the gap report."""
        out = tmp_path / "masked"
        code = run(
            "eval", "--ckpt", str(experiment["runs"] / "base_mha" / "model.nrck"), "--data", str(experiment["data"]),
            "--set", "real", "--mask-dwell", "--out", str(out),
        )
        assert code == 0
        gtb = json.loads((out / "gtb.json").read_text())
        assert all(delta == 0.0 for delta in gtb["deltas"].values())

    def test_eval_random_baseline(self, experiment, tmp_path):
        """Test masked evaluation scores the seeded random baseline on the same set."""
        out = tmp_path / "baseline"
        code = run(
            "eval", "--ckpt", str(experiment["runs"] / "dwea"), "--data", str(experiment["data"]),
            "--set", "real", "--theta", "5", "--mask-dwell", "--override", "evaluation.random_seed=3",
            "--out", str(out),
        )
        assert code == 0
        saved = json.loads((out / "random.json").read_text())
        real = build_eval_set(read_impressions(experiment["data"] / TEST_FILE), EvalMode.REAL, 5.0)
        assert saved["auc"] == pytest.approx(evaluate(RandomScorer(seed=3), None, real).auc, abs=1e-12)

    def test_eval_is_reproducible(self, experiment, tmp_path):
        """Test two evaluations write byte-identical reports."""
        paths = []
        for name in ("a", "b"):
            out = tmp_path / name
            run("eval", "--ckpt", str(experiment["runs"] / "dwew"), "--data", str(experiment["data"]), "--out", str(out))
            paths.append(out / "report.json")
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_eval_requires_ckpt(self, experiment):
        """Test a missing --ckpt is a usage error."""
        assert run("eval", "--data", str(experiment["data"])) == 1

    def test_eval_unknown_checkpoint(self, experiment, tmp_path):
        """Test a checkpoint path without a run is a data error."""
        assert run("eval", "--ckpt", str(tmp_path / "nothing"), "--data", str(experiment["data"])) == 2


# ============================================================
# sweep, grad-check and global options
# ============================================================

class TestSweepAndOthers:
    """Tests for sweep, grad-check and global options."""

    def test_sweep(self, experiment, tmp_path, capsys):
        """Test 8 thresholds for 3 variants give 24 rows."""
        out = tmp_path / "sweep"
        code = run(
            "sweep", "--config", str(experiment["config"]), "--ckpt-dir", str(experiment["runs"]),
            "--data", str(experiment["data"]), "--min", "5", "--max", "40", "--step", "5", "--out", str(out),
        )
        assert code == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "variant,theta,auc,mrr,ndcg5,ndcg10"
        assert len(lines) == 25
        assert capsys.readouterr().out.startswith("variant,theta")

    def test_sweep_inverted_bounds(self, experiment, tmp_path):
        """Test min above max is a configuration error."""
        code = run(
            "sweep", "--ckpt-dir", str(experiment["runs"]), "--data", str(experiment["data"]),
            "--min", "40", "--max", "5", "--out", str(tmp_path / "s"),
        )
        assert code == 2

    def test_grad_check(self, tmp_path, capsys):
        """Test a short gradient check passes and records its report."""
        out = tmp_path / "grad"
        assert run("grad-check", "--trials", "2", "--out", str(out)) == 0
        report = json.loads((out / "gradcheck.json").read_text())
        assert report["passed"] is True
        assert json.loads(capsys.readouterr().out.strip().splitlines()[-1])["passed"] is True

    def test_override_unknown_key(self, tmp_path):
        """Test an unknown override key is a configuration error."""
        assert run("grad-check", "--trials", "1", "--override", "encoder.colour=blue", "--out", str(tmp_path)) == 2

    def test_override_malformed(self, tmp_path):
        """Test an override without '=' is a usage error."""
        assert run("grad-check", "--override", "encoder.theta", "--out", str(tmp_path)) == 1

    def test_unknown_command(self):
        """Test an unknown subcommand is a usage error."""
        assert run("serve") == 1

    def test_version(self, capsys):
        """Test --version exits cleanly."""
        assert run("--version") == 0
        assert "dwellrec" in capsys.readouterr().out
