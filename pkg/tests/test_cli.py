import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from manage import cli
from risbeam.models import SystemConfig
from risbeam.models.train_config import HISTORY_COLUMNS
from risbeam.services import ChannelService, NetworkService, TrainerService
from risbeam.util import make_rng


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(cli, [str(a) for a in args], catch_exceptions=False)


@pytest.fixture
def trained(runner, tmp_path):
    """Checkpoint trained with the testing profile"""
    out = tmp_path / "train"
    result = invoke(runner, "train", "--profile", "testing", "--out", out, "--set", "training.max_epochs=2")
    assert result.exit_code == 0, result.output
    return out / "checkpoint.json"


class TestGenData:
    def test_writes_dataset_and_manifest(self, runner, tmp_path):
        result = invoke(runner, "gen-data", "--profile", "testing", "--out", tmp_path)
        assert result.exit_code == 0, result.output
        header = json.loads((tmp_path / "dataset.jsonl").read_text(encoding="utf-8").splitlines()[0])
        assert header["count"] == 96
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "gen-data"
        assert manifest["resolved"]["profile"] == "testing"

    def test_manifest_rerun_is_byte_identical(self, runner, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert invoke(runner, "gen-data", "--profile", "testing", "--out", first, "--seed", 5).exit_code == 0
        result = invoke(runner, "gen-data", "--manifest", first / "manifest.json", "--out", second)
        assert result.exit_code == 0, result.output
        assert (first / "dataset.jsonl").read_bytes() == (second / "dataset.jsonl").read_bytes()

    def test_manifest_of_another_command(self, runner, tmp_path):
        assert invoke(runner, "gen-data", "--profile", "testing", "--out", tmp_path).exit_code == 0
        result = invoke(runner, "sweep", "--manifest", tmp_path / "manifest.json", "--out", tmp_path / "x")
        assert result.exit_code == 2


class TestTraining:
    def test_train_outputs(self, trained):
        history = pd.read_csv(trained.parent / "history.csv")
        assert list(history.columns) == HISTORY_COLUMNS
        assert 1 <= len(history) <= 2
        params, system, quantizer, training = TrainerService.load_checkpoint(str(trained))
        assert system.N == 4
        assert training.max_epochs == 2
        assert params.metadata["loss_kind"] == "perfect"

    def test_train_from_dataset_file(self, runner, tmp_path):
        data_dir = tmp_path / "data"
        assert invoke(runner, "gen-data", "--profile", "testing", "--out", data_dir).exit_code == 0
        result = invoke(
            runner, "train", "--profile", "testing", "--out", tmp_path / "run",
            "--dataset", data_dir / "dataset.jsonl", "--loss", "penalized", "--set", "lam=0.2",
            "--set", "training.max_epochs=1",
        )
        assert result.exit_code == 0, result.output
        assert "validation WSR" in result.output

    def test_dataset_dimension_mismatch(self, runner, tmp_path):
        data_dir = tmp_path / "data"
        assert invoke(runner, "gen-data", "--profile", "testing", "--out", data_dir).exit_code == 0
        result = invoke(
            runner, "train", "--profile", "testing", "--out", tmp_path / "run",
            "--dataset", data_dir / "dataset.jsonl", "--set", "system.N=8",
        )
        assert result.exit_code == 2

    def test_search_c(self, runner, tmp_path):
        result = invoke(
            runner, "search-c", "--profile", "testing", "--out", tmp_path, "--c-init", 2,
            "--set", "training.max_epochs=1", "--set", "training.max_search_iters=2",
        )
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "search_c.json").read_text(encoding="utf-8"))
        assert report["c_values"][0] == 2.0
        assert report["iterations"] <= 2
        assert (tmp_path / "checkpoint.json").exists()

    def test_idqnn(self, runner, tmp_path):
        result = invoke(runner, "idqnn", "--profile", "testing", "--out", tmp_path, "--set", "training.max_epochs=1")
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_path / "idqnn.json").read_text(encoding="utf-8"))
        assert report["lam"] == pytest.approx(0.1 * report["wsr_c"] / report["f_cons_c"])
        assert report["loss_kind"] == "penalized"
        assert (tmp_path / "pretrain_history.csv").exists()


class TestEval:
    def test_scores_against_baselines(self, runner, trained, tmp_path):
        out = tmp_path / "eval"
        result = invoke(runner, "eval", "--profile", "testing", "--out", out, "--checkpoint", trained)
        assert result.exit_code == 0, result.output
        assert "warning: eta = 0" in result.output
        frame = pd.read_csv(out / "eval.csv")
        assert len(frame) == 16
        assert "wsr_oracle" in frame.columns
        assert (frame["wsr_oracle"] >= frame["wsr_hard"] - 1e-9).all()
        assert (frame["wsr_oracle"] >= frame["wsr_random"] - 1e-9).all()
        summary = json.loads((out / "eval_summary.json").read_text(encoding="utf-8"))
        assert summary["j_count"] == 1

    def test_imperfect_csi_scores_network_on_stored_draw(self, runner, trained, tmp_path):
        data_dir, out = tmp_path / "data", tmp_path / "eval"
        assert invoke(runner, "gen-data", "--profile", "testing", "--out", data_dir, "--set", "data.eta=0.3").exit_code == 0
        result = invoke(
            runner, "eval", "--profile", "testing", "--out", out, "--checkpoint", trained,
            "--dataset", data_dir / "dataset.jsonl", "--set", "data.eta=0.3", "--no-oracle",
        )
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(out / "eval.csv")
        dataset, _ = ChannelService.load_dataset(str(data_dir / "dataset.jsonl"))
        _, _, test = dataset.split(16, 16)
        params, system, quantizer, _ = TrainerService.load_checkpoint(str(trained))
        for i, wsr_hard in enumerate(frame["wsr_hard"]):
            solution = NetworkService.predict_solution(params, test.sample(i), quantizer, system)
            assert wsr_hard == pytest.approx(solution.wsr, rel=1e-9, abs=1e-12)
        summary = json.loads((out / "eval_summary.json").read_text(encoding="utf-8"))
        assert summary["j_count"] == 1

    def test_skip_oracle(self, runner, trained, tmp_path):
        out = tmp_path / "eval"
        result = invoke(runner, "eval", "--profile", "testing", "--out", out, "--checkpoint", trained, "--no-oracle")
        assert result.exit_code == 0, result.output
        assert "wsr_oracle" not in pd.read_csv(out / "eval.csv").columns

    def test_oracle_over_budget(self, runner, tmp_path):
        system = SystemConfig(M=1, N=21, K=1)
        params = NetworkService.init_params(system, make_rng(0, 0))
        path = TrainerService.save_checkpoint(str(tmp_path / "big.json"), params, system, 1.0)
        result = invoke(runner, "eval", "--profile", "testing", "--out", tmp_path / "eval", "--checkpoint", path, "--oracle")
        assert result.exit_code == 4

    def test_missing_checkpoint_option(self, runner, tmp_path):
        assert invoke(runner, "eval", "--profile", "testing", "--out", tmp_path).exit_code == 2


class TestSweep:
    def test_oracle_grows_with_power(self, runner, tmp_path):
        result = invoke(
            runner, "sweep", "--profile", "testing", "--out", tmp_path,
            "--axis", "pt_dbm", "--values", "0,2,4,6,8,10", "--mode", "baselines",
        )
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "sweep.csv")
        assert list(frame["value"]) == [0.0, 2.0, 4.0, 6.0, 8.0, 10.0]
        assert np.all(np.diff(frame["wsr_oracle"]) >= 0)
        assert (frame["wsr_oracle"] >= frame["wsr_random"] - 1e-9).all()

    def test_parallel_matches_sequential(self, runner, tmp_path):
        args = ("sweep", "--profile", "testing", "--axis", "eta", "--values", "0,0.2", "--mode", "baselines")
        assert invoke(runner, *args, "--out", tmp_path / "seq", "--sequential").exit_code == 0
        assert invoke(runner, *args, "--out", tmp_path / "par", "--parallel").exit_code == 0
        pd.testing.assert_frame_equal(pd.read_csv(tmp_path / "seq" / "sweep.csv"), pd.read_csv(tmp_path / "par" / "sweep.csv"))

    def test_bad_axis_value(self, runner, tmp_path):
        result = invoke(runner, "sweep", "--profile", "testing", "--out", tmp_path, "--values", "0,abc")
        assert result.exit_code == 2


class TestErrors:
    def test_unknown_override(self, runner, tmp_path):
        result = invoke(runner, "gen-data", "--profile", "testing", "--out", tmp_path, "--set", "bogus=1")
        assert result.exit_code == 2
        assert "unknown config key" in result.output

    def test_ambiguous_override(self, runner, tmp_path):
        assert invoke(runner, "gen-data", "--profile", "testing", "--out", tmp_path, "--set", "seed=3").exit_code == 2

    def test_missing_config_file(self, runner, tmp_path):
        result = invoke(runner, "gen-data", "--config", tmp_path / "missing.ini", "--out", tmp_path)
        assert result.exit_code == 3

    def test_unknown_profile(self, runner, tmp_path):
        assert invoke(runner, "gen-data", "--profile", "huge", "--out", tmp_path).exit_code == 2

    def test_search_needs_an_iteration(self, runner, tmp_path):
        result = invoke(runner, "search-c", "--profile", "testing", "--out", tmp_path, "--set", "max_search_iters=0")
        assert result.exit_code == 2
        assert "max_search_iters" in result.output
