"""Desk-scale training runs; skipped unless pytest is given --runslow"""
import numpy as np
import pytest

from risbeam.config import resolve_config
from risbeam.models import SystemConfig
from risbeam.services import (
    BaselineService, ChannelService, ExperimentService, SearchService, TrainerService,
)
from risbeam.util import make_rng

pytestmark = pytest.mark.slow

SEEDS = (0, 1, 2)


def desk_run(seed, eta=0.0, **system_changes):
    """Train from scratch on the desk profile; returns (held-out hard WSR, test split, system, fit)"""
    resolved = resolve_config("desk").with_seed(seed)
    system = resolved.system.with_overrides(**system_changes)
    data = resolved.data
    dataset = ChannelService.build_dataset(system, data["train_size"] + data["val_size"] + data["test_size"], eta, seed)
    train, val, test = dataset.split(data["val_size"], data["test_size"])
    training = resolved.training.with_overrides(loss_kind="averaged" if eta > 0 else "perfect")
    result = TrainerService.fit(None, train, val, system, training)
    draws = TrainerService.held_out_draws(test, training.J, make_rng(seed, 3))
    metrics = TrainerService.evaluate(result.params, test, system, training.c, draws)
    return metrics["wsr_hard"], test, system, result


def test_overfits_single_sample_close_to_oracle():
    system = SystemConfig(M=2, N=4, K=1, b=1, sigma2_dBm=-110.0)
    sample = ChannelService.generate_sample(system, 0.0, seed=31, index=0)
    dataset = ChannelService.build_dataset(system, 1, 0.0, seed=31)
    copies = dataset.subset(np.zeros(64, dtype=int))
    train, val = copies.subset(np.arange(60)), copies.subset(np.arange(60, 64))
    config = resolve_config("desk").training.with_overrides(
        batch_size=8, max_epochs=500, patience=500, seed=31,
    )
    result = TrainerService.fit(None, train, val, system, config)
    oracle = BaselineService.exhaustive_oracle(sample, system).best_wsr
    assert result.metrics["wsr_hard"] >= 0.95 * oracle


def test_beats_random_baseline():
    ratios = []
    for seed in SEEDS:
        wsr_hard, test, system, _ = desk_run(seed)
        random_wsr, _ = ExperimentService.baseline_scores(test, system, seed, 100, False)
        ratios.append(wsr_hard / random_wsr.mean())
    assert np.mean(ratios) >= 1.15


def test_rate_degrades_with_channel_error():
    means = []
    for eta in (0.0, 0.3, 0.6):
        means.append(np.mean([desk_run(seed, eta)[0] for seed in SEEDS]))
    assert means[0] >= means[1] >= means[2]


def test_penalty_closes_the_quantization_gap():
    resolved = resolve_config("desk")
    system = resolved.system.with_overrides(b=2)
    data = resolved.data
    dataset = ChannelService.build_dataset(system, data["train_size"] + data["val_size"], 0.0, 0)
    train, val, _ = dataset.split(data["val_size"])
    outcome = SearchService.run_idqnn(train, val, system, resolved.training)
    control = TrainerService.fit(None, train, val, system, resolved.training)
    assert outcome.fit.metrics["gap"] <= resolved.training.tau + 0.01
    assert outcome.fit.metrics["gap"] < control.metrics["gap"]


def test_one_bit_search_settles_at_unit_steepness():
    resolved = resolve_config("desk")
    data = resolved.data
    dataset = ChannelService.build_dataset(resolved.system, data["train_size"] + data["val_size"], 0.0, 0)
    train, val, _ = dataset.split(data["val_size"])
    best_c, _, _ = SearchService.search_c(train, val, resolved.system, resolved.training, c_init=1)
    assert best_c == 1.0
