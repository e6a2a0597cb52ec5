import math

import numpy as np
import pytest

from risbeam.errors import DomainError, FormatError, ValidationError
from risbeam.models import ChannelDataset, SystemConfig
from risbeam.services import ChannelService
from risbeam.util import write_jsonl


class TestPathLoss:
    def test_reference_distance_gives_beta0(self):
        assert ChannelService.path_loss(1.0, -35.6) == pytest.approx(10 ** (-3.56))

    def test_exponent_scaling(self):
        ratio = ChannelService.path_loss(10.0, -30.0, p_exp=2.2) / ChannelService.path_loss(1.0, -30.0, p_exp=2.2)
        assert ratio == pytest.approx(10 ** -2.2)

    def test_decreasing_in_distance(self):
        gains = ChannelService.path_loss(np.array([1.0, 5.0, 20.0, 80.0]), -35.6)
        assert np.all(np.diff(gains) < 0)

    @pytest.mark.parametrize("d", [0.0, -3.0])
    def test_nonpositive_distance(self, d):
        with pytest.raises(DomainError):
            ChannelService.path_loss(d, -35.6)


class TestFading:
    def test_infinite_kappa_is_pure_los(self, rng):
        los = np.exp(1j * rng.uniform(0, 2 * math.pi, size=(6, 3)))
        np.testing.assert_array_equal(ChannelService.rician_channel(los, math.inf, rng), los)

    @pytest.mark.parametrize("kappa", [0.0, 10.0])
    def test_unit_average_power(self, rng, kappa):
        los = np.ones(20000, dtype=complex)
        h = ChannelService.rician_channel(los, kappa, rng)
        assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.05)

    def test_negative_kappa(self, rng):
        with pytest.raises(DomainError):
            ChannelService.rician_channel(np.ones(4), -1.0, rng)

    def test_array_responses_are_unit_modulus(self):
        a = ChannelService.ura_response(0.3, 0.1, 4, 5)
        assert a.shape == (20,)
        np.testing.assert_allclose(np.abs(a), 1.0)
        np.testing.assert_allclose(np.abs(ChannelService.ula_response(0.7, 4)), 1.0)

    def test_los_shapes(self):
        config = SystemConfig(M=3, N=6, K=2)
        positions = np.array([[50.0, 10.0], [51.0, 9.0]])
        G_los, h_los = ChannelService.los_components(config, positions)
        assert G_los.shape == (6, 3)
        assert h_los.shape == (2, 6)
        assert np.linalg.matrix_rank(G_los) == 1

    def test_users_inside_circle(self, rng):
        config = SystemConfig(K=50)
        positions = ChannelService.draw_user_positions(config, rng)
        dist = np.linalg.norm(positions - np.asarray(config.user_center), axis=1)
        assert np.all(dist <= config.user_radius + 1e-12)


class TestSamples:
    def test_sample_shapes(self, tiny_system):
        sample = ChannelService.generate_sample(tiny_system, 0.0, seed=3, index=0)
        assert sample.G_hat.shape == (4, 2)
        assert sample.h_hat.shape == (2, 4)
        assert sample.perfect_csi
        assert sample.G_true is None

    def test_stream_depends_only_on_seed_and_index(self, tiny_system):
        a = ChannelService.generate_sample(tiny_system, 0.0, seed=3, index=5)
        b = ChannelService.generate_sample(tiny_system, 0.0, seed=3, index=5)
        c = ChannelService.generate_sample(tiny_system, 0.0, seed=3, index=6)
        np.testing.assert_array_equal(a.G_hat, b.G_hat)
        assert not np.allclose(a.G_hat, c.G_hat)

    def test_worker_count_does_not_change_samples(self, tiny_system):
        serial = ChannelService.build_dataset(tiny_system, 12, 0.0, seed=9, workers=1)
        threaded = ChannelService.build_dataset(tiny_system, 12, 0.0, seed=9, workers=3)
        np.testing.assert_array_equal(serial.G_hat, threaded.G_hat)
        np.testing.assert_array_equal(serial.h_hat, threaded.h_hat)

    def test_imperfect_sample_carries_truth(self, tiny_system):
        sample = ChannelService.generate_sample(tiny_system, 0.3, seed=3, index=0)
        assert sample.G_true.shape == sample.G_hat.shape
        assert not np.allclose(sample.G_true, sample.G_hat)

    def test_dimension_check(self, tiny_system):
        sample = ChannelService.generate_sample(tiny_system, 0.0, seed=3, index=0)
        with pytest.raises(ValidationError):
            sample.check_dimensions(SystemConfig(M=2, N=8, K=2))


class TestErrorInjection:
    def test_zero_eta_returns_estimate(self, tiny_system, rng):
        sample = ChannelService.generate_sample(tiny_system, 0.0, seed=1, index=0)
        draws = ChannelService.draw_true_channels(sample, 3, rng)
        assert len(draws) == 3
        for G, h in draws:
            np.testing.assert_array_equal(G, sample.G_hat)
            np.testing.assert_array_equal(h, sample.h_hat)

    def test_normalized_error_matches_eta(self, rng):
        config = SystemConfig(M=4, N=16, K=2)
        sample = ChannelService.generate_sample(config, 0.6, seed=2, index=0)
        G, h = ChannelService.draw_true_batch(sample.G_hat, sample.h_hat, 0.6, 4000, rng)
        G_hat = np.broadcast_to(sample.G_hat, G.shape)
        h_hat = np.broadcast_to(sample.h_hat, h.shape)
        assert ChannelService.normalized_mse(G_hat, G) == pytest.approx(0.6, abs=0.02)
        assert ChannelService.normalized_mse(h_hat, h) == pytest.approx(0.6, abs=0.02)

    def test_negative_eta(self, tiny_system, rng):
        with pytest.raises(DomainError):
            ChannelService.draw_true_batch(np.ones((4, 2)), np.ones((2, 4)), -0.1, 1, rng)


class TestDatasetFiles:
    def test_round_trip(self, tiny_system, tmp_path):
        path = ChannelService.generate_dataset(tiny_system, 10, 0.2, seed=4, path=str(tmp_path / "d.jsonl"))
        dataset, header = ChannelService.load_dataset(path)
        expected = ChannelService.build_dataset(tiny_system, 10, 0.2, seed=4)
        assert header["count"] == 10
        assert header["eta"] == 0.2
        assert dataset.config == tiny_system
        np.testing.assert_array_equal(dataset.G_hat, expected.G_hat)
        np.testing.assert_array_equal(dataset.h_true, expected.h_true)

    def test_regeneration_is_byte_identical(self, tiny_system, tmp_path):
        first = ChannelService.generate_dataset(tiny_system, 6, 0.0, seed=11, path=str(tmp_path / "a.jsonl"))
        second = ChannelService.generate_dataset(tiny_system, 6, 0.0, seed=11, path=str(tmp_path / "b.jsonl"))
        with open(first, "rb") as fa, open(second, "rb") as fb:
            assert fa.read() == fb.read()

    def test_not_a_dataset(self, tmp_path):
        path = str(tmp_path / "x.jsonl")
        write_jsonl(path, [{"kind": "something-else"}])
        with pytest.raises(FormatError):
            ChannelService.load_dataset(path)

    def test_count_mismatch(self, tiny_system, tmp_path):
        sample = ChannelService.generate_sample(tiny_system, 0.0, seed=1, index=0)
        path = str(tmp_path / "short.jsonl")
        write_jsonl(path, [ChannelService.dataset_header(tiny_system, 2, 0.0, 1), sample.to_dict()])
        with pytest.raises(FormatError):
            ChannelService.load_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            ChannelService.load_dataset(str(tmp_path / "nope.jsonl"))


class TestSplit:
    def test_split_in_file_order(self, tiny_dataset):
        train, val, test = tiny_dataset.split(4, 4)
        assert (len(train), len(val), len(test)) == (16, 4, 4)
        np.testing.assert_array_equal(val.indices, np.arange(16, 20))

    def test_oversized_split(self, tiny_dataset):
        with pytest.raises(ValidationError):
            tiny_dataset.split(20, 4)

    def test_stacked_inputs_width(self, tiny_dataset, tiny_system):
        assert tiny_dataset.stacked_inputs().shape == (24, tiny_system.input_width)

    def test_empty_dataset(self):
        with pytest.raises(ValidationError):
            ChannelDataset.from_samples([])
