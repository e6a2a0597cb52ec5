"""
Channel service - Scenario geometry, path loss, Rician fading, imperfect-CSI
error injection and dataset files
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import DomainError, FormatError, ValidationError
from ..models.channel_sample import ChannelDataset, ChannelSample
from ..models.system_config import SystemConfig
from ..util.io import read_jsonl, write_jsonl
from ..util.rng import derive_seed, make_rng

logger = logging.getLogger(__name__)

DATASET_KIND = "risbeam-dataset"
DATASET_FORMAT_VERSION = 1


class ChannelService:
    """Channel generation for the AP -> RIS -> user cascade (direct link blocked)"""

    @staticmethod
    def path_loss(d, beta0_dB, d0=1.0, p_exp=2.2):
        """Linear power gain beta0 * (d / d0)^-p"""
        d = np.asarray(d, dtype=float)
        if np.any(d <= 0) or d0 <= 0:
            raise DomainError("path loss needs positive distances")
        gain = 10.0 ** ((beta0_dB - 10.0 * p_exp * np.log10(d / d0)) / 10.0)
        return float(gain) if gain.ndim == 0 else gain

    @staticmethod
    def ula_response(angle, count):
        """Half-wavelength uniform linear array response"""
        return np.exp(1j * math.pi * np.arange(count) * math.sin(angle))

    @staticmethod
    def ura_response(azimuth, elevation, nx, ny):
        """Half-wavelength uniform rectangular array response, element n = ix * ny + iy"""
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        phase = ix * math.sin(azimuth) * math.cos(elevation) + iy * math.sin(elevation)
        return np.exp(1j * math.pi * phase).reshape(-1)

    @staticmethod
    def _angle(src, dst):
        return math.atan2(dst[1] - src[1], dst[0] - src[0])

    @classmethod
    def los_components(cls, config, user_positions):
        """Rank-one LoS matrix G_los (N x M) and LoS vectors h_los (K x N)"""
        aod_ap = cls._angle(config.ap_pos, config.ris_pos)
        aoa_ris = cls._angle(config.ris_pos, config.ap_pos)
        a_ris = cls.ura_response(aoa_ris, 0.0, config.Nx, config.Ny)
        a_ap = cls.ula_response(aod_ap, config.M)
        G_los = np.outer(a_ris, a_ap.conj())
        h_los = np.stack([
            cls.ura_response(cls._angle(config.ris_pos, pos), 0.0, config.Nx, config.Ny)
            for pos in user_positions
        ])
        return G_los, h_los

    @staticmethod
    def link_distances(config, user_positions):
        """(AP-RIS distance, RIS-user distances)"""
        ap, ris = np.asarray(config.ap_pos), np.asarray(config.ris_pos)
        d_g = float(np.linalg.norm(ris - ap))
        d_r = np.linalg.norm(np.asarray(user_positions, dtype=float) - ris, axis=1)
        return d_g, d_r

    @staticmethod
    def draw_user_positions(config, rng):
        """K positions uniform over the configured circle"""
        radius = config.user_radius * np.sqrt(rng.random(config.K))
        angle = 2.0 * math.pi * rng.random(config.K)
        center = np.asarray(config.user_center)
        return center + np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)

    @staticmethod
    def complex_gaussian(shape, rng, variance=1.0):
        """i.i.d. circularly symmetric complex Gaussian entries with the given variance"""
        scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    @classmethod
    def rician_channel(cls, los, kappa, rng):
        """sqrt(k/(1+k)) los + sqrt(1/(1+k)) nlos; path loss is applied by the caller"""
        if kappa < 0:
            raise DomainError(f"Rician factor must be >= 0, got {kappa}")
        los = np.asarray(los, dtype=complex)
        if math.isinf(kappa):
            return los.copy()
        w_los = math.sqrt(kappa / (1.0 + kappa))
        w_nlos = math.sqrt(1.0 / (1.0 + kappa))
        return w_los * los + w_nlos * cls.complex_gaussian(los.shape, rng)

    @classmethod
    def error_variances(cls, G_hat, h_hat, eta):
        """Per-entry error variance eta * mean |entry|^2, for G and for each user vector

        Works on single samples (N x M, K x N) and stacks with leading axes.
        """
        var_G = np.asarray(eta * np.mean(np.abs(G_hat) ** 2, axis=(-2, -1)))
        var_h = np.asarray(eta * np.mean(np.abs(h_hat) ** 2, axis=-1))
        return var_G, var_h

    @classmethod
    def draw_true_batch(cls, G_hat, h_hat, eta, j_count, rng):
        """J true-channel draws for a stack of estimates

        G_hat (S, N, M), h_hat (S, K, N) -> G (J, S, N, M), h (J, S, K, N)
        """
        if eta < 0:
            raise DomainError(f"eta must be >= 0, got {eta}")
        if j_count < 1:
            raise ValidationError("j_count must be >= 1")
        G_hat = np.asarray(G_hat, dtype=complex)
        h_hat = np.asarray(h_hat, dtype=complex)
        G = np.broadcast_to(G_hat, (j_count,) + G_hat.shape).copy()
        h = np.broadcast_to(h_hat, (j_count,) + h_hat.shape).copy()
        if eta == 0:
            return G, h
        var_G, var_h = cls.error_variances(G_hat, h_hat, eta)
        G += cls.complex_gaussian(G.shape, rng, var_G[..., None, None])
        h += cls.complex_gaussian(h.shape, rng, var_h[..., None])
        return G, h

    @classmethod
    def draw_true_channels(cls, sample, j_count, rng):
        """List of j_count (G, h) true-channel draws around one estimated sample"""
        G, h = cls.draw_true_batch(sample.G_hat, sample.h_hat, sample.eta, j_count, rng)
        return [(G[j], h[j]) for j in range(j_count)]

    @staticmethod
    def normalized_mse(estimates, truths):
        """Empirical E|x - x_hat|^2 / E|x_hat|^2 over all entries"""
        estimates = np.asarray(estimates)
        truths = np.asarray(truths)
        return float(np.mean(np.abs(truths - estimates) ** 2) / np.mean(np.abs(estimates) ** 2))

    @classmethod
    def generate_sample(cls, config, eta, seed, index):
        """One estimated realization; its stream depends only on (seed, index)"""
        rng = make_rng(seed, index)
        positions = cls.draw_user_positions(config, rng)
        d_g, d_r = cls.link_distances(config, positions)
        G_los, h_los = cls.los_components(config, positions)
        G_hat = math.sqrt(cls.path_loss(d_g, config.beta0_dB, config.d0, config.p_exp)) * \
            cls.rician_channel(G_los, config.kappa_G, rng)
        pl_r = np.sqrt(cls.path_loss(d_r, config.beta0_dB, config.d0, config.p_exp))
        h_hat = pl_r[:, None] * np.stack([cls.rician_channel(h_los[k], config.kappa_r, rng) for k in range(config.K)])
        sample = ChannelSample(
            G_hat=G_hat, h_hat=h_hat, eta=eta, seed=derive_seed(seed, index),
            index=index, user_positions=positions,
        )
        if eta > 0:
            sample.G_true, sample.h_true = cls.draw_true_channels(sample, 1, rng)[0]
        return sample

    @classmethod
    def build_samples(cls, config, count, eta, seed, workers=1):
        """count samples in index order; workers > 1 fans out over a thread pool"""
        if count < 1:
            raise ValidationError("count must be >= 1")
        if eta < 0:
            raise DomainError(f"eta must be >= 0, got {eta}")
        config.validate()
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(lambda i: cls.generate_sample(config, eta, seed, i), range(count)))
        return [cls.generate_sample(config, eta, seed, i) for i in range(count)]

    @classmethod
    def build_dataset(cls, config, count, eta, seed, workers=1):
        """In-memory dataset, identical to what generate_dataset writes"""
        samples = cls.build_samples(config, count, eta, seed, workers)
        return ChannelDataset.from_samples(samples, config=config, seed=seed)

    @staticmethod
    def dataset_header(config, count, eta, seed):
        return {
            "kind": DATASET_KIND,
            "format_version": DATASET_FORMAT_VERSION,
            "config": config.to_dict(),
            "count": int(count),
            "eta": float(eta),
            "seed": int(seed),
        }

    @classmethod
    def generate_dataset(cls, config, count, eta, seed, path, workers=1):
        """Write a self-describing JSON-lines dataset file and return its path"""
        samples = cls.build_samples(config, count, eta, seed, workers)
        records = [cls.dataset_header(config, count, eta, seed)] + [s.to_dict() for s in samples]
        write_jsonl(path, records)
        logger.info("wrote %d samples (eta=%g, seed=%d) to %s", count, eta, seed, path)
        return path

    @classmethod
    def load_dataset(cls, path):
        """Read a dataset file -> (ChannelDataset, header)"""
        records = read_jsonl(path)
        if not records:
            raise FormatError(f"{path}: empty dataset file")
        header = records[0]
        if header.get("kind") != DATASET_KIND:
            raise FormatError(f"{path}: not a dataset file")
        if header.get("format_version") != DATASET_FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported dataset format {header.get('format_version')}")
        config = SystemConfig.from_dict(header["config"])
        samples = [ChannelSample.from_dict(r).check_dimensions(config) for r in records[1:]]
        if len(samples) != header["count"]:
            raise FormatError(f"{path}: header announces {header['count']} samples, found {len(samples)}")
        return ChannelDataset.from_samples(samples, config=config, seed=header["seed"]), header
