"""
ChannelSample model - One channel realization and the dataset that holds many
"""
from dataclasses import dataclass

import numpy as np

from ..errors import FormatError, ValidationError
from ..util.io import complex_to_pairs, pairs_to_complex


@dataclass
class ChannelSample:
    """Estimated AP-RIS matrix (N x M) and RIS-user channels (K x N)

    G_true/h_true optionally carry one true-channel draw G = G_hat + G_e,
    h = h_hat + h_e. With eta = 0 the truth is the estimate itself.
    """
    G_hat: np.ndarray
    h_hat: np.ndarray
    eta: float = 0.0
    seed: int = 0
    index: int = 0
    user_positions: np.ndarray = None
    G_true: np.ndarray = None
    h_true: np.ndarray = None

    def __post_init__(self):
        self.G_hat = np.asarray(self.G_hat, dtype=complex)
        self.h_hat = np.atleast_2d(np.asarray(self.h_hat, dtype=complex))
        if self.G_hat.ndim != 2:
            raise ValidationError(f"G_hat must be N x M, got shape {self.G_hat.shape}")
        if self.h_hat.shape[1] != self.G_hat.shape[0]:
            raise ValidationError(f"h_hat shape {self.h_hat.shape} does not match N = {self.G_hat.shape[0]}")
        if self.eta < 0:
            raise ValidationError(f"eta must be >= 0, got {self.eta}")
        if self.G_true is not None:
            self.G_true = np.asarray(self.G_true, dtype=complex)
            self.h_true = np.atleast_2d(np.asarray(self.h_true, dtype=complex))

    @property
    def N(self):
        return self.G_hat.shape[0]

    @property
    def M(self):
        return self.G_hat.shape[1]

    @property
    def K(self):
        return self.h_hat.shape[0]

    @property
    def perfect_csi(self):
        return self.eta == 0

    def truth(self):
        """(G, h) used for scoring: the attached draw, or the estimate under perfect CSI"""
        if self.G_true is not None:
            return self.G_true, self.h_true
        return self.G_hat, self.h_hat

    def check_dimensions(self, config):
        """Raise ValidationError unless dimensions match the SystemConfig"""
        if (self.N, self.M, self.K) != (config.N, config.M, config.K):
            raise ValidationError(
                f"sample dimensions (N={self.N}, M={self.M}, K={self.K}) do not match "
                f"config (N={config.N}, M={config.M}, K={config.K})"
            )
        return self

    def to_dict(self):
        """Convert the sample to a JSON-ready record"""
        record = {
            "index": int(self.index),
            "seed": int(self.seed),
            "eta": float(self.eta),
            "perfect_csi": bool(self.perfect_csi),
            "G_hat": complex_to_pairs(self.G_hat),
            "h_hat": complex_to_pairs(self.h_hat),
        }
        if self.user_positions is not None:
            record["user_positions"] = np.asarray(self.user_positions, dtype=float).tolist()
        if self.G_true is not None:
            record["G_true"] = complex_to_pairs(self.G_true)
            record["h_true"] = complex_to_pairs(self.h_true)
        return record

    @classmethod
    def from_dict(cls, record):
        """Build a sample from a JSON record"""
        try:
            return cls(
                G_hat=pairs_to_complex(record["G_hat"]),
                h_hat=pairs_to_complex(record["h_hat"]),
                eta=float(record["eta"]),
                seed=int(record.get("seed", 0)),
                index=int(record.get("index", 0)),
                user_positions=None if "user_positions" not in record else np.asarray(record["user_positions"]),
                G_true=None if "G_true" not in record else pairs_to_complex(record["G_true"]),
                h_true=None if "h_true" not in record else pairs_to_complex(record["h_true"]),
            )
        except KeyError as e:
            raise FormatError(f"sample record is missing field {e}") from e


class ChannelDataset:
    """Stacked arrays of many samples: G_hat (S, N, M), h_hat (S, K, N)"""

    def __init__(self, G_hat, h_hat, eta=0.0, G_true=None, h_true=None, config=None, seed=0, indices=None):
        self.G_hat = np.asarray(G_hat, dtype=complex)
        self.h_hat = np.asarray(h_hat, dtype=complex)
        self.eta = float(eta)
        self.G_true = None if G_true is None else np.asarray(G_true, dtype=complex)
        self.h_true = None if h_true is None else np.asarray(h_true, dtype=complex)
        self.config = config
        self.seed = seed
        self.indices = np.arange(len(self.G_hat)) if indices is None else np.asarray(indices)
        if self.G_hat.ndim != 3 or self.h_hat.ndim != 3 or len(self.G_hat) != len(self.h_hat):
            raise ValidationError("dataset arrays must be (S, N, M) and (S, K, N) with equal S")

    def __len__(self):
        return len(self.G_hat)

    @classmethod
    def from_samples(cls, samples, config=None, seed=0):
        if not samples:
            raise ValidationError("dataset is empty")
        has_truth = all(s.G_true is not None for s in samples)
        return cls(
            G_hat=np.stack([s.G_hat for s in samples]),
            h_hat=np.stack([s.h_hat for s in samples]),
            eta=samples[0].eta,
            G_true=np.stack([s.G_true for s in samples]) if has_truth else None,
            h_true=np.stack([s.h_true for s in samples]) if has_truth else None,
            config=config,
            seed=seed,
            indices=[s.index for s in samples],
        )

    def sample(self, i):
        """The i-th sample as a ChannelSample"""
        return ChannelSample(
            G_hat=self.G_hat[i],
            h_hat=self.h_hat[i],
            eta=self.eta,
            index=int(self.indices[i]),
            G_true=None if self.G_true is None else self.G_true[i],
            h_true=None if self.h_true is None else self.h_true[i],
        )

    def subset(self, idx):
        idx = np.asarray(idx, dtype=int)
        return ChannelDataset(
            G_hat=self.G_hat[idx],
            h_hat=self.h_hat[idx],
            eta=self.eta,
            G_true=None if self.G_true is None else self.G_true[idx],
            h_true=None if self.h_true is None else self.h_true[idx],
            config=self.config,
            seed=self.seed,
            indices=self.indices[idx],
        )

    def truth(self):
        """Stacked (G, h) used for scoring"""
        if self.G_true is not None:
            return self.G_true, self.h_true
        return self.G_hat, self.h_hat

    def split(self, n_val, n_test=0):
        """Train / validation / test views in file order"""
        n_val, n_test = int(n_val), int(n_test)
        if n_val < 1 or n_test < 0:
            raise ValidationError("validation split needs at least one sample")
        n_train = len(self) - n_val - n_test
        if n_train < 1:
            raise ValidationError(
                f"cannot split {len(self)} samples into {n_val} validation and {n_test} test samples"
            )
        train = self.subset(np.arange(n_train))
        val = self.subset(np.arange(n_train, n_train + n_val))
        test = self.subset(np.arange(n_train + n_val, len(self)))
        return train, val, test

    def stacked_inputs(self):
        """Real network inputs [Re G, Im G, Re h, Im h] flattened per sample"""
        S = len(self)
        G = self.G_hat.reshape(S, -1)
        h = self.h_hat.reshape(S, -1)
        return np.concatenate([G.real, G.imag, h.real, h.imag], axis=1)
