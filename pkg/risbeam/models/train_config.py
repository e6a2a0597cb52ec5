"""
Training models - TrainConfig, the epoch history and the steepness search state
"""
from dataclasses import dataclass, field, fields, replace

import pandas as pd

from ..errors import ValidationError

LOSS_KINDS = ("perfect", "penalized", "averaged", "averaged+penalized")
HISTORY_COLUMNS = ["epoch", "lr", "train_loss", "val_wsr_soft", "val_wsr_hard", "mean_f_cons", "gap"]


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, schedule and loss settings of one training run"""
    batch_size: int = 256
    max_epochs: int = 300
    patience: int = 25
    lr: float = 1e-3
    plateau_factor: float = 0.8
    plateau_patience: int = 10
    lr_floor: float = 5e-5
    tau: float = 0.005
    J: int = 10
    loss_kind: str = "perfect"
    lam: float = 0.0
    c: float = 1.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    max_search_iters: int = 20

    def __post_init__(self):
        self.validate()

    @property
    def averaged(self):
        return self.loss_kind.startswith("averaged")

    @property
    def penalized(self):
        return self.loss_kind.endswith("penalized")

    def validate(self):
        if self.batch_size < 2:
            raise ValidationError("batch_size must be >= 2 for batch-norm statistics")
        if self.J < 1:
            raise ValidationError("J must be >= 1")
        if not (self.tau > 0):
            raise ValidationError("tau must be positive")
        if self.lam < 0:
            raise ValidationError("lambda must be >= 0")
        if not (self.c > 0):
            raise ValidationError("c must be positive")
        if self.loss_kind not in LOSS_KINDS:
            raise ValidationError(f"loss_kind must be one of {', '.join(LOSS_KINDS)}")
        if self.max_epochs < 1 or self.patience < 1 or self.plateau_patience < 1:
            raise ValidationError("epoch counts and patiences must be >= 1")
        if self.max_search_iters < 1:
            raise ValidationError("max_search_iters must be >= 1")
        if not (0 < self.plateau_factor < 1):
            raise ValidationError("plateau_factor must lie in (0, 1)")
        if not (0 < self.lr_floor <= self.lr):
            raise ValidationError("lr_floor must be positive and not above lr")
        return self

    def with_overrides(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown training config keys: {', '.join(sorted(unknown))}")
        return cls(**data)


@dataclass
class History:
    """Epoch-indexed training history"""
    rows: list = field(default_factory=list)
    loss_kind: str = "perfect"

    def append(self, **row):
        self.rows.append(row)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return [row[name] for row in self.rows]

    def to_frame(self):
        """History as a DataFrame with the documented column order"""
        frame = pd.DataFrame(self.rows)
        if frame.empty:
            return pd.DataFrame(columns=HISTORY_COLUMNS)
        return frame[HISTORY_COLUMNS]


@dataclass
class SearchState:
    """Progress of the comparative steepness search"""
    iteration: int = 0
    c: float = 1.0
    wsr_t: list = field(default_factory=list)
    wsr_p: list = field(default_factory=list)
    c_values: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)
    best_index: int = -1
    stop_reason: str = ""

    def to_dict(self):
        return {
            "iterations": self.iteration,
            "c_values": list(self.c_values),
            "wsr_t": list(self.wsr_t),
            "wsr_p": list(self.wsr_p),
            "best_index": self.best_index,
            "best_c": self.c_values[self.best_index] if self.best_index >= 0 else None,
            "stop_reason": self.stop_reason,
        }
