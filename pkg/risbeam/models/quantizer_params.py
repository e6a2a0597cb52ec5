"""
QuantizerParams model - Amplitude, steepness and decision boundaries of the
soft (sum of shifted tanh) and hard (staircase) phase quantizers
"""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


def uniform_boundaries(b):
    """Decision boundaries of the uniform quantizer: (2i - 1) * pi / B, i = 1..B-1"""
    B = 2 ** int(b)
    return np.array([(2 * i - 1) * math.pi / B for i in range(1, B)])


@dataclass
class QuantizerParams:
    """b bits, steepness c, B - 1 trainable boundaries rho"""
    b: int
    c: float
    rho: np.ndarray = None

    def __post_init__(self):
        if self.rho is None:
            self.rho = uniform_boundaries(self.b)
        self.rho = np.asarray(self.rho, dtype=float).reshape(-1)
        self.validate()

    @property
    def B(self):
        return 2 ** self.b

    @property
    def a(self):
        return math.pi / self.B

    @property
    def delta_w(self):
        return 2.0 * math.pi / self.B

    @property
    def full_scale(self):
        """Upper saturation level 2a(B - 1)"""
        return 2.0 * self.a * (self.B - 1)

    def sorted_rho(self):
        return np.sort(self.rho)

    def levels(self):
        """The discrete phase set S = {0, dw, ..., (B - 1) dw}"""
        return np.arange(self.B) * self.delta_w

    def validate(self):
        if int(self.b) < 1:
            raise ValidationError(f"b must be >= 1, got {self.b}")
        if not (self.c > 0):
            raise ValidationError(f"steepness c must be positive, got {self.c}")
        if self.rho.shape != (self.B - 1,):
            raise ValidationError(f"rho must hold {self.B - 1} boundaries, got {self.rho.shape[0]}")
        if not np.all(np.isfinite(self.rho)):
            raise ValidationError("rho must be finite")
        return self

    def to_dict(self):
        return {"b": int(self.b), "c": float(self.c), "rho": self.rho.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(b=int(data["b"]), c=float(data["c"]), rho=np.asarray(data["rho"], dtype=float))
