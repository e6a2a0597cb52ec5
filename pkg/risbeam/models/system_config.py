"""
SystemConfig model - All scenario constants of one RIS-assisted downlink
"""
import math
from dataclasses import dataclass, fields, replace

from ..errors import ValidationError


def dbm_to_watts(dbm):
    """Convert a power in dBm to watts"""
    return 10.0 ** ((float(dbm) - 30.0) / 10.0)


def default_factorization(n):
    """Nx x Ny with Nx the largest divisor of n not above sqrt(n)"""
    nx = 1
    for d in range(1, int(math.isqrt(n)) + 1):
        if n % d == 0:
            nx = d
    return nx, n // nx


@dataclass(frozen=True)
class SystemConfig:
    """Scenario constants; powers are configured in dBm and exposed in watts"""
    M: int = 4
    N: int = 16
    K: int = 2
    b: int = 1
    Nx: int = 0  # 0 -> factorized from N
    Ny: int = 0
    Pt_dBm: float = 5.0
    sigma2_dBm: float = -80.0
    q: tuple = ()  # empty -> all ones
    beta0_dB: float = -35.6
    d0: float = 1.0
    p_exp: float = 2.2
    kappa_G: float = 10.0
    kappa_r: float = 10.0
    ap_pos: tuple = (0.0, 0.0)
    ris_pos: tuple = (50.0, 0.0)
    user_center: tuple = (50.0, 10.0)
    user_radius: float = 2.0

    def __post_init__(self):
        # normalize derived defaults so equal configs compare equal
        if not self.q:
            object.__setattr__(self, "q", tuple(1.0 for _ in range(max(int(self.K), 0))))
        else:
            object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        if not self.Nx and not self.Ny and int(self.N) >= 1:
            nx, ny = default_factorization(int(self.N))
            object.__setattr__(self, "Nx", nx)
            object.__setattr__(self, "Ny", ny)
        for name in ("ap_pos", "ris_pos", "user_center"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "_Pt_W", dbm_to_watts(self.Pt_dBm))
        object.__setattr__(self, "_sigma2_W", dbm_to_watts(self.sigma2_dBm))
        self.validate()

    @property
    def B(self):
        return 2 ** self.b

    @property
    def delta_w(self):
        return 2.0 * math.pi / self.B

    @property
    def Pt(self):
        """Transmit power budget in watts"""
        return self._Pt_W

    @property
    def sigma2(self):
        """Noise power in watts"""
        return self._sigma2_W

    @property
    def H(self):
        """Network output width N + 2KM"""
        return self.N + 2 * self.K * self.M

    @property
    def input_width(self):
        return 2 * self.N * self.M + 2 * self.N * self.K

    def validate(self):
        """Raise ValidationError when an invariant does not hold"""
        for name in ("M", "N", "K", "b"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.Nx * self.Ny != self.N:
            raise ValidationError(f"Nx*Ny = {self.Nx}*{self.Ny} does not equal N = {self.N}")
        if len(self.q) != self.K:
            raise ValidationError(f"q has {len(self.q)} weights for K = {self.K} users")
        if any(not (w > 0) for w in self.q):
            raise ValidationError("all user weights q_k must be positive")
        if not (self.Pt > 0 and self.sigma2 > 0):
            raise ValidationError("Pt and sigma2 must be positive")
        if self.kappa_G < 0 or self.kappa_r < 0:
            raise ValidationError("Rician factors must be non-negative")
        if self.d0 <= 0:
            raise ValidationError("reference distance d0 must be positive")
        if self.user_radius < 0:
            raise ValidationError("user circle radius must be non-negative")
        for name in ("ap_pos", "ris_pos", "user_center"):
            if len(getattr(self, name)) != 2:
                raise ValidationError(f"{name} must be an (x, y) pair")
        return self

    def with_overrides(self, **changes):
        """Copy with some fields replaced; q and the factorization follow N/K when not given"""
        if "K" in changes and "q" not in changes and changes["K"] != self.K:
            changes["q"] = ()
        if "N" in changes and "Nx" not in changes and "Ny" not in changes and changes["N"] != self.N:
            changes["Nx"], changes["Ny"] = 0, 0
        return replace(self, **changes)

    def to_dict(self):
        """Convert the config to a dictionary; linear powers are recorded alongside dBm"""
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        for name in ("q", "ap_pos", "ris_pos", "user_center"):
            data[name] = list(data[name])
        data["Pt_W"] = self.Pt
        data["sigma2_W"] = self.sigma2
        return data

    @classmethod
    def from_dict(cls, data):
        """Build a config from a dictionary, ignoring the derived linear entries"""
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"Pt_W", "sigma2_W"}
        if unknown:
            raise ValidationError(f"unknown system config keys: {', '.join(sorted(unknown))}")
        kwargs = {k: v for k, v in data.items() if k in known}
        for name in ("q", "ap_pos", "ris_pos", "user_center"):
            if name in kwargs:
                kwargs[name] = tuple(kwargs[name])
        return cls(**kwargs)
