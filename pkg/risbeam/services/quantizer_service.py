"""
Quantizer service - Soft quantization layer (sum of shifted tanh), its
gradient, the hard staircase used at prediction time, the boundary penalty
and the training/prediction gap
"""
import math

import numpy as np

from ..errors import DomainError

# lower bound of e^t + e^-t over t in [-1, 1] enters the penalty floor
PENALTY_FLOOR_DENOM = (math.e + 1.0 / math.e) ** 2


def sech2(u):
    """sech^2(u) = 4 / (e^u + e^-u)^2 in a form that never overflows"""
    e = np.exp(-2.0 * np.abs(u))
    return 4.0 * e / (1.0 + e) ** 2


class QuantizerService:
    """Soft-to-hard phase quantization with B - 1 decision boundaries"""

    @staticmethod
    def _offsets(x, params):
        """u_i = c (x - rho_i), shape x.shape + (B - 1,)"""
        x = np.asarray(x, dtype=float)
        return params.c * (x[..., None] - params.rho)

    @classmethod
    def soft_quantize(cls, x, params):
        """Q_A(x) = sum_i a [tanh(c (x - rho_i)) + 1]"""
        u = cls._offsets(x, params)
        return params.a * np.sum(np.tanh(u) + 1.0, axis=-1)

    @classmethod
    def soft_quantize_grad(cls, x, params):
        """(dQ_A/dx, dQ_A/drho) with dQ_A/drho of shape x.shape + (B - 1,)"""
        u = cls._offsets(x, params)
        per_term = params.a * params.c * sech2(u)
        return np.sum(per_term, axis=-1), -per_term

    @staticmethod
    def region_index(x, params):
        """Region of x among the sorted boundaries; exact hits go to the upper region"""
        return np.searchsorted(params.sorted_rho(), np.asarray(x, dtype=float), side="right")

    @classmethod
    def hard_levels(cls, params, snap=True):
        """The B output levels of the staircase

        snap=True gives region i the grid level i * delta_w. snap=False uses
        the midpoint rule: 0, Q_A(midpoint of each interior region), 2a(B - 1).
        """
        if snap:
            return params.levels()
        rho = params.sorted_rho()
        levels = np.empty(params.B)
        levels[0] = 0.0
        levels[-1] = params.full_scale
        if params.B > 2:
            levels[1:-1] = cls.soft_quantize(0.5 * (rho[:-1] + rho[1:]), params)
        return levels

    @classmethod
    def hard_quantize(cls, x, params, snap=True):
        """Q_R(x), reduced mod 2pi for use as a phase"""
        levels = cls.hard_levels(params, snap=snap)
        return np.mod(levels[cls.region_index(x, params)], 2.0 * math.pi)

    @classmethod
    def penalty(cls, x, params):
        """f_cons(x) = sum_i a c sech^2(tanh(c (x - rho_i)))"""
        t = np.tanh(cls._offsets(x, params))
        return np.sum(params.a * params.c * sech2(t), axis=-1)

    @classmethod
    def penalty_grad(cls, x, params):
        """(df_cons/dx, df_cons/drho) with the same shapes as soft_quantize_grad"""
        u = cls._offsets(x, params)
        t = np.tanh(u)
        # d/du sech^2(tanh u) = -2 sech^2(t) tanh(t) sech^2(u)
        per_term = params.a * params.c * params.c * (-2.0 * sech2(t) * np.tanh(t) * sech2(u))
        return np.sum(per_term, axis=-1), -per_term

    @staticmethod
    def penalty_bounds(params):
        """(lower, upper) bounds of f_cons for any x"""
        terms = params.B - 1
        return (terms * 4.0 * params.a * params.c / PENALTY_FLOOR_DENOM, terms * params.a * params.c)

    @staticmethod
    def gap(wsr_t, wsr_p):
        """(WSR_t - WSR_p) / WSR_t; negative when prediction beats training"""
        if not (wsr_t > 0):
            raise DomainError(f"gap needs a positive training WSR, got {wsr_t}")
        return (wsr_t - wsr_p) / wsr_t
