"""
Baseline service - MRT and zero-forcing precoders, the random discrete-phase
baseline and the exhaustive discrete-phase oracle for small surfaces
"""
import logging
import math

import numpy as np

from ..errors import BudgetExceededError, ConditioningError, DegenerateInputError, ValidationError
from ..models.solution import BeamformingSolution, OracleResult, Precoder
from .link_service import LinkService

logger = logging.getLogger(__name__)

ORACLE_BUDGET_BITS = 20
ORACLE_CHUNK = 4096
PRECODER_RULES = ("auto", "mrt", "zf")


def _hermitian(A):
    return np.conj(np.swapaxes(A, -1, -2))


class BaselineService:
    """Closed-form precoders and reference phase searches"""

    @staticmethod
    def mrt_batch(E, Pt):
        """Matched-filter columns e_k^H with joint power scaling; returns (W, ok)"""
        W = _hermitian(np.asarray(E, dtype=complex))
        norms = LinkService.precoder_norms(W)
        ok = norms > 0
        scale = np.where(ok, math.sqrt(Pt) / np.where(ok, norms, 1.0), 0.0)
        return W * scale[..., None, None], ok

    @staticmethod
    def zf_batch(E, Pt):
        """Pseudo-inverse columns with joint power scaling; returns (W, ok)

        ok is False where E (K x M) does not have full row rank.
        """
        E = np.asarray(E, dtype=complex)
        K, M = E.shape[-2:]
        if K > M:
            ok = np.zeros(E.shape[:-2], dtype=bool)
            return np.zeros(E.shape[:-2] + (M, K), dtype=complex), ok
        s = np.linalg.svd(E, compute_uv=False)
        tol = s[..., :1] * max(K, M) * np.finfo(float).eps
        ok = np.all(s > tol, axis=-1) & (s[..., 0] > 0)
        W = np.linalg.pinv(E)
        norms = LinkService.precoder_norms(W)
        good = ok & (norms > 0)
        scale = np.where(good, math.sqrt(Pt) / np.where(good, norms, 1.0), 0.0)
        return W * scale[..., None, None], good

    @classmethod
    def mrt_precoder(cls, effective_channels, Pt):
        """W = sqrt(Pt) E^H / ||E||_F; for one user this is the rate-optimal beam"""
        W, ok = cls.mrt_batch(np.atleast_2d(effective_channels), Pt)
        if not ok:
            raise DegenerateInputError("effective channel is zero; matched filter undefined")
        return Precoder(W=W)

    @classmethod
    def zf_precoder(cls, effective_channels, Pt):
        """Interference-nulling precoder from the pseudo-inverse of the K x M effective channel"""
        E = np.atleast_2d(effective_channels)
        W, ok = cls.zf_batch(E, Pt)
        if not ok:
            raise ConditioningError(f"effective channel matrix {E.shape} does not have full row rank")
        return Precoder(W=W)

    @staticmethod
    def resolve_rule(rule, K):
        if rule not in PRECODER_RULES:
            raise ValidationError(f"precoder rule must be one of {PRECODER_RULES}")
        if rule == "auto":
            return "zf" if K > 1 else "mrt"
        return rule

    @classmethod
    def score_phases(cls, phi, sample, config, rule):
        """Design the precoder on the estimate, score on the truth; phi (T, N) -> (WSR (T,), W)

        Configurations whose precoder is undefined score zero.
        """
        theta = LinkService.phases_to_theta(phi).theta
        E = LinkService.effective_channels(sample.G_hat, sample.h_hat, theta)
        W, ok = (cls.zf_batch if rule == "zf" else cls.mrt_batch)(E, config.Pt)
        G, h = sample.truth()
        gamma = LinkService.sinr(G, h, theta, W, config.sigma2)
        wsr = np.where(ok, LinkService.wsr(gamma, config.q), 0.0)
        return wsr, W

    @classmethod
    def random_baseline(cls, sample, config, rng, trials=1, rule="auto"):
        """Best of `trials` uniformly drawn discrete phase vectors"""
        if trials < 1:
            raise ValidationError("trials must be >= 1")
        sample.check_dimensions(config)
        rule = cls.resolve_rule(rule, config.K)
        phi = rng.integers(0, config.B, size=(trials, config.N)) * config.delta_w
        wsr, W = cls.score_phases(phi, sample, config, rule)
        best = int(np.argmax(wsr))
        theta = LinkService.phases_to_theta(phi[best]).theta
        G, h = sample.truth()
        gamma = LinkService.sinr(G, h, theta, W[best], config.sigma2)
        return BeamformingSolution(
            phi=phi[best], theta=theta, W=W[best],
            report=LinkService.rate_report(gamma, config.q), mode=f"random-{rule}",
        )

    @staticmethod
    def phase_grid(indices, N, B, delta_w):
        """Configuration index -> phases, first element most significant"""
        powers = B ** np.arange(N - 1, -1, -1)
        return ((np.asarray(indices)[:, None] // powers) % B) * delta_w

    @staticmethod
    def within_budget(config, budget_bits=ORACLE_BUDGET_BITS):
        return config.N * config.b <= budget_bits

    @classmethod
    def exhaustive_oracle(cls, sample, config, rule="auto", budget_bits=ORACLE_BUDGET_BITS, chunk=ORACLE_CHUNK):
        """Enumerate all B^N phase vectors; ties resolve to the lowest configuration index"""
        if not cls.within_budget(config, budget_bits):
            raise BudgetExceededError(
                f"exhaustive search over 2^{config.N * config.b} configurations exceeds 2^{budget_bits}"
            )
        sample.check_dimensions(config)
        rule = cls.resolve_rule(rule, config.K)
        total = config.B ** config.N
        best_wsr, best_index, best_W = -math.inf, -1, None
        for start in range(0, total, chunk):
            indices = np.arange(start, min(start + chunk, total))
            phi = cls.phase_grid(indices, config.N, config.B, config.delta_w)
            wsr, W = cls.score_phases(phi, sample, config, rule)
            i = int(np.argmax(wsr))
            if wsr[i] > best_wsr:
                best_wsr, best_index, best_W = float(wsr[i]), int(indices[i]), W[i]
        logger.debug("oracle evaluated %d configurations, best index %d", total, best_index)
        best_phi = cls.phase_grid([best_index], config.N, config.B, config.delta_w)[0]
        return OracleResult(
            best_phi=best_phi, best_wsr=best_wsr, evaluated_count=total,
            precoder_rule=rule, best_W=best_W,
        )
