"""
Loss service - Negative batch WSR, its boundary-penalized form, the sum over
true-channel draws, and the combined objective with its head gradients
"""
import numpy as np

from ..errors import ValidationError
from ..models.solution import BeamformingSolution
from .link_service import LinkService
from .network_service import Upstream
from .quantizer_service import QuantizerService


def _gammas(batch):
    """SINR array from a list of solutions or an array of shape (..., K)"""
    if isinstance(batch, (list, tuple)) and batch and isinstance(batch[0], BeamformingSolution):
        return np.stack([s.report.gamma for s in batch])
    gamma = np.asarray(batch, dtype=float)
    if gamma.size == 0:
        raise ValidationError("loss needs a nonempty batch")
    return gamma


class LossService:
    """Training objectives; all losses are sums (not means) over the batch"""

    @staticmethod
    def loss_perfect(batch, q):
        """-sum_l sum_k q_k log2(1 + gamma_kl)"""
        return -float(np.sum(LinkService.wsr(_gammas(batch), q)))

    @staticmethod
    def f_cons(phi_cont, quantizer):
        """Per-sample penalty: sum of the boundary penalty over the N continuous phases"""
        return np.sum(QuantizerService.penalty(phi_cont, quantizer), axis=-1)

    @classmethod
    def loss_penalized(cls, batch, phi_cont, q, lam, quantizer):
        """loss_perfect + lam * sum_l f_cons(sample l)"""
        if lam < 0:
            raise ValidationError("lambda must be >= 0")
        base = cls.loss_perfect(batch, q)
        if lam == 0:
            return base
        return base + lam * float(np.sum(cls.f_cons(phi_cont, quantizer)))

    @classmethod
    def loss_averaged(cls, theta, W, G_draws, h_draws, system, kind="perfect", phi_cont=None, lam=0.0, quantizer=None):
        """Sum over J true-channel draws of the inner loss

        theta (L, N) and W (L, M, K) are the network outputs on the estimated
        batch; G_draws (J, L, N, M) and h_draws (J, L, K, N) are drawn around it.
        """
        G_draws = np.asarray(G_draws)
        if G_draws.ndim != 4 or G_draws.shape[0] < 1:
            raise ValidationError("averaged loss needs channel draws of shape (J, L, N, M) with J >= 1")
        gamma_draws = LinkService.sinr(G_draws, h_draws, theta[None], W[None], system.sigma2)
        if kind == "perfect":
            return float(sum(cls.loss_perfect(g, system.q) for g in gamma_draws))
        if kind == "penalized":
            return float(sum(cls.loss_penalized(g, phi_cont, system.q, lam, quantizer) for g in gamma_draws))
        raise ValidationError(f"inner loss kind must be perfect or penalized, got {kind}")

    @classmethod
    def objective(cls, phi_cont, theta, W, G_draws, h_draws, system, quantizer, lam=0.0, penalized=False):
        """Loss value and its gradients at the head outputs

        G_draws (J, L, N, M) and h_draws (J, L, K, N) are the channels the
        outputs are scored against; the network outputs are shared by all J
        draws. With a penalty it is counted once per draw.
        Returns (loss, Upstream, per-sample WSR averaged over draws).
        """
        G_draws = np.asarray(G_draws)
        J = G_draws.shape[0]
        wsr, g_theta, g_W = LinkService.wsr_and_grad(
            G_draws, h_draws, theta[None], W[None], system.sigma2, system.q,
        )
        loss = -float(np.sum(wsr))
        upstream = Upstream(d_theta=-np.sum(g_theta, axis=0), d_W=-np.sum(g_W, axis=0))
        if penalized and lam > 0:
            loss += J * lam * float(np.sum(cls.f_cons(phi_cont, quantizer)))
            d_x, d_rho = QuantizerService.penalty_grad(phi_cont, quantizer)
            upstream.d_phi_cont = J * lam * d_x
            upstream.d_rho = J * lam * np.sum(d_rho, axis=(0, 1))
        return loss, upstream, wsr.mean(axis=0)
