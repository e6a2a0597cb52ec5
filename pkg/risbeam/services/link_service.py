"""
Link service - Effective channels, SINR, weighted sum-rate, the phase to
reflection-coefficient mapping and precoder power normalization

Every operation accepts leading batch axes: phases (..., N), channels
G (..., N, M) and h (..., K, N), precoders (..., M, K).
"""
import math

import numpy as np

from ..errors import DegenerateInputError, DomainError, ValidationError
from ..models.solution import Precoder, RateReport, ReflectionState

LN2 = math.log(2.0)


class LinkService:
    """Deterministic physical-layer math of the RIS-assisted downlink"""

    @staticmethod
    def phases_to_theta(phi):
        """theta = cos(phi) + j sin(phi)"""
        phi = np.asarray(phi, dtype=float)
        return ReflectionState(phi=phi, theta=np.cos(phi) + 1j * np.sin(phi))

    @staticmethod
    def precoder_norms(W):
        return np.sqrt(np.sum(np.abs(W) ** 2, axis=(-2, -1)))

    @classmethod
    def normalize_batch(cls, W_raw, Pt):
        """sqrt(Pt) W / ||W||_F for every matrix of a stack"""
        W_raw = np.asarray(W_raw, dtype=complex)
        norms = cls.precoder_norms(W_raw)
        if np.any(norms == 0):
            raise DegenerateInputError("precoder is identically zero; no direction to normalize")
        return math.sqrt(Pt) * W_raw / norms[..., None, None]

    @classmethod
    def normalize_precoder(cls, W_raw, Pt):
        """Scale W_raw onto the power constraint ||W||_F = sqrt(Pt)"""
        return Precoder(W=cls.normalize_batch(W_raw, Pt))

    @staticmethod
    def reals_to_precoder(w_reals, M, K):
        """[Re W (M x K, row-major), Im W] -> complex W, batched over leading axes"""
        w_reals = np.asarray(w_reals, dtype=float)
        half = M * K
        lead = w_reals.shape[:-1]
        return (w_reals[..., :half] + 1j * w_reals[..., half:]).reshape(lead + (M, K))

    @staticmethod
    def precoder_to_reals(W):
        """Inverse of reals_to_precoder"""
        W = np.asarray(W)
        lead = W.shape[:-2]
        flat = W.reshape(lead + (-1,))
        return np.concatenate([flat.real, flat.imag], axis=-1)

    @staticmethod
    def effective_channel(h_k, theta, G):
        """h_k^H diag(theta) G, a length-M row"""
        h_k, theta, G = np.asarray(h_k), np.asarray(theta), np.asarray(G)
        if h_k.shape[-1] != theta.shape[-1] or G.shape[-2] != theta.shape[-1]:
            raise ValidationError(
                f"dimension mismatch: h {h_k.shape}, theta {theta.shape}, G {G.shape}"
            )
        return (np.conj(h_k) * theta) @ G

    @classmethod
    def effective_channels(cls, G, h, theta):
        """Stacked effective rows E (..., K, M) for all users"""
        G, h, theta = np.asarray(G), np.asarray(h), np.asarray(theta)
        if h.shape[-1] != theta.shape[-1] or G.shape[-2] != theta.shape[-1]:
            raise ValidationError(
                f"dimension mismatch: h {h.shape}, theta {theta.shape}, G {G.shape}"
            )
        return (np.conj(h) * theta[..., None, :]) @ G

    @staticmethod
    def _check_sigma2(sigma2):
        if not (sigma2 > 0):
            raise DomainError(f"noise power must be positive, got {sigma2}")

    @classmethod
    def sinr_from_effective(cls, E, W, sigma2):
        """gamma_k = |e_k w_k|^2 / (sum_{n != k} |e_k w_n|^2 + sigma2)"""
        cls._check_sigma2(sigma2)
        P = np.abs(np.asarray(E) @ np.asarray(W)) ** 2
        signal = np.diagonal(P, axis1=-2, axis2=-1)
        interference = np.sum(P, axis=-1) - signal
        return signal / (interference + sigma2)

    @classmethod
    def sinr(cls, G, h, theta, W, sigma2):
        """Per-user SINR of the cascaded channel under reflection theta and precoder W"""
        cls._check_sigma2(sigma2)
        return cls.sinr_from_effective(cls.effective_channels(G, h, theta), W, sigma2)

    @staticmethod
    def rates(gamma):
        return np.log2(1.0 + np.asarray(gamma, dtype=float))

    @classmethod
    def wsr(cls, gamma, q):
        """sum_k q_k log2(1 + gamma_k) over the last axis"""
        return np.sum(np.asarray(q, dtype=float) * cls.rates(gamma), axis=-1)

    @classmethod
    def rate_report(cls, gamma, q):
        gamma = np.asarray(gamma, dtype=float)
        return RateReport(gamma=gamma, rates=cls.rates(gamma), wsr=float(cls.wsr(gamma, q)))

    @classmethod
    def wsr_and_grad(cls, G, h, theta, W, sigma2, q):
        """WSR per sample and its gradients with respect to theta and W

        Gradients use the real-pair convention: for z = x + jy the returned
        value is dWSR/dx + j dWSR/dy.
        """
        cls._check_sigma2(sigma2)
        q = np.asarray(q, dtype=float)
        E = cls.effective_channels(G, h, theta)
        S = E @ W
        P = np.abs(S) ** 2
        signal = np.diagonal(P, axis1=-2, axis2=-1)
        total = np.sum(P, axis=-1) + sigma2
        rest = total - signal
        wsr = np.sum(q * (np.log(total) - np.log(rest)), axis=-1) / LN2

        # dWSR/dP_kn = q_k / ln2 * (1/total_k - [n != k]/rest_k)
        K = P.shape[-1]
        off = 1.0 - np.eye(K)
        dP = (q / LN2)[..., :, None] * (1.0 / total[..., :, None] - off / rest[..., :, None])
        gS = 2.0 * dP * S
        gW = np.conj(np.swapaxes(E, -1, -2)) @ gS
        gE = gS @ np.conj(np.swapaxes(W, -1, -2))
        gtheta = np.sum(h * (gE @ np.conj(np.swapaxes(G, -1, -2))), axis=-2)
        return wsr, gtheta, gW
