"""
Network service - Forward and backward passes of the five-layer network that
maps stacked channel reals to continuous phases and precoder reals, plus the
quantization/normalization head and single-sample prediction
"""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateInputError, ValidationError
from ..models.network_params import (
    BatchNormState, DenseLayer, ForwardTrace, Gradients, LAYER_MULTIPLES, NetworkParams,
)
from ..models.quantizer_params import uniform_boundaries
from ..models.solution import BeamformingSolution
from .link_service import LinkService
from .quantizer_service import QuantizerService

MODES = ("train", "infer")
HEAD_MODES = ("soft", "hard", "continuous")
STD_FLOOR = 1e-12


@dataclass
class Upstream:
    """Loss gradients arriving at the head outputs

    d_theta and d_W use the real-pair convention (dL/dRe + j dL/dIm);
    d_phi_cont and d_rho carry terms that act on the continuous phases and
    boundaries directly, such as the boundary penalty.
    """
    d_theta: np.ndarray
    d_W: np.ndarray
    d_phi_cont: np.ndarray = None
    d_rho: np.ndarray = None


class NetworkService:
    """Hand-derived forward/backward for dense -> batch-norm -> ReLU stacks"""

    @staticmethod
    def init_params(config, rng):
        """He-scaled Gaussian weights, zero biases, identity batch-norm, uniform rho"""
        H = config.H
        widths = [config.input_width] + [m * H for m in LAYER_MULTIPLES]
        dense = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            dense.append(DenseLayer(
                W=rng.standard_normal((fan_in, fan_out)) * math.sqrt(2.0 / fan_in),
                b=np.zeros(fan_out),
            ))
        bn = [BatchNormState.fresh(w) for w in widths[1:-1]]
        return NetworkParams(
            N=config.N, M=config.M, K=config.K, b=config.b,
            dense=dense, bn=bn, rho=uniform_boundaries(config.b),
        )

    @staticmethod
    def multiply_count(params):
        """Multiplies of the dense layers per sample: hidden-to-hidden part and input layer"""
        widths = params.widths()
        hidden = sum(widths[i] * widths[i + 1] for i in range(1, len(widths) - 1))
        first = widths[0] * widths[1]
        return {"hidden": hidden, "input": first, "total": hidden + first}

    @staticmethod
    def standardize(params, raw_inputs):
        return (np.asarray(raw_inputs, dtype=float) - params.input_mean) / params.input_std

    @staticmethod
    def fit_standardization(params, raw_inputs):
        """Per-feature mean/std of the training inputs, stored on the params"""
        raw_inputs = np.asarray(raw_inputs, dtype=float)
        params.input_mean = raw_inputs.mean(axis=0)
        params.input_std = np.maximum(raw_inputs.std(axis=0), STD_FLOOR)
        return params

    @staticmethod
    def forward(params, inputs, mode="infer"):
        """inputs (L, 2NM + 2NK) -> phi_cont (L, N), w_reals (L, 2KM), trace"""
        if mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        x = np.asarray(inputs, dtype=float)
        if x.ndim != 2 or x.shape[1] != params.input_width:
            raise ValidationError(f"input width {x.shape[-1]} does not match {params.input_width}")
        L = x.shape[0]
        if mode == "train" and L < 2:
            raise DegenerateInputError("training mode needs a batch of at least two samples")

        trace = ForwardTrace(mode=mode, version=params.version, batch_size=L)
        for layer, state in zip(params.dense[:-1], params.bn):
            trace.inputs.append(x)
            z = x @ layer.W + layer.b
            if mode == "train":
                mean = z.mean(axis=0)
                var = z.var(axis=0)
                inv_std = 1.0 / np.sqrt(var + state.eps)
                x_hat = (z - mean) * inv_std
                state.running_mean *= state.momentum
                state.running_mean += (1.0 - state.momentum) * mean
                state.running_var *= state.momentum
                state.running_var += (1.0 - state.momentum) * var
            else:
                inv_std = 1.0 / np.sqrt(state.running_var + state.eps)
                x_hat = (z - state.running_mean) * inv_std
            y = state.gamma * x_hat + state.beta
            trace.x_hat.append(x_hat)
            trace.inv_std.append(inv_std)
            trace.bn_out.append(y)
            x = np.maximum(y, 0.0)

        last = params.dense[-1]
        trace.inputs.append(x)
        out = x @ last.W + last.b
        split = params.precoder_width
        trace.w_reals = out[:, :split]
        trace.phi_cont = out[:, split:]
        return trace.phi_cont, trace.w_reals, trace

    @staticmethod
    def quantize_phases(phi_cont, quantizer, head_mode):
        if head_mode == "soft":
            return QuantizerService.soft_quantize(phi_cont, quantizer)
        if head_mode == "hard":
            return QuantizerService.hard_quantize(phi_cont, quantizer)
        if head_mode == "continuous":
            return np.mod(phi_cont, 2.0 * math.pi)
        raise ValidationError(f"head mode must be one of {HEAD_MODES}")

    @classmethod
    def head(cls, params, phi_cont, w_reals, c, Pt, head_mode="soft", trace=None, quantizer=None):
        """Quantize phases, map to unit-modulus theta, normalize the precoder

        Returns (phi, theta, W); when a trace is given its head cache is filled.
        An explicit quantizer replaces the network's own boundaries for this call.
        """
        if quantizer is None:
            quantizer = params.quantizer(c)
        phi = cls.quantize_phases(phi_cont, quantizer, head_mode)
        theta = LinkService.phases_to_theta(phi).theta
        W_raw = LinkService.reals_to_precoder(w_reals, params.M, params.K)
        W = LinkService.normalize_batch(W_raw, Pt)
        if trace is not None:
            trace.head = {
                "mode": head_mode, "c": float(c), "Pt": float(Pt),
                "phi": phi, "theta": theta, "W": W,
            }
        return phi, theta, W

    @staticmethod
    def _check_trace(params, trace, upstream):
        if trace.mode != "train":
            raise ValidationError("backward needs a trace from a training-mode forward pass")
        if trace.version != params.version:
            raise ValidationError("stale trace: parameters changed after the forward pass")
        if trace.head is None or trace.head["mode"] != "soft":
            raise ValidationError("backward needs the soft quantization head on the trace")
        L, N = trace.phi_cont.shape
        if np.shape(upstream.d_theta) != (L, N) or np.shape(upstream.d_W) != (L, params.M, params.K):
            raise ValidationError("upstream gradient shapes do not match the trace")

    @classmethod
    def backward(cls, params, trace, upstream):
        """Gradients of every trainable tensor, rho included"""
        cls._check_trace(params, trace, upstream)
        head = trace.head
        quantizer = params.quantizer(head["c"])
        phi = head["phi"]
        L = trace.batch_size

        # lambda layer: theta = cos(phi) + j sin(phi)
        d_theta = np.asarray(upstream.d_theta)
        d_phi = d_theta.real * -np.sin(phi) + d_theta.imag * np.cos(phi)

        # soft quantizer
        dq_dx, dq_drho = QuantizerService.soft_quantize_grad(trace.phi_cont, quantizer)
        d_phi_cont = d_phi * dq_dx
        d_rho = np.sum(d_phi[..., None] * dq_drho, axis=(0, 1))
        if upstream.d_phi_cont is not None:
            d_phi_cont = d_phi_cont + upstream.d_phi_cont
        if upstream.d_rho is not None:
            d_rho = d_rho + upstream.d_rho

        # power normalization: W = sqrt(Pt) v / ||v||
        g = LinkService.precoder_to_reals(np.asarray(upstream.d_W))
        v = trace.w_reals
        norm = np.sqrt(np.sum(v * v, axis=1, keepdims=True))
        u = v / norm
        d_v = math.sqrt(head["Pt"]) / norm * (g - np.sum(g * u, axis=1, keepdims=True) * u)

        d_out = np.concatenate([d_v, d_phi_cont], axis=1)
        grads = {}
        last = len(params.dense) - 1
        grads[f"dense{last}.W"] = trace.inputs[last].T @ d_out
        grads[f"dense{last}.b"] = d_out.sum(axis=0)
        dx = d_out @ params.dense[last].W.T

        for i in range(last - 1, -1, -1):
            state = params.bn[i]
            dy = dx * (trace.bn_out[i] > 0)
            x_hat = trace.x_hat[i]
            grads[f"bn{i}.gamma"] = np.sum(dy * x_hat, axis=0)
            grads[f"bn{i}.beta"] = dy.sum(axis=0)
            dx_hat = dy * state.gamma
            dz = trace.inv_std[i] / L * (
                L * dx_hat - dx_hat.sum(axis=0) - x_hat * np.sum(dx_hat * x_hat, axis=0)
            )
            grads[f"dense{i}.W"] = trace.inputs[i].T @ dz
            grads[f"dense{i}.b"] = dz.sum(axis=0)
            dx = dz @ params.dense[i].W.T

        grads["rho"] = d_rho
        ordered = {name: grads[name] for name in params.trainable()}
        return Gradients(values=ordered)

    @classmethod
    def predict_batch(cls, params, raw_inputs, config, c, head_mode="hard", quantizer=None):
        """Inference-mode (phi, theta, W) for a stack of raw (unstandardized) inputs"""
        phi_cont, w_reals, _ = cls.forward(params, cls.standardize(params, raw_inputs), mode="infer")
        if np.any(np.all(w_reals == 0, axis=1)):
            raise DegenerateInputError("network produced an all-zero precoder")
        phi, theta, W = cls.head(params, phi_cont, w_reals, c, config.Pt, head_mode, quantizer=quantizer)
        return phi_cont, phi, theta, W

    @classmethod
    def predict_solution(cls, params, sample, quantizer_params, config, head_mode="hard"):
        """Run one sample through forward, the chosen head and the rate evaluation"""
        sample.check_dimensions(config)
        raw = np.concatenate([
            sample.G_hat.real.ravel(), sample.G_hat.imag.ravel(),
            sample.h_hat.real.ravel(), sample.h_hat.imag.ravel(),
        ])[None, :]
        if quantizer_params.b != params.b:
            raise ValidationError(f"quantizer has b={quantizer_params.b}, network was built for b={params.b}")
        _, phi, theta, W = cls.predict_batch(
            params, raw, config, quantizer_params.c, head_mode, quantizer=quantizer_params,
        )
        G, h = sample.truth()
        gamma = LinkService.sinr(G, h, theta[0], W[0], config.sigma2)
        return BeamformingSolution(
            phi=phi[0], theta=theta[0], W=W[0],
            report=LinkService.rate_report(gamma, config.q), mode=head_mode,
        )
