"""
Trainer service - Mini-batch training with adaptive moments, plateau
learning-rate schedule, early stopping, validation scoring and checkpoints
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import FormatError, ValidationError
from ..models.network_params import NetworkParams
from ..models.quantizer_params import QuantizerParams
from ..models.system_config import SystemConfig
from ..models.train_config import History, TrainConfig
from ..util.io import atomic_write_frame, read_json, write_json
from ..util.rng import make_rng
from .channel_service import ChannelService
from .link_service import LinkService
from .loss_service import LossService
from .network_service import NetworkService
from .quantizer_service import QuantizerService

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = "risbeam-checkpoint"
CHECKPOINT_FORMAT_VERSION = 1

# substreams of the training seed
INIT_STREAM, TRAIN_STREAM, VALIDATION_STREAM = 0, 1, 2


@dataclass
class AdamState:
    """First and second moment estimates per trainable tensor"""
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0

    def step(self, params, grads, lr, config):
        """Update every trainable tensor in place and bump the parameter version"""
        self.t += 1
        bias1 = 1.0 - config.beta1 ** self.t
        bias2 = 1.0 - config.beta2 ** self.t
        for name, tensor in params.trainable().items():
            g = grads[name]
            if name not in self.m:
                self.m[name] = np.zeros_like(tensor)
                self.v[name] = np.zeros_like(tensor)
            self.m[name] = config.beta1 * self.m[name] + (1.0 - config.beta1) * g
            self.v[name] = config.beta2 * self.v[name] + (1.0 - config.beta2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            tensor -= lr * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        params.version += 1


@dataclass
class FitResult:
    params: NetworkParams
    history: History
    best_epoch: int
    best_val_loss: float
    metrics: dict


class TrainerService:
    """Training loop and evaluation of the phase/precoder network"""

    @staticmethod
    def batches(order, batch_size):
        """Consecutive index batches; a trailing batch of one is merged into its predecessor"""
        chunks = [order[i:i + batch_size] for i in range(0, len(order), batch_size)]
        if len(chunks) > 1 and len(chunks[-1]) == 1:
            last = chunks.pop()
            chunks[-1] = np.concatenate([chunks[-1], last])
        return chunks

    @staticmethod
    def scoring_draws(dataset, j_count, rng):
        """Channels that outputs are scored against: J draws around the estimates, or the estimates"""
        if dataset.eta > 0:
            return ChannelService.draw_true_batch(dataset.G_hat, dataset.h_hat, dataset.eta, j_count, rng)
        return dataset.G_hat[None], dataset.h_hat[None]

    @classmethod
    def held_out_draws(cls, dataset, j_count, rng):
        """Stored true draw when the dataset carries one, so network and baselines share channels"""
        if dataset.G_true is not None:
            G, h = dataset.truth()
            return G[None], h[None]
        return cls.scoring_draws(dataset, j_count, rng)

    @staticmethod
    def hard_wsr(theta, W, G_draws, h_draws, system):
        """Per-sample WSR averaged over the draw axis"""
        gamma = LinkService.sinr(G_draws, h_draws, theta[None], W[None], system.sigma2)
        return LinkService.wsr(gamma, system.q).mean(axis=0)

    @classmethod
    def evaluate(cls, params, dataset, system, c, draws, lam=0.0, penalized=False):
        """Inference-mode loss, soft/hard/continuous WSR, mean f_cons and gap on a dataset"""
        phi_cont, w_reals, _ = NetworkService.forward(
            params, NetworkService.standardize(params, dataset.stacked_inputs()), mode="infer",
        )
        quantizer = params.quantizer(c)
        G, h = draws
        _, theta, W = NetworkService.head(params, phi_cont, w_reals, c, system.Pt, "soft")
        loss, _, wsr_soft = LossService.objective(
            phi_cont, theta, W, G, h, system, quantizer, lam=lam, penalized=penalized,
        )
        theta_hard = LinkService.phases_to_theta(QuantizerService.hard_quantize(phi_cont, quantizer)).theta
        theta_cont = LinkService.phases_to_theta(phi_cont).theta
        wsr_hard = cls.hard_wsr(theta_hard, W, G, h, system)
        wsr_cont = cls.hard_wsr(theta_cont, W, G, h, system)
        f_cons = LossService.f_cons(phi_cont, quantizer)
        soft, hard = float(wsr_soft.mean()), float(wsr_hard.mean())
        return {
            "loss": loss / (len(dataset) * G.shape[0]),
            "wsr_soft": soft,
            "wsr_hard": hard,
            "wsr_continuous": float(wsr_cont.mean()),
            "mean_f_cons": float(f_cons.mean()),
            "gap": QuantizerService.gap(soft, hard) if soft > 0 else 0.0,
            "per_sample": {"wsr_soft": wsr_soft, "wsr_hard": wsr_hard, "wsr_continuous": wsr_cont},
        }

    @staticmethod
    def train_step(params, adam, X, G, h, system, config, lr):
        """One forward/backward/update on a standardized batch; returns the batch loss"""
        phi_cont, w_reals, trace = NetworkService.forward(params, X, mode="train")
        quantizer = params.quantizer(config.c)
        _, theta, W = NetworkService.head(params, phi_cont, w_reals, config.c, system.Pt, "soft", trace=trace)
        loss, upstream, _ = LossService.objective(
            phi_cont, theta, W, G, h, system, quantizer, lam=config.lam, penalized=config.penalized,
        )
        grads = NetworkService.backward(params, trace, upstream)
        adam.step(params, grads, lr, config)
        return loss

    @classmethod
    def fit(cls, params, train, val, system, config):
        """Train on `train`, select on `val`; returns the best-validation checkpoint and history"""
        if train is None or len(train) < 2:
            raise ValidationError("training split needs at least two samples")
        if val is None or len(val) < 1:
            raise ValidationError("validation split is empty")
        config.validate()
        if config.penalized and config.lam == 0:
            logger.warning("penalized loss with lambda = 0 reduces to the perfect loss")
        if params is None:
            params = NetworkService.init_params(system, make_rng(config.seed, INIT_STREAM))
        if (params.N, params.M, params.K, params.b) != (system.N, system.M, system.K, system.b):
            raise ValidationError("network dimensions do not match the system config")

        raw_train = train.stacked_inputs()
        NetworkService.fit_standardization(params, raw_train)
        X_train = NetworkService.standardize(params, raw_train)

        rng = make_rng(config.seed, TRAIN_STREAM)
        val_draws = cls.scoring_draws(val, config.J if config.averaged else 1, make_rng(config.seed, VALIDATION_STREAM))
        j_train = config.J if config.averaged else 1

        adam = AdamState()
        lr = config.lr
        history = History(loss_kind=config.loss_kind)
        best = {"loss": math.inf, "epoch": 0, "params": params.clone(), "metrics": {}}
        wait = plateau_wait = 0

        for epoch in range(1, config.max_epochs + 1):
            epoch_lr = lr
            total = 0.0
            for idx in cls.batches(rng.permutation(len(train)), config.batch_size):
                if config.averaged:
                    G, h = ChannelService.draw_true_batch(train.G_hat[idx], train.h_hat[idx], train.eta, j_train, rng)
                else:
                    G, h = train.G_hat[idx][None], train.h_hat[idx][None]
                total += cls.train_step(params, adam, X_train[idx], G, h, system, config, lr)
            train_loss = total / (len(train) * j_train)

            metrics = cls.evaluate(params, val, system, config.c, val_draws, config.lam, config.penalized)
            history.append(
                epoch=epoch, lr=epoch_lr, train_loss=train_loss,
                val_wsr_soft=metrics["wsr_soft"], val_wsr_hard=metrics["wsr_hard"],
                mean_f_cons=metrics["mean_f_cons"], gap=metrics["gap"],
            )
            logger.info(
                "epoch %d lr %.2e train_loss %.5g val_loss %.5g soft %.4f hard %.4f",
                epoch, epoch_lr, train_loss, metrics["loss"], metrics["wsr_soft"], metrics["wsr_hard"],
            )

            if metrics["loss"] < best["loss"]:
                best.update(loss=metrics["loss"], epoch=epoch, params=params.clone(), metrics=metrics)
                wait = plateau_wait = 0
            else:
                wait += 1
                plateau_wait += 1
                if plateau_wait >= config.plateau_patience:
                    lr = max(lr * config.plateau_factor, config.lr_floor)
                    plateau_wait = 0
                if wait >= config.patience:
                    logger.info("early stop at epoch %d (best epoch %d)", epoch, best["epoch"])
                    break

        chosen = best["params"]
        chosen.metadata.update({
            "seed": config.seed,
            "epoch": best["epoch"],
            "best_val_wsr": best["metrics"].get("wsr_soft"),
            "best_val_wsr_hard": best["metrics"].get("wsr_hard"),
            "mean_f_cons": best["metrics"].get("mean_f_cons"),
            "c": config.c,
            "lam": config.lam,
            "loss_kind": config.loss_kind,
        })
        summary = {k: v for k, v in best["metrics"].items() if k != "per_sample"}
        return FitResult(params=chosen, history=history, best_epoch=best["epoch"],
                         best_val_loss=best["loss"], metrics=summary)

    @staticmethod
    def save_history(path, history):
        return atomic_write_frame(path, history.to_frame())

    @staticmethod
    def save_checkpoint(path, params, system, c, train_config=None):
        """Write a self-describing checkpoint document"""
        document = {
            "kind": CHECKPOINT_KIND,
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "config": system.to_dict(),
            "quantizer": params.quantizer(c).to_dict(),
            "network": params.to_dict(),
            "training": None if train_config is None else train_config.to_dict(),
        }
        write_json(path, document)
        return path

    @staticmethod
    def load_checkpoint(path):
        """Read a checkpoint -> (params, system, quantizer, training config or None)"""
        document = read_json(path)
        if document.get("kind") != CHECKPOINT_KIND:
            raise FormatError(f"{path}: not a checkpoint file")
        if document.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint format {document.get('format_version')}")
        params = NetworkParams.from_dict(document["network"])
        system = SystemConfig.from_dict(document["config"])
        quantizer = QuantizerParams.from_dict(document["quantizer"])
        params.rho[...] = quantizer.rho
        quantizer = params.quantizer(quantizer.c)
        training = document.get("training")
        return params, system, quantizer, None if training is None else TrainConfig.from_dict(training)
