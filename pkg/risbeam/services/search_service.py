"""
Search service - Comparative search for the quantizer steepness c, the penalty
weight heuristic and the two-stage pre-train/penalized-retrain procedure
"""
import logging
from dataclasses import dataclass

from ..errors import DomainError
from ..models.train_config import SearchState
from .quantizer_service import QuantizerService
from .trainer_service import TrainerService

logger = logging.getLogger(__name__)

C_FLOOR = 1.0
LAMBDA_SCALE = 0.1

# published optimum steepness per RIS size N, keyed by bits b
REFERENCE_OPTIMAL_C = {
    1: {20: 1, 40: 1, 60: 1, 80: 1, 100: 1},
    2: {20: 54, 40: 44, 60: 36, 80: 31, 100: 29},
}

# published pre-training statistics: N -> (f_cons_c, WSR_c, lambda)
REFERENCE_LAMBDA_TABLE = {
    20: (1.591, 3.853, 0.24),
    40: (1.528, 4.890, 0.32),
    60: (1.294, 5.702, 0.44),
    80: (1.286, 6.236, 0.48),
    100: (1.273, 6.703, 0.53),
}


@dataclass
class IdqnnResult:
    fit: object  # FitResult of the penalized retraining
    pretrain: object  # FitResult of the pre-training
    lam: float
    wsr_c: float
    f_cons_c: float


class SearchService:
    """Hyperparameter drivers wrapped around TrainerService.fit"""

    @staticmethod
    def compute_lambda(wsr_c, f_cons_c):
        """lambda = 0.1 * WSR_c / f_cons_c"""
        if not (f_cons_c > 0):
            raise DomainError(f"f_cons_c must be positive, got {f_cons_c}")
        return LAMBDA_SCALE * wsr_c / f_cons_c

    @staticmethod
    def default_train_fn(train, val, system, config):
        """train_fn(c) -> (WSR_t, WSR_p, FitResult) trained from a fresh init"""
        def train_fn(c):
            result = TrainerService.fit(None, train, val, system, config.with_overrides(c=float(c)))
            return result.metrics["wsr_soft"], result.metrics["wsr_hard"], result
        return train_fn

    @classmethod
    def search_c(cls, train, val, system, config, c_init=None, train_fn=None):
        """Step c by one until the hard-mode validation WSR first decreases

        The step direction follows the soft/hard gap: below tau c goes down,
        otherwise up. Returns (best c, best checkpoint, SearchState).
        """
        c = float(config.c if c_init is None else c_init)
        if not (c > 0):
            raise DomainError(f"c_init must be positive, got {c}")
        if train_fn is None:
            train_fn = cls.default_train_fn(train, val, system, config)

        state = SearchState(c=c)
        previous_p = 0.0
        while True:
            if state.iteration >= config.max_search_iters:
                state.stop_reason = "max_iterations"
                break
            if c in state.c_values:
                state.stop_reason = "revisit"
                break
            wsr_t, wsr_p, checkpoint = train_fn(c)
            state.iteration += 1
            state.c_values.append(c)
            state.wsr_t.append(float(wsr_t))
            state.wsr_p.append(float(wsr_p))
            state.checkpoints.append(checkpoint)
            logger.info("search iterate %d: c=%g WSR_t=%.4f WSR_p=%.4f", state.iteration, c, wsr_t, wsr_p)

            if wsr_p < previous_p:
                state.stop_reason = "decrease"
                break
            state.best_index = state.iteration - 1
            previous_p = wsr_p

            step = -1.0 if QuantizerService.gap(wsr_t, wsr_p) < config.tau else 1.0
            if c + step < C_FLOOR:
                state.stop_reason = "floor"
                break
            c += step
            state.c = c

        best = state.best_index
        return state.c_values[best], state.checkpoints[best], state

    @classmethod
    def run_idqnn(cls, train, val, system, config):
        """Pre-train without penalty, derive lambda, retrain with the penalty from a fresh init"""
        imperfect = config.averaged or train.eta > 0
        pre_kind = "averaged" if imperfect else "perfect"
        final_kind = "averaged+penalized" if imperfect else "penalized"

        pretrain = TrainerService.fit(
            None, train, val, system, config.with_overrides(loss_kind=pre_kind, lam=0.0),
        )
        wsr_c = pretrain.metrics["wsr_soft"]
        f_cons_c = pretrain.metrics["mean_f_cons"]
        lam = cls.compute_lambda(wsr_c, f_cons_c)
        logger.info("pre-training done: WSR_c=%.4f f_cons_c=%.4f lambda=%.4f", wsr_c, f_cons_c, lam)

        final = TrainerService.fit(
            None, train, val, system, config.with_overrides(loss_kind=final_kind, lam=lam),
        )
        final.params.metadata.update({
            "pretrain_loss_kind": pre_kind,
            "wsr_c": wsr_c,
            "f_cons_c": f_cons_c,
            "lam": lam,
        })
        return IdqnnResult(fit=final, pretrain=pretrain, lam=lam, wsr_c=wsr_c, f_cons_c=f_cons_c)
