"""
Experiment service - Command implementations of the harness: dataset
generation, training drivers, evaluation against baselines, sweeps and
run manifests
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from .. import __version__
from ..config import SWEEP_AXES, SWEEP_MODES, ResolvedConfig, parse_value, resolve_config
from ..errors import BudgetExceededError, FormatError, ValidationError
from ..models.experiment_spec import COMMANDS, ExperimentSpec
from ..util.io import atomic_write_frame, read_json, write_json
from ..util.rng import derive_seed, make_rng
from .baseline_service import BaselineService
from .channel_service import DATASET_FORMAT_VERSION, ChannelService
from .search_service import REFERENCE_OPTIMAL_C, SearchService
from .trainer_service import CHECKPOINT_FORMAT_VERSION, TrainerService

logger = logging.getLogger(__name__)

MANIFEST_KIND = "risbeam-manifest"
MANIFEST_FORMAT_VERSION = 1
EVAL_COLUMNS = ["index", "wsr_soft", "wsr_hard", "wsr_continuous", "wsr_random", "wsr_oracle", "gap"]
SWEEP_COLUMNS = ["axis", "value", "seed", "wsr_soft", "wsr_hard", "wsr_continuous", "wsr_random", "wsr_oracle"]

# substreams of the master seed
EVAL_STREAM, RANDOM_STREAM = 3, 4


class ExperimentService:
    """One method per harness command; every command writes a manifest next to its outputs"""

    @staticmethod
    def resolve(spec):
        if spec.resolved is not None:
            resolved = ResolvedConfig.from_dict(spec.resolved)
        else:
            resolved = resolve_config(spec.profile, spec.config_path, spec.overrides)
        if spec.seed is not None:
            resolved = resolved.with_seed(spec.seed)
        return resolved

    @staticmethod
    def _out(spec, name):
        return os.path.join(spec.out_dir, name)

    @classmethod
    def write_manifest(cls, spec, resolved, artifacts):
        """Record the resolved config, seed, inputs and artifact versions of a run"""
        document = {
            "kind": MANIFEST_KIND,
            "format_version": MANIFEST_FORMAT_VERSION,
            "package_version": __version__,
            "command": spec.command,
            "seed": resolved.data["seed"],
            "resolved": resolved.to_dict(),
            "inputs": {"dataset": spec.dataset, "checkpoint": spec.checkpoint},
            "options": dict(spec.options),
            "artifacts": dict(artifacts),
            "formats": {
                "dataset": DATASET_FORMAT_VERSION,
                "checkpoint": CHECKPOINT_FORMAT_VERSION,
                "manifest": MANIFEST_FORMAT_VERSION,
            },
        }
        return write_json(cls._out(spec, "manifest.json"), document)

    @staticmethod
    def load_manifest(path, out_dir="out"):
        """Manifest -> ExperimentSpec that reruns the recorded command with its resolved config"""
        document = read_json(path)
        if document.get("kind") != MANIFEST_KIND:
            raise FormatError(f"{path}: not a manifest file")
        if document.get("format_version") != MANIFEST_FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported manifest format {document.get('format_version')}")
        inputs = document.get("inputs", {})
        return ExperimentSpec(
            command=document["command"],
            out_dir=out_dir,
            dataset=inputs.get("dataset"),
            checkpoint=inputs.get("checkpoint"),
            options=dict(document.get("options", {})),
            resolved=document["resolved"],
        )

    @staticmethod
    def sample_count(resolved):
        data = resolved.data
        return data["train_size"] + data["val_size"] + data["test_size"]

    @classmethod
    def load_splits(cls, spec, resolved):
        """(train, val, test) from the given dataset file, or generated from the resolved config"""
        system, data = resolved.system, resolved.data
        if spec.dataset:
            dataset, _ = ChannelService.load_dataset(spec.dataset)
            stored = dataset.config
            if (stored.N, stored.M, stored.K) != (system.N, system.M, system.K):
                raise ValidationError(
                    f"dataset dimensions (N={stored.N}, M={stored.M}, K={stored.K}) do not match "
                    f"the config (N={system.N}, M={system.M}, K={system.K})"
                )
        else:
            dataset = ChannelService.build_dataset(
                system, cls.sample_count(resolved), data["eta"], data["seed"], data["workers"],
            )
        return dataset.split(data["val_size"], data["test_size"])

    @classmethod
    def cmd_gen_data(cls, spec):
        resolved = cls.resolve(spec)
        data = resolved.data
        path = ChannelService.generate_dataset(
            resolved.system, cls.sample_count(resolved), data["eta"], data["seed"],
            cls._out(spec, "dataset.jsonl"), data["workers"],
        )
        artifacts = {"dataset": path}
        artifacts["manifest"] = cls.write_manifest(spec, resolved, artifacts)
        return artifacts

    @classmethod
    def _save_fit(cls, spec, resolved, result, training, prefix=""):
        checkpoint = TrainerService.save_checkpoint(
            cls._out(spec, f"{prefix}checkpoint.json"), result.params, resolved.system, training.c, training,
        )
        history = TrainerService.save_history(cls._out(spec, f"{prefix}history.csv"), result.history)
        return {f"{prefix}checkpoint": checkpoint, f"{prefix}history": history}

    @classmethod
    def cmd_train(cls, spec):
        resolved = cls.resolve(spec)
        train, val, _ = cls.load_splits(spec, resolved)
        result = TrainerService.fit(None, train, val, resolved.system, resolved.training)
        artifacts = cls._save_fit(spec, resolved, result, resolved.training)
        artifacts["manifest"] = cls.write_manifest(spec, resolved, artifacts)
        return dict(artifacts, metrics=result.metrics)

    @classmethod
    def cmd_search_c(cls, spec):
        resolved = cls.resolve(spec)
        train, val, _ = cls.load_splits(spec, resolved)
        c_init = spec.options.get("c_init")
        best_c, best, state = SearchService.search_c(train, val, resolved.system, resolved.training, c_init)
        training = resolved.training.with_overrides(c=float(best_c))
        artifacts = cls._save_fit(spec, resolved, best, training)
        report = dict(state.to_dict(), reference_c=cls._reference_c(resolved.system))
        artifacts["report"] = write_json(cls._out(spec, "search_c.json"), report)
        artifacts["manifest"] = cls.write_manifest(spec, resolved, artifacts)
        return dict(artifacts, best_c=best_c)

    @staticmethod
    def _reference_c(system):
        return REFERENCE_OPTIMAL_C.get(system.b, {}).get(system.N)

    @classmethod
    def cmd_idqnn(cls, spec):
        resolved = cls.resolve(spec)
        train, val, _ = cls.load_splits(spec, resolved)
        outcome = SearchService.run_idqnn(train, val, resolved.system, resolved.training)
        training = resolved.training.with_overrides(
            loss_kind=outcome.fit.params.metadata["loss_kind"], lam=outcome.lam,
        )
        artifacts = cls._save_fit(spec, resolved, outcome.fit, training)
        artifacts.update(
            pretrain_history=TrainerService.save_history(cls._out(spec, "pretrain_history.csv"), outcome.pretrain.history)
        )
        report = {
            "lam": outcome.lam,
            "wsr_c": outcome.wsr_c,
            "f_cons_c": outcome.f_cons_c,
            "pretrain_loss_kind": outcome.fit.params.metadata["pretrain_loss_kind"],
            "loss_kind": outcome.fit.params.metadata["loss_kind"],
            "metrics": outcome.fit.metrics,
        }
        artifacts["report"] = write_json(cls._out(spec, "idqnn.json"), report)
        artifacts["manifest"] = cls.write_manifest(spec, resolved, artifacts)
        return dict(artifacts, lam=outcome.lam)

    @staticmethod
    def baseline_scores(dataset, system, seed, trials, with_oracle):
        """Per-sample best-of-trials random WSR and, optionally, oracle WSR"""
        random_wsr, oracle_wsr = [], []
        for i in range(len(dataset)):
            sample = dataset.sample(i)
            rng = make_rng(seed, RANDOM_STREAM, i)
            random_wsr.append(BaselineService.random_baseline(sample, system, rng, trials).wsr)
            if with_oracle:
                oracle_wsr.append(BaselineService.exhaustive_oracle(sample, system).best_wsr)
        return np.asarray(random_wsr), (np.asarray(oracle_wsr) if with_oracle else None)

    @classmethod
    def cmd_eval(cls, spec):
        """Score a checkpoint on the test split in soft, hard and continuous modes plus baselines"""
        if not spec.checkpoint:
            raise ValidationError("eval needs a checkpoint")
        params, system, quantizer, _ = TrainerService.load_checkpoint(spec.checkpoint)
        resolved = cls.resolve(spec)
        resolved = ResolvedConfig(resolved.profile, system, resolved.training, resolved.data, resolved.sweep)
        oracle = spec.options.get("oracle")
        if oracle and not BaselineService.within_budget(system):
            raise BudgetExceededError(
                f"oracle requested but N*b = {system.N * system.b} exceeds the enumeration budget"
            )
        with_oracle = BaselineService.within_budget(system) if oracle is None else bool(oracle)
        _, _, test = cls.load_splits(spec, resolved)
        if len(test) == 0:
            raise ValidationError("eval needs a nonempty test split (data.test_size)")

        warnings = []
        j_count = resolved.training.J
        if test.eta == 0 and j_count > 1:
            message = f"eta = 0: J = {j_count} true-channel draws collapse to single-draw scoring"
            logger.warning(message)
            warnings.append(message)
            j_count = 1
        seed = resolved.data["seed"]
        draws = TrainerService.held_out_draws(test, j_count, make_rng(seed, EVAL_STREAM))
        j_count = draws[0].shape[0]
        metrics = TrainerService.evaluate(params, test, system, quantizer.c, draws)
        random_wsr, oracle_wsr = cls.baseline_scores(test, system, seed, resolved.data["random_trials"], with_oracle)

        per = metrics["per_sample"]
        soft = per["wsr_soft"]
        frame = pd.DataFrame({
            "index": test.indices.astype(int),
            "wsr_soft": soft,
            "wsr_hard": per["wsr_hard"],
            "wsr_continuous": per["wsr_continuous"],
            "wsr_random": random_wsr,
            "wsr_oracle": oracle_wsr if with_oracle else np.nan,
            "gap": np.where(soft > 0, (soft - per["wsr_hard"]) / np.where(soft > 0, soft, 1.0), 0.0),
        })
        columns = EVAL_COLUMNS if with_oracle else [c for c in EVAL_COLUMNS if c != "wsr_oracle"]
        artifacts = {"eval": atomic_write_frame(cls._out(spec, "eval.csv"), frame[columns])}
        summary = {k: v for k, v in metrics.items() if k != "per_sample"}
        summary.update(wsr_random=float(random_wsr.mean()), j_count=j_count, samples=len(test))
        if with_oracle:
            summary["wsr_oracle"] = float(oracle_wsr.mean())
        artifacts["summary"] = write_json(cls._out(spec, "eval_summary.json"), summary)
        artifacts["manifest"] = cls.write_manifest(spec, resolved, artifacts)
        return dict(artifacts, warnings=warnings, summary=summary)

    @staticmethod
    def point_config(resolved, axis, value):
        """(SystemConfig, eta) of one sweep point"""
        if axis == "pt_dbm":
            return resolved.system.with_overrides(Pt_dBm=float(value)), resolved.data["eta"]
        if axis == "n":
            return resolved.system.with_overrides(N=int(value)), resolved.data["eta"]
        if axis == "eta":
            if value < 0:
                raise ValidationError("eta sweep values must be >= 0")
            return resolved.system, float(value)
        raise ValidationError(f"unknown sweep axis {axis}")

    @classmethod
    def run_point(cls, resolved, axis, mode, index, value, with_oracle):
        """One sweep row; channels share the master data seed, training and baselines use the point seed"""
        system, eta = cls.point_config(resolved, axis, value)
        data = resolved.data
        point_seed = derive_seed(data["seed"], index)
        row = {"axis": axis, "value": float(value), "seed": point_seed}
        if mode == "train":
            dataset = ChannelService.build_dataset(system, cls.sample_count(resolved), eta, data["seed"])
            train, val, test = dataset.split(data["val_size"], max(data["test_size"], 1))
            training = resolved.training.with_overrides(seed=point_seed)
            result = TrainerService.fit(None, train, val, system, training)
            draws = TrainerService.held_out_draws(test, training.J, make_rng(point_seed, EVAL_STREAM))
            metrics = TrainerService.evaluate(result.params, test, system, training.c, draws)
            row.update(wsr_soft=metrics["wsr_soft"], wsr_hard=metrics["wsr_hard"],
                       wsr_continuous=metrics["wsr_continuous"])
        else:
            test = ChannelService.build_dataset(system, max(data["test_size"], 1), eta, data["seed"])
        random_wsr, oracle_wsr = cls.baseline_scores(test, system, point_seed, data["random_trials"], with_oracle)
        row["wsr_random"] = float(random_wsr.mean())
        if with_oracle:
            row["wsr_oracle"] = float(oracle_wsr.mean())
        logger.info("sweep %s=%g done", axis, value)
        return row

    @classmethod
    def cmd_sweep(cls, spec):
        """Iterate one axis (pt_dbm, n or eta) and aggregate per-point means into a CSV"""
        resolved = cls.resolve(spec)
        sweep = dict(resolved.sweep)
        for key in ("axis", "values", "mode", "parallel"):
            if spec.options.get(key) is not None:
                sweep[key] = parse_value("sweep", key, spec.options[key])
        axis, mode, values = sweep["axis"], sweep["mode"], list(sweep["values"])
        if axis not in SWEEP_AXES or mode not in SWEEP_MODES:
            raise ValidationError(f"sweep axis must be one of {SWEEP_AXES} and mode one of {SWEEP_MODES}")
        if not values:
            raise ValidationError("sweep needs at least one value")
        with_oracle = all(
            BaselineService.within_budget(cls.point_config(resolved, axis, v)[0]) for v in values
        )

        def run(item):
            return cls.run_point(resolved, axis, mode, item[0], item[1], with_oracle)

        if sweep.get("parallel") and len(values) > 1:
            with ThreadPoolExecutor(max_workers=int(sweep.get("workers", 2))) as pool:
                rows = list(pool.map(run, enumerate(values)))
        else:
            rows = [run(item) for item in enumerate(values)]

        columns = [c for c in SWEEP_COLUMNS if c in rows[0]]
        frame = pd.DataFrame(rows)[columns]
        artifacts = {"sweep": atomic_write_frame(cls._out(spec, "sweep.csv"), frame)}
        artifacts["manifest"] = cls.write_manifest(spec, resolved, artifacts)
        return dict(artifacts, rows=rows)

    @classmethod
    def run(cls, spec):
        """Dispatch an ExperimentSpec to its command"""
        handlers = {
            "gen-data": cls.cmd_gen_data,
            "train": cls.cmd_train,
            "search-c": cls.cmd_search_c,
            "idqnn": cls.cmd_idqnn,
            "eval": cls.cmd_eval,
            "sweep": cls.cmd_sweep,
        }
        if spec.command not in COMMANDS:
            raise ValidationError(f"unknown command {spec.command}")
        return handlers[spec.command](spec)
