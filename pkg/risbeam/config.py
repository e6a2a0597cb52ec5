"""
Configuration profiles and resolution of config files and key=value overrides

Resolution order: profile defaults < config file < overrides. Powers are given
in dBm, distances in metres and angles in radians.
"""
import configparser
import os
from dataclasses import dataclass, field

from dotenv import load_dotenv

from .errors import ValidationError
from .models.system_config import SystemConfig
from .models.train_config import TrainConfig

# Load environment variables
load_dotenv()


def parse_floats(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).replace(";", ",").split(",") if v.strip())


def parse_bool(text):
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text}")


# section -> key -> parser
SCHEMA = {
    "system": {
        "M": int, "N": int, "K": int, "b": int, "Nx": int, "Ny": int,
        "Pt_dBm": float, "sigma2_dBm": float, "q": parse_floats,
    },
    "channel": {
        "beta0_dB": float, "d0": float, "p_exp": float, "kappa_G": float, "kappa_r": float,
        "ap_pos": parse_floats, "ris_pos": parse_floats, "user_center": parse_floats, "user_radius": float,
    },
    "quantizer": {"c": float},
    "training": {
        "batch_size": int, "max_epochs": int, "patience": int, "lr": float,
        "plateau_factor": float, "plateau_patience": int, "lr_floor": float, "tau": float,
        "J": int, "loss_kind": str, "lam": float, "seed": int, "beta1": float, "beta2": float,
        "adam_eps": float, "max_search_iters": int,
    },
    "data": {
        "train_size": int, "val_size": int, "test_size": int, "eta": float, "seed": int,
        "workers": int, "random_trials": int,
    },
    "sweep": {"axis": str, "values": parse_floats, "mode": str, "parallel": parse_bool, "workers": int},
}

SWEEP_AXES = ("pt_dbm", "n", "eta")
SWEEP_MODES = ("baselines", "train")


class Config:
    """Base configuration profile (desk scale)"""
    NAME = "desk"
    SYSTEM = {}
    QUANTIZER = {"c": 1.0}
    TRAINING = {}
    DATA = {
        "train_size": 5000, "val_size": 500, "test_size": 500, "eta": 0.0, "seed": 0,
        "workers": 1, "random_trials": 100,
    }
    SWEEP = {"axis": "pt_dbm", "values": (0.0, 2.0, 4.0, 6.0, 8.0, 10.0), "mode": "baselines",
             "parallel": False, "workers": 2}

    @classmethod
    def sections(cls):
        """Fresh per-section dictionaries of the profile values"""
        return {
            "system": dict(cls.SYSTEM),
            "channel": {},
            "quantizer": dict(cls.QUANTIZER),
            "training": dict(cls.TRAINING),
            "data": dict(cls.DATA),
            "sweep": dict(cls.SWEEP),
        }


class DeskConfig(Config):
    """Desk-scale runs on a single machine"""


class TestingConfig(Config):
    """Tiny instances for the test suite"""
    NAME = "testing"
    SYSTEM = {"M": 2, "N": 4, "K": 1, "sigma2_dBm": -90.0}
    TRAINING = {"batch_size": 16, "max_epochs": 5, "patience": 3, "plateau_patience": 2, "J": 2}
    DATA = dict(Config.DATA, train_size=64, val_size=16, test_size=16, random_trials=16)
    SWEEP = dict(Config.SWEEP, values=(0.0, 5.0))


class FullConfig(Config):
    """Large datasets and long training runs"""
    NAME = "full"
    SYSTEM = {"N": 50}
    TRAINING = {"batch_size": 1024, "max_epochs": 1500, "patience": 50, "plateau_patience": 20}
    DATA = dict(Config.DATA, train_size=200000, val_size=1000, test_size=1000)


# Configuration mapping dictionary
config_by_name = {
    "desk": DeskConfig,
    "testing": TestingConfig,
    "full": FullConfig,
    "default": DeskConfig,
}


def get_config(name=None):
    """Profile class by name, defaulting to the RISBEAM_ENV environment variable"""
    name = name or os.getenv("RISBEAM_ENV", "desk")
    try:
        return config_by_name[name]
    except KeyError:
        raise ValidationError(f"unknown profile {name!r}; choose from {', '.join(sorted(config_by_name))}")


@dataclass
class ResolvedConfig:
    """Fully resolved settings of one run"""
    profile: str
    system: SystemConfig
    training: TrainConfig
    data: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def to_dict(self):
        sweep = dict(self.sweep)
        sweep["values"] = list(sweep.get("values", ()))
        return {
            "profile": self.profile,
            "system": self.system.to_dict(),
            "training": self.training.to_dict(),
            "data": dict(self.data),
            "sweep": sweep,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            sweep = dict(data["sweep"])
            sweep["values"] = tuple(sweep.get("values", ()))
            return cls(
                profile=data["profile"],
                system=SystemConfig.from_dict(data["system"]),
                training=TrainConfig.from_dict(data["training"]),
                data=dict(data["data"]),
                sweep=sweep,
            )
        except KeyError as e:
            raise ValidationError(f"resolved config is missing {e}") from e

    def with_seed(self, seed):
        data = dict(self.data, seed=int(seed))
        training = self.training.with_overrides(seed=int(seed))
        return ResolvedConfig(self.profile, self.system, training, data, dict(self.sweep))


def parse_value(section, key, raw):
    try:
        parser = SCHEMA[section][key]
    except KeyError:
        raise ValidationError(f"unknown config key {section}.{key}")
    try:
        return parser(raw)
    except ValueError as e:
        raise ValidationError(f"bad value for {section}.{key}: {raw!r} ({e})") from e


def _locate(key):
    """Section of a bare or dotted key"""
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SCHEMA or name not in SCHEMA[section]:
            raise ValidationError(f"unknown config key {key}")
        return section, name
    owners = [s for s, keys in SCHEMA.items() if key in keys]
    if not owners:
        raise ValidationError(f"unknown config key {key}")
    if len(owners) > 1:
        raise ValidationError(f"key {key} is ambiguous; use one of {', '.join(f'{s}.{key}' for s in owners)}")
    return owners[0], key


def read_config_file(path):
    """INI file -> section -> key -> typed value; a missing file raises OSError"""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    with open(path, "r", encoding="utf-8") as handle:
        try:
            parser.read_file(handle)
        except configparser.Error as e:
            raise ValidationError(f"{path}: {e}") from e
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ValidationError(f"{path}: unknown section [{section}]")
        values[section] = {key: parse_value(section, key, raw) for key, raw in parser.items(section)}
    return values


def parse_overrides(items):
    """['key=value', ...] -> section -> key -> typed value"""
    values = {}
    for item in items or ():
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        section, name = _locate(key.strip())
        values.setdefault(section, {})[name] = parse_value(section, name, raw.strip())
    return values


def build_resolved(profile, sections):
    """Typed sections -> ResolvedConfig with validation"""
    system = SystemConfig(**sections["system"], **sections["channel"])
    training = TrainConfig(**sections["training"], c=sections["quantizer"].get("c", 1.0))
    data, sweep = sections["data"], sections["sweep"]
    if data["eta"] < 0:
        raise ValidationError("data.eta must be >= 0")
    if min(data["train_size"], data["val_size"]) < 1 or data["test_size"] < 0:
        raise ValidationError("data split sizes must be positive")
    if sweep["axis"] not in SWEEP_AXES:
        raise ValidationError(f"sweep.axis must be one of {', '.join(SWEEP_AXES)}")
    if sweep["mode"] not in SWEEP_MODES:
        raise ValidationError(f"sweep.mode must be one of {', '.join(SWEEP_MODES)}")
    return ResolvedConfig(profile=profile, system=system, training=training, data=data, sweep=sweep)


def resolve_config(profile=None, config_path=None, overrides=()):
    """Profile defaults, then the config file, then the overrides"""
    base = get_config(profile)
    sections = base.sections()
    layers = []
    if config_path:
        layers.append(read_config_file(config_path))
    layers.append(parse_overrides(overrides))
    for layer in layers:
        for section, values in layer.items():
            sections[section].update(values)
    return build_resolved(base.NAME, sections)
