"""
NetworkParams model - Trainable tensors of the five-layer phase/precoder network
"""
import copy
from dataclasses import dataclass, field

import numpy as np

from ..errors import FormatError, ValidationError
from ..util.io import record_to_tensor, tensor_to_record
from .quantizer_params import QuantizerParams

# output widths as multiples of H = N + 2KM
LAYER_MULTIPLES = (32, 16, 8, 4, 1)
BN_EPSILON = 1e-5
BN_MOMENTUM = 0.99


@dataclass
class DenseLayer:
    W: np.ndarray  # (fan_in, fan_out)
    b: np.ndarray  # (fan_out,)


@dataclass
class BatchNormState:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = BN_MOMENTUM
    eps: float = BN_EPSILON

    @classmethod
    def fresh(cls, width):
        return cls(
            gamma=np.ones(width),
            beta=np.zeros(width),
            running_mean=np.zeros(width),
            running_var=np.ones(width),
        )


@dataclass
class NetworkParams:
    """Dense layers, batch-norm states and the quantizer boundaries rho

    rho is owned here for optimization; quantizer(c) returns a QuantizerParams
    that shares the same array, so in-place updates are seen by both.
    """
    N: int
    M: int
    K: int
    b: int
    dense: list
    bn: list
    rho: np.ndarray
    input_mean: np.ndarray = None
    input_std: np.ndarray = None
    version: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.dense) != len(LAYER_MULTIPLES) or len(self.bn) != len(LAYER_MULTIPLES) - 1:
            raise ValidationError("network needs five dense layers and four batch-norm layers")
        if self.input_mean is None:
            self.input_mean = np.zeros(self.input_width)
        if self.input_std is None:
            self.input_std = np.ones(self.input_width)

    @property
    def H(self):
        return self.N + 2 * self.K * self.M

    @property
    def input_width(self):
        return 2 * self.N * self.M + 2 * self.N * self.K

    @property
    def precoder_width(self):
        return 2 * self.K * self.M

    def widths(self):
        """Layer widths from input to output"""
        return [self.input_width] + [m * self.H for m in LAYER_MULTIPLES]

    def quantizer(self, c):
        return QuantizerParams(b=self.b, c=c, rho=self.rho)

    def trainable(self):
        """Name -> array for every trainable tensor, in a fixed order"""
        tensors = {}
        for i, layer in enumerate(self.dense):
            tensors[f"dense{i}.W"] = layer.W
            tensors[f"dense{i}.b"] = layer.b
        for i, state in enumerate(self.bn):
            tensors[f"bn{i}.gamma"] = state.gamma
            tensors[f"bn{i}.beta"] = state.beta
        tensors["rho"] = self.rho
        return tensors

    def running_stats(self):
        stats = {}
        for i, state in enumerate(self.bn):
            stats[f"bn{i}.running_mean"] = state.running_mean
            stats[f"bn{i}.running_var"] = state.running_var
        return stats

    def dense_parameter_count(self):
        return int(sum(layer.W.size + layer.b.size for layer in self.dense))

    def clone(self):
        return copy.deepcopy(self)

    def to_dict(self):
        """Self-describing record of every tensor, running statistics and standardization"""
        tensors = [tensor_to_record(name, arr) for name, arr in self.trainable().items()]
        tensors += [tensor_to_record(name, arr) for name, arr in self.running_stats().items()]
        tensors.append(tensor_to_record("input_mean", self.input_mean))
        tensors.append(tensor_to_record("input_std", self.input_std))
        return {
            "dims": {"N": self.N, "M": self.M, "K": self.K, "b": self.b},
            "bn": {"momentum": self.bn[0].momentum, "eps": self.bn[0].eps},
            "tensors": tensors,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            dims = data["dims"]
            by_name = {rec["name"]: record_to_tensor(rec) for rec in data["tensors"]}
            bn_meta = data.get("bn", {})
            n_layers = len(LAYER_MULTIPLES)
            dense = [DenseLayer(W=by_name[f"dense{i}.W"], b=by_name[f"dense{i}.b"]) for i in range(n_layers)]
            bn = [
                BatchNormState(
                    gamma=by_name[f"bn{i}.gamma"],
                    beta=by_name[f"bn{i}.beta"],
                    running_mean=by_name[f"bn{i}.running_mean"],
                    running_var=by_name[f"bn{i}.running_var"],
                    momentum=float(bn_meta.get("momentum", BN_MOMENTUM)),
                    eps=float(bn_meta.get("eps", BN_EPSILON)),
                )
                for i in range(n_layers - 1)
            ]
            params = cls(
                N=int(dims["N"]), M=int(dims["M"]), K=int(dims["K"]), b=int(dims["b"]),
                dense=dense, bn=bn, rho=by_name["rho"].reshape(-1),
                input_mean=by_name.get("input_mean"), input_std=by_name.get("input_std"),
                metadata=dict(data.get("metadata", {})),
            )
        except KeyError as e:
            raise FormatError(f"checkpoint is missing tensor or field {e}") from e
        widths = params.widths()
        for i, layer in enumerate(params.dense):
            if layer.W.shape != (widths[i], widths[i + 1]):
                raise FormatError(f"dense{i}.W has shape {layer.W.shape}, expected {(widths[i], widths[i + 1])}")
        return params


@dataclass
class ForwardTrace:
    """Cached intermediates of one forward pass, needed by backward"""
    mode: str
    version: int
    batch_size: int
    inputs: list = field(default_factory=list)  # input to each dense layer
    x_hat: list = field(default_factory=list)  # normalized pre-activations
    inv_std: list = field(default_factory=list)
    bn_out: list = field(default_factory=list)  # ReLU inputs
    phi_cont: np.ndarray = None
    w_reals: np.ndarray = None
    head: dict = None  # filled by the quantization/normalization head


@dataclass
class Gradients:
    """Name -> gradient array, same names as NetworkParams.trainable()"""
    values: dict

    def __getitem__(self, name):
        return self.values[name]
