# Import model classes
from .system_config import SystemConfig, dbm_to_watts
from .channel_sample import ChannelSample, ChannelDataset
from .quantizer_params import QuantizerParams, uniform_boundaries
from .network_params import NetworkParams, ForwardTrace, Gradients
from .solution import ReflectionState, Precoder, RateReport, BeamformingSolution, OracleResult
from .train_config import TrainConfig, History, SearchState
from .experiment_spec import ExperimentSpec
