# Service modules
from .channel_service import ChannelService
from .link_service import LinkService
from .quantizer_service import QuantizerService
from .network_service import NetworkService
from .loss_service import LossService
from .trainer_service import TrainerService
from .search_service import SearchService
from .baseline_service import BaselineService
from .experiment_service import ExperimentService
