"""Mixture of small MLP experts with regional, time-decayed weighting."""

from dwmoe.ensemble import Ensemble, GrowthConfig, combine, freeze_static, grow_ensemble, observe
from dwmoe.expert import MlpExpert, TrainConfig, forward, init_random, train_mcmc
from dwmoe.metrics import direction_accuracy, nse_error
from dwmoe.partition import Partition, region_of

__all__ = [
    "Ensemble", "GrowthConfig", "MlpExpert", "Partition", "TrainConfig",
    "combine", "direction_accuracy", "forward", "freeze_static", "grow_ensemble",
    "init_random", "nse_error", "observe", "region_of", "train_mcmc",
]
__version__ = "0.1.0"
