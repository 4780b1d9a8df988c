"""Urban cellular simulator and learned base-station association for
directional-antenna UAV links.

The pipeline: synthesize Poisson-deployed stations under a random building
field, extract per-candidate link features, train a softmax classifier to
pick the station with the best steered-antenna SINR, and benchmark it
against closest-station and strongest-omni-SINR heuristics by Monte Carlo
coverage probability.
"""

from .config import ExperimentConfig, load_config
from .dataset import (Dataset, FeatureVector, LabeledSample, candidate_set,
                      extract_features, label_sample)
from .environment import (BaseStation, BuildingField, Scenario,
                          building_field_from_params, generate_ppp, is_los,
                          make_scenario)
from .geometry import GroundPoint, RingSector, VerticalGeometry, in_footprint, ring_sector
from .harness import (CoverageResult, association_histogram, coverage_probability,
                      generate_samples, run_trial, sweep)
from .neuralnet import MlpModel, TrainConfig, load_model, save_model, train
from .policies import AssociationPolicy, choose_closest, choose_neural, choose_strongest
from .radio import (AntennaConfig, ChannelParams, bs_vertical_gain,
                    directional_sinr, omni_sinr, uav_antenna_gain)

__version__ = "0.1.0"

__all__ = [
    "AntennaConfig", "AssociationPolicy", "BaseStation", "BuildingField",
    "ChannelParams", "CoverageResult", "Dataset", "ExperimentConfig",
    "FeatureVector", "GroundPoint", "LabeledSample", "MlpModel", "RingSector",
    "Scenario", "TrainConfig", "VerticalGeometry", "association_histogram",
    "bs_vertical_gain", "building_field_from_params", "candidate_set",
    "choose_closest", "choose_neural", "choose_strongest",
    "coverage_probability", "directional_sinr", "extract_features",
    "generate_ppp", "generate_samples", "in_footprint", "is_los",
    "label_sample", "load_config", "load_model", "make_scenario", "omni_sinr",
    "ring_sector", "run_trial", "save_model", "sweep", "train",
    "uav_antenna_gain", "__version__",
]
