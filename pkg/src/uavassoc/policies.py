"""Association policies: closest station, strongest omni SINR, learned.

Each policy maps a scenario to the base station the UAV should steer its
directional antenna at. All three are deterministic; argmax ties break
toward the lower index / closer candidate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import candidate_indices, distance_order, extract_features, normalize
from .environment import BaseStation, Scenario
from .errors import InvalidConfigurationError, ScenarioRejectedError
from .neuralnet import MlpModel, forward
from .radio import AntennaConfig, ChannelParams, LinkTable

POLICY_KINDS = ("closest", "strongest", "neural")


def choose_closest_index(scenario: Scenario) -> int:
    """Smallest horizontal distance, ties by (x, y) lexicographic order."""
    if scenario.n_bs == 0:
        raise ScenarioRejectedError("cannot associate in an empty network")
    return int(distance_order(scenario)[0])


def choose_closest(scenario: Scenario) -> BaseStation:
    return scenario.bss[choose_closest_index(scenario)]


def choose_strongest_index(scenario: Scenario, params: ChannelParams,
                           antenna: AntennaConfig,
                           *, table: LinkTable | None = None) -> int:
    """Argmax of the fading-free omni-antenna SINR over every in-window
    station; ties go to the lower index."""
    if scenario.n_bs == 0:
        raise ScenarioRejectedError("cannot associate in an empty network")
    if table is None:
        table = LinkTable.build(scenario, params, antenna.n_elements)
    total = float(np.sum(table.p_omni))
    sinrs = table.p_omni / (total - table.p_omni + params.noise_w)
    return int(np.argmax(sinrs))


def choose_strongest(scenario: Scenario, params: ChannelParams,
                     antenna: AntennaConfig) -> BaseStation:
    return scenario.bss[choose_strongest_index(scenario, params, antenna)]


def choose_neural_index(scenario: Scenario, model: MlpModel, antenna: AntennaConfig,
                        params: ChannelParams,
                        *, table: LinkTable | None = None) -> int:
    """Candidate with the largest predicted probability, mapped back to its
    scenario index."""
    cands = candidate_indices(scenario, model.zeta)
    feats = extract_features(scenario, antenna, params, model.zeta, model.xi,
                             table=table)
    probs = forward(model, normalize(feats.as_array(), model.normalizer))
    return int(cands[int(np.argmax(probs))])


def choose_neural(scenario: Scenario, model: MlpModel, antenna: AntennaConfig,
                  params: ChannelParams) -> BaseStation:
    return scenario.bss[choose_neural_index(scenario, model, antenna, params)]


@dataclass(frozen=True)
class AssociationPolicy:
    """A named policy; the neural kind carries its trained model."""

    kind: str
    model: MlpModel | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidConfigurationError(
                f"unknown policy {self.kind!r}, expected one of {POLICY_KINDS}")
        if self.kind == "neural" and self.model is None:
            raise InvalidConfigurationError("neural policy requires a model")

    def choose_index(self, scenario: Scenario, antenna: AntennaConfig,
                     params: ChannelParams,
                     *, table: LinkTable | None = None) -> int:
        if self.kind == "closest":
            return choose_closest_index(scenario)
        if self.kind == "strongest":
            return choose_strongest_index(scenario, params, antenna, table=table)
        return choose_neural_index(scenario, self.model, antenna, params, table=table)
