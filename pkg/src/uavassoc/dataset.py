"""Feature extraction, labelling and dataset persistence.

Each sample describes one scenario from the UAV's point of view: omni
received powers (dB) and horizontal distances of the ``zeta`` closest
stations, a zeta-by-xi matrix of interferer distances per candidate, and
the UAV height. The label is the candidate whose steered-cone SINR
(fading-free) is largest, found by exhaustively aiming at each candidate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .environment import Scenario
from .errors import InvalidConfigurationError, ScenarioRejectedError
from .radio import (AntennaConfig, ChannelParams, LinkTable, linear_to_db,
                    directional_sinr_from_table)

_STD_FLOOR = 1e-6
_POWER_FLOOR = 1e-300


def distance_order(scenario: Scenario) -> np.ndarray:
    """Base station indices sorted by horizontal distance to the UAV,
    ties broken by (x, y) lexicographic order."""
    dx = scenario.bs_xy[:, 0] - scenario.uav_xy.x
    dy = scenario.bs_xy[:, 1] - scenario.uav_xy.y
    r = np.hypot(dx, dy)
    return np.lexsort((scenario.bs_xy[:, 1], scenario.bs_xy[:, 0], r))


def candidate_indices(scenario: Scenario, zeta: int) -> np.ndarray:
    """Indices of the zeta closest stations, ascending by distance."""
    if scenario.n_bs < zeta:
        raise ScenarioRejectedError(
            f"scenario holds {scenario.n_bs} base stations, {zeta} candidates required")
    return distance_order(scenario)[:zeta]


def candidate_set(scenario: Scenario, zeta: int):
    """The zeta closest stations as BaseStation objects."""
    return [scenario.bss[i] for i in candidate_indices(scenario, zeta)]


@dataclass(frozen=True)
class FeatureVector:
    """Model input for one scenario. Lengths are zeta, zeta, zeta*xi, 1."""

    powers_db: np.ndarray
    distances_m: np.ndarray
    interferer_distances_m: np.ndarray  # (zeta, xi), rows sorted ascending
    uav_height_m: float

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.powers_db, self.distances_m,
                               self.interferer_distances_m.ravel(),
                               [self.uav_height_m]])

    @staticmethod
    def length(zeta: int, xi: int) -> int:
        return 2 * zeta + zeta * xi + 1


@dataclass(frozen=True)
class LabeledSample:
    features: FeatureVector
    label: int


def interferer_row(scenario: Scenario, candidate, antenna: AntennaConfig,
                   xi: int, *, table: LinkTable | None = None,
                   params: ChannelParams | None = None) -> np.ndarray:
    """Distances to the xi nearest stations that would interfere if the UAV
    aimed at ``candidate``, padded with 2 * window radius ("maximally
    distant interferer") when fewer exist."""
    if table is None:
        if params is None:
            raise ValueError("either a LinkTable or ChannelParams is required")
        table = LinkTable.build(scenario, params, antenna.n_elements)
    idx = scenario.bs_index(candidate)
    mask = table.footprint_mask(idx, antenna.omega)
    mask[idx] = False
    inside = np.sort(table.r[mask])[:xi]
    row = np.full(xi, 2.0 * scenario.window_radius)
    row[:inside.size] = inside
    return row


def extract_features(scenario: Scenario, antenna: AntennaConfig,
                     params: ChannelParams, zeta: int, xi: int,
                     *, table: LinkTable | None = None) -> FeatureVector:
    if table is None:
        table = LinkTable.build(scenario, params, antenna.n_elements)
    cands = candidate_indices(scenario, zeta)
    powers = linear_to_db(np.maximum(table.p_omni[cands], _POWER_FLOOR))
    rows = np.empty((zeta, xi))
    for k, ci in enumerate(cands):
        rows[k] = interferer_row(scenario, int(ci), antenna, xi, table=table)
    return FeatureVector(powers_db=powers, distances_m=table.r[cands].copy(),
                         interferer_distances_m=rows,
                         uav_height_m=scenario.uav_height)


def label_sample(scenario: Scenario, antenna: AntennaConfig,
                 params: ChannelParams, zeta: int,
                 *, table: LinkTable | None = None) -> int:
    """Index (within the candidate set) of the candidate with the highest
    fading-free steered-cone SINR; ties go to the closer candidate."""
    if table is None:
        table = LinkTable.build(scenario, params, antenna.n_elements)
    cands = candidate_indices(scenario, zeta)
    gains = np.ones(table.n_bs)
    sinrs = np.array([directional_sinr_from_table(table, int(ci), antenna.omega,
                                                  params, gains)
                      for ci in cands])
    return int(np.argmax(sinrs))


@dataclass(frozen=True)
class NormalizerStats:
    means: np.ndarray
    stds: np.ndarray   # floored at 1e-6


def fit_normalizer(features: np.ndarray) -> NormalizerStats:
    x = np.asarray(features, dtype=float)
    means = x.mean(axis=0)
    stds = np.maximum(x.std(axis=0), _STD_FLOOR)
    return NormalizerStats(means=means, stds=stds)


def normalize(features, stats: NormalizerStats) -> np.ndarray:
    x = np.asarray(features, dtype=float)
    if x.shape[-1] != stats.means.shape[0]:
        raise InvalidConfigurationError(
            f"feature length {x.shape[-1]} does not match normalizer ({stats.means.shape[0]})")
    return (x - stats.means) / stats.stds


def denormalize(z, stats: NormalizerStats) -> np.ndarray:
    return np.asarray(z, dtype=float) * stats.stds + stats.means


@dataclass
class Dataset:
    """Labelled samples with homogeneous (zeta, xi) plus provenance."""

    features: np.ndarray       # (n, 2*zeta + zeta*xi + 1)
    labels: np.ndarray         # (n,) candidate indices
    scenario_seeds: np.ndarray  # (n,) uint64
    gammas: np.ndarray         # (n,) UAV heights, m
    zeta: int
    xi: int
    fingerprint: str
    master_seed: int

    def __post_init__(self):
        expected = FeatureVector.length(self.zeta, self.xi)
        if self.features.ndim != 2 or self.features.shape[1] != expected:
            raise InvalidConfigurationError(
                f"feature matrix width {self.features.shape} does not match "
                f"zeta={self.zeta}, xi={self.xi} (expected {expected})")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @cached_property
    def samples(self) -> list[LabeledSample]:
        z, x = self.zeta, self.xi
        out = []
        for row, label in zip(self.features, self.labels):
            fv = FeatureVector(powers_db=row[:z], distances_m=row[z:2 * z],
                               interferer_distances_m=row[2 * z:2 * z + z * x].reshape(z, x),
                               uav_height_m=float(row[-1]))
            out.append(LabeledSample(features=fv, label=int(label)))
        return out


def dataset_csv_columns(zeta: int, xi: int) -> list[str]:
    cols = ["scenario_seed", "gamma_m"]
    cols += [f"p_{i}" for i in range(zeta)]
    cols += [f"r_{i}" for i in range(zeta)]
    cols += [f"f_{i}_{j}" for i in range(zeta) for j in range(xi)]
    cols.append("label")
    return cols


def write_dataset_csv(dataset: Dataset, path) -> None:
    """CSV with one header comment line carrying provenance, then a column
    header and one row per sample. Floats use repr (exact round-trip)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# fingerprint={dataset.fingerprint} master_seed={dataset.master_seed}\n")
        writer = csv.writer(fh)
        writer.writerow(dataset_csv_columns(dataset.zeta, dataset.xi))
        z, x = dataset.zeta, dataset.xi
        for i in range(dataset.n):
            row = [int(dataset.scenario_seeds[i]), repr(float(dataset.gammas[i]))]
            feats = dataset.features[i]
            row += [repr(float(v)) for v in feats[:2 * z + z * x]]
            row.append(int(dataset.labels[i]))
            writer.writerow(row)


def read_dataset_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise InvalidConfigurationError(f"{path}: missing provenance header line")
        meta = dict(part.split("=", 1) for part in header[1:].split() if "=" in part)
        reader = csv.reader(fh)
        columns = next(reader)
        zeta = sum(1 for c in columns if c.startswith("p_"))
        xi_total = sum(1 for c in columns if c.startswith("f_"))
        if zeta == 0 or xi_total % zeta != 0:
            raise InvalidConfigurationError(f"{path}: malformed dataset columns")
        xi = xi_total // zeta
        seeds, gammas, feats, labels = [], [], [], []
        for row in reader:
            seeds.append(int(row[0]))
            gammas.append(float(row[1]))
            feats.append([float(v) for v in row[2:-1]])
            labels.append(int(row[-1]))
    gam = np.array(gammas)
    if feats:
        features = np.column_stack([np.array(feats), gam])
    else:
        features = np.empty((0, FeatureVector.length(zeta, xi)))
    return Dataset(features=features, labels=np.array(labels, dtype=np.int64),
                   scenario_seeds=np.array(seeds, dtype=np.uint64), gammas=gam,
                   zeta=zeta, xi=xi, fingerprint=meta.get("fingerprint", ""),
                   master_seed=int(meta.get("master_seed", 0)))
