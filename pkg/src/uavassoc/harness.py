"""Experiment orchestration: Monte Carlo coverage estimation, sweeps, the
dataset generation driver, seeding and CSV outputs.

Seeding: every random object is derived through the pure function
(master_seed, trial_index, purpose tag) -> seed, so trials are independent
of scheduling and can run across processes while staying bit-reproducible.
Trials evaluated for several policies share the scenario and the fading
draw, which pairs the policy comparisons.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .dataset import (Dataset, distance_order, extract_features, label_sample)
from .environment import Scenario, make_scenario
from .errors import (InvalidConfigurationError, MissingModelError,
                     ScenarioRejectedError)
from .hashing import derive_seed
from .neuralnet import MlpModel, train
from .policies import AssociationPolicy
from .radio import LinkTable, directional_sinr

_MAX_SCENARIO_RETRIES = 20
_Z95 = 1.959963984540054

SWEEP_AXES = ("height", "density", "beamwidth")


@dataclass(frozen=True)
class TrialResult:
    covered: bool
    chosen_rank: int
    sinr: float


@dataclass(frozen=True)
class CoverageResult:
    sweep_value: float
    policy: str
    coverage: float
    ci_half_width: float
    n_trials: int

    @property
    def ci_low(self) -> float:
        return max(0.0, self.coverage - self.ci_half_width)

    @property
    def ci_high(self) -> float:
        return min(1.0, self.coverage + self.ci_half_width)


def wilson_interval(successes: int, n: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval; better behaved than Wald at extreme rates."""
    if n == 0:
        return 0.0, 1.0
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom
    return center - half, center + half


def trial_scenario(config: ExperimentConfig, trial_index: int,
                   uav_height_m: float | None = None) -> Scenario:
    """Scenario for one trial; regenerates with derived sub-seeds until it
    holds at least zeta stations (bounded retries, then a hard error).

    The rejection rule is policy-independent so every policy sees the same
    scenario sequence.
    """
    height = config.uav_height_m if uav_height_m is None else uav_height_m
    for retry in range(_MAX_SCENARIO_RETRIES):
        tag = "scenario" if retry == 0 else f"scenario-r{retry}"
        seed = derive_seed(config.master_seed, trial_index, tag)
        scenario = make_scenario(seed, **config.scenario_kwargs(uav_height_m=height))
        if scenario.n_bs >= config.zeta:
            return scenario
    raise ScenarioRejectedError(
        f"trial {trial_index}: no scenario with >= {config.zeta} stations "
        f"after {_MAX_SCENARIO_RETRIES} attempts")


def _policy_objects(policies, model: MlpModel | None) -> list[AssociationPolicy]:
    out = []
    for p in policies:
        if isinstance(p, AssociationPolicy):
            out.append(p)
        elif p == "neural":
            out.append(AssociationPolicy(kind="neural", model=model))
        else:
            out.append(AssociationPolicy(kind=p))
    return out


def _check_model(config: ExperimentConfig, policy: AssociationPolicy) -> None:
    if policy.kind == "neural":
        m = policy.model
        if (m.zeta, m.xi) != (config.zeta, config.xi):
            raise InvalidConfigurationError(
                f"model (zeta={m.zeta}, xi={m.xi}) does not match config "
                f"(zeta={config.zeta}, xi={config.xi})")


def evaluate_trial(config: ExperimentConfig, trial_index: int,
                   policies: list[AssociationPolicy]) -> list[TrialResult]:
    """Run one trial and score every policy on the same world and fading."""
    scenario = trial_scenario(config, trial_index)
    params = config.channel()
    antenna = config.antenna()
    table = LinkTable.build(scenario, params, antenna.n_elements)
    rank_of = np.empty(scenario.n_bs, dtype=np.int64)
    rank_of[distance_order(scenario)] = np.arange(scenario.n_bs)
    fading_rng = np.random.default_rng(derive_seed(config.master_seed, trial_index, "fading"))
    gains = table.sample_fading_gains(fading_rng)
    results = []
    for policy in policies:
        idx = policy.choose_index(scenario, antenna, params, table=table)
        sinr = directional_sinr(scenario, idx, antenna, params,
                                fading_mode="sampled", table=table, fading_gains=gains)
        results.append(TrialResult(covered=bool(sinr > params.threshold),
                                   chosen_rank=int(rank_of[idx]), sinr=sinr))
    return results


def run_trial(config: ExperimentConfig, trial_index: int, policy,
              model: MlpModel | None = None) -> TrialResult:
    """Single-policy trial: derive the seed, build the world, associate,
    then test the sampled-fading SINR against the threshold."""
    pol = _policy_objects([policy], model)[0]
    _check_model(config, pol)
    return evaluate_trial(config, trial_index, [pol])[0]


def _trial_chunk(config: ExperimentConfig, policies: list[AssociationPolicy],
                 start: int, stop: int) -> list[list[TrialResult]]:
    return [evaluate_trial(config, i, policies) for i in range(start, stop)]


def run_trials(config: ExperimentConfig, policies, model: MlpModel | None = None,
               n_trials: int | None = None, n_jobs: int | None = None):
    """All trials for every policy. Returns {policy kind: (covered, ranks)}
    with arrays ordered by trial index, independent of worker count."""
    pols = _policy_objects(policies, model)
    for pol in pols:
        _check_model(config, pol)
    n = config.n_trials if n_trials is None else n_trials
    jobs = n_jobs if n_jobs is not None else config.n_jobs
    if jobs == 0:
        jobs = os.cpu_count() or 1
    jobs = max(1, min(jobs, n))

    if jobs == 1:
        rows = _trial_chunk(config, pols, 0, n)
    else:
        chunk = max(1, math.ceil(n / (jobs * 4)))
        bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
        rows = []
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_trial_chunk, config, pols, s, e) for s, e in bounds]
            for fut in futures:  # submission order == trial order
                rows.extend(fut.result())

    out = {}
    for k, pol in enumerate(pols):
        covered = np.array([r[k].covered for r in rows], dtype=bool)
        ranks = np.array([r[k].chosen_rank for r in rows], dtype=np.int64)
        out[pol.kind] = (covered, ranks)
    return out


def coverage_probability(config: ExperimentConfig, policy,
                         model: MlpModel | None = None,
                         n_jobs: int | None = None,
                         sweep_value: float = float("nan")) -> CoverageResult:
    """Monte Carlo coverage estimate with a Wilson 95% interval."""
    pol = _policy_objects([policy], model)[0]
    covered, _ = run_trials(config, [pol], n_jobs=n_jobs)[pol.kind]
    k = int(covered.sum())
    lo, hi = wilson_interval(k, covered.size)
    return CoverageResult(sweep_value=sweep_value, policy=pol.kind,
                          coverage=k / covered.size,
                          ci_half_width=0.5 * (hi - lo), n_trials=covered.size)


def model_key(density_per_km2: float, beamwidth_deg: float) -> str:
    """Naming convention tying a trained model to its (density, beamwidth)."""
    return f"lam{density_per_km2:g}_om{beamwidth_deg:g}"


def model_filename(density_per_km2: float, beamwidth_deg: float) -> str:
    return f"model_{model_key(density_per_km2, beamwidth_deg)}.json"


def _sweep_point_config(config: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    if axis == "height":
        return config.replace(uav_height_m=float(value))
    if axis == "density":
        return config.replace(bs_density_per_km2=float(value))
    return config.replace(beamwidth_deg=float(value))


def sweep_grid(config: ExperimentConfig, axis: str) -> tuple[float, ...]:
    if axis == "height":
        return config.height_grid_m
    if axis == "density":
        return config.density_grid_per_km2
    if axis == "beamwidth":
        return config.beamwidth_grid_deg
    raise InvalidConfigurationError(f"unknown sweep axis {axis!r}, expected {SWEEP_AXES}")


def sweep(config: ExperimentConfig, axis: str, policies=None,
          models: dict[str, MlpModel] | None = None,
          n_jobs: int | None = None) -> list[CoverageResult]:
    """Coverage of every policy at every point of one sweep axis.

    The neural policy needs one model per (density, beamwidth) point,
    provided in ``models`` under ``model_key(...)``.
    """
    grid = sweep_grid(config, axis)
    policies = list(config.policies if policies is None else policies)
    results = []
    for value in grid:
        pt = _sweep_point_config(config, axis, value)
        model = None
        if "neural" in policies:
            key = model_key(pt.bs_density_per_km2, pt.beamwidth_deg)
            if models is None or key not in models:
                raise MissingModelError(
                    f"no model for sweep point {axis}={value:g} (expected key {key!r})")
            model = models[key]
        per_policy = run_trials(pt, policies, model=model, n_jobs=n_jobs)
        for kind in policies:
            covered, _ = per_policy[kind]
            k = int(covered.sum())
            lo, hi = wilson_interval(k, covered.size)
            results.append(CoverageResult(sweep_value=float(value), policy=kind,
                                          coverage=k / covered.size,
                                          ci_half_width=0.5 * (hi - lo),
                                          n_trials=covered.size))
    return results


def association_histogram(config: ExperimentConfig, model: MlpModel,
                          n_jobs: int | None = None) -> np.ndarray:
    """Empirical probability that the learned policy picks the n-th closest
    station, over n_trials at the config's UAV height."""
    _, ranks = run_trials(config, ["neural"], model=model, n_jobs=n_jobs)["neural"]
    counts = np.bincount(ranks, minlength=config.zeta)
    return counts / ranks.size


# ---- dataset generation driver -------------------------------------------

def _sample_chunk(config: ExperimentConfig, tag: str, start: int, stop: int):
    params = config.channel()
    antenna = config.antenna()
    width = 2 * config.zeta + config.zeta * config.xi + 1
    feats = np.empty((stop - start, width))
    labels = np.empty(stop - start, dtype=np.int64)
    seeds = np.empty(stop - start, dtype=np.uint64)
    gammas = np.empty(stop - start)
    for k, i in enumerate(range(start, stop)):
        scenario = None
        for retry in range(_MAX_SCENARIO_RETRIES):
            sub = f"dataset-{tag}" if retry == 0 else f"dataset-{tag}-r{retry}"
            seed = derive_seed(config.master_seed, i, sub)
            cand = make_scenario(seed, **config.scenario_kwargs(uav_height_m=None))
            if cand.n_bs >= config.zeta:
                scenario = cand
                break
        if scenario is None:
            raise ScenarioRejectedError(
                f"sample {i}: no scenario with >= {config.zeta} stations")
        table = LinkTable.build(scenario, params, antenna.n_elements)
        fv = extract_features(scenario, antenna, params, config.zeta, config.xi,
                              table=table)
        feats[k] = fv.as_array()
        labels[k] = label_sample(scenario, antenna, params, config.zeta, table=table)
        seeds[k] = scenario.seed
        gammas[k] = scenario.uav_height
    return feats, labels, seeds, gammas


def generate_samples(config: ExperimentConfig, n_samples: int, tag: str = "train",
                     n_jobs: int | None = None) -> Dataset:
    """Labelled samples from independently seeded scenarios with random UAV
    heights. The trial-index seeding makes the result independent of the
    worker count and assembly order."""
    jobs = n_jobs if n_jobs is not None else config.n_jobs
    if jobs == 0:
        jobs = os.cpu_count() or 1
    jobs = max(1, min(jobs, n_samples)) if n_samples else 1

    if jobs == 1 or n_samples == 0:
        parts = [_sample_chunk(config, tag, 0, n_samples)]
    else:
        chunk = max(1, math.ceil(n_samples / (jobs * 4)))
        bounds = [(s, min(s + chunk, n_samples)) for s in range(0, n_samples, chunk)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_sample_chunk, config, tag, s, e) for s, e in bounds]
            parts = [f.result() for f in futures]

    feats = np.concatenate([p[0] for p in parts]) if parts else np.empty((0, 0))
    labels = np.concatenate([p[1] for p in parts])
    seeds = np.concatenate([p[2] for p in parts])
    gammas = np.concatenate([p[3] for p in parts])
    return Dataset(features=feats, labels=labels, scenario_seeds=seeds,
                   gammas=gammas, zeta=config.zeta, xi=config.xi,
                   fingerprint=config.fingerprint(), master_seed=config.master_seed)


def train_model(config: ExperimentConfig, dataset: Dataset):
    """Train the classifier with the config's hyperparameters."""
    model, metrics = train(dataset, config.train_config())
    return model, metrics


# ---- CSV output ------------------------------------------------------------

def _provenance_line(config: ExperimentConfig) -> str:
    return f"# fingerprint={config.fingerprint()} master_seed={config.master_seed}\n"


def write_sweep_csv(path, results: list[CoverageResult], config: ExperimentConfig) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(_provenance_line(config))
        fh.write("axis_value,policy,coverage,ci_low,ci_high,n_trials\n")
        for r in results:
            fh.write(f"{r.sweep_value!r},{r.policy},{r.coverage!r},"
                     f"{r.ci_low!r},{r.ci_high!r},{r.n_trials}\n")


def write_histogram_csv(path, rows: list[tuple[float, int, float]],
                        config: ExperimentConfig) -> None:
    """Rows are (height_m, rank, probability)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(_provenance_line(config))
        fh.write("height_m,rank,probability\n")
        for height, rank, prob in rows:
            fh.write(f"{height!r},{rank},{prob!r}\n")


def write_metrics_csv(path, metrics, config: ExperimentConfig) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(_provenance_line(config))
        fh.write("epoch,train_loss,val_accuracy\n")
        for m in metrics:
            fh.write(f"{m.epoch},{m.train_loss!r},{m.val_accuracy!r}\n")
