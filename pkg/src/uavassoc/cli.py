"""Command-line entry points wiring the pipeline end to end.

Subcommands: generate-dataset, train, evaluate, sweep, histogram. All read
one config file (TOML or JSON) whose keys mirror ExperimentConfig, with
--override key=value for point changes. Every CSV output starts with a
comment line carrying the config fingerprint and master seed.

Exit codes: 0 success, 2 config error, 3 missing artifact, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .config import ExperimentConfig, apply_overrides, load_config
from .dataset import read_dataset_csv, write_dataset_csv
from .errors import (InvalidConfigurationError, MissingModelError,
                     ModelFormatError, UnsupportedVersionError)
from .neuralnet import accuracy, load_model, save_model

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MISSING = 3
EXIT_RUNTIME = 4


def _load(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    return apply_overrides(config, args.override or [])


def _cmd_generate(args) -> int:
    config = _load(args)
    n = args.n_samples if args.n_samples is not None else config.n_train_samples
    dataset = harness.generate_samples(config, n, tag=args.tag, n_jobs=args.jobs)
    write_dataset_csv(dataset, args.out)
    print(f"wrote {dataset.n} samples to {args.out} "
          f"(fingerprint {dataset.fingerprint}, tag {args.tag!r})")
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _load(args)
    dataset = read_dataset_csv(args.data)
    model, metrics = harness.train_model(config, dataset)
    save_model(model, args.out)
    if args.metrics_out:
        harness.write_metrics_csv(args.metrics_out, metrics, config)
    final = metrics[-1]
    print(f"trained {len(metrics)} epochs on {dataset.n} samples; "
          f"final train loss {final.train_loss:.4f}, "
          f"validation accuracy {final.val_accuracy:.3f}; model -> {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    config = _load(args)
    model = None
    if args.policy == "neural":
        if not args.model:
            raise MissingModelError("--model is required for the neural policy")
        model = load_model(args.model)
    result = harness.coverage_probability(config, args.policy, model=model,
                                          n_jobs=args.jobs,
                                          sweep_value=config.uav_height_m)
    if args.out:
        harness.write_sweep_csv(args.out, [result], config)
    print(f"policy={result.policy} height={config.uav_height_m:g}m "
          f"coverage={result.coverage:.4f} "
          f"ci=[{result.ci_low:.4f},{result.ci_high:.4f}] n={result.n_trials}")
    if args.test_data:
        if model is None:
            raise InvalidConfigurationError("--test-data requires the neural policy")
        test = read_dataset_csv(args.test_data)
        acc = accuracy(model, test.features, test.labels)
        print(f"classifier accuracy on {test.n} held-out samples: {acc:.3f}")
    return EXIT_OK


def _load_sweep_models(config: ExperimentConfig, axis: str, policies, models_dir):
    if "neural" not in policies:
        return None
    if not models_dir:
        raise MissingModelError("--models-dir is required when the neural policy sweeps")
    models = {}
    root = Path(models_dir)
    for value in harness.sweep_grid(config, axis):
        if axis == "density":
            lam, om = float(value), config.beamwidth_deg
        elif axis == "beamwidth":
            lam, om = config.bs_density_per_km2, float(value)
        else:
            lam, om = config.bs_density_per_km2, config.beamwidth_deg
        key = harness.model_key(lam, om)
        path = root / harness.model_filename(lam, om)
        if not path.exists():
            raise MissingModelError(
                f"no model for sweep point {axis}={value:g}: expected file {path}")
        models[key] = load_model(path)
    return models


def _cmd_sweep(args) -> int:
    config = _load(args)
    policies = tuple(p for p in args.policies.split(",") if p)
    models = _load_sweep_models(config, args.axis, policies, args.models_dir)
    results = harness.sweep(config, args.axis, policies=policies, models=models,
                            n_jobs=args.jobs)
    harness.write_sweep_csv(args.out, results, config)
    print(f"wrote {len(results)} rows ({args.axis} sweep x {len(policies)} policies) "
          f"to {args.out}")
    if args.plot:
        _write_sweep_svg(args.plot, results, args.axis)
        print(f"plot -> {args.plot}")
    return EXIT_OK


def _cmd_histogram(args) -> int:
    config = _load(args)
    model = load_model(args.model)
    heights = [float(h) for h in args.heights.split(",") if h]
    rows = []
    for height in heights:
        pt = config.replace(uav_height_m=height)
        probs = harness.association_histogram(pt, model, n_jobs=args.jobs)
        rows += [(height, rank, float(p)) for rank, p in enumerate(probs)]
    harness.write_histogram_csv(args.out, rows, config)
    print(f"wrote association histogram for heights {heights} to {args.out}")
    return EXIT_OK


def _write_sweep_svg(path, results, axis: str) -> None:
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    labels = {"height": "UAV height (m)", "density": "BS density (/km^2)",
              "beamwidth": "beamwidth (deg)"}
    fig, ax = plt.subplots(figsize=(6, 4))
    by_policy: dict[str, list] = {}
    for r in results:
        by_policy.setdefault(r.policy, []).append(r)
    for policy, rows in by_policy.items():
        rows.sort(key=lambda r: r.sweep_value)
        xs = [r.sweep_value for r in rows]
        ys = [r.coverage for r in rows]
        err = [r.ci_half_width for r in rows]
        ax.errorbar(xs, ys, yerr=err, marker="o", capsize=2, label=policy)
    ax.set_xlabel(labels.get(axis, axis))
    ax.set_ylabel("coverage probability")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavassoc",
        description="UAV base-station association simulator and benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML or JSON config file")
        p.add_argument("--override", action="append", metavar="KEY=VALUE",
                       help="override a config field (repeatable)")
        p.add_argument("--jobs", type=int, default=None,
                       help="worker processes (default: config n_jobs)")

    p = sub.add_parser("generate-dataset", help="synthesize a labelled dataset CSV")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--n-samples", type=int, default=None)
    p.add_argument("--tag", default="train",
                   help="seed namespace so train/test sets never overlap")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("train", help="train the association classifier")
    common(p)
    p.add_argument("--data", required=True, help="training dataset CSV")
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--metrics-out", default=None, help="per-epoch metrics CSV")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="Monte Carlo coverage for one policy")
    common(p)
    p.add_argument("--policy", required=True, choices=("closest", "strongest", "neural"))
    p.add_argument("--model", default=None, help="model JSON (neural policy only)")
    p.add_argument("--out", default=None, help="coverage CSV output")
    p.add_argument("--test-data", default=None,
                   help="also report classifier accuracy on this dataset CSV")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="coverage vs height, density or beamwidth")
    common(p)
    p.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    p.add_argument("--policies", default="closest,strongest,neural")
    p.add_argument("--models-dir", default=None,
                   help="directory of model_lam<d>_om<w>.json files")
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None, help="optional SVG chart path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("histogram", help="rank of the station the model picks")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--heights", default="60,100,140", help="comma-separated heights, m")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_histogram)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfigurationError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, MissingModelError) as exc:
        print(f"missing artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ModelFormatError, UnsupportedVersionError) as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
