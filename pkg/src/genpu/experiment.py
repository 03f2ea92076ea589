"""Experiment orchestration: dataset prep, training, artifact emission.

One run produces, inside its output directory:
  metrics.csv          one row per logged training step
  samples/*.csv        generated point clouds at each snapshot
  checkpoint.json      final training state
  summary.json         final accuracies of genpu_pn / upu / nnpu / oracle_pn
  baseline_curves.csv  iteration,train_risk,test_error,estimator rows
  figures/*.png        point-cloud evolution and curve plots (optional)
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import core, datagen, plots
from .checkpoint import save_checkpoint
from .config import ConfigError, ExperimentConfig

__all__ = ["run_experiment", "build_dataset", "build_test_set", "resolve_output_dir"]

OUTPUT_ROOT_ENV = "GENPU_OUTPUT_ROOT"


def build_dataset(ds_cfg) -> datagen.LabeledDataset:
    """The labeled training pool for one dataset section."""
    if ds_cfg.kind == "two_moons":
        return datagen.make_two_moons(ds_cfg.n_per_class, ds_cfg.noise_std, ds_cfg.seed)
    if ds_cfg.kind == "concentric_circles":
        return datagen.make_concentric_circles(ds_cfg.n_per_class, ds_cfg.noise_std, tuple(ds_cfg.radii), ds_cfg.seed)
    if ds_cfg.kind == "gaussian_mixture":
        return datagen.make_gaussian_mixture(
            ds_cfg.centers_p, ds_cfg.centers_n, ds_cfg.noise_std, ds_cfg.n_per_class, ds_cfg.seed
        )
    if not ds_cfg.images or not ds_cfg.labels:
        raise ConfigError("dataset.images and dataset.labels are required for kind 'mnist'")
    digits = datagen.load_idx(ds_cfg.images, ds_cfg.labels)
    return datagen.select_digit_pair(digits, ds_cfg.pos_digit, ds_cfg.neg_digit, ds_cfg.n_per_class)


def build_test_set(ds_cfg, test_cfg) -> datagen.LabeledDataset:
    """A fresh labeled sample from the same distribution, for final scoring."""
    if ds_cfg.kind == "two_moons":
        return datagen.make_two_moons(test_cfg.n_per_class, ds_cfg.noise_std, test_cfg.seed)
    if ds_cfg.kind == "concentric_circles":
        return datagen.make_concentric_circles(test_cfg.n_per_class, ds_cfg.noise_std, tuple(ds_cfg.radii), test_cfg.seed)
    if ds_cfg.kind == "gaussian_mixture":
        return datagen.make_gaussian_mixture(
            ds_cfg.centers_p, ds_cfg.centers_n, ds_cfg.noise_std, test_cfg.n_per_class, test_cfg.seed
        )
    if not ds_cfg.test_images or not ds_cfg.test_labels:
        raise ConfigError("dataset.test_images and dataset.test_labels are required for kind 'mnist'")
    digits = datagen.load_idx(ds_cfg.test_images, ds_cfg.test_labels)
    return datagen.select_digit_pair(digits, ds_cfg.pos_digit, ds_cfg.neg_digit, test_cfg.n_per_class)


def resolve_output_dir(config: ExperimentConfig, override: str | None = None) -> Path:
    raw = override or config.output_dir or f"runs/{config.name}"
    path = Path(raw)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_metrics_csv(path: Path, rows) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(",".join(core.StepMetrics.FIELDS) + "\n")
        for m in rows:
            f.write(",".join(_fmt(v) for v in m.row()) + "\n")


def _write_samples_csv(path: Path, points: np.ndarray) -> None:
    d = points.shape[1]
    with open(path, "w", encoding="ascii") as f:
        f.write(",".join(f"x{i}" for i in range(d)) + "\n")
        for row in points:
            f.write(",".join(_fmt(float(v)) for v in row) + "\n")


def _write_curves_csv(path: Path, curves: dict) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write("iteration,train_risk,test_error,estimator\n")
        for name, pts in curves.items():
            for p in pts:
                f.write(f"{p.iteration},{_fmt(p.train_risk)},{_fmt(p.test_error)},{name}\n")


def run_experiment(config: ExperimentConfig, out_dir: str | None = None) -> dict:
    """Run one full experiment; returns the summary dict it also writes to disk."""
    t0 = time.monotonic()
    out = resolve_output_dir(config, out_dir)
    (out / "samples").mkdir(parents=True, exist_ok=True)
    if config.figures:
        (out / "figures").mkdir(exist_ok=True)

    pool = build_dataset(config.dataset)
    data = datagen.pu_split(
        pool, config.dataset.n_labeled, config.dataset.seed, config.dataset.n_labeled_negatives
    )

    genpu_kwargs = dict(config.genpu)
    genpu_kwargs.setdefault("pi_p", data.true_pi_p)
    genpu_kwargs.setdefault("data_dim", data.dim)
    try:
        cfg = core.GenPuConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in genpu_kwargs.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid genpu section: {exc}") from None

    state = core.init_state(cfg)
    logged: list[core.StepMetrics] = []
    two_d = data.dim == 2

    def snapshot(iteration: int) -> None:
        gp = core.generate(state, "positive", config.snapshot_samples, seed=iteration).data
        gn = core.generate(state, "negative", config.snapshot_samples, seed=iteration + 1).data
        _write_samples_csv(out / "samples" / f"positive_iter{iteration:06d}.csv", gp)
        _write_samples_csv(out / "samples" / f"negative_iter{iteration:06d}.csv", gn)
        if config.figures and two_d:
            plots.save_point_cloud(
                out / "figures" / f"cloud_iter{iteration:06d}.png",
                gp,
                gn,
                pool.positives(),
                pool.negatives(),
                title=f"{config.name} @ iteration {iteration}",
            )

    def on_step(metrics: core.StepMetrics) -> None:
        if config.log_interval and metrics.iteration % config.log_interval == 0:
            logged.append(metrics)
        if config.snapshot_interval and metrics.iteration % config.snapshot_interval == 0:
            snapshot(metrics.iteration)

    core.train(state, cfg, data, callback=on_step)
    snapshot(state.iteration)
    _write_metrics_csv(out / "metrics.csv", logged)
    save_checkpoint(state, cfg, out / "checkpoint.json")

    test_set = build_test_set(config.dataset, config.test)
    accuracies: dict[str, float] = {}
    curves: dict[str, list[bl.CurvePoint]] = {}

    if config.downstream.enabled:
        dw = config.downstream
        clf = bl.train_pn_on_generated(
            state,
            dw.n_per_class,
            hidden=dw.hidden,
            activation=dw.activation,
            epochs=dw.epochs,
            batch=dw.batch,
            lr=dw.lr,
            seed=dw.seed,
        )
        accuracies["genpu_pn"] = bl.evaluate(clf, test_set)

    bc = config.baselines
    for kind, enabled in (("upu", bc.upu), ("nnpu", bc.nnpu)):
        if not enabled:
            continue
        curve: list[bl.CurvePoint] = []
        clf = bl.train_pu_baseline(
            kind,
            data,
            hidden=bc.hidden,
            activation=bc.activation,
            epochs=bc.epochs,
            batch_p=bc.batch_p,
            batch_u=bc.batch_u,
            lr=bc.lr,
            seed=bc.seed,
            eval_data=test_set,
            curve=curve,
        )
        accuracies[kind] = bl.evaluate(clf, test_set)
        curves[kind] = curve

    if bc.oracle_pn:
        clf = bl.train_pn_classifier(
            pool.points.data,
            pool.labels,
            hidden=bc.hidden,
            activation=bc.activation,
            epochs=bc.epochs,
            batch=bc.batch_u,
            lr=bc.lr,
            seed=bc.seed,
        )
        accuracies["oracle_pn"] = bl.evaluate(clf, test_set)

    _write_curves_csv(out / "baseline_curves.csv", curves)
    if config.figures:
        plots.save_metric_curves(out / "figures" / "training.png", logged, title=config.name)
        plots.save_risk_curves(out / "figures" / "baselines.png", curves, title=config.name)

    summary = {
        "name": config.name,
        "accuracy": accuracies,
        "dataset": {
            "kind": config.dataset.kind,
            "n_labeled": config.dataset.n_labeled,
            "n_unlabeled": len(data.x_u),
            "true_pi_p": data.true_pi_p,
            "dim": data.dim,
        },
        "iterations": state.iteration,
        "final_metrics": dict(zip(core.StepMetrics.FIELDS, logged[-1].row())) if logged else None,
        "runtime_seconds": round(time.monotonic() - t0, 3),
        "config": config.to_dict(),
    }
    with open(out / "summary.json", "w", encoding="ascii") as f:
        json.dump(summary, f, indent=2)
    return summary
