"""Experiment runner: grid-searched resamplers under stratified k-fold CV
with an RBF SVM, reported as mean/variance tables.

Randomness is derived per work unit from (seed, dataset, sampler, grid point,
fold), so serial and parallel runs produce identical reports.
"""

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import svm
from .data import (
    LabeledDataset,
    apply_standardizer,
    fit_standardizer,
    generate_clover,
    load_csv,
    load_keel,
    stratified_kfold,
)
from .metrics import CvSummary, aggregate, confusion, f_beta, minority_accuracy, overall_accuracy
from .samplers import SamplerSpec, resample

logger = logging.getLogger(__name__)

METRIC_NAMES = ("f1", "f2", "minority_acc", "overall_acc")
DEFAULT_K_GRID = tuple(range(2, 11))
DEFAULT_ETA_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))
_GRIDLESS_KINDS = ("none", "ros")
WORKERS_ENV_VAR = "REBALANCE_WORKERS"


class BenchAuditError(RuntimeError):
    """A test-fold row appeared bit-exactly in a resampler's input."""


@dataclass(frozen=True)
class DatasetSource:
    name: str
    kind: str  # keel | csv | clover
    path: str | None = None
    label_column: object = None
    positive_label: object = None
    clover_args: tuple[int, int, int, int] | None = None

    def load(self) -> LabeledDataset:
        if self.kind == "keel":
            return load_keel(self.path, positive_label=self.positive_label)
        if self.kind == "csv":
            return load_csv(self.path, self.label_column, positive_label=self.positive_label)
        if self.kind == "clover":
            return generate_clover(*self.clover_args)
        raise ValueError(f"unknown dataset source kind {self.kind!r}")


@dataclass(frozen=True)
class SamplerGrid:
    kind: str
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    eta_grid: tuple[float, ...] = DEFAULT_ETA_GRID
    r: int = 10
    p_t: float = 0.5
    w_t: float = 0.5

    def grid_points(self) -> list[dict]:
        """Hyperparameter combinations in tie-break order (ascending K, eta)."""
        if self.kind in _GRIDLESS_KINDS:
            return [{}]
        if self.kind == "adaptive_gmm":
            return [{"K": k, "eta": e} for k in sorted(self.k_grid) for e in sorted(self.eta_grid)]
        return [{"K": k} for k in sorted(self.k_grid)]

    def spec_for(self, point: dict, seed: int) -> SamplerSpec:
        return SamplerSpec(
            kind=self.kind,
            K=point.get("K", 5),
            r=self.r,
            eta=point.get("eta", 0.1),
            p_t=self.p_t,
            w_t=self.w_t,
            seed=seed,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetSource, ...]
    samplers: tuple[SamplerGrid, ...]
    folds: int = 5
    seed: int = 0
    metrics: tuple[str, ...] = METRIC_NAMES
    output_path: str = "report.csv"
    output_format: str = "csv"
    audit_leakage: bool = False

    def __post_init__(self):
        if not self.datasets or not self.samplers:
            raise ValueError("config needs at least one dataset and one sampler")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        unknown = set(self.metrics) - set(METRIC_NAMES)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}; expected subset of {METRIC_NAMES}")
        if self.output_format not in ("csv", "markdown"):
            raise ValueError("output format must be 'csv' or 'markdown'")


@dataclass(frozen=True)
class ReportRow:
    dataset: str
    sampler: str
    params: dict
    scores: dict  # metric name -> CvSummary


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple[ReportRow, ...]


def _unit_seed(config_seed: int, dataset: str, sampler: str, point: dict, fold: int) -> int:
    tag = f"{config_seed}|{dataset}|{sampler}|{sorted(point.items())}|{fold}"
    digest = hashlib.blake2s(tag.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def _metric_value(name: str, counts) -> float:
    if name == "f1":
        return f_beta(counts, 1.0)
    if name == "f2":
        return f_beta(counts, 2.0)
    if name == "minority_acc":
        return minority_accuracy(counts)
    if name == "overall_acc":
        return overall_accuracy(counts)
    raise ValueError(f"unknown metric {name!r}")


def _run_unit(args):
    """One (grid point, fold) evaluation; returns the test-fold confusion counts."""
    dataset, train_idx, test_idx, spec, audit = args
    train = dataset.subset(train_idx)
    test = dataset.subset(test_idx)
    standardizer = fit_standardizer(train)
    train_s = apply_standardizer(standardizer, train)
    test_s = apply_standardizer(standardizer, test)
    resampled = resample(train_s, spec)
    if audit:
        train_rows = {row.tobytes() for row in resampled.features[: train_s.n_samples]}
        for row in test_s.features:
            if row.tobytes() in train_rows:
                raise BenchAuditError(
                    f"test row leaked into the resampler input (sampler={spec.kind})"
                )
    y_train = np.where(resampled.minority_mask, 1.0, -1.0)
    model = svm.train(resampled.features, y_train, C_reg=1.0, gamma="scale")
    predictions = svm.predict(model, test_s.features)
    y_test = np.where(test.minority_mask, 1.0, -1.0)
    return confusion(y_test, predictions, positive_label=1.0)


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV_VAR, "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Execute the full protocol and return one row per (dataset, sampler).

    Per (dataset, sampler): every grid point is scored by stratified k-fold
    CV (standardize on the training fold, resample the training fold only,
    train the SVM, score the untouched test fold); the grid point with the
    best mean F1 wins, ties going to smaller K then smaller eta.
    """
    workers = _worker_count(workers)

    loaded: list[tuple[DatasetSource, LabeledDataset, list]] = []
    for source in config.datasets:
        try:
            dataset = source.load()
            plan = stratified_kfold(dataset, config.folds, seed=config.seed)
        except Exception:
            logger.exception("skipping dataset %r: load/split failed", source.name)
            continue
        loaded.append((source, dataset, plan.assignments))

    units = []
    slots = {}
    for source, dataset, assignments in loaded:
        for grid in config.samplers:
            for point_idx, point in enumerate(grid.grid_points()):
                for fold_idx, (train_idx, test_idx) in enumerate(assignments):
                    seed = _unit_seed(config.seed, source.name, grid.kind, point, fold_idx)
                    spec = grid.spec_for(point, seed)
                    key = (source.name, grid.kind, point_idx, fold_idx)
                    slots[key] = len(units)
                    units.append((dataset, train_idx, test_idx, spec, config.audit_leakage))

    if workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_unit, units, chunksize=1))
    else:
        results = [_run_unit(unit) for unit in units]

    rows = []
    for source, dataset, assignments in loaded:
        for grid in config.samplers:
            points = grid.grid_points()
            best = None
            for point_idx, point in enumerate(points):
                counts = [
                    results[slots[(source.name, grid.kind, point_idx, fold_idx)]]
                    for fold_idx in range(len(assignments))
                ]
                mean_f1 = aggregate([f_beta(c, 1.0) for c in counts]).mean
                if best is None or mean_f1 > best[0]:
                    best = (mean_f1, point, counts)
            _, point, counts = best
            scores = {
                name: aggregate([_metric_value(name, c) for c in counts])
                for name in config.metrics
            }
            rows.append(ReportRow(dataset=source.name, sampler=grid.kind, params=point, scores=scores))
    return ExperimentReport(rows=tuple(rows))


def _format_params(params: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in sorted(params.items())) if params else "-"


def emit(report: ExperimentReport, output_format: str, path: str) -> None:
    """Write the report as CSV (one line per metric) or a markdown table per
    metric with the best mean per dataset row in bold."""
    try:
        if output_format == "csv":
            _emit_csv(report, path)
        elif output_format == "markdown":
            _emit_markdown(report, path)
        else:
            raise ValueError(f"unknown output format {output_format!r}")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def _emit_csv(report: ExperimentReport, path: str) -> None:
    lines = ["dataset,sampler,params,metric,mean,variance"]
    for row in report.rows:
        for metric, summary in row.scores.items():
            lines.append(
                f"{row.dataset},{row.sampler},{_format_params(row.params)},"
                f"{metric},{summary.mean:.4f},{summary.variance:.4f}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _emit_markdown(report: ExperimentReport, path: str) -> None:
    datasets = list(dict.fromkeys(row.dataset for row in report.rows))
    samplers = list(dict.fromkeys(row.sampler for row in report.rows))
    by_key = {(row.dataset, row.sampler): row for row in report.rows}
    metric_names = list(report.rows[0].scores.keys()) if report.rows else []

    chunks = []
    for metric in metric_names:
        lines = [f"## {metric}", ""]
        lines.append("| dataset | " + " | ".join(samplers) + " |")
        lines.append("|---" * (len(samplers) + 1) + "|")
        for dataset in datasets:
            cells = []
            means = {}
            for sampler in samplers:
                row = by_key.get((dataset, sampler))
                if row is None or metric not in row.scores:
                    cells.append("-")
                    continue
                summary = row.scores[metric]
                means[sampler] = summary.mean
                cells.append(f"{summary.mean:.4f} ± {summary.variance:.4f}")
            if means:
                best = max(means.values())
                for i, sampler in enumerate(samplers):
                    if sampler in means and means[sampler] == best:
                        cells[i] = f"**{cells[i]}**"
            lines.append(f"| {dataset} | " + " | ".join(cells) + " |")
        chunks.append("\n".join(lines))

    lines = ["## selected hyperparameters", ""]
    lines.append("| dataset | " + " | ".join(samplers) + " |")
    lines.append("|---" * (len(samplers) + 1) + "|")
    for dataset in datasets:
        cells = [
            _format_params(by_key[(dataset, s)].params) if (dataset, s) in by_key else "-"
            for s in samplers
        ]
        lines.append(f"| {dataset} | " + " | ".join(cells) + " |")
    chunks.append("\n".join(lines))

    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n\n".join(chunks) + "\n")


def parse_config(payload: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from the documented JSON tree."""
    if not isinstance(payload, dict):
        raise ValueError("config root must be a JSON object")

    sources = []
    for entry in payload.get("datasets", []):
        name = entry.get("name")
        if not name:
            raise ValueError("every dataset entry needs a 'name'")
        if "keel" in entry:
            value = entry["keel"]
            if isinstance(value, str):
                sources.append(DatasetSource(name=name, kind="keel", path=value))
            else:
                sources.append(DatasetSource(
                    name=name, kind="keel",
                    path=value["path"], positive_label=value.get("positive_label"),
                ))
        elif "csv" in entry:
            value = entry["csv"]
            sources.append(DatasetSource(
                name=name, kind="csv",
                path=value["path"], label_column=value["label_column"],
                positive_label=value.get("positive_label"),
            ))
        elif "clover" in entry:
            value = entry["clover"]
            sources.append(DatasetSource(
                name=name, kind="clover",
                clover_args=(
                    int(value["majority"]), int(value["minority"]),
                    int(value.get("disturbance", 0)), int(value.get("seed", 0)),
                ),
            ))
        else:
            raise ValueError(f"dataset {name!r} needs one of 'keel', 'csv', 'clover'")

    grids = []
    for entry in payload.get("samplers", []):
        grids.append(SamplerGrid(
            kind=entry["kind"],
            k_grid=tuple(entry.get("k_grid", DEFAULT_K_GRID)),
            eta_grid=tuple(entry.get("eta_grid", DEFAULT_ETA_GRID)),
            r=int(entry.get("r", 10)),
            p_t=float(entry.get("p_t", 0.5)),
            w_t=float(entry.get("w_t", 0.5)),
        ))

    output = payload.get("output", {})
    return ExperimentConfig(
        datasets=tuple(sources),
        samplers=tuple(grids),
        folds=int(payload.get("folds", 5)),
        seed=int(payload.get("seed", 0)),
        metrics=tuple(payload.get("metrics", METRIC_NAMES)),
        output_path=output.get("path", "report.csv"),
        output_format=output.get("format", "csv"),
        audit_leakage=bool(payload.get("audit_leakage", False)),
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as handle:
        return parse_config(json.load(handle))
