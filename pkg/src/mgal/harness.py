"""Multi-seed experiment runners: baselines, MGAL and the graph-count sweep.

Run ``i`` of an experiment uses seed ``base_seed + i`` for both the data
split and every initialization stream, so methods evaluated with the same
spec see the same splits.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from mgal.errors import ConfigError
from mgal.graphcore import DataSplit, MultiGraphDataset, average_graphs, stratified_split
from mgal.model import ModelConfig
from mgal.ndcore import make_rng
from mgal.training import TrainConfig, TrainReport, Trainer

METHODS = ("gcn_single", "gcn_m", "multi_gcn", "mgl", "mgal")


@dataclass
class ExperimentSpec:
    method: str = "mgal"
    view: int | None = None
    ratio: float = 0.1
    runs: int = 5
    base_seed: int = 0
    validation_fraction: float = 0.05
    subset_cap: int = 64
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        self.validate()

    def validate(self, m: int | None = None):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.runs < 1:
            raise ConfigError(f"run count must be >= 1, got {self.runs}")
        if not 0 < self.ratio < 1:
            raise ConfigError(f"label ratio must be in (0, 1), got {self.ratio}")
        if self.subset_cap < 1:
            raise ConfigError("subset cap must be >= 1")
        if self.method == "gcn_single":
            if self.view is None:
                raise ConfigError("gcn_single needs a view index")
            if self.view < 0 or (m is not None and self.view >= m):
                raise ConfigError(f"view index {self.view} out of range for {m} views")

    def run_seed(self, i: int) -> int:
        return self.base_seed + i


@dataclass
class RunResult:
    method: str
    accuracies: tuple[float, ...]
    stopped_epochs: tuple[int, ...]
    seeds: tuple[int, ...]
    reports: list[TrainReport] = field(default_factory=list, repr=False)
    params: list[dict[str, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        # population std, as in "mean +- std" table cells
        return float(np.std(self.accuracies))

    @property
    def embeddings(self) -> list[list[np.ndarray]]:
        return [r.embeddings for r in self.reports]


@dataclass
class SweepResult:
    sizes: tuple[int, ...]
    subsets: dict[int, list[tuple[int, ...]]]
    results: dict[tuple[int, ...], RunResult]

    def mean(self, s: int) -> float:
        accs = [a for sub in self.subsets[s] for a in self.results[sub].accuracies]
        return float(np.mean(accs))

    def table(self) -> list[tuple[int, float, int]]:
        """(size, mean accuracy, number of subsets)."""
        return [(s, self.mean(s), len(self.subsets[s])) for s in self.sizes]


def split_for(dataset: MultiGraphDataset, spec: ExperimentSpec, i: int) -> DataSplit:
    return stratified_split(dataset.labels, spec.ratio, spec.validation_fraction,
                            make_rng(spec.run_seed(i), "split"))


def _run(dataset: MultiGraphDataset, spec: ExperimentSpec, mode: str, method: str,
         train_cfg: TrainConfig | None = None, log=None) -> RunResult:
    base = train_cfg if train_cfg is not None else spec.train
    accs, stops, seeds, reports, params = [], [], [], [], []
    for i in range(spec.runs):
        seed = spec.run_seed(i)
        trainer = Trainer(dataset, split_for(dataset, spec, i), spec.model, replace(base, seed=seed), mode)
        report = trainer.fit(log=None if log is None else (lambda line, i=i: log(i, line)))
        accs.append(report.test_accuracy)
        stops.append(report.stopped_epoch)
        seeds.append(seed)
        reports.append(report)
        params.append(trainer.params)
    return RunResult(method, tuple(accs), tuple(stops), tuple(seeds), reports, params)


def run_gcn_single(dataset: MultiGraphDataset, v: int, spec: ExperimentSpec, log=None) -> RunResult:
    if not 0 <= v < dataset.m:
        raise ConfigError(f"view index {v} out of range for {dataset.m} views")
    return _run(dataset.subset_views([v]), spec, "mgl", "gcn_single", log=log)


def run_gcn_m(dataset: MultiGraphDataset, spec: ExperimentSpec, log=None) -> RunResult:
    averaged = replace(dataset, views=(average_graphs(dataset.views),))
    return _run(averaged, spec, "mgl", "gcn_m", log=log)


def run_multi_gcn(dataset: MultiGraphDataset, spec: ExperimentSpec, log=None) -> RunResult:
    return _run(dataset, spec, "multi", "multi_gcn", log=log)


def run_mgl(dataset: MultiGraphDataset, spec: ExperimentSpec, log=None) -> RunResult:
    return _run(dataset, spec, "mgl", "mgl", log=log)


def run_mgal(dataset: MultiGraphDataset, spec: ExperimentSpec, log=None) -> RunResult:
    if dataset.m < 2:
        raise ConfigError(f"MGAL needs at least two views, dataset has {dataset.m}")
    return _run(dataset, spec, "mgal", "mgal", log=log)


def run_experiment(dataset: MultiGraphDataset, spec: ExperimentSpec, log=None) -> RunResult:
    spec.validate(dataset.m)
    if spec.method == "gcn_single":
        return run_gcn_single(dataset, spec.view, spec, log=log)
    runner = {"gcn_m": run_gcn_m, "multi_gcn": run_multi_gcn, "mgl": run_mgl, "mgal": run_mgal}[spec.method]
    return runner(dataset, spec, log=log)


def view_subsets(m: int, s: int, cap: int, seed: int) -> list[tuple[int, ...]]:
    """All size-``s`` subsets of ``range(m)``; above ``cap`` a uniform sample
    of ``cap`` of them (drawn with ``seed``), kept in lexicographic order."""
    subs = list(combinations(range(m), s))
    if len(subs) <= cap:
        return subs
    pick = make_rng(seed, "sweep", str(s)).choice(len(subs), size=cap, replace=False)
    return [subs[j] for j in sorted(pick)]


def graph_count_sweep(dataset: MultiGraphDataset, spec: ExperimentSpec,
                      sizes: Sequence[int] | None = None) -> SweepResult:
    """Single-view GCN for size 1, MGAL for larger subsets."""
    if dataset.m < 2:
        raise ConfigError(f"graph-count sweep needs at least two views, dataset has {dataset.m}")
    sizes = tuple(range(1, dataset.m + 1)) if sizes is None else tuple(sizes)
    for s in sizes:
        if not 1 <= s <= dataset.m:
            raise ConfigError(f"subset size {s} out of range 1..{dataset.m}")
    subsets, results = {}, {}
    for s in sizes:
        subsets[s] = view_subsets(dataset.m, s, spec.subset_cap, spec.base_seed)
        for sub in subsets[s]:
            if s == 1:
                results[sub] = run_gcn_single(dataset, sub[0], spec)
            else:
                results[sub] = run_mgal(dataset.subset_views(sub), spec)
    return SweepResult(sizes, subsets, results)
