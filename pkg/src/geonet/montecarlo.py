"""Reproducible parallel Monte Carlo sweeps over (model, density) grids.

Seeding contract: every trial owns two independent RNG streams derived from
the master seed by counter-based spawn keys,

* positions: SeedSequence(master_seed, spawn_key=(0, density_index, trial))
* links:     SeedSequence(master_seed, spawn_key=(1, density_index, model_index, trial))

so any single trial is replayable in isolation, results are independent of
the worker schedule, and two models at the same density see identical node
positions (the deterministic disk model consumes no link randomness at all).

Aggregation reduces fixed-size trial chunks in index order, which keeps
floating-point sums bit-identical across parallelism degrees.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import ConnectionModel, Disk
from .geometry import Domain, sample_points
from .network import ConnectivityReport, build_graph, build_report
from .stats import wilson_interval

RNG_NAME = "numpy-PCG64+SeedSequence(master,[stream,cell,trial])"
CHUNK_TRIALS = 256
MAX_NODES = 50_000
MIN_TRIALS_FOR_CI = 100

ALL_OBSERVABLES = frozenset(
    {"fc", "md", "edge_fc", "delta", "mean_degree", "isolated_pair", "bridged_pair"}
)
DEFAULT_OBSERVABLES = frozenset(
    {"fc", "md", "edge_fc", "delta", "mean_degree", "isolated_pair"}
)


class ResourceAbort(RuntimeError):
    """A cell would exceed the configured resource envelope."""


def nodes_for_density(density: float, domain: Domain) -> int:
    """Deterministic node count per cell: round(rho * V), half away from zero."""
    return int(math.floor(density * domain.volume + 0.5))


@dataclass(frozen=True)
class ExperimentConfig:
    domain: Domain
    models: tuple[ConnectionModel, ...]
    densities: tuple[float, ...]
    k_max: int = 4
    trials: int = 10_000
    master_seed: int = 1
    observables: frozenset = DEFAULT_OBSERVABLES
    pair_sampling: str = "auto"

    def __post_init__(self):
        if not self.models:
            raise ValueError("need at least one connection model")
        if not self.densities:
            raise ValueError("need at least one density")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        unknown = set(self.observables) - ALL_OBSERVABLES
        if unknown:
            raise ValueError(f"unknown observables: {sorted(unknown)}")
        if self.pair_sampling not in ("auto", "exact", "grid"):
            raise ValueError(f"unknown pair_sampling {self.pair_sampling!r}")
        for rho in self.densities:
            n = nodes_for_density(rho, self.domain)
            if n < 2:
                raise ValueError(f"density {rho} yields n={n} < 2 nodes")
            if n > MAX_NODES:
                raise ResourceAbort(f"density {rho} yields n={n} > {MAX_NODES} nodes")

    def effective_observables(self) -> frozenset:
        obs = set(self.observables)
        if "delta" in obs:
            obs.update({"fc", "md"})
        return frozenset(obs)


def _position_rng(master_seed: int, density_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(0, density_index, trial))
    )


def _link_rng(master_seed: int, density_index: int, model_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(1, density_index, model_index, trial))
    )


def run_trial(
    config: ExperimentConfig, model_index: int, density_index: int, trial_index: int
) -> ConnectivityReport:
    """One random realization; deterministic in (master_seed, cell, trial)."""
    model = config.models[model_index]
    rho = config.densities[density_index]
    n = nodes_for_density(rho, config.domain)
    obs = config.effective_observables()
    positions = sample_points(
        config.domain, n, _position_rng(config.master_seed, density_index, trial_index)
    )
    link_rng = (
        None
        if isinstance(model, Disk)
        else _link_rng(config.master_seed, density_index, model_index, trial_index)
    )
    sample = build_graph(
        config.domain, positions, model, rng=link_rng, method=config.pair_sampling
    )
    return build_report(
        sample,
        k_max=config.k_max,
        with_vertex_connectivity="fc" in obs,
        with_edge_connectivity="edge_fc" in obs,
        with_bridged_pair="bridged_pair" in obs,
    )


@dataclass
class _Counters:
    """Per-chunk reduction state; combining is associative and exact for ints."""

    trials: int = 0
    fc: Optional[np.ndarray] = None
    md: Optional[np.ndarray] = None
    edge_fc: Optional[np.ndarray] = None
    bridged: Optional[np.ndarray] = None
    isolated_pairs: int = 0
    mean_degree_sum: float = 0.0
    mean_degree_sumsq: float = 0.0

    @staticmethod
    def empty(k_max: int, obs: frozenset) -> "_Counters":
        def zeros():
            return np.zeros(k_max, dtype=np.int64)

        return _Counters(
            fc=zeros() if "fc" in obs else None,
            md=zeros() if "md" in obs else None,
            edge_fc=zeros() if "edge_fc" in obs else None,
            bridged=zeros() if "bridged_pair" in obs else None,
        )

    def add_report(self, report: ConnectivityReport, k_max: int) -> None:
        self.trials += 1
        ks = np.arange(1, k_max + 1)
        if self.fc is not None:
            self.fc += report.vertex_connectivity >= ks
        if self.md is not None:
            self.md += min(report.min_degree, k_max) >= ks
        if self.edge_fc is not None:
            self.edge_fc += report.edge_connectivity >= ks
        if self.bridged is not None and report.bridged_pair_order is not None:
            self.bridged += report.bridged_pair_order == ks
        self.isolated_pairs += bool(report.has_isolated_pair)
        mu = report.mean_degree
        self.mean_degree_sum += mu
        self.mean_degree_sumsq += mu * mu

    def merge(self, other: "_Counters") -> None:
        self.trials += other.trials
        for name in ("fc", "md", "edge_fc", "bridged"):
            mine, theirs = getattr(self, name), getattr(other, name)
            if mine is not None:
                mine += theirs
        self.isolated_pairs += other.isolated_pairs
        self.mean_degree_sum += other.mean_degree_sum
        self.mean_degree_sumsq += other.mean_degree_sumsq


def _run_chunk(args) -> tuple[int, int, int, _Counters, float]:
    config, model_index, density_index, chunk_index, t0, t1 = args
    started = time.perf_counter()
    obs = config.effective_observables()
    counters = _Counters.empty(config.k_max, obs)
    for trial in range(t0, t1):
        report = run_trial(config, model_index, density_index, trial)
        counters.add_report(report, config.k_max)
    return model_index, density_index, chunk_index, counters, time.perf_counter() - started


@dataclass
class CellResult:
    """Estimates for one (model, density) cell over `trials` paired realizations."""

    model: ConnectionModel
    density: float
    n: int
    trials: int
    k_max: int
    observables: frozenset
    fc_count: Optional[np.ndarray]
    md_count: Optional[np.ndarray]
    edge_fc_count: Optional[np.ndarray]
    bridged_count: Optional[np.ndarray]
    isolated_pair_count: int
    mean_degree_sum: float
    mean_degree_sumsq: float
    wall_time: float = field(default=0.0, compare=False)

    def _proportion(self, count) -> tuple[float, float, float]:
        p = count / self.trials
        if self.trials >= MIN_TRIALS_FOR_CI:
            lo, hi = wilson_interval(int(count), self.trials)
        else:
            lo = hi = math.nan
        return p, lo, hi

    def p_fc(self, k: int):
        return self._proportion(int(self.fc_count[k - 1]))

    def p_md(self, k: int):
        return self._proportion(int(self.md_count[k - 1]))

    def p_fc_edge(self, k: int):
        return self._proportion(int(self.edge_fc_count[k - 1]))

    def delta(self, k: int) -> float:
        return float(self.md_count[k - 1] - self.fc_count[k - 1]) / self.trials

    def delta_interval(self, k: int) -> tuple[float, float]:
        # the difference of nested indicators is itself a Bernoulli event
        if self.trials < MIN_TRIALS_FOR_CI:
            return math.nan, math.nan
        return wilson_interval(int(self.md_count[k - 1] - self.fc_count[k - 1]), self.trials)

    @property
    def mean_degree(self) -> float:
        return self.mean_degree_sum / self.trials

    @property
    def mean_degree_se(self) -> float:
        if self.trials < 2:
            return math.nan
        var = (self.mean_degree_sumsq - self.mean_degree_sum ** 2 / self.trials) / (
            self.trials - 1
        )
        return math.sqrt(max(var, 0.0) / self.trials)

    @property
    def isolated_pair_freq(self) -> float:
        return self.isolated_pair_count / self.trials

    def check_nesting(self) -> None:
        """Count-level nesting: fc <= edge_fc <= md per k, monotone in k."""
        for arr in (self.fc_count, self.md_count, self.edge_fc_count):
            if arr is not None:
                assert all(arr[i] >= arr[i + 1] for i in range(len(arr) - 1)), arr
        if self.fc_count is not None and self.edge_fc_count is not None:
            assert (self.fc_count <= self.edge_fc_count).all()
        if self.edge_fc_count is not None and self.md_count is not None:
            assert (self.edge_fc_count <= self.md_count).all()
        if self.fc_count is not None and self.md_count is not None:
            assert (self.fc_count <= self.md_count).all()


@dataclass
class SweepResult:
    config: ExperimentConfig
    cells: list[CellResult]
    rng_name: str = RNG_NAME
    total_wall_time: float = field(default=0.0, compare=False)

    def cell(self, model_index: int, density_index: int) -> CellResult:
        return self.cells[model_index * len(self.config.densities) + density_index]


def run_sweep(config: ExperimentConfig, parallelism: int = 1) -> SweepResult:
    """Estimate every requested observable on the full (model, density) grid.

    The result is independent of `parallelism`; chunk boundaries and the
    reduction order are fixed by the config alone.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    started = time.perf_counter()
    obs = config.effective_observables()
    tasks = []
    for mi in range(len(config.models)):
        for di in range(len(config.densities)):
            n_chunks = (config.trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS
            for ci in range(n_chunks):
                t0 = ci * CHUNK_TRIALS
                t1 = min(config.trials, t0 + CHUNK_TRIALS)
                tasks.append((config, mi, di, ci, t0, t1))

    chunk_results: dict[tuple[int, int, int], tuple[_Counters, float]] = {}
    if parallelism == 1:
        for task in tasks:
            mi, di, ci, counters, wall = _run_chunk(task)
            chunk_results[(mi, di, ci)] = (counters, wall)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for mi, di, ci, counters, wall in pool.map(_run_chunk, tasks, chunksize=1):
                chunk_results[(mi, di, ci)] = (counters, wall)

    cells = []
    for mi, model in enumerate(config.models):
        for di, rho in enumerate(config.densities):
            total = _Counters.empty(config.k_max, obs)
            wall = 0.0
            for key in sorted(k for k in chunk_results if k[:2] == (mi, di)):
                counters, chunk_wall = chunk_results[key]
                total.merge(counters)
                wall += chunk_wall
            cell = CellResult(
                model=model,
                density=rho,
                n=nodes_for_density(rho, config.domain),
                trials=total.trials,
                k_max=config.k_max,
                observables=obs,
                fc_count=total.fc,
                md_count=total.md,
                edge_fc_count=total.edge_fc,
                bridged_count=total.bridged,
                isolated_pair_count=total.isolated_pairs,
                mean_degree_sum=total.mean_degree_sum,
                mean_degree_sumsq=total.mean_degree_sumsq,
                wall_time=wall,
            )
            cell.check_nesting()
            cells.append(cell)
    return SweepResult(
        config=config, cells=cells, total_wall_time=time.perf_counter() - started
    )


def estimate_mean_degree(
    domain: Domain,
    model: ConnectionModel,
    density: float,
    trials: int,
    master_seed: int = 1,
    parallelism: int = 1,
    pair_sampling: str = "auto",
) -> tuple[float, float]:
    """Monte Carlo mean degree of one cell: (estimate, standard error)."""
    config = ExperimentConfig(
        domain=domain,
        models=(model,),
        densities=(density,),
        k_max=1,
        trials=trials,
        master_seed=master_seed,
        observables=frozenset({"mean_degree"}),
        pair_sampling=pair_sampling,
    )
    cell = run_sweep(config, parallelism).cells[0]
    return cell.mean_degree, cell.mean_degree_se


@dataclass
class DeltaCurve:
    model: ConnectionModel
    densities: list[float]
    delta: list[float]
    lo: list[float]
    hi: list[float]
    peak_density: float
    peak_delta: float


def delta_curve(config: ExperimentConfig, parallelism: int = 1) -> list[DeltaCurve]:
    """Paired-difference estimate of delta(1) per density, one curve per model."""
    if not {"fc", "md"} <= config.effective_observables():
        raise ValueError("delta curves need the fc and md observables")
    sweep = run_sweep(config, parallelism)
    curves = []
    for mi, model in enumerate(config.models):
        rows = [sweep.cell(mi, di) for di in range(len(config.densities))]
        deltas = [c.delta(1) for c in rows]
        intervals = [c.delta_interval(1) for c in rows]
        peak_index = int(np.argmax(deltas))
        curves.append(
            DeltaCurve(
                model=model,
                densities=list(config.densities),
                delta=deltas,
                lo=[iv[0] for iv in intervals],
                hi=[iv[1] for iv in intervals],
                peak_density=config.densities[peak_index],
                peak_delta=deltas[peak_index],
            )
        )
    return curves
