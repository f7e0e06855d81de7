"""Disorder-ensemble Monte Carlo at fixed (N, p, w): deterministic seeding,
parallel execution, mergeable aggregation, JSON-lines persistence and resume.

Every realization is an independent pipeline seeded by a SplitMix64 mix of
(master_seed, index); the aggregate is a fold over records sorted by index,
so the summary is identical for any worker count or schedule.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, asdict

import numpy as np

from . import RNG_ID, __version__
from .errors import DomainError, NumericError
from .lattice import LatticeSpec, sample_realization, occupied_positions, site_coordinates
from .hamiltonian import build, decompose, heisenberg_time
from .dynamics import propagate_density
from .observables import (
    ipr_distribution,
    merge_shells,
    shell_log_amplitudes,
    wavepacket_size,
)

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

IPR_HIST_BINS = 100  # fixed bins on [0, 1] so per-record histograms pool exactly

KNOWN_OBSERVABLES = frozenset({"L_of_t", "ipr", "shells", "heisenberg"})


def seed_for(master_seed: int, index: int) -> int:
    """SplitMix64 output for sequence position `index` of stream `master_seed`."""
    if index < 0:
        raise DomainError(f"index must be >= 0, got {index}")
    z = (master_seed + (index + 1) * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class EnsembleJob:
    """One Monte Carlo campaign at fixed (N, p, w)."""

    spec: LatticeSpec
    n_realizations: int
    master_seed: int
    time_grid: tuple = ()
    observables: frozenset = frozenset({"L_of_t", "ipr"})
    coverage: float = 0.9
    shell_width: float = 0.5
    workers: int = 1
    record_path: str | None = None

    def __post_init__(self):
        if self.n_realizations < 1:
            raise DomainError("n_realizations must be >= 1")
        unknown = set(self.observables) - KNOWN_OBSERVABLES
        if unknown:
            raise DomainError(f"unknown observables {sorted(unknown)}")
        grid = tuple(float(t) for t in self.time_grid)
        if grid and any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("time_grid must be strictly increasing")
        object.__setattr__(self, "time_grid", grid)
        object.__setattr__(self, "observables", frozenset(self.observables))
        if ("L_of_t" in self.observables or "shells" in self.observables) and not grid:
            raise DomainError("L_of_t/shells observables need a time grid")

    @property
    def needs_center(self) -> bool:
        return "L_of_t" in self.observables or "shells" in self.observables


@dataclass
class RealizationRecord:
    """Derived observables of one realization (eigenvectors are not kept)."""

    index: int
    seed: int
    occupied_count: int
    status: str = "done"
    error: str | None = None
    l_of_t: list | None = None
    i_min_ratio: float | None = None
    ipr_hist: list | None = None
    shell_samples: dict | None = None
    t_heisenberg: float | None = None


def run_realization(job: EnsembleJob, index: int) -> RealizationRecord:
    """Execute the sample -> build -> decompose -> observables pipeline."""
    seed = seed_for(job.master_seed, index)
    try:
        real = sample_realization(job.spec, seed, condition_center=job.needs_center)
        dec = decompose(build(job.spec, real))
        rec = RealizationRecord(index=index, seed=seed, occupied_count=real.n_occupied)
        if "ipr" in job.observables:
            dist = ipr_distribution(dec, job.spec)
            rec.i_min_ratio = float(dist.min_ratio)
            hist, _ = np.histogram(dist.values, bins=IPR_HIST_BINS, range=(0.0, 1.0))
            rec.ipr_hist = hist.tolist()
        if job.needs_center:
            positions = occupied_positions(job.spec, real)
            center = site_coordinates(job.spec, job.spec.center_index).astype(float)
            i0 = real.center_row
            if "L_of_t" in job.observables:
                rec.l_of_t = [
                    wavepacket_size(
                        propagate_density(dec, i0, t), positions, center, job.coverage
                    )
                    for t in job.time_grid
                ]
            if "shells" in job.observables:
                density = propagate_density(dec, i0, job.time_grid[-1])
                shells = shell_log_amplitudes(density, positions, job.shell_width)
                rec.shell_samples = {repr(r): s.tolist() for r, s in shells.items()}
        if "heisenberg" in job.observables:
            rec.t_heisenberg = heisenberg_time(dec)
        return rec
    except Exception as exc:
        return RealizationRecord(
            index=index, seed=seed, occupied_count=0, status="failed", error=str(exc)
        )


@dataclass
class EnsembleSummary:
    """Mergeable aggregate over realization records.

    Running sums are kept so that partial aggregates combine associatively;
    means and standard errors are derived views.
    """

    spec: LatticeSpec
    time_grid: tuple
    n_completed: int = 0
    n_failed: int = 0
    sum_l: np.ndarray | None = None
    sumsq_l: np.ndarray | None = None
    edge_count: int = 0
    i_min_ratio_min: float | None = None
    ipr_hist: np.ndarray | None = None
    pooled_shells: dict = field(default_factory=dict)
    sum_t_heisenberg: float = 0.0
    n_heisenberg: int = 0

    @property
    def mean_l(self) -> np.ndarray | None:
        if self.sum_l is None or self.n_completed == 0:
            return None
        return self.sum_l / self.n_completed

    @property
    def se_l(self) -> np.ndarray | None:
        if self.sum_l is None or self.n_completed < 2:
            return None
        n = self.n_completed
        var = (self.sumsq_l - self.sum_l**2 / n) / (n - 1)
        return np.sqrt(np.maximum(var, 0.0) / n)

    @property
    def edge_fraction(self) -> float:
        return self.edge_count / self.n_completed if self.n_completed else 0.0

    @property
    def mean_t_heisenberg(self) -> float | None:
        if self.n_heisenberg == 0:
            return None
        return self.sum_t_heisenberg / self.n_heisenberg

    @property
    def converged(self) -> bool:
        """Standard error of the final-time mean L below 2% of N."""
        se = self.se_l
        if se is None:
            return self.n_completed >= 2
        return bool(se[-1] <= 0.02 * self.spec.n_per_dim)

    def add(self, rec: RealizationRecord) -> None:
        if rec.status != "done":
            self.n_failed += 1
            return
        self.n_completed += 1
        if rec.l_of_t is not None:
            arr = np.asarray(rec.l_of_t, dtype=float)
            if len(arr) != len(self.time_grid):
                raise DomainError("record grid length does not match the job grid")
            if self.sum_l is None:
                self.sum_l = np.zeros(len(arr))
                self.sumsq_l = np.zeros(len(arr))
            self.sum_l += arr
            self.sumsq_l += arr**2
            if arr[-1] >= self.spec.n_per_dim:
                self.edge_count += 1
        if rec.i_min_ratio is not None:
            if self.i_min_ratio_min is None or rec.i_min_ratio < self.i_min_ratio_min:
                self.i_min_ratio_min = rec.i_min_ratio
        if rec.ipr_hist is not None:
            h = np.asarray(rec.ipr_hist, dtype=np.int64)
            self.ipr_hist = h if self.ipr_hist is None else self.ipr_hist + h
        if rec.shell_samples is not None:
            shells = {float(r): np.asarray(s, float) for r, s in rec.shell_samples.items()}
            self.pooled_shells = merge_shells(self.pooled_shells, shells)
        if rec.t_heisenberg is not None:
            self.sum_t_heisenberg += rec.t_heisenberg
            self.n_heisenberg += 1

    def to_dict(self) -> dict:
        mean = self.mean_l
        se = self.se_l
        return {
            "schema": "dipoloc.summary.v1",
            "software_version": __version__,
            "rng_id": RNG_ID,
            "spec": _spec_dict(self.spec),
            "time_grid": list(self.time_grid),
            "n_completed": self.n_completed,
            "n_failed": self.n_failed,
            "mean_L_of_t": None if mean is None else mean.tolist(),
            "se_L_of_t": None if se is None else se.tolist(),
            "edge_fraction": self.edge_fraction,
            "i_min_ratio_min": self.i_min_ratio_min,
            "ipr_hist": None if self.ipr_hist is None else self.ipr_hist.tolist(),
            "ipr_hist_bins": IPR_HIST_BINS,
            "mean_t_heisenberg": self.mean_t_heisenberg,
            "converged": self.converged,
        }


def merge(a: EnsembleSummary, b: EnsembleSummary) -> EnsembleSummary:
    """Combine two partial aggregates (commutative up to float rounding)."""
    if a.time_grid != b.time_grid or a.spec != b.spec:
        raise DomainError("cannot merge summaries with different spec or grid")
    out = EnsembleSummary(spec=a.spec, time_grid=a.time_grid)
    out.n_completed = a.n_completed + b.n_completed
    out.n_failed = a.n_failed + b.n_failed
    for attr in ("sum_l", "sumsq_l"):
        av, bv = getattr(a, attr), getattr(b, attr)
        setattr(out, attr, av if bv is None else (bv if av is None else av + bv))
    out.edge_count = a.edge_count + b.edge_count
    mins = [m for m in (a.i_min_ratio_min, b.i_min_ratio_min) if m is not None]
    out.i_min_ratio_min = min(mins) if mins else None
    if a.ipr_hist is not None or b.ipr_hist is not None:
        ah = a.ipr_hist if a.ipr_hist is not None else 0
        bh = b.ipr_hist if b.ipr_hist is not None else 0
        out.ipr_hist = ah + bh
    out.pooled_shells = merge_shells(a.pooled_shells, b.pooled_shells)
    out.sum_t_heisenberg = a.sum_t_heisenberg + b.sum_t_heisenberg
    out.n_heisenberg = a.n_heisenberg + b.n_heisenberg
    return out


def aggregate(records, spec: LatticeSpec, time_grid=()) -> EnsembleSummary:
    """Fold records (sorted by index) into a summary."""
    summary = EnsembleSummary(spec=spec, time_grid=tuple(float(t) for t in time_grid))
    for rec in sorted(records, key=lambda r: r.index):
        summary.add(rec)
    return summary


def _spec_dict(spec: LatticeSpec) -> dict:
    return {
        "n_per_dim": spec.n_per_dim,
        "occupation": spec.occupation,
        "disorder_width": spec.disorder_width,
        "alpha": spec.alpha,
        "nn_amplitude": spec.nn_amplitude,
        "boundary": spec.boundary,
    }


def _record_line(job: EnsembleJob, rec: RealizationRecord) -> str:
    payload = asdict(rec)
    payload.update(
        {
            "schema": "dipoloc.record.v1",
            "master_seed": job.master_seed,
            "spec": _spec_dict(job.spec),
            "grid": list(job.time_grid),
            "software_version": __version__,
            "rng_id": RNG_ID,
        }
    )
    return json.dumps(payload, sort_keys=True)


def load_records(path, job: EnsembleJob) -> dict:
    """Read existing records matching this job; returns {index: record}."""
    found: dict[int, RealizationRecord] = {}
    if not path or not os.path.exists(path):
        return found
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if obj.get("master_seed") != job.master_seed:
                continue
            if obj.get("spec") != _spec_dict(job.spec):
                continue
            if [float(t) for t in obj.get("grid", [])] != list(job.time_grid):
                continue
            rec = RealizationRecord(
                index=obj["index"],
                seed=obj["seed"],
                occupied_count=obj["occupied_count"],
                status=obj["status"],
                error=obj.get("error"),
                l_of_t=obj.get("l_of_t"),
                i_min_ratio=obj.get("i_min_ratio"),
                ipr_hist=obj.get("ipr_hist"),
                shell_samples=obj.get("shell_samples"),
                t_heisenberg=obj.get("t_heisenberg"),
            )
            found[rec.index] = rec
    return found


def run_ensemble(job: EnsembleJob, progress=None) -> EnsembleSummary:
    """Run (or resume) all realizations of a job and aggregate them.

    Records are appended to job.record_path as they complete; a rerun skips
    indices already on disk, so an interrupted job resumes exactly.
    """
    existing = load_records(job.record_path, job)
    missing = [i for i in range(job.n_realizations) if i not in existing]
    records = dict(existing)

    sink = open(job.record_path, "a") if job.record_path else None
    try:
        if job.workers > 1 and len(missing) > 1:
            with ProcessPoolExecutor(max_workers=job.workers) as pool:
                futures = {pool.submit(run_realization, job, i): i for i in missing}
                for fut in as_completed(futures):
                    rec = fut.result()
                    records[rec.index] = rec
                    if sink:
                        sink.write(_record_line(job, rec) + "\n")
                        sink.flush()
                    if progress:
                        progress(rec)
        else:
            for i in missing:
                rec = run_realization(job, i)
                records[rec.index] = rec
                if sink:
                    sink.write(_record_line(job, rec) + "\n")
                    sink.flush()
                if progress:
                    progress(rec)
    finally:
        if sink:
            sink.close()

    summary = aggregate(records.values(), job.spec, job.time_grid)
    if summary.n_failed > 0.01 * job.n_realizations:
        raise NumericError(
            f"{summary.n_failed}/{job.n_realizations} realizations failed"
        )
    return summary
