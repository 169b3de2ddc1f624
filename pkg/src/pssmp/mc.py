"""Replicated experiments, comparison summaries and CSV output.

Replication ``i`` of an experiment with master seed ``s`` draws everything
from ``Stream(s, (i,))``, so results do not depend on the number of workers
or on how replications are split between them.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .conditioned import bessel3_exact
from .lamperti import DEFAULT_HORIZON_CAP, DEFAULT_MAX_STEPS, Scheme, sample_pssmp
from .levy import LevyModel
from .limits import ErrorRecord, coupled_records, covering_path, zoom_trajectory
from .rng import Stream
from .stats import (  # re-exported for harness users
    HistogramPair,
    HistogramSpec,
    TrimRule,
    hill_tail_index,
    ks_distance,
    normal_cdf,
    trimmed_histogram,
    uniform_cdf,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ReplicationError",
    "run_experiment",
    "summarize",
    "zoom_experiment",
    "oracle_compare",
    "frac_uniformity",
    "csv_emit",
    "histogram_rows",
    "HistogramPair",
    "HistogramSpec",
    "TrimRule",
    "hill_tail_index",
    "ks_distance",
    "normal_cdf",
    "trimmed_histogram",
    "uniform_cdf",
]

#: (prelimit field, limit field) pairs compared by :func:`summarize`.
COMPARISONS = (
    ("prelimit_tau_err", "L_r"),
    ("prelimit_rel_err", "limit_rel_err"),
    ("time_shift_prelimit", "time_shift_limit"),
)


class ReplicationError(RuntimeError):
    def __init__(self, rep: int, cause: BaseException):
        super().__init__(f"replication {rep} failed: {type(cause).__name__}: {cause}")
        self.rep = rep
        self.cause = cause


@dataclass(frozen=True)
class ExperimentConfig:
    model: LevyModel
    alpha: float
    x: float = 1.0
    times: tuple[float, ...] = (1.0,)
    n_list: tuple[int, ...] = (10, 100)
    N: int = 100_000
    replications: int = 1000
    master_seed: int = 12345
    scheme: Scheme = Scheme.LEFT_RIEMANN
    initial_horizon: float = 1.0
    workers: int = 1
    horizon_cap: float = DEFAULT_HORIZON_CAP
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in np.atleast_1d(self.times)))
        object.__setattr__(self, "n_list", tuple(int(n) for n in np.atleast_1d(self.n_list)))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.x <= 0:
            raise ValueError("x must be positive")
        if not self.times or min(self.times) <= 0:
            raise ValueError("times must be positive")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        for n in self.n_list:
            if n < 1 or self.N % n:
                raise ValueError(f"N = {self.N} is not a multiple of n = {n}")
        if round(self.initial_horizon * self.N) != self.initial_horizon * self.N:
            raise ValueError("initial_horizon * N must be an integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = {k: (v.value if hasattr(v, "value") else v) for k, v in asdict(self.model).items()}
        d["scheme"] = self.scheme.value
        return d


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[ErrorRecord] = field(default_factory=list)

    def select(self, n: int, t: float) -> list[ErrorRecord]:
        return [r for r in self.records if r.n == n and r.t == t]

    def column(self, name: str, n: int, t: float) -> np.ndarray:
        """One field across replications for a given ``(n, t)``, in replication order."""
        if name not in ErrorRecord.field_names():
            raise KeyError(f"unknown record field {name!r}")
        return np.array([getattr(r, name) for r in self.select(n, t)], dtype=float)


def _replicate(config: ExperimentConfig, rep: int) -> list[ErrorRecord]:
    stream = Stream(config.master_seed, (rep,))
    targets = [t * config.x ** (-config.alpha) for t in config.times]
    caps = dict(horizon_cap=config.horizon_cap, max_steps=config.max_steps)
    fine, truth = covering_path(
        config.model, config.N, targets, config.n_list, config.alpha, config.scheme, stream,
        initial_horizon=config.initial_horizon, **caps,
    )
    return coupled_records(
        fine, config.model, config.x, config.alpha, config.times, config.n_list,
        config.scheme, stream, rep=rep, truth=truth,
    )


def _run_chunk(config: ExperimentConfig, reps: Sequence[int]) -> list[ErrorRecord]:
    out = []
    for rep in reps:
        try:
            out.extend(_replicate(config, rep))
        except Exception as exc:  # surfaces the failing replication to the caller
            raise ReplicationError(rep, exc) from exc
    return out


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run all replications; records are ordered by replication, then n, then t.

    For stable models the limit fields are NaN and only prelimit fields are
    meaningful.
    """
    workers = config.workers if workers is None else workers
    reps = list(range(config.replications))
    if workers <= 1:
        records = _run_chunk(config, reps)
    else:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [config] * workers, chunks))
        records = [r for part in parts for r in part]
    order = {n: i for i, n in enumerate(config.n_list)}
    records.sort(key=lambda r: (r.rep, order[r.n], r.t))
    return ExperimentResult(config, records)


def summarize(result: ExperimentResult) -> list[dict]:
    """KS distances between prelimit and limit samples for every ``(n, t)``."""
    rows = []
    for n in result.config.n_list:
        for t in result.config.times:
            row = {"n": n, "t": t}
            for pre, lim in COMPARISONS:
                a, b = result.column(pre, n, t), result.column(lim, n, t)
                ok = np.isfinite(b).all()
                row[f"ks_{pre}"] = ks_distance(a, b) if ok else math.nan
            row["ks_frac_uniform"] = ks_distance(result.column("frac_part", n, t), uniform_cdf)
            rows.append(row)
    return rows


def zoom_experiment(model: LevyModel, x: float, alpha: float, n: int, s_grid, replications: int,
                    seed: int, **kw) -> np.ndarray:
    """``replications x len(s_grid)`` array of zoomed trajectories ``a_n (X_{s/n} - x)``."""
    return np.stack([
        zoom_trajectory(model, x, alpha, n, s_grid, Stream(seed, (rep,)), **kw)
        for rep in range(replications)
    ])


def oracle_compare(model: LevyModel, x: float, alpha: float, t: float, n: int, replications: int,
                   seed: int, scheme=Scheme.LEFT_RIEMANN) -> tuple[np.ndarray, np.ndarray]:
    """Lamperti samples ``X^(n)_t`` and exact Bessel-3 draws with matching size."""
    lam = np.array([
        sample_pssmp(model, x, alpha, [t], n, scheme, Stream(seed, (0, rep))).values[0]
        for rep in range(replications)
    ])
    exact = bessel3_exact(x, t, Stream(seed, (1,)), replications)
    return lam, exact


def frac_uniformity(model: LevyModel, alpha: float, r: float, n: int, replications: int, seed: int,
                    scheme=Scheme.LEFT_RIEMANN) -> np.ndarray:
    """Fractional parts ``{tau_n(r) n}`` of the sampled hitting times."""
    from .lamperti import hit_targets, invert

    out = np.empty(replications)
    for rep in range(replications):
        path, integ = hit_targets(model, n, [r], Stream(seed, (rep,)), scheme, alpha=alpha)
        out[rep] = invert(integ, r, path).frac_part
    return out


def histogram_rows(pair: HistogramPair) -> list[dict]:
    return [
        {"bin_left": pair.edges[i], "bin_right": pair.edges[i + 1],
         "count_a": int(pair.counts_a[i]), "count_b": int(pair.counts_b[i])}
        for i in range(len(pair.counts_a))
    ]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def csv_emit(rows: Iterable, destination=None, columns: Sequence[str] | None = None) -> str:
    """Write rows (records, dicts or a :class:`HistogramPair`) as CSV.

    Floats use 17 significant digits, which round-trips doubles exactly.
    An empty set of records still produces the header. Returns the text and
    writes it to ``destination`` (path or file object) when given.
    """
    if isinstance(rows, HistogramPair):
        rows = histogram_rows(rows)
        columns = columns or ["bin_left", "bin_right", "count_a", "count_b"]
    rows = [asdict(r) if is_dataclass(r) else dict(r) for r in rows]
    if columns is None:
        columns = list(rows[0]) if rows else ErrorRecord.field_names()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    text = buf.getvalue()
    if destination is not None:
        if hasattr(destination, "write"):
            destination.write(text)
        else:
            Path(destination).write_text(text)
    return text
