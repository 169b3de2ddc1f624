"""Self-similar Lévy processes conditioned to stay positive.

Only Brownian motion conditioned to stay positive (the Bessel-3
process) has a built-in Lamperti model: ``xi`` is Brownian motion with unit
variance and drift 1/2, used with ``alpha = 2``. Its zooming-in limit is
standard Brownian motion with ``a_n = sqrt(n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .levy import LevyModel, make_model
from .rng import as_stream

BESSEL3_ALPHA = 2.0


class Case(str, Enum):
    BROWNIAN = "brownian"
    STABLE = "stable"


class UnsupportedCaseError(ValueError):
    pass


@dataclass(frozen=True)
class ConditionedSpec:
    """Index ``alpha`` and negativity parameter ``rho = P(X0_1 < 0)`` of X0."""

    alpha: float
    rho: float
    case: Case = Case.STABLE

    def __post_init__(self):
        object.__setattr__(self, "case", Case(self.case))
        if self.case is Case.BROWNIAN:
            if self.alpha != 2 or self.rho != 0.5:
                raise ValueError("brownian case requires alpha = 2 and rho = 1/2")
            return
        if not 0 < self.alpha < 2:
            raise ValueError(f"stable case requires alpha in (0, 2), got {self.alpha}")
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.alpha - 1 <= self.alpha * self.rho <= 1:
            raise ValueError(f"alpha*rho = {self.alpha * self.rho:g} violates alpha - 1 <= alpha*rho <= 1")

    @property
    def h_exponent(self) -> float:
        """Exponent of the harmonic function ``h(x) = x**(alpha*rho)``."""
        return self.alpha * self.rho

    @classmethod
    def brownian(cls) -> "ConditionedSpec":
        return cls(2.0, 0.5, Case.BROWNIAN)


def bessel3_lamperti_model() -> LevyModel:
    return make_model({"kind": "brownian_drift", "mu": 0.5, "sigma": 1.0})


def conditioned_lamperti_model(spec: ConditionedSpec, xi_model: LevyModel | None = None) -> LevyModel:
    """Lamperti Lévy process for ``spec``.

    The stable case has no built-in model; the caller supplies ``xi_model``
    together with its zooming data (``beta`` must equal ``spec.alpha``).
    """
    if spec.case is Case.BROWNIAN:
        return bessel3_lamperti_model()
    if xi_model is None:
        raise UnsupportedCaseError("no built-in Lamperti model for the stable case; pass xi_model")
    if xi_model.beta != spec.alpha:
        raise ValueError(f"xi_model zooms with beta = {xi_model.beta}, expected {spec.alpha}")
    return xi_model


def bessel3_exact(x: float, t: float, rng, size=None):
    """Exact Bessel-3 marginal: ``|(x, 0, 0) + W_t|`` for 3-d Brownian ``W``."""
    if x <= 0 or t <= 0:
        raise ValueError("x and t must be positive")
    gen = rng if isinstance(rng, np.random.Generator) else as_stream(rng).generator()
    shape = () if size is None else ((size,) if isinstance(size, int) else tuple(size))
    g = gen.standard_normal((3,) + shape) * math.sqrt(t)
    g[0] += x
    out = np.sqrt(np.sum(g * g, axis=0))
    return float(out) if size is None else out


def htransform_cdf_estimator(
    spec: ConditionedSpec,
    n: float,
    z,
    replications: int,
    rng,
    *,
    resolution: int = 1000,
    return_stderr: bool = False,
    chunk: int = 10_000,
):
    """Monte Carlo estimate of ``P(n^(1/alpha) (X_{1/n} - 1) <= z)`` for X started at 1.

    Uses the h-transform identity

        E[(n^(-1/alpha) X0_1 + 1)^(alpha rho) 1{X0_1 <= z} 1{n^(-1/alpha) inf X0 > -1}]

    with the running infimum of X0 over [0, 1] taken on ``resolution`` grid
    points, which makes the killing indicator slightly permissive
    (bias of order ``resolution**-0.5`` in the infimum).
    ``z`` may be an array; all entries share the same draws.
    """
    if spec.case is not Case.BROWNIAN:
        raise UnsupportedCaseError("h-transform estimator needs exact X0 paths; only the brownian case is supported")
    if replications < 2:
        raise ValueError("need at least two replications")
    gen = as_stream(rng).generator()
    zs = np.atleast_1d(np.asarray(z, dtype=float))
    scale = n ** (-1.0 / spec.alpha)
    sums = np.zeros(zs.size)
    sq = np.zeros(zs.size)
    done = 0
    while done < replications:
        rows = min(chunk, replications - done)
        inc = gen.standard_normal((rows, resolution)) * math.sqrt(1.0 / resolution)
        paths = np.cumsum(inc, axis=1)
        x1 = paths[:, -1]
        inf = np.minimum(paths.min(axis=1), 0.0)
        alive = scale * inf > -1.0
        base = np.where(alive, scale * x1 + 1.0, 0.0)
        h = base ** spec.h_exponent
        w = h[:, None] * (x1[:, None] <= zs[None, :])
        sums += w.sum(axis=0)
        sq += (w * w).sum(axis=0)
        done += rows
    mean = sums / replications
    var = (sq / replications - mean ** 2) * replications / (replications - 1)
    se = np.sqrt(np.maximum(var, 0.0) / replications)
    if np.ndim(z) == 0:
        mean, se = float(mean[0]), float(se[0])
    return (mean, se) if return_stderr else mean
