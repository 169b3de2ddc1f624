"""Discretized exponential functional, its exact inverse, and pssMp samples.

For a grid path ``xi_{k/n}`` the clock ``I_t = int_0^t exp(alpha xi_s) ds``
is approximated either by the left Riemann sum (piecewise-constant
integrand) or by the trapezoid rule (piecewise-linear integrand). Both
interpolants are inverted exactly on the step containing the target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ._kernels import riemann_clock
from .levy import GridPath, LevyModel, extend_path, grid_steps, sample_path
from .rng import as_stream

#: Largest alpha * xi accepted before exp() would leave double range.
MAX_EXPONENT = 700.0
DEFAULT_HORIZON_CAP = float(2 ** 16)
DEFAULT_MAX_STEPS = 1 << 26


class Scheme(str, Enum):
    LEFT_RIEMANN = "left_riemann"
    TRAPEZOID = "trapezoid"


class ExponentOverflowError(OverflowError):
    def __init__(self, index: int, exponent: float):
        super().__init__(f"alpha * xi = {exponent:.6g} at grid index {index} exceeds {MAX_EXPONENT}")
        self.index = index


class HorizonExceededError(RuntimeError):
    """The clock never reached its target within the horizon cap."""


@dataclass(frozen=True)
class IntegralApprox:
    scheme: Scheme
    n: int
    grid_values: np.ndarray
    integrand_values: np.ndarray
    alpha: float

    @property
    def horizon(self) -> float:
        return (len(self.grid_values) - 1) / self.n

    def value_at(self, s):
        """Evaluate the scheme's interpolant of the clock at time(s) ``s``."""
        s = np.asarray(s, dtype=float)
        m = len(self.grid_values) - 1
        k = np.clip(np.floor(s * self.n).astype(np.int64), 0, m - 1)
        return self.value_in_step(k, s * self.n - k)

    def value_in_step(self, k, u):
        """Interpolant at ``(k + u) / n``; avoids rounding the time for long horizons."""
        k = np.asarray(k, dtype=np.int64)
        u = np.asarray(u, dtype=float)
        f0 = self.integrand_values[k]
        out = self.grid_values[k] + f0 * u / self.n
        if self.scheme is Scheme.TRAPEZOID:
            f1 = self.integrand_values[np.minimum(k + 1, len(self.integrand_values) - 1)]
            out = out + 0.5 * (f1 - f0) * u * u / self.n
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class HittingResult:
    """First passage of the approximated clock over ``r``.

    ``tau_n = (grid_index + frac_part) / n``; ``xi_at_floor`` is the grid
    value at ``grid_index``.
    """

    tau_n: float
    grid_index: int
    frac_part: float
    xi_at_floor: float
    reached: bool


def integral(path: GridPath, alpha: float, scheme=Scheme.LEFT_RIEMANN) -> IntegralApprox:
    """Running clock values ``I^(n)_{k/n}`` under ``scheme``.

    Raises :class:`ExponentOverflowError` instead of producing infinities.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    scheme = Scheme(scheme)
    z = alpha * path.values
    top = int(np.argmax(z))
    if z[top] > MAX_EXPONENT:
        raise ExponentOverflowError(top, float(z[top]))
    f = np.exp(z, out=z)
    grid = riemann_clock(f, path.n, scheme is Scheme.TRAPEZOID)
    return IntegralApprox(scheme, path.n, grid, f, float(alpha))


def _step_solve(integ: IntegralApprox, k: int, r: float) -> float:
    """Offset in [0, 1) (in steps) where the interpolant on step k equals r."""
    n = integ.n
    rem = (r - integ.grid_values[k]) * n
    if rem <= 0:
        return 0.0
    f0 = integ.integrand_values[k]
    if integ.scheme is Scheme.LEFT_RIEMANN:
        u = rem / f0
    else:
        # a u^2 + b u - c = 0 on u in [0, 1], written in cancellation-free form
        a = 0.5 * (integ.integrand_values[k + 1] - f0)
        b = f0
        u = 2.0 * rem / (b + math.sqrt(max(b * b + 4.0 * a * rem, 0.0)))
    return min(u, math.nextafter(1.0, 0.0))


def invert(integ: IntegralApprox, r: float, path: GridPath | None = None) -> HittingResult:
    """``tau_n(r) = inf{s : I^(n)_s >= r}`` solved exactly within the step.

    If ``r`` exceeds the last grid value the result has ``reached=False``
    and ``tau_n`` equal to the horizon. ``xi_at_floor`` is taken from
    ``path`` when given, otherwise recovered from the integrand.
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    g = integ.grid_values
    m = len(g) - 1
    j = int(np.searchsorted(g, r, side="left"))
    if j > m:
        return HittingResult(integ.horizon, m, 0.0, _xi(integ, path, m), False)
    if g[j] == r:
        k, u = j, 0.0
    else:
        k = j - 1
        u = _step_solve(integ, k, r)
    return HittingResult((k + u) / integ.n, k, u, _xi(integ, path, k), True)


def _xi(integ: IntegralApprox, path: GridPath | None, k: int) -> float:
    if path is not None:
        return float(path.values[k])
    return math.log(integ.integrand_values[k]) / integ.alpha


@dataclass(frozen=True)
class PssmpSample:
    """Approximate pssMp values ``X^(n)_{t_i}`` with their diagnostics.

    ``time_shift`` holds ``x**alpha * I^(n)`` at the grid epoch used, i.e. the
    perturbed time measured on the sampled clock. The same quantity on a
    fine-grid clock is given by :func:`time_shift`.
    """

    x: float
    alpha: float
    times: np.ndarray
    values: np.ndarray
    hitting: tuple[HittingResult, ...]
    time_shift: np.ndarray
    path: GridPath
    integral: IntegralApprox


def hit_targets(
    model: LevyModel,
    n: int,
    targets: Sequence[float],
    rng,
    scheme=Scheme.LEFT_RIEMANN,
    *,
    alpha: float,
    initial_horizon: float | None = None,
    horizon_cap: float = DEFAULT_HORIZON_CAP,
    max_steps: int = DEFAULT_MAX_STEPS,
):
    """Sample a path long enough for the clock to pass ``max(targets)``.

    The horizon starts at ``initial_horizon`` (default: twice the largest
    target capped at 1, rounded up to the grid) and doubles until reached.
    Path extension is prefix-consistent, so the starting horizon never
    changes the sampled values.
    Returns ``(path, integral)``.
    """
    stream = as_stream(rng)
    rmax = float(max(targets))
    if initial_horizon is None:
        steps = max(1, math.ceil(min(2 * rmax, 1.0) * n))
    else:
        steps = grid_steps(n, initial_horizon)
    if steps > max_steps or steps / n > horizon_cap:
        raise HorizonExceededError(f"initial horizon of {steps} steps at n={n} exceeds the caps")
    path = sample_path(model, n, steps / n, stream)
    while True:
        integ = integral(path, alpha, scheme)
        if integ.grid_values[-1] >= rmax:
            return path, integ
        steps *= 2
        if steps / n > horizon_cap:
            raise HorizonExceededError(
                f"clock did not reach {rmax:g} before horizon cap {horizon_cap:g}; "
                "the model may drift to -infinity, or raise the cap"
            )
        if steps > max_steps:
            raise HorizonExceededError(
                f"clock did not reach {rmax:g} within {max_steps} grid steps at n={n}"
            )
        path = extend_path(path, model, steps / n, stream)


def sample_pssmp(
    model: LevyModel,
    x: float,
    alpha: float,
    times,
    n: int,
    scheme=Scheme.LEFT_RIEMANN,
    rng=0,
    *,
    horizon_cap: float = DEFAULT_HORIZON_CAP,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> PssmpSample:
    """Approximate ``X_t = x exp(xi_{tau(t x^-alpha)})`` at the given times."""
    if x <= 0:
        raise ValueError(f"x must be positive, got {x}")
    times = np.asarray(times, dtype=float).ravel()
    if times.size == 0 or np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be positive and strictly increasing")
    targets = times * x ** (-alpha)
    path, integ = hit_targets(
        model, n, targets, rng, scheme, alpha=alpha, horizon_cap=horizon_cap, max_steps=max_steps
    )
    return sample_from_path(path, x, alpha, times, scheme, integ)


def sample_from_path(
    path: GridPath, x: float, alpha: float, times, scheme=Scheme.LEFT_RIEMANN, integ: IntegralApprox | None = None
) -> PssmpSample:
    """:class:`PssmpSample` on a given grid path, e.g. a coarsening of a fine path.

    Raises :class:`HorizonExceededError` if the path's clock stops short.
    """
    times = np.asarray(times, dtype=float).ravel()
    if integ is None:
        integ = integral(path, alpha, scheme)
    targets = times * x ** (-alpha)
    hits = tuple(invert(integ, float(r), path) for r in targets)
    if not all(h.reached for h in hits):
        raise HorizonExceededError("the path's clock does not reach every target")
    ks = np.array([h.grid_index for h in hits])
    values = x * np.exp(path.values[ks])
    shift = x ** alpha * integ.grid_values[ks]
    return PssmpSample(float(x), float(alpha), times, values, hits, shift, path, integ)


def time_shift(sample: PssmpSample, truth: IntegralApprox) -> np.ndarray:
    """Scaled time perturbation ``n (t_i - T^(n)_i)`` on a fine-grid clock.

    ``T^(n) = x**alpha * I_{[tau_n n]/n}`` with ``I`` read from ``truth`` at
    the coarse epoch (an exact fine grid point). The sample must live on a
    coarsening of the path behind ``truth``
    (see :func:`sample_from_path` and :func:`~pssmp.levy.coarsen`).
    """
    n = sample.path.n
    if truth.n % n:
        raise ValueError(f"truth resolution {truth.n} is not a multiple of {n}")
    if truth.alpha != sample.alpha:
        raise ValueError("truth and sample use different alpha")
    q = truth.n // n
    idx = np.array([h.grid_index for h in sample.hitting]) * q
    if idx.max() >= len(truth.grid_values):
        raise ValueError("truth clock does not cover the sampled epochs")
    ks = idx // q
    mine = np.exp(sample.alpha * sample.path.values[ks])
    if not np.allclose(mine, truth.integrand_values[idx], rtol=1e-12, atol=0):
        raise ValueError("sample path is not a coarsening of the truth path")
    shifted = sample.x ** sample.alpha * truth.grid_values[idx]
    return n * (sample.times - shifted)
