"""Prelimit discretization errors and their limit variables.

Everything here works on one replication: a fine grid path (resolution N)
stands in for the continuous path, and coarse paths are obtained from it by
index selection. "True" quantities (I, tau(r), xi_{tau(r)}, X_t) are read
from the fine grid with the left Riemann clock; limit variables are built
from the same fine path plus auxiliary substreams of the replication.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from ._kernels import window_extrema
from .lamperti import (
    HittingResult,
    IntegralApprox,
    Scheme,
    hit_targets,
    integral,
    invert,
)
from .levy import BLOCK, GridPath, Kind, LevyModel, coarsen
from .rng import AUX, KAPPA, WPRIME, Stream, as_stream
from .stats import ks_distance, uniform_cdf


class SurrogateUnavailableError(ValueError):
    pass


class UnreachedError(ValueError):
    pass


@dataclass(frozen=True)
class ErrorRecord:
    """Prelimit error variables and their coupled limit counterparts.

    One record per (replication, n, time).
    """

    rep: int
    n: int
    t: float
    r: float
    tau: float
    tau_n: float
    prelimit_tau_err: float
    L_r: float
    prelimit_rel_err: float
    limit_rel_err: float
    frac_part: float
    fine_frac_part: float
    upper_bound: float
    lower_bound: float
    time_shift_prelimit: float
    time_shift_limit: float
    U: float
    delta_at_tau: float
    prelimit_delta: float
    xi_tau: float
    xi_tau_n: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def prelimit_integral_error(fine: IntegralApprox, coarse: IntegralApprox, t: float) -> float:
    """``n (I_{[tn]/n} - I^(n)_{[tn]/n})`` with ``I`` taken from the fine clock."""
    n = coarse.n
    if fine.n % n:
        raise ValueError(f"fine resolution {fine.n} is not a multiple of {n}")
    if fine.alpha != coarse.alpha:
        raise ValueError("fine and coarse clocks use different alpha")
    k = math.floor(t * n + 1e-12)
    if k >= len(coarse.grid_values) or k * (fine.n // n) >= len(fine.grid_values):
        raise ValueError(f"t = {t} lies beyond the horizon")
    return n * (fine.grid_values[k * (fine.n // n)] - coarse.grid_values[k])


class DeltaSurrogate:
    """Fine-grid version of the limit process Delta for one replication.

    ``Delta_t ~ (sigma/sqrt 12) sum_{j<[tN]} f'(xi_{j/N}) dW'_j
    + sum_{T_m <= t} (f(xi_{T_m}) - f(xi_{T_m-})) (kappa_m - 1/2)
    + (f(xi_t) - f(0)) / 2``, with ``f(y) = exp(alpha y)``. The last term is
    dropped for the trapezoid scheme. ``W'`` increments are drawn block by
    block from the ``WPRIME`` substream only as far as they are needed.
    """

    def __init__(self, fine: GridPath, model: LevyModel, alpha: float, scheme, stream: Stream, integrand=None):
        if model.kind is Kind.STABLE:
            raise SurrogateUnavailableError(
                "limit surrogate unavailable for pure-jump stable paths (no exact jump records); "
                "use prelimit-vs-prelimit comparison"
            )
        self.fine = fine
        self.model = model
        self.alpha = float(alpha)
        self.scheme = Scheme(scheme)
        self.stream = stream
        self._f = np.exp(self.alpha * fine.values) if integrand is None else integrand
        self._ito_blocks: list[float] = []  # Ito sum over each complete block
        self._kappa = None

    def _block_ito(self, block: int, upto: int) -> float:
        gen = self.stream.substream(WPRIME, block).generator()
        dw = gen.standard_normal(BLOCK)[:upto] * math.sqrt(1.0 / self.fine.n)
        lo = block * BLOCK
        return float(np.dot(self._f[lo:lo + upto], dw))

    def ito_sum(self, k: int) -> float:
        """``sum_{j<k} alpha f(xi_{j/N}) dW'_j`` (without the sigma factor)."""
        nblocks, rest = divmod(k, BLOCK)
        while len(self._ito_blocks) < nblocks:
            self._ito_blocks.append(self._block_ito(len(self._ito_blocks), BLOCK))
        total = math.fsum(self._ito_blocks[:nblocks])
        if rest:
            total += self._block_ito(nblocks, rest)
        return self.alpha * total

    def jump_sum(self, k: int) -> float:
        """Jump term over the jumps already contained in ``xi_{k/N}``."""
        jumps = self.fine.jumps
        if jumps is None or len(jumps) == 0:
            return 0.0
        if self._kappa is None or len(self._kappa) < len(jumps):
            self._kappa = self.stream.substream(KAPPA).generator().random(len(jumps))
        step = np.floor(jumps[:, 0] * self.fine.n).astype(np.int64)
        sel = step < k
        before = self.fine.values[step[sel]]
        df = np.exp(self.alpha * (before + jumps[sel, 1])) - np.exp(self.alpha * before)
        return float(np.dot(df, self._kappa[: len(df)] - 0.5))

    def at_index(self, k: int) -> float:
        """Surrogate of ``Delta_t`` for any ``t`` in ``[k/N, (k+1)/N)``."""
        if k > self.fine.steps:
            raise ValueError(f"index {k} lies beyond the fine horizon")
        total = 0.0
        if self.model.sigma > 0:
            total += self.model.sigma / math.sqrt(12.0) * self.ito_sum(k)
        total += self.jump_sum(k)
        if self.scheme is Scheme.LEFT_RIEMANN:
            total += 0.5 * (self._f[k] - 1.0)
        return total

    def at(self, t: float) -> float:
        return self.at_index(math.floor(t * self.fine.n))


def delta_surrogate(fine: GridPath, model: LevyModel, alpha: float, t: float, scheme, rng) -> float:
    """Fine-grid surrogate of the limit ``Delta_t`` (see :class:`DeltaSurrogate`)."""
    return DeltaSurrogate(fine, model, alpha, scheme, as_stream(rng)).at(t)


def limit_inverse_error(delta_at_tau, xi_at_tau, alpha: float):
    """``L(r) = -Delta_{tau(r)} exp(-alpha xi_{tau(r)})``."""
    return -np.asarray(delta_at_tau) * np.exp(-alpha * np.asarray(xi_at_tau)) + 0.0


def prelimit_inverse_error(tau_fine, tau_coarse, n: int) -> float:
    """``n (tau(r) - tau_n(r))``; arguments are HittingResults or plain times."""
    vals = []
    for h in (tau_fine, tau_coarse):
        if isinstance(h, HittingResult):
            if not h.reached:
                raise UnreachedError("inversion did not reach its target; extend the path")
            vals.append(h.tau_n)
        else:
            vals.append(float(h))
    return n * (vals[0] - vals[1])


def relative_error_prelimit(x_true, x_approx, a_n: float):
    """``a_n (X_t - X^(n)_t) / X_t``."""
    x_true = np.asarray(x_true, dtype=float)
    return a_n * (x_true - np.asarray(x_approx, dtype=float)) / x_true + 0.0


def relative_error_limit(L_r, U, beta: float, xi_hat_1):
    """``sign(L+U) |L+U|^(1/beta) xi_hat_1``, the law of ``xi_hat_{L+U}``."""
    s = np.asarray(L_r, dtype=float) + np.asarray(U, dtype=float)
    return np.sign(s) * np.abs(s) ** (1.0 / beta) * np.asarray(xi_hat_1, dtype=float) + 0.0


def _window(hit_coarse: HittingResult, n: int, fine_n: int) -> tuple[int, int]:
    q = fine_n // n
    j1 = hit_coarse.grid_index * q + math.floor(hit_coarse.frac_part * q)
    return max(0, j1 - q), j1


def error_bounds(fine: GridPath, tau_fine: HittingResult, tau_coarse: HittingResult, n: int, a_n: float):
    """Upper and lower bounds on ``a_n (xi_{tau(r)} - xi_{[tau_n(r) n]/n})``.

    Extrema are taken over the fine grid points of the window
    ``[tau_n(r) - 1/n, tau_n(r)]`` (clipped at 0). Window indices are formed
    in integer arithmetic so the coarse epoch is always a member.
    """
    if fine.n % n:
        raise ValueError(f"fine resolution {fine.n} is not a multiple of {n}")
    lo, hi = _window(tau_coarse, n, fine.n)
    if hi > fine.steps:
        raise ValueError("fine path does not cover the window")
    vmin, vmax = window_extrema(fine.values, lo, hi)
    xi_tau = fine.values[tau_fine.grid_index]
    return a_n * (xi_tau - vmin), a_n * (xi_tau - vmax)


def limit_bound_sample(model: LevyModel, L_r, gen: np.random.Generator, which: str = "upper", substeps: int = 1000):
    """Draws of ``sup`` (or ``inf``) of ``xi_hat`` over ``[L, L + 1]``.

    ``xi_hat`` is the two-sided zooming limit, independent of ``L``. Gaussian
    limits are sampled exactly via reflection; others on a grid of
    ``substeps`` points per unit time.
    """
    L = np.atleast_1d(np.asarray(L_r, dtype=float))
    sign = 1.0 if which == "upper" else -1.0
    if model.beta == 2 and model.kind is not Kind.STABLE:
        scale = model.sigma
        z1 = np.abs(gen.standard_normal(L.size))
        z2 = gen.standard_normal(L.size)
        z3 = np.abs(gen.standard_normal(L.size))
        start = np.where(L >= 0, L, -L - 1.0)
        outside = np.sqrt(np.maximum(start, 0.0)) * z2 + z3
        inside = np.maximum(np.sqrt(np.clip(-L, 0, None)) * z1, np.sqrt(np.clip(L + 1, 0, None)) * z3)
        # symmetric limit: inf over the window is minus an independent sup
        return sign * scale * np.where((L > -1) & (L < 0), inside, outside)
    out = np.empty(L.size)
    for i, l in enumerate(L):
        a, b = min(l, 0.0), max(l + 1.0, 0.0)
        m = max(2, math.ceil((b - a) * substeps))
        dt = (b - a) / m
        # two-sided path through 0 at time 0
        nleft = math.floor(-a / dt)
        right = np.cumsum(model.zoom_increments(dt, gen, m - nleft))
        left = -np.cumsum(model.zoom_increments(dt, gen, nleft))[::-1]
        grid = np.concatenate([left, [0.0], right])
        times = np.concatenate([-dt * np.arange(nleft, 0, -1), [0.0], dt * np.arange(1, m - nleft + 1)])
        w = grid[(times >= l) & (times <= l + 1.0)]
        out[i] = w.max() if which == "upper" else w.min()
    return out


def zoom_trajectory(
    model: LevyModel,
    x: float,
    alpha: float,
    n: int,
    s_grid: Sequence[float],
    rng,
    *,
    min_steps: int = 10_000,
    **caps,
) -> np.ndarray:
    """``a_n (X_{s/n} - x)`` on ``s_grid`` from one fine-resolution pssMp path.

    The internal resolution is ``n * m`` with ``m >= 100`` chosen so that the
    largest clock target ``s_max x^-alpha / n`` spans at least ``min_steps``
    fine steps; the discretization error then stays well below the
    ``x^(1 - alpha/beta)`` scale of the limit even for large ``x``.
    """
    s = np.asarray(s_grid, dtype=float)
    if np.any(s < 0):
        raise ValueError("s_grid must be non-negative")
    smax = float(s.max())
    if smax == 0:
        return np.zeros_like(s)
    m = max(100, math.ceil(min_steps * x ** alpha / smax))
    N = n * m
    pos = s > 0
    targets = s[pos] * x ** (-alpha) / n
    path, integ = hit_targets(model, N, targets, as_stream(rng), Scheme.LEFT_RIEMANN, alpha=alpha, **caps)
    out = np.zeros_like(s)
    ks = [invert(integ, float(r), path).grid_index for r in targets]
    out[pos] = model.a_n(n) * (x * np.exp(path.values[ks]) - x)
    return out


def frac_part_diagnostic(hittings: Sequence[HittingResult]) -> float:
    """KS distance between the fractional parts ``{tau n}`` and Uniform(0, 1)."""
    fr = np.array([h.frac_part for h in hittings])
    return ks_distance(fr, uniform_cdf)


def fractional_identity_gap(tau_fine: float, tau_coarse: float, n: int) -> float:
    """Residual of ``a - [b] = {a} - [{a} - (a - b)]`` at ``a = tau n``, ``b = tau_n n``."""
    a, b = tau_fine * n, tau_coarse * n
    fa = a - math.floor(a)
    return (a - math.floor(b)) - (fa - math.floor(fa - (a - b)))


def coupled_records(
    fine: GridPath,
    model: LevyModel,
    x: float,
    alpha: float,
    times: Sequence[float],
    n_list: Sequence[int],
    scheme,
    stream: Stream,
    rep: int = 0,
    truth: IntegralApprox | None = None,
) -> list[ErrorRecord]:
    """All error variables of one replication from its fine path.

    The fine path must already cover every inversion; use
    :func:`covering_path` to obtain one.
    """
    scheme = Scheme(scheme)
    N = fine.n
    if truth is None:
        truth = integral(fine, alpha, Scheme.LEFT_RIEMANN)
    times = np.asarray(times, dtype=float)
    targets = times * x ** (-alpha)
    try:
        surrogate = DeltaSurrogate(fine, model, alpha, scheme, stream, truth.integrand_values)
    except SurrogateUnavailableError:
        surrogate = None  # limit fields become NaN; compare prelimits across n instead
    aux = stream.substream(AUX).generator()
    U = aux.random(len(times))
    xi_hat_1 = np.atleast_1d(model.zoom_sample(aux, len(times)))

    fine_hits = [invert(truth, float(r), fine) for r in targets]
    if not all(h.reached for h in fine_hits):
        raise UnreachedError("fine clock does not reach the largest target")
    deltas = [surrogate.at_index(h.grid_index) if surrogate else math.nan for h in fine_hits]
    out = []
    for n in n_list:
        coarse = coarsen(fine, n)
        cint = integral(coarse, alpha, scheme)
        a_n = model.a_n(n)
        q = N // n
        for i, (t, r) in enumerate(zip(times, targets)):
            hf = fine_hits[i]
            hc = invert(cint, float(r), coarse)
            if not hc.reached:
                raise UnreachedError(f"coarse clock at n={n} does not reach {r:g}")
            xi_tau = hf.xi_at_floor
            L = float(limit_inverse_error(deltas[i], xi_tau, alpha))
            x_true = x * math.exp(xi_tau)
            x_approx = x * math.exp(hc.xi_at_floor)
            upper, lower = error_bounds(fine, hf, hc, n, a_n)
            shift = x ** alpha * truth.grid_values[hc.grid_index * q]
            k_floor = math.floor(hf.tau_n * n)
            out.append(
                ErrorRecord(
                    rep=rep,
                    n=n,
                    t=float(t),
                    r=float(r),
                    tau=hf.tau_n,
                    tau_n=hc.tau_n,
                    prelimit_tau_err=prelimit_inverse_error(hf, hc, n),
                    L_r=L,
                    prelimit_rel_err=float(relative_error_prelimit(x_true, x_approx, a_n)),
                    limit_rel_err=float(relative_error_limit(L, U[i], model.beta, xi_hat_1[i])),
                    frac_part=hf.tau_n * n - k_floor,
                    fine_frac_part=hf.frac_part,
                    upper_bound=float(upper),
                    lower_bound=float(lower),
                    time_shift_prelimit=n * (t - shift),
                    time_shift_limit=(L + U[i]) * x_true ** alpha,
                    U=float(U[i]),
                    delta_at_tau=deltas[i],
                    prelimit_delta=n * (truth.grid_values[k_floor * q] - cint.grid_values[k_floor]),
                    xi_tau=xi_tau,
                    xi_tau_n=hc.xi_at_floor,
                )
            )
    return out


def covering_path(
    model: LevyModel,
    N: int,
    targets: Sequence[float],
    n_list: Sequence[int],
    alpha: float,
    scheme,
    stream: Stream,
    initial_horizon: float = 1.0,
    **caps,
) -> tuple[GridPath, IntegralApprox]:
    """Fine path whose clock, and every coarsened clock, passes all targets.

    Returns the path and its left Riemann clock.
    """
    rmax = float(max(targets))
    horizon = initial_horizon
    while True:
        fine, truth = hit_targets(
            model, N, [rmax], stream, Scheme.LEFT_RIEMANN, alpha=alpha, initial_horizon=horizon, **caps
        )
        horizon = fine.horizon
        ok = True
        for n in n_list:
            q = N // n
            if fine.steps % q:
                raise ValueError(f"fine path with {fine.steps} steps does not end on the 1/{n} grid")
            if integral(coarsen(fine, n), alpha, scheme).grid_values[-1] < rmax:
                ok = False
                break
        if ok:
            return fine, truth
        horizon *= 2
