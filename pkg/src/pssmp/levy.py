"""Lévy process models with exact equidistant increments.

Stable parameterization
-----------------------
A strictly stable law with index ``stability`` = a in (0, 2] and
``positivity`` = rho = P(X < 0) is normalised so that, for a != 1,

    E exp(i u X) = exp(-|u|^a (1 - i b sign(u) tan(pi a / 2)))

with skewness b = tan(pi a (1/2 - rho)) / tan(pi a / 2). Under this
convention a = 2 is the centred Gaussian with variance 2, *not* 1. For
a = 1 the law is a standard Cauchy shifted by tan(pi (1/2 - rho)), which
is strictly 1-stable. An increment over time dt is dt**(1/a) times a
unit draw.

Brownian models carry their own volatility ``sigma`` (variance sigma**2
per unit time) and do not use the stable convention.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .rng import PATH, Stream, as_stream

#: Increments per RNG block. Blocks are seeded independently so a path can be
#: extended without changing its prefix.
BLOCK = 1 << 14


class ModelValidationError(ValueError):
    """Invalid model parameter; ``field`` names the offending parameter."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class Kind(str, Enum):
    BROWNIAN_DRIFT = "brownian_drift"
    STABLE = "stable"
    COMPOUND_POISSON_BROWNIAN = "compound_poisson_brownian"
    ZERO = "zero"


class JumpDist(str, Enum):
    NORMAL = "normal"  # params (mean, std)
    TWO_POINT = "two_point"  # params (a, b, p_a)
    EXPONENTIAL_SIGNED = "exponential_signed"  # params (p_up, rate_up, rate_down)


_JUMP_NPARAMS = {JumpDist.NORMAL: 2, JumpDist.TWO_POINT: 3, JumpDist.EXPONENTIAL_SIGNED: 3}


@dataclass(frozen=True)
class LevyModel:
    """Parametric Lévy process together with its zooming-in limit.

    ``beta`` and ``scaling_index`` are derived: ``a_n = n**scaling_index``
    and ``a_n * xi_{1/n}`` converges to ``xi_hat_1`` (see :meth:`zoom_sample`).
    Models with a Brownian part zoom to ``sigma * B`` (beta = 2); pure drift
    and drift-plus-compound-Poisson zoom to the drift line (beta = 1); stable
    models zoom to themselves (beta = stability).
    """

    kind: Kind
    mu: float = 0.0
    sigma: float = 0.0
    stability: float = 2.0
    positivity: float = 0.5
    jump_rate: float = 0.0
    jump_dist: JumpDist = JumpDist.NORMAL
    jump_params: tuple[float, ...] = (0.0, 1.0)
    beta: float = field(init=False)
    scaling_index: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "jump_dist", JumpDist(self.jump_dist))
        object.__setattr__(self, "jump_params", tuple(float(p) for p in self.jump_params))
        self._validate()
        object.__setattr__(self, "beta", self._derive_beta())
        object.__setattr__(self, "scaling_index", 1.0 / self.beta)

    def _validate(self):
        for name in ("mu", "sigma", "stability", "positivity", "jump_rate"):
            if not math.isfinite(getattr(self, name)):
                raise ModelValidationError(name, "must be finite")
        if self.sigma < 0:
            raise ModelValidationError("sigma", f"must be non-negative, got {self.sigma}")
        if self.jump_rate < 0:
            raise ModelValidationError("jump_rate", f"must be non-negative, got {self.jump_rate}")
        kind = self.kind
        if kind is Kind.STABLE:
            a, rho = self.stability, self.positivity
            if not 0 < a <= 2:
                raise ModelValidationError("stability", f"must lie in (0, 2], got {a}")
            if not 0 <= rho <= 1:
                raise ModelValidationError("positivity", f"must lie in [0, 1], got {rho}")
            if not (a - 1 <= a * rho <= 1):
                raise ModelValidationError(
                    "positivity",
                    f"stability*positivity = {a * rho:g} violates "
                    f"stability - 1 <= stability*positivity <= 1",
                )
            if a == 1 and not 0 < rho < 1:
                raise ModelValidationError("positivity", "must lie in (0, 1) when stability = 1")
            if self.mu != 0 or self.sigma != 0 or self.jump_rate != 0:
                raise ModelValidationError("mu", "stable models are strictly stable: mu, sigma, jump_rate must be 0")
        elif kind is Kind.ZERO:
            if self.mu != 0 or self.sigma != 0 or self.jump_rate != 0:
                raise ModelValidationError("kind", "zero model takes no parameters")
        elif kind is Kind.BROWNIAN_DRIFT:
            if self.jump_rate != 0:
                raise ModelValidationError("jump_rate", "brownian_drift has no jumps")
            if self.sigma == 0 and self.mu == 0:
                raise ModelValidationError("sigma", "sigma = mu = 0; use kind = zero")
        else:
            nparams = _JUMP_NPARAMS[self.jump_dist]
            if len(self.jump_params) != nparams:
                raise ModelValidationError(
                    "jump_params", f"{self.jump_dist.value} takes {nparams} parameters"
                )
            p = self.jump_params
            if self.jump_dist is JumpDist.NORMAL and p[1] < 0:
                raise ModelValidationError("jump_params", "normal jump std must be non-negative")
            if self.jump_dist is JumpDist.TWO_POINT and not 0 <= p[2] <= 1:
                raise ModelValidationError("jump_params", "two_point probability must lie in [0, 1]")
            if self.jump_dist is JumpDist.EXPONENTIAL_SIGNED and (
                not 0 <= p[0] <= 1 or p[1] <= 0 or p[2] <= 0
            ):
                raise ModelValidationError(
                    "jump_params", "exponential_signed needs p_up in [0, 1] and positive rates"
                )
            if self.sigma == 0 and self.mu == 0 and self.jump_rate == 0:
                raise ModelValidationError("sigma", "no active component; use kind = zero")

    def _derive_beta(self) -> float:
        if self.kind is Kind.STABLE:
            return float(self.stability)
        if self.kind is Kind.ZERO:
            return 2.0
        return 2.0 if self.sigma > 0 else 1.0

    @property
    def has_jump_records(self) -> bool:
        return self.kind is Kind.COMPOUND_POISSON_BROWNIAN

    def a_n(self, n: float) -> float:
        """Zooming-in scale ``n**(1/beta)``."""
        return float(n) ** self.scaling_index

    def zoom_sample(self, gen: np.random.Generator, size=None):
        """Draws of ``xi_hat_1``, the zooming-in limit at time 1."""
        if self.kind is Kind.STABLE:
            return standard_stable(self.stability, self.positivity, gen, size)
        if self.kind is Kind.ZERO:
            return np.zeros(size) if size is not None else 0.0
        if self.sigma > 0:
            return self.sigma * gen.standard_normal(size)
        return np.full(size, self.mu) if size is not None else self.mu

    def zoom_increments(self, dt: float, gen: np.random.Generator, size):
        """Independent increments of ``xi_hat`` over steps of length ``dt``."""
        return dt ** (1.0 / self.beta) * np.asarray(self.zoom_sample(gen, size))


def make_model(spec: Mapping) -> LevyModel:
    """Build a validated :class:`LevyModel` from a flat parameter map.

    Numeric values may be strings (as read from a config file);
    ``jump_params`` may be a comma-separated string.
    """
    spec = dict(spec)
    if "kind" not in spec:
        raise ModelValidationError("kind", "missing")
    allowed = {"kind", "mu", "sigma", "stability", "positivity", "jump_rate", "jump_dist", "jump_params"}
    unknown = set(spec) - allowed
    if unknown:
        name = sorted(unknown)[0]
        raise ModelValidationError(name, "unknown model parameter")
    try:
        kind = Kind(str(spec.pop("kind")))
    except ValueError:
        raise ModelValidationError("kind", f"unknown kind; choose from {[k.value for k in Kind]}") from None
    kwargs = {}
    for name in ("mu", "sigma", "stability", "positivity", "jump_rate"):
        if name in spec:
            try:
                kwargs[name] = float(spec[name])
            except (TypeError, ValueError):
                raise ModelValidationError(name, f"not a number: {spec[name]!r}") from None
    if "jump_dist" in spec:
        try:
            kwargs["jump_dist"] = JumpDist(str(spec["jump_dist"]))
        except ValueError:
            raise ModelValidationError("jump_dist", f"unknown jump distribution {spec['jump_dist']!r}") from None
    if "jump_params" in spec:
        params = spec["jump_params"]
        if isinstance(params, str):
            params = [p for p in params.replace(" ", "").split(",") if p]
        try:
            kwargs["jump_params"] = tuple(float(p) for p in params)
        except (TypeError, ValueError):
            raise ModelValidationError("jump_params", f"not numeric: {params!r}") from None
    elif kind is Kind.COMPOUND_POISSON_BROWNIAN:
        kwargs["jump_params"] = {
            JumpDist.NORMAL: (0.0, 1.0),
            JumpDist.TWO_POINT: (-1.0, 1.0, 0.5),
            JumpDist.EXPONENTIAL_SIGNED: (0.5, 1.0, 1.0),
        }[kwargs.get("jump_dist", JumpDist.NORMAL)]
    return LevyModel(kind=kind, **kwargs)


def standard_stable(stability: float, positivity: float, gen: np.random.Generator, size=None):
    """Unit-time strictly stable draws (Chambers-Mallows-Stuck).

    See the module docstring for the characteristic-function convention.
    """
    a, rho = float(stability), float(positivity)
    v = math.pi * (gen.random(size) - 0.5)
    if a == 1.0:
        return np.tan(v) + math.tan(math.pi * (0.5 - rho))
    w = gen.standard_exponential(size)
    # a * theta0 = arctan(b tan(pi a / 2)) in closed form
    theta0 = math.pi * (0.5 - rho)
    at0 = a * theta0
    scale = math.cos(at0) ** (-1.0 / a)
    arg = a * (v + theta0)
    return (
        scale
        * np.sin(arg)
        / np.cos(v) ** (1.0 / a)
        * (np.cos(v - arg) / w) ** ((1.0 - a) / a)
    )


def stable_increment(stability: float, positivity: float, dt: float, rng, size=None):
    """Strictly stable increment(s) over a step of length ``dt``.

    ``rng`` may be a :class:`~pssmp.rng.Stream`, an int seed or a numpy
    ``Generator``.
    """
    LevyModel(kind=Kind.STABLE, stability=stability, positivity=positivity)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    gen = rng if isinstance(rng, np.random.Generator) else as_stream(rng).generator()
    return dt ** (1.0 / stability) * standard_stable(stability, positivity, gen, size)


@dataclass(frozen=True)
class GridPath:
    """Samples ``xi_{k/n}``, k = 0..m, plus exact jump records when available.

    ``jumps`` is an array of shape (J, 2) holding (time, size) rows sorted by
    time, or None for models without jump records.
    """

    n: int
    values: np.ndarray
    jumps: np.ndarray | None = None
    seed_tag: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if len(self.values) < 2:
            raise ValueError("a path needs at least two grid values")
        if self.values[0] != 0:
            raise ValueError("paths start at 0")

    @property
    def steps(self) -> int:
        return len(self.values) - 1

    @property
    def horizon(self) -> float:
        return self.steps / self.n


def grid_steps(n: int, horizon: float) -> int:
    """Number of steps ``n * horizon``; rejects non-integral products."""
    m = n * horizon
    k = round(m)
    if k < 1 or abs(m - k) > 1e-9 * max(1.0, abs(m)):
        raise ValueError(f"n * horizon must be a positive integer, got {n} * {horizon} = {m}")
    return int(k)


def _block_increments(model: LevyModel, n: int, stream: Stream, block: int):
    """All BLOCK increments of one block.

    The second item is None or ``(step_index, position, size)`` arrays for the
    jumps of the block, positions measured in steps from the block start.
    """
    dt = 1.0 / n
    kind = model.kind
    if kind is Kind.ZERO:
        return np.zeros(BLOCK), None
    gen = stream.substream(PATH, block).generator()
    if kind is Kind.STABLE:
        inc = dt ** (1.0 / model.stability) * standard_stable(model.stability, model.positivity, gen, BLOCK)
        return inc, None
    if model.sigma > 0:
        inc = gen.standard_normal(BLOCK)
        inc *= model.sigma * math.sqrt(dt)
        inc += model.mu * dt
    else:
        inc = np.full(BLOCK, model.mu * dt)
    if kind is Kind.BROWNIAN_DRIFT:
        return inc, None
    count = gen.poisson(model.jump_rate * BLOCK * dt)
    local = np.sort(gen.random(count)) * BLOCK  # position in step units within block
    sizes = _jump_sizes(model, gen, count)
    idx = np.minimum(local.astype(np.int64), BLOCK - 1)
    np.add.at(inc, idx, sizes)
    return inc, (idx, local, sizes)


def _jump_sizes(model: LevyModel, gen: np.random.Generator, count: int):
    p = model.jump_params
    if model.jump_dist is JumpDist.NORMAL:
        return p[0] + p[1] * gen.standard_normal(count)
    if model.jump_dist is JumpDist.TWO_POINT:
        return np.where(gen.random(count) < p[2], p[0], p[1])
    up = gen.random(count) < p[0]
    e = gen.standard_exponential(count)
    return np.where(up, e / p[1], -e / p[2])


def _extend(model: LevyModel, n: int, stream: Stream, values: np.ndarray, jumps, steps: int):
    """Append increments to ``values`` until it covers ``steps`` steps."""
    have = len(values) - 1
    pieces = [values]
    jump_pieces = [jumps] if jumps is not None else []
    last = values[-1]
    pos = have
    while pos < steps:
        block, offset = divmod(pos, BLOCK)
        inc, jrec = _block_increments(model, n, stream, block)
        take = min(BLOCK - offset, steps - pos)
        seg = np.cumsum(np.concatenate(([last], inc[offset:offset + take])))[1:]
        pieces.append(seg)
        if jrec is not None:
            idx, local, sizes = jrec
            sel = (idx >= offset) & (idx < offset + take)
            times = (block * BLOCK + local[sel]) / n
            jump_pieces.append(np.column_stack([times, sizes[sel]]))
        last = seg[-1]
        pos += take
    out = np.concatenate(pieces)
    rec = np.concatenate(jump_pieces) if model.has_jump_records else None
    return out, rec


def sample_path(model: LevyModel, n: int, horizon: float, rng) -> GridPath:
    """Sample ``xi`` exactly on the grid ``k/n``, ``0 <= k <= n * horizon``.

    The result depends only on (model, n, horizon, stream); a longer horizon
    with the same stream extends the shorter path without altering it.
    """
    stream = as_stream(rng)
    steps = grid_steps(n, horizon)
    values, jumps = _extend(model, n, stream, np.zeros(1), np.empty((0, 2)) if model.has_jump_records else None, steps)
    return GridPath(n=n, values=values, jumps=jumps, seed_tag=(stream.seed,) + stream.key)


def extend_path(path: GridPath, model: LevyModel, horizon: float, rng) -> GridPath:
    """Extend ``path`` to a longer horizon, reusing its existing values.

    ``rng`` must be the stream that produced ``path``.
    """
    stream = as_stream(rng)
    steps = grid_steps(path.n, horizon)
    if steps <= path.steps:
        return path
    jumps = path.jumps if path.jumps is not None else (np.empty((0, 2)) if model.has_jump_records else None)
    values, jumps = _extend(model, path.n, stream, path.values, jumps, steps)
    return GridPath(n=path.n, values=values, jumps=jumps, seed_tag=path.seed_tag)


def coarsen(fine: GridPath, n: int) -> GridPath:
    """Select every ``fine.n // n``-th grid value (no re-summation)."""
    if n < 1 or fine.n % n:
        raise ValueError(f"fine resolution {fine.n} is not a multiple of {n}")
    q = fine.n // n
    if fine.steps % q:
        raise ValueError(f"fine path with {fine.steps} steps does not end on the 1/{n} grid")
    return GridPath(n=n, values=fine.values[::q].copy(), jumps=fine.jumps, seed_tag=fine.seed_tag)
