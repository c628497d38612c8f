"""Nonlocal velocity fields and the characteristics integrator.

A velocity field here is a rule (t, cloud, x) -> vector together with
declared rate functions: a growth rate m, a spatial Lipschitz rate l, and a
measure-Lipschitz rate L, all piecewise constant in time with exact
interval integrals.  Moving every particle of a cloud along the field's
characteristics advances the empirical measure itself, and a Trajectory
records the grid of clouds produced this way.

Two probe metrics between fields at a fixed time are provided: the
supremum gap over a finite probe set (a lower estimate of the true uniform
gap, exact for constant fields) and a weighted sum of truncated suprema
over growing balls, reported together with its truncation tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BlowUpError, ShapeMismatchError
from .measure import ParticleCloud


@dataclass(frozen=True, eq=False)
class RateFunctions:
    """Piecewise-constant nonnegative rates m, l, L on [0, T].

    ``breakpoints`` has K + 1 strictly increasing entries spanning [0, T];
    each rate holds K segment values, constant on [t_k, t_{k+1}).  Interval
    integrals are computed segment by segment, hence exact for this data.
    """

    breakpoints: np.ndarray
    m_values: np.ndarray
    l_values: np.ndarray
    L_values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        if bp.ndim != 1 or bp.size < 2 or not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing with at least two entries")
        object.__setattr__(self, "breakpoints", bp)
        for name in ("m_values", "l_values", "L_values"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (bp.size - 1,):
                raise ValueError(f"{name} must hold one value per segment")
            if np.any(v < 0):
                raise ValueError(f"{name} must be nonnegative")
            object.__setattr__(self, name, v)

    @classmethod
    def constant(cls, m: float, l: float, L: float, T: float) -> "RateFunctions":
        return cls(
            breakpoints=np.array([0.0, float(T)]),
            m_values=np.array([float(m)]),
            l_values=np.array([float(l)]),
            L_values=np.array([float(L)]),
        )

    @property
    def duration(self) -> float:
        return float(self.breakpoints[-1])

    def _values(self, which: str) -> np.ndarray:
        return {"m": self.m_values, "l": self.l_values, "L": self.L_values}[which]

    def at(self, which: str, t: float) -> float:
        """Left-constant evaluation, clamped to [0, T]."""
        vals = self._values(which)
        idx = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        idx = min(max(idx, 0), vals.size - 1)
        return float(vals[idx])

    def integral(self, which: str, a: float, b: float) -> float:
        """Exact integral of the chosen rate over [a, b] ∩ [0, T]."""
        if b < a:
            raise ValueError("integration bounds must satisfy a <= b")
        bp = self.breakpoints
        vals = self._values(which)
        a = max(a, bp[0])
        b = min(b, bp[-1])
        if b <= a:
            return 0.0
        lo = np.maximum(bp[:-1], a)
        hi = np.minimum(bp[1:], b)
        overlap = np.clip(hi - lo, 0.0, None)
        return float(math.fsum((vals * overlap).tolist()))

    def maximum(self, other: "RateFunctions") -> "RateFunctions":
        """Pointwise max of the m/l/L rates of two families of rates."""
        bp = np.unique(np.concatenate([self.breakpoints, other.breakpoints]))
        mids = 0.5 * (bp[:-1] + bp[1:])
        return RateFunctions(
            breakpoints=bp,
            m_values=np.array([max(self.at("m", t), other.at("m", t)) for t in mids]),
            l_values=np.array([max(self.at("l", t), other.at("l", t)) for t in mids]),
            L_values=np.array([max(self.at("L", t), other.at("L", t)) for t in mids]),
        )


FieldRule = Callable[[float, ParticleCloud, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class NonlocalField:
    """Velocity field rule (t, cloud, points) -> velocities with its rates.

    ``rule`` must be pure: given the same arguments it returns the same
    array, with no hidden state.  ``measure_dependent`` records whether the
    rule actually reads its cloud argument; measure-independent fields
    admit the tighter moment bounds.
    """

    rule: FieldRule
    rates: RateFunctions
    label: str = ""
    measure_dependent: bool = False

    def __call__(self, t: float, cloud: ParticleCloud, points: np.ndarray) -> np.ndarray:
        return self.rule(t, cloud, points)

    def slice_at(self, t: float, cloud: ParticleCloud) -> Callable[[np.ndarray], np.ndarray]:
        """Freeze time and measure arguments, leaving a map on points."""
        return lambda points: self.rule(t, cloud, points)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A time grid with one cloud per node, particle identity preserved.

    Row i of every cloud is the same characteristic path throughout.
    Off-grid evaluation returns the nearest node at or before t (left
    constant); times before the grid start return the initial cloud.
    """

    grid: np.ndarray
    clouds: tuple

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size < 1 or not np.all(np.diff(g) > 0):
            raise ShapeMismatchError("grid must be one-dimensional and strictly increasing")
        clouds = tuple(self.clouds)
        if len(clouds) != g.size:
            raise ShapeMismatchError(
                f"need one cloud per grid node, got {len(clouds)} clouds for {g.size} nodes"
            )
        n, d = clouds[0].n, clouds[0].d
        for c in clouds:
            if c.n != n or c.d != d:
                raise ShapeMismatchError("all clouds must share particle count and dimension")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "clouds", clouds)

    @property
    def n_particles(self) -> int:
        return self.clouds[0].n

    @property
    def dim(self) -> int:
        return self.clouds[0].d

    def _snap(self) -> float:
        if self.grid.size < 2:
            return 0.0
        return 1e-9 * float(np.min(np.diff(self.grid)))

    def node_index(self, t: float) -> int:
        """Index of the nearest node at or before t (snapped within 1e-9 dt)."""
        idx = int(np.searchsorted(self.grid, t + self._snap(), side="right")) - 1
        return min(max(idx, 0), self.grid.size - 1)

    def at(self, t: float) -> ParticleCloud:
        return self.clouds[self.node_index(t)]

    def positions(self) -> np.ndarray:
        """Stacked positions, shape (nodes, N, d)."""
        return np.stack([c.points for c in self.clouds])


@dataclass(frozen=True, eq=False)
class FrozenMeasure:
    """Measure source that reads a fixed trajectory at time t - delay.

    For t < delay the lookup lands below the grid start and yields the
    trajectory's initial cloud.
    """

    trajectory: Trajectory
    delay: float = 0.0

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be nonnegative")

    def at(self, t: float) -> ParticleCloud:
        return self.trajectory.at(t - self.delay)


def integrate(
    field: NonlocalField,
    start: ParticleCloud,
    grid: Sequence[float],
    method: str = "euler",
    measure_source: str | FrozenMeasure = "self",
) -> Trajectory:
    """Advance every particle of ``start`` along the field over ``grid``.

    In ``self`` mode the measure argument of the rule is the integrator's
    own current cloud (for rk4, each stage sees the stage's intermediate
    cloud).  A FrozenMeasure source instead reads a fixed trajectory at
    t - delay, which is how delayed and iterated constructions reuse this
    routine.  Raises BlowUpError naming the step if a coordinate leaves
    the finite range.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 1:
        raise ShapeMismatchError("grid must be a nonempty one-dimensional array")
    if g.size >= 2 and not np.all(np.diff(g) > 0):
        raise ShapeMismatchError("grid must be strictly increasing")
    if method not in ("euler", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    frozen = measure_source if isinstance(measure_source, FrozenMeasure) else None
    if frozen is None and measure_source != "self":
        raise ValueError("measure_source must be 'self' or a FrozenMeasure")

    X = start.points.copy()
    clouds = [ParticleCloud(X)]
    for k in range(g.size - 1):
        t0, t1 = float(g[k]), float(g[k + 1])
        dt = t1 - t0
        if method == "euler":
            M0 = frozen.at(t0) if frozen else clouds[-1]
            X = X + dt * field.rule(t0, M0, X)
        else:
            X = _rk4_step(field, X, t0, dt, frozen, clouds[-1])
        if not np.all(np.isfinite(X)):
            raise BlowUpError(
                f"non-finite coordinate after step {k + 1} (t = {t1:.6g}) of field {field.label!r}"
            )
        clouds.append(ParticleCloud(X))
    return Trajectory(grid=g, clouds=tuple(clouds))


def _rk4_step(field, X, t0, dt, frozen, current_cloud):
    def measure_for(stage_t, stage_points):
        if frozen is not None:
            return frozen.at(stage_t)
        return ParticleCloud(stage_points)

    th = t0 + 0.5 * dt
    t1 = t0 + dt
    k1 = field.rule(t0, measure_for(t0, X) if frozen else current_cloud, X)
    Y2 = X + 0.5 * dt * k1
    k2 = field.rule(th, measure_for(th, Y2), Y2)
    Y3 = X + 0.5 * dt * k2
    k3 = field.rule(th, measure_for(th, Y3), Y3)
    Y4 = X + dt * k3
    k4 = field.rule(t1, measure_for(t1, Y4), Y4)
    return X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def dsup_probe(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    probes: np.ndarray,
) -> float:
    """Max over probe points of |f(x) - g(x)|.

    A lower estimate of the uniform gap between two fields at a fixed
    time; exact when both fields are constant in x or the probes exhaust
    the relevant support (e.g. the atoms of an empirical measure).
    """
    pts = np.asarray(probes, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.size == 0:
        raise ValueError("probe set must be nonempty")
    diff = np.asarray(f(pts)) - np.asarray(g(pts))
    return float(np.max(np.linalg.norm(diff, axis=1)))


def ball_grid(radius: float, dim: int, spacing: float) -> np.ndarray:
    """Lattice of spacing <= ``spacing`` covering the closed ball B(0, radius).

    Axis extremes +-radius are always included so suprema of radial fields
    are attained on the grid.
    """
    if radius <= 0 or spacing <= 0:
        raise ValueError("radius and spacing must be positive")
    per_axis = 2 * int(math.ceil(radius / spacing)) + 1
    axis = np.linspace(-radius, radius, per_axis)
    if dim == 1:
        return axis[:, None]
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    keep = np.linalg.norm(pts, axis=1) <= radius * (1 + 1e-12)
    return pts[keep]


def dcc_estimate(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    K: int,
    grid_density: float = 0.25,
    dim: int = 1,
) -> tuple[float, float]:
    """Truncated compact-convergence distance between two fields at a time.

    Returns (value, tail) with value = sum_{k=1..K} 2^{-k} min(1, s_k),
    where s_k estimates the supremum gap over B(0, k) on a lattice of the
    given density, and tail = 2^{-K} bounds the dropped terms.  The true
    distance lies in [value, value + tail + grid error].
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    total = 0.0
    for k in range(1, K + 1):
        probes = ball_grid(float(k), dim, grid_density)
        sup_k = dsup_probe(f, g, probes)
        total += 2.0 ** (-k) * min(1.0, sup_k)
    return total, 2.0 ** (-K)


def union_probes(*point_sets: np.ndarray) -> np.ndarray:
    """Stack probe arrays; a 1-d input is read as a single point in R^d."""
    arrays = []
    for pts in point_sets:
        a = np.asarray(pts, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        if a.size:
            arrays.append(a)
    if not arrays:
        raise ValueError("probe union must be nonempty")
    return np.vstack(arrays)
