"""Set-valued dynamics over finite control sets and the delayed Euler scheme.

An admissible-velocity set is discretized as a finite list of controls
plus a rule (t, cloud, u, x) -> vector sharing one set of rate functions.
A measurable velocity selection becomes a piecewise-constant control
index per sub-interval of a fine grid.

``peano_solve`` builds a trajectory-selection pair by splitting the
horizon into n blocks and, on every euler sub-interval, choosing a
control against the cloud delayed by one block (the start cloud stands in
for negative times) and advancing with that same delayed cloud as the
measure argument.  Sub-interval membership in the delayed velocity set is
exact by construction and can be re-certified with
``inclusion_residual``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .dynamics import NonlocalField, RateFunctions, Trajectory, dsup_probe, union_probes
from .errors import BlowUpError, ShapeMismatchError
from .measure import ParticleCloud, wasserstein_cost

FamilyRule = Callable[[float, ParticleCloud, Any, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ControlledFamily:
    """Finite control set U with a shared rule and rate functions.

    Each fixed-u slice is a valid velocity field under the shared rates.
    ``convex_images`` is informational: the delayed Euler scheme still
    runs without it, but its existence guarantee may fail.
    """

    controls: tuple
    rule: FamilyRule
    rates: RateFunctions
    convex_images: bool = False
    label: str = ""
    measure_dependent: bool = False

    def __post_init__(self):
        if len(self.controls) == 0:
            raise ValueError("control set must be nonempty")
        object.__setattr__(self, "controls", tuple(self.controls))

    @property
    def size(self) -> int:
        return len(self.controls)

    def field_for(self, index: int) -> NonlocalField:
        """The fixed-control slice as a standalone velocity field."""
        u = self.controls[index]

        def rule(t, cloud, X):
            return self.rule(t, cloud, u, X)

        return NonlocalField(
            rule=rule,
            rates=self.rates,
            label=f"{self.label}[{index}]",
            measure_dependent=self.measure_dependent,
        )

    def slice_at(self, t: float, cloud: ParticleCloud, index: int):
        u = self.controls[index]
        return lambda X: self.rule(t, cloud, u, X)


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Piecewise-constant control index per interval [t_k, t_{k+1})."""

    grid: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        idx = np.asarray(self.indices, dtype=int)
        if g.ndim != 1 or g.size < 2 or not np.all(np.diff(g) > 0):
            raise ShapeMismatchError("signal grid must be strictly increasing with >= 2 nodes")
        if idx.shape != (g.size - 1,):
            raise ShapeMismatchError("need one control index per grid interval")
        if np.any(idx < 0):
            raise ValueError("control indices must be nonnegative")
        g = g.copy()
        g.setflags(write=False)
        idx = idx.copy()
        idx.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "indices", idx)

    @property
    def n_intervals(self) -> int:
        return self.indices.size

    def _snap(self) -> float:
        return 1e-9 * float(np.min(np.diff(self.grid)))

    def index_at(self, t: float) -> int:
        k = int(np.searchsorted(self.grid, t + self._snap(), side="right")) - 1
        return int(self.indices[min(max(k, 0), self.indices.size - 1)])


def signal_field(family: ControlledFamily, signal: ControlSignal) -> NonlocalField:
    """Velocity field that follows the signal's control on each interval."""
    for k in signal.indices:
        if k >= family.size:
            raise ValueError(f"signal index {k} outside family of size {family.size}")

    def rule(t, cloud, X):
        u = family.controls[signal.index_at(t)]
        return family.rule(t, cloud, u, X)

    return NonlocalField(
        rule=rule,
        rates=family.rates,
        label=f"{family.label}|signal",
        measure_dependent=family.measure_dependent,
    )


def _select_control(
    family: ControlledFamily,
    t: float,
    delayed_cloud: ParticleCloud,
    current_cloud: ParticleCloud,
    strategy: str,
    rng,
) -> int:
    if strategy == "first":
        return 0
    if strategy == "min_norm":
        probes = union_probes(delayed_cloud.points, current_cloud.points)
        zero = lambda X: np.zeros_like(X)
        values = [
            dsup_probe(family.slice_at(t, delayed_cloud, i), zero, probes)
            for i in range(family.size)
        ]
        return int(np.argmin(values))
    if strategy == "random":
        return int(rng.integers(family.size))
    raise ValueError(f"unknown strategy {strategy!r}")


def peano_solve(
    family: ControlledFamily,
    start: ParticleCloud,
    n: int,
    substeps: int = 1,
    strategy: str = "first",
    seed: int | None = None,
) -> tuple[Trajectory, ControlSignal]:
    """Delayed semi-discrete Euler construction of a trajectory-selection pair.

    [0, T] is split into n blocks of ``substeps`` euler sub-intervals.  On
    each sub-interval the control is chosen by ``strategy`` against the
    cloud one block earlier (the start cloud before time T/n) and the
    particles advance with that delayed cloud as the measure argument, so
    the returned signal satisfies the delayed inclusion exactly at every
    sub-interval.

    Strategies: ``first`` picks index 0, ``min_norm`` the control whose
    field is smallest in sup norm over the probe atoms, ``random`` a
    seeded uniform draw.  Ties break to the lowest index.
    """
    if n < 1 or substeps < 1:
        raise ValueError("n and substeps must be at least 1")
    if strategy == "random" and seed is None:
        raise ValueError("random strategy needs a seed")
    if not family.convex_images:
        warnings.warn(
            "control family is not flagged convex-valued; the delayed scheme "
            "still runs but its existence guarantee may fail",
            UserWarning,
            stacklevel=2,
        )
    rng = np.random.Generator(np.random.Philox(key=seed)) if strategy == "random" else None

    T = family.rates.duration
    steps = n * substeps
    grid = np.linspace(0.0, T, steps + 1)
    X = start.points.copy()
    clouds = [ParticleCloud(X)]
    indices = np.empty(steps, dtype=int)
    for k in range(steps):
        t0 = float(grid[k])
        dt = float(grid[k + 1] - grid[k])
        # delay of one block == exactly `substeps` grid nodes
        delayed = clouds[max(0, k - substeps)]
        u_idx = _select_control(family, t0, delayed, clouds[-1], strategy, rng)
        vel = family.rule(t0, delayed, family.controls[u_idx], X)
        X = X + dt * vel
        if not np.all(np.isfinite(X)):
            raise BlowUpError(f"non-finite coordinate after sub-interval {k + 1} (t = {grid[k + 1]:.6g})")
        clouds.append(ParticleCloud(X))
        indices[k] = u_idx
    traj = Trajectory(grid=grid, clouds=tuple(clouds))
    return traj, ControlSignal(grid=grid, indices=indices)


def inclusion_residual(
    traj: Trajectory,
    signal: ControlSignal,
    family: ControlledFamily,
    delay: float,
    probes: np.ndarray | None = None,
    used_family: ControlledFamily | None = None,
) -> np.ndarray:
    """Probe-level membership defect of a trajectory-selection pair.

    For every signal sub-interval, the distance (sup over probes) from the
    field slice the pair actually used to the nearest admissible slice of
    ``family`` evaluated on the delayed cloud.  Zero certifies membership
    at probe level.  By default the used slice is reconstructed from
    ``signal`` over ``family`` itself, which makes the residual vanish
    identically for ``peano_solve`` output; pass ``used_family`` to check
    a pair produced by different dynamics against this family.
    """
    src = used_family if used_family is not None else family
    out = np.empty(signal.n_intervals)
    for k in range(signal.n_intervals):
        t0 = float(signal.grid[k])
        delayed = traj.at(t0 - delay)
        pts = probes if probes is not None else union_probes(traj.at(t0).points, delayed.points)
        used = src.slice_at(t0, delayed, int(signal.indices[k]))
        out[k] = min(
            dsup_probe(used, family.slice_at(t0, delayed, i), pts) for i in range(family.size)
        )
    return out


def refinement_study(
    family: ControlledFamily,
    start: ParticleCloud,
    n_list: Sequence[int],
    substeps: int,
    strategy: str,
    p: float,
    seed: int | None = None,
) -> list[tuple[int, int, float]]:
    """Distances between consecutive delayed-Euler refinements.

    Runs ``peano_solve`` for each n and reports, per consecutive pair,
    the sup over the coarsest solve's grid of W_p between the two
    trajectories.  The reported numbers are recorded observations, not a
    convergence guarantee.
    """
    ns = list(n_list)
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("n_list must be strictly increasing with at least two entries")
    solutions = [peano_solve(family, start, n, substeps, strategy, seed)[0] for n in ns]
    common = solutions[0].grid
    rows = []
    for (n_a, traj_a), (n_b, traj_b) in zip(
        zip(ns, solutions), zip(ns[1:], solutions[1:])
    ):
        sup = max(wasserstein_cost(traj_a.at(t), traj_b.at(t), p) for t in common)
        rows.append((n_a, n_b, sup))
    return rows
