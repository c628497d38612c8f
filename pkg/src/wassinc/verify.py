"""Executable inequality checks: measured series against certified bounds.

Each check runs the simulations a scenario declares, evaluates a
closed-form bound at every grid time, and returns a BoundReport whose
verdict passes when every margin bound - measured stays above
-slack * bound.  The bounds are continuum statements, so refining the
grid only tightens the comparison; the default 5 percent slack absorbs
first-order integration error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import bounds
from .config import ScenarioConfig, build_family, build_field, sample_initial
from .dynamics import Trajectory, integrate, union_probes, dsup_probe
from .errors import ConfigError
from .measure import ParticleCloud, moment, tail_norm, wasserstein_cost

_ATOL = 1e-15


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Per-time measured values, bound values, and the resulting verdict."""

    kind: str
    times: np.ndarray
    measured: np.ndarray
    bound: np.ndarray
    constants: dict
    slack: float = 0.05
    extras: dict = dc_field(default_factory=dict)

    @property
    def margins(self) -> np.ndarray:
        return self.bound - self.measured

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margins >= -self.slack * self.bound - _ATOL))


def verify(kind: str, config: ScenarioConfig) -> BoundReport:
    try:
        runner = _KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown verify kind {kind!r}") from None
    return runner(config)


def _simulate(config: ScenarioConfig) -> tuple[Trajectory, "NonlocalField"]:
    if config.field is None:
        raise ConfigError("this verify kind needs a 'field' block")
    field = build_field(config.field, config.T)
    start = sample_initial(config.initial, config.N, config.d, config.seed)
    traj = integrate(field, start, config.time_grid(), method="euler")
    return traj, field


def momentum_bound_series(
    grid: np.ndarray,
    measured: np.ndarray,
    rates,
    p: float,
    measure_dependent: bool,
) -> np.ndarray:
    """Bound series C_p (M_p(mu0) + int_0^t m (1 + M)) exp(C_p' ||m||_{1,[0,t]}^p).

    For measure-independent fields M = 0; for measure-dependent ones M(s)
    is the running maximum of the measured moment, the a priori envelope
    the velocity growth actually saw (it dominates the moment of any
    current or delayed measure argument).
    """
    cp, cpp = bounds.C_p(p), bounds.C_p_prime(p)
    envelope = np.maximum.accumulate(measured) if measure_dependent else np.zeros_like(measured)
    bound = np.empty_like(measured)
    growth_int = 0.0
    for k, t in enumerate(grid):
        if k > 0:
            seg = rates.integral("m", float(grid[k - 1]), float(t))
            growth_int += (1.0 + envelope[k - 1]) * seg
        m_int = rates.integral("m", 0.0, float(t))
        bound[k] = cp * (measured[0] + growth_int) * math.exp(cpp * m_int**p)
    return bound


def verify_momentum(config: ScenarioConfig) -> BoundReport:
    """Moment growth of the evolved cloud against its certified envelope."""
    traj, field = _simulate(config)
    p = config.p
    measured = np.array([moment(c, p) for c in traj.clouds])
    bound = momentum_bound_series(traj.grid, measured, field.rates, p, field.measure_dependent)
    return BoundReport(
        kind="momentum",
        times=traj.grid,
        measured=measured,
        bound=bound,
        constants={
            "C_p": bounds.C_p(p),
            "C_p_prime": bounds.C_p_prime(p),
            "measure_dependent": field.measure_dependent,
        },
        slack=config.slack,
    )


def verify_equi_integrability(config: ScenarioConfig) -> BoundReport:
    """Tail mass of the evolved cloud against the shifted tail of the start."""
    traj, field = _simulate(config)
    p = config.p
    radii = [float(r) for r in config.experiment.get("R_list", [1.0, 2.0, 5.0])]
    m_total = field.rates.integral("m", 0.0, config.T)
    ct = bounds.horizon_factor(m_total)
    start = traj.clouds[0]
    times, measured, bound, r_col = [], [], [], []
    for R in radii:
        level = ct * tail_norm(start, max(0.0, R / ct - 1.0), p, shifted=True)
        for k, t in enumerate(traj.grid):
            times.append(float(t))
            measured.append(tail_norm(traj.clouds[k], R, p))
            bound.append(level)
            r_col.append(R)
    return BoundReport(
        kind="equi_integrability",
        times=np.array(times),
        measured=np.array(measured),
        bound=np.array(bound),
        constants={"C_T": ct, "R_list": radii},
        slack=config.slack,
        extras={"R": np.array(r_col)},
    )


def verify_abs_continuity(config: ScenarioConfig) -> BoundReport:
    """Per-step W_p displacement against c_p int m; by the triangle
    inequality consecutive steps also certify every grid pair."""
    traj, field = _simulate(config)
    p = config.p
    m_total = field.rates.integral("m", 0.0, config.T)
    c_p = bounds.abs_continuity_constant(p, moment(traj.clouds[0], p), m_total)
    times, measured, bound = [], [], []
    for k in range(traj.grid.size - 1):
        a, b = float(traj.grid[k]), float(traj.grid[k + 1])
        times.append(b)
        measured.append(wasserstein_cost(traj.clouds[k], traj.clouds[k + 1], p))
        bound.append(c_p * field.rates.integral("m", a, b))
    return BoundReport(
        kind="abs_continuity",
        times=np.array(times),
        measured=np.array(measured),
        bound=np.array(bound),
        constants={"c_p": c_p},
        slack=config.slack,
    )


def _two_curves(config: ScenarioConfig):
    if config.field is None:
        raise ConfigError("gronwall kinds need a 'field' block for the first curve")
    w_spec = config.experiment.get("w")
    if w_spec is None:
        raise ConfigError("missing field 'w' in config.experiment (second velocity field)")
    ref_init = config.experiment.get("ref_initial")
    if ref_init is None:
        raise ConfigError("missing field 'ref_initial' in config.experiment")
    v = build_field(config.field, config.T)
    w = build_field(w_spec, config.T, context="config.experiment.w")
    mu0 = sample_initial(config.initial, config.N, config.d, config.seed)
    ref_seed = int(config.experiment.get("ref_seed", config.seed + 1))
    nu0 = sample_initial(ref_init, config.N, config.d, ref_seed)
    grid = config.time_grid()
    mu = integrate(v, mu0, grid, method="euler")
    nu = integrate(w, nu0, grid, method="euler")
    return v, w, mu, nu


def _velocity_gap(v, w, mu_cloud, nu_cloud, t, R=math.inf):
    pts = nu_cloud.points if math.isinf(R) else nu_cloud.points[nu_cloud.norms() <= R]
    if pts.shape[0] == 0:
        return 0.0
    gap = v.rule(t, mu_cloud, pts) - w.rule(t, nu_cloud, pts)
    return float(np.max(np.linalg.norm(gap, axis=1)))


def verify_gronwall_global(config: ScenarioConfig) -> BoundReport:
    """W_p between two curves against the global stability estimate."""
    v, w, mu, nu = _two_curves(config)
    p = config.p
    cp, cpp = bounds.C_p(p), bounds.C_p_prime(p)
    w0 = wasserstein_cost(mu.clouds[0], nu.clouds[0], p)
    grid = mu.grid
    measured = np.array(
        [wasserstein_cost(mu.clouds[k], nu.clouds[k], p) for k in range(grid.size)]
    )
    bound = np.empty_like(measured)
    disc_int = 0.0
    for k, t in enumerate(grid):
        if k > 0:
            prev_t = float(grid[k - 1])
            gap = _velocity_gap(v, w, mu.clouds[k - 1], nu.clouds[k - 1], prev_t)
            disc_int += gap * (float(t) - prev_t)
        l_int = v.rates.integral("l", 0.0, float(t))
        bound[k] = cp * (w0 + disc_int) * math.exp(cpp * l_int**p)
    return BoundReport(
        kind="gronwall_global",
        times=grid,
        measured=measured,
        bound=bound,
        constants={"C_p": cp, "C_p_prime": cpp, "W_p_initial": w0},
        slack=config.slack,
    )


def verify_gronwall_local(config: ScenarioConfig) -> BoundReport:
    """Localised stability estimate: ball-restricted discrepancy plus the
    tail error term, which is what keeps the bound valid when the curves
    separate outside the observation ball."""
    R = config.experiment.get("R")
    if R is None:
        raise ConfigError("missing field 'R' in config.experiment (observation radius)")
    R = float(R)
    v, w, mu, nu = _two_curves(config)
    p = config.p
    cp, cpp = bounds.C_p(p), bounds.C_p_prime(p)
    joint = v.rates.maximum(w.rates)
    ct = bounds.horizon_factor(joint.integral("m", 0.0, config.T))
    tail = tail_norm(nu.clouds[0], max(0.0, R / ct - 1.0), p, shifted=True)
    w0 = wasserstein_cost(mu.clouds[0], nu.clouds[0], p)
    grid = mu.grid
    measured = np.array(
        [wasserstein_cost(mu.clouds[k], nu.clouds[k], p) for k in range(grid.size)]
    )
    bound = np.empty_like(measured)
    bare = np.empty_like(measured)
    e_term = np.empty_like(measured)
    disc_int = 0.0
    for k, t in enumerate(grid):
        if k > 0:
            prev_t = float(grid[k - 1])
            gap = _velocity_gap(v, w, mu.clouds[k - 1], nu.clouds[k - 1], prev_t, R)
            disc_int += gap * (float(t) - prev_t)
        l_int = v.rates.integral("l", 0.0, float(t))
        e_term[k] = 2.0 * joint.integral("m", 0.0, float(t)) * (1.0 + ct) * tail
        growth = math.exp(cpp * l_int**p)
        bound[k] = cp * (w0 + disc_int + e_term[k]) * growth
        bare[k] = cp * (w0 + disc_int) * growth
    return BoundReport(
        kind="gronwall_local",
        times=grid,
        measured=measured,
        bound=bound,
        constants={"C_p": cp, "C_p_prime": cpp, "C_T": ct, "R": R, "W_p_initial": w0},
        slack=config.slack,
        extras={"E_term": e_term, "bound_without_tail": bare},
    )


def verify_hypotheses_probe(config: ScenarioConfig) -> BoundReport:
    """Sampled growth / Lipschitz / measure-Lipschitz ratios against 1.

    Draws at least 1000 (t, cloud, x) triples from jittered versions of
    the scenario's initial sampler and reports each observed ratio against
    the declared rate; the bound row is the constant 1.
    """
    n_samples = max(1000, int(config.experiment.get("samples", 1000)))
    if config.family is not None:
        family = build_family(config.family, config.T)
        rates = family.rates
        controls = family.controls
        measure_dependent = family.measure_dependent

        def eval_rule(t, cloud, u, X):
            return family.rule(t, cloud, u, X)

    elif config.field is not None:
        field = build_field(config.field, config.T)
        rates = field.rates
        controls = (None,)
        measure_dependent = field.measure_dependent

        def eval_rule(t, cloud, u, X):
            return field.rule(t, cloud, X)

    else:
        raise ConfigError("hypotheses_probe needs a 'field' or 'family' block")

    rng = np.random.Generator(np.random.Philox(key=np.uint64(config.seed)))
    p = config.p
    base = sample_initial(config.initial, config.N, config.d, config.seed).points

    def jitter_cloud():
        scale = rng.uniform(0.5, 2.0)
        shift = rng.normal(0.0, 0.5, config.d)
        return ParticleCloud(scale * base + shift)

    times, ratios, labels = [], [], []
    max_ratio = {"m": 0.0, "l": 0.0, "L": 0.0}
    for _ in range(n_samples):
        t = float(rng.uniform(0.0, config.T))
        cloud = jitter_cloud()
        u = controls[int(rng.integers(len(controls)))]
        x = cloud.points[int(rng.integers(cloud.n))][None, :]
        mval = rates.at("m", t)
        vx = eval_rule(t, cloud, u, x)
        den = mval * (1.0 + float(np.linalg.norm(x)) + moment(cloud, p))
        num = float(np.linalg.norm(vx))
        r_m = 0.0 if num <= _ATOL else num / den
        times.append(t)
        ratios.append(r_m)
        labels.append("m")
        max_ratio["m"] = max(max_ratio["m"], r_m)

        y = x + rng.normal(0.0, 0.3, config.d)
        lval = rates.at("l", t)
        num = float(np.linalg.norm(vx - eval_rule(t, cloud, u, y)))
        den = lval * float(np.linalg.norm(x - y))
        r_l = 0.0 if num <= _ATOL else num / den
        times.append(t)
        ratios.append(r_l)
        labels.append("l")
        max_ratio["l"] = max(max_ratio["l"], r_l)

        if measure_dependent:
            other = jitter_cloud()
            probes = union_probes(cloud.points, other.points)
            best = min(
                dsup_probe(
                    lambda X: eval_rule(t, cloud, u, X),
                    lambda X, uu=uu: eval_rule(t, other, uu, X),
                    probes,
                )
                for uu in controls
            )
            den = rates.at("L", t) * wasserstein_cost(cloud, other, p)
            r_L = 0.0 if best <= _ATOL else best / den
            times.append(t)
            ratios.append(r_L)
            labels.append("L")
            max_ratio["L"] = max(max_ratio["L"], r_L)

    measured = np.array(ratios)
    constants = {"max_ratio_" + k: v for k, v in max_ratio.items()}
    constants["n_triples"] = n_samples
    return BoundReport(
        kind="hypotheses_probe",
        times=np.array(times),
        measured=measured,
        bound=np.ones_like(measured),
        constants=constants,
        slack=config.slack,
        extras={"rate": np.array(labels)},
    )


_KINDS = {
    "momentum": verify_momentum,
    "equi_integrability": verify_equi_integrability,
    "abs_continuity": verify_abs_continuity,
    "gronwall_global": verify_gronwall_global,
    "gronwall_local": verify_gronwall_local,
    "hypotheses_probe": verify_hypotheses_probe,
}
