"""Scenario configuration: JSON schema, parsing, and initial samplers.

A scenario file is a JSON object with the fields

    p        moment order, real >= 1
    T        time horizon, real > 0
    d, N     dimension and particle count, ints >= 1
    seed     unsigned int feeding the counter-based generator
    initial  sampler spec, one of
               {"kind": "gaussian", "sigma": s}
               {"kind": "uniform", "halfwidth": h}
               {"kind": "two_clusters", "gap": g, "sigma": s}
               {"kind": "atoms", "atoms": [[...], ...]}
    field    {"label": ..., "rates": {"m": ..., "l": ..., "L": ...}, ...params}
    family   {"label": ..., "controls": [...], "rates": {...}}
    grid     {"steps": M} or {"dt": x}
    experiment  {"kind": "simulate" | "peano" | "filippov" | "relax" | "verify", ...}
    slack    relative slack for verdicts, default 0.05

Rates must be declared explicitly (scalars for constant rates, or
{"breakpoints": [...], "values": [...]} per rate); they are never inferred
from the rule.  Samplers draw from a Philox counter-based generator keyed
by the seed, one (N, d) standard-normal or uniform block per cloud, so a
given (config, seed) pair reproduces byte-identical outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import family_from_label, field_from_label
from .dynamics import NonlocalField, RateFunctions
from .errors import ConfigError
from .inclusion import ControlledFamily
from .measure import ParticleCloud

VERIFY_KINDS = (
    "momentum",
    "equi_integrability",
    "abs_continuity",
    "gronwall_global",
    "gronwall_local",
    "hypotheses_probe",
)
EXPERIMENT_KINDS = ("simulate", "peano", "filippov", "relax", "verify")


@dataclass(frozen=True)
class ScenarioConfig:
    p: float
    T: float
    d: int
    N: int
    seed: int
    initial: dict
    grid: dict
    experiment: dict
    field: dict | None = None
    family: dict | None = None
    slack: float = 0.05

    def steps(self) -> int:
        if "steps" in self.grid:
            return int(self.grid["steps"])
        if "dt" in self.grid:
            return max(1, int(round(self.T / float(self.grid["dt"]))))
        raise ConfigError("grid needs either 'steps' or 'dt'")

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps() + 1)


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"missing field '{key}' in {context}")
    return mapping[key]


def load_config(path: str | Path) -> ScenarioConfig:
    with open(path) as fh:
        return parse_config(json.load(fh))


def parse_config(raw: dict) -> ScenarioConfig:
    p = float(_require(raw, "p", "config"))
    if p < 1:
        raise ConfigError(f"'p' must be >= 1, got {p}")
    T = float(_require(raw, "T", "config"))
    if T <= 0:
        raise ConfigError(f"'T' must be positive, got {T}")
    d = int(_require(raw, "d", "config"))
    N = int(_require(raw, "N", "config"))
    if d < 1 or N < 1:
        raise ConfigError("'d' and 'N' must be >= 1")
    seed = int(_require(raw, "seed", "config"))
    initial = _require(raw, "initial", "config")
    _require(initial, "kind", "config.initial")
    grid = _require(raw, "grid", "config")
    experiment = _require(raw, "experiment", "config")
    kind = _require(experiment, "kind", "config.experiment")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    return ScenarioConfig(
        p=p,
        T=T,
        d=d,
        N=N,
        seed=seed,
        initial=dict(initial),
        grid=dict(grid),
        experiment=dict(experiment),
        field=dict(raw["field"]) if raw.get("field") is not None else None,
        family=dict(raw["family"]) if raw.get("family") is not None else None,
        slack=float(raw.get("slack", 0.05)),
    )


def parse_rates(spec: dict, T: float, context: str) -> RateFunctions:
    """Rates from a config block; scalars mean constant-in-time."""
    if spec is None:
        raise ConfigError(f"missing field 'rates' in {context} (rates are never inferred)")
    pieces = {}
    for name in ("m", "l", "L"):
        val = _require(spec, name, f"{context}.rates")
        if isinstance(val, (int, float)):
            pieces[name] = (np.array([0.0, T]), np.array([float(val)]))
        else:
            bp = np.asarray(_require(val, "breakpoints", f"{context}.rates.{name}"), dtype=float)
            vv = np.asarray(_require(val, "values", f"{context}.rates.{name}"), dtype=float)
            pieces[name] = (bp, vv)
    bps = [bp for bp, _ in pieces.values()]
    if not all(np.array_equal(bps[0], b) for b in bps[1:]):
        merged = np.unique(np.concatenate(bps))
        def resample(bp, vv):
            out = []
            for t in 0.5 * (merged[:-1] + merged[1:]):
                k = min(max(int(np.searchsorted(bp, t, "right")) - 1, 0), vv.size - 1)
                out.append(vv[k])
            return np.array(out)
        return RateFunctions(
            breakpoints=merged,
            m_values=resample(*pieces["m"]),
            l_values=resample(*pieces["l"]),
            L_values=resample(*pieces["L"]),
        )
    return RateFunctions(
        breakpoints=bps[0],
        m_values=pieces["m"][1],
        l_values=pieces["l"][1],
        L_values=pieces["L"][1],
    )


def build_field(spec: dict, T: float, context: str = "config.field") -> NonlocalField:
    label = _require(spec, "label", context)
    rates = parse_rates(spec.get("rates"), T, context)
    params = {k: v for k, v in spec.items() if k not in ("label", "rates")}
    return field_from_label(label, rates, params)


def build_family(spec: dict, T: float, context: str = "config.family") -> ControlledFamily:
    label = _require(spec, "label", context)
    controls = _require(spec, "controls", context)
    rates = parse_rates(spec.get("rates"), T, context)
    return family_from_label(label, controls, rates)


def sample_initial(spec: dict, N: int, d: int, seed: int) -> ParticleCloud:
    """Draw the initial cloud; algorithms fixed here for reproducibility.

    gaussian:      sigma * Z with one standard_normal((N, d)) block
    uniform:       one uniform(-h, h, (N, d)) block
    two_clusters:  first ceil(N/2) rows centered at +gap/2 e1, the rest at
                   -gap/2 e1, plus sigma * standard_normal((N, d))
    atoms:         explicit list, must match (N, d)
    """
    kind = _require(spec, "kind", "initial")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    if kind == "gaussian":
        sigma = float(_require(spec, "sigma", "initial(gaussian)"))
        return ParticleCloud(sigma * rng.standard_normal((N, d)))
    if kind == "uniform":
        half = float(_require(spec, "halfwidth", "initial(uniform)"))
        return ParticleCloud(rng.uniform(-half, half, (N, d)))
    if kind == "two_clusters":
        gap = float(_require(spec, "gap", "initial(two_clusters)"))
        sigma = float(_require(spec, "sigma", "initial(two_clusters)"))
        centers = np.zeros((N, d))
        n_right = (N + 1) // 2
        centers[:n_right, 0] = gap / 2.0
        centers[n_right:, 0] = -gap / 2.0
        return ParticleCloud(centers + sigma * rng.standard_normal((N, d)))
    if kind == "atoms":
        atoms = np.asarray(_require(spec, "atoms", "initial(atoms)"), dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        if atoms.shape != (N, d):
            raise ConfigError(
                f"initial atoms have shape {atoms.shape}, config declares (N, d) = ({N}, {d})"
            )
        return ParticleCloud(atoms)
    raise ConfigError(f"unknown initial sampler kind {kind!r}")
