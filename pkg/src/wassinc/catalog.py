"""Built-in velocity fields and control families addressable by label.

Labels understood by scenario files:

* ``zero``                      v = 0
* ``constant:<c1,..,cd>``       v = c
* ``linear_decay``              v = -x
* ``mean_attraction:<kappa>``   v = kappa (mean(mu) - x)
* ``bounded_kernel``            v(x) = (1/N) sum_j -(x - y_j) / (1 + |x - y_j|)
* ``rotation``                  v = (-x2, x1), d = 2 only

Control families:

* ``constants``  controls are vectors u, v = u
* ``gain``       controls are scalars k, v = -k x
* ``mean_gain``  controls are scalars k, v = k (mean(mu) - x)

Natural rates for each label are documented next to its builder; scenario
files must still declare rates explicitly.
"""

from __future__ import annotations

import numpy as np

from .dynamics import NonlocalField, RateFunctions
from .errors import ConfigError
from .inclusion import ControlledFamily
from .measure import ParticleCloud


def zero_field(rates: RateFunctions) -> NonlocalField:
    """Zero velocity; natural rates m = l = L = 0."""

    def rule(t, cloud, X):
        return np.zeros_like(X)

    return NonlocalField(rule=rule, rates=rates, label="zero")


def constant_field(vector: np.ndarray, rates: RateFunctions) -> NonlocalField:
    """Constant velocity c; natural rates m = |c|, l = L = 0."""
    c = np.asarray(vector, dtype=float)

    def rule(t, cloud, X):
        return np.broadcast_to(c, X.shape).copy()

    return NonlocalField(rule=rule, rates=rates, label=f"constant:{c.tolist()}")


def linear_decay_field(rates: RateFunctions) -> NonlocalField:
    """v = -x; natural rates m = 1, l = 1, L = 0."""

    def rule(t, cloud, X):
        return -X

    return NonlocalField(rule=rule, rates=rates, label="linear_decay")


def mean_attraction_field(kappa: float, rates: RateFunctions) -> NonlocalField:
    """v = kappa (mean(mu) - x); natural rates m = l = L = kappa."""
    kappa = float(kappa)

    def rule(t, cloud, X):
        return kappa * (cloud.mean()[None, :] - X)

    return NonlocalField(
        rule=rule, rates=rates, label=f"mean_attraction:{kappa}", measure_dependent=True
    )


def bounded_kernel_field(rates: RateFunctions) -> NonlocalField:
    """Saturating pairwise attraction; natural rates m = 1, l = 1, L = 1."""

    def rule(t, cloud, X):
        diff = X[:, None, :] - cloud.points[None, :, :]
        norms = np.linalg.norm(diff, axis=2, keepdims=True)
        return (-diff / (1.0 + norms)).mean(axis=1)

    return NonlocalField(rule=rule, rates=rates, label="bounded_kernel", measure_dependent=True)


def rotation_field(rates: RateFunctions) -> NonlocalField:
    """Planar rotation v = (-x2, x1); natural rates m = 1, l = 1, L = 0."""

    def rule(t, cloud, X):
        if X.shape[1] != 2:
            raise ConfigError("rotation field requires dimension d = 2")
        return np.stack([-X[:, 1], X[:, 0]], axis=1)

    return NonlocalField(rule=rule, rates=rates, label="rotation")


def field_from_label(label: str, rates: RateFunctions, params: dict | None = None) -> NonlocalField:
    """Instantiate a catalog field; raises ConfigError for unknown labels."""
    params = params or {}
    name, _, inline = label.partition(":")
    if name == "zero":
        return zero_field(rates)
    if name == "constant":
        vec = params.get("vector")
        if vec is None and inline:
            vec = [float(v) for v in inline.split(",")]
        if vec is None:
            raise ConfigError("constant field needs a 'vector' parameter")
        return constant_field(np.asarray(vec, dtype=float), rates)
    if name == "linear_decay":
        return linear_decay_field(rates)
    if name == "mean_attraction":
        kappa = params.get("kappa")
        if kappa is None and inline:
            kappa = float(inline)
        if kappa is None:
            raise ConfigError("mean_attraction field needs a 'kappa' parameter")
        return mean_attraction_field(float(kappa), rates)
    if name == "bounded_kernel":
        return bounded_kernel_field(rates)
    if name == "rotation":
        return rotation_field(rates)
    raise ConfigError(f"unknown field label {label!r}")


def constants_family(controls, rates: RateFunctions) -> ControlledFamily:
    """Finite set of constant velocities; natural rates m = max |u|, l = L = 0."""
    vecs = tuple(np.asarray(u, dtype=float) for u in controls)

    def rule(t, cloud, u, X):
        return np.broadcast_to(u, X.shape).copy()

    return ControlledFamily(controls=vecs, rule=rule, rates=rates, label="constants")


def gain_family(controls, rates: RateFunctions) -> ControlledFamily:
    """v = -k x for gains k; natural rates m = l = max k, L = 0."""
    gains = tuple(float(u) for u in controls)

    def rule(t, cloud, u, X):
        return -u * X

    return ControlledFamily(controls=gains, rule=rule, rates=rates, label="gain")


def mean_gain_family(controls, rates: RateFunctions) -> ControlledFamily:
    """v = k (mean(mu) - x) for gains k; natural rates m = l = L = max k."""
    gains = tuple(float(u) for u in controls)

    def rule(t, cloud: ParticleCloud, u, X):
        return u * (cloud.mean()[None, :] - X)

    return ControlledFamily(
        controls=gains, rule=rule, rates=rates, label="mean_gain", measure_dependent=True
    )


def family_from_label(label: str, controls, rates: RateFunctions) -> ControlledFamily:
    if label == "constants":
        return constants_family(controls, rates)
    if label == "gain":
        return gain_family(controls, rates)
    if label == "mean_gain":
        return mean_gain_family(controls, rates)
    raise ConfigError(f"unknown family label {label!r}")
