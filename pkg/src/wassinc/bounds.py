"""Closed-form constants and bound evaluators for the certified checks.

Every inequality verified by the harness is driven by two universal
constants depending only on the moment order p,

    C_p  = 2^((p-1)/p)        C_p' = 2^(p-1) / p,

together with growth envelopes assembled from the integral of the rate m:

* ``horizon_factor`` C_T = max(1, ||m||_1) exp(||m||_1) controls how far a
  single characteristic can travel relative to its start,
* ``uniform_moment`` is a conservative a priori bound on the p-th moment
  along every curve produced by a tracking iteration, obtained by closing
  the recurrence f_{n+1} <= alpha (1 + int m f_n) at its fixed bound
  (alpha + f0) exp(alpha ||m||_1),
* ``script_horizon_factor`` is the same travel envelope with m inflated by
  the uniform moment bound, as needed when velocities grow with the
  measure's moment.

These are deliberately loose: looseness only weakens the certified
inequalities, never invalidates them.
"""

from __future__ import annotations

import math


def _exp(x: float) -> float:
    """exp saturating to +inf; the envelopes stay valid bounds either way."""
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def C_p(p: float) -> float:
    return 2.0 ** ((p - 1.0) / p)


def C_p_prime(p: float) -> float:
    return 2.0 ** (p - 1.0) / p


def moment_bound(p: float, moment0: float, m_total: float) -> float:
    """A priori p-th moment bound C_p (M_p(mu0) + ||m||_1) exp(C_p' ||m||_1^p)."""
    return C_p(p) * (moment0 + m_total) * _exp(C_p_prime(p) * m_total**p)


def abs_continuity_constant(p: float, moment0: float, m_total: float) -> float:
    """Factor c_p with W_p(mu(s), mu(t)) <= c_p int_s^t m.

    Instantiated as 1 + 2 B where B is the a priori moment bound: the
    displacement rate of an L^p bundle of characteristics is at most
    m(t) (1 + M_p(current) + M_p(measure argument)) <= m(t) (1 + 2 B).
    """
    return 1.0 + 2.0 * moment_bound(p, moment0, m_total)


def horizon_factor(m_total: float) -> float:
    """C_T = max(1, ||m||_1) exp(||m||_1), the characteristic travel envelope."""
    return max(1.0, m_total) * _exp(m_total)


def uniform_moment(p: float, moment_mu0: float, moment_nu0: float, m_total: float) -> float:
    """Uniform moment bound over all iterates of a tracking construction."""
    cp, cpp = C_p(p), C_p_prime(p)
    f0 = cp * (moment_nu0 + m_total) * _exp(cpp * m_total**p)
    alpha = cp * (1.0 + moment_mu0 + m_total * (1.0 + f0)) * _exp(cpp * m_total**p)
    return (alpha + f0) * _exp(alpha * m_total)


def script_horizon_factor(uniform_moment_bound: float, m_total: float) -> float:
    """Travel envelope with m inflated by the uniform moment bound."""
    inflated = (1.0 + uniform_moment_bound) * m_total
    return max(1.0, inflated) * _exp(inflated)
