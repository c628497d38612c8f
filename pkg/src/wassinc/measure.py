"""Empirical measures on R^d and exact Wasserstein distances between them.

A cloud of N points with uniform weights 1/N stands in for a probability
measure with finite p-th moment.  Between two clouds of equal size the
p-Wasserstein distance reduces to an optimal assignment problem over
permutations, which is solved exactly; among cost-equal permutations the
lexicographically smallest one is returned so transport plans are
reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ShapeMismatchError


@dataclass(frozen=True, eq=False)
class ParticleCloud:
    """N-point uniform-weight empirical measure in R^d.

    ``points`` is an (N, d) array of positions; each particle carries
    implicit weight 1/N.  Coordinates must be finite, which keeps every
    p-th moment finite.  Instances are immutable and safe to share.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ShapeMismatchError(
                f"cloud needs an (N, d) array with N, d >= 1, got shape {np.shape(self.points)}"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("cloud coordinates must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def norms(self) -> np.ndarray:
        """Euclidean norm of every particle, shape (N,)."""
        return np.linalg.norm(self.points, axis=1)

    def mean(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def translated(self, shift: np.ndarray) -> "ParticleCloud":
        return ParticleCloud(self.points + np.asarray(shift, dtype=float))


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Optimal coupling between two equal-size uniform clouds.

    ``assignment[i] = j`` pairs particle i of the source with particle j of
    the target; ``cost`` is the attained W_p value for the clouds the plan
    was computed from.
    """

    assignment: np.ndarray
    cost: float

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=int)
        if sorted(a.tolist()) != list(range(a.size)):
            raise ValueError("assignment must be a permutation")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)


def _check_p(p: float) -> float:
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"order p must satisfy p >= 1, got {p}")
    return p


def moment(cloud: ParticleCloud, p: float) -> float:
    """Discrete p-th moment ((1/N) sum_i |x_i|^p)^(1/p)."""
    p = _check_p(p)
    norms = cloud.norms()
    return _power_mean(norms, p, cloud.n)


def _power_mean(values: np.ndarray, p: float, n: int) -> float:
    """(fsum(values^p) / n)^(1/p), with exact p = 1 and p = 2 paths."""
    if values.size == 0:
        return 0.0
    if p == 1.0:
        return math.fsum(values.tolist()) / n
    if p == 2.0:
        return math.sqrt(math.fsum((values * values).tolist()) / n)
    return (math.fsum((values**p).tolist()) / n) ** (1.0 / p)


def tail_norm(cloud: ParticleCloud, R: float, p: float, shifted: bool = False) -> float:
    """L^p mass of the particles at distance >= R from the origin.

    With ``shifted`` the integrand is (1 + |x|)^p instead of |x|^p, the form
    appearing in the localisation error of the stability bounds.  Returns 0
    when no particle reaches radius R.
    """
    p = _check_p(p)
    if R < 0:
        raise ValueError(f"radius R must be nonnegative, got {R}")
    norms = cloud.norms()
    sel = norms >= R
    vals = 1.0 + norms[sel] if shifted else norms[sel]
    return _power_mean(vals, p, cloud.n)


def pairwise_cost(a: ParticleCloud, b: ParticleCloud, p: float) -> np.ndarray:
    """Matrix D[i, j] = |x_i - y_j|^p used by the assignment solver.

    Exposed so independent minimizers (e.g. exhaustive search over
    permutations in tests) share the exact same arithmetic.
    """
    p = _check_p(p)
    diff = a.points[:, None, :] - b.points[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    if p == 1.0:
        return dist
    if p == 2.0:
        return dist * dist
    return dist**p


def assignment_cost(D: np.ndarray, assignment: np.ndarray) -> float:
    """Exactly rounded sum of the matched entries (order independent)."""
    rows = np.arange(D.shape[0])
    return math.fsum(D[rows, np.asarray(assignment, dtype=int)].tolist())


def wasserstein(a: ParticleCloud, b: ParticleCloud, p: float) -> TransportPlan:
    """Exact W_p between equal-size uniform clouds via optimal assignment.

    Solves the N x N assignment problem on |x_i - y_j|^p, then tightens the
    solution to the lexicographically smallest permutation among those
    attaining the same (exactly rounded) total cost.  The returned cost is
    W_p = (min total / N)^(1/p).
    """
    p = _check_p(p)
    if a.n != b.n:
        raise ShapeMismatchError(f"clouds must have equal size, got {a.n} and {b.n}")
    if a.d != b.d:
        raise ShapeMismatchError(f"clouds must share the dimension, got {a.d} and {b.d}")
    D = pairwise_cost(a, b, p)
    rows, cols = linear_sum_assignment(D)
    sigma = np.empty(a.n, dtype=int)
    sigma[rows] = cols
    total = assignment_cost(D, sigma)
    sigma = _lexmin_refine(D, sigma, total)
    n = a.n
    if p == 1.0:
        cost = total / n
    elif p == 2.0:
        cost = math.sqrt(total / n)
    else:
        cost = (total / n) ** (1.0 / p)
    return TransportPlan(assignment=sigma, cost=cost)


def wasserstein_cost(a: ParticleCloud, b: ParticleCloud, p: float) -> float:
    """W_p value only, skipping the lexicographic plan refinement."""
    p = _check_p(p)
    if a.n != b.n or a.d != b.d:
        raise ShapeMismatchError(
            f"clouds must match in size and dimension, got ({a.n},{a.d}) and ({b.n},{b.d})"
        )
    D = pairwise_cost(a, b, p)
    rows, cols = linear_sum_assignment(D)
    total = math.fsum(D[rows, cols].tolist())
    n = a.n
    if p == 1.0:
        return total / n
    if p == 2.0:
        return math.sqrt(total / n)
    return (total / n) ** (1.0 / p)


def _optimal_duals(D: np.ndarray, sigma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Feasible dual potentials (u, v) for an optimal assignment sigma.

    Complementary slackness requires u_i + v_j = D[i, j] on matched edges
    and u_i + v_j <= D[i, j] everywhere; eliminating v turns feasibility
    into a shortest-path system over rows, solved by vectorized
    Bellman-Ford relaxations (no negative cycles exist precisely because
    sigma is optimal).
    """
    n = D.shape[0]
    matched = D[np.arange(n), sigma]
    A = D[:, sigma]  # A[i, k] = D[i, sigma_k]
    W = A.T - matched[:, None]  # edge k -> i costs D[i, sigma_k] - D[k, sigma_k]
    u = np.zeros(n)
    for _ in range(n):
        relaxed = np.minimum(u, (u[:, None] + W).min(axis=0))
        if np.array_equal(relaxed, u):
            break
        u = relaxed
    v = np.empty(n)
    v[sigma] = matched - u
    return u, v


def _lexmin_refine(D: np.ndarray, sigma: np.ndarray, total: float) -> np.ndarray:
    """Lexicographically smallest permutation among those of cost ``total``.

    Greedy over rows: for each row try the available columns in increasing
    order below the current choice, accepting a column when the remaining
    rows still admit a completion whose exactly rounded total equals
    ``total``.  Candidate columns are screened through the dual reduced
    costs first: an edge with strictly positive reduced cost belongs to no
    optimal assignment, so only genuine near-ties reach the exact
    reduced-assignment probe.
    """
    n = D.shape[0]
    work = sigma.copy()
    u, v = _optimal_duals(D, sigma)
    reduced = D - u[:, None] - v[None, :]
    # accumulated float error of the potentials is O(n eps scale)
    noise = 1e-9 * (1.0 + float(np.max(np.abs(D))))
    avail = sorted(set(range(n)))
    prefix: list[float] = []
    for i in range(n):
        current = int(work[i])
        survivors = [j for j in avail if j < current and reduced[i, j] <= noise]
        for j in survivors:
            rest = list(range(i + 1, n))
            rest_cols = [c for c in avail if c != j]
            cand_terms = prefix + [float(D[i, j])]
            completion = {}
            if rest:
                sub = D[np.ix_(rest, rest_cols)]
                rr, cc = linear_sum_assignment(sub)
                completion = {rest[r]: rest_cols[c] for r, c in zip(rr, cc)}
                cand_terms += [float(D[r, completion[r]]) for r in completion]
            if math.fsum(cand_terms) == total:
                work[i] = j
                for r, c in completion.items():
                    work[r] = c
                break
        prefix.append(float(D[i, work[i]]))
        avail.remove(int(work[i]))
    return work
