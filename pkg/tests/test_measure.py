import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from wassinc import ParticleCloud, moment, tail_norm, wasserstein, wasserstein_cost
from wassinc.errors import ShapeMismatchError
from wassinc.measure import assignment_cost, pairwise_cost

from conftest import cloud, delta, random_cloud


def brute_force_cost(a, b, p):
    """Exhaustive minimum over all permutations, sharing the cost matrix."""
    D = pairwise_cost(a, b, p)
    best = min(assignment_cost(D, perm) for perm in itertools.permutations(range(a.n)))
    if p == 1.0:
        return best / a.n
    if p == 2.0:
        return math.sqrt(best / a.n)
    return (best / a.n) ** (1.0 / p)


class TestMoment:
    def test_singleton_euclidean(self):
        assert moment(delta(3.0, 4.0), 2) == 5.0

    def test_symmetric_pair_cubed(self):
        assert moment(cloud([-1.0], [1.0]), 3) == pytest.approx(1.0, abs=1e-12)

    def test_two_atoms_p2(self):
        # ((0 + 4) / 2)^(1/2)
        assert moment(cloud([0.0], [2.0]), 2) == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_p_below_one_rejected(self):
        with pytest.raises(ValueError):
            moment(delta(1.0), 0.5)

    @given(
        pts=hnp.arrays(
            np.float64,
            (5, 2),
            elements=st.floats(-50, 50, allow_nan=False, width=64),
        ),
        c=st.floats(-10, 10, allow_nan=False, width=64).filter(lambda v: abs(v) > 1e-6),
        p=st.sampled_from([1.0, 1.5, 2.0, 3.0]),
    )
    @settings(max_examples=60, deadline=None)
    def test_homogeneity(self, pts, c, p):
        base = ParticleCloud(pts)
        scaled = ParticleCloud(c * pts)
        assert moment(scaled, p) == pytest.approx(abs(c) * moment(base, p), rel=1e-9, abs=1e-9)


class TestTailNorm:
    def test_radius_beyond_support(self):
        assert tail_norm(cloud([0.5], [-1.0]), 2.0, 2) == 0.0

    def test_zero_radius_is_moment(self):
        c = cloud([0.3, 1.0], [-2.0, 0.1], [0.0, 0.0])
        assert tail_norm(c, 0.0, 2) == moment(c, 2)

    def test_shifted_example(self):
        assert tail_norm(cloud([0.0], [3.0]), 2.0, 1, shifted=True) == 2.0

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            tail_norm(delta(1.0), -0.1, 1)

    @given(
        pts=hnp.arrays(
            np.float64, (7, 2), elements=st.floats(-20, 20, allow_nan=False, width=64)
        ),
        radii=st.tuples(st.floats(0, 25, width=64), st.floats(0, 25, width=64)),
        p=st.sampled_from([1.0, 2.0]),
    )
    @settings(max_examples=60, deadline=None)
    def test_dominated_by_moment_and_monotone(self, pts, radii, p):
        c = ParticleCloud(pts)
        r_lo, r_hi = sorted(radii)
        assert tail_norm(c, r_lo, p) <= moment(c, p) + 1e-12
        assert tail_norm(c, r_hi, p) <= tail_norm(c, r_lo, p) + 1e-12


class TestWasserstein:
    def test_identical_clouds(self):
        a = cloud([0.0, 1.0], [2.0, -1.0], [0.5, 0.5])
        plan = wasserstein(a, a, 2)
        assert plan.cost == 0.0
        assert list(plan.assignment) == [0, 1, 2]

    def test_singletons(self):
        assert wasserstein(delta(0.0, 0.0), delta(3.0, 4.0), 1).cost == 5.0

    def test_two_point_example(self):
        # identity pairing gives ((1 + 1)/2)^(1/2) = 1, the swap sqrt(5)
        plan = wasserstein(cloud([0.0], [2.0]), cloud([1.0], [3.0]), 2)
        assert plan.cost == 1.0
        assert list(plan.assignment) == [0, 1]

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            wasserstein(cloud([0.0], [1.0]), cloud([0.0]), 1)
        with pytest.raises(ShapeMismatchError):
            wasserstein(delta(0.0), delta(0.0, 0.0), 1)

    def test_lexicographic_tie_break(self):
        # every permutation costs the same; the identity must come back
        a = cloud([0.0], [0.0], [0.0])
        b = cloud([1.0], [2.0], [3.0])
        plan = wasserstein(a, b, 1)
        assert list(plan.assignment) == [0, 1, 2]
        swapped = wasserstein(cloud([0.0], [2.0]), cloud([1.0], [1.0]), 1)
        assert list(swapped.assignment) == [0, 1]

    def test_matches_exhaustive_minimum_exactly(self, rng):
        for _ in range(40):
            n = int(rng.integers(1, 8))
            d = int(rng.integers(1, 4))
            p = float(rng.choice([1.0, 2.0]))
            a, b = random_cloud(rng, n, d), random_cloud(rng, n, d)
            assert wasserstein(a, b, p).cost == brute_force_cost(a, b, p)

    def test_plan_cost_consistent(self, rng):
        a, b = random_cloud(rng, 9, 2), random_cloud(rng, 9, 2)
        plan = wasserstein(a, b, 2)
        D = pairwise_cost(a, b, 2)
        recomputed = math.sqrt(assignment_cost(D, plan.assignment) / a.n)
        assert plan.cost == recomputed


coords = st.floats(-30, 30, allow_nan=False, width=64)


@st.composite
def cloud_triple(draw):
    n = draw(st.integers(1, 10))
    d = draw(st.integers(1, 3))
    arrs = [draw(hnp.arrays(np.float64, (n, d), elements=coords)) for _ in range(3)]
    return tuple(ParticleCloud(a) for a in arrs)


class TestMetricAxioms:
    @given(clouds=cloud_triple(), p=st.sampled_from([1.0, 1.5, 2.0]))
    @settings(max_examples=60, deadline=None)
    def test_symmetry_and_triangle(self, clouds, p):
        a, b, c = clouds
        ab = wasserstein_cost(a, b, p)
        assert ab == pytest.approx(wasserstein_cost(b, a, p), abs=1e-9)
        assert ab <= wasserstein_cost(a, c, p) + wasserstein_cost(c, b, p) + 1e-9

    @given(clouds=cloud_triple(), p=st.sampled_from([1.0, 2.0]))
    @settings(max_examples=40, deadline=None)
    def test_identity_of_indiscernibles(self, clouds, p):
        a, _, _ = clouds
        perm = np.random.Generator(np.random.Philox(key=1)).permutation(a.n)
        shuffled = ParticleCloud(a.points[perm])
        assert wasserstein_cost(a, shuffled, p) <= 1e-9

    @given(clouds=cloud_triple(), p=st.sampled_from([1.5, 2.0, 3.0]))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_p(self, clouds, p):
        a, b, _ = clouds
        assert wasserstein_cost(a, b, 1.0) <= wasserstein_cost(a, b, p) + 1e-12

    @given(
        clouds=cloud_triple(),
        slope=hnp.arrays(np.float64, (3,), elements=st.floats(-5, 5, width=64)),
        offset=st.floats(-5, 5, width=64),
        p=st.sampled_from([1.0, 2.0]),
    )
    @settings(max_examples=60, deadline=None)
    def test_affine_test_function_bound(self, clouds, slope, offset, p):
        a, b, _ = clouds
        av = slope[: a.d]
        phi_a = float(np.mean(a.points @ av + offset))
        phi_b = float(np.mean(b.points @ av + offset))
        lip = float(np.linalg.norm(av))
        w1 = wasserstein_cost(a, b, 1.0)
        assert phi_a - phi_b <= lip * w1 + 1e-9
        assert lip * w1 <= lip * wasserstein_cost(a, b, p) + 1e-9
