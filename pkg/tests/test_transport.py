import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from covfields import (
    Correspondence,
    WeightedMeasure,
    builtin_gaussian,
    builtin_truncation,
    check_stability_smooth,
    check_stability_trunc,
    correspondence_from_plan,
    derive_constants,
    distortion,
    empirical_measure,
    q_tensor,
    quadrature_disk,
    radial_moment,
    radial_moment_bound,
    square_grid,
    truncation_stability_constant,
    unit_sphere_area,
    w1_exact,
    winf_exact,
)


def uniform_on(points):
    return empirical_measure(np.asarray(points, dtype=float))


class TestW1:
    def test_identical_measures(self):
        m = uniform_on([[0.0, 0.0], [1.0, 2.0], [3.0, -1.0]])
        val, plan = w1_exact(m, m)
        assert val == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(plan.coupling, np.eye(3) / 3, atol=1e-9)

    def test_point_masses(self):
        a = uniform_on([[0.0, 0.0]])
        b = uniform_on([[3.0, 4.0]])
        val, _ = w1_exact(a, b)
        assert val == pytest.approx(5.0, rel=1e-12)

    def test_two_point_shift(self):
        a = uniform_on([[0.0], [1.0]])
        b = uniform_on([[0.0], [2.0]])
        val, _ = w1_exact(a, b)
        assert val == pytest.approx(0.5, abs=1e-12)

    def test_marginals(self):
        rng = np.random.default_rng(0)
        a = WeightedMeasure(rng.normal(size=(12, 2)), rng.dirichlet(np.ones(12)))
        b = WeightedMeasure(rng.normal(size=(9, 2)), rng.dirichlet(np.ones(9)))
        _, plan = w1_exact(a, b)
        row, col = plan.marginal_errors()
        assert row <= 1e-9 and col <= 1e-9
        assert plan.coupling.min() >= -1e-12

    def test_hungarian_oracle(self):
        rng = np.random.default_rng(1)
        for n in (5, 16, 64):
            a = uniform_on(rng.normal(size=(n, 2)))
            b = uniform_on(rng.normal(size=(n, 2)))
            val, _ = w1_exact(a, b)
            cost = cdist(a.atoms, b.atoms)
            rows, cols = linear_sum_assignment(cost)
            assert val == pytest.approx(cost[rows, cols].sum() / n, abs=1e-9)

    def test_metric_axioms(self):
        rng = np.random.default_rng(2)
        for _ in range(15):
            ms = [uniform_on(rng.normal(size=(rng.integers(2, 8), 2))) for _ in range(3)]
            d01, _ = w1_exact(ms[0], ms[1])
            d10, _ = w1_exact(ms[1], ms[0])
            d12, _ = w1_exact(ms[1], ms[2])
            d02, _ = w1_exact(ms[0], ms[2])
            assert d01 == pytest.approx(d10, abs=1e-9)
            assert d02 <= d01 + d12 + 1e-9

    def test_isometry_invariance(self):
        rng = np.random.default_rng(3)
        theta = 1.234
        u = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        shift = np.array([3.0, -2.0])
        a = uniform_on(rng.normal(size=(7, 2)))
        b = uniform_on(rng.normal(size=(5, 2)))
        v1, _ = w1_exact(a, b)
        v2, _ = w1_exact(a.transform(u, shift), b.transform(u, shift))
        assert v1 == pytest.approx(v2, abs=1e-9)

    def test_requires_normalized(self):
        a = WeightedMeasure([[0.0]], [0.7])
        b = uniform_on([[1.0]])
        with pytest.raises(ValueError, match="normalized"):
            w1_exact(a, b)

    def test_size_cap(self):
        rng = np.random.default_rng(4)
        a = uniform_on(rng.normal(size=(40, 2)))
        b = uniform_on(rng.normal(size=(8, 2)))
        with pytest.raises(ValueError, match="subsample"):
            w1_exact(a, b, max_atoms=30)


class TestWinf:
    def test_identical(self):
        m = uniform_on([[0.0, 1.0], [2.0, 0.0]])
        val, _ = winf_exact(m, m)
        assert val == 0.0

    def test_two_point_shift(self):
        a = uniform_on([[0.0], [1.0]])
        b = uniform_on([[0.0], [2.0]])
        val, _ = winf_exact(a, b)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_factorial_oracle(self):
        rng = np.random.default_rng(5)
        for n in (2, 4, 6):
            for _ in range(4):
                a = uniform_on(rng.normal(size=(n, 2)))
                b = uniform_on(rng.normal(size=(n, 2)))
                val, plan = winf_exact(a, b)
                dist = cdist(a.atoms, b.atoms)
                brute = min(
                    max(dist[i, p[i]] for i in range(n))
                    for p in itertools.permutations(range(n))
                )
                assert val == pytest.approx(brute, abs=1e-9)
                assert plan.max_edge() == pytest.approx(val, abs=1e-9)

    def test_unequal_sizes(self):
        a = uniform_on([[0.0], [1.0], [2.0]])
        b = uniform_on([[0.5], [1.5]])
        val, plan = winf_exact(a, b)
        # each atom of a sends its 1/3 to a b atom within the bottleneck
        assert val == pytest.approx(0.5, abs=1e-12)
        row, col = plan.marginal_errors()
        assert row <= 1e-9 and col <= 1e-9

    def test_irrational_weights(self):
        w = np.array([math.sqrt(2) - 1, 2 - math.sqrt(2)])
        a = WeightedMeasure([[0.0], [1.0]], w / w.sum())
        b = uniform_on([[0.0], [1.0]])
        val, plan = winf_exact(a, b)
        assert 0.0 <= val <= 1.0
        row, col = plan.marginal_errors()
        assert row <= 1e-9 and col <= 1e-9

    def test_metric_symmetry(self):
        rng = np.random.default_rng(6)
        a = uniform_on(rng.normal(size=(5, 2)))
        b = uniform_on(rng.normal(size=(5, 2)))
        assert winf_exact(a, b)[0] == pytest.approx(winf_exact(b, a)[0], abs=1e-12)


class TestCorrespondence:
    def test_identity_zero_distortion(self):
        d = cdist(np.arange(4)[:, None].astype(float), np.arange(4)[:, None].astype(float))
        corr = Correspondence(np.column_stack([np.arange(4), np.arange(4)]))
        assert distortion(corr, d, d) == 0.0

    def test_two_point_example(self):
        dx = np.array([[0.0, 1.0], [1.0, 0.0]])
        dy = np.array([[0.0, 2.0], [2.0, 0.0]])
        corr = Correspondence([[0, 0], [1, 1]])
        assert distortion(corr, dx, dy) == pytest.approx(1.0)

    def test_symmetric_in_spaces(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(5, 2))
        y = rng.normal(size=(4, 2))
        dx, dy = cdist(x, x), cdist(y, y)
        pairs = [[i, rng.integers(0, 4)] for i in range(5)] + [[rng.integers(0, 5), j] for j in range(4)]
        corr = Correspondence(pairs)
        swapped = Correspondence(np.column_stack([corr.pairs[:, 1], corr.pairs[:, 0]]))
        assert distortion(corr, dx, dy) == pytest.approx(distortion(swapped, dy, dx))

    def test_uncovered_rejected(self):
        d = np.zeros((3, 3))
        with pytest.raises(ValueError, match="cover"):
            distortion(Correspondence([[0, 0], [1, 1]]), d, d)

    def test_from_diagonal_plan(self):
        m = uniform_on([[0.0], [1.0], [2.0]])
        _, plan = w1_exact(m, m)
        corr = correspondence_from_plan(plan)
        assert corr.covers(3, 3)
        assert set(map(tuple, corr.pairs)) == {(0, 0), (1, 1), (2, 2)}

    def test_from_product_plan(self):
        a = uniform_on([[0.0], [1.0]])
        pi = np.full((2, 2), 0.25)
        from covfields import TransportPlan

        plan = TransportPlan(pi, 0.0, a, a)
        corr = correspondence_from_plan(plan)
        assert len(corr.pairs) == 4

    def test_winf_witness_edge(self):
        rng = np.random.default_rng(8)
        a = uniform_on(rng.normal(size=(6, 2)))
        b = uniform_on(rng.normal(size=(6, 2)))
        val, plan = winf_exact(a, b)
        corr = correspondence_from_plan(plan)
        dist = cdist(a.atoms, b.atoms)
        assert dist[corr.pairs[:, 0], corr.pairs[:, 1]].max() == pytest.approx(val, abs=1e-9)


class TestSmoothStability:
    def test_identical_measures_trivial(self):
        m = uniform_on([[0.0, 0.0], [1.0, 1.0]])
        rep = check_stability_smooth(m, m, builtin_gaussian(), 1.0, square_grid(-2, 2, 5))
        assert rep.passed
        assert rep.lhs == pytest.approx(0.0, abs=1e-15)

    def test_random_pairs_certified(self):
        rng = np.random.default_rng(9)
        grid = square_grid(-3, 3, 12)
        g = builtin_gaussian()
        for _ in range(40):
            a = uniform_on(rng.normal(size=(rng.integers(2, 40), 2)))
            b = uniform_on(rng.normal(size=(rng.integers(2, 40), 2)))
            for sigma in (0.3, 1.0, 3.0):
                rep = check_stability_smooth(a, b, g, sigma, grid)
                assert rep.passed, (sigma, rep.lhs, rep.rhs)

    def test_translation_rhs_linear(self):
        rng = np.random.default_rng(10)
        a = uniform_on(rng.normal(size=(20, 2)))
        grid = square_grid(-2, 2, 8)
        rhs = []
        for t in (0.01, 0.02):
            b = a.transform(shift=[t, 0.0])
            rep = check_stability_smooth(a, b, builtin_gaussian(), 1.0, grid)
            assert rep.transport_cost == pytest.approx(t, abs=1e-9)
            rhs.append(rep.rhs)
        assert rhs[1] == pytest.approx(2 * rhs[0], rel=1e-6)

    def test_truncation_not_eligible(self):
        m = uniform_on([[0.0, 0.0]])
        with pytest.raises(ValueError, match="eligible"):
            check_stability_smooth(m, m, builtin_truncation(), 1.0, [[0.0, 0.0]])


class TestLipschitzTensorMap:
    def test_certification_batch(self):
        # ||Q(z1) - Q(z2)|| <= (A_f sigma / C_d) ||z1 - z2|| on random pairs
        rng = np.random.default_rng(11)
        g = builtin_gaussian()
        consts = derive_constants(g, 2)
        n = 20_000
        z1 = rng.normal(0, 2, size=(n, 2))
        z2 = rng.normal(0, 2, size=(n, 2))
        sigmas = rng.uniform(0.2, 3.0, size=n)
        bad = 0
        for i in range(0, n, 4000):
            for j in range(i, min(i + 4000, n)):
                s = sigmas[j]
                lhs = np.linalg.norm(q_tensor(g, z1[j], s) - q_tensor(g, z2[j], s))
                rhs = consts.a_f * s / consts.c_d(s) * np.linalg.norm(z1[j] - z2[j])
                if lhs > rhs * (1 + 1e-12):
                    bad += 1
        assert bad == 0


class TestTruncStability:
    def test_constant_value(self):
        assert truncation_stability_constant(1.0, 2, 1.0) == pytest.approx(36.0, rel=1e-14)

    def test_identical_trivial(self):
        disk = quadrature_disk(1.0, 30, 40).normalize()
        rep = check_stability_trunc(disk, disk, 0.5, 2.0, 1.0, square_grid(-1, 1, 5))
        assert rep.passed

    def test_jittered_disk_certified(self):
        rng = np.random.default_rng(12)
        disk = quadrature_disk(1.0, 18, 56)
        total = disk.total_mass
        alpha = disk.normalize()
        # density bound of the normalized quadrature measure:
        # cell mass / cell area = 1 / total area, uniform by construction
        lam = (alpha.weights / disk.weights).max() * 1.0000001
        jitter = 0.02 * rng.normal(size=alpha.atoms.shape)
        beta = WeightedMeasure(alpha.atoms + jitter, alpha.weights)
        rep = check_stability_trunc(alpha, beta, 0.6, 2.2, lam, square_grid(-1.2, 1.2, 8))
        assert rep.passed

    def test_lambda_required(self):
        m = uniform_on([[0.0, 0.0]])
        with pytest.raises(ValueError, match="lam"):
            check_stability_trunc(m, m, 0.5, 1.0, None, [[0.0, 0.0]])


class TestRadialMoments:
    def test_unit_disk(self):
        assert radial_moment(0.0, 1.0, 2) == pytest.approx(math.pi / 2, rel=1e-14)

    def test_bound_at_limit(self):
        # B = b gives omega/(d+2) * b^{d+2} >= s_d(a, b)
        val = radial_moment(0.2, 1.0, 3)
        bound = radial_moment_bound(0.2, 1.0, 1.0, 3)
        assert bound >= val
        assert bound == pytest.approx(unit_sphere_area(3) / 5 * (1.0 - 0.2) / 0.8, rel=1e-12)

    def test_random_inequality(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            d = int(rng.integers(1, 6))
            a = float(rng.uniform(0, 2))
            b = a + float(rng.uniform(1e-6, 2))
            big = b + float(rng.uniform(0, 2))
            assert radial_moment(a, b, d) <= radial_moment_bound(a, b, big, d) * (1 + 1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            radial_moment(1.0, 1.0, 2)
        with pytest.raises(ValueError):
            radial_moment_bound(0.5, 1.0, 0.9, 2)
