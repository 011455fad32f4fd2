import numpy as np
import pytest

import halfspace as hs
from halfspace.model import WeightedPointSet


def uniform(points) -> WeightedPointSet:
    return WeightedPointSet.from_points(points)


SQUARE_2D = uniform([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


class TestDepth1d:
    @pytest.mark.parametrize("mu,expected", [(3.0, 3 / 5), (2.0, 2 / 5), (0.0, 0.0)])
    def test_counting(self, mu, expected):
        p = uniform([[1.0], [2.0], [3.0], [4.0], [5.0]])
        assert hs.depth_1d(p, [mu]).value == pytest.approx(expected)

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            hs.depth_1d(SQUARE_2D, [0.0, 0.0])


class TestDepth2dSweep:
    def test_square_center(self):
        assert hs.depth_2d_sweep(SQUARE_2D, [0.0, 0.0]).value == 0.5

    def test_square_vertex(self):
        assert hs.depth_2d_sweep(SQUARE_2D, [1.0, 1.0]).value == 0.25

    def test_outside(self):
        assert hs.depth_2d_sweep(SQUARE_2D, [5.0, 5.0]).value == 0.0

    def test_all_atoms_at_query(self):
        p = uniform([[2.0, 3.0], [2.0, 3.0]])
        assert hs.depth_2d_sweep(p, [2.0, 3.0]).value == 1.0


class TestDepthOracle:
    def test_tetrahedron_interior(self):
        _, p = hs.attack_tetrahedron(10.0)
        centroid = p.points.mean(axis=0)
        assert hs.depth_oracle(p, centroid).value == 0.25

    def test_square_3d_center(self):
        p = hs.square_distribution().atoms_absolute()
        assert hs.depth_oracle(p, np.zeros(3)).value == 0.5

    def test_tetrahedron_outside(self):
        _, p = hs.attack_tetrahedron(10.0)
        assert hs.depth_oracle(p, [10.0, 10.0, 10.0]).value == 0.0

    def test_guard_advises_sampled_engine(self):
        rng = hs.make_rng(0)
        p = uniform(rng.standard_normal((300, 5)))
        with pytest.raises(ValueError, match="sampled"):
            hs.depth_oracle(p, np.zeros(5))

    def test_atom_at_query_always_counts(self):
        p = uniform([[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [0.0, 4.0, 0.0]])
        assert hs.depth_oracle(p, np.zeros(3)).value == pytest.approx(1 / 3)

    def test_cube_center_and_vertex(self):
        corners = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1)
                            for sz in (-1, 1)], dtype=float)
        p = uniform(corners)
        assert hs.depth_oracle(p, np.zeros(3)).value == 0.5
        assert hs.depth_oracle(p, [1.0, 1.0, 1.0]).value == 0.125

    def test_octahedron_center_and_vertex(self):
        p = uniform(np.vstack([np.eye(3), -np.eye(3)]))
        assert hs.depth_oracle(p, np.zeros(3)).value == pytest.approx(0.5, abs=1e-15)
        assert hs.depth_oracle(p, [1.0, 0.0, 0.0]).value == pytest.approx(1 / 6, abs=1e-15)


class TestDepthSampled:
    def test_square_3d_is_exact(self):
        p = hs.square_distribution().atoms_absolute()
        assert hs.depth_sampled(p, np.zeros(3), budget=10_000, rng=0).value == 0.5

    def test_gaussian_sample_mean_depth(self):
        dist = hs.NamedDistribution.gaussian(np.zeros(3), 1.0)
        p = hs.sample(dist, 2000, rng=11)
        val = hs.depth_sampled(p, p.mean(), budget=10_000, rng=12).value
        assert 0.40 <= val <= 0.55

    def test_budget_one_still_upper_bounds(self):
        rng = hs.make_rng(5)
        p = uniform(rng.standard_normal((8, 3)))
        mu = rng.standard_normal(3)
        v1 = hs.depth_sampled(p, mu, budget=1, rng=42).value
        assert v1 == hs.depth_sampled(p, mu, budget=1, rng=42).value  # deterministic
        assert v1 >= hs.depth_oracle(p, mu).value - 1e-12

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            hs.depth_sampled(SQUARE_2D, [0.0, 0.0], budget=0)


class TestEngineAgreement:
    def test_sweep_equals_oracle_uniform_weights(self):
        rng = hs.make_rng(42)
        for _ in range(200):
            n = int(rng.integers(3, 13))
            p = uniform(rng.standard_normal((n, 2)))
            mu = p.points[int(rng.integers(0, n))] if rng.random() < 0.3 else rng.standard_normal(2)
            assert hs.depth_2d_sweep(p, mu).value == hs.depth_oracle(p, mu).value

    def test_sweep_equals_oracle_generic_weights(self):
        rng = hs.make_rng(7)
        for _ in range(100):
            n = int(rng.integers(3, 11))
            w = rng.random(n)
            p = WeightedPointSet(rng.standard_normal((n, 2)), w / w.sum())
            mu = rng.standard_normal(2)
            assert hs.depth_2d_sweep(p, mu).value == pytest.approx(
                hs.depth_oracle(p, mu).value, abs=1e-12)

    def test_exact1d_equals_oracle(self):
        rng = hs.make_rng(3)
        for _ in range(100):
            n = int(rng.integers(2, 12))
            p = uniform(rng.standard_normal((n, 1)))
            mu = rng.standard_normal(1)
            assert hs.depth_1d(p, mu).value == hs.depth_oracle(p, mu).value

    def test_sampled_upper_bounds_oracle(self):
        rng = hs.make_rng(11)
        for _ in range(100):
            d = int(rng.integers(2, 5))
            n = int(rng.integers(d + 1, 11))
            p = uniform(rng.standard_normal((n, d)))
            mu = rng.standard_normal(d)
            s = hs.depth_sampled(p, mu, budget=64, rng=rng).value
            assert s >= hs.depth_oracle(p, mu).value - 1e-12


class TestDepthProperties:
    def test_translation_equivariance_exact(self):
        rng = hs.make_rng(8)
        shift = np.array([0.5, -0.25])
        for _ in range(50):
            n = int(rng.integers(3, 10))
            pts = rng.standard_normal((n, 2))
            mu = rng.standard_normal(2)
            a = hs.depth_2d_sweep(uniform(pts), mu).value
            b = hs.depth_2d_sweep(uniform(pts + shift), mu + shift).value
            assert a == b

    def test_lipschitz_in_halfspace_metric(self):
        rng = hs.make_rng(21)
        for _ in range(60):
            d = int(rng.integers(1, 3))
            p = uniform(rng.standard_normal((int(rng.integers(2, 8)), d)))
            q = uniform(rng.standard_normal((int(rng.integers(2, 8)), d)))
            mu = rng.standard_normal(d)
            dp = hs.depth_oracle(p, mu).value
            dq = hs.depth_oracle(q, mu).value
            assert abs(dp - dq) <= hs.halfspace_metric(p, q) + 1e-12

    def test_symmetric_atoms_center_depth_at_least_half(self):
        rng = hs.make_rng(31)
        for _ in range(30):
            d = int(rng.integers(1, 4))
            k = int(rng.integers(1, 5))
            offsets = rng.standard_normal((k, d))
            center = rng.standard_normal(d)
            pts = np.vstack([center + offsets, center - offsets])
            p = uniform(pts)
            assert hs.symmetry_check(p, center)
            assert hs.depth_oracle(p, center).value >= 0.5 - 1e-12

    def test_witness_reproduces_value(self):
        rng = hs.make_rng(13)
        cases = []
        _, tetra = hs.attack_tetrahedron(10.0)
        cases.append((tetra, tetra.points.mean(axis=0)))
        cases.append((hs.square_distribution().atoms_absolute(), np.zeros(3)))
        for _ in range(40):
            n = int(rng.integers(3, 10))
            cases.append((uniform(rng.standard_normal((n, 2))), rng.standard_normal(2)))
        for p, mu in cases:
            res = hs.depth_oracle(p, mu)
            t = float(res.witness @ np.asarray(mu, dtype=float))
            assert hs.halfspace_mass(p, res.witness, t) == pytest.approx(res.value, abs=1e-9)

    def test_result_serialization(self):
        res = hs.depth_oracle(SQUARE_2D, [0.0, 0.0])
        obj = res.to_json_dict()
        assert obj["value"] == 0.5 and obj["engine"] == "oracle"


class TestBatteryScorer:
    def test_matches_depth_sampled_semantics(self):
        rng = hs.make_rng(2)
        p = uniform(rng.standard_normal((50, 3)))
        dirs = hs.direction_battery(p.points, 128, hs.make_rng(5), anchor="difference")
        scorer = hs.battery_scores(p, dirs, p.points)
        # every score is a genuine halfspace mass, hence an upper bound
        for point, score in zip(p.points[:10], scorer[:10]):
            assert score >= hs.depth_oracle(p, point).value - 1e-12
