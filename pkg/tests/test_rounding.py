import math

import numpy as np
import pytest

from marginlab.errors import DimensionMismatchError
from marginlab.geometry import RngStream, sample_uniform_sphere
from marginlab.rounding import (
    SphereNet,
    build_net,
    check_general_position,
    load_net,
    nearest_distances,
    round_many,
    round_to_net,
    save_net,
    verify_covering,
)

from oracles import nearest_index_linear


def synthetic_net(points, alpha=0.5):
    pts = np.asarray(points, dtype=float)
    return SphereNet(points=pts, alpha=alpha, seed=0, dimension=pts.shape[1])


def cap_points(center, radius, count, gen):
    """Roughly uniform points within Euclidean distance `radius` of center."""
    d = len(center)
    out = np.empty((count, d))
    for i in range(count):
        tangent = gen.standard_normal(d)
        tangent -= (tangent @ center) * center
        tangent /= np.linalg.norm(tangent)
        rho = radius * gen.random() ** (1.0 / max(d - 1, 1))
        candidate = center + rho * tangent
        out[i] = candidate / np.linalg.norm(candidate)
    return out


class TestBuildNet:
    def test_dimension_one_is_both_endpoints(self):
        net = build_net(1, 0.3, seed=5)
        assert sorted(net.points[:, 0].tolist()) == [-1.0, 1.0]

    def test_circle_size_within_counting_bounds(self, net2_coarse):
        # Spacing 0.25 on the circle: between 13 and 60 points fit.
        assert 13 <= net2_coarse.size <= 60

    def test_deterministic_given_seed(self):
        a = build_net(2, 0.5, seed=7)
        b = build_net(2, 0.5, seed=7)
        assert np.array_equal(a.points, b.points)

    def test_seed_changes_net(self):
        a = build_net(2, 0.5, seed=7)
        b = build_net(2, 0.5, seed=8)
        assert a.size != b.size or not np.array_equal(a.points, b.points)

    def test_packing_invariant(self, net2_coarse, net3_coarse):
        for net in (net2_coarse, net3_coarse):
            pts = net.points
            gram = pts @ pts.T
            dist_sq = np.maximum(2.0 - 2.0 * gram, 0.0)
            np.fill_diagonal(dist_sq, np.inf)
            assert math.sqrt(dist_sq.min()) >= net.spacing * (1 - 1e-6)

    def test_invalid_arguments(self):
        with pytest.raises(DimensionMismatchError):
            build_net(0, 0.5, seed=1)
        with pytest.raises(ValueError):
            build_net(2, 0.0, seed=1)
        with pytest.raises(ValueError):
            build_net(2, 1.5, seed=1)


class TestRounding:
    def test_net_point_rounds_to_itself(self, net2_coarse):
        for idx in (0, net2_coarse.size - 1):
            point, got = round_to_net(net2_coarse, net2_coarse.points[idx])
            assert got == idx
            assert np.array_equal(point, net2_coarse.points[idx])

    def test_synthetic_tie_breaks_to_lowest_index(self):
        net = synthetic_net([[1.0, 0.0], [0.0, 1.0]])
        x = np.array([1.0, 1.0]) / math.sqrt(2.0)
        point, idx = round_to_net(net, x)
        assert idx == 0
        assert np.array_equal(point, [1.0, 0.0])

    def test_matches_linear_scan_oracle(self, net3_coarse):
        rng = RngStream(12)
        queries = sample_uniform_sphere(3, rng, size=200)
        indices = round_many(net3_coarse, queries)
        for x, idx in zip(queries, indices):
            assert idx == nearest_index_linear(net3_coarse.points, x)

    def test_displacement_strictly_below_alpha(self, net2, net3):
        for net in (net2, net3):
            queries = sample_uniform_sphere(net.dimension, RngStream(13), size=10_000)
            moved = net.points[round_many(net, queries)]
            assert np.max(np.linalg.norm(moved - queries, axis=1)) < net.alpha

    def test_empty_net_rejected(self):
        net = SphereNet(points=np.empty((0, 2)), alpha=0.5, seed=0, dimension=2)
        with pytest.raises(ValueError):
            round_to_net(net, np.array([1.0, 0.0]))

    def test_locality_of_small_caps(self, net2, net3):
        # Points within a tiny cap round to at most `dimension` distinct
        # net points for nearly every cap center.
        for net in (net2, net3):
            gen = RngStream(14).child("caps", net.dimension).generator()
            radius = net.alpha / 20.0
            good = 0
            centers = 100
            for _ in range(centers):
                center = sample_uniform_sphere(net.dimension, gen)
                block = cap_points(center, radius, 1000, gen)
                if len(set(round_many(net, block).tolist())) <= net.dimension:
                    good += 1
            assert good >= 0.95 * centers


class TestCovering:
    def test_built_nets_cover(self, net2_coarse, net3_coarse):
        for i, net in enumerate((net2_coarse, net3_coarse)):
            ok, worst = verify_covering(net, 10_000, RngStream(15).child(i))
            assert ok
            assert worst <= net.spacing

    def test_single_point_net_fails_with_antipode_distance(self):
        net = synthetic_net([[1.0, 0.0]], alpha=0.5)
        ok, worst = verify_covering(net, 10_000, RngStream(16))
        assert not ok
        assert worst > 1.99

    def test_probe_on_net_point(self):
        # On S^0 every probe is one of the two net points, at distance zero.
        net = synthetic_net([[1.0], [-1.0]], alpha=0.5)
        ok, worst = verify_covering(net, 1, RngStream(17))
        assert ok
        assert worst == 0.0

    def test_tree_equals_linear(self, net3):
        queries = sample_uniform_sphere(3, RngStream(18), size=2000)
        tree = nearest_distances(net3.points, queries, method="tree")
        linear = nearest_distances(net3.points, queries, method="linear")
        assert np.array_equal(tree, linear)


class TestGeneralPosition:
    def test_built_nets_pass(self, net2_coarse, net3_coarse):
        for i, net in enumerate((net2_coarse, net3_coarse)):
            assert check_general_position(net, 10_000, RngStream(19).child(i))

    def test_constructed_degeneracy_detected(self):
        # Four net points on a circle around the e3 axis are equidistant
        # from the pole: 4 = dimension + 1 ties at the nearest distance.
        angles = [0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi]
        ring = [[math.cos(a) * 0.6, math.sin(a) * 0.6, 0.8] for a in angles]
        net = synthetic_net(ring, alpha=0.5)

        class PoleStream:
            def generator(self):
                return self

            def standard_normal(self, shape):
                out = np.zeros(shape)
                out[:, 2] = 1.0
                return out

        assert not check_general_position(net, 4, PoleStream())

    def test_vacuous_when_net_small(self):
        net = synthetic_net([[1.0, 0.0], [0.0, 1.0]])
        assert check_general_position(net, 100, RngStream(20))


class TestPersistence:
    def test_round_trip_bit_exact(self, tmp_path, net2_coarse):
        path = tmp_path / "net.bin"
        save_net(net2_coarse, path)
        loaded = load_net(path)
        assert loaded.dimension == net2_coarse.dimension
        assert loaded.alpha == net2_coarse.alpha
        assert loaded.seed == net2_coarse.seed
        assert np.array_equal(
            loaded.points.view(np.uint64), net2_coarse.points.view(np.uint64)
        )

    def test_truncated_file_rejected(self, tmp_path, net2_coarse):
        path = tmp_path / "net.bin"
        save_net(net2_coarse, path)
        path.write_bytes(path.read_bytes()[:-9])
        with pytest.raises(ValueError):
            load_net(path)

    def test_wrong_magic_rejected(self, tmp_path):
        path = tmp_path / "net.bin"
        path.write_bytes(b"NOTANET!" + b"\0" * 40)
        with pytest.raises(ValueError):
            load_net(path)
