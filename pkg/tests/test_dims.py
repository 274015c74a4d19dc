import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from marginlab.concepts import LabeledSample, MarginDistribution, PartialHalfspace
from marginlab.errors import SizeGuardError
from marginlab.dims import (
    MistakeTreeCertificate,
    build_ghd,
    littlestone_dim,
    matrix_from_entries,
    min_disambiguation_ldim,
    perceptron_mistake_bound,
    perceptron_mistakes,
    read_matrix_csv,
    validate_certificate,
    vc_dim,
    write_matrix_csv,
)
from marginlab.geometry import RngStream, sample_uniform_sphere

from oracles import naive_littlestone_dim, naive_vc_dim

partial_matrices = arrays(
    np.int8,
    st.tuples(st.integers(1, 6), st.integers(1, 6)),
    elements=st.sampled_from([-1, 0, 1]),
)


def thresholds_matrix(n_points=7):
    rows = [[1 if i >= j else -1 for i in range(n_points)] for j in range(n_points + 1)]
    return matrix_from_entries(rows)


def halfspace_restriction(dim, n_points, n_concepts, margin, seed):
    rng = RngStream(seed)
    points = sample_uniform_sphere(dim, rng.child("points"), size=n_points)
    rows = [
        PartialHalfspace(sample_uniform_sphere(dim, rng.child("concept", i)), margin).classify_many(points)
        for i in range(n_concepts)
    ]
    return matrix_from_entries(np.array(rows))


class TestVcDim:
    def test_single_row_is_zero(self):
        assert vc_dim(matrix_from_entries([[1, 1, 1]]))[0] == 0

    def test_all_patterns_on_two_columns(self):
        M = matrix_from_entries(list(product((-1, 1), repeat=2)))
        dim, witness = vc_dim(M)
        assert dim == 2
        assert set(witness) == {0, 1}

    def test_star_never_matches(self):
        M = matrix_from_entries([[1, 0], [-1, 0], [0, 1], [0, -1]])
        assert vc_dim(M)[0] == 1

    def test_halfspace_restriction_recovers_dimension(self):
        M = halfspace_restriction(2, 30, 30, 0.1, seed=5)
        assert vc_dim(M)[0] == 2

    def test_witness_is_shattered(self):
        M = halfspace_restriction(2, 20, 40, 0.1, seed=6)
        dim, witness = vc_dim(M)
        sub = M.entries[:, witness]
        defined = np.all(sub != 0, axis=1)
        patterns = {tuple(row) for row in sub[defined]}
        assert len(patterns) == 2**dim

    def test_column_guard(self):
        M = matrix_from_entries(np.ones((2, 33), dtype=np.int8))
        with pytest.raises(SizeGuardError):
            vc_dim(M)

    @given(partial_matrices)
    @settings(max_examples=40)
    def test_matches_naive_oracle(self, entries):
        M = matrix_from_entries(entries)
        assert vc_dim(M)[0] == naive_vc_dim(entries)


class TestLittlestoneDim:
    def test_single_row_is_zero(self):
        dim, cert = littlestone_dim(matrix_from_entries([[1, -1, 1]]))
        assert dim == 0
        assert validate_certificate(matrix_from_entries([[1, -1, 1]]), cert)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_complete_class(self, m):
        M = matrix_from_entries(list(product((-1, 1), repeat=m)))
        dim, cert = littlestone_dim(M)
        assert dim == m
        assert validate_certificate(M, cert)

    def test_thresholds_over_seven_points(self):
        M = thresholds_matrix()
        dim, cert = littlestone_dim(M)
        assert dim == 3
        assert validate_certificate(M, cert)

    def test_matches_naive_oracle_on_random_matrices(self):
        gen = RngStream(33).generator()
        for _ in range(50):
            shape = (int(gen.integers(1, 9)), int(gen.integers(1, 9)))
            entries = gen.choice([-1, 0, 1], size=shape, p=[0.425, 0.15, 0.425]).astype(np.int8)
            M = matrix_from_entries(entries)
            dim, cert = littlestone_dim(M)
            assert dim == naive_littlestone_dim(entries)
            assert validate_certificate(M, cert)

    def test_certificate_tampering_detected(self):
        M = thresholds_matrix()
        dim, cert = littlestone_dim(M)
        wrong = {path: (row + 1) % M.shape[0] for path, row in cert.witness_rows.items()}
        tampered = MistakeTreeCertificate(depth=cert.depth, node_points=cert.node_points, witness_rows=wrong)
        assert not validate_certificate(M, tampered)

    @given(partial_matrices)
    @settings(max_examples=40)
    def test_vc_at_most_littlestone(self, entries):
        M = matrix_from_entries(entries)
        assert vc_dim(M)[0] <= littlestone_dim(M)[0]

    @given(arrays(np.int8, st.tuples(st.integers(1, 8), st.integers(1, 5)), elements=st.sampled_from([-1, 1])))
    @settings(max_examples=40)
    def test_log_cardinality_bound_for_total_classes(self, entries):
        M = matrix_from_entries(entries)
        assert littlestone_dim(M)[0] <= math.ceil(math.log2(max(entries.shape[0], 1)) + 1e-12)

    def test_margin_class_restrictions_below_margin_bound(self):
        for seed in range(5):
            M = halfspace_restriction(3, 7, 7, 0.5, seed=seed)
            assert littlestone_dim(M)[0] <= math.ceil(1 / 0.5**2)


class TestPerceptron:
    def test_single_point_stream(self):
        stream = LabeledSample(np.array([[1.0, 0.0]]), np.array([1]))
        assert perceptron_mistakes(stream, 1.0) <= 1

    @pytest.mark.parametrize("gamma,runs", [(0.5, 30), (0.25, 30)])
    def test_mistake_bound_on_realizable_streams(self, gamma, runs):
        bound = perceptron_mistake_bound(gamma)
        rng = RngStream(44)
        for i in range(runs):
            w = sample_uniform_sphere(3, rng.child("w", int(gamma * 100), i))
            stream = MarginDistribution(w, gamma).sample(200, rng.child("s", int(gamma * 100), i))
            assert perceptron_mistakes(stream, gamma) <= bound

    def test_adversarial_order_still_bounded(self):
        rng = RngStream(45)
        w = sample_uniform_sphere(2, rng.child("w"))
        sample = MarginDistribution(w, 0.25).sample(300, rng.child("s"))
        # hardest-first: ascending margin ordering
        order = np.argsort(sample.labels * (sample.points @ w))
        stream = LabeledSample(sample.points[order], sample.labels[order])
        assert perceptron_mistakes(stream, 0.25) <= 16

    def test_promise_validated(self):
        stream = LabeledSample(np.array([[1.0, 0.0]]), np.array([1]))
        with pytest.raises(ValueError):
            perceptron_mistakes(stream, 0.0)


class TestGhd:
    def test_two_bit_structure(self):
        M = build_ghd(2, 0.5)
        n = 4
        for i in range(n):
            assert M.entries[i, i] == 1
            assert M.entries[i, n - 1 - i] == -1
        off = [(i, j) for i in range(n) for j in range(n) if j not in (i, n - 1 - i)]
        assert all(M.entries[i, j] == 0 for i, j in off)

    @pytest.mark.parametrize("n,gamma", [(1, 0.5), (3, 0.4), (4, 0.9)])
    def test_diagonals_for_any_margin(self, n, gamma):
        M = build_ghd(n, gamma)
        size = 2**n
        assert all(M.entries[i, i] == 1 for i in range(size))
        assert all(M.entries[i, size - 1 - i] == -1 for i in range(size))

    def test_matches_direct_enumeration(self):
        n, gamma = 3, 0.4
        M = build_ghd(n, gamma)
        vectors = list(product((-1, 1), repeat=n))
        for i, x in enumerate(vectors):
            for j, y in enumerate(vectors):
                ip = sum(a * b for a, b in zip(x, y))
                expected = (1 if ip > 0 else -1) if abs(ip) >= gamma * n else 0
                assert M.entries[i, j] == expected

    def test_lexicographic_labels(self):
        M = build_ghd(2, 0.5)
        assert M.row_labels == ("--", "-+", "+-", "++")

    def test_size_guard(self):
        with pytest.raises(SizeGuardError):
            build_ghd(13, 0.5)


class TestMinDisambiguation:
    def test_no_stars_reduces_to_plain_dimension(self):
        M = matrix_from_entries([[1, -1], [-1, 1]])
        best, filling = min_disambiguation_ldim(M)
        assert best == littlestone_dim(M)[0]
        assert filling == {}

    def test_single_star_cell(self):
        best, filling = min_disambiguation_ldim(matrix_from_entries([[0]]))
        assert best == 0
        assert set(filling) == {(0, 0)}

    def test_exhaustive_matches_naive_search(self):
        entries = np.array(
            [
                [1, 0, -1, 1],
                [0, 1, 1, -1],
                [-1, 1, 0, 1],
                [1, -1, 1, 0],
            ],
            dtype=np.int8,
        )
        M = matrix_from_entries(entries)
        best, filling = min_disambiguation_ldim(M)
        stars = M.star_cells()
        reference = min(
            naive_littlestone_dim(_filled(entries, stars, assignment))
            for assignment in product((-1, 1), repeat=len(stars))
        )
        assert best == reference
        assert naive_littlestone_dim(_filled(entries, stars, [filling[c] for c in stars])) == best

    def test_at_least_vc_of_partial_matrix(self):
        gen = RngStream(55).generator()
        for _ in range(10):
            entries = gen.choice([-1, 0, 1], size=(4, 4), p=[0.4, 0.2, 0.4]).astype(np.int8)
            M = matrix_from_entries(entries)
            best, _ = min_disambiguation_ldim(M)
            assert best >= vc_dim(M)[0]

    def test_star_guard(self):
        M = matrix_from_entries(np.zeros((5, 5), dtype=np.int8))
        with pytest.raises(SizeGuardError):
            min_disambiguation_ldim(M)


def _filled(entries, stars, assignment):
    out = entries.copy()
    for (r, c), value in zip(stars, assignment):
        out[r, c] = value
    return out


class TestCsv:
    def test_round_trip(self, tmp_path):
        M = build_ghd(2, 0.5)
        path = tmp_path / "matrix.csv"
        write_matrix_csv(M, path)
        back = read_matrix_csv(path)
        assert np.array_equal(back.entries, M.entries)
        assert back.row_labels == M.row_labels
        assert back.col_labels == M.col_labels

    def test_cells_use_interchange_alphabet(self, tmp_path):
        M = matrix_from_entries([[1, -1, 0]])
        path = tmp_path / "matrix.csv"
        write_matrix_csv(M, path)
        body = path.read_text().splitlines()[1]
        assert body.split(",")[1:] == ["+1", "-1", "*"]

    def test_bad_cell_rejected(self, tmp_path):
        path = tmp_path / "matrix.csv"
        path.write_text(",x0\nh0,2\n")
        with pytest.raises(ValueError):
            read_matrix_csv(path)
