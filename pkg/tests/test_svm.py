import numpy as np
import pytest

from marginlab.concepts import LabeledSample, MarginDistribution
from marginlab.errors import InfeasibleSampleError, SizeGuardError
from marginlab.geometry import RngStream, sample_uniform_sphere
from marginlab.svm import (
    hard_svm,
    hard_svm_batch,
    separates_with_margin,
    svm_by_enumeration,
)


def sample_of(points, labels):
    return LabeledSample(np.asarray(points, dtype=float), np.asarray(labels))


def random_separable(gen, min_margin=0.05):
    d = int(gen.integers(2, 7))
    n = int(gen.integers(2, 9))
    teacher = sample_uniform_sphere(d, gen)
    pts = np.empty((n, d))
    got = 0
    while got < n:
        cand = sample_uniform_sphere(d, gen, size=4 * n)
        keep = cand[np.abs(cand @ teacher) >= min_margin]
        take = min(len(keep), n - got)
        pts[got : got + take] = keep[:take]
        got += take
    return LabeledSample(pts, np.where(pts @ teacher >= 0, 1, -1))


class TestHardSvm:
    def test_antipodal_pair(self):
        sol = hard_svm(sample_of([[1, 0], [-1, 0]], [1, -1]))
        assert np.allclose(sol.direction, [1.0, 0.0], atol=1e-9)
        assert sol.margin == pytest.approx(1.0, abs=1e-9)

    def test_orthogonal_pair(self):
        sol = hard_svm(sample_of([[1, 0], [0, 1]], [1, -1]))
        root_half = 1.0 / np.sqrt(2.0)
        assert sol.margin == pytest.approx(root_half, abs=1e-9)
        assert np.allclose(sol.direction, [root_half, -root_half], atol=1e-7)

    def test_contradictory_labels_infeasible(self):
        with pytest.raises(InfeasibleSampleError):
            hard_svm(sample_of([[1, 0], [1, 0]], [1, -1]))

    def test_generic_infeasible(self):
        # Origin strictly inside the hull of signed points.
        pts = [[1, 0], [-0.5, np.sqrt(3) / 2], [-0.5, -np.sqrt(3) / 2]]
        with pytest.raises(InfeasibleSampleError):
            hard_svm(sample_of(pts, [1, 1, 1]))

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            hard_svm(LabeledSample(np.empty((0, 2)), np.empty(0, dtype=int)))

    def test_dual_certificate_reconstructs_direction(self):
        gen = RngStream(17).generator()
        for _ in range(30):
            sample = random_separable(gen)
            sol = hard_svm(sample, tol=1e-8)
            v = (sol.dual_certificate * sample.labels) @ sample.points
            assert np.linalg.norm(sol.direction - v / np.linalg.norm(v)) <= 1e-6
            assert np.min(sol.dual_certificate) >= 0.0

    def test_achieved_margin_invariant(self):
        gen = RngStream(18).generator()
        for _ in range(20):
            sample = random_separable(gen)
            sol = hard_svm(sample, tol=1e-8)
            achieved = sample.labels * (sample.points @ sol.direction)
            assert np.min(achieved) >= sol.margin - 1e-7

    def test_permutation_invariance(self):
        gen = RngStream(19).generator()
        sample = random_separable(gen)
        perm = gen.permutation(len(sample))
        shuffled = LabeledSample(sample.points[perm], sample.labels[perm])
        a = hard_svm(sample, tol=1e-9)
        b = hard_svm(shuffled, tol=1e-9)
        assert a.margin == pytest.approx(b.margin, abs=1e-8)

    def test_realizable_margin_lower_bound(self):
        rng = RngStream(20)
        gamma = 0.3
        for i in range(20):
            w = sample_uniform_sphere(3, rng.child("w", i))
            sample = MarginDistribution(w, gamma).sample(30, rng.child("s", i))
            assert hard_svm(sample, tol=1e-8).margin >= gamma - 1e-8


class TestEnumerationOracle:
    def test_matches_solver_on_spec_examples(self):
        for points, labels in [
            ([[1, 0], [-1, 0]], [1, -1]),
            ([[1, 0], [0, 1]], [1, -1]),
        ]:
            sample = sample_of(points, labels)
            assert svm_by_enumeration(sample).margin == pytest.approx(
                hard_svm(sample, tol=1e-9).margin, abs=1e-6
            )

    def test_singleton(self):
        sol = svm_by_enumeration(sample_of([[0, 1]], [1]))
        assert sol.margin == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(sol.direction, [0.0, 1.0])

    def test_margin_meets_distribution_margin(self):
        rng = RngStream(4)
        w = sample_uniform_sphere(3, rng.child("w"))
        sample = MarginDistribution(w, 0.4).sample(8, rng.child("s"))
        assert svm_by_enumeration(sample).margin >= 0.4

    def test_infeasible(self):
        with pytest.raises(InfeasibleSampleError):
            svm_by_enumeration(sample_of([[1, 0], [1, 0]], [1, -1]))

    def test_size_guard(self):
        pts = np.tile(np.eye(2), (6, 1))[:11]
        pts = pts / np.linalg.norm(pts, axis=1)[:, None]
        with pytest.raises(SizeGuardError):
            svm_by_enumeration(LabeledSample(pts, np.ones(len(pts), dtype=int)))

    def test_agreement_suite(self):
        gen = RngStream(99).child("suite").generator()
        worst = 0.0
        for _ in range(60):
            sample = random_separable(gen)
            gap = abs(
                hard_svm(sample, tol=1e-8).margin - svm_by_enumeration(sample).margin
            )
            worst = max(worst, gap)
        assert worst <= 1e-6


class TestSeparator:
    def test_examples(self):
        e1 = np.array([1.0, 0.0])
        assert separates_with_margin(e1, sample_of([[1, 0]], [1]), 1.0)
        assert not separates_with_margin(e1, sample_of([[0, 1]], [1]), 0.1)

    def test_solver_output_is_separator(self):
        gen = RngStream(23).generator()
        for _ in range(25):
            sample = random_separable(gen)
            sol = hard_svm(sample, tol=1e-8)
            assert separates_with_margin(sol.direction, sample, sol.margin - 1e-9)


def test_batch_equals_solo():
    rng = RngStream(40)
    dist = MarginDistribution(np.array([0.6, 0.8]), 0.25)
    samples = [dist.sample(48, rng.child("b", i)) for i in range(6)]
    batch = hard_svm_batch(
        np.stack([s.points for s in samples]),
        np.stack([s.labels for s in samples]),
        tol=1e-8,
    )
    for i, sample in enumerate(samples):
        solo = hard_svm(sample, tol=1e-8)
        assert solo.margin == batch.margins[i]
        assert np.array_equal(solo.direction, batch.directions[i])
        assert np.array_equal(solo.dual_certificate, batch.dual_certificates[i])
