import numpy as np
import pytest

from multisnap import (
    EigengapWarning,
    NoiseModel,
    SubspaceBasis,
    SupportSet,
    empirical_covariance,
    fit_loglog_slope,
    projector_distance,
    signal_space,
    sin_theta_distance,
    steering_matrix,
    synthesize_snapshots,
    true_signal_space,
)
from conftest import random_subspace, random_support


class TestEmpiricalCovariance:
    def test_rank_one(self):
        batch_data = np.array([[1.0], [0.0]], dtype=complex)
        from multisnap import SnapshotBatch

        cov = empirical_covariance(SnapshotBatch(batch_data))
        assert np.allclose(cov, [[1.0, 0.0], [0.0, 0.0]])

    def test_noiseless_equals_phi_x_phi(self, rng):
        support = random_support(rng, 3, min_sep=0.05)
        batch = synthesize_snapshots(support, 12, 20, seed=5)
        phi = steering_matrix(support, 12)
        x = batch.ground_truth.amplitudes.covariance
        assert np.allclose(empirical_covariance(batch), phi @ x @ phi.conj().T, atol=1e-12)

    def test_hermitian_psd(self, rng):
        support = random_support(rng, 2, min_sep=0.05)
        batch = synthesize_snapshots(support, 8, 30, noise=NoiseModel(0.5), seed=9)
        cov = empirical_covariance(batch)
        assert np.allclose(cov, cov.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(cov).min() >= -1e-10

    def test_population_limit_and_rate(self):
        # E[cov] = Phi X Phi* + nu^2 I; the error contracts like 1/sqrt(L)
        support = SupportSet([0.15, 0.45, 0.8])
        nu, M = 0.3, 4
        phi = steering_matrix(support, M)
        target = phi @ phi.conj().T + nu**2 * np.eye(M)
        errs = []
        for L in (1_000, 10_000, 100_000):
            batch = synthesize_snapshots(support, M, L, noise=NoiseModel(nu), seed=77)
            errs.append(np.linalg.norm(empirical_covariance(batch) - target, 2))
        assert errs[0] < 0.5  # small relative to the signal scale
        assert errs[2] < errs[0] / 3  # consistent with a 1/sqrt(L) contraction
        slope = fit_loglog_slope(list(zip([1e3, 1e4, 1e5], errs)))[0]
        assert slope == pytest.approx(-0.5, abs=0.2)


class TestSignalSpace:
    def test_diagonal(self):
        basis = signal_space(np.diag([3.0, 2.0, 1.0]), 2)
        span = np.abs(basis.basis)
        assert np.allclose(sorted(np.argmax(span, axis=0)), [0, 1])
        assert np.allclose(basis.eigenvalues, [3.0, 2.0])

    def test_full_space_two_sensors(self):
        support = SupportSet([0.0, 0.5])
        batch = synthesize_snapshots(support, 2, 6, seed=1)
        basis = signal_space(empirical_covariance(batch), 2)
        truth = true_signal_space(support, 2)
        assert sin_theta_distance(basis, truth) < 1e-10

    def test_noiseless_matches_steering_span(self, rng):
        support = random_support(rng, 3, min_sep=0.05)
        batch = synthesize_snapshots(support, 16, 8, seed=21)
        basis = signal_space(empirical_covariance(batch), 3)
        assert sin_theta_distance(basis, true_signal_space(support, 16)) < 1e-10

    def test_descending_eigenvalues(self, rng):
        support = random_support(rng, 4, min_sep=0.03)
        batch = synthesize_snapshots(support, 10, 50, noise=NoiseModel(0.2), seed=2)
        basis = signal_space(empirical_covariance(batch), 4)
        assert np.all(np.diff(basis.eigenvalues) <= 0)

    def test_degenerate_gap_warns(self):
        with pytest.warns(EigengapWarning):
            signal_space(np.eye(3), 2)

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            signal_space(np.eye(3), 4)


class TestSinTheta:
    def test_identical(self, rng):
        a = random_subspace(rng, 8, 3)
        assert sin_theta_distance(a, a) < 1e-12

    def test_orthogonal_spans(self):
        e1 = SubspaceBasis(np.array([[1.0], [0.0]], dtype=complex))
        e2 = SubspaceBasis(np.array([[0.0], [1.0]], dtype=complex))
        assert sin_theta_distance(e1, e2) == pytest.approx(1.0)

    def test_planar_rotation(self):
        theta = np.pi / 6
        e1 = SubspaceBasis(np.array([[1.0], [0.0]], dtype=complex))
        rot = SubspaceBasis(np.array([[np.cos(theta)], [np.sin(theta)]], dtype=complex))
        assert sin_theta_distance(e1, rot) == pytest.approx(0.5, abs=1e-12)

    def test_symmetry_range_and_unitary_invariance(self, rng):
        for _ in range(30):
            M = int(rng.integers(4, 17))
            S = int(rng.integers(1, M))
            a, b = random_subspace(rng, M, S), random_subspace(rng, M, S)
            d = sin_theta_distance(a, b)
            assert 0.0 <= d <= 1.0
            assert sin_theta_distance(b, a) == pytest.approx(d, abs=1e-12)
            q = np.linalg.qr(rng.standard_normal((S, S)) + 1j * rng.standard_normal((S, S)))[0]
            a_rot = SubspaceBasis(a.basis @ q)
            assert sin_theta_distance(a_rot, b) == pytest.approx(d, abs=1e-10)

    def test_matches_projector_route(self, rng):
        for _ in range(50):
            M = int(rng.integers(3, 13))
            S = int(rng.integers(1, M))
            a, b = random_subspace(rng, M, S), random_subspace(rng, M, S)
            assert abs(sin_theta_distance(a, b) - projector_distance(a, b)) < 1e-10

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            sin_theta_distance(random_subspace(rng, 6, 2), random_subspace(rng, 6, 3))


class TestPerturbationScaling:
    """Mean squared subspace distance contracts like nu^2 / L."""

    @staticmethod
    def _mean_sq_dist(support, M, L, nu, trials, seed0):
        truth = true_signal_space(support, M)
        vals = []
        for t in range(trials):
            batch = synthesize_snapshots(
                support, M, L, noise=NoiseModel(nu),
                seed=np.random.SeedSequence(seed0, spawn_key=(t,)),
            )
            basis = signal_space(empirical_covariance(batch), support.S)
            vals.append(sin_theta_distance(truth, basis) ** 2)
        return float(np.mean(vals))

    def test_slope_in_snapshots(self):
        support = SupportSet([0.2, 0.55])
        Ls = [100, 400, 1600, 6400]
        means = [self._mean_sq_dist(support, 16, L, 0.1, 40, 8) for L in Ls]
        slope = fit_loglog_slope(list(zip(Ls, means)))[0]
        assert -1.15 <= slope <= -0.85

    def test_slope_in_noise(self):
        support = SupportSet([0.2, 0.55])
        nus = [0.01, 0.03, 0.1, 0.3]
        means = [self._mean_sq_dist(support, 16, 400, nu, 40, 8) for nu in nus]
        slope = fit_loglog_slope(list(zip(nus, means)))[0]
        assert 1.8 <= slope <= 2.2
