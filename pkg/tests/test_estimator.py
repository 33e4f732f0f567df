import numpy as np
import pytest

from bisense import estimator, numerics, scene
from bisense.errors import ContractViolation, EstimationFailure
from bisense.scene import space_time_vector


def two_source_covariance(small_cfg, params, powers=(1.0, 0.7), noise=1e-4):
    r = noise * np.eye(small_cfg.space_time_dim, dtype=complex)
    for (fd, theta), p in zip(params, powers):
        psi = space_time_vector(fd, theta, small_cfg)
        r += p * np.outer(psi, psi.conj())
    return (r + r.conj().T) / 2.0


class TestSampleCovariance:
    def test_matches_definition(self, rng):
        y = rng.standard_normal((32, 6)) + 1j * rng.standard_normal((32, 6))
        r = estimator.sample_covariance(y)
        expect = sum(np.outer(row, row.conj()) for row in y) / 32
        assert np.allclose(r, expect, atol=1e-12)
        assert np.allclose(r, r.conj().T, atol=1e-15)

    def test_rejects_bad_shape(self):
        with pytest.raises(ContractViolation):
            estimator.sample_covariance(np.zeros(5))


class TestMdlOrder:
    def test_recovers_source_count(self, small_cfg, rng):
        psi1 = space_time_vector(900.0, 30.0, small_cfg)
        psi2 = space_time_vector(-500.0, -20.0, small_cfg)
        k = 400
        sig = rng.standard_normal((k, 2)) + 1j * rng.standard_normal((k, 2))
        y = sig[:, :1] * psi1 + 0.8 * sig[:, 1:] * psi2
        y += 0.05 * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
        decomp = estimator.decompose(y)
        assert decomp.l_hat == 2

    def test_pure_noise_gives_zero(self, rng):
        y = rng.standard_normal((500, 12)) + 1j * rng.standard_normal((500, 12))
        eig = numerics.hermitian_evd(estimator.sample_covariance(y))
        assert estimator.mdl_order(eig.eigenvalues, 500) == 0

    def test_rejects_unsorted(self):
        with pytest.raises(ContractViolation):
            estimator.mdl_order(np.array([1.0, 2.0, 0.5]), 100)


class TestOracleAgreement:
    def test_root_stages_match_grid_oracle(self, small_cfg, rng):
        # 50 random noiseless two-source scenes: both rooting strategies
        # must reproduce the 2D-MUSIC grid peaks to 0.01 deg and 1 Hz.
        for trial in range(50):
            thetas = np.sort(rng.uniform(-55.0, 55.0, size=2))
            while thetas[1] - thetas[0] < 8.0:
                thetas = np.sort(rng.uniform(-55.0, 55.0, size=2))
            fds = rng.uniform(-2000.0, 2000.0, size=2)
            r = two_source_covariance(small_cfg, list(zip(fds, thetas)))
            decomp = estimator.decompose_covariance(r, k_snapshots=64, order=2)
            grid = sorted(estimator.music2d_estimate(decomp.u_noise, 2, small_cfg))
            for strategy in ("spatial", "rank_reduction"):
                cfg_s = small_cfg.with_(aoa_strategy=strategy)
                angles = sorted(estimator.rootmusic_aoa(decomp, cfg_s))
                lam = decomp.u_noise @ decomp.u_noise.conj().T
                for angle, (g_theta, g_fd) in zip(angles, grid):
                    assert abs(angle - g_theta) < 0.01, (trial, strategy, thetas, fds, angles, grid)
                    v = estimator.rootmusic_doppler(lam, angle, cfg_s)
                    assert abs(v / small_cfg.wavelength_m - g_fd) < 1.0, (trial, strategy, thetas, fds, angles, grid)


class TestRootMusic:
    def test_exact_recovery_single_source(self, small_cfg):
        r = two_source_covariance(small_cfg, [(1200.0, 35.0)], powers=(1.0,))
        decomp = estimator.decompose_covariance(r, k_snapshots=64, order=1)
        (theta,) = estimator.rootmusic_aoa(decomp, small_cfg)
        assert theta == pytest.approx(35.0, abs=1e-6)
        lam = decomp.u_noise @ decomp.u_noise.conj().T
        v = estimator.rootmusic_doppler(lam, theta, small_cfg)
        assert v / small_cfg.wavelength_m == pytest.approx(1200.0, abs=1e-3)

    def test_doppler_distinguishes_sources_at_same_angle(self, small_cfg):
        # Two sources sharing an angle: the Doppler stage at that angle must
        # return one of the true Dopplers, resolved by the joint subspace.
        r = two_source_covariance(small_cfg, [(800.0, 20.0), (-1500.0, 45.0)])
        decomp = estimator.decompose_covariance(r, k_snapshots=64, order=2)
        lam = decomp.u_noise @ decomp.u_noise.conj().T
        v1 = estimator.rootmusic_doppler(lam, 20.0, small_cfg)
        v2 = estimator.rootmusic_doppler(lam, 45.0, small_cfg)
        assert v1 / small_cfg.wavelength_m == pytest.approx(800.0, abs=0.5)
        assert v2 / small_cfg.wavelength_m == pytest.approx(-1500.0, abs=0.5)

    def test_spatial_covariance_block_average(self, small_cfg, rng):
        y = rng.standard_normal((40, small_cfg.space_time_dim)) + 1j * rng.standard_normal(
            (40, small_cfg.space_time_dim)
        )
        r = estimator.sample_covariance(y)
        r_sp = estimator.spatial_covariance(r, small_cfg.m_symbols, small_cfg.n_rx)
        # Same as the sample covariance of all K*M_s per-symbol array snapshots.
        blocks = y.reshape(40, small_cfg.m_symbols, small_cfg.n_rx)
        expect = np.einsum("kma,kmb->ab", blocks, blocks.conj()) / (40 * small_cfg.m_symbols)
        assert np.allclose(r_sp, expect, atol=1e-12)

    def test_insufficient_roots_raises(self, small_cfg):
        r = np.eye(small_cfg.space_time_dim, dtype=complex)
        decomp = estimator.decompose_covariance(r, k_snapshots=64, order=0)
        with pytest.raises(EstimationFailure):
            estimator.rootmusic_aoa(decomp, small_cfg)


class TestSelection:
    def test_static_pairs_discarded(self):
        est = estimator.EstimateSet(pairs=[(10.0, 0.2), (40.0, 12.0), (25.0, -14.0)])
        estimator.select_target(est, v_min_mps=5.0)
        assert est.target_index == 2  # largest |v| above the gate

    def test_all_static_leaves_unset(self):
        est = estimator.EstimateSet(pairs=[(10.0, 0.2), (12.0, -0.4)])
        estimator.select_target(est, v_min_mps=5.0)
        assert est.target_index is None


class TestProjection:
    def test_projector_idempotent_and_annihilating(self, small_cfg):
        psi = space_time_vector(700.0, 15.0, small_cfg)
        p = estimator.signature_projector(psi[:, None])
        assert np.linalg.norm(p @ p - p) < 1e-10
        assert np.linalg.norm(p @ psi) < 1e-10

    def test_project_out_target_removes_target_power(self, small_cfg):
        psi_t = space_time_vector(1200.0, 35.0, small_cfg)
        psi_c = space_time_vector(0.0, -30.0, small_cfg)
        r = 5.0 * np.outer(psi_t, psi_t.conj()) + np.outer(psi_c, psi_c.conj())
        r_tilde = estimator.project_out_target((r + r.conj().T) / 2, psi_t)
        assert abs(psi_t.conj() @ r_tilde @ psi_t) < 1e-8
        # Clutter energy survives the projection.
        assert (psi_c.conj() @ r_tilde @ psi_c).real > 0.5 * psi_c.size**2 * 0.1


class TestEndToEnd:
    def test_estimate_two_sources_with_gate(self, small_cfg, rng):
        lam = small_cfg.wavelength_m
        fd_t = 12.0 / lam  # moving target; second source is static
        psi_t = space_time_vector(fd_t, 50.0, small_cfg)
        psi_c = space_time_vector(0.0, 80.0, small_cfg)
        k = 256
        sig = rng.standard_normal((k, 2)) + 1j * rng.standard_normal((k, 2))
        y = sig[:, :1] * psi_t + 2.0 * sig[:, 1:] * psi_c
        y += 1e-3 * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
        est, _ = estimator.estimate(y, small_cfg.with_(v_min_mps=5.0), order=2)
        assert est.target_index is not None
        theta, v = est.pairs[est.target_index]
        assert theta == pytest.approx(50.0, abs=0.05)
        assert v == pytest.approx(12.0, abs=0.05)

    def test_refine_recovers_biased_angle(self, cfg, rng):
        # Full-size scene: initial angle nudged off truth must be pulled back.
        truth = scene.make_truth(cfg, 40.0, 12.0, 30.0, rng)
        frame = scene.synthesize(cfg, truth, rng, noise_scale=0.1)
        decomp = estimator.decompose(frame.snapshots, order=2)
        steer = scene.baseline_to_steering(truth.theta_r_deg)
        refined = estimator.refine_aoa(decomp, steer + 0.3, truth.v_t_mps, cfg)
        assert abs(refined - steer) < abs(0.3) * 0.5
