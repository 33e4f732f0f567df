"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line for its criterion. The Monte Carlo
trend checks run 200 trials per sweep point under the fixed master seed
below; sweep results are deterministic for any worker count.
"""

import math
import os
import time

import numpy as np
import pytest

from bisense import backsub, estimator, geometry, harness, scene, stfilter
from bisense.config import ScenarioConfig
from bisense.harness import SweepSpec, run_sweep
from bisense.pipeline import run_pipeline
from bisense.scene import space_time_vector

MASTER_SEED = 9
TRIALS = 200
THREADS = min(8, os.cpu_count() or 1)


def report(name: str, ok: bool) -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return ok


def by_method(records):
    out = {}
    for rec in records:
        out.setdefault(rec.method, {})[rec.axis_value] = rec
    return out


# ---------------------------------------------------------------------------
# Sweep fixtures (shared across criteria, one run each)
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def base_cfg():
    return ScenarioConfig()


@pytest.fixture(scope="module")
def p_sweep(base_cfg):
    spec = SweepSpec(
        axis="P_Tx_dBm", values=(0, 5, 10, 15, 20, 25, 30), base=base_cfg,
        trials=TRIALS, methods=("proposed",), master_seed=MASTER_SEED,
    )
    start = time.monotonic()
    records = run_sweep(spec, threads=THREADS)
    return records, time.monotonic() - start


@pytest.fixture(scope="module")
def ncl_sweep(base_cfg):
    spec = SweepSpec(
        axis="N_cl", values=(2, 6), base=base_cfg.with_(p_tx_dbm=20.0),
        trials=TRIALS, methods=("proposed",), master_seed=MASTER_SEED,
    )
    return run_sweep(spec, threads=THREADS)


@pytest.fixture(scope="module")
def method_sweep(base_cfg):
    spec = SweepSpec(
        axis="P_Tx_dBm", values=(20, 25, 30), base=base_cfg, trials=TRIALS,
        methods=("proposed", "backsub_ideal", "backsub_perturbed"),
        master_seed=MASTER_SEED, delta_theta_deg=5.0,
    )
    return by_method(run_sweep(spec, threads=THREADS))


@pytest.fixture(scope="module")
def symbols_sweep(base_cfg):
    out = {}
    for m_s in (8, 12):
        spec = SweepSpec(
            axis="P_Tx_dBm", values=(20, 25, 30), base=base_cfg.with_(m_symbols=m_s),
            trials=TRIALS, methods=("proposed",), master_seed=MASTER_SEED,
        )
        out[m_s] = {rec.axis_value: rec for rec in run_sweep(spec, threads=THREADS)}
    return out


@pytest.fixture(scope="module")
def rcs_sweep(base_cfg):
    spec = SweepSpec(
        axis="alpha_RCS_t", values=(0.2, 0.5, 1.0), base=base_cfg.with_(p_tx_dbm=20.0),
        trials=TRIALS, methods=("proposed",), master_seed=MASTER_SEED,
    )
    return run_sweep(spec, threads=THREADS)


@pytest.fixture(scope="module")
def rcs_gap_sweep(base_cfg):
    out = {}
    for alpha in (0.5, 1.0):
        spec = SweepSpec(
            axis="P_Tx_dBm", values=(15, 20, 25, 30),
            base=base_cfg.with_(rcs_target_m2=alpha), trials=TRIALS,
            methods=("proposed", "backsub_ideal"), master_seed=MASTER_SEED,
        )
        out[alpha] = by_method(run_sweep(spec, threads=THREADS))
    return out


# ---------------------------------------------------------------------------
# Oracle and invariant criteria
# ---------------------------------------------------------------------------


def test_clutter_free_oracle(base_cfg):
    # 100 noiseless single-target scenes: angle and velocity to 0.01,
    # range within one bin; under a minute.
    start = time.monotonic()
    bin_width = geometry.SPEED_OF_LIGHT / (base_cfg.delta_f_hz * base_cfg.n_fft)
    rng = np.random.default_rng(2024)
    ok = True
    for _ in range(100):
        truth = harness.draw_truth(base_cfg, rng)
        frame = scene.synthesize(base_cfg, truth, rng, include_clutter=False, noise_scale=1e-8)
        est = run_pipeline(frame, base_cfg, order=1)
        ok &= est.detected
        ok &= abs(est.theta_r_deg - truth.theta_r_deg) < 0.01
        ok &= abs(est.v_mps - truth.v_t_mps) < 0.01
        ok &= abs(est.d_bis_m - truth.d_bis_m) <= bin_width
    elapsed = time.monotonic() - start
    ok &= elapsed < 60.0
    assert report(f"clutter-free oracle (100 scenes, {elapsed:.1f}s)", ok)


def test_root_grid_oracle_equivalence():
    # 50 noiseless two-source scenes: both rooting strategies match the
    # grid search to 0.01 deg and 1 Hz; under five minutes.
    start = time.monotonic()
    small = ScenarioConfig(m_symbols=6, n_rx=6, n_tx=6, k_subcarriers=64)
    rng = np.random.default_rng(77)
    ok = True
    for _ in range(50):
        thetas = np.sort(rng.uniform(-55.0, 55.0, size=2))
        while thetas[1] - thetas[0] < 8.0:
            thetas = np.sort(rng.uniform(-55.0, 55.0, size=2))
        fds = rng.uniform(-2000.0, 2000.0, size=2)
        r = 1e-6 * np.eye(small.space_time_dim, dtype=complex)
        for theta, fd, p in zip(thetas, fds, (1.0, 0.7)):
            psi = space_time_vector(fd, theta, small)
            r += p * np.outer(psi, psi.conj())
        decomp = estimator.decompose_covariance((r + r.conj().T) / 2, 64, order=2)
        grid = sorted(estimator.music2d_estimate(decomp.u_noise, 2, small))
        lam = decomp.u_noise @ decomp.u_noise.conj().T
        for strategy in ("spatial", "rank_reduction"):
            angles = sorted(estimator.rootmusic_aoa(decomp, small.with_(aoa_strategy=strategy)))
            for angle, (g_theta, g_fd) in zip(angles, grid):
                ok &= abs(angle - g_theta) < 0.01
                v = estimator.rootmusic_doppler(lam, angle, small)
                ok &= abs(v / small.wavelength_m - g_fd) < 1.0
    elapsed = time.monotonic() - start
    ok &= elapsed < 300.0
    assert report(f"root/grid oracle equivalence (50 scenes, {elapsed:.1f}s)", ok)


def test_geometry_identities():
    layout = geometry.NodeLayout(p_rx=(15.0, 0.0))
    rng = np.random.default_rng(5)
    ok = True
    for _ in range(10_000):
        x = rng.uniform(-30.0, 45.0)
        y = rng.uniform(0.5, 60.0)
        sol = geometry.solve_from_position((x, y), layout)
        ok &= abs(sol.theta_t + sol.theta_r + sol.beta_t - 180.0) <= 1e-6
        ok &= abs(
            sol.d_rx * math.sin(math.radians(sol.theta_r))
            - sol.d_tx * math.sin(math.radians(sol.theta_t))
        ) <= 1e-6
        back = geometry.invert_from_estimates(sol.theta_r, sol.d_bis, layout)
        ok &= abs(back.d_tx - sol.d_tx) <= 1e-9
        ok &= abs(back.d_rx - sol.d_rx) <= 1e-9
    assert report("triangle identities and round-trip (1e4 scenes)", ok)


def test_radar_equation_point_value():
    cfg = ScenarioConfig(p_tx_dbm=30.0)  # 1 W, unity gains and RCS
    power = scene.path_amplitude("target", (12.5, 12.5), cfg) ** 2
    ok = abs(power - 2.366e-12) < 1e-15
    assert report(f"radar equation point value ({power:.4e} W)", ok)


def test_statistical_checks(base_cfg):
    rng = np.random.default_rng(9)
    draws = 100_000 // base_cfg.n_clutter_rays
    powers = np.concatenate(
        [np.abs(scene.draw_clutter_rays(base_cfg, rng)[1]) ** 2 for _ in range(draws)]
    )
    expect = base_cfg.rcs_clutter_m2 / base_cfg.n_clutter_rays
    ok = abs(powers.mean() - expect) <= 0.02 * expect

    truth = scene.make_truth(base_cfg, 40.0, 12.0, 30.0, np.random.default_rng(0))
    acc = n = 0
    for trial in range(10):
        m = scene.synthesize(
            base_cfg, truth, np.random.default_rng(300 + trial),
            include_target=False, include_clutter=False,
        )
        ref = backsub.capture_reference(base_cfg, truth, "ideal", np.random.default_rng(400 + trial))
        res = backsub.subtract(m, ref)
        acc += np.sum(np.abs(res.noise) ** 2)
        n += res.noise.size
    expect_var = 2.0 * base_cfg.noise_power_watts
    ok &= abs(acc / n - expect_var) <= 0.02 * expect_var
    assert report("ray power mean and residual noise variance (2%)", ok)


def test_filter_properties(base_cfg):
    psi_t = space_time_vector(1000.0, 20.0, base_cfg)
    psi_c = space_time_vector(0.0, -30.0, base_cfg)
    r = np.outer(psi_c, psi_c.conj()) + 0.01 * np.eye(psi_t.size)
    r = (r + r.conj().T) / 2.0
    load = 1e-8
    filt = stfilter.mvdr_weights(r, psi_t, load)
    ok = abs(filt.u.conj() @ psi_t - 1.0) < 1e-10

    p_t = estimator.signature_projector(psi_t[:, None])
    ok &= np.linalg.norm(p_t @ p_t - p_t) < 1e-10
    ok &= np.linalg.norm(p_t @ psi_t) < 1e-10

    r_loaded = r + load * np.eye(r.shape[0])
    p_opt = float((filt.u.conj() @ r_loaded @ filt.u).real)
    rng = np.random.default_rng(13)
    for _ in range(100):
        d = rng.standard_normal(psi_t.size) + 1j * rng.standard_normal(psi_t.size)
        d -= psi_t * (psi_t.conj() @ d) / (psi_t.conj() @ psi_t)
        w = filt.u + 0.05 * d / np.linalg.norm(d)
        ok &= float((w.conj() @ r_loaded @ w).real) >= p_opt * (1.0 - 1e-8)
    assert report("filter constraint, projector, MVDR optimality", ok)


# ---------------------------------------------------------------------------
# Trend criteria (200 trials per point)
# ---------------------------------------------------------------------------


def test_scnr_power_trend(p_sweep):
    records, elapsed = p_sweep
    scnr = [rec.scnr_db for rec in records]
    rising = all(a < b for a, b in zip(scnr[:5], scnr[1:6]))
    saturating = (scnr[6] - scnr[5]) < (scnr[1] - scnr[0])
    ok = rising and saturating and elapsed < 900.0
    assert report(
        f"SCNR rises over 0..25 dBm and saturates above 25 dBm ({elapsed:.0f}s)", ok
    )


def test_scnr_clutter_ray_count(ncl_sweep):
    scnr = {rec.axis_value: rec.scnr_db for rec in ncl_sweep}
    # Known shortfall: with per-ray reflectivity variance RCS/N_cl and the
    # extra amplitude normalization 1/sqrt(N_cl), total clutter power
    # shrinks as rays are added, so more rays raise the SCNR here instead
    # of lowering it. Kept as an honest failure; see README limitations.
    ok = scnr[6] < scnr[2]
    assert report("SCNR lower with 6 clutter rays than 2 at 20 dBm", ok)


def test_aoa_rmse_beats_perturbed_reference(method_sweep):
    ok = True
    for p in (20, 25, 30):
        ok &= (
            method_sweep["proposed"][p].rmse_aoa_deg
            < method_sweep["backsub_perturbed"][p].rmse_aoa_deg
        )
        ok &= (
            method_sweep["backsub_ideal"][p].rmse_aoa_deg
            <= method_sweep["proposed"][p].rmse_aoa_deg
        )
    assert report("AoA RMSE: ideal <= proposed < perturbed at P >= 20 dBm", ok)


def test_velocity_rmse_improves_with_longer_frame(symbols_sweep):
    ok = all(
        symbols_sweep[12][p].rmse_vel_mps <= symbols_sweep[8][p].rmse_vel_mps
        for p in (20, 25, 30)
    )
    assert report("velocity RMSE: 12 symbols <= 8 symbols at P >= 20 dBm", ok)


def test_range_rmse_improves_with_target_rcs(rcs_sweep):
    rmse = [rec.rmse_range_m for rec in rcs_sweep]
    ok = rmse[0] > rmse[1] > rmse[2]
    assert report("range RMSE decreases over target RCS 0.2/0.5/1.0 m^2", ok)


def test_range_gap_to_ideal_reference(rcs_gap_sweep):
    ok = True
    for alpha, methods in rcs_gap_sweep.items():
        for p in (15, 20, 25, 30):
            gap = methods["proposed"][p].rmse_range_m - methods["backsub_ideal"][p].rmse_range_m
            ok &= gap <= 0.5
    assert report("range RMSE gap to ideal reference <= 0.5 m at P >= 15 dBm", ok)


def test_csv_determinism(tmp_path):
    spec = SweepSpec(
        axis="P_Tx_dBm", values=(10.0, 20.0),
        base=ScenarioConfig(k_subcarriers=96, m_symbols=6, n_rx=6, n_tx=6),
        trials=8, methods=("proposed", "backsub_ideal"), master_seed=MASTER_SEED,
    )
    blobs = []
    for i, threads in enumerate((1, 1, 4)):
        path = tmp_path / f"run{i}.csv"
        harness.write_csv(run_sweep(spec, threads=threads), path)
        blobs.append(path.read_bytes())
    ok = blobs[0] == blobs[1] == blobs[2]
    assert report("identical CSV bytes across reruns and thread counts", ok)
