"""Command-line entry point.

Subcommands:
  run       single seeded trial with a verbose dump of truth and estimates
  sweep     Monte Carlo sweep from a config file, written as CSV
  validate  quick self-checks (geometry identities, noiseless oracle,
            root/grid agreement, filter constraint)
"""

import argparse
import sys

import numpy as np

from bisense import estimator, geometry, harness, scene, stfilter
from bisense.config import ScenarioConfig, load_config_file, scenario_from_mapping
from bisense.pipeline import run_pipeline
from bisense.scene import space_time_vector


def _load_scenario(path, seed=None) -> tuple[ScenarioConfig, dict]:
    data = load_config_file(path) if path else {}
    cfg = scenario_from_mapping(data.get("scenario", {}))
    if seed is not None:
        cfg = cfg.with_(seed=seed)
    return cfg, data


def cmd_run(args) -> int:
    cfg, _ = _load_scenario(args.config, args.seed)
    ss = np.random.SeedSequence([cfg.seed if args.seed is None else args.seed, 0, 0])
    methods = tuple(args.methods)
    outcome = harness.run_trial(cfg, methods, ss)
    t = outcome.truth
    print(f"truth: theta_r = {t.theta_r_deg:.4f} deg, theta_t = {t.theta_t_deg:.4f} deg")
    print(f"       v_t = {t.v_t_mps:.4f} m/s, d_bis = {t.d_bis_m:.4f} m")
    print(f"       clutter: theta_c = {t.theta_c_deg:.4f} deg, tau_c = {t.tau_c_s * 1e9:.2f} ns")
    for method in methods:
        est = outcome.estimates[method]
        if not est.detected:
            print(f"{method}: no target detected ({est.n_pairs} pairs)")
            continue
        scnr = ""
        if est.scnr_num is not None and est.scnr_den:
            scnr = f", scnr = {10 * np.log10(est.scnr_num / est.scnr_den):.2f} dB"
        print(
            f"{method}: theta_r = {est.theta_r_deg:.4f} deg "
            f"(initial {est.theta_r_initial_deg:.4f}), v = {est.v_mps:.4f} m/s, "
            f"d_bis = {est.d_bis_m:.4f} m{scnr}"
        )
    return 0


def cmd_sweep(args) -> int:
    cfg, data = _load_scenario(args.config, args.seed)
    if "sweep" not in data:
        print("config file has no `sweep` section", file=sys.stderr)
        return 2
    spec = harness.sweep_from_mapping(data["sweep"], cfg)
    if args.trials is not None:
        spec = harness.SweepSpec(
            axis=spec.axis,
            values=spec.values,
            base=spec.base,
            trials=args.trials,
            methods=spec.methods,
            master_seed=spec.master_seed if args.seed is None else args.seed,
            delta_theta_deg=spec.delta_theta_deg,
        )
    # Fail on an unwritable output path before any computation.
    with open(args.out, "w", encoding="utf-8"):
        pass
    records = harness.run_sweep(spec, threads=args.threads)
    harness.write_csv(records, args.out)
    print(f"wrote {len(records)} rows to {args.out}")
    return 0


def _check(name: str, ok: bool) -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return ok


def cmd_validate(args) -> int:
    cfg = ScenarioConfig()
    rng = np.random.default_rng(args.seed or 0)
    ok = True

    layout = geometry.NodeLayout(p_rx=(15.0, 0.0))
    sol = geometry.solve_from_position((7.5, 10.0), layout)
    rt = geometry.invert_from_estimates(sol.theta_r, sol.d_bis, layout)
    ok &= _check("geometry round-trip", abs(rt.d_rx - sol.d_rx) < 1e-9)

    truth = scene.make_truth(cfg, 40.0, 12.0, 25.0, rng)
    frame = scene.synthesize(cfg, truth, rng, include_clutter=False, noise_scale=1e-8)
    est = run_pipeline(frame, cfg, order=1)
    ok &= _check(
        "noiseless clutter-free estimates",
        est.detected
        and abs(est.theta_r_deg - truth.theta_r_deg) < 0.01
        and abs(est.v_mps - truth.v_t_mps) < 0.01
        and abs(est.d_bis_m - truth.d_bis_m) <= stfilter.SPEED_OF_LIGHT / (cfg.delta_f_hz * cfg.n_fft),
    )

    small = cfg.with_(m_symbols=6, n_rx=6, k_subcarriers=64)
    psi1 = space_time_vector(1200.0, 35.0, small)
    psi2 = space_time_vector(-800.0, -10.0, small)
    r = np.outer(psi1, psi1.conj()) + 0.5 * np.outer(psi2, psi2.conj())
    decomp = estimator.decompose_covariance((r + r.conj().T) / 2, 64, order=2)
    roots = sorted(estimator.rootmusic_aoa(decomp, small))
    grid = sorted(th for th, _ in estimator.music2d_estimate(decomp.u_noise, 2, small))
    ok &= _check(
        "root/grid oracle agreement",
        all(abs(a - b) < 0.01 for a, b in zip(roots, grid)),
    )

    psi = space_time_vector(1000.0, 20.0, small)
    r_psd = np.eye(psi.size) + np.outer(psi2[: psi.size], psi2[: psi.size].conj())
    filt = stfilter.mvdr_weights(r_psd, psi, 1e-6)
    ok &= _check("MVDR unity gain", abs(filt.u.conj() @ filt.psi_t - 1.0) < 1e-10)

    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bisense", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one trial and dump the estimates")
    p_run.add_argument("--config", default=None, help="YAML config path")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument(
        "--methods", nargs="+", default=["proposed"], choices=list(harness.METHODS)
    )
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo sweep to CSV")
    p_sweep.add_argument("--config", required=True, help="YAML config with a sweep section")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--trials", type=int, default=None, help="override trials per point")
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run quick oracle and invariant checks")
    p_val.add_argument("--seed", type=int, default=None)
    p_val.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
