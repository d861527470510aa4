"""Acceptance suite: one test per release criterion, one pass line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every tolerance is fixed here, not configurable.
"""

import json
import time
import warnings

import numpy as np

from infosid import arma, cli, control, noise, okid, plants, realization

BENCHMARKS = {
    "spring_mass_3dof": (plants.make_spring_mass_3dof, 4),
    "ltv_oscillator": (plants.make_ltv_oscillator, 4),
    "cartpole_linearized": (plants.make_cartpole_linearized, 4),
}


def _report(num, text):
    print(f"ACCEPTANCE {num}: PASS - {text}")


def test_criterion_1_exact_prediction():
    """Fit each benchmark with its operating order on 200 noise-free rollouts
    and predict 100 held-out rollouts with non-zero random initial
    conditions: one-step and free-run errors stay below 1e-6 relative."""
    start = time.monotonic()
    worst_one_step = worst_free_run = 0.0
    for name, (maker, q) in BENCHMARKS.items():
        sys = maker()
        batch = plants.generate_batch(sys, 200, init_law="gaussian", seed=1001)
        model = arma.fit_all(batch, q)
        info_model = realization.realize_tv(model)
        held = plants.generate_batch(sys, 100, init_law="gaussian", seed=9001)
        scale = np.abs(held.outputs).max()

        one_step = np.abs(arma.one_step_errors(model, held)).max() / scale
        free_run = 0.0
        for i in range(held.n_rollouts):
            ro = held.rollout(i)
            pred = realization.predict_rollout(info_model, ro)
            free_run = max(free_run, np.abs(pred[q:] - ro.outputs[q:]).max() / scale)
        assert one_step <= 1e-6, f"{name}: one-step {one_step:.3e}"
        assert free_run <= 1e-6, f"{name}: free-run {free_run:.3e}"
        worst_one_step = max(worst_one_step, one_step)
        worst_free_run = max(worst_free_run, free_run)
    elapsed = time.monotonic() - start
    assert elapsed <= 30.0, f"runtime {elapsed:.1f}s exceeds 30s"
    _report(
        1,
        f"held-out prediction: one-step <= {worst_one_step:.2e}, "
        f"free-run <= {worst_free_run:.2e} (limit 1e-6, {elapsed:.1f}s)",
    )


def test_criterion_2_rank_law():
    """Data-matrix rank on the oscillator equals min((m+r)q, n+rq), q=1..6."""
    sys = plants.make_ltv_oscillator()
    m, r, n = sys.m, sys.r, sys.n
    observed = {}
    for q in range(1, 7):
        batch = plants.generate_batch(
            sys, max(2 * (m + r) * q, 60), init_law="gaussian", seed=1100 + q
        )
        dm = arma.assemble(batch, max(q, 4), q)
        s = np.linalg.svd(dm.matrix, compute_uv=False)
        rank = int(np.count_nonzero(s > 1e-8 * s[0]))
        expected = min((m + r) * q, n + r * q)
        assert rank == expected, f"q={q}: rank {rank} != {expected}"
        observed[q] = rank
    assert observed[4] == 12
    _report(2, f"oscillator data-matrix ranks {observed} match min((m+r)q, n+rq)")


def test_criterion_3_oracle_equivalence():
    """Fitted and exact coefficients predict identically on fresh rollouts."""
    worst = 0.0
    for name, (maker, q) in BENCHMARKS.items():
        sys = maker()
        batch = plants.generate_batch(sys, 200, init_law="gaussian", seed=1201)
        fresh = plants.generate_batch(sys, 50, init_law="gaussian", seed=9201)
        scale = np.abs(fresh.outputs).max()
        for t in range(q, sys.horizon + 1):
            fitted = arma.fit_ls(arma.assemble(batch, t, q))
            exact = arma.fundamental_arma(sys, t, q)
            dm = arma.assemble(fresh, t, q)
            gap = (
                np.hstack([fitted.alpha - exact.alpha, fitted.beta - exact.beta])
                @ dm.matrix
            )
            rel = np.abs(gap).max() / scale
            assert rel <= 1e-8, f"{name} t={t}: prediction gap {rel:.3e}"
            worst = max(worst, rel)
    _report(3, f"LS vs fundamental predictions agree to {worst:.2e} (limit 1e-8)")


def test_criterion_4_markov_recovery():
    """ARMA-to-Markov recursion reproduces C A^k B for K = 2q."""
    worst = 0.0
    for maker, q in ((plants.make_spring_mass_3dof, 4), (plants.make_double_integrator, 2)):
        sys = maker()
        coeffs = arma.fundamental_arma(sys, q, q)
        got = realization.markov_from_arma(coeffs, 2 * q)
        want = plants.true_markov(sys, 2 * q)
        err = np.abs(got - want).max()
        assert err <= 1e-8, f"{sys.name}: Markov error {err:.3e}"
        worst = max(worst, err)
    _report(4, f"Markov recovery error <= {worst:.2e} (limit 1e-8)")


def test_criterion_5_control_equivalence():
    """Spring-mass, horizon 50: history-state LQR equals full-state LQR."""
    start = time.monotonic()
    sys = plants.make_spring_mass_3dof(horizon=50)
    model = realization.realize_tv(arma.fundamental_arma_model(sys, 4))
    cost = control.QuadraticCost(Qz=np.eye(2), R=0.1 * np.eye(1), Qf=10.0 * np.eye(2))
    x0 = np.random.Generator(np.random.Philox(key=[1300, 0])).standard_normal(6)
    report = control.run_equivalence(sys, model, cost, x0)
    elapsed = time.monotonic() - start
    assert report.rel_cost_gap <= 1e-6, f"cost gap {report.rel_cost_gap:.3e}"
    assert report.u_diff_rel.max() <= 1e-7, f"input diff {report.u_diff_rel.max():.3e}"
    assert elapsed <= 5.0, f"runtime {elapsed:.1f}s exceeds 5s"
    _report(
        5,
        f"rel cost gap {report.rel_cost_gap:.2e} (limit 1e-6), per-step input "
        f"diff <= {report.u_diff_rel.max():.2e} (limit 1e-7, {elapsed:.1f}s)",
    )


def test_criterion_6_q_optimality():
    """Shorter information window never costs more: J(4) <= J(6) on the
    spring-mass over 10 random initial states."""
    sys = plants.make_spring_mass_3dof()
    cost = control.QuadraticCost(Qz=np.eye(2), R=0.1 * np.eye(1), Qf=10.0 * np.eye(2))
    rng = np.random.Generator(np.random.Philox(key=[1400, 0]))
    worst_margin = np.inf
    for _ in range(10):
        x0 = rng.standard_normal(6)
        J4, J6 = control.compare_q_lengths(sys, cost, x0, 4, 6)
        margin = (J6 - J4) / abs(J4)
        assert margin >= -1e-9, f"J4={J4} > J6={J6}"
        worst_margin = min(worst_margin, margin)
    _report(6, f"J(q=4) <= J(q=6) on 10 random states; min margin {worst_margin:.2e}")


def test_criterion_7_noise_corrected_consistency():
    """Known-covariance correction beats plain LS on a noisy scalar plant in
    19/20 repetitions, and its error shrinks ~2x when N quadruples."""
    start = time.monotonic()
    sys = plants.make_scalar_plant(0.5, 1.0, 1.0, horizon=2)
    spec = plants.NoiseSpec(Q=np.zeros((1, 1)), R=np.array([[0.04]]))
    wins = 0
    err_small, err_big = [], []
    for rep in range(20):
        small = plants.generate_batch(
            sys, 10_000, init_law="gaussian", noise=spec, seed=100 + rep
        )
        big = plants.generate_batch(
            sys, 40_000, init_law="gaussian", noise=spec, seed=1100 + rep
        )
        corrected = noise.fit_arma_noisy(small, 1, 1, spec)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            plain = noise.fit_arma_uncorrected(small, 1, 1)
        err_c = abs(corrected.alpha[0, 0] - 0.5)
        if err_c < abs(plain.alpha[0, 0] - 0.5):
            wins += 1
        err_small.append(err_c)
        err_big.append(abs(noise.fit_arma_noisy(big, 1, 1, spec).alpha[0, 0] - 0.5))
    ratio = np.mean(err_small) / np.mean(err_big)
    elapsed = time.monotonic() - start
    assert wins >= 19, f"corrected won only {wins}/20"
    assert 1.3 <= ratio <= 3.0, f"error ratio {ratio:.2f} outside [1.3, 3]"
    assert elapsed <= 60.0, f"runtime {elapsed:.1f}s exceeds 60s"
    _report(
        7,
        f"correction wins {wins}/20; error ratio N=1e4 vs 4e4 is {ratio:.2f} "
        f"(band [1.3, 3], {elapsed:.1f}s)",
    )


def test_criterion_8_okid_mismatch():
    """Zero-IC spring-mass, q=4: open-loop Markov recovery is exact while the
    reconstructed observer Markov parameters are not, and the implied
    observer is far from deadbeat."""
    sys = plants.make_spring_mass_3dof()
    batch = plants.generate_batch(sys, 300, init_law="zero", seed=1501)
    om = okid.fit_observer_markov(batch, q=4)
    markov = okid.recover_open_loop_markov(om, 12)
    real = okid.era(markov, order=6, rows=4, cols=8)
    gain = okid.recover_observer_gain(real, om)
    report = okid.mismatch_report(real, gain, om, plants.true_markov(sys, 12))
    open_err = report.err_open_loop.max()
    obs_err = report.err_observer.max()
    assert open_err <= 1e-6, f"open-loop error {open_err:.3e}"
    assert obs_err >= 100 * open_err, f"ratio {obs_err / open_err:.1f} < 100"
    assert report.deadbeat_residual >= 1e-3, f"deadbeat {report.deadbeat_residual:.3e}"
    _report(
        8,
        f"open-loop err {open_err:.2e} vs observer err {obs_err:.2e} "
        f"(ratio {obs_err / max(open_err, 1e-300):.1e}), deadbeat residual "
        f"{report.deadbeat_residual:.2e}",
    )


def test_criterion_9_history_state_transform():
    """x_t equals the linear map of the history state, to 1e-10, on every
    stored-state rollout of every built-in plant at its operating order."""
    cases = dict(BENCHMARKS)
    cases["double_integrator"] = (plants.make_double_integrator, 2)
    cases["scalar"] = (plants.make_scalar_plant, 1)
    worst = 0.0
    for name, (maker, q) in cases.items():
        sys = maker()
        batch = plants.generate_batch(sys, 20, init_law="gaussian", seed=1601)
        scale = max(np.abs(batch.states).max(), 1.0)
        for t in range(q - 1, sys.horizon + 1):
            T = plants.info_state_transform(sys, t, q)
            for i in range(batch.n_rollouts):
                zeta = realization.info_state_at(batch.rollout(i), t, q)
                err = np.abs(T @ zeta.vector - batch.states[i, t]).max() / scale
                assert err <= 1e-10, f"{name} t={t} rollout {i}: {err:.3e}"
                worst = max(worst, err)
    _report(9, f"state transform error <= {worst:.2e} across all plants (limit 1e-10)")


def test_criterion_10_cli_determinism(tmp_path):
    """Rerunning every CLI command with the same seed reproduces every output
    file byte for byte."""

    def config(name, payload):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    runs = {
        "simulate": config(
            "sim.json",
            {"plant": "ltv_oscillator", "N": 25, "seed": 5, "init_law": "gaussian"},
        ),
        "identify": config(
            "id.json",
            {
                "plant": "double_integrator",
                "N": 80,
                "seed": 6,
                "init_law": "gaussian",
                "q": 2,
            },
        ),
        "control": config(
            "ctl.json", {"plant": "spring_mass_3dof", "horizon": 50, "q": 4, "seed": 7}
        ),
        "okid": config("ok.json", {"plant": "spring_mass_3dof", "N": 200, "q": 4, "seed": 8}),
        "noise-identify": config(
            "nid.json",
            {
                "plant": "scalar",
                "horizon": 3,
                "N": 2000,
                "q": 1,
                "seed": 9,
                "init_law": "gaussian",
                "noise": {"Q": [[0.0]], "R": [[0.04]]},
            },
        ),
    }
    # predict consumes identify's model file
    assert cli.main(["identify", "--config", runs["identify"], "--out", str(tmp_path / "model")]) == 0
    runs["predict"] = config(
        "pred.json",
        {
            "plant": "double_integrator",
            "model_file": str(tmp_path / "model" / "info_state_model.json"),
            "N": 30,
            "seed": 10,
            "init_law": "gaussian",
        },
    )

    checked = 0
    for command, cfg in runs.items():
        out_a, out_b = tmp_path / f"{command}_a", tmp_path / f"{command}_b"
        assert cli.main([command, "--config", cfg, "--out", str(out_a)]) == 0, command
        assert cli.main([command, "--config", cfg, "--out", str(out_b)]) == 0, command
        files_a = sorted(p.name for p in out_a.iterdir())
        files_b = sorted(p.name for p in out_b.iterdir())
        assert files_a == files_b and files_a, command
        for name in files_a:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), (
                f"{command}/{name} differs between reruns"
            )
            checked += 1
    _report(10, f"all 6 CLI commands byte-identical on rerun ({checked} files compared)")
