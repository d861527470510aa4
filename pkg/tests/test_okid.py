import numpy as np
import pytest

from infosid import okid, plants, realization


@pytest.fixture(scope="module")
def scalar_setup():
    # Deadbeat-constructible case: q = 1, A+MC = 0 at M = -a, so the fitted
    # blocks are exactly [b, a] and every reconstruction is consistent.
    sys = plants.make_scalar_plant(0.5, 1.0, 1.0, horizon=12)
    batch = plants.generate_batch(sys, 60, init_law="zero", seed=30)
    om = okid.fit_observer_markov(batch, q=1)
    return sys, om


@pytest.fixture(scope="module")
def spring_mass_setup():
    sys = plants.make_spring_mass_3dof()
    batch = plants.generate_batch(sys, 300, init_law="zero", seed=31)
    om = okid.fit_observer_markov(batch, q=4)
    return sys, om


class TestFitObserverMarkov:
    def test_zero_batch(self):
        sys = plants.make_scalar_plant(horizon=8)
        batch = plants.generate_batch(sys, 40, input_sigma=0.0, seed=0)
        om = okid.fit_observer_markov(batch, q=2)
        assert np.all(om.blocks == 0.0)

    def test_scalar_deadbeat_block(self, scalar_setup):
        _, om = scalar_setup
        np.testing.assert_allclose(om.blocks[0], [[1.0, 0.5]], atol=1e-10)

    def test_spring_mass_predicts_held_out(self, spring_mass_setup):
        sys, om = spring_mass_setup
        held = plants.generate_batch(sys, 30, init_law="zero", seed=3100)
        q = om.q
        worst = 0.0
        for i in range(30):
            ro = held.rollout(i)
            for t in range(q, sys.horizon + 1):
                hist = np.concatenate(
                    [
                        np.concatenate([ro.inputs[t - 1 - k], ro.outputs[t - 1 - k]])
                        for k in range(q)
                    ]
                )
                pred = np.hstack([om.blocks[k] for k in range(q)]) @ hist
                worst = max(worst, np.abs(pred - ro.outputs[t]).max())
        assert worst <= 1e-8 * np.abs(held.outputs).max()


class TestOpenLoopRecovery:
    def test_scalar_geometric(self, scalar_setup):
        sys, om = scalar_setup
        Y = okid.recover_open_loop_markov(om, 5)
        np.testing.assert_allclose(Y.ravel(), [1.0, 0.5, 0.25, 0.125, 0.0625], atol=1e-10)

    def test_matches_arma_recursion(self, spring_mass_setup):
        _, om = spring_mass_setup
        Y1 = okid.recover_open_loop_markov(om, 10)
        Y2 = realization.markov_from_arma(om.as_arma(), 10)
        np.testing.assert_allclose(Y1, Y2, atol=1e-10)

    def test_spring_mass_matches_truth(self, spring_mass_setup):
        sys, om = spring_mass_setup
        np.testing.assert_allclose(
            okid.recover_open_loop_markov(om, 8), plants.true_markov(sys, 8), atol=1e-6
        )

    def test_zero_blocks_give_zero_sequence(self):
        om = okid.ObserverMarkov(q=2, m=1, r=1, blocks=np.zeros((2, 1, 2)))
        assert np.all(okid.recover_open_loop_markov(om, 6) == 0.0)


class TestEra:
    def test_scalar_roundtrip(self):
        Y = plants.true_markov(plants.make_scalar_plant(0.5, 1.0, 1.0), 6)
        real = okid.era(Y, order=1, rows=3, cols=3)
        re_markov = np.array(
            [real.C @ np.linalg.matrix_power(real.A, k) @ real.B for k in range(6)]
        )
        np.testing.assert_allclose(re_markov, Y, atol=1e-10)

    def test_double_integrator_roundtrip(self):
        Y = plants.true_markov(plants.make_double_integrator(), 10)
        real = okid.era(Y, order=2, rows=4, cols=4)
        re_markov = np.array(
            [real.C @ np.linalg.matrix_power(real.A, k) @ real.B for k in range(8)]
        )
        np.testing.assert_allclose(re_markov, Y[:8], atol=1e-8)

    def test_zero_markov_is_rank_zero(self):
        with pytest.raises(ValueError, match="singular values"):
            okid.era(np.zeros((8, 1, 1)), order=1, rows=3, cols=3)

    def test_too_few_parameters(self):
        with pytest.raises(ValueError, match="Markov blocks"):
            okid.era(np.zeros((4, 1, 1)), order=1, rows=3, cols=3)


class TestObserverGain:
    def test_scalar_deadbeat_gain(self, scalar_setup):
        sys, om = scalar_setup
        Y = okid.recover_open_loop_markov(om, 6)
        real = okid.era(Y, order=1, rows=3, cols=3)
        gain = okid.recover_observer_gain(real, om)
        assert gain.shape == (1, 1)
        eig = np.linalg.eigvals(real.A + gain @ real.C)
        assert np.abs(eig).max() <= 1e-10

    def test_spring_mass_not_deadbeat(self, spring_mass_setup):
        sys, om = spring_mass_setup
        Y = okid.recover_open_loop_markov(om, 12)
        real = okid.era(Y, order=6, rows=4, cols=8)
        gain = okid.recover_observer_gain(real, om)
        assert gain.shape == (6, 2)
        eig = np.abs(np.linalg.eigvals(real.A + gain @ real.C))
        assert eig.max() > 1e-3


class TestMismatchReport:
    def test_scalar_all_curves_vanish(self, scalar_setup):
        sys, om = scalar_setup
        Y = okid.recover_open_loop_markov(om, 6)
        real = okid.era(Y, order=1, rows=3, cols=3)
        gain = okid.recover_observer_gain(real, om)
        rep = okid.mismatch_report(real, gain, om, plants.true_markov(sys, 6))
        assert rep.err_open_loop.max() <= 1e-8
        assert rep.err_observer.max() <= 1e-8
        assert rep.deadbeat_residual <= 1e-10

    def test_spring_mass_mismatch(self, spring_mass_setup):
        # Open-loop recovery is exact while the observer reconstruction is
        # orders of magnitude off; regression values frozen from the first
        # run: max observer error ~0.32, deadbeat residual ~0.15.
        sys, om = spring_mass_setup
        Y = okid.recover_open_loop_markov(om, 12)
        real = okid.era(Y, order=6, rows=4, cols=8)
        gain = okid.recover_observer_gain(real, om)
        rep = okid.mismatch_report(real, gain, om, plants.true_markov(sys, 12))
        assert rep.err_open_loop.max() <= 1e-6
        assert rep.err_observer.max() >= 1e-3
        assert rep.err_observer.max() >= 100 * rep.err_open_loop.max()
        assert rep.deadbeat_residual >= 1e-3
        assert 0.1 <= rep.err_observer.max() <= 1.0
        assert 0.05 <= rep.deadbeat_residual <= 0.5

    def test_report_csv(self, tmp_path, scalar_setup):
        sys, om = scalar_setup
        Y = okid.recover_open_loop_markov(om, 6)
        real = okid.era(Y, order=1, rows=3, cols=3)
        gain = okid.recover_observer_gain(real, om)
        rep = okid.mismatch_report(real, gain, om, plants.true_markov(sys, 6))
        okid.save_mismatch_report(
            rep, str(tmp_path / "mm.csv"), str(tmp_path / "mm.json")
        )
        lines = (tmp_path / "mm.csv").read_text().strip().splitlines()
        assert lines[0] == "k,err_openloop_Y,err_observer_Ybar"
