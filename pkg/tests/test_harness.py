import numpy as np
import pytest

from erid.agents import ProtocolKind, StepBoundError
from erid.dynamics import BoxBounds, Dynamics, OdeConfig, integrate
from erid.games import GameSchedule, biased_rps, matching_pennies, scaled_rps
from erid.harness import (AgentKind, AgentSpec, ExperimentConfig, compare_to_ode,
                          cross_learning_drift_validate, drift_validate, run_learning, run_replicas,
                          running_average_policy)
from erid.simplex import PolicyProfile
from erid.trajectory import Trajectory

MP_START = PolicyProfile((0.2, 0.8), (0.2, 0.8))
RPS_START = PolicyProfile((0.1, 0.1, 0.8), (0.8, 0.1, 0.1))


def erid(protocol="bnn", alpha=1e-3, k=50):
    return AgentSpec(AgentKind.ERID, ProtocolKind(protocol), alpha, k)


ENGINE_CASES = [
    ("bnn", ExperimentConfig(biased_rps(), (erid("bnn"),), 3000, 3, 100, initial=RPS_START)),
    ("smith", ExperimentConfig(matching_pennies(), (erid("smith"),), 3000, 4, 70, initial=MP_START)),
    ("srp-box", ExperimentConfig(biased_rps(), (AgentSpec(
        AgentKind.ERID, ProtocolKind("srp", BoxBounds([0.05] * 3, [0.9] * 3)), 1e-3, 30),), 3000, 5, 100)),
    ("cross", ExperimentConfig(biased_rps(), (AgentSpec(AgentKind.CROSS, alpha=0.05),), 3000, 6, 100)),
    ("hedge", ExperimentConfig(matching_pennies(), (AgentSpec(AgentKind.HEDGE, hedge_rate=0.05),), 3000, 7, 100,
                               initial=MP_START)),
    ("mixed", ExperimentConfig(biased_rps(), (erid("smith"), AgentSpec(AgentKind.HEDGE, hedge_rate=0.02)),
                               3000, 8, 100)),
    ("selfplay-phase", ExperimentConfig(GameSchedule.phase_switched(700), (erid("bnn", 2e-3, 50),), 3000, 9, 50,
                                        self_play=True)),
    ("selfplay-continuous", ExperimentConfig(GameSchedule.continuous_scaled(600, 300), (AgentSpec(
        AgentKind.CROSS, alpha=0.05),), 3000, 10, 100, self_play=True)),
    ("noise", ExperimentConfig(biased_rps(), (erid("bnn"),), 3000, 11, 100, reward_noise=0.3)),
]


class TestRunLearning:
    @pytest.mark.parametrize("name, cfg", ENGINE_CASES, ids=[c[0] for c in ENGINE_CASES])
    def test_compiled_engine_matches_reference(self, name, cfg):
        a = run_learning(cfg)
        b = run_learning(cfg, engine="python")
        np.testing.assert_array_equal(a.t, b.t)
        np.testing.assert_allclose(a.policy1, b.policy1, atol=1e-12, rtol=0)
        np.testing.assert_allclose(a.policy2, b.policy2, atol=1e-12, rtol=0)
        assert a.metadata["projection_events"] == b.metadata["projection_events"]

    @pytest.mark.parametrize("kind", list(AgentKind))
    def test_zero_rate_keeps_policies(self, kind):
        spec = AgentSpec(kind, alpha=0.0, hedge_rate=0.0)
        traj = run_learning(ExperimentConfig(biased_rps(), (spec,), 500, 1, 50, initial=RPS_START))
        # Hedge re-derives its policy through softmax(log prior), exact only up to rounding
        np.testing.assert_allclose(traj.policy1, np.tile(RPS_START.player1.probs, (len(traj), 1)), atol=1e-15)
        np.testing.assert_allclose(traj.policy2, np.tile(RPS_START.player2.probs, (len(traj), 1)), atol=1e-15)

    def test_deterministic(self):
        cfg = ExperimentConfig(matching_pennies(), (erid(),), 5000, 42, 100, initial=MP_START)
        a, b = run_learning(cfg), run_learning(cfg)
        np.testing.assert_array_equal(a.policy1, b.policy1)
        np.testing.assert_array_equal(a.nashconv, b.nashconv)
        c = run_learning(ExperimentConfig(matching_pennies(), (erid(),), 5000, 43, 100, initial=MP_START))
        assert not np.array_equal(a.policy1, c.policy1)

    def test_record_times(self):
        traj = run_learning(ExperimentConfig(matching_pennies(), (erid(),), 250, 0, 100))
        np.testing.assert_array_equal(traj.t, [0, 100, 200, 250])
        assert traj.metadata["time_unit"] == "step"

    def test_matching_pennies_converges(self):
        cfg = ExperimentConfig(matching_pennies(), (AgentSpec(AgentKind.ERID, ProtocolKind("bnn"), 1e-4, 1000),),
                               200_000, 7, 1000)
        traj = run_learning(cfg)
        assert np.abs(traj.policy1[-1] - 0.5).max() < 0.05
        assert np.abs(traj.policy2[-1] - 0.5).max() < 0.05
        assert np.all(np.isfinite(traj.nashconv)) and np.all(traj.nashconv >= 0)

    def test_self_play_keeps_seats_equal(self):
        cfg = ExperimentConfig(biased_rps(), (erid(),), 2000, 1, 100, self_play=True)
        traj = run_learning(cfg)
        np.testing.assert_array_equal(traj.policy1, traj.policy2)

    def test_step_bound_error(self):
        spec = AgentSpec(AgentKind.ERID, ProtocolKind("smith"), 0.5, 5)
        with pytest.raises(StepBoundError):
            run_learning(ExperimentConfig(scaled_rps(6), (spec,), 1000, 0, 100, initial=RPS_START))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(matching_pennies(), n_steps=0)
        with pytest.raises(ValueError):
            ExperimentConfig(matching_pennies(), initial=RPS_START)
        with pytest.raises(ValueError):
            ExperimentConfig(matching_pennies(), self_play=True,
                             initial=PolicyProfile((0.2, 0.8), (0.5, 0.5)))
        with pytest.raises(ValueError):
            AgentSpec(AgentKind.CROSS, ProtocolKind("bnn"))
        with pytest.raises(ValueError):
            ExperimentConfig(matching_pennies(), reward_noise=-1.0)

    def test_cross_alpha_above_one(self):
        with pytest.raises(ValueError):
            run_learning(ExperimentConfig(matching_pennies(), (AgentSpec(AgentKind.CROSS, alpha=2.0),), 10))

    def test_running_average_flag(self):
        cfg = ExperimentConfig(matching_pennies(), (AgentSpec(AgentKind.HEDGE, hedge_rate=0.1),), 2000, 0, 10,
                               initial=MP_START, report_running_average=True)
        traj = run_learning(cfg)
        raw = run_learning(ExperimentConfig(matching_pennies(), cfg.agents, 2000, 0, 10, initial=MP_START))
        np.testing.assert_allclose(traj.policy1, running_average_policy(raw).policy1, atol=1e-15)

    def test_replicas(self):
        cfgs = [ExperimentConfig(matching_pennies(), (erid(),), 1000, s, 100) for s in (1, 2)]
        serial = run_replicas(cfgs)
        parallel = run_replicas(cfgs, max_workers=2)
        for a, b in zip(serial, parallel):
            np.testing.assert_array_equal(a.policy1, b.policy1)


class TestCompareToOde:
    def test_ode_against_itself(self):
        cfg = OdeConfig(1e-3, 5000, 100)
        ode = integrate(Dynamics.BNN, biased_rps(), RPS_START, cfg)
        # relabel the ODE samples as learner steps with alpha = step size
        fake = Trajectory(np.arange(len(ode)) * 100, ode.policy1, ode.policy2, ode.nashconv,
                          ode.relative_nashconv, ode.schedule, {"alpha": 1e-3})
        assert compare_to_ode(fake, Dynamics.BNN, cfg) == 0

    def test_fixed_point(self):
        ne = PolicyProfile((0.5, 0.5), (0.5, 0.5))
        cfg = ExperimentConfig(matching_pennies(), (erid(),), 1000, 0, 100, initial=ne)
        traj = run_learning(cfg)
        assert compare_to_ode(traj, Dynamics.BNN, OdeConfig(1e-3), initial=ne) < 0.05

    def test_mismatched_initial(self):
        traj = run_learning(ExperimentConfig(matching_pennies(), (erid(),), 1000, 0, 100, initial=MP_START))
        with pytest.raises(ValueError, match="initial"):
            compare_to_ode(traj, Dynamics.BNN, OdeConfig(1e-3), initial=PolicyProfile((0.5, 0.5), (0.5, 0.5)))

    def test_misaligned_record_times(self):
        traj = run_learning(ExperimentConfig(matching_pennies(), (erid(alpha=1e-4),), 1000, 0, 3))
        with pytest.raises(ValueError, match="ODE steps"):
            compare_to_ode(traj, Dynamics.BNN, OdeConfig(1e-3))

    def test_tracks_on_biased_rps(self):
        spec = AgentSpec(AgentKind.ERID, ProtocolKind("bnn"), 1e-4, 1000)
        traj = run_learning(ExperimentConfig(biased_rps(), (spec,), 200_000, 7, 1000, initial=RPS_START))
        assert compare_to_ode(traj, Dynamics.BNN, OdeConfig(1e-3)) < 0.1


class TestDriftValidate:
    def test_matching_pennies_equilibrium(self):
        rep = drift_validate(matching_pennies(), PolicyProfile((0.5, 0.5), (0.5, 0.5)), "bnn", 200, 2000, seed=1)
        np.testing.assert_array_equal(rep.analytic[0], [0, 0])
        assert rep.max_z < 3

    @pytest.mark.parametrize("protocol", ["bnn", "smith", "srp"])
    def test_counts_and_buffer_methods_agree(self, protocol):
        prof = PolicyProfile((0.2, 0.3, 0.5), (0.4, 0.4, 0.2))
        a = drift_validate(biased_rps(), prof, protocol, 50, 1000, seed=2, method="counts")
        b = drift_validate(biased_rps(), prof, protocol, 50, 1000, seed=3, method="buffer")
        for k in range(2):
            gap = np.abs(a.mean[k] - b.mean[k])
            assert np.all(gap < 4 * np.hypot(a.stderr[k], b.stderr[k]) + 1e-12)

    def test_degenerate_profile_reported(self):
        rep = drift_validate(biased_rps(), PolicyProfile((0.0, 0.5, 0.5), (1 / 3,) * 3), "bnn", 30, 1000)
        assert rep.empty_action_trials == 1000

    def test_too_few_trials(self):
        with pytest.raises(ValueError):
            drift_validate(matching_pennies(), PolicyProfile((0.5, 0.5), (0.5, 0.5)), "bnn", 10, 999)

    def test_cross_learning(self):
        rep = cross_learning_drift_validate(matching_pennies(), PolicyProfile((0.3, 0.7), (0.6, 0.4)), 5000, seed=4)
        assert rep.max_z < 4
        assert set(rep.to_dict()) >= {"max_z", "players"}


class TestRunningAverage:
    def test_constant(self):
        traj = run_learning(ExperimentConfig(matching_pennies(), (erid(alpha=0.0),), 300, 0, 100))
        avg = running_average_policy(traj)
        np.testing.assert_array_equal(avg.policy1, traj.policy1)

    def test_midpoint(self):
        t = Trajectory(np.array([0, 1]), [[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]], np.zeros(2),
                       np.zeros(2), GameSchedule.static(matching_pennies()))
        np.testing.assert_allclose(running_average_policy(t).policy1[1], [0.5, 0.5])

    def test_replicator_orbit_average_converges(self):
        ode = integrate(Dynamics.REPLICATOR, matching_pennies(), PolicyProfile((0.3, 0.7), (0.8, 0.2)),
                        OdeConfig(1e-3, 60_000, 10))
        avg = running_average_policy(ode)
        assert np.abs(avg.policy1[-1] - 0.5).max() < 0.02
        assert np.abs(ode.policy1[-len(ode) // 3:] - 0.5).max() > 0.15
        for row in avg.policy1:
            assert abs(row.sum() - 1) < 1e-12 and np.all(row >= 0)

    def test_empty(self):
        with pytest.raises(ValueError):
            running_average_policy(Trajectory.empty(2, 2))
