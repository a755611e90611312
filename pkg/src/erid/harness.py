"""Experiment orchestration: learning runs, ODE comparison and drift validation."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernels
from .agents import (CrossLearningAgent, EridAgent, HedgeAgent, ProtocolKind, StepBoundError, erid_delta,
                     as_protocol)
from .dynamics import Dynamics, DynamicsKind, OdeConfig, as_dynamics, integrate, vector_field
from .games import (Game2P, GameSchedule, PayoffRange, ScheduleKind, as_schedule, payoff_at,
                    payoff_range)
from .replay import AverageRewards, ReplayBuffer, average_rewards
from .simplex import PolicyProfile, SimplexVector, as_profile, profile_distance
from .trajectory import Trajectory


class AgentKind(str, Enum):
    ERID = "erid"
    CROSS = "cross"
    HEDGE = "hedge"


@dataclass(frozen=True)
class AgentSpec:
    """How to build one learner.

    ``normalizer`` (cross learning) defaults to the widest payoff range the
    game schedule produces for the agent's seat.
    """

    kind: AgentKind = AgentKind.ERID
    protocol: Optional[ProtocolKind] = None
    alpha: float = 1e-5
    buffer_size: int = 1000
    hedge_rate: float = 0.01
    normalizer: Optional[PayoffRange] = None

    def __post_init__(self):
        kind = AgentKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is AgentKind.ERID:
            object.__setattr__(self, "protocol", as_protocol(self.protocol or Dynamics.BNN))
        elif self.protocol is not None:
            raise ValueError(f"{kind.value} agents take no protocol")
        if self.buffer_size < 1:
            raise ValueError("buffer_size must be >= 1")
        if not self.alpha >= 0:
            raise ValueError("alpha must be >= 0")

    @property
    def label(self) -> str:
        if self.kind is AgentKind.ERID:
            return f"erid-{self.protocol.tag.value}"
        return self.kind.value

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "alpha": self.alpha}
        if self.kind is AgentKind.ERID:
            out.update(protocol=self.protocol.tag.value, buffer_size=self.buffer_size)
            if self.protocol.bounds is not None:
                out["bounds"] = {"lower": self.protocol.bounds.lower.tolist(),
                                 "upper": self.protocol.bounds.upper.tolist()}
        if self.kind is AgentKind.HEDGE:
            out["hedge_rate"] = self.hedge_rate
        if self.normalizer is not None:
            out["normalizer"] = [self.normalizer.r_min, self.normalizer.r_max]
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    """A learning run. In self-play only ``agents[0]`` exists and plays both seats."""

    game: Union[Game2P, GameSchedule]
    agents: tuple[AgentSpec, ...] = (AgentSpec(),)
    n_steps: int = 10_000
    seed: int = 0
    record_every: int = 100
    initial: Optional[PolicyProfile] = None
    self_play: bool = False
    report_running_average: bool = False
    reward_noise: float = 0.0

    def __post_init__(self):
        schedule = as_schedule(self.game)
        object.__setattr__(self, "game", schedule)
        agents = (self.agents,) if isinstance(self.agents, AgentSpec) else tuple(self.agents)
        if len(agents) == 1 and not self.self_play:
            agents = agents * 2
        if self.self_play:
            if len(agents) != 1 and agents[0] != agents[1]:
                raise ValueError("self-play uses a single agent spec")
            agents = agents[:1]
            m1, m2 = schedule.shape
            if m1 != m2:
                raise ValueError("self-play needs a square game")
            if schedule.kind is ScheduleKind.STATIC and not schedule.base.is_symmetric:
                raise ValueError("self-play needs a symmetric game (payoff2 = payoff1 transposed)")
        elif len(agents) != 2:
            raise ValueError("two-player runs need exactly two agent specs")
        object.__setattr__(self, "agents", agents)
        if not self.reward_noise >= 0:
            raise ValueError(f"reward_noise must be >= 0, got {self.reward_noise}")
        if self.n_steps < 1 or self.record_every < 1:
            raise ValueError("n_steps and record_every must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.initial is not None:
            init = as_profile(self.initial)
            if init.shape != schedule.shape:
                raise ValueError(f"initial profile shape {init.shape} does not match game {schedule.shape}")
            if self.self_play and init.player1 != init.player2:
                raise ValueError("self-play needs identical initial policies for both seats")
            object.__setattr__(self, "initial", init)

    @property
    def schedule(self) -> GameSchedule:
        return self.game

    def initial_profile(self) -> PolicyProfile:
        if self.initial is not None:
            return self.initial
        m1, m2 = self.schedule.shape
        return PolicyProfile(SimplexVector.uniform(m1), SimplexVector.uniform(m2))

    def to_dict(self) -> dict:
        init = self.initial_profile()
        return {
            "game": self.schedule.to_dict(),
            "agents": [a.to_dict() for a in self.agents],
            "n_steps": self.n_steps,
            "seed": int(self.seed),
            "record_every": self.record_every,
            "initial": [init.player1.probs.tolist(), init.player2.probs.tolist()],
            "self_play": self.self_play,
            "report_running_average": self.report_running_average,
            "reward_noise": self.reward_noise,
        }


def _normalizer(spec: AgentSpec, schedule: GameSchedule, seat: int) -> PayoffRange:
    return spec.normalizer or schedule.max_payoff_range(seat)


def build_agent(spec: AgentSpec, policy, schedule: GameSchedule, seat: int):
    if spec.kind is AgentKind.ERID:
        return EridAgent(policy, spec.alpha, spec.buffer_size, spec.protocol)
    if spec.kind is AgentKind.CROSS:
        return CrossLearningAgent(policy, spec.alpha, _normalizer(spec, schedule, seat))
    return HedgeAgent(policy, spec.hedge_rate)


def _record_steps(n_steps: int, record_every: int) -> list[int]:
    steps = list(range(0, n_steps + 1, record_every))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def run_learning(cfg: ExperimentConfig, engine: str = "compiled") -> Trajectory:
    """Simulate the configured learners and record their policies.

    Every step each seat samples an action from its current policy using the
    seeded generator, rewards come from ``payoff_at(schedule, t)`` (plus
    Gaussian noise of standard deviation ``cfg.reward_noise``, off by
    default), and then each learner updates. ``engine="python"`` runs the reference agents from
    :mod:`erid.agents`; the default compiled engine reproduces it.
    """
    if engine not in ("compiled", "python"):
        raise ValueError(f"unknown engine {engine!r}")
    started = time.perf_counter()
    runner = _run_compiled if engine == "compiled" else _run_python
    steps, xs, ys, n_proj = runner(cfg)
    meta = {"time_unit": "step", "config": cfg.to_dict(), "labels": [a.label for a in cfg.agents],
            "alpha": cfg.agents[0].alpha, "projection_events": int(n_proj),
            "wall_time": time.perf_counter() - started, "engine": engine}
    traj = Trajectory.from_samples(np.asarray(steps, dtype=np.int64), xs, ys, cfg.schedule,
                                   metadata=meta)
    if cfg.report_running_average:
        traj = running_average_policy(traj)
    return traj


def _run_python(cfg: ExperimentConfig):
    schedule = cfg.schedule
    init = cfg.initial_profile()
    rng = np.random.default_rng(cfg.seed)
    seat1 = build_agent(cfg.agents[0], init.player1, schedule, 0)
    seat2 = seat1 if cfg.self_play else build_agent(cfg.agents[1], init.player2, schedule, 1)
    record = _record_steps(cfg.n_steps, cfg.record_every)
    xs, ys = [seat1.policy.copy()], [seat2.policy.copy()]
    for start, stop in zip(record[:-1], record[1:]):
        uniforms, noise = _draw(rng, stop - start, cfg.reward_noise)
        for k, t in enumerate(range(start, stop)):
            game = payoff_at(schedule, t)
            pol1, pol2 = seat1.policy, seat2.policy
            a1 = seat1.act(uniforms[k, 0])
            a2 = seat2.act(uniforms[k, 1])
            _update(seat1, a1, game.payoff1[a1, a2] + noise[k, 0], game.payoff1 @ pol2)
            if not cfg.self_play:
                _update(seat2, a2, game.payoff2[a1, a2] + noise[k, 1], pol1 @ game.payoff2)
        xs.append(seat1.policy.copy())
        ys.append(seat2.policy.copy())
    n_proj = seat1.projection_events + (0 if cfg.self_play else seat2.projection_events)
    return record, np.array(xs), np.array(ys), n_proj


def _draw(rng: np.random.Generator, n: int, noise_sd: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-step uniforms for action sampling, then (if enabled) Gaussian reward noise."""
    uniforms = rng.random((n, 2))
    if noise_sd > 0:
        return uniforms, rng.normal(0.0, noise_sd, (n, 2))
    return uniforms, np.zeros((n, 2))


def _update(agent, action: int, reward: float, values: np.ndarray) -> None:
    if isinstance(agent, HedgeAgent):
        agent.step(values)
    else:
        agent.step(action, reward)


_KIND_CODES = {AgentKind.ERID: _kernels.ERID, AgentKind.CROSS: _kernels.CROSS,
               AgentKind.HEDGE: _kernels.HEDGE}
_SCHEDULE_CODES = {ScheduleKind.STATIC: _kernels.STATIC,
                   ScheduleKind.PHASE_SWITCHED: _kernels.PHASE_SWITCHED,
                   ScheduleKind.CONTINUOUS_SCALED: _kernels.CONTINUOUS_SCALED}


def _pack(spec: AgentSpec, policy: SimplexVector, schedule: GameSchedule, seat: int) -> tuple:
    m = len(policy)
    k = spec.buffer_size if spec.kind is AgentKind.ERID else 1
    protocol = spec.protocol.tag.code if spec.kind is AgentKind.ERID else 0
    ipar = np.array([_KIND_CODES[spec.kind], protocol, k, 0, 0], dtype=np.int64)
    rng = _normalizer(spec, schedule, seat) if spec.kind is AgentKind.CROSS else PayoffRange(0, 0)
    if spec.kind is AgentKind.CROSS and not 0 <= spec.alpha <= 1:
        raise ValueError(f"cross learning needs 0 <= alpha <= 1, got {spec.alpha}")
    fpar = np.array([spec.alpha, spec.hedge_rate, rng.r_min, rng.r_max])
    if spec.kind is AgentKind.ERID and spec.protocol.tag is Dynamics.SRP:
        box = spec.protocol.box(m)
        lower, upper = box.lower.copy(), box.upper.copy()
        if not box.contains(policy.probs):
            raise ValueError("initial policy lies outside the SRP bounds box")
    elif spec.kind is AgentKind.HEDGE:
        if np.any(policy.probs <= 0):
            raise ValueError("Hedge needs a strictly positive initial policy")
        lower, upper = np.log(policy.probs), np.ones(m)
    else:
        lower, upper = np.zeros(m), np.ones(m)
    return (ipar, fpar, policy.probs.copy(), np.zeros(k, dtype=np.int64), np.zeros(k),
            np.zeros(m), np.zeros(m, dtype=np.int64), lower, upper, np.zeros(m))


def _run_compiled(cfg: ExperimentConfig):
    schedule = cfg.schedule
    init = cfg.initial_profile()
    rng = np.random.default_rng(cfg.seed)
    s1 = _pack(cfg.agents[0], init.player1, schedule, 0)
    s2 = s1 if cfg.self_play else _pack(cfg.agents[1], init.player2, schedule, 1)
    if schedule.kind is ScheduleKind.STATIC:
        a, b = schedule.base.payoff1.copy(), schedule.base.payoff2.copy()
    else:
        a, b = np.zeros((3, 3)), np.zeros((3, 3))
    sched_args = (_SCHEDULE_CODES[schedule.kind], float(schedule.phase_length),
                  float(schedule.initial_length), float(schedule.segment_length),
                  float(schedule.v_max))
    record = _record_steps(cfg.n_steps, cfg.record_every)
    xs, ys = [s1[2].copy()], [s2[2].copy()]
    n_proj = 0
    for start, stop in zip(record[:-1], record[1:]):
        uniforms, noise = _draw(rng, stop - start, cfg.reward_noise)
        status, t, seat, comp, proj = _kernels.run_block(
            start, stop - start, uniforms, noise, cfg.reward_noise > 0, *sched_args, a, b, cfg.self_play, *s1, *s2)
        n_proj += proj
        if status != _kernels.OK:
            _raise_status(status, t, seat, comp)
        xs.append(s1[2].copy())
        ys.append(s2[2].copy())
    return record, np.array(xs), np.array(ys), n_proj


def _raise_status(status: int, t: int, seat: int, comp: int):
    where = f"seat {seat + 1} at step {t}"
    if status == _kernels.STEP_BOUND:
        err = StepBoundError(comp, float("nan"))
        err.args = (f"{where}: update drives policy[{comp}] below zero; reduce alpha",)
        raise err
    if status == _kernels.REWARD_RANGE:
        raise ValueError(f"{where}: reward outside the cross-learning normalizer range")
    if status == _kernels.OUT_OF_BOX:
        raise ValueError(f"{where}: update left the SRP bounds box; reduce alpha")
    raise FloatingPointError(f"{where}: non-finite policy")


def run_replicas(configs: Sequence[ExperimentConfig], max_workers: int = 1) -> list[Trajectory]:
    """Run independent configurations, in worker processes when ``max_workers > 1``."""
    if max_workers <= 1:
        return [run_learning(c) for c in configs]
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run_learning, configs))


def compare_to_ode(traj: Trajectory, kind, cfg: OdeConfig, initial=None) -> float:
    """Sup over recorded steps of the max-norm gap between learner and ODE.

    Learner step ``n`` is matched with ODE time ``n * alpha``. Only
    ``cfg.step_size`` is used: the ODE runs exactly as far as the learner and
    records at the learner's sample times, which must fall on ODE steps.
    """
    kind = as_dynamics(kind)
    if not len(traj):
        raise ValueError("cannot compare an empty trajectory")
    if traj.t[0] != 0:
        raise ValueError("learner trajectory must start at step 0")
    start = traj.profile(0)
    if initial is not None and profile_distance(as_profile(initial), start) > 0:
        raise ValueError("initial condition does not match the learner trajectory's first sample")
    alpha = traj.metadata.get("alpha")
    if not alpha:
        raise ValueError("trajectory metadata lacks a positive learning rate 'alpha'")
    if len(traj) == 1:
        return 0.0
    h = cfg.step_size
    ode_steps_f = traj.t.astype(float) * alpha / h
    ode_steps = np.rint(ode_steps_f).astype(np.int64)
    if np.any(np.abs(ode_steps_f - ode_steps) > 1e-6):
        raise ValueError("learner sample times do not fall on ODE steps; pick step_size dividing "
                         "record_every * alpha")
    every = reduce(math.gcd, (int(s) for s in ode_steps[1:]))
    n_steps = int(ode_steps[-1])
    schedule = traj.schedule if traj.schedule is not None else None
    if schedule is None:
        raise ValueError("trajectory carries no game")
    ode = integrate(kind, schedule, start, OdeConfig(h, n_steps, every), steps_per_unit=1.0 / alpha)
    index = {int(round(s / h)): i for i, s in enumerate(ode.t)}
    rows = [index[int(s)] for s in ode_steps]
    gap1 = np.abs(traj.policy1 - ode.policy1[rows]).max()
    gap2 = np.abs(traj.policy2 - ode.policy2[rows]).max()
    return float(max(gap1, gap2))


def running_average_policy(traj: Trajectory) -> Trajectory:
    """Cumulative mean of the recorded policies, with metrics re-evaluated."""
    if not len(traj):
        raise ValueError("cannot average an empty trajectory")
    counts = np.arange(1, len(traj) + 1)[:, None]
    avg1 = np.cumsum(traj.policy1, axis=0) / counts
    avg2 = np.cumsum(traj.policy2, axis=0) / counts
    # renormalize away the rounding of the running sums
    avg1 /= avg1.sum(axis=1, keepdims=True)
    avg2 /= avg2.sum(axis=1, keepdims=True)
    meta = dict(traj.metadata, running_average=True)
    game_time = traj.t
    if traj.metadata.get("time_unit") == "ode" and traj.schedule is not None:
        game_time = traj.t / traj.metadata.get("step_size", 1.0)
    return Trajectory.from_samples(traj.t, avg1, avg2, traj.schedule, game_time=game_time,
                                   metadata=meta)


@dataclass
class DriftReport:
    """Monte-Carlo estimate of the expected policy increment at a frozen profile."""

    mean: tuple[np.ndarray, np.ndarray]
    stderr: tuple[np.ndarray, np.ndarray]
    analytic: tuple[np.ndarray, np.ndarray]
    n_trials: int
    buffer_size: int
    empty_action_trials: int = 0

    @property
    def z_scores(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(_z(m, s, a) for m, s, a in zip(self.mean, self.stderr, self.analytic))

    @property
    def max_z(self) -> float:
        return float(max(np.max(z) for z in self.z_scores))

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials, "buffer_size": self.buffer_size,
            "empty_action_trials": self.empty_action_trials, "max_z": self.max_z,
            "players": [{"mean": m.tolist(), "stderr": s.tolist(), "analytic": a.tolist(),
                         "z": z.tolist()}
                        for m, s, a, z in zip(self.mean, self.stderr, self.analytic, self.z_scores)],
        }


def _z(mean: np.ndarray, stderr: np.ndarray, analytic: np.ndarray) -> np.ndarray:
    gap = np.abs(mean - analytic)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = gap / stderr
    z[stderr == 0] = np.where(gap[stderr == 0] == 0, 0.0, np.inf)
    return z


def _summarize(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return samples.mean(axis=0), samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])


def drift_validate(game: Game2P, profile, protocol, buffer_size: int, n_trials: int,
                   seed: int = 0, method: str = "counts") -> DriftReport:
    """Compare the mean ERID direction over fresh buffers with the matching ODE field.

    Each trial fills a buffer with ``buffer_size`` i.i.d. joint actions drawn
    from the frozen ``profile`` and evaluates both players' ERID direction.
    ``method="counts"`` draws the joint-action count table of the buffer
    directly (the direction depends on the buffer only through per-action
    counts and reward sums); ``method="buffer"`` pushes every sample through
    :class:`ReplayBuffer` and is much slower.
    """
    protocol = as_protocol(protocol)
    profile = as_profile(profile)
    if n_trials < 1000:
        raise ValueError("drift validation needs at least 1000 trials")
    if method not in ("counts", "buffer"):
        raise ValueError(f"unknown method {method!r}")
    m1, m2 = game.shape
    if profile.shape != game.shape:
        raise ValueError("profile does not match the game")
    x, y = profile.arrays()
    rng = np.random.default_rng(seed)
    deltas = (np.empty((n_trials, m1)), np.empty((n_trials, m2)))
    empty = 0
    joint = np.outer(x, y).ravel()
    for trial in range(n_trials):
        if method == "counts":
            table = rng.multinomial(buffer_size, joint).reshape(m1, m2)
            avgs = (_averages_from_table(table, game.payoff1, axis=1, k=buffer_size),
                    _averages_from_table(table, game.payoff2, axis=0, k=buffer_size))
            counts = (table.sum(axis=1), table.sum(axis=0))
        else:
            a1 = rng.choice(m1, size=buffer_size, p=x)
            a2 = rng.choice(m2, size=buffer_size, p=y)
            b1 = ReplayBuffer(buffer_size, m1).extend(zip(a1, game.payoff1[a1, a2]))
            b2 = ReplayBuffer(buffer_size, m2).extend(zip(a2, game.payoff2[a1, a2]))
            avgs = (average_rewards(b1), average_rewards(b2))
            counts = (b1.counts, b2.counts)
        empty += bool(np.any(counts[0] == 0) or np.any(counts[1] == 0))
        deltas[0][trial] = erid_delta(profile.player1, avgs[0], protocol)
        deltas[1][trial] = erid_delta(profile.player2, avgs[1], protocol)
    dyn = DynamicsKind(protocol.tag, protocol.bounds) if protocol.tag is Dynamics.SRP \
        else DynamicsKind(protocol.tag)
    analytic = vector_field(dyn, game, profile)
    (mx, sx), (my, sy) = _summarize(deltas[0]), _summarize(deltas[1])
    return DriftReport((mx, my), (sx, sy), analytic, n_trials, buffer_size, empty)


def _averages_from_table(table: np.ndarray, payoff: np.ndarray, axis: int, k: int) -> AverageRewards:
    counts = table.sum(axis=axis)
    sums = (table * payoff).sum(axis=axis)
    per_action = np.zeros(counts.size)
    seen = counts > 0
    per_action[seen] = sums[seen] / counts[seen]
    return AverageRewards(per_action, float(sums.sum()) / k)


def cross_learning_drift_validate(game: Game2P, profile, n_trials: int, seed: int = 0) -> DriftReport:
    """Mean one-step cross-learning increment versus the replicator field of the normalized game."""
    profile = as_profile(profile)
    if n_trials < 1000:
        raise ValueError("drift validation needs at least 1000 trials")
    m1, m2 = game.shape
    x, y = profile.arrays()
    rng = np.random.default_rng(seed)
    ranges = (payoff_range(game, 0), payoff_range(game, 1))
    deltas = (np.empty((n_trials, m1)), np.empty((n_trials, m2)))
    for trial in range(n_trials):
        a1 = int(rng.choice(m1, p=x))
        a2 = int(rng.choice(m2, p=y))
        # alpha = 1 makes the increment equal to the update direction
        p1 = CrossLearningAgent(x, 1.0, ranges[0]).step(a1, game.payoff1[a1, a2]).policy
        p2 = CrossLearningAgent(y, 1.0, ranges[1]).step(a2, game.payoff2[a1, a2]).policy
        deltas[0][trial] = p1 - x
        deltas[1][trial] = p2 - y
    analytic = vector_field(Dynamics.REPLICATOR, game.normalized(), profile)
    (mx, sx), (my, sy) = _summarize(deltas[0]), _summarize(deltas[1])
    return DriftReport((mx, my), (sx, sy), analytic, n_trials, 1)
