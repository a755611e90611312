"""Continuous-time game dynamics on the product of two simplices.

Each dynamics is written as a revision rule ``delta(x, values, mean)``: the
time derivative of one player's mixed strategy ``x`` given the expected
payoff of each of its actions and the population mean payoff. The learners
in :mod:`erid.agents` reuse the same rules with replayed average rewards in
place of expected payoffs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from . import _kernels
from .games import Game2P, GameSchedule, ScheduleKind, as_schedule, expected_payoffs, payoff_at
from .simplex import SIMPLEX_TOL, PolicyProfile, as_profile, project_to_simplex
from .trajectory import Trajectory


class Dynamics(str, Enum):
    REPLICATOR = "replicator"
    BNN = "bnn"
    SMITH = "smith"
    SRP = "srp"

    @property
    def code(self) -> int:
        return _CODES[self]


_CODES = {Dynamics.REPLICATOR: _kernels.REPLICATOR, Dynamics.BNN: _kernels.BNN,
          Dynamics.SMITH: _kernels.SMITH, Dynamics.SRP: _kernels.SRP}


@dataclass(frozen=True)
class BoxBounds:
    """Lower and upper limits on each action's probability."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(-1)
        hi = np.array(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(lo < 0) or np.any(hi > 1) or np.any(lo >= hi):
            raise ValueError("bounds need 0 <= lower_i < upper_i <= 1")
        if lo.sum() > 1 + SIMPLEX_TOL or hi.sum() < 1 - SIMPLEX_TOL:
            raise ValueError("bounds need sum(lower) <= 1 <= sum(upper)")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, m: int) -> "BoxBounds":
        return cls(np.zeros(m), np.ones(m))

    def contains(self, x, tol: float = SIMPLEX_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


BoundsSpec = Union[BoxBounds, tuple[BoxBounds, BoxBounds], None]


def _bounds_for(bounds: BoundsSpec, player: int, m: int) -> BoxBounds:
    if bounds is None:
        return BoxBounds.unit(m)
    box = bounds[player] if isinstance(bounds, tuple) else bounds
    if box.lower.size != m:
        raise ValueError(f"bounds cover {box.lower.size} actions, player {player + 1} has {m}")
    return box


@dataclass(frozen=True)
class DynamicsKind:
    """Which dynamics to run; ``bounds`` applies to SRP only (default [0, 1] per action).

    ``bounds`` may be one :class:`BoxBounds` shared by both players or a pair.
    """

    tag: Dynamics
    bounds: BoundsSpec = None

    def __post_init__(self):
        object.__setattr__(self, "tag", Dynamics(self.tag))
        if self.bounds is not None and self.tag is not Dynamics.SRP:
            raise ValueError(f"bounds only apply to SRP dynamics, not {self.tag.value}")

    def box(self, player: int, m: int) -> BoxBounds:
        return _bounds_for(self.bounds, player, m)


def as_dynamics(kind) -> DynamicsKind:
    return kind if isinstance(kind, DynamicsKind) else DynamicsKind(Dynamics(kind))


def revision_delta(tag: Dynamics, x: np.ndarray, values: np.ndarray, mean: float,
                   box: Optional[BoxBounds] = None) -> np.ndarray:
    """Rate of change of strategy ``x`` under the revision rule ``tag``.

    ``values[i]`` is the payoff of action ``i`` and ``mean`` the population
    payoff. BNN compares each action against ``mean``; Smith and SRP compare
    actions pairwise and ignore ``mean``.
    """
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    if x.shape != values.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {values.shape}")
    tag = Dynamics(tag)
    if tag is Dynamics.REPLICATOR:
        return x * (values - mean)
    if tag is Dynamics.BNN:
        excess = np.maximum(values - mean, 0.0)
        return excess - x * excess.sum()
    # gain[i, j] = [values_i - values_j]_+, the gain from switching j -> i
    gain = np.maximum(values[:, None] - values[None, :], 0.0)
    if tag is Dynamics.SMITH:
        return gain @ x - x * gain.sum(axis=0)
    box = box if box is not None else BoxBounds.unit(x.size)
    room_below = x - box.lower
    room_above = box.upper - x
    return room_above * (gain @ room_below) - room_below * (gain.T @ room_above)


def vector_field(kind, game: Game2P, profile) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative ``(dx, dy)`` of both players' strategies."""
    kind = as_dynamics(kind)
    profile = as_profile(profile)
    u1, u2, ubar1, ubar2 = expected_payoffs(game, profile)
    x, y = profile.arrays()
    box1 = box2 = None
    if kind.tag is Dynamics.SRP:
        box1, box2 = kind.box(0, x.size), kind.box(1, y.size)
        if not (box1.contains(x) and box2.contains(y)):
            raise ValueError("profile lies outside the SRP bounds box")
    return (revision_delta(kind.tag, x, u1, ubar1, box1),
            revision_delta(kind.tag, y, u2, ubar2, box2))


@dataclass(frozen=True)
class OdeConfig:
    step_size: float = 1e-3
    n_steps: int = 100_000
    record_every: int = 100

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.n_steps < 1 or self.record_every < 1:
            raise ValueError("n_steps and record_every must be >= 1")


class IntegrationError(RuntimeError):
    """Integration produced a non-finite or out-of-box state."""

    def __init__(self, message: str, step: int, state):
        super().__init__(f"{message} at step {step}: {state}")
        self.step = step
        self.state = state


def _project_if_drifted(z: np.ndarray) -> tuple[np.ndarray, bool]:
    drift = max(abs(z.sum() - 1.0), -min(z.min(), 0.0))
    if drift > SIMPLEX_TOL:
        return project_to_simplex(z).probs.copy(), True
    return np.maximum(z, 0.0), False


def integrate(kind, game_or_schedule: Union[Game2P, GameSchedule], initial, cfg: OdeConfig,
              steps_per_unit: Optional[float] = None, engine: str = "compiled") -> Trajectory:
    """Fixed-step RK4 integration of ``kind`` from ``initial``.

    After each step a state whose simplex drift exceeds 1e-9 is projected back
    (and counted in ``metadata["projection_events"]``); smaller negative
    round-off is clipped to zero. For a time-varying schedule the game at ODE
    time ``s`` is ``payoff_at(schedule, s * steps_per_unit)``, with
    ``steps_per_unit`` defaulting to ``1 / step_size`` (the step index).
    """
    kind = as_dynamics(kind)
    schedule = as_schedule(game_or_schedule)
    initial = as_profile(initial)
    m1, m2 = schedule.shape
    if initial.shape != (m1, m2):
        raise ValueError(f"initial profile shape {initial.shape} does not match game {(m1, m2)}")
    box1, box2 = kind.box(0, m1), kind.box(1, m2)
    is_srp = kind.tag is Dynamics.SRP
    if is_srp and not (box1.contains(initial.player1) and box2.contains(initial.player2)):
        raise ValueError("initial profile lies outside the SRP bounds box")
    h = cfg.step_size
    clock = (1.0 / h) if steps_per_unit is None else float(steps_per_unit)
    started = time.perf_counter()

    if schedule.kind is ScheduleKind.STATIC and engine == "compiled":
        n_rec = cfg.n_steps // cfg.record_every + 1 + (cfg.n_steps % cfg.record_every != 0)
        out_x = np.empty((n_rec, m1))
        out_y = np.empty((n_rec, m2))
        out_step = np.empty(n_rec, dtype=np.int64)
        game = schedule.base
        status, step, rec, n_proj = _kernels.rk4_static(
            kind.tag.code, game.payoff1, game.payoff2, initial.player1.probs.copy(),
            initial.player2.probs.copy(), h, cfg.n_steps, cfg.record_every,
            box1.lower, box1.upper, box2.lower, box2.upper, is_srp, out_x, out_y, out_step)
        if status == _kernels.NON_FINITE:
            raise IntegrationError("non-finite state", step, (out_x[rec - 1], out_y[rec - 1]))
        if status == _kernels.OUT_OF_BOX:
            raise IntegrationError("state left the SRP bounds box", step, None)
        steps, xs, ys = out_step[:rec], out_x[:rec], out_y[:rec]
    else:
        steps, xs, ys, n_proj = _integrate_python(kind, schedule, initial, cfg, clock)

    times = steps * h
    meta = {"time_unit": "ode", "dynamics": kind.tag.value, "step_size": h,
            "n_steps": cfg.n_steps, "record_every": cfg.record_every,
            "projection_events": int(n_proj), "wall_time": time.perf_counter() - started}
    return Trajectory.from_samples(times, xs, ys, schedule, game_time=times * clock, metadata=meta)


def _integrate_python(kind: DynamicsKind, schedule: GameSchedule, initial: PolicyProfile,
                      cfg: OdeConfig, clock: float):
    h = cfg.step_size
    x, y = (p.copy() for p in initial.arrays())
    m1 = x.size

    def field(s: float, z: np.ndarray) -> np.ndarray:
        game = payoff_at(schedule, s * clock)
        u1 = game.payoff1 @ z[m1:]
        u2 = z[:m1] @ game.payoff2
        box1 = kind.box(0, m1) if kind.tag is Dynamics.SRP else None
        box2 = kind.box(1, z.size - m1) if kind.tag is Dynamics.SRP else None
        return np.concatenate([
            revision_delta(kind.tag, z[:m1], u1, float(z[:m1] @ u1), box1),
            revision_delta(kind.tag, z[m1:], u2, float(z[m1:] @ u2), box2)])

    steps, xs, ys = [0], [x.copy()], [y.copy()]
    n_proj = 0
    z = np.concatenate([x, y])
    for n in range(cfg.n_steps):
        s = n * h
        k1 = field(s, z)
        k2 = field(s + h / 2, z + h / 2 * k1)
        k3 = field(s + h / 2, z + h / 2 * k2)
        k4 = field(s + h, z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise IntegrationError("non-finite state", n + 1, z)
        zx, px = _project_if_drifted(z[:m1])
        zy, py = _project_if_drifted(z[m1:])
        n_proj += px + py
        z = np.concatenate([zx, zy])
        if kind.tag is Dynamics.SRP and not (kind.box(0, m1).contains(zx)
                                             and kind.box(1, zy.size).contains(zy)):
            raise IntegrationError("state left the SRP bounds box", n + 1, z)
        if (n + 1) % cfg.record_every == 0 or n + 1 == cfg.n_steps:
            steps.append(n + 1)
            xs.append(zx)
            ys.append(zy)
    return np.array(steps), np.array(xs), np.array(ys), n_proj


def replicator_invariant(game: Game2P, profile, ne) -> float:
    """Sum over players of KL(ne || policy).

    Constant along replicator trajectories of a zero-sum game with interior
    equilibrium ``ne``. ``game`` only fixes the expected dimensions.
    """
    profile, ne = as_profile(profile), as_profile(ne)
    if profile.shape != game.shape or ne.shape != game.shape:
        raise ValueError("profile and equilibrium must match the game's shape")
    total = 0.0
    for p, q in zip(ne.arrays(), profile.arrays()):
        support = p > 0
        if np.any(q[support] <= 0):
            raise ValueError("policy has zero probability where the equilibrium is positive")
        total += float(np.sum(p[support] * np.log(p[support] / q[support])))
    return total
