"""Time-indexed records of policy profiles and their exploitability."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .games import GameSchedule, ScheduleKind, as_schedule, payoff_at
from .metrics import nash_conv_batch, relative_nash_conv_batch
from .simplex import SIMPLEX_TOL, PolicyProfile, SimplexVector


@dataclass
class Trajectory:
    """Recorded samples ``(t, policy profile, NashConv, relative NashConv)``.

    ``t`` holds learner step indices or ODE times (see ``metadata["time_unit"]``).
    Row ``i`` of ``policy1``/``policy2`` is the profile at ``t[i]``.
    """

    t: np.ndarray
    policy1: np.ndarray
    policy2: np.ndarray
    nashconv: np.ndarray
    relative_nashconv: np.ndarray
    schedule: Optional[GameSchedule] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t)
        self.policy1 = np.asarray(self.policy1, dtype=float)
        self.policy2 = np.asarray(self.policy2, dtype=float)
        self.nashconv = np.asarray(self.nashconv, dtype=float)
        self.relative_nashconv = np.asarray(self.relative_nashconv, dtype=float)
        n = self.t.shape[0]
        for name in ("policy1", "policy2"):
            arr = getattr(self, name)
            if arr.ndim != 2 or arr.shape[0] != n:
                raise ValueError(f"{name} must have shape (n_samples, n_actions), got {arr.shape}")
            if n and (np.any(arr < 0) or np.any(np.abs(arr.sum(axis=1) - 1.0) >= SIMPLEX_TOL)):
                raise ValueError(f"{name} contains samples off the simplex")
        if self.nashconv.shape != (n,) or self.relative_nashconv.shape != (n,):
            raise ValueError("metric arrays must have one entry per sample")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def profile(self, i: int) -> PolicyProfile:
        return PolicyProfile(SimplexVector(self.policy1[i]), SimplexVector(self.policy2[i]))

    @property
    def final_profile(self) -> PolicyProfile:
        if not len(self):
            raise ValueError("empty trajectory has no final profile")
        return self.profile(len(self) - 1)

    def policies(self, player: int) -> np.ndarray:
        return (self.policy1, self.policy2)[player]

    @classmethod
    def from_samples(cls, t, policy1, policy2, schedule: Optional[GameSchedule] = None,
                     game_time=None, metadata: Optional[dict] = None) -> "Trajectory":
        """Build a trajectory and evaluate both metrics at every sample.

        ``game_time`` gives the schedule step index of each sample when it
        differs from ``t`` (e.g. ODE time rescaled to learner steps).
        """
        t = np.asarray(t)
        policy1 = np.asarray(policy1, dtype=float)
        policy2 = np.asarray(policy2, dtype=float)
        nc, rel = evaluate_metrics(schedule, t if game_time is None else np.asarray(game_time),
                                   policy1, policy2)
        return cls(t, policy1, policy2, nc, rel, schedule, dict(metadata or {}))

    @classmethod
    def empty(cls, m1: int, m2: int, schedule: Optional[GameSchedule] = None) -> "Trajectory":
        return cls(np.zeros(0, dtype=np.int64), np.zeros((0, m1)), np.zeros((0, m2)),
                   np.zeros(0), np.zeros(0), schedule, {})


def evaluate_metrics(schedule, game_time: np.ndarray, policy1: np.ndarray, policy2: np.ndarray):
    n = policy1.shape[0]
    if schedule is None or n == 0:
        return np.full(n, np.nan), np.full(n, np.nan)
    schedule = as_schedule(schedule)
    if schedule.kind is ScheduleKind.STATIC:
        game = schedule.base
        return nash_conv_batch(game, policy1, policy2), relative_nash_conv_batch(game, policy1, policy2)
    nc = np.empty(n)
    rel = np.empty(n)
    for i in range(n):
        game = payoff_at(schedule, float(game_time[i]))
        nc[i] = nash_conv_batch(game, policy1[i:i + 1], policy2[i:i + 1])[0]
        rel[i] = relative_nash_conv_batch(game, policy1[i:i + 1], policy2[i:i + 1])[0]
    return nc, rel
