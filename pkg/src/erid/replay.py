"""Fixed-capacity (action, reward) buffer with per-action reward statistics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class AverageRewards:
    """Mean reward of each action in the buffer (0 for absent actions) and overall."""

    per_action: np.ndarray
    overall: float


class ReplayBuffer:
    """FIFO store of the most recent ``capacity`` samples.

    Index sets are kept implicitly as per-action running sums and counts, so
    :meth:`averages` costs O(M) regardless of capacity.
    """

    def __init__(self, capacity: int, n_actions: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        if n_actions < 2:
            raise ValueError(f"need at least 2 actions, got {n_actions}")
        self.capacity = int(capacity)
        self.n_actions = int(n_actions)
        self._entries: deque[tuple[int, float]] = deque()
        self._sums = np.zeros(self.n_actions)
        self._counts = np.zeros(self.n_actions, dtype=np.int64)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    @property
    def entries(self) -> list[tuple[int, float]]:
        """Samples oldest first."""
        return list(self._entries)

    @property
    def counts(self) -> np.ndarray:
        return self._counts.copy()

    def index_sets(self) -> list[list[int]]:
        """Buffer positions (0 = oldest) holding each action."""
        sets: list[list[int]] = [[] for _ in range(self.n_actions)]
        for pos, (a, _) in enumerate(self._entries):
            sets[a].append(pos)
        return sets

    def push(self, action: int, reward: float) -> "ReplayBuffer":
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range for {self.n_actions} actions")
        reward = float(reward)
        if not np.isfinite(reward):
            raise ValueError(f"reward must be finite, got {reward}")
        if len(self._entries) == self.capacity:
            old_action, old_reward = self._entries.popleft()
            self._counts[old_action] -= 1
            if self._counts[old_action] == 0:
                # drop accumulated rounding once the set empties
                self._sums[old_action] = 0.0
            else:
                self._sums[old_action] -= old_reward
        self._entries.append((int(action), reward))
        self._sums[action] += reward
        self._counts[action] += 1
        return self

    def extend(self, samples: Iterable[tuple[int, float]]) -> "ReplayBuffer":
        for action, reward in samples:
            self.push(action, reward)
        return self

    def averages(self) -> AverageRewards:
        return average_rewards(self)


def average_rewards(buffer: ReplayBuffer, n_actions: int | None = None) -> AverageRewards:
    """Per-action and overall mean reward of the buffer contents.

    The overall mean divides by the current occupancy, which equals the
    capacity once the buffer has filled.
    """
    if n_actions is not None and n_actions != buffer.n_actions:
        raise ValueError(f"buffer tracks {buffer.n_actions} actions, not {n_actions}")
    if len(buffer) == 0:
        raise ValueError("cannot average an empty buffer")
    counts = buffer._counts
    per_action = np.zeros(buffer.n_actions)
    seen = counts > 0
    per_action[seen] = buffer._sums[seen] / counts[seen]
    overall = float(buffer._sums.sum()) / len(buffer)
    return AverageRewards(per_action, overall)
