"""Two-player normal-form games, the named test games and time-varying schedules.

Payoff convention: ``payoff1[m, n]`` and ``payoff2[m, n]`` are the rewards of
player 1 and player 2 when player 1 plays ``m`` and player 2 plays ``n``.
Payoff matrices printed "from each player's own point of view" (own action
indexes the row) are therefore stored transposed for player 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .simplex import SimplexVector, as_profile

RPS_ACTIONS = ("R", "P", "S")


@dataclass(frozen=True)
class Game2P:
    payoff1: np.ndarray
    payoff2: np.ndarray
    actions1: Optional[tuple[str, ...]] = None
    actions2: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        a = np.array(self.payoff1, dtype=float)
        b = np.array(self.payoff2, dtype=float)
        if a.ndim != 2 or b.ndim != 2:
            raise ValueError("payoff matrices must be 2-dimensional")
        if a.shape != b.shape:
            raise ValueError(f"payoff shapes differ: {a.shape} vs {b.shape}")
        if a.shape[0] < 2 or a.shape[1] < 2:
            raise ValueError(f"each player needs at least 2 actions, got shape {a.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("payoff matrices must be finite")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "payoff1", a)
        object.__setattr__(self, "payoff2", b)
        for name, m in (("actions1", a.shape[0]), ("actions2", a.shape[1])):
            labels = getattr(self, name)
            if labels is not None:
                labels = tuple(str(s) for s in labels)
                if len(labels) != m:
                    raise ValueError(f"{name} has {len(labels)} labels for {m} actions")
                object.__setattr__(self, name, labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.payoff1.shape

    @property
    def is_symmetric(self) -> bool:
        """True when both seats are interchangeable (payoff2 = payoff1 transposed)."""
        return self.shape[0] == self.shape[1] and np.array_equal(self.payoff2, self.payoff1.T)

    def payoff(self, player: int) -> np.ndarray:
        return (self.payoff1, self.payoff2)[player]

    def normalized(self) -> "Game2P":
        """Affine map of each player's payoffs onto [0, 1]."""
        mats = []
        for k in (0, 1):
            rng = payoff_range(self, k)
            width = rng.r_max - rng.r_min
            mat = self.payoff(k)
            mats.append(np.zeros_like(mat) if width == 0 else (mat - rng.r_min) / width)
        return Game2P(mats[0], mats[1], self.actions1, self.actions2)

    def to_dict(self) -> dict:
        out = {"payoff1": self.payoff1.tolist(), "payoff2": self.payoff2.tolist()}
        if self.actions1 is not None:
            out["actions1"] = list(self.actions1)
        if self.actions2 is not None:
            out["actions2"] = list(self.actions2)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Game2P":
        missing = {"payoff1", "payoff2"} - set(data)
        if missing:
            raise ValueError(f"game is missing fields: {sorted(missing)}")
        unknown = set(data) - {"payoff1", "payoff2", "actions1", "actions2"}
        if unknown:
            raise ValueError(f"game has unknown fields: {sorted(unknown)}")
        return cls(data["payoff1"], data["payoff2"], data.get("actions1"), data.get("actions2"))


def load_game(path: Union[str, Path]) -> Game2P:
    """Read a game from ``{"payoff1": [[...]], "payoff2": [[...]], "actions1": [...], "actions2": [...]}``."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        return Game2P.from_dict(data)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def save_game(game: Game2P, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(game.to_dict(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class PayoffRange:
    r_min: float
    r_max: float

    def __post_init__(self):
        if not (np.isfinite(self.r_min) and np.isfinite(self.r_max)):
            raise ValueError("payoff range bounds must be finite")
        if self.r_min > self.r_max:
            raise ValueError(f"r_min {self.r_min} exceeds r_max {self.r_max}")

    @property
    def width(self) -> float:
        return self.r_max - self.r_min

    def normalize(self, reward: float) -> float:
        """Affine map of ``reward`` into [0, 1]."""
        if self.width == 0:
            if reward != self.r_min:
                raise ValueError(f"reward {reward} outside degenerate range [{self.r_min}, {self.r_max}]")
            return 0.0
        if not self.r_min <= reward <= self.r_max:
            raise ValueError(f"reward {reward} outside range [{self.r_min}, {self.r_max}]")
        return (reward - self.r_min) / self.width


def payoff_range(game: Game2P, player: int) -> PayoffRange:
    mat = game.payoff(player)
    return PayoffRange(float(mat.min()), float(mat.max()))


def matching_pennies() -> Game2P:
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    b = np.array([[-1.0, 1.0], [1.0, -1.0]])
    # b is symmetric, so the own-row and row-is-player-1 readings coincide
    return Game2P(a, b, ("H", "T"), ("H", "T"))


def symmetric_game(a: Sequence[Sequence[float]], actions: Optional[Sequence[str]] = None) -> Game2P:
    """Symmetric two-player game where both players use the own-action-row matrix ``a``."""
    a = np.asarray(a, dtype=float)
    labels = tuple(actions) if actions is not None else None
    return Game2P(a, a.T, labels, labels)


def biased_rps() -> Game2P:
    """Rock-paper-scissors with the paper-scissors matchup doubled."""
    a = [[0.0, -1.0, 1.0], [1.0, 0.0, -2.0], [-1.0, 2.0, 0.0]]
    return symmetric_game(a, RPS_ACTIONS)


class Matchup(str, Enum):
    RP = "RP"
    SR = "SR"
    PS = "PS"


# (loser, winner) action indices of each matchup, R=0, P=1, S=2
_MATCHUP_PAIRS = {Matchup.RP: (0, 1), Matchup.SR: (2, 0), Matchup.PS: (1, 2)}
# the action not involved in each matchup
_UNSCALED_ACTION = {Matchup.RP: 2, Matchup.SR: 1, Matchup.PS: 0}
MATCHUP_CYCLE = (Matchup.RP, Matchup.SR, Matchup.PS)


def scaled_rps(v: float, scaled_matchup: Union[Matchup, str] = Matchup.RP) -> Game2P:
    """Symmetric zero-sum RPS where one matchup pays ``v`` instead of 1."""
    if not v >= 1:
        raise ValueError(f"scale factor must be >= 1, got {v}")
    matchup = Matchup(scaled_matchup)
    a = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])
    loser, winner = _MATCHUP_PAIRS[matchup]
    a[loser, winner] = -v
    a[winner, loser] = v
    return symmetric_game(a, RPS_ACTIONS)


def scaled_rps_equilibrium(v: float, scaled_matchup: Union[Matchup, str] = Matchup.RP) -> SimplexVector:
    if not v >= 1:
        raise ValueError(f"scale factor must be >= 1, got {v}")
    matchup = Matchup(scaled_matchup)
    x = np.full(3, 1.0 / (v + 2))
    x[_UNSCALED_ACTION[matchup]] = v / (v + 2)
    return SimplexVector(x)


class ScheduleKind(str, Enum):
    STATIC = "static"
    PHASE_SWITCHED = "phase_switched"
    CONTINUOUS_SCALED = "continuous_scaled"


# (matchup, v at segment start, v at segment end) with "max" meaning v_max
_CONTINUOUS_SEGMENTS = (
    (Matchup.RP, "max", "max"),
    (Matchup.RP, "max", 1.0),
    (Matchup.SR, 1.0, "max"),
    (Matchup.SR, "max", 1.0),
    (Matchup.PS, 1.0, "max"),
)


@dataclass(frozen=True)
class GameSchedule:
    """A game whose payoffs may depend on the step index.

    ``phase_switched`` cycles the scaled RPS matchup RP -> SR -> PS every
    ``phase_length`` steps at fixed ``v_max``. ``continuous_scaled`` holds RP at
    ``v_max`` for ``initial_length`` steps, then runs four linear ramps of
    ``segment_length`` steps each (RP down to 1, SR up, SR down, PS up); after
    the last ramp the final game is held.
    """

    kind: ScheduleKind = ScheduleKind.STATIC
    base: Optional[Game2P] = None
    v_max: float = 6.0
    phase_length: int = 3000
    segment_length: int = 600_000
    initial_length: int = 300_000

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if self.kind is ScheduleKind.STATIC:
            if self.base is None:
                raise ValueError("static schedule needs a base game")
            return
        if not self.v_max > 1:
            raise ValueError(f"v_max must exceed 1, got {self.v_max}")
        for name in ("phase_length", "segment_length", "initial_length"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @classmethod
    def static(cls, game: Game2P) -> "GameSchedule":
        return cls(ScheduleKind.STATIC, base=game)

    @classmethod
    def phase_switched(cls, phase_length: int = 3000, v_max: float = 6.0) -> "GameSchedule":
        return cls(ScheduleKind.PHASE_SWITCHED, v_max=v_max, phase_length=phase_length)

    @classmethod
    def continuous_scaled(cls, segment_length: int = 600_000, initial_length: Optional[int] = None,
                          v_max: float = 6.0) -> "GameSchedule":
        if initial_length is None:
            initial_length = max(1, segment_length // 2)
        return cls(ScheduleKind.CONTINUOUS_SCALED, v_max=v_max, segment_length=segment_length,
                   initial_length=initial_length)

    @property
    def shape(self) -> tuple[int, int]:
        return self.base.shape if self.kind is ScheduleKind.STATIC else (3, 3)

    @property
    def total_length(self) -> Optional[int]:
        """Length of the scripted part of a continuous schedule; None otherwise."""
        if self.kind is ScheduleKind.CONTINUOUS_SCALED:
            return self.initial_length + 4 * self.segment_length
        return None

    def segment_bounds(self) -> list[tuple[int, int]]:
        """[start, end) step ranges of the continuous schedule's five segments."""
        if self.kind is not ScheduleKind.CONTINUOUS_SCALED:
            raise ValueError("segment bounds only exist for continuous_scaled schedules")
        bounds = [(0, self.initial_length)]
        for k in range(4):
            start = self.initial_length + k * self.segment_length
            bounds.append((start, start + self.segment_length))
        return bounds

    def boundaries(self, n_steps: int) -> list[int]:
        """Step indices in (0, n_steps) where the payoff regime changes."""
        if self.kind is ScheduleKind.PHASE_SWITCHED:
            return list(range(self.phase_length, n_steps, self.phase_length))
        if self.kind is ScheduleKind.CONTINUOUS_SCALED:
            return [s for s, _ in self.segment_bounds()[1:] if s < n_steps]
        return []

    def matchup_at(self, t: float) -> tuple[Matchup, float]:
        """Scaled matchup and scale factor in force at step ``t``."""
        if self.kind is ScheduleKind.STATIC:
            raise ValueError("static schedules have no matchup")
        if t < 0:
            raise ValueError(f"step index must be >= 0, got {t}")
        if self.kind is ScheduleKind.PHASE_SWITCHED:
            phase = int(t // self.phase_length)
            return MATCHUP_CYCLE[phase % 3], self.v_max
        if t < self.initial_length:
            return Matchup.RP, self.v_max
        seg = int((t - self.initial_length) // self.segment_length) + 1
        if seg > 4:
            return Matchup.PS, self.v_max
        matchup, v0, v1 = _CONTINUOUS_SEGMENTS[seg]
        v0 = self.v_max if v0 == "max" else v0
        v1 = self.v_max if v1 == "max" else v1
        frac = (t - self.initial_length - (seg - 1) * self.segment_length) / self.segment_length
        return matchup, v0 + (v1 - v0) * frac

    def max_payoff_range(self, player: int) -> PayoffRange:
        """Widest payoff range the schedule ever produces for ``player``."""
        if self.kind is ScheduleKind.STATIC:
            return payoff_range(self.base, player)
        return PayoffRange(-self.v_max, self.v_max)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is ScheduleKind.STATIC:
            out["base"] = self.base.to_dict()
        else:
            out.update(v_max=self.v_max, phase_length=self.phase_length,
                       segment_length=self.segment_length, initial_length=self.initial_length)
        return out


def as_schedule(game_or_schedule: Union[Game2P, GameSchedule]) -> GameSchedule:
    if isinstance(game_or_schedule, GameSchedule):
        return game_or_schedule
    if isinstance(game_or_schedule, Game2P):
        return GameSchedule.static(game_or_schedule)
    raise TypeError(f"expected Game2P or GameSchedule, got {type(game_or_schedule).__name__}")


def payoff_at(schedule: Union[GameSchedule, Game2P], t: float) -> Game2P:
    schedule = as_schedule(schedule)
    if schedule.kind is ScheduleKind.STATIC:
        return schedule.base
    matchup, v = schedule.matchup_at(t)
    return scaled_rps(v, matchup)


def expected_payoffs(game: Game2P, profile) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Per-action expected payoffs ``(u1, u2)`` and mean payoffs ``(ubar1, ubar2)``."""
    x, y = as_profile(profile).arrays()
    if (x.size, y.size) != game.shape:
        raise ValueError(f"profile shape {(x.size, y.size)} does not match game {game.shape}")
    u1 = game.payoff1 @ y
    u2 = x @ game.payoff2
    return u1, u2, float(x @ u1), float(y @ u2)
