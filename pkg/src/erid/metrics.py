"""Best responses, NashConv and relative NashConv for two-player games."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import Game2P, expected_payoffs, payoff_range
from .simplex import as_profile, as_simplex


@dataclass(frozen=True)
class MetricSample:
    t: float
    nashconv: float
    relative_nashconv: float

    def __post_init__(self):
        if self.nashconv < 0:
            raise ValueError(f"NashConv cannot be negative, got {self.nashconv}")


def best_response_value(game: Game2P, player: int, opponent_policy) -> tuple[float, int]:
    """Best pure-response payoff and the smallest action index attaining it."""
    opp = as_simplex(opponent_policy).probs
    if player == 0:
        if opp.size != game.shape[1]:
            raise ValueError(f"opponent has {opp.size} actions, game expects {game.shape[1]}")
        values = game.payoff1 @ opp
    elif player == 1:
        if opp.size != game.shape[0]:
            raise ValueError(f"opponent has {opp.size} actions, game expects {game.shape[0]}")
        values = opp @ game.payoff2
    else:
        raise ValueError(f"player must be 0 or 1, got {player}")
    action = int(np.argmax(values))
    return float(values[action]), action


def nash_conv(game: Game2P, profile) -> float:
    """Sum over players of the gain from switching to a best response."""
    u1, u2, ubar1, ubar2 = expected_payoffs(game, as_profile(profile))
    # max(u) - mean(u) can round to a tiny negative at an equilibrium
    gap1 = max(float(u1.max()) - ubar1, 0.0)
    gap2 = max(float(u2.max()) - ubar2, 0.0)
    return gap1 + gap2


def nash_conv_scale(game: Game2P) -> float:
    """Upper bound on NashConv: the summed width of both players' payoff ranges."""
    return payoff_range(game, 0).width + payoff_range(game, 1).width


def relative_nash_conv(game: Game2P, profile) -> float:
    scale = nash_conv_scale(game)
    if scale == 0:
        raise ValueError("relative NashConv undefined: both players' payoffs are constant")
    return nash_conv(game, profile) / scale


def nash_conv_batch(game: Game2P, policy1: np.ndarray, policy2: np.ndarray) -> np.ndarray:
    """NashConv of each row pair ``(policy1[i], policy2[i])``."""
    u1 = policy2 @ game.payoff1.T
    u2 = policy1 @ game.payoff2
    gap1 = u1.max(axis=1) - np.einsum("ij,ij->i", policy1, u1)
    gap2 = u2.max(axis=1) - np.einsum("ij,ij->i", policy2, u2)
    return np.maximum(gap1, 0.0) + np.maximum(gap2, 0.0)


def relative_nash_conv_batch(game: Game2P, policy1: np.ndarray, policy2: np.ndarray) -> np.ndarray:
    scale = nash_conv_scale(game)
    nc = nash_conv_batch(game, policy1, policy2)
    if scale == 0:
        return np.full_like(nc, np.nan)
    return nc / scale
