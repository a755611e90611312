"""Stateless learners: ERID with three protocol factors, cross learning and Hedge."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import BoxBounds, Dynamics, revision_delta
from .games import PayoffRange
from .replay import AverageRewards, ReplayBuffer, average_rewards
from .simplex import SIMPLEX_TOL, SimplexVector, as_simplex, project_to_simplex

PROTOCOLS = (Dynamics.BNN, Dynamics.SMITH, Dynamics.SRP)

DEFAULT_ALPHA = 1e-5
DEFAULT_BUFFER = 1000


class StepBoundError(ValueError):
    """An update would push a probability below zero: the learning rate is too large."""

    def __init__(self, component: int, value: float):
        super().__init__(f"update drives policy[{component}] to {value:.3e}; reduce alpha")
        self.component = component
        self.value = value


@dataclass(frozen=True)
class ProtocolKind:
    """Protocol factor of an ERID learner; ``bounds`` is used by SRP only."""

    tag: Dynamics
    bounds: Optional[BoxBounds] = None

    def __post_init__(self):
        tag = Dynamics(self.tag)
        if tag not in PROTOCOLS:
            raise ValueError(f"ERID protocol must be one of bnn/smith/srp, got {tag.value}")
        object.__setattr__(self, "tag", tag)
        if self.bounds is not None and tag is not Dynamics.SRP:
            raise ValueError("bounds only apply to the SRP protocol")

    def box(self, m: int) -> Optional[BoxBounds]:
        if self.tag is not Dynamics.SRP:
            return None
        box = self.bounds or BoxBounds.unit(m)
        if box.lower.size != m:
            raise ValueError(f"bounds cover {box.lower.size} actions, policy has {m}")
        return box


def as_protocol(p) -> ProtocolKind:
    return p if isinstance(p, ProtocolKind) else ProtocolKind(Dynamics(p))


def erid_delta(policy, avg: AverageRewards, protocol) -> np.ndarray:
    """Policy direction from replayed rewards; the update is ``policy + alpha * delta``.

    BNN moves mass toward actions whose replayed reward beats the overall
    replayed mean; Smith and SRP compare replayed action rewards pairwise.
    """
    protocol = as_protocol(protocol)
    pi = as_simplex(policy).probs
    if avg.per_action.shape != pi.shape:
        raise ValueError(f"dimension mismatch: {avg.per_action.shape} vs {pi.shape}")
    box = protocol.box(pi.size)
    if box is not None and not box.contains(pi):
        raise ValueError("policy lies outside the SRP bounds box")
    return revision_delta(protocol.tag, pi, avg.per_action, avg.overall, box)


def max_stable_alpha(n_actions: int, rewards: PayoffRange) -> float:
    """Learning rate below which an ERID step cannot leave the simplex."""
    if rewards.width == 0:
        return np.inf
    return 1.0 / (n_actions * rewards.width)


def _finish(new: np.ndarray) -> tuple[np.ndarray, bool]:
    """Accept an updated policy, projecting it if it drifted beyond tolerance."""
    if not np.all(np.isfinite(new)):
        raise FloatingPointError(f"non-finite policy {new}")
    drift = max(abs(new.sum() - 1.0), -min(new.min(), 0.0))
    if drift > SIMPLEX_TOL:
        return project_to_simplex(new).probs.copy(), True
    return np.maximum(new, 0.0), False


class EridAgent:
    """Experience-replay learner following BNN, Smith or SRP dynamics."""

    def __init__(self, policy, alpha: float = DEFAULT_ALPHA, buffer_size: int = DEFAULT_BUFFER,
                 protocol=Dynamics.BNN):
        if not alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        self.policy = as_simplex(policy).probs.copy()
        self.alpha = float(alpha)
        self.protocol = as_protocol(protocol)
        self.buffer = ReplayBuffer(buffer_size, self.policy.size)
        self.projection_events = 0
        box = self.protocol.box(self.policy.size)
        if box is not None and not box.contains(self.policy):
            raise ValueError("initial policy lies outside the SRP bounds box")

    @property
    def n_actions(self) -> int:
        return self.policy.size

    def act(self, u: float) -> int:
        """Inverse-CDF sample of an action from the policy given ``u ~ U[0, 1)``."""
        return sample_action(self.policy, u)

    def step(self, action: int, reward: float) -> "EridAgent":
        self.buffer.push(action, reward)
        delta = erid_delta(SimplexVector(self.policy), average_rewards(self.buffer), self.protocol)
        new = self.policy + self.alpha * delta
        worst = int(np.argmin(new))
        if new[worst] < -SIMPLEX_TOL:
            raise StepBoundError(worst, float(new[worst]))
        self.policy, projected = _finish(new)
        self.projection_events += projected
        box = self.protocol.box(self.n_actions)
        if box is not None and not box.contains(self.policy):
            raise ValueError("update left the SRP bounds box; reduce alpha")
        return self


def erid_step(agent: EridAgent, action_taken: int, reward: float) -> EridAgent:
    return agent.step(action_taken, reward)


class CrossLearningAgent:
    """Cross learning on rewards mapped affinely into [0, 1] by ``normalizer``."""

    def __init__(self, policy, alpha: float, normalizer: PayoffRange):
        if not 0 <= alpha <= 1:
            raise ValueError(f"cross learning needs 0 <= alpha <= 1, got {alpha}")
        self.policy = as_simplex(policy).probs.copy()
        self.alpha = float(alpha)
        self.normalizer = normalizer
        self.projection_events = 0

    @property
    def n_actions(self) -> int:
        return self.policy.size

    def act(self, u: float) -> int:
        return sample_action(self.policy, u)

    def step(self, action: int, reward: float) -> "CrossLearningAgent":
        if not 0 <= action < self.n_actions:
            raise ValueError(f"action {action} out of range")
        r = self.normalizer.normalize(float(reward))
        chosen = np.zeros(self.n_actions)
        chosen[action] = 1.0
        new = self.policy + self.alpha * r * (chosen - self.policy)
        self.policy, projected = _finish(new)
        self.projection_events += projected
        return self


def cross_learning_step(agent: CrossLearningAgent, action_taken: int, reward: float) -> CrossLearningAgent:
    return agent.step(action_taken, reward)


class HedgeAgent:
    """Exponential weights on full-information expected payoff vectors."""

    def __init__(self, policy, hedge_rate: float):
        if not hedge_rate >= 0:
            raise ValueError(f"hedge_rate must be >= 0, got {hedge_rate}")
        p = as_simplex(policy).probs
        if np.any(p <= 0):
            raise ValueError("Hedge needs a strictly positive initial policy")
        self.hedge_rate = float(hedge_rate)
        self.cumulative_values = np.zeros_like(p)
        self.log_prior = np.log(p)
        self.policy = p.copy()
        self.projection_events = 0

    @property
    def n_actions(self) -> int:
        return self.policy.size

    def act(self, u: float) -> int:
        return sample_action(self.policy, u)

    def step(self, payoff_vector) -> "HedgeAgent":
        payoffs = np.asarray(payoff_vector, dtype=float)
        if payoffs.shape != self.policy.shape:
            raise ValueError(f"payoff vector has shape {payoffs.shape}, expected {self.policy.shape}")
        if not np.all(np.isfinite(payoffs)):
            raise ValueError("payoffs must be finite")
        self.cumulative_values = self.cumulative_values + payoffs
        self.policy = softmax(self.log_prior + self.hedge_rate * self.cumulative_values)
        return self


def hedge_step(agent: HedgeAgent, payoff_vector) -> HedgeAgent:
    return agent.step(payoff_vector)


def softmax(z: np.ndarray) -> np.ndarray:
    w = np.exp(z - z.max())
    return w / w.sum()


def sample_action(policy: np.ndarray, u: float) -> int:
    """First action whose cumulative probability exceeds ``u``."""
    i = int(np.searchsorted(np.cumsum(policy), u, side="right"))
    if i < policy.size:
        return i
    return int(np.flatnonzero(policy > 0)[-1])
