"""
Agency MDP core: states, actions, enumerable transitions, terminal-only reward,
policy rollouts and Monte-Carlo policy-value estimation.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config import settings
from src.config.exceptions import IllegalActionError, TerminalStateError, TransitionModelError
from src.config.seeding import derive_seed
from src.decision.base import DecisionFunction
from src.decision.features import FeatureVector

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ActionId:
    index: int
    label: str

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class AgencyState:
    """Full subject state: decision features, remaining resources, domain extras"""
    features: FeatureVector
    resources: int
    extras: Tuple[Tuple[str, Any], ...] = ()

    def __post_init__(self):
        if self.resources < 0:
            raise ValueError(f"resources must be nonnegative, got {self.resources}")

    @classmethod
    def create(cls, features: FeatureVector, resources: int, **extras) -> "AgencyState":
        return cls(features, int(resources), tuple(sorted(extras.items())))

    def extra(self, name: str, default: Any = None) -> Any:
        for key, value in self.extras:
            if key == name:
                return value
        return default

    @property
    def extras_dict(self) -> Dict[str, Any]:
        return dict(self.extras)

    @property
    def x(self) -> np.ndarray:
        return self.features.as_array()

    def evolve(self, features: Optional[FeatureVector] = None, resources: Optional[int] = None,
               **extras) -> "AgencyState":
        merged = self.extras_dict
        merged.update(extras)
        return replace(
            self,
            features=self.features if features is None else features,
            resources=self.resources if resources is None else int(resources),
            extras=tuple(sorted(merged.items())),
        )


@dataclass(frozen=True)
class TransitionOutcome:
    state: AgencyState
    probability: float


def state_key(state: AgencyState, decimals: int = settings.STATE_KEY_DECIMALS) -> Tuple:
    """Canonical memoization key: rounded features, resources, extras in key order"""
    features = tuple(round(v, decimals) + 0.0 for v in state.features.values)
    return features, state.resources, state.extras


class TransitionModel(ABC):
    """Declared action list plus exact outcome enumeration"""

    is_deterministic: bool = True

    def __init__(self, actions: Sequence[ActionId]):
        self.actions: List[ActionId] = list(actions)

    def action(self, label: str) -> ActionId:
        for a in self.actions:
            if a.label == label:
                return a
        raise KeyError(f"no action labelled '{label}'")

    @abstractmethod
    def is_legal(self, state: AgencyState, action: ActionId) -> bool:
        pass

    @abstractmethod
    def outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        """Outcome distribution for a legal action"""

    def legal_actions(self, state: AgencyState) -> List[ActionId]:
        return [a for a in self.actions if self.is_legal(state, a)]


def resources_exhausted(state: AgencyState) -> bool:
    return state.resources == 0


class AgencyMdp:
    def __init__(self, decision_function: DecisionFunction, model: TransitionModel,
                 terminal: Optional[Callable[[AgencyState], bool]] = None,
                 initial_state: Optional[AgencyState] = None,
                 initial_sampler: Optional[Callable[[np.random.Generator], AgencyState]] = None,
                 name: str = "agency_mdp"):
        self.decision_function = decision_function
        self.model = model
        self.terminal = terminal or resources_exhausted
        self.initial_state = initial_state
        self.initial_sampler = initial_sampler
        self.name = name

    @property
    def actions(self) -> List[ActionId]:
        return self.model.actions

    @property
    def is_deterministic(self) -> bool:
        return self.model.is_deterministic

    def is_terminal(self, state: AgencyState) -> bool:
        return bool(self.terminal(state))

    def decision(self, state: AgencyState) -> float:
        return self.decision_function.evaluate(state.features)

    def reward(self, state: AgencyState) -> float:
        return self.decision(state) if self.is_terminal(state) else 0.0

    def legal_actions(self, state: AgencyState) -> List[ActionId]:
        if self.is_terminal(state):
            raise TerminalStateError(f"no actions at terminal state {state}")
        legal = self.model.legal_actions(state)
        if not legal:
            raise TransitionModelError(f"nonterminal state has no legal action: {state}")
        return legal

    def enumerate_outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        if self.is_terminal(state):
            raise TerminalStateError(f"no transitions from terminal state {state}")
        if not self.model.is_legal(state, action):
            raise IllegalActionError(action, state)
        outcomes = self.model.outcomes(state, action)
        total = math.fsum(o.probability for o in outcomes)
        if not outcomes or abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise TransitionModelError(f"outcomes of {action} sum to {total}")
        for o in outcomes:
            if not 0.0 < o.probability <= 1.0:
                raise TransitionModelError(f"outcome probability {o.probability} outside (0, 1]")
            if o.state.resources > state.resources:
                raise TransitionModelError(f"action {action} increased resources")
        return outcomes

    def sample_initial(self, rng: np.random.Generator) -> AgencyState:
        if self.initial_sampler is not None:
            return self.initial_sampler(rng)
        if self.initial_state is None:
            raise TransitionModelError(f"{self.name} declares no initial state")
        return self.initial_state


# Module-level operations

def reward(mdp: AgencyMdp, state: AgencyState) -> float:
    return mdp.reward(state)


def legal_actions(mdp: AgencyMdp, state: AgencyState) -> List[ActionId]:
    return mdp.legal_actions(state)


def enumerate_outcomes(mdp: AgencyMdp, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
    return mdp.enumerate_outcomes(state, action)


def expected_decision(mdp: AgencyMdp, state: AgencyState, action: ActionId) -> float:
    """Expected decision one step after taking action"""
    return math.fsum(o.probability * mdp.decision(o.state) for o in mdp.enumerate_outcomes(state, action))


def sample_outcome(outcomes: List[TransitionOutcome], rng: np.random.Generator) -> AgencyState:
    if len(outcomes) == 1:
        return outcomes[0].state
    u = rng.random()
    cumulative = 0.0
    for outcome in outcomes:
        cumulative += outcome.probability
        if u < cumulative:
            return outcome.state
    return outcomes[-1].state


@dataclass(frozen=True)
class Trajectory:
    states: Tuple[AgencyState, ...]
    actions: Tuple[ActionId, ...]
    final_decision: float

    @property
    def final_state(self) -> AgencyState:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.actions)

    def rewards(self) -> List[float]:
        """Per-transition rewards: zero everywhere except the last"""
        if not self.actions:
            return []
        return [0.0] * (len(self.actions) - 1) + [self.final_decision]

    def labels(self) -> List[str]:
        return [a.label for a in self.actions]


def rollout(mdp: AgencyMdp, policy, s0: AgencyState, rng_seed: int) -> Trajectory:
    """Follow policy from s0 until end(s) holds

    Args:
        mdp: agency MDP
        policy: object with choose(mdp, state, rng) -> ActionId
        s0: start state (terminal start yields an empty trajectory)
        rng_seed: seed for outcome sampling and randomized policies
    Returns:
        Trajectory
    """
    rng = np.random.default_rng(rng_seed)
    states = [s0]
    actions = []
    state = s0
    step = 0
    while not mdp.is_terminal(state):
        action = policy.choose(mdp, state, rng)
        if not mdp.model.is_legal(state, action):
            raise IllegalActionError(action, state, step=step)
        nxt = sample_outcome(mdp.enumerate_outcomes(state, action), rng)
        if nxt.resources >= state.resources and not mdp.is_terminal(nxt):
            raise TransitionModelError(f"action {action} at step {step} neither spent resources nor ended the episode")
        actions.append(action)
        states.append(nxt)
        state = nxt
        step += 1
    return Trajectory(tuple(states), tuple(actions), mdp.decision(state))


@dataclass
class PolicyValueEstimate:
    mean: float
    stderr: float
    n_samples: int
    evaluations: int
    values: List[float] = field(default_factory=list)
    trajectories: List[Trajectory] = field(default_factory=list)


def estimate_policy_value(mdp: AgencyMdp, policy, s0: AgencyState, n_samples: int, rng_seed: int,
                          keep_trajectories: bool = False) -> PolicyValueEstimate:
    """Monte-Carlo estimate of the expected final decision of policy from s0

    Deterministic MDP plus deterministic policy collapses to one rollout.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, got {n_samples}")
    if mdp.is_deterministic and getattr(policy, "is_deterministic", False):
        trajectory = rollout(mdp, policy, s0, derive_seed(rng_seed, "rollout", 0))
        return PolicyValueEstimate(
            mean=trajectory.final_decision, stderr=0.0, n_samples=n_samples, evaluations=1,
            values=[trajectory.final_decision],
            trajectories=[trajectory] if keep_trajectories else [],
        )

    values = []
    trajectories = []
    for i in range(n_samples):
        trajectory = rollout(mdp, policy, s0, derive_seed(rng_seed, "rollout", i))
        values.append(trajectory.final_decision)
        if keep_trajectories:
            trajectories.append(trajectory)
    array = np.asarray(values, dtype=np.float64)
    stderr = float(array.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return PolicyValueEstimate(float(array.mean()), stderr, n_samples, n_samples, values, trajectories)
