"""
Baseline advice policies: random, greedy one-step, fixed rules
"""
import logging
from abc import ABC, abstractmethod
from typing import Callable, Dict, Optional

import numpy as np

from src.config.exceptions import IllegalActionError
from src.mdp.agency_mdp import ActionId, AgencyMdp, AgencyState, expected_decision

logger = logging.getLogger(__name__)


class AdvicePolicy(ABC):
    """Deterministic or seeded map from nonterminal states to legal actions"""

    kind: str = "policy"
    is_deterministic: bool = True

    @abstractmethod
    def choose(self, mdp: AgencyMdp, state: AgencyState, rng: np.random.Generator) -> ActionId:
        pass

    @property
    def name(self) -> str:
        return self.kind

    def describe(self) -> Dict:
        return {"kind": self.kind}


def greedy_action(mdp: AgencyMdp, state: AgencyState) -> ActionId:
    """Action maximizing the expected decision one step ahead (lowest index on ties)"""
    best_action = None
    best_value = -np.inf
    for action in mdp.legal_actions(state):
        value = expected_decision(mdp, state, action)
        if value > best_value:
            best_action, best_value = action, value
    return best_action


def random_action(mdp: AgencyMdp, state: AgencyState, rng_seed) -> ActionId:
    """Uniform draw over legal actions; rng_seed may be a seed or a Generator"""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    legal = mdp.legal_actions(state)
    return legal[int(rng.integers(len(legal)))]


class RandomPolicy(AdvicePolicy):
    kind = "random"
    is_deterministic = False

    def choose(self, mdp, state, rng):
        return random_action(mdp, state, rng)


class GreedyPolicy(AdvicePolicy):
    kind = "greedy"

    def choose(self, mdp, state, rng):
        return greedy_action(mdp, state)


class FixedPolicy(AdvicePolicy):
    """Constant rule: selector(state) names an action label; fallback when it is illegal"""

    kind = "fixed"

    def __init__(self, selector: Callable[[AgencyState], str], fallback: Optional[Callable[[AgencyState], str]] = None,
                 name: str = "fixed"):
        self.selector = selector
        self.fallback = fallback
        self._name = name

    @property
    def name(self) -> str:
        return self._name

    def choose(self, mdp, state, rng):
        action = mdp.model.action(self.selector(state))
        if mdp.model.is_legal(state, action):
            return action
        if self.fallback is not None:
            fallback = mdp.model.action(self.fallback(state))
            if mdp.model.is_legal(state, fallback):
                return fallback
            raise IllegalActionError(fallback, state)
        # rollout reports the step index
        return action

    def describe(self):
        return {"kind": self.kind, "name": self._name}


def fixed_policy(action_selector, fallback=None, name: str = "fixed") -> FixedPolicy:
    """Wrap a constant rule. Strings are treated as constant action labels."""
    selector = (lambda _s, label=action_selector: label) if isinstance(action_selector, str) else action_selector
    if isinstance(fallback, str):
        fallback_label = fallback
        fallback = lambda _s: fallback_label
    return FixedPolicy(selector, fallback, name=name)
