"""
Behaviour model where the subject may abandon the advice.

The state carries a `commitment` extra. Costly actions spend commitment; once
it falls below the threshold the subject reverts to a fixed fallback rule and
whatever action was advised is replaced by the fallback's choice. A fallback
that is illegal in the current state cannot be taken, so the advice stands.
"""
from typing import Callable, Dict, List

from src.config.exceptions import IllegalActionError
from src.mdp.agency_mdp import ActionId, AgencyState, TransitionModel, TransitionOutcome

COMMITMENT = "commitment"


class CommitmentModel(TransitionModel):
    def __init__(self, base: TransitionModel, costs: Dict[str, float], threshold: float,
                 fallback: Callable[[AgencyState], ActionId]):
        super().__init__(base.actions)
        self.base = base
        self.costs = dict(costs)
        self.threshold = threshold
        self.fallback = fallback
        self.is_deterministic = base.is_deterministic

    def committed(self, state: AgencyState) -> bool:
        return state.extra(COMMITMENT, 0.0) >= self.threshold

    def effective_action(self, state: AgencyState, action: ActionId) -> ActionId:
        """The action the subject actually takes when advised `action`"""
        if self.committed(state):
            return action
        fallback = self.fallback(state)
        return fallback if self.base.is_legal(state, fallback) else action

    def is_legal(self, state: AgencyState, action: ActionId) -> bool:
        return self.base.is_legal(state, action) and \
            self.base.is_legal(state, self.effective_action(state, action))

    def outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        taken = self.effective_action(state, action)
        if not self.base.is_legal(state, taken):
            raise IllegalActionError(taken, state)
        remaining = state.extra(COMMITMENT, 0.0) - self.costs.get(taken.label, 0.0)
        return [
            TransitionOutcome(o.state.evolve(**{COMMITMENT: remaining}), o.probability)
            for o in self.base.outcomes(state, taken)
        ]
