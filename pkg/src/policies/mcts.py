"""
UCT Monte-Carlo tree search over decision and chance nodes.

Returns are min-max normalized over everything backed up so far in the tree.
A subtree whose every node has been expanded is marked solved and carries its
exact expectimax value; selection only descends into unsolved children and a
solved root answers with its exact argmax.
"""
import logging
import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from src.config import settings
from src.config.exceptions import InvalidBudgetError, TerminalStateError
from src.config.seeding import derive_seed
from src.mdp.agency_mdp import ActionId, AgencyMdp, AgencyState, TransitionOutcome, state_key
from src.policies.baselines import AdvicePolicy

logger = logging.getLogger(__name__)

ITERATIONS = "iterations"
WALL_CLOCK = "wall_clock"


@dataclass(frozen=True)
class SearchBudget:
    mode: str = ITERATIONS
    amount: float = settings.MCTS_ITERATIONS

    def __post_init__(self):
        if self.mode not in (ITERATIONS, WALL_CLOCK):
            raise InvalidBudgetError(f"unknown budget mode '{self.mode}'")
        if not self.amount > 0 or (self.mode == ITERATIONS and int(self.amount) < 1):
            raise InvalidBudgetError(f"search budget must be positive, got {self.amount}")

    @classmethod
    def iterations(cls, count: int) -> "SearchBudget":
        return cls(ITERATIONS, count)

    @classmethod
    def milliseconds(cls, ms: float) -> "SearchBudget":
        return cls(WALL_CLOCK, ms)


class _DecisionNode:
    __slots__ = ("state", "terminal", "untried", "children", "visits", "total", "solved", "value")

    def __init__(self, mdp: AgencyMdp, state: AgencyState):
        self.state = state
        self.terminal = mdp.is_terminal(state)
        self.untried: List[ActionId] = [] if self.terminal else list(mdp.legal_actions(state))
        self.children: Dict[int, "_ChanceNode"] = {}
        self.visits = 0
        self.total = 0.0
        self.solved = self.terminal
        self.value = mdp.decision(state) if self.terminal else 0.0


class _ChanceNode:
    __slots__ = ("action", "outcomes", "children", "visits", "total", "solved", "value")

    def __init__(self, action: ActionId, outcomes: List[TransitionOutcome]):
        self.action = action
        self.outcomes = outcomes
        self.children: Dict[int, _DecisionNode] = {}
        self.visits = 0
        self.total = 0.0
        self.solved = False
        self.value = 0.0


class MctsSearch:
    def __init__(self, mdp: AgencyMdp, exploration: float = settings.MCTS_EXPLORATION,
                 rng: Optional[np.random.Generator] = None):
        self.mdp = mdp
        self.exploration = exploration
        self.rng = rng or np.random.default_rng()
        self.low = math.inf
        self.high = -math.inf
        self.iterations = 0

    def _normalize(self, mean: float) -> float:
        if self.high <= self.low:
            return 0.5
        return (mean - self.low) / (self.high - self.low)

    def _select_chance(self, node: _DecisionNode) -> _ChanceNode:
        log_visits = math.log(max(node.visits, 1))
        best, best_score = None, -math.inf
        for index in sorted(node.children):
            child = node.children[index]
            if child.solved:
                continue
            score = self._normalize(child.total / child.visits) + \
                self.exploration * math.sqrt(log_visits / child.visits)
            if score > best_score:
                best, best_score = child, score
        return best

    def _sample_outcome(self, chance: _ChanceNode) -> int:
        open_outcomes = [
            i for i in range(len(chance.outcomes))
            if i not in chance.children or not chance.children[i].solved
        ]
        weights = np.array([chance.outcomes[i].probability for i in open_outcomes])
        if len(open_outcomes) == 1:
            return open_outcomes[0]
        return open_outcomes[int(self.rng.choice(len(open_outcomes), p=weights / weights.sum()))]

    def _rollout(self, state: AgencyState) -> float:
        while not self.mdp.is_terminal(state):
            legal = self.mdp.legal_actions(state)
            action = legal[int(self.rng.integers(len(legal)))]
            outcomes = self.mdp.enumerate_outcomes(state, action)
            if len(outcomes) == 1:
                state = outcomes[0].state
            else:
                probs = np.array([o.probability for o in outcomes])
                state = outcomes[int(self.rng.choice(len(outcomes), p=probs / probs.sum()))].state
        return self.mdp.decision(state)

    def _update_solved(self, path: list):
        for node in reversed(path):
            if node.solved:
                continue
            if isinstance(node, _ChanceNode):
                if len(node.children) == len(node.outcomes) and all(c.solved for c in node.children.values()):
                    node.solved = True
                    node.value = math.fsum(
                        o.probability * node.children[i].value for i, o in enumerate(node.outcomes)
                    )
                else:
                    return
            else:
                if not node.untried and all(c.solved for c in node.children.values()):
                    node.solved = True
                    node.value = max(c.value for c in node.children.values())
                else:
                    return

    def iterate(self, root: _DecisionNode):
        node = root
        path: list = [root]
        leaf = None
        while leaf is None:
            if node.terminal:
                leaf = node
            elif node.untried:
                action = node.untried.pop(0)
                chance = _ChanceNode(action, self.mdp.enumerate_outcomes(node.state, action))
                node.children[action.index] = chance
                outcome = self._sample_outcome(chance)
                child = _DecisionNode(self.mdp, chance.outcomes[outcome].state)
                chance.children[outcome] = child
                path.extend([chance, child])
                leaf = child
            else:
                chance = self._select_chance(node)
                outcome = self._sample_outcome(chance)
                child = chance.children.get(outcome)
                path.append(chance)
                if child is None:
                    child = _DecisionNode(self.mdp, chance.outcomes[outcome].state)
                    chance.children[outcome] = child
                    path.append(child)
                    leaf = child
                else:
                    path.append(child)
                    node = child

        value = leaf.value if leaf.terminal else self._rollout(leaf.state)
        self.low = min(self.low, value)
        self.high = max(self.high, value)
        for visited in path:
            visited.visits += 1
            visited.total += value
        self._update_solved(path)
        self.iterations += 1

    def run(self, state: AgencyState, budget: SearchBudget) -> ActionId:
        root = _DecisionNode(self.mdp, state)
        if budget.mode == ITERATIONS:
            for _ in range(int(budget.amount)):
                if root.solved:
                    break
                self.iterate(root)
        else:
            deadline = time.perf_counter() + budget.amount / 1000.0
            while not root.solved and (self.iterations == 0 or time.perf_counter() < deadline):
                self.iterate(root)
        return self.best_action(root)

    @staticmethod
    def best_action(root: _DecisionNode) -> ActionId:
        children = [root.children[i] for i in sorted(root.children)]
        if root.solved:
            best = max(c.value for c in children)
            return next(c.action for c in children if c.value == best)
        most = max(c.visits for c in children)
        return next(c.action for c in children if c.visits == most)


def mcts_search(mdp: AgencyMdp, state: AgencyState, budget: SearchBudget,
                exploration_c: float = settings.MCTS_EXPLORATION, rng_seed: int = settings.DEFAULT_SEED) -> ActionId:
    """Advised action at a nonterminal state by UCT search

    Args:
        mdp: agency MDP
        state: nonterminal root state
        budget: iteration count or wall-clock milliseconds
        exploration_c: UCT exploration constant on normalized returns
        rng_seed: seed for outcome sampling and rollouts
    Returns:
        ActionId: exact argmax once the tree is exhausted, else the most visited child
    """
    if mdp.is_terminal(state):
        raise TerminalStateError(f"no actions to search at terminal state {state}")
    search = MctsSearch(mdp, exploration_c, np.random.default_rng(rng_seed))
    action = search.run(state, budget)
    logger.debug(f"MCTS on {mdp.name}: {search.iterations} iterations, advised {action}")
    return action


class MctsPolicy(AdvicePolicy):
    """MCTS advice with a per-state seed, so iteration budgets give deterministic advice"""

    kind = "mcts"

    def __init__(self, budget: Optional[SearchBudget] = None, exploration: float = settings.MCTS_EXPLORATION,
                 seed: int = settings.DEFAULT_SEED):
        self.budget = budget or SearchBudget()
        self.exploration = exploration
        self.seed = seed
        self.is_deterministic = self.budget.mode == ITERATIONS

    def choose(self, mdp, state, rng):
        seed = derive_seed(self.seed, mdp.name, repr(state_key(state)))
        return mcts_search(mdp, state, self.budget, self.exploration, seed)

    def describe(self):
        return {"kind": self.kind, "budget_mode": self.budget.mode, "budget": self.budget.amount,
                "exploration": self.exploration, "seed": self.seed}
