"""
Exact expectimax over all action sequences, memoized on canonical state keys
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from src.config import settings
from src.config.exceptions import SearchBudgetExceeded
from src.mdp.agency_mdp import ActionId, AgencyMdp, AgencyState, state_key
from src.policies.baselines import AdvicePolicy

logger = logging.getLogger(__name__)


@dataclass
class OptimalValueResult:
    best_action: ActionId
    value: float
    q_values: List[Tuple[ActionId, float]]
    nodes_expanded: int

    def maximizers(self, tolerance: float = settings.GAP_TOLERANCE) -> List[ActionId]:
        return [a for a, q in self.q_values if q >= self.value - tolerance]

    def q_of(self, label: str) -> float:
        for action, q in self.q_values:
            if action.label == label:
                return q
        raise KeyError(label)


class ExpectimaxSolver:
    """Value oracle with a memo shared across queries on one MDP"""

    def __init__(self, mdp: AgencyMdp, node_cap: int = settings.BFS_NODE_CAP):
        self.mdp = mdp
        self.node_cap = node_cap
        self.memo: Dict[Tuple, float] = {}
        self.nodes_expanded = 0
        self._max_depth = 0

    def value(self, state: AgencyState, depth: int = 0) -> float:
        if self.mdp.is_terminal(state):
            return self.mdp.decision(state)
        key = state_key(state)
        cached = self.memo.get(key)
        if cached is not None:
            return cached
        self.nodes_expanded += 1
        self._max_depth = max(self._max_depth, depth)
        if self.nodes_expanded > self.node_cap:
            raise SearchBudgetExceeded(self.node_cap, self.nodes_expanded, self._max_depth)
        best = -math.inf
        for action in self.mdp.legal_actions(state):
            best = max(best, self.q_value(state, action, depth))
        self.memo[key] = best
        return best

    def q_value(self, state: AgencyState, action: ActionId, depth: int = 0) -> float:
        return math.fsum(
            o.probability * self.value(o.state, depth + 1)
            for o in self.mdp.enumerate_outcomes(state, action)
        )

    def solve(self, state: AgencyState) -> OptimalValueResult:
        before = self.nodes_expanded
        q_values = [(a, self.q_value(state, a)) for a in self.mdp.legal_actions(state)]
        value = max(q for _, q in q_values)
        best = next(a for a, q in q_values if q == value)
        return OptimalValueResult(best, value, q_values, self.nodes_expanded - before)


def bfs_optimal(mdp: AgencyMdp, state: AgencyState, node_cap: int = settings.BFS_NODE_CAP,
                solver: Optional[ExpectimaxSolver] = None) -> OptimalValueResult:
    """Exact optimal action and value at a nonterminal state

    Args:
        mdp: agency MDP with enumerable outcomes
        state: nonterminal start state
        node_cap: maximum distinct states expanded before giving up
        solver: reuse a solver (and its memo) across calls on the same MDP
    Returns:
        OptimalValueResult: best action is the lowest-indexed Q-maximizer
    """
    solver = solver or ExpectimaxSolver(mdp, node_cap)
    result = solver.solve(state)
    logger.debug(f"BFS on {mdp.name}: V*={result.value:.6g}, {result.nodes_expanded} nodes")
    return result


def optimal_value(mdp: AgencyMdp, state: AgencyState, node_cap: int = settings.BFS_NODE_CAP) -> float:
    if mdp.is_terminal(state):
        return mdp.decision(state)
    return bfs_optimal(mdp, state, node_cap).value


class BfsPolicy(AdvicePolicy):
    kind = "bfs"

    def __init__(self, node_cap: int = settings.BFS_NODE_CAP):
        self.node_cap = node_cap
        self._solvers: Dict[int, ExpectimaxSolver] = {}

    def solver_for(self, mdp: AgencyMdp) -> ExpectimaxSolver:
        solver = self._solvers.get(id(mdp))
        if solver is None or solver.mdp is not mdp:
            solver = ExpectimaxSolver(mdp, self.node_cap)
            self._solvers = {id(mdp): solver}
        return solver

    def choose(self, mdp, state, rng):
        return bfs_optimal(mdp, state, self.node_cap, self.solver_for(mdp)).best_action

    def describe(self):
        return {"kind": self.kind, "node_cap": self.node_cap}


@dataclass
class PlanStep:
    action: ActionId
    q_value: float
    state: AgencyState


@dataclass
class Plan:
    value: float
    steps: List[PlanStep] = field(default_factory=list)

    @property
    def labels(self) -> List[str]:
        return [step.action.label for step in self.steps]


def bfs_plan(mdp: AgencyMdp, state: AgencyState, node_cap: int = settings.BFS_NODE_CAP) -> Plan:
    """Principal variation of a deterministic MDP from state"""
    solver = ExpectimaxSolver(mdp, node_cap)
    plan = Plan(value=mdp.decision(state) if mdp.is_terminal(state) else solver.value(state))
    while not mdp.is_terminal(state):
        result = solver.solve(state)
        state = mdp.enumerate_outcomes(state, result.best_action)[0].state
        plan.steps.append(PlanStep(result.best_action, result.value, state))
    return plan
