"""
Explicit-table MDPs: a single ordinal `node` feature, per-(node, action) outcome
tables and a node -> decision table. Used for oracle checks and stochastic fixtures.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config.exceptions import TransitionModelError
from src.decision.base import DecisionFunction
from src.decision.features import FeatureSchema, FeatureSpec, FeatureVector
from src.mdp.agency_mdp import ActionId, AgencyMdp, AgencyState, TransitionModel, TransitionOutcome

OutcomeTable = Dict[Tuple[int, int], List[Tuple[int, float]]]


def node_schema(n_nodes: int) -> FeatureSchema:
    return FeatureSchema((FeatureSpec.ordinal("node", n_nodes),))


class TableDecision(DecisionFunction):
    def __init__(self, schema: FeatureSchema, values: Sequence[float]):
        super().__init__(schema, name="table")
        self.values = np.asarray(values, dtype=np.float64)

    def evaluate_array(self, values: np.ndarray) -> float:
        return float(self.values[int(values[0])])


class TabularModel(TransitionModel):
    def __init__(self, schema: FeatureSchema, table: OutcomeTable, n_actions: int,
                 labels: Optional[Sequence[str]] = None):
        labels = labels or [f"a{i}" for i in range(n_actions)]
        super().__init__([ActionId(i, label) for i, label in enumerate(labels)])
        self.schema = schema
        self.table = table
        self.is_deterministic = all(len(outcomes) == 1 for outcomes in table.values())

    def node(self, state: AgencyState) -> int:
        return int(state.features.values[0])

    def is_legal(self, state: AgencyState, action: ActionId) -> bool:
        return (self.node(state), action.index) in self.table

    def outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        entries = self.table.get((self.node(state), action.index))
        if entries is None:
            raise TransitionModelError(f"no table entry for node {self.node(state)} action {action}")
        return [
            TransitionOutcome(
                AgencyState(FeatureVector.of(self.schema, [nxt]), state.resources - 1, state.extras),
                float(p),
            )
            for nxt, p in entries
        ]


def tabular_state(schema: FeatureSchema, node: int, resources: int) -> AgencyState:
    return AgencyState(FeatureVector.of(schema, [node]), resources)


def build_tabular_mdp(table: OutcomeTable, values: Sequence[float], n_actions: int,
                      start: int = 0, resources: int = 1, name: str = "tabular") -> AgencyMdp:
    schema = node_schema(len(values))
    model = TabularModel(schema, table, n_actions)
    return AgencyMdp(TableDecision(schema, values), model,
                     initial_state=tabular_state(schema, start, resources), name=name)


def random_tabular_mdp(rng: np.random.Generator, n_nodes: int = 30, max_actions: int = 4,
                       max_resources: int = 4, illegal_fraction: float = 0.2) -> AgencyMdp:
    """Random deterministic MDP with at most n_nodes * (max_resources + 1) reachable states"""
    n_actions = int(rng.integers(2, max_actions + 1))
    resources = int(rng.integers(2, max_resources + 1))
    values = rng.uniform(1.0, 10.0, size=n_nodes)
    table: OutcomeTable = {}
    for node in range(n_nodes):
        legal = [a for a in range(n_actions) if rng.random() >= illegal_fraction]
        if not legal:
            legal = [int(rng.integers(n_actions))]
        for a in legal:
            table[(node, a)] = [(int(rng.integers(n_nodes)), 1.0)]
    return build_tabular_mdp(table, values, n_actions, start=int(rng.integers(n_nodes)),
                             resources=resources, name="random_tabular")
