import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from src.config import settings
from src.config.seeding import make_rng
from src.domains.registry import Domain, make_domain
from src.mdp.agency_mdp import expected_decision
from src.policies.factory import build_policy
from src.policies.search import bfs_optimal

logger = logging.getLogger(__name__)


@dataclass
class AdviceResult:
    advised: Optional[str]
    ranked: List[Tuple[str, float]] = field(default_factory=list)
    value_kind: str = "one-step expected decision"
    current: float = 0.0
    optimal_value: Optional[float] = None

    @property
    def terminal(self) -> bool:
        return self.advised is None


class Advisor:
    """Answers "what should I do next?" for one domain and start state"""

    def __init__(self, domain_config: Dict, seed: int = settings.DEFAULT_SEED, domain: Optional[Domain] = None):
        self.seed = seed
        self.domain = domain or make_domain(domain_config, seed)

    def advise(self, state_data: Dict, policy: str = "bfs", budget: int = 1,
               params: Optional[Dict] = None) -> AdviceResult:
        """Recommend an action with the given policy

        Args:
            state_data: domain start description (position, answers, household, record)
            policy: policy kind
            budget: resources (steps, answer changes or months) left
            params: policy options
        Returns:
            AdviceResult: BFS ranks actions by Q-value, other policies by one-step expected decision
        """
        start = self.domain.start_from(state_data)
        mdp, state = self.domain.mdp_for(start, budget)
        current = self.domain.report_value(mdp.decision(state))
        if mdp.is_terminal(state):
            logger.info("Start state is terminal")
            return AdviceResult(None, current=current)

        report = self.domain.report_value
        if policy == "bfs":
            result = bfs_optimal(mdp, state, int((params or {}).get("node_cap", settings.BFS_NODE_CAP)))
            ranked = [(a.label, report(q)) for a, q in result.q_values]
            advised, kind, optimal = result.best_action.label, "Q-value", report(result.value)
        else:
            chooser = build_policy(policy, params, self.seed)
            advised = chooser.choose(mdp, state, make_rng(self.seed, "advise", policy)).label
            ranked = [(a.label, report(expected_decision(mdp, state, a))) for a in mdp.legal_actions(state)]
            kind, optimal = "one-step expected decision", None

        reverse = self.domain.objective != "minimize"
        ranked.sort(key=lambda item: item[1], reverse=reverse)
        logger.info(f"{policy} advises '{advised}'")
        return AdviceResult(advised, ranked, kind, current, optimal)
