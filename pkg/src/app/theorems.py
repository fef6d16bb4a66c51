"""
Executable checks of when local advice is optimal: greedy agrees with exact
search at one resource, straight gradient fields leave no greedy gap, and a
non-global local maximum does.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.config import settings
from src.config.seeding import derive_seed, make_rng
from src.decision.base import DecisionFunction
from src.decision.synthetic import load_presets, make_preset
from src.domains.credit import SyntheticFicoDecision, build_simple_credit_mdp, load_credit_preset
from src.domains.household import build_realistic_credit_mdp, random_household
from src.domains.lattice import build_lattice_mdp
from src.domains.registry import RecidivismDomain
from src.mdp.agency_mdp import AgencyMdp, AgencyState, state_key
from src.policies.baselines import GreedyPolicy, greedy_action
from src.policies.gradient import gradient_action
from src.policies.search import ExpectimaxSolver, bfs_optimal

logger = logging.getLogger(__name__)

LATTICE_PRESETS = ("fig1_default", "fig2_default", "linear_default", "radial_default", "logistic_default")


@dataclass
class FlowDeviation:
    start: List[float]
    deviation: float
    steps: int


@dataclass
class StraightnessReport:
    points: List[FlowDeviation] = field(default_factory=list)
    skipped: int = 0

    @property
    def max_deviation(self) -> float:
        return max((p.deviation for p in self.points), default=0.0)

    @property
    def mean_deviation(self) -> float:
        return float(np.mean([p.deviation for p in self.points])) if self.points else 0.0


def chord_deviation(points: np.ndarray) -> float:
    """Largest distance of a polyline's points from the line through its endpoints"""
    a, b = points[0], points[-1]
    chord = b - a
    length = float(np.linalg.norm(chord))
    if length == 0.0:
        return float(np.max(np.linalg.norm(points - a, axis=1)))
    u = chord / length
    offsets = points - a
    perpendicular = offsets - np.outer(offsets @ u, u)
    return float(np.max(np.linalg.norm(perpendicular, axis=1)))


def _flow_line(df: DecisionFunction, x0: np.ndarray, box: np.ndarray, step: float,
               fd_step: float, max_steps: int) -> np.ndarray:
    points = [x0.copy()]
    x = x0.copy()
    for _ in range(max_steps):
        move = gradient_action(df, x, step, fd_step)
        if move.stationary:
            break
        x = x + move.displacement
        if np.any(x < box[:, 0]) or np.any(x > box[:, 1]):
            break
        points.append(x.copy())
    return np.asarray(points)


def gradient_straightness_check(df: DecisionFunction, box, n_samples: int, step: float = settings.FLOW_STEP,
                                seed: int = settings.DEFAULT_SEED, fd_step: float = settings.FD_STEP,
                                max_steps: Optional[int] = None) -> StraightnessReport:
    """Integrate the normalized gradient flow from seeded points and measure its bend

    Args:
        df: numeric decision function
        box: (d, 2) array of [low, high] per feature
        n_samples: number of uniformly drawn start points
        step: flow step length
        seed: master seed
        max_steps: cap on flow steps, by default enough to cross the box diagonal twice
    Returns:
        StraightnessReport: stationary start points are skipped and counted
    """
    box = np.asarray(box, dtype=np.float64)
    if max_steps is None:
        max_steps = int(math.ceil(2.0 * np.linalg.norm(box[:, 1] - box[:, 0]) / step))
    rng = make_rng(seed, "straightness", df.name)
    report = StraightnessReport()
    for _ in range(n_samples):
        x0 = rng.uniform(box[:, 0], box[:, 1])
        if gradient_action(df, x0, step, fd_step).stationary:
            report.skipped += 1
            continue
        line = _flow_line(df, x0, box, step, fd_step, max_steps)
        report.points.append(FlowDeviation(x0.tolist(), chord_deviation(line), len(line) - 1))
    logger.info(f"{df.name}: flow deviation max {report.max_deviation:.3g}, "
                f"mean {report.mean_deviation:.3g}, {report.skipped} stationary starts")
    return report


def policy_value(mdp: AgencyMdp, policy, state: AgencyState, memo: Optional[Dict] = None) -> float:
    """Exact expected final decision of a deterministic policy, by enumerating outcomes"""
    if mdp.is_terminal(state):
        return mdp.decision(state)
    memo = {} if memo is None else memo
    key = state_key(state)
    if key not in memo:
        action = policy.choose(mdp, state, None)
        memo[key] = math.fsum(o.probability * policy_value(mdp, policy, o.state, memo)
                              for o in mdp.enumerate_outcomes(state, action))
    return memo[key]


@dataclass
class GapRow:
    state: AgencyState
    resources: int
    bfs_value: float
    greedy_value: float
    gap: float
    witness: bool


def greedy_gap(mdp: AgencyMdp, states: Sequence[AgencyState], resources: Sequence[int],
               tolerance: float = settings.GAP_TOLERANCE, node_cap: int = settings.BFS_NODE_CAP) -> List[GapRow]:
    """Optimal value minus the greedy rollout's value for each (state, resources)

    Rows with gap > tolerance are flagged as greedy-failure witnesses.
    """
    solver = ExpectimaxSolver(mdp, node_cap)
    greedy = GreedyPolicy()
    memo: Dict = {}
    rows = []
    for state in states:
        for r in resources:
            start = state.evolve(resources=int(r))
            best = solver.value(start)
            achieved = policy_value(mdp, greedy, start, memo)
            gap = best - achieved
            if gap < -tolerance:
                logger.error(f"negative greedy gap {gap} on {mdp.name} at r={r}")
            rows.append(GapRow(start, int(r), best, achieved, gap, gap > tolerance))
    return rows


@dataclass
class TheoremCheck:
    check: str
    domain: str
    passed: bool
    detail: str


@dataclass
class TheoremReport:
    checks: List[TheoremCheck]
    metadata: Dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> List[TheoremCheck]:
        return [c for c in self.checks if not c.passed]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(c) for c in self.checks], columns=["check", "domain", "passed", "detail"])


def greedy_matches_one_step_search(mdp: AgencyMdp, states: Sequence[AgencyState]) -> tuple:
    """With one resource left, the greedy action is always among the exact maximizers"""
    misses = 0
    for state in states:
        if mdp.is_terminal(state):
            continue
        result = bfs_optimal(mdp, state)
        if greedy_action(mdp, state) not in result.maximizers():
            misses += 1
    return misses == 0, misses


def _lattice(name: str, presets: Dict, resources: int) -> AgencyMdp:
    return build_lattice_mdp(make_preset(name, presets), presets[name]["domain"], resources)


def _one_resource_domains(presets: Dict) -> Dict[str, AgencyMdp]:
    out = {name: _lattice(name, presets, 1) for name in LATTICE_PRESETS}
    out["simple_credit"] = build_simple_credit_mdp(SyntheticFicoDecision(), [0] * 10, 1)
    return out


def run_theorem_suite(seed: int = settings.DEFAULT_SEED, n_states: int = 100,
                      straightness_samples: int = 20, flow_step: float = 0.01,
                      gap_resources: Sequence[int] = (1, 2, 3, 4, 5),
                      domains: Optional[Dict[str, RecidivismDomain]] = None) -> TheoremReport:
    """Run every check and return one row per (check, domain)

    `domains` maps score variant to a recidivism domain; each one adds a
    one-resource agreement check over n_states sampled arrestees.
    """
    presets = load_presets()
    checks: List[TheoremCheck] = []

    for name, mdp in _one_resource_domains(presets).items():
        rng = make_rng(seed, "one_resource", name)
        states = [mdp.sample_initial(rng) for _ in range(n_states)]
        passed, misses = greedy_matches_one_step_search(mdp, states)
        checks.append(TheoremCheck("greedy_optimal_at_one_resource", name, passed,
                                   f"{misses} of {n_states} states disagree"))

    preset = load_credit_preset()
    fico = SyntheticFicoDecision(preset)
    rng = make_rng(seed, "one_resource", "realistic_credit")
    misses = 0
    for _ in range(n_states):
        mdp = build_realistic_credit_mdp(fico, random_household(rng, 1), 1, preset)
        misses += greedy_matches_one_step_search(mdp, [mdp.initial_state])[1]
    checks.append(TheoremCheck("greedy_optimal_at_one_resource", "realistic_credit", misses == 0,
                               f"{misses} of {n_states} households disagree"))

    for variant, domain in sorted((domains or {}).items()):
        rng = make_rng(seed, "one_resource", "recidivism", variant)
        starts = domain.sample_starts(n_states, rng)
        misses = 0
        for start in starts:
            mdp, state = domain.mdp_for(start, 1)
            misses += greedy_matches_one_step_search(mdp, [state])[1]
        checks.append(TheoremCheck("greedy_optimal_at_one_resource", f"recidivism_{variant}", misses == 0,
                                   f"{misses} of {len(starts)} records disagree"))

    for name in ("linear_default", "radial_default", "linear_1d"):
        df = make_preset(name, presets)
        flow = gradient_straightness_check(df, df.box, straightness_samples, flow_step,
                                           derive_seed(seed, "flow", name))
        straight = flow.max_deviation <= settings.STRAIGHTNESS_TOLERANCE
        checks.append(TheoremCheck("straight_gradient_field", name, straight,
                                   f"max deviation {flow.max_deviation:.3g}, {flow.skipped} stationary"))
        mdp = _lattice(name, presets, 1)
        rows = greedy_gap(mdp, [mdp.initial_state], gap_resources)
        worst = max(row.gap for row in rows)
        checks.append(TheoremCheck("no_greedy_gap_on_straight_field", name, worst <= settings.GAP_TOLERANCE,
                                   f"largest gap {worst:.3g} over r={list(gap_resources)}"))

    df = make_preset("fig2_default", presets)
    flow = gradient_straightness_check(df, df.box, straightness_samples, flow_step,
                                       derive_seed(seed, "flow", "fig2_default"))
    checks.append(TheoremCheck("curved_gradient_field", "fig2_default", flow.max_deviation > 0.1,
                               f"max deviation {flow.max_deviation:.3g}"))

    for name, r in (("fig1_default", 3), ("fig2_default", 6)):
        mdp = _lattice(name, presets, r)
        row = greedy_gap(mdp, [mdp.initial_state], [r])[0]
        checks.append(TheoremCheck("greedy_gap_witness", name, row.witness,
                                   f"r={r}: optimal {row.bfs_value:.6g}, greedy {row.greedy_value:.6g}"))

    report = TheoremReport(checks, {
        "seed": seed, "n_states": n_states, "straightness_samples": straightness_samples,
        "flow_step": flow_step, "gap_resources": list(gap_resources), "recidivism_variants": sorted(domains or {}),
        "straightness_tolerance": settings.STRAIGHTNESS_TOLERANCE, "gap_tolerance": settings.GAP_TOLERANCE,
    })
    logger.info(f"Theorem suite: {len(checks) - len(report.failed())} of {len(checks)} checks passed")
    return report
