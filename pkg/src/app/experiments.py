"""
Experiment harness: policy comparison tables, per-group agency under the two
risk models, and the credit scenario horizon sweep.
"""
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.config import settings
from src.config.exceptions import ConfigError, SearchBudgetExceeded
from src.config.seeding import derive_seed, make_rng
from src.domains.household import OPEN_FULL, OPEN_MINIMUM, load_scenario
from src.domains.recidivism import FULL, VARIANTS
from src.domains.registry import MAXIMIZE, MINIMIZE, Domain, RecidivismDomain, make_domain
from src.mdp.agency_mdp import AgencyMdp, AgencyState, estimate_policy_value, rollout
from src.policies.factory import POLICY_KINDS, build_policy, policy_label
from src.policies.search import bfs_plan

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ["policy", "resources", "mean", "stderr", "n"]
GROUP_COLUMNS = ["group", "variant", "k", "mean_before", "mean_after", "n", "small_sample_flag"]
SCENARIO_COLUMNS = ["scenario", "horizon", "policy", "final_score", "cards_opened", "plan"]


@dataclass
class ExperimentSpec:
    """One archived experiment: domain, policies, resource range and seeding"""
    name: str
    domain: Dict
    policies: List[Dict]
    resources: List[int]
    n_states: int = 100
    seed: int = settings.DEFAULT_SEED
    rollouts: int = 1
    output_dir: str = str(settings.OUTPUT_DIR)
    objective: str = MAXIMIZE

    def validate(self):
        if not self.resources:
            raise ConfigError("resource range must not be empty")
        if any(int(r) < 0 for r in self.resources):
            raise ConfigError(f"resources must be nonnegative, got {self.resources}")
        if self.n_states < 1 or self.rollouts < 1:
            raise ConfigError("n_states and rollouts must be at least 1")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        for entry in self.policies:
            if entry.get("kind") not in POLICY_KINDS:
                raise ConfigError(f"unknown policy kind '{entry.get('kind')}', expected one of {POLICY_KINDS}")
        labels = [self.label_of(entry) for entry in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"policy labels must be unique, got {labels}")
        if self.objective not in (MAXIMIZE, MINIMIZE):
            raise ConfigError(f"objective must be '{MAXIMIZE}' or '{MINIMIZE}'")
        if "kind" not in self.domain:
            raise ConfigError("domain block needs a 'kind'")

    @staticmethod
    def label_of(entry: Dict) -> str:
        return policy_label(entry["kind"], entry)

    @classmethod
    def from_dict(cls, data: Dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown experiment fields {sorted(unknown)}")
        try:
            spec = cls(**data)
        except TypeError as e:
            raise ConfigError(f"invalid experiment block: {e}") from e
        spec.resources = [int(r) for r in spec.resources]
        if spec.domain.get("kind") == "recidivism" and "objective" not in data:
            spec.objective = MINIMIZE
        spec.validate()
        return spec

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class ComparisonRow:
    policy: str
    resources: int
    mean: float
    stderr: float
    n: int


@dataclass
class ComparisonTable:
    rows: List[ComparisonRow]
    metadata: Dict = field(default_factory=dict)
    failures: List[Dict] = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows], columns=COMPARISON_COLUMNS)

    @property
    def axis_labels(self) -> tuple:
        if self.metadata.get("objective") == MINIMIZE:
            return "resources", "mean risk score (lower is better)"
        return "resources", "mean final decision"

    def cell(self, policy: str, resources: int) -> ComparisonRow:
        for row in self.rows:
            if row.policy == policy and row.resources == resources:
                return row
        raise KeyError((policy, resources))

    def series(self) -> Dict[str, List[tuple]]:
        """policy -> [(resources, mean)] for charting, skipped cells left out"""
        out: Dict[str, List[tuple]] = {}
        for row in self.rows:
            if not math.isnan(row.mean):
                out.setdefault(row.policy, []).append((row.resources, row.mean))
        return out


def _summarize(values: Sequence[float]) -> tuple:
    array = np.asarray(values, dtype=np.float64)
    stderr = float(array.std(ddof=1) / math.sqrt(len(array))) if len(array) > 1 else 0.0
    return float(array.mean()), stderr


def _cell_value(domain: Domain, mdp: AgencyMdp, s0: AgencyState, policy, kind: str,
                rollouts: int, seed: int) -> float:
    if kind == "bfs":
        solver = policy.solver_for(mdp)
        return domain.report_value(solver.value(s0))
    return domain.report_value(estimate_policy_value(mdp, policy, s0, rollouts, seed).mean)


def compare_policies(spec: ExperimentSpec, domain: Optional[Domain] = None,
                     progress_callback: Optional[Callable[[int, int], None]] = None) -> ComparisonTable:
    """Roll every policy out from the same seeded start states at every resource count

    Args:
        spec: validated experiment spec
        domain: prebuilt domain handle (shares a trained forest between runs)
        progress_callback: called with (cells done, total cells)
    Returns:
        ComparisonTable: one row per (policy, resources); BFS rows hold exact values
    """
    spec.validate()
    domain = domain or make_domain(spec.domain, spec.seed)
    starts = domain.sample_starts(spec.n_states, make_rng(spec.seed, "starts", domain.kind))
    policies = [(ExperimentSpec.label_of(e), e["kind"], build_policy(e["kind"], e, spec.seed))
                for e in spec.policies]

    started = time.perf_counter()
    values: Dict[tuple, List[float]] = {}
    failures: List[Dict] = []
    total = len(spec.resources) * len(policies)
    done = 0
    for r in spec.resources:
        mdps = [domain.mdp_for(start, r) for start in starts]
        for label, kind, policy in policies:
            cell = []
            try:
                for i, (mdp, s0) in enumerate(mdps):
                    seed = derive_seed(spec.seed, "cell", label, r, i)
                    cell.append(_cell_value(domain, mdp, s0, policy, kind, spec.rollouts, seed))
            except SearchBudgetExceeded as e:
                logger.warning(f"Skipping {label} at r={r}: {e}")
                failures.append({"policy": label, "resources": r, "error": str(e)})
                cell = []
            values[(label, r)] = cell
            done += 1
            if progress_callback:
                progress_callback(done, total)
        logger.info(f"{spec.name}: finished r={r}")

    rows = []
    for label, _, _ in policies:
        for r in spec.resources:
            cell = values[(label, r)]
            if cell:
                mean, stderr = _summarize(cell)
                rows.append(ComparisonRow(label, r, mean, stderr, len(cell)))
            else:
                rows.append(ComparisonRow(label, r, float("nan"), float("nan"), 0))
    logger.info(f"{spec.name}: {total} cells in {time.perf_counter() - started:.2f}s, {len(failures)} skipped")

    metadata = {
        "experiment": spec.to_dict(),
        "domain": domain.describe(),
        "objective": domain.objective,
        "policies": {label: policy.describe() for label, _, policy in policies},
        "start_seed": derive_seed(spec.seed, "starts", domain.kind),
    }
    return ComparisonTable(rows, metadata, failures)


@dataclass
class GroupAgencyRow:
    group: str
    variant: str
    k: int
    mean_before: float
    mean_after: float
    n: int
    small_sample_flag: bool


@dataclass
class GroupAgencyReport:
    rows: List[GroupAgencyRow]
    metadata: Dict = field(default_factory=dict)
    axis_labels = ("advice steps k", "mean risk change")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows], columns=GROUP_COLUMNS)

    def deltas(self) -> Dict[tuple, float]:
        """(group, variant, k) -> mean_after - mean_before; negative means risk went down"""
        return {(r.group, r.variant, r.k): r.mean_after - r.mean_before for r in self.rows}

    def series(self) -> Dict[str, List[tuple]]:
        out: Dict[str, List[tuple]] = {}
        for row in self.rows:
            out.setdefault(f"{row.group} ({row.variant})", []).append((row.k, row.mean_after - row.mean_before))
        return out


def group_agency_report(spec: ExperimentSpec, groups: Optional[Sequence[str]] = None,
                        domains: Optional[Dict[str, RecidivismDomain]] = None) -> GroupAgencyReport:
    """Mean risk score per race x sex group before and after k steps of advice

    The first policy in the experiment spec gives the advice (MCTS in the shipped configs);
    spec.resources lists the step counts k. Groups come from the initial record.

    Args:
        spec: recidivism experiment spec
        groups: restrict the report to these groups
        domains: prebuilt {"full": ..., "blind": ...} handles
    """
    spec.validate()
    if spec.domain.get("kind") != "recidivism":
        raise ConfigError("group agency report needs a recidivism domain")
    domains = domains or recidivism_domains(spec.domain, spec.seed)
    entry = spec.policies[0]
    label = ExperimentSpec.label_of(entry)
    policy = build_policy(entry["kind"], entry, spec.seed)

    rows = []
    sizes = {}
    for variant in VARIANTS:
        domain = domains[variant]
        members = domain.sample_starts(spec.n_states, make_rng(spec.seed, "group_starts", variant))
        by_group: Dict[str, List] = {}
        for record in members:
            if groups is None or record.group in groups:
                by_group.setdefault(record.group, []).append(record)
        for group in sorted(by_group):
            records = by_group[group]
            before = float(np.mean([domain.risk_of(r) for r in records]))
            sizes[f"{group} ({variant})"] = len(records)
            for k in spec.resources:
                after = []
                for i, record in enumerate(records):
                    mdp, s0 = domain.mdp_for(record, k)
                    trajectory = rollout(mdp, policy, s0, derive_seed(spec.seed, "group", variant, group, k, i))
                    after.append(domain.report_value(trajectory.final_decision))
                rows.append(GroupAgencyRow(group, variant, int(k), before, float(np.mean(after)), len(records),
                                           len(records) < settings.MIN_GROUP_SIZE))
            logger.info(f"{variant} / {group}: {len(records)} members done")

    rows.sort(key=lambda r: (r.group, VARIANTS.index(r.variant), r.k))
    metadata = {
        "experiment": spec.to_dict(),
        "advice_policy": {label: policy.describe()},
        "groups": groups,
        "group_sizes": sizes,
        "models": {v: domains[v].describe() for v in VARIANTS},
    }
    return GroupAgencyReport(rows, metadata)


@dataclass
class ScenarioRow:
    scenario: str
    horizon: int
    policy: str
    final_score: float
    cards_opened: int
    plan: str


@dataclass
class ScenarioReport:
    rows: List[ScenarioRow]
    metadata: Dict = field(default_factory=dict)
    axis_labels = ("horizon (months)", "final score")

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows], columns=SCENARIO_COLUMNS)

    def mean_score(self, policy: str) -> float:
        return float(np.mean([r.final_score for r in self.rows if r.policy == policy]))

    def row(self, policy: str, horizon: int) -> ScenarioRow:
        for r in self.rows:
            if r.policy == policy and r.horizon == horizon:
                return r
        raise KeyError((policy, horizon))

    def series(self) -> Dict[str, List[tuple]]:
        out: Dict[str, List[tuple]] = {}
        for r in self.rows:
            out.setdefault(r.policy, []).append((r.horizon, r.final_score))
        return out


def _cards_opened(labels: Sequence[str]) -> int:
    return sum(1 for label in labels if label in (OPEN_MINIMUM, OPEN_FULL))


def credit_scenario_report(scenario: str, horizons: Sequence[int], policies: Sequence[Dict],
                           seed: int = settings.DEFAULT_SEED) -> ScenarioReport:
    """Final synthetic score of each policy from a named household, per horizon in months"""
    loaded = load_scenario(scenario)
    domain = make_domain({"kind": "realistic_credit", "scenario": scenario}, seed)
    built = [(ExperimentSpec.label_of(e), e["kind"], build_policy(e["kind"], e, seed)) for e in policies]
    rows = []
    for horizon in horizons:
        mdp, s0 = domain.mdp_for(loaded.household, int(horizon))
        for label, kind, policy in built:
            if kind == "bfs":
                plan = bfs_plan(mdp, s0, policy.node_cap)
                score, labels = plan.value, plan.labels
            else:
                trajectory = rollout(mdp, policy, s0, derive_seed(seed, "scenario", scenario, label, horizon))
                score, labels = trajectory.final_decision, trajectory.labels()
            rows.append(ScenarioRow(loaded.name, int(horizon), label, float(score), _cards_opened(labels),
                                    " | ".join(labels)))
        logger.info(f"{loaded.name}: horizon {horizon} done")
    metadata = {
        "scenario": loaded.name,
        "horizons": [int(h) for h in horizons],
        "policies": {label: policy.describe() for label, _, policy in built},
        "seed": seed,
        "domain": domain.describe(),
    }
    return ScenarioReport(rows, metadata)


def recidivism_domains(domain: Dict, seed: int) -> Dict[str, RecidivismDomain]:
    """Both score variants over one loaded dataset and one training run"""
    full = make_domain({**domain, "variant": FULL}, seed)
    domains = {FULL: full}
    for variant in VARIANTS:
        if variant != FULL:
            domains[variant] = make_domain({**domain, "variant": variant}, seed,
                                           recidivism=(full.records, full.models))
    return domains


def run_experiment(spec: ExperimentSpec, domain: Optional[Domain] = None,
                   domains: Optional[Dict[str, RecidivismDomain]] = None) -> Dict[str, ComparisonTable]:
    """Dispatch on the domain kind: recidivism runs one comparison table per score variant"""
    if spec.domain.get("kind") != "recidivism":
        return {spec.name: compare_policies(spec, domain)}
    domains = domains or recidivism_domains(spec.domain, spec.seed)
    tables = {}
    for variant in VARIANTS:
        handle = domains[variant]
        variant_spec = ExperimentSpec.from_dict({**spec.to_dict(), "name": f"{spec.name}_{variant}",
                                                 "domain": {**spec.domain, "variant": variant}})
        tables[variant_spec.name] = compare_policies(variant_spec, handle)
    return tables
