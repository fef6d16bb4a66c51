"""
Domain handles used by the experiment harness and the CLI.

A handle turns (start, resources) into an AgencyMdp with its start state and
samples the seeded set of start points an experiment rolls out from.
"""
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.config import settings
from src.config.exceptions import ConfigError
from src.decision.base import DecisionFunction
from src.decision.forest import ForestConfig, TreeEnsemble
from src.decision.query_cache import load_query_cache
from src.decision.synthetic import load_presets, make_preset
from src.domains.credit import QUESTIONNAIRE_SCHEMA, SyntheticFicoDecision, build_simple_credit_mdp, load_credit_preset
from src.domains.household import HouseholdState, build_realistic_credit_mdp, load_scenario, random_household
from src.domains.lattice import build_lattice_mdp
from src.domains.recidivism import (
    BLIND, FULL, VARIANTS, RiskModels, build_recidivism_mdp, record_features, risk_from_decision,
    train_risk_models,
)
from src.ingestion.compas_loader import ArresteeRecord, load_compas
from src.mdp.agency_mdp import AgencyMdp, AgencyState

logger = logging.getLogger(__name__)

MAXIMIZE = "maximize"
MINIMIZE = "minimize"
DOMAIN_KINDS = ("synthetic", "simple_credit", "realistic_credit", "recidivism")


class Domain(ABC):
    kind: str = "domain"
    objective: str = MAXIMIZE

    @abstractmethod
    def mdp_for(self, start: Any, resources: int) -> Tuple[AgencyMdp, AgencyState]:
        pass

    @abstractmethod
    def sample_starts(self, n: int, rng: np.random.Generator) -> List[Any]:
        pass

    @abstractmethod
    def start_from(self, data: Dict) -> Any:
        """Parse a start point from an advice state file"""

    def report_value(self, decision: float) -> float:
        """Convert a decision into the reported quantity"""
        return decision

    def describe(self) -> Dict:
        return {"kind": self.kind, "objective": self.objective}


class SyntheticDomain(Domain):
    kind = "synthetic"

    def __init__(self, preset: str, sample: str = "fixed"):
        presets = load_presets()
        if preset not in presets:
            raise ConfigError(f"unknown synthetic preset '{preset}', expected one of {sorted(presets)}")
        self.preset = preset
        self.df = make_preset(preset, presets)
        self.domain = presets[preset]["domain"]
        self.sample = sample

    def mdp_for(self, start, resources):
        mdp = build_lattice_mdp(self.df, self.domain, resources, start)
        return mdp, mdp.initial_state

    def sample_starts(self, n, rng):
        if self.sample == "fixed":
            return [list(self.domain["start"])] * n
        mdp = build_lattice_mdp(self.df, self.domain, 1)
        return [list(mdp.sample_initial(rng).features.values) for _ in range(n)]

    def start_from(self, data):
        return list(data.get("position", self.domain["start"]))

    def describe(self):
        return {"kind": self.kind, "preset": self.preset, "sample": self.sample, "function": self.df.describe()}


class SimpleCreditDomain(Domain):
    kind = "simple_credit"

    def __init__(self, decision: str = "synthetic_fico", cache_path: Optional[str] = None,
                 preset: str = "us_average", allow_stop: bool = False):
        if decision == "synthetic_fico":
            self.df: DecisionFunction = SyntheticFicoDecision(load_credit_preset(preset))
        elif decision == "query_cache":
            if not cache_path:
                raise ConfigError("query_cache decision needs 'cache_path'")
            self.df = load_query_cache(cache_path, QUESTIONNAIRE_SCHEMA)
        else:
            raise ConfigError(f"unknown simple-credit decision '{decision}'")
        self.allow_stop = allow_stop

    def mdp_for(self, start, resources):
        mdp = build_simple_credit_mdp(self.df, start, resources, self.allow_stop)
        return mdp, mdp.initial_state

    def sample_starts(self, n, rng):
        mdp = build_simple_credit_mdp(self.df, [0] * len(QUESTIONNAIRE_SCHEMA), 1)
        return [list(mdp.sample_initial(rng).features.values) for _ in range(n)]

    def start_from(self, data):
        if "answers" not in data:
            raise ConfigError("simple-credit state needs 'answers'")
        return [int(a) for a in data["answers"]]

    def describe(self):
        return {"kind": self.kind, "decision": self.df.describe(), "allow_stop": self.allow_stop}


class RealisticCreditDomain(Domain):
    """Resources are months; a start is a HouseholdState"""

    kind = "realistic_credit"

    def __init__(self, scenario: Optional[str] = None, preset: str = "us_average"):
        self.scenario = load_scenario(scenario) if scenario else None
        self.preset = self.scenario.preset if self.scenario else load_credit_preset(preset)
        self.df = SyntheticFicoDecision(self.preset)

    def mdp_for(self, start: HouseholdState, resources):
        mdp = build_realistic_credit_mdp(self.df, start, resources, self.preset)
        return mdp, mdp.initial_state

    def sample_starts(self, n, rng):
        if self.scenario is not None:
            return [self.scenario.household] * n
        return [random_household(rng, 1) for _ in range(n)]

    def start_from(self, data):
        if "household" in data:
            return HouseholdState.from_dict(data["household"])
        if "scenario" in data:
            return load_scenario(data["scenario"]).household
        if self.scenario is None:
            raise ConfigError("realistic-credit state needs 'household' or 'scenario'")
        return self.scenario.household

    def describe(self):
        return {"kind": self.kind, "scenario": self.scenario.name if self.scenario else None,
                "preset": self.preset.describe()}


class RecidivismDomain(Domain):
    """Risk is reported as 11 - decision, lower is better"""

    kind = "recidivism"
    objective = MINIMIZE

    def __init__(self, records: List[ArresteeRecord], models: RiskModels, variant: str,
                 min_initial_score: int = 5, allow_stop: bool = False):
        if variant not in VARIANTS:
            raise ConfigError(f"unknown score variant '{variant}'")
        self.records = records
        self.models = models
        self.variant = variant
        self.decision = models.decision(variant)
        self.min_initial_score = min_initial_score
        self.allow_stop = allow_stop

    def risk_of(self, record: ArresteeRecord) -> int:
        return self.decision.risk_score(record_features(record).values)

    def cohort(self) -> List[ArresteeRecord]:
        return [r for r in self.records if self.risk_of(r) >= self.min_initial_score]

    def mdp_for(self, start: ArresteeRecord, resources):
        mdp = build_recidivism_mdp(self.models.ensemble(self.variant), self.variant, start, resources,
                                   self.allow_stop, decision=self.decision)
        return mdp, mdp.initial_state

    def sample_starts(self, n, rng):
        cohort = self.cohort()
        if not cohort:
            raise ConfigError(f"no records with initial score >= {self.min_initial_score}")
        if n > len(cohort):
            logger.warning(f"{self.variant}: asked for {n} starts, cohort has {len(cohort)}")
        picks = rng.choice(len(cohort), size=min(n, len(cohort)), replace=False)
        return [cohort[int(i)] for i in np.sort(picks)]

    def start_from(self, data):
        if "record" not in data:
            raise ConfigError("recidivism state needs 'record'")
        record = dict(data["record"])
        record.setdefault("label", 0)
        try:
            return ArresteeRecord(**record)
        except TypeError as e:
            raise ConfigError(f"invalid arrestee record: {e}") from e

    def report_value(self, decision):
        return risk_from_decision(decision)

    def describe(self):
        return {"kind": self.kind, "variant": self.variant, "min_initial_score": self.min_initial_score,
                "metrics": self.models.metrics.get(self.variant, {}),
                "forest": self.models.ensemble(self.variant).config}


def model_paths(models_dir) -> Dict[str, Path]:
    return {variant: Path(models_dir) / f"risk_{variant}.json" for variant in VARIANTS}


def load_recidivism_models(data_path: str, forest: Optional[Dict] = None, seed: int = settings.DEFAULT_SEED,
                           models_dir: Optional[str] = None) -> Tuple[List[ArresteeRecord], RiskModels]:
    """Load records and either train both forests or read them from models_dir"""
    dataset = load_compas(data_path)
    if models_dir:
        paths = model_paths(models_dir)
        models = RiskModels(TreeEnsemble.load(paths[FULL]), TreeEnsemble.load(paths[BLIND]), {})
        logger.info(f"Loaded risk models from {models_dir}")
        return dataset.records, models
    config = ForestConfig.from_dict({"seed": seed, **(forest or {})})
    return dataset.records, train_risk_models(dataset.records, config)


def make_domain(config: Dict, seed: int = settings.DEFAULT_SEED,
                recidivism: Optional[Tuple[List[ArresteeRecord], RiskModels]] = None) -> Domain:
    """Build a domain handle from its config block

    Args:
        config: {"kind": ..., kind-specific keys}
        seed: master seed (forest training)
        recidivism: already trained (records, models) to share between variants
    """
    kind = config.get("kind")
    if kind == "synthetic":
        return SyntheticDomain(config["preset"], config.get("sample", "fixed"))
    if kind == "simple_credit":
        return SimpleCreditDomain(config.get("decision", "synthetic_fico"), config.get("cache_path"),
                                  config.get("preset", "us_average"), bool(config.get("allow_stop", False)))
    if kind == "realistic_credit":
        return RealisticCreditDomain(config.get("scenario"), config.get("preset", "us_average"))
    if kind == "recidivism":
        records, models = recidivism or load_recidivism_models(
            config["data_path"], config.get("forest"), seed, config.get("models_dir"))
        return RecidivismDomain(records, models, config.get("variant", FULL),
                                int(config.get("min_initial_score", 5)), bool(config.get("allow_stop", False)))
    raise ConfigError(f"unknown domain kind '{kind}', expected one of {DOMAIN_KINDS}")
