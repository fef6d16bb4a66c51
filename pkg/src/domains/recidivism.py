"""
Pretrial risk domain: forest-backed decile risk scores (with and without race
and sex) and an action model over the current charge and prior counts.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.metrics import accuracy_score, roc_auc_score
from sklearn.model_selection import train_test_split

from src.config.exceptions import ConfigError, SchemaMismatchError
from src.decision.base import DecisionFunction
from src.decision.features import FeatureSchema, FeatureSpec, FeatureVector
from src.decision.forest import ForestConfig, TreeEnsemble, train_forest
from src.ingestion.compas_loader import (
    AGE_RANGE, COUNT_CAPS, COUNT_COLUMNS, DEGREE_LEVELS, RACE_CATEGORIES, SEX_CATEGORIES, ArresteeRecord,
)
from src.mdp.agency_mdp import ActionId, AgencyMdp, AgencyState, TransitionModel, TransitionOutcome

logger = logging.getLogger(__name__)

CHARGE_TYPES = ("drug", "violent", "theft", "property", "other")
FULL = "full"
BLIND = "blind"
VARIANTS = (FULL, BLIND)
PROTECTED = ("race", "sex")
IMMUTABLE = ("age", "race", "sex")
STOP = "stop"

FULL_SCHEMA = FeatureSchema((
    FeatureSpec.numeric("age", *AGE_RANGE),
    FeatureSpec.categorical("sex", SEX_CATEGORIES),
    FeatureSpec.categorical("race", RACE_CATEGORIES),
    FeatureSpec.categorical("charge_type", CHARGE_TYPES),
    FeatureSpec.ordinal("charge_degree", len(DEGREE_LEVELS), DEGREE_LEVELS),
    *(FeatureSpec.ordinal(column, COUNT_CAPS[column] + 1) for column in COUNT_COLUMNS),
))


def variant_schema(variant: str) -> FeatureSchema:
    if variant == FULL:
        return FULL_SCHEMA
    if variant == BLIND:
        return FULL_SCHEMA.subset([n for n in FULL_SCHEMA.names if n not in PROTECTED])
    raise ConfigError(f"unknown score variant '{variant}', expected one of {VARIANTS}")


def record_features(record: ArresteeRecord) -> FeatureVector:
    return FeatureVector.of(FULL_SCHEMA, [
        record.age,
        SEX_CATEGORIES.index(record.sex),
        RACE_CATEGORIES.index(record.race),
        CHARGE_TYPES.index(record.charge_type),
        DEGREE_LEVELS.index(record.charge_degree),
        *(getattr(record, column) for column in COUNT_COLUMNS),
    ])


def records_matrix(records: Sequence[ArresteeRecord]) -> np.ndarray:
    return np.array([record_features(r).values for r in records], dtype=np.float64)


def bucket_score(p: float) -> int:
    """Decile risk group: 1 (lowest) to 10 (highest)"""
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    return min(int(math.floor(p * 10)) + 1, 10)


class RiskDecision(DecisionFunction):
    """D = 11 - risk score over full-schema records, so that larger is better.

    The blind variant projects the record onto its own schema before the
    forest sees it; predictions are cached per projected feature tuple.
    """

    def __init__(self, ensemble: TreeEnsemble, variant: str):
        super().__init__(FULL_SCHEMA, name=f"risk_{variant}")
        expected = variant_schema(variant)
        if ensemble.schema.names != expected.names:
            raise SchemaMismatchError(f"{variant} ensemble needs features {expected.names}, got {ensemble.schema.names}")
        self.ensemble = ensemble
        self.variant = variant
        self._columns = np.array([FULL_SCHEMA.index(n) for n in expected.names])
        self._cache: Dict[tuple, int] = {}

    def risk_score(self, values) -> int:
        projected = np.asarray(values, dtype=np.float64)[self._columns]
        key = tuple(projected.tolist())
        score = self._cache.get(key)
        if score is None:
            score = bucket_score(self.ensemble.predict_one(projected))
            self._cache[key] = score
        return score

    def evaluate_array(self, values: np.ndarray) -> float:
        return float(11 - self.risk_score(values))

    def describe(self) -> dict:
        return {"name": self.name, "variant": self.variant, "trees": len(self.ensemble.trees),
                "forest": self.ensemble.config}


def risk_from_decision(decision: float) -> float:
    return 11.0 - decision


@dataclass
class RiskModels:
    full: TreeEnsemble
    blind: TreeEnsemble
    metrics: Dict[str, Dict[str, float]]

    def ensemble(self, variant: str) -> TreeEnsemble:
        return self.full if variant == FULL else self.blind

    def decision(self, variant: str) -> RiskDecision:
        return RiskDecision(self.ensemble(variant), variant)


def held_out_metrics(ensemble: TreeEnsemble, X: np.ndarray, y: np.ndarray) -> Dict[str, float]:
    proba = ensemble.predict_proba(X)
    metrics = {"accuracy": float(accuracy_score(y, (proba >= 0.5).astype(int))), "n_test": int(len(y))}
    metrics["auc"] = float(roc_auc_score(y, proba)) if len(np.unique(y)) == 2 else float("nan")
    return metrics


def train_risk_models(records: Sequence[ArresteeRecord], config: Optional[ForestConfig] = None,
                      test_fraction: float = 0.25) -> RiskModels:
    """Train the full and blind forests on one seeded train/test split"""
    config = config or ForestConfig()
    if len(records) < 4:
        raise ConfigError(f"need at least 4 records to train, got {len(records)}")
    X = records_matrix(records)
    y = np.array([r.label for r in records], dtype=np.int64)
    stratify = y if len(np.unique(y)) == 2 and min(np.bincount(y)) >= 2 else None
    X_train, X_test, y_train, y_test = train_test_split(
        X, y, test_size=test_fraction, random_state=config.seed % (2 ** 32), stratify=stratify,
    )
    ensembles = {}
    metrics = {}
    for variant in VARIANTS:
        schema = variant_schema(variant)
        columns = [FULL_SCHEMA.index(n) for n in schema.names]
        ensembles[variant] = train_forest(X_train[:, columns], y_train, schema, config)
        metrics[variant] = held_out_metrics(ensembles[variant], X_test[:, columns], y_test)
        metrics[variant]["n_train"] = int(len(y_train))
        logger.info(f"{variant} risk model: held-out AUC {metrics[variant]['auc']:.4f}, "
                    f"accuracy {metrics[variant]['accuracy']:.4f}")
    return RiskModels(ensembles[FULL], ensembles[BLIND], metrics)


class RecidivismModel(TransitionModel):
    """Charge-type swaps, degree +/-1 and prior-count +/-1; each action costs one resource"""

    def __init__(self, allow_stop: bool = False):
        labels = [f"charge_type := {c}" for c in CHARGE_TYPES]
        labels += ["charge_degree +1", "charge_degree -1"]
        for column in COUNT_COLUMNS:
            labels += [f"{column} +1", f"{column} -1"]
        if allow_stop:
            labels.append(STOP)
        super().__init__([ActionId(i, label) for i, label in enumerate(labels)])
        self._effects = {}
        for action in self.actions:
            if action.label == STOP:
                self._effects[action.index] = (None, None)
            elif action.label.startswith("charge_type := "):
                self._effects[action.index] = ("charge_type", CHARGE_TYPES.index(action.label.split(":= ")[1]))
            else:
                column, delta = action.label.split(" ")
                self._effects[action.index] = (column, int(delta))

    def is_legal(self, state: AgencyState, action: ActionId) -> bool:
        column, change = self._effects[action.index]
        if column is None:
            return True
        current = state.features.get(column)
        if column == "charge_type":
            return current != change
        spec = FULL_SCHEMA[FULL_SCHEMA.index(column)]
        return spec.low <= current + change <= spec.high

    def outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        column, change = self._effects[action.index]
        if column is None:
            return [TransitionOutcome(state.evolve(resources=state.resources - 1, stopped=True), 1.0)]
        value = change if column == "charge_type" else state.features.get(column) + change
        features = state.features.replace(**{column: value})
        return [TransitionOutcome(state.evolve(features=features, resources=state.resources - 1), 1.0)]


def _stopped_or_exhausted(state: AgencyState) -> bool:
    return state.resources == 0 or bool(state.extra("stopped", False))


def record_state(record: ArresteeRecord, resources: int, allow_stop: bool = False) -> AgencyState:
    state = AgencyState(record_features(record), int(resources))
    return state.evolve(stopped=False) if allow_stop else state


def build_recidivism_mdp(ensemble: TreeEnsemble, variant: str, initial: ArresteeRecord, resources: int,
                         allow_stop: bool = False, decision: Optional[RiskDecision] = None) -> AgencyMdp:
    """Agency MDP for one arrestee

    Args:
        ensemble: forest trained on the variant's schema
        variant: "full" or "blind"
        initial: starting record; race, sex and age never change
        resources: number of charge/history changes
        allow_stop: add an action that ends the episode early
        decision: reuse a RiskDecision (and its prediction cache)
    """
    df = decision or RiskDecision(ensemble, variant)
    return AgencyMdp(
        df, RecidivismModel(allow_stop),
        terminal=_stopped_or_exhausted if allow_stop else None,
        initial_state=record_state(initial, resources, allow_stop),
        name=f"recidivism_{variant}",
    )
