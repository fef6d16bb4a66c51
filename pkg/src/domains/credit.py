"""
Credit questionnaire: ten ordinal answer axes, the additive stand-in score and
the "simple" MDP where any answer may move one level per action.
"""
import json
import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config import settings
from src.config.exceptions import ConfigError, SchemaMismatchError
from src.decision.base import DecisionFunction
from src.decision.features import FeatureSchema, FeatureSpec, FeatureVector
from src.mdp.agency_mdp import ActionId, AgencyMdp, AgencyState, TransitionModel, TransitionOutcome

logger = logging.getLogger(__name__)

QUESTION_AXES = (
    ("open_cards", ("0", "1", "2", "3", "4", "5+")),
    ("oldest_account_age", ("<6m", "6-11m", "1-2y", "2-4y", "4-8y", "8y+")),
    ("newest_card_age", ("<=1m", "2m", "3m", "4m+ or none")),
    ("recent_inquiries", ("0", "1", "2", "3", "4+")),
    ("missed_payment_recency", ("never", "24m+", "12-23m", "6-11m", "<6m")),
    ("utilization", ("<=10%", "<=30%", "<=50%", "<=75%", "<=100%", ">100% or no cards")),
    ("total_debt", ("0", "<=1k", "<=5k", "<=15k", "<=30k", ">30k")),
    ("missed_payments", ("0", "1", "2", "3-4", "5+")),
    ("installment_loans", ("0", "1", "2", "3+")),
    ("derogatory", ("none", "bankruptcy 13m+", "8-12m", "7m", "6m", "5m", "4m", "3m", "2m", "<=1m")),
)

QUESTIONNAIRE_SCHEMA = FeatureSchema(tuple(
    FeatureSpec.ordinal(name, len(labels), labels) for name, labels in QUESTION_AXES
))
AXIS_NAMES = tuple(name for name, _ in QUESTION_AXES)
STOP = "stop"


@dataclass(frozen=True)
class CreditPreset:
    """Monthly household constants and questionnaire penalty tables"""
    name: str
    monthly_income: float
    monthly_interest_rate: float
    minimum_payment_fraction: float
    minimum_payment_floor: float
    new_card_limit: float
    limit_increase: float
    approval_utilization: float
    score_base: int
    score_min: int
    score_max: int
    penalties: Dict[str, tuple]

    @classmethod
    def from_dict(cls, data: Dict) -> "CreditPreset":
        score = data["score"]
        penalties = {axis: tuple(score["penalties"][axis]) for axis in AXIS_NAMES}
        for spec in QUESTIONNAIRE_SCHEMA:
            if len(penalties[spec.name]) != spec.levels:
                raise ConfigError(f"penalty table for {spec.name} needs {spec.levels} entries")
        return cls(
            name=data["name"],
            monthly_income=float(data["monthly_income"]),
            monthly_interest_rate=float(data["monthly_interest_rate"]),
            minimum_payment_fraction=float(data["minimum_payment_fraction"]),
            minimum_payment_floor=float(data["minimum_payment_floor"]),
            new_card_limit=float(data["new_card_limit"]),
            limit_increase=float(data["limit_increase"]),
            approval_utilization=float(data["approval_utilization"]),
            score_base=int(score["base"]),
            score_min=int(score["min"]),
            score_max=int(score["max"]),
            penalties=penalties,
        )

    def describe(self) -> Dict:
        return {
            "name": self.name,
            "monthly_income": self.monthly_income,
            "monthly_interest_rate": self.monthly_interest_rate,
            "minimum_payment_fraction": self.minimum_payment_fraction,
            "minimum_payment_floor": self.minimum_payment_floor,
            "new_card_limit": self.new_card_limit,
            "limit_increase": self.limit_increase,
            "approval_utilization": self.approval_utilization,
        }


def _read_json(path: Path) -> Dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e


@lru_cache(maxsize=8)
def load_credit_preset(name: str = "us_average", path: Optional[Path] = None) -> CreditPreset:
    path = Path(path or settings.PRESETS_DIR / f"credit_{name}.json")
    return CreditPreset.from_dict(_read_json(path))


def load_bucket_table(path: Optional[Path] = None) -> Dict:
    return _read_json(Path(path or settings.PRESETS_DIR / "credit_bucket_table.json"))


def questionnaire(answers: Sequence[int]) -> FeatureVector:
    return FeatureVector.of(QUESTIONNAIRE_SCHEMA, answers)


def synthetic_fico(answers, preset: Optional[CreditPreset] = None) -> int:
    """Additive-penalty stand-in score clamped to [300, 850]

    Args:
        answers: FeatureVector or ten ordinal answers
        preset: penalty tables, us_average by default
    Returns:
        int: score
    """
    preset = preset or load_credit_preset()
    values = answers.values if isinstance(answers, FeatureVector) else answers
    array = QUESTIONNAIRE_SCHEMA.validate(values)
    penalty = sum(preset.penalties[axis][int(level)] for axis, level in zip(AXIS_NAMES, array))
    return int(min(max(preset.score_base - penalty, preset.score_min), preset.score_max))


class SyntheticFicoDecision(DecisionFunction):
    def __init__(self, preset: Optional[CreditPreset] = None):
        super().__init__(QUESTIONNAIRE_SCHEMA, name="synthetic_fico")
        self.preset = preset or load_credit_preset()
        self._tables = [np.asarray(self.preset.penalties[axis], dtype=np.float64) for axis in AXIS_NAMES]

    def evaluate_array(self, values: np.ndarray) -> float:
        penalty = sum(table[int(level)] for table, level in zip(self._tables, values))
        return float(min(max(self.preset.score_base - penalty, self.preset.score_min), self.preset.score_max))

    def describe(self) -> dict:
        return {"name": self.name, "preset": self.preset.name}


class QuestionnaireModel(TransitionModel):
    """Each action moves one answer up or down a level; actions alternate +1, -1 per axis"""

    def __init__(self, schema: FeatureSchema = QUESTIONNAIRE_SCHEMA):
        actions = []
        for i, name in enumerate(schema.names):
            actions.append(ActionId(2 * i, f"{name} +1"))
            actions.append(ActionId(2 * i + 1, f"{name} -1"))
        super().__init__(actions)
        self.schema = schema

    def _move(self, action: ActionId):
        return action.index // 2, (1 if action.index % 2 == 0 else -1)

    def is_legal(self, state: AgencyState, action: ActionId) -> bool:
        axis, delta = self._move(action)
        return 0 <= state.features.values[axis] + delta <= self.schema[axis].high

    def outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        axis, delta = self._move(action)
        values = list(state.features.values)
        values[axis] += delta
        features = FeatureVector.of(self.schema, values)
        return [TransitionOutcome(state.evolve(features=features, resources=state.resources - 1), 1.0)]


class StoppableQuestionnaireModel(QuestionnaireModel):
    """Adds a `stop` action that ends the episode with the current answers"""

    def __init__(self, schema: FeatureSchema = QUESTIONNAIRE_SCHEMA):
        super().__init__(schema)
        self.actions.append(ActionId(len(self.actions), STOP))

    def is_legal(self, state: AgencyState, action: ActionId) -> bool:
        if action.label == STOP:
            return True
        return super().is_legal(state, action)

    def outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        if action.label == STOP:
            return [TransitionOutcome(state.evolve(resources=state.resources - 1, stopped=True), 1.0)]
        return super().outcomes(state, action)


def stopped_or_exhausted(state: AgencyState) -> bool:
    return state.resources == 0 or bool(state.extra("stopped", False))


def questionnaire_state(answers: Sequence[int], resources: int) -> AgencyState:
    return AgencyState(questionnaire(answers), int(resources))


def build_simple_credit_mdp(df: DecisionFunction, initial, resources: int,
                            allow_stop: bool = False) -> AgencyMdp:
    """Simple credit MDP over the ten questionnaire answers

    Args:
        df: decision function over the questionnaire schema (synthetic score or query cache)
        initial: ten answers or a FeatureVector
        resources: number of answer changes allowed
        allow_stop: add an action that ends the episode early
    """
    if df.schema.names != QUESTIONNAIRE_SCHEMA.names:
        raise SchemaMismatchError(f"simple credit needs the questionnaire schema, got {df.schema.names}")
    answers = initial.values if isinstance(initial, FeatureVector) else initial
    model = StoppableQuestionnaireModel() if allow_stop else QuestionnaireModel()
    state = questionnaire_state(answers, resources)
    if allow_stop:
        state = state.evolve(stopped=False)

    def sampler(rng: np.random.Generator) -> AgencyState:
        drawn = [int(rng.integers(spec.levels)) for spec in QUESTIONNAIRE_SCHEMA]
        sampled = questionnaire_state(drawn, resources)
        return sampled.evolve(stopped=False) if allow_stop else sampled

    return AgencyMdp(df, model, terminal=stopped_or_exhausted if allow_stop else None,
                     initial_state=state, initial_sampler=sampler, name="simple_credit")
