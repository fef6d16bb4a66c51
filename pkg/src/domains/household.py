"""
Realistic monthly credit model.

A household holds cash, card debt and a list of cards. Each month, in order:
income is credited, the chosen action's payment and structural effect apply,
interest accrues on the remaining debt, then the month clock advances. The
credit report sees the household through project_realistic_state.
"""
import json
import logging
from bisect import bisect_left, bisect_right
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.config import settings
from src.config.exceptions import ConfigError, IllegalActionError
from src.decision.base import DecisionFunction
from src.decision.features import FeatureVector
from src.domains.credit import (
    AXIS_NAMES, QUESTIONNAIRE_SCHEMA, CreditPreset, load_bucket_table, load_credit_preset,
)
from src.mdp.agency_mdp import ActionId, AgencyMdp, AgencyState, TransitionModel, TransitionOutcome

logger = logging.getLogger(__name__)

MISS = "miss payment"
PAY_MINIMUM = "pay minimum"
PAY_FULL = "pay full"
PAY_EXTRA = "pay full + extra"
OPEN_MINIMUM = "open card + pay minimum"
OPEN_FULL = "open card + pay full"
CLOSE_MINIMUM = "close newest card + pay minimum"
CLOSE_FULL = "close newest card + pay full"
LIMIT_MINIMUM = "request limit increase + pay minimum"
LIMIT_FULL = "request limit increase + pay full"
BANKRUPTCY = "declare bankruptcy"

MONTHLY_ACTIONS = (
    MISS, PAY_MINIMUM, PAY_FULL, PAY_EXTRA, OPEN_MINIMUM, OPEN_FULL,
    CLOSE_MINIMUM, CLOSE_FULL, LIMIT_MINIMUM, LIMIT_FULL, BANKRUPTCY,
)

# structural effect, payment rule
_ACTION_PARTS = {
    MISS: (None, "none"),
    PAY_MINIMUM: (None, "minimum"),
    PAY_FULL: (None, "full"),
    PAY_EXTRA: (None, "extra"),
    OPEN_MINIMUM: ("open", "minimum"),
    OPEN_FULL: ("open", "full"),
    CLOSE_MINIMUM: ("close", "minimum"),
    CLOSE_FULL: ("close", "full"),
    LIMIT_MINIMUM: ("limit", "minimum"),
    LIMIT_FULL: ("limit", "full"),
    BANKRUPTCY: ("bankruptcy", "none"),
}


def _cents(amount: float) -> float:
    return round(amount + 0.0, 2)


@dataclass(frozen=True)
class HouseholdState:
    cash_on_hand: float
    monthly_income: float
    card_debt: float
    cards: Tuple[Tuple[int, float], ...]
    month: int = 0
    months_remaining: int = 0
    history_start_month: int = 0
    missed_months: Tuple[int, ...] = ()
    inquiry_months: Tuple[int, ...] = ()
    bankruptcy_month: Optional[int] = None
    installment_loans: int = 0

    def __post_init__(self):
        if self.card_debt < 0:
            raise ConfigError(f"card debt must be nonnegative, got {self.card_debt}")
        if self.cash_on_hand < 0:
            raise ConfigError(f"cash on hand must be nonnegative, got {self.cash_on_hand}")
        if list(self.cards) != sorted(self.cards, key=lambda card: card[0]):
            raise ConfigError("cards must be ordered by open month")

    @property
    def bankruptcy(self) -> bool:
        return self.bankruptcy_month is not None

    @property
    def total_limit(self) -> float:
        return float(sum(limit for _, limit in self.cards))

    @property
    def utilization(self) -> float:
        """Debt over total limit; zero debt counts as 0 and debt without cards as infinite"""
        if self.card_debt == 0:
            return 0.0
        if self.total_limit == 0:
            return float("inf")
        return self.card_debt / self.total_limit

    @property
    def months_since_missed_payment(self) -> Optional[int]:
        if not self.missed_months:
            return None
        return self.month - 1 - max(self.missed_months)

    @property
    def reported_missed_months(self) -> Tuple[int, ...]:
        """Misses become visible one month after they happen"""
        return tuple(m for m in self.missed_months if self.month - 1 - m >= 1)

    @property
    def hard_inquiries_recent(self) -> int:
        return len(self.inquiry_months)

    def inquiry_ages(self) -> List[int]:
        return [self.month - m for m in self.inquiry_months]

    def to_extras(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_extras(cls, extras: Dict) -> "HouseholdState":
        fields = {k: extras[k] for k in cls.__dataclass_fields__}
        return cls(**fields)

    @classmethod
    def from_dict(cls, data: Dict, months: Optional[int] = None) -> "HouseholdState":
        try:
            return cls(
                cash_on_hand=float(data["cash_on_hand"]),
                monthly_income=float(data["monthly_income"]),
                card_debt=float(data["card_debt"]),
                cards=tuple((int(m), float(limit)) for m, limit in data.get("cards", [])),
                month=int(data.get("month", 0)),
                months_remaining=int(months if months is not None else data.get("months_remaining", 0)),
                history_start_month=int(data.get("history_start_month", data.get("month", 0))),
                missed_months=tuple(int(m) for m in data.get("missed_months", [])),
                inquiry_months=tuple(int(m) for m in data.get("inquiry_months", [])),
                bankruptcy_month=None if data.get("bankruptcy_month") is None else int(data["bankruptcy_month"]),
                installment_loans=int(data.get("installment_loans", 0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid household state: {e}") from e


def minimum_due(state: HouseholdState, preset: CreditPreset) -> float:
    if state.card_debt <= 0:
        return 0.0
    due = max(preset.minimum_payment_floor, preset.minimum_payment_fraction * state.card_debt)
    return _cents(min(state.card_debt, due))


def _approved(state: HouseholdState, preset: CreditPreset) -> bool:
    return state.utilization <= preset.approval_utilization


def is_legal_month(state: HouseholdState, label: str, preset: CreditPreset) -> bool:
    """Legality is judged after this month's income is credited"""
    if state.months_remaining <= 0 or label not in _ACTION_PARTS:
        return False
    structural, payment = _ACTION_PARTS[label]
    cash = state.cash_on_hand + state.monthly_income
    debt = state.card_debt
    if structural == "bankruptcy":
        return not state.bankruptcy and debt > 0
    if payment == "none":
        return debt > 0
    if payment == "minimum" and cash < minimum_due(state, preset):
        return False
    if payment == "full" and not (debt > 0 and cash >= debt):
        return False
    if payment == "extra" and not (debt > 0 and cash >= minimum_due(state, preset)):
        return False
    if structural == "open":
        return _approved(state, preset)
    if structural == "close":
        return len(state.cards) > 0
    if structural == "limit":
        return len(state.cards) > 0 and _approved(state, preset)
    return True


def apply_month(state: HouseholdState, label: str, preset: Optional[CreditPreset] = None) -> HouseholdState:
    """Advance one month under the given action

    Args:
        state: household before the month
        label: one of MONTHLY_ACTIONS
        preset: monthly constants, us_average by default
    Returns:
        HouseholdState: household after interest and clock advance
    """
    preset = preset or load_credit_preset()
    if not is_legal_month(state, label, preset):
        raise IllegalActionError(label, state)
    structural, payment_rule = _ACTION_PARTS[label]
    cash = _cents(state.cash_on_hand + state.monthly_income)
    debt = state.card_debt
    cards = list(state.cards)
    inquiries = list(state.inquiry_months)
    missed = list(state.missed_months)
    bankruptcy_month = state.bankruptcy_month

    if structural == "open":
        cards.append((state.month, preset.new_card_limit))
        inquiries.append(state.month)
    elif structural == "close":
        cards.pop()
    elif structural == "limit":
        opened, limit = cards[-1]
        cards[-1] = (opened, limit + preset.limit_increase)
        inquiries.append(state.month)
    elif structural == "bankruptcy":
        debt = 0.0
        cards = []
        bankruptcy_month = state.month

    if payment_rule == "minimum":
        paid = minimum_due(state, preset)
    elif payment_rule == "full":
        paid = debt
    elif payment_rule == "extra":
        paid = min(debt, cash)
    else:
        paid = 0.0
        if structural is None:
            missed.append(state.month)

    cash = _cents(cash - paid)
    debt = _cents(debt - paid)
    debt = _cents(debt + _cents(debt * preset.monthly_interest_rate))

    return replace(
        state,
        cash_on_hand=cash,
        card_debt=debt,
        cards=tuple(cards),
        month=state.month + 1,
        months_remaining=state.months_remaining - 1,
        missed_months=tuple(missed),
        inquiry_months=tuple(inquiries),
        bankruptcy_month=bankruptcy_month,
    )


def project_realistic_state(state: HouseholdState, table: Optional[Dict] = None) -> FeatureVector:
    """Bucket the household's report-visible quantities into the ten questionnaire answers"""
    table = table or _default_table()
    month = state.month

    open_cards = min(len(state.cards), table["open_cards"]["cap"])

    history_age = month - state.history_start_month
    oldest = bisect_right(table["oldest_account_age"]["lower_bounds_months"], history_age)

    newest_bounds = table["newest_card_age"]["lower_bounds_months"]
    if state.cards:
        newest = bisect_right(newest_bounds, month - state.cards[-1][0])
    else:
        newest = len(newest_bounds)

    low, high = table["recent_inquiries"]["window_months"]
    counted = sum(1 for age in state.inquiry_ages() if low <= age <= high)
    inquiries = min(counted, table["recent_inquiries"]["cap"])

    reported = state.reported_missed_months
    recency_bounds = table["missed_payment_recency"]["lower_bounds_months"]
    if reported:
        since = month - 1 - max(reported)
        recency = len(recency_bounds) + 1 - bisect_right(recency_bounds, since)
    else:
        recency = 0

    utilization_bounds = table["utilization"]["upper_bounds"]
    if not state.cards:
        utilization = len(utilization_bounds)
    else:
        utilization = bisect_left(utilization_bounds, state.utilization)

    debt = bisect_left(table["total_debt"]["upper_bounds"], state.card_debt)
    missed = bisect_left(table["missed_payments"]["upper_bounds"], len(reported))
    installment = min(state.installment_loans, table["installment_loans"]["cap"])

    derogatory_bounds = table["derogatory"]["lower_bounds_months"]
    if state.bankruptcy:
        derogatory = len(derogatory_bounds) + 1 - bisect_right(derogatory_bounds, month - state.bankruptcy_month)
    else:
        derogatory = 0

    answers = [open_cards, oldest, newest, inquiries, recency, utilization, debt, missed, installment, derogatory]
    return FeatureVector.of(QUESTIONNAIRE_SCHEMA, answers)


_TABLE_CACHE: Dict[str, Dict] = {}


def _default_table() -> Dict:
    if "default" not in _TABLE_CACHE:
        _TABLE_CACHE["default"] = load_bucket_table()
    return _TABLE_CACHE["default"]


class RealisticCreditModel(TransitionModel):
    """The household lives in the state extras; resources count the months left"""

    def __init__(self, preset: CreditPreset, table: Optional[Dict] = None):
        super().__init__([ActionId(i, label) for i, label in enumerate(MONTHLY_ACTIONS)])
        self.preset = preset
        self.table = table or _default_table()

    def household(self, state: AgencyState) -> HouseholdState:
        return HouseholdState.from_extras(state.extras_dict)

    def is_legal(self, state: AgencyState, action: ActionId) -> bool:
        return is_legal_month(self.household(state), action.label, self.preset)

    def outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        after = apply_month(self.household(state), action.label, self.preset)
        return [TransitionOutcome(household_agency_state(after, self.table), 1.0)]


def household_agency_state(household: HouseholdState, table: Optional[Dict] = None) -> AgencyState:
    return AgencyState.create(project_realistic_state(household, table), household.months_remaining,
                              **household.to_extras())


def build_realistic_credit_mdp(df: DecisionFunction, initial: HouseholdState, months: int,
                               preset: Optional[CreditPreset] = None, table: Optional[Dict] = None) -> AgencyMdp:
    """Monthly credit MDP; D sees only the projected questionnaire answers

    Args:
        df: decision function over the questionnaire schema
        initial: household at the start of the first month
        months: number of monthly actions before the report is scored
    """
    if months < 1:
        raise ConfigError(f"months must be at least 1, got {months}")
    if df.schema.names != list(AXIS_NAMES):
        raise ConfigError("realistic credit needs a decision function over the questionnaire schema")
    preset = preset or load_credit_preset()
    model = RealisticCreditModel(preset, table)
    start = household_agency_state(replace(initial, months_remaining=months), model.table)
    return AgencyMdp(df, model, initial_state=start, name="realistic_credit")


@dataclass
class Scenario:
    name: str
    preset: CreditPreset
    household: HouseholdState
    months: int


def load_scenario(name_or_path, months: Optional[int] = None) -> Scenario:
    path = Path(name_or_path)
    if not path.suffix:
        path = settings.SCENARIOS_DIR / f"{name_or_path}.json"
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read scenario {path}: {e}") from e
    horizon = int(months if months is not None else data.get("months", 1))
    preset = load_credit_preset(data.get("preset", "us_average"))
    household = HouseholdState.from_dict(data["household"], months=horizon)
    return Scenario(data.get("name", path.stem), preset, household, horizon)


def reachable_households(start: HouseholdState, months: int, preset: CreditPreset,
                         limit: int = 200000) -> List[HouseholdState]:
    """Breadth-first enumeration of households reachable within `months` actions"""
    frontier = [replace(start, months_remaining=max(start.months_remaining, months))]
    seen = {frontier[0]}
    for _ in range(months):
        nxt = []
        for state in frontier:
            for label in MONTHLY_ACTIONS:
                if is_legal_month(state, label, preset):
                    after = apply_month(state, label, preset)
                    if after not in seen:
                        seen.add(after)
                        nxt.append(after)
                        if len(seen) >= limit:
                            logger.warning(f"Reachable-state enumeration stopped at {limit} households")
                            return list(seen)
        frontier = nxt
    return list(seen)


def random_household(rng: np.random.Generator, months: int) -> HouseholdState:
    n_cards = int(rng.integers(0, 4))
    cards = tuple(sorted((int(rng.integers(-120, 0)), float(rng.choice([2000.0, 5000.0, 12000.0])))
                         for _ in range(n_cards)))
    debt = float(rng.choice([0.0, 500.0, 3000.0, 10000.0])) if cards else 0.0
    return HouseholdState(
        cash_on_hand=float(rng.choice([0.0, 500.0, 2000.0])),
        monthly_income=400.0,
        card_debt=debt,
        cards=cards,
        month=0,
        months_remaining=months,
        history_start_month=int(rng.integers(-150, -1)),
        installment_loans=int(rng.integers(0, 3)),
    )
