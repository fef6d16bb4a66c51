import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from src.config import settings
from src.config.exceptions import ConfigError, DataLoadError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = (
    "age", "sex", "race", "juv_fel_count", "juv_misd_count", "juv_other_count",
    "priors_count", "c_charge_degree", "c_charge_desc", "two_year_recid",
)

SEX_CATEGORIES = ("Male", "Female")
RACE_CATEGORIES = ("African-American", "Caucasian", "Hispanic", "Asian", "Native American", "Other")
DEGREE_LEVELS = ("M2", "M1", "F3", "F2", "F1")
COUNT_COLUMNS = ("juv_fel_count", "juv_misd_count", "juv_other_count", "priors_count")
COUNT_CAPS = {"juv_fel_count": 20, "juv_misd_count": 20, "juv_other_count": 20, "priors_count": 40}
AGE_RANGE = (18, 96)


@dataclass(frozen=True)
class ArresteeRecord:
    age: int
    sex: str
    race: str
    charge_type: str
    charge_degree: str
    juv_fel_count: int
    juv_misd_count: int
    juv_other_count: int
    priors_count: int
    label: int

    def __post_init__(self):
        if self.age <= 0:
            raise DataLoadError(f"age must be positive, got {self.age}")
        if self.charge_degree not in DEGREE_LEVELS:
            raise DataLoadError(f"unknown charge degree {self.charge_degree}")
        if min(self.juv_fel_count, self.juv_misd_count, self.juv_other_count, self.priors_count) < 0:
            raise DataLoadError("interaction counts must be nonnegative")

    @property
    def group(self) -> str:
        return f"{self.race} {self.sex}"


@dataclass
class CompasDataset:
    records: List[ArresteeRecord]
    dropped: int = 0
    clamped: int = 0
    drop_reasons: Dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)


class ChargeDictionary:
    """Maps free-text charge descriptions onto coarse categories.
    Rules are substrings matched case-insensitively; the first match wins.
    """

    def __init__(self, categories: List[str], rules: List[Tuple[str, str]]):
        self.categories = list(categories)
        self.rules = [(pattern.lower(), category) for pattern, category in rules]
        unknown = {c for _, c in self.rules} - set(self.categories)
        if unknown or "other" not in self.categories:
            raise ConfigError(f"charge dictionary has unknown categories {sorted(unknown)} or lacks 'other'")

    @classmethod
    def load(cls, path: Optional[Path] = None) -> "ChargeDictionary":
        path = Path(path or settings.DICTIONARIES_DIR / "charge_types.json")
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read charge dictionary {path}: {e}") from e
        return cls(data["categories"], [tuple(rule) for rule in data["rules"]])

    def categorize(self, description: str) -> str:
        text = str(description).lower()
        for pattern, category in self.rules:
            if pattern in text:
                return category
        return "other"


def parse_degree(code: str) -> Optional[str]:
    """Normalize a charge-degree code onto M2 < M1 < F3 < F2 < F1, None if unusable"""
    text = re.sub(r"[()\s]", "", str(code)).upper()
    if text in DEGREE_LEVELS:
        return text
    if text == "F":
        return "F3"
    if text == "M":
        return "M1"
    if text.startswith("MO") or text.startswith("CO"):
        return "M2"
    return None


class CompasLoader:
    """
    Loads COMPAS-format CSV files into arrestee records.
    Rows with missing or unusable required fields are dropped and counted.
    """

    def __init__(self, dictionary: Optional[ChargeDictionary] = None, label_column: str = "two_year_recid"):
        """
        Args:
            dictionary: charge-description dictionary, the shipped one by default
            label_column: column holding the binary recidivism label
        """
        self.dictionary = dictionary or ChargeDictionary.load()
        self.label_column = label_column

    def required_columns(self) -> List[str]:
        columns = [c for c in REQUIRED_COLUMNS if c != "two_year_recid"]
        return columns + [self.label_column]

    def load(self, path) -> CompasDataset:
        path = Path(path)
        try:
            df = pd.read_csv(path, dtype=str, keep_default_na=False)
        except FileNotFoundError as e:
            raise DataLoadError(f"COMPAS file not found: {path}") from e
        except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
            raise DataLoadError(f"cannot parse COMPAS file {path}: {e}") from e
        return self.load_frame(df)

    def load_frame(self, df: pd.DataFrame) -> CompasDataset:
        for column in self.required_columns():
            if column not in df.columns:
                raise DataLoadError(f"missing required column '{column}'", column=column)

        dataset = CompasDataset(records=[])
        for _, row in df.iterrows():
            record, reason, clamped = self._parse_row(row)
            if record is None:
                dataset.dropped += 1
                dataset.drop_reasons[reason] = dataset.drop_reasons.get(reason, 0) + 1
                continue
            dataset.clamped += clamped
            dataset.records.append(record)

        logger.info(f"Loaded {len(dataset.records)} COMPAS records, dropped {dataset.dropped}, "
                    f"clamped {dataset.clamped} counts")
        if dataset.drop_reasons:
            logger.debug(f"Drop reasons: {dataset.drop_reasons}")
        return dataset

    def _parse_row(self, row) -> Tuple[Optional[ArresteeRecord], str, int]:
        for column in self.required_columns():
            if str(row[column]).strip() == "":
                return None, f"missing {column}", 0

        degree = parse_degree(row["c_charge_degree"])
        if degree is None:
            return None, "unknown charge degree", 0
        try:
            age = int(float(row["age"]))
            counts = {c: int(float(row[c])) for c in COUNT_COLUMNS}
            label = int(float(row[self.label_column]))
        except ValueError:
            return None, "non-numeric field", 0
        if not AGE_RANGE[0] <= age <= AGE_RANGE[1]:
            return None, "age out of range", 0
        if label not in (0, 1) or any(v < 0 for v in counts.values()):
            return None, "invalid label or count", 0

        clamped = 0
        for column, cap in COUNT_CAPS.items():
            if counts[column] > cap:
                counts[column] = cap
                clamped += 1

        sex = str(row["sex"]).strip()
        if sex not in SEX_CATEGORIES:
            return None, "unknown sex", 0
        race = str(row["race"]).strip()
        if race not in RACE_CATEGORIES:
            race = "Other"

        record = ArresteeRecord(
            age=age,
            sex=sex,
            race=race,
            charge_type=self.dictionary.categorize(row["c_charge_desc"]),
            charge_degree=degree,
            label=label,
            **counts,
        )
        return record, "", clamped


def load_compas(path, dictionary_path: Optional[Path] = None, label_column: str = "two_year_recid") -> CompasDataset:
    dictionary = ChargeDictionary.load(dictionary_path)
    return CompasLoader(dictionary, label_column).load(path)
