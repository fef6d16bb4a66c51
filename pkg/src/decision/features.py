"""
Feature schemas and feature vectors shared by decision functions and domains
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.config.exceptions import SchemaMismatchError

NUMERIC = "numeric"
ORDINAL = "ordinal"
CATEGORICAL = "categorical"
KINDS = (NUMERIC, ORDINAL, CATEGORICAL)


@dataclass(frozen=True)
class FeatureSpec:
    """One column of a schema.

    Ordinal and categorical features hold integers in [0, levels - 1]; numeric
    features hold reals in [low, high].
    """
    name: str
    kind: str
    low: float = 0.0
    high: float = 1.0
    weight: float = 1.0
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatchError(f"unknown feature kind '{self.kind}' for {self.name}")
        if self.high < self.low:
            raise SchemaMismatchError(f"feature {self.name} has high < low")

    @classmethod
    def numeric(cls, name: str, low: float, high: float, weight: float = 1.0) -> "FeatureSpec":
        return cls(name, NUMERIC, float(low), float(high), weight)

    @classmethod
    def ordinal(cls, name: str, levels: int, labels: Sequence[str] = (), weight: float = 1.0) -> "FeatureSpec":
        return cls(name, ORDINAL, 0.0, float(levels - 1), weight, tuple(labels))

    @classmethod
    def categorical(cls, name: str, labels: Sequence[str], weight: float = 1.0) -> "FeatureSpec":
        return cls(name, CATEGORICAL, 0.0, float(len(labels) - 1), weight, tuple(labels))

    @property
    def is_discrete(self) -> bool:
        return self.kind != NUMERIC

    @property
    def levels(self) -> int:
        return int(self.high) + 1 if self.is_discrete else 0

    def label_of(self, value: float) -> str:
        if self.labels:
            return self.labels[int(value)]
        return str(value)

    def contains(self, value: float) -> bool:
        if not np.isfinite(value):
            return False
        if self.is_discrete and float(value) != int(value):
            return False
        return self.low <= value <= self.high

    def to_dict(self) -> Dict:
        data = {"name": self.name, "kind": self.kind, "low": self.low, "high": self.high}
        if self.weight != 1.0:
            data["weight"] = self.weight
        if self.labels:
            data["labels"] = list(self.labels)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "FeatureSpec":
        return cls(
            name=data["name"],
            kind=data["kind"],
            low=float(data.get("low", 0.0)),
            high=float(data.get("high", 1.0)),
            weight=float(data.get("weight", 1.0)),
            labels=tuple(data.get("labels", ())),
        )


@dataclass(frozen=True)
class FeatureSchema:
    features: Tuple[FeatureSpec, ...]

    def __post_init__(self):
        names = [spec.name for spec in self.features]
        if len(set(names)) != len(names):
            raise SchemaMismatchError(f"duplicate feature names in schema: {names}")

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def __getitem__(self, index: int) -> FeatureSpec:
        return self.features[index]

    @property
    def names(self) -> List[str]:
        return [spec.name for spec in self.features]

    @property
    def all_numeric(self) -> bool:
        return all(spec.kind == "numeric" for spec in self.features)

    @property
    def lows(self) -> np.ndarray:
        return np.array([spec.low for spec in self.features], dtype=np.float64)

    @property
    def highs(self) -> np.ndarray:
        return np.array([spec.high for spec in self.features], dtype=np.float64)

    @property
    def weights(self) -> np.ndarray:
        return np.array([spec.weight for spec in self.features], dtype=np.float64)

    def index(self, name: str) -> int:
        for i, spec in enumerate(self.features):
            if spec.name == name:
                return i
        raise SchemaMismatchError(f"feature '{name}' not in schema {self.names}")

    def subset(self, names: Sequence[str]) -> "FeatureSchema":
        return FeatureSchema(tuple(self.features[self.index(name)] for name in names))

    def validate(self, values: Sequence[float]) -> np.ndarray:
        """Check length and per-feature ranges, returning a float64 copy"""
        array = np.asarray(values, dtype=np.float64)
        if array.ndim != 1 or array.shape[0] != len(self.features):
            raise SchemaMismatchError(
                f"expected {len(self.features)} feature values, got shape {array.shape}"
            )
        for spec, value in zip(self.features, array):
            if not spec.contains(value):
                raise SchemaMismatchError(
                    f"value {value} out of range for {spec.kind} feature '{spec.name}' "
                    f"[{spec.low}, {spec.high}]"
                )
        return array

    def to_dict(self) -> Dict:
        return {"features": [spec.to_dict() for spec in self.features]}

    @classmethod
    def from_dict(cls, data: Dict) -> "FeatureSchema":
        return cls(tuple(FeatureSpec.from_dict(item) for item in data["features"]))


@dataclass(frozen=True)
class FeatureVector:
    values: Tuple[float, ...]
    schema: FeatureSchema = field(compare=False, repr=False)

    @classmethod
    def of(cls, schema: FeatureSchema, values: Sequence[float]) -> "FeatureVector":
        array = schema.validate(values)
        return cls(tuple(float(v) for v in array), schema)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)

    def get(self, name: str) -> float:
        return self.values[self.schema.index(name)]

    def replace(self, **updates: float) -> "FeatureVector":
        values = list(self.values)
        for name, value in updates.items():
            values[self.schema.index(name)] = float(value)
        return FeatureVector.of(self.schema, values)

    def as_dict(self) -> Dict[str, float]:
        return dict(zip(self.schema.names, self.values))


def coerce_values(x, schema: Optional[FeatureSchema] = None) -> np.ndarray:
    """Accept a FeatureVector or a plain sequence and return float64 values"""
    if isinstance(x, FeatureVector):
        if schema is not None and x.schema.names != schema.names:
            raise SchemaMismatchError(
                f"feature vector schema {x.schema.names} does not match {schema.names}"
            )
        return x.as_array()
    if schema is not None:
        return schema.validate(x)
    return np.asarray(x, dtype=np.float64)
