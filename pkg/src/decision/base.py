"""
Decision function interface.

A decision function maps a schema-valid feature vector to a positive real.
Implementations override evaluate_array, the unchecked numeric path; evaluate
adds the schema and positivity checks.
"""
import math
from abc import ABC, abstractmethod
from typing import Callable, Optional

import numpy as np

from src.config.exceptions import DecisionValueError
from src.decision.features import FeatureSchema, coerce_values


class DecisionFunction(ABC):
    def __init__(self, schema: FeatureSchema, name: str = ""):
        self.schema = schema
        self.name = name or type(self).__name__

    def evaluate(self, x) -> float:
        """Evaluate the decision function at x

        Args:
            x: FeatureVector or sequence of values matching the schema
        Returns:
            float: positive decision value
        """
        values = coerce_values(x, self.schema)
        value = float(self.evaluate_array(values))
        if not math.isfinite(value) or value <= 0.0:
            raise DecisionValueError(f"{self.name} produced {value} at {values.tolist()}")
        return value

    __call__ = evaluate

    @abstractmethod
    def evaluate_array(self, values: np.ndarray) -> float:
        """Evaluate without schema checks (finite differences step off the lattice)"""

    def gradient(self, values, fd_step: float) -> np.ndarray:
        """Central finite-difference gradient at values"""
        x = np.asarray(values, dtype=np.float64)
        grad = np.zeros_like(x)
        for i in range(x.shape[0]):
            step = np.zeros_like(x)
            step[i] = fd_step
            grad[i] = (self.evaluate_array(x + step) - self.evaluate_array(x - step)) / (2.0 * fd_step)
        return grad

    def describe(self) -> dict:
        return {"name": self.name, "type": type(self).__name__}


class ConstantDecision(DecisionFunction):
    def __init__(self, schema: FeatureSchema, value: float):
        if value <= 0:
            raise DecisionValueError(f"constant decision must be positive, got {value}")
        super().__init__(schema, name=f"constant({value})")
        self.value = float(value)

    def evaluate_array(self, values: np.ndarray) -> float:
        return self.value


class CallableDecision(DecisionFunction):
    """Wrap a plain function of the value array"""

    def __init__(self, schema: FeatureSchema, func: Callable[[np.ndarray], float], name: Optional[str] = None):
        super().__init__(schema, name=name or getattr(func, "__name__", "callable"))
        self.func = func

    def evaluate_array(self, values: np.ndarray) -> float:
        return float(self.func(values))
