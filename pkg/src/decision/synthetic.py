"""
Analytic decision functions used for the lattice benchmarks and theorem checks
"""
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config import settings
from src.config.exceptions import ConfigError, ShapeContractError
from src.decision.base import DecisionFunction
from src.decision.features import FeatureSchema, FeatureSpec

logger = logging.getLogger(__name__)

SYNTHETIC_KINDS = ("bimodal1d", "curved2d_monotone", "linear", "logistic", "radial")


def _numeric_schema(box: Sequence[Sequence[float]], prefix: str = "x") -> FeatureSchema:
    return FeatureSchema(tuple(
        FeatureSpec.numeric(f"{prefix}{i}", low, high) for i, (low, high) in enumerate(box)
    ))


class SyntheticFunction(DecisionFunction):
    """Closed-form decision surface on a numeric box"""

    def __init__(self, kind: str, params: Dict, box: Sequence[Sequence[float]], name: str = ""):
        super().__init__(_numeric_schema(box), name=name or kind)
        self.kind = kind
        self.params = dict(params)
        self.box = np.asarray(box, dtype=np.float64)
        self._fn = getattr(self, f"_eval_{kind}")

    def evaluate_array(self, values: np.ndarray) -> float:
        return float(self._fn(np.asarray(values, dtype=np.float64)))

    def _eval_bimodal1d(self, x: np.ndarray) -> float:
        p = self.params
        left = p["left_height"] * np.exp(-((x[0] - p["left_center"]) ** 2) / (2.0 * p["left_width"] ** 2))
        right = p["right_height"] * np.exp(-((x[0] - p["right_center"]) ** 2) / (2.0 * p["right_width"] ** 2))
        return p["floor"] + left + right

    def _eval_curved2d_monotone(self, x: np.ndarray) -> float:
        p = self.params
        return p["offset"] + p["a"] * x[0] + p["b"] * x[1] ** 2

    def _eval_linear(self, x: np.ndarray) -> float:
        return self.params["offset"] + float(np.dot(self._weights, x))

    def _eval_logistic(self, x: np.ndarray) -> float:
        z = float(np.dot(self._weights, x)) + self.params["bias"]
        return self.params["scale"] / (1.0 + np.exp(-z))

    def _eval_radial(self, x: np.ndarray) -> float:
        return self.params["offset"] + self.params["slope"] * float(np.linalg.norm(x - self._center))

    @property
    def _weights(self) -> np.ndarray:
        return np.asarray(self.params["weights"], dtype=np.float64)

    @property
    def _center(self) -> np.ndarray:
        return np.asarray(self.params["center"], dtype=np.float64)

    def local_maxima(self) -> List[float]:
        """Peak centres of a bimodal function, left to right"""
        if self.kind != "bimodal1d":
            return []
        return sorted([self.params["left_center"], self.params["right_center"]])

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "params": self.params, "box": self.box.tolist()}


def _check_bimodal(params: Dict):
    for key in ("floor", "left_center", "left_height", "left_width",
                "right_center", "right_height", "right_width"):
        if key not in params:
            raise ShapeContractError(f"bimodal1d requires parameter '{key}'")
    if params["left_height"] == params["right_height"]:
        raise ShapeContractError("bimodal1d peaks must have different heights")
    if min(params["left_height"], params["right_height"], params["left_width"], params["right_width"]) <= 0:
        raise ShapeContractError("bimodal1d heights and widths must be positive")
    if params["floor"] <= 0:
        raise ShapeContractError("bimodal1d floor must be positive")
    separation = abs(params["right_center"] - params["left_center"])
    if separation <= 3.0 * max(params["left_width"], params["right_width"]):
        raise ShapeContractError("bimodal1d peaks overlap; separation must exceed 3 widths")
    start = params.get("start", 0.0)
    peaks = [(params["left_height"], params["left_center"]), (params["right_height"], params["right_center"])]
    (low_h, low_c), (high_h, high_c) = sorted(peaks)
    if abs(high_c - start) <= abs(low_c - start):
        raise ShapeContractError("bimodal1d higher peak must be farther from the start than the lower peak")


def _corners(box: np.ndarray) -> np.ndarray:
    grids = np.meshgrid(*[row for row in box], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _check_params(kind: str, params: Dict, box: np.ndarray):
    dims = box.shape[0]
    if kind == "bimodal1d":
        if dims != 1:
            raise ShapeContractError("bimodal1d is one-dimensional")
        _check_bimodal(params)
    elif kind == "curved2d_monotone":
        if dims != 2:
            raise ShapeContractError("curved2d_monotone is two-dimensional")
        if params.get("a", 0) <= 0 or params.get("b", 0) <= 0:
            raise ShapeContractError("curved2d_monotone needs a > 0 and b > 0")
        if np.any(box[:, 0] < 0):
            raise ShapeContractError("curved2d_monotone is only monotone on the nonnegative quadrant")
        if params.get("offset", 0) <= 0:
            raise ShapeContractError("curved2d_monotone offset must be positive")
    elif kind in ("linear", "logistic"):
        weights = np.asarray(params.get("weights", ()), dtype=np.float64)
        if weights.shape != (dims,):
            raise ShapeContractError(f"{kind} needs {dims} weights, got {weights.tolist()}")
        if kind == "linear":
            lowest = params["offset"] + float(np.min(_corners(box) @ weights))
            if lowest <= 0:
                raise ShapeContractError("linear function is not positive on its box")
        elif params.get("scale", 0) <= 0:
            raise ShapeContractError("logistic scale must be positive")
    elif kind == "radial":
        center = np.asarray(params.get("center", ()), dtype=np.float64)
        if center.shape != (dims,):
            raise ShapeContractError(f"radial needs a {dims}-dimensional center")
        if params.get("slope", 0) <= 0 or params.get("offset", 0) <= 0:
            raise ShapeContractError("radial needs positive slope and offset")
    else:
        raise ShapeContractError(f"unknown synthetic kind '{kind}', expected one of {SYNTHETIC_KINDS}")


_DEFAULTS = {
    "linear": {"offset": 1.0},
    "logistic": {"scale": 10.0, "bias": 0.0},
    "radial": {"offset": 1.0, "slope": 1.0},
    "curved2d_monotone": {"offset": 1.0},
}


def make_synthetic(kind: str, params: Dict, box: Optional[Sequence[Sequence[float]]] = None,
                   name: str = "") -> SyntheticFunction:
    """Build a synthetic decision function after checking its shape contract

    Args:
        kind: one of SYNTHETIC_KINDS
        params: kind-specific parameters
        box: per-dimension [low, high]; taken from params["box"] when omitted
    Returns:
        SyntheticFunction
    """
    merged = dict(_DEFAULTS.get(kind, {}))
    merged.update(params)
    if box is None:
        box = merged.pop("box", None)
    else:
        merged.pop("box", None)
    if box is None:
        raise ShapeContractError(f"{kind} needs a domain box")
    box_array = np.asarray(box, dtype=np.float64)
    if box_array.ndim != 2 or box_array.shape[1] != 2 or np.any(box_array[:, 1] < box_array[:, 0]):
        raise ShapeContractError(f"malformed box {box}")
    _check_params(kind, merged, box_array)
    return SyntheticFunction(kind, merged, box_array.tolist(), name=name)


def load_presets(path: Optional[Path] = None) -> Dict[str, Dict]:
    path = Path(path or settings.PRESETS_DIR / "synthetic_functions.json")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read synthetic presets {path}: {e}") from e


def make_preset(name: str, presets: Optional[Dict[str, Dict]] = None) -> SyntheticFunction:
    presets = presets if presets is not None else load_presets()
    if name not in presets:
        raise ConfigError(f"unknown synthetic preset '{name}', available: {sorted(presets)}")
    entry = presets[name]
    logger.debug(f"Building synthetic preset {name} ({entry['kind']})")
    return make_synthetic(entry["kind"], entry["params"], entry.get("box"), name=name)
