"""
Movement domains for synthetic decision functions: unit moves on a lattice
(right/left/up/down/stay) or K evenly spaced compass headings.
"""
import math
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.config.exceptions import ConfigError
from src.decision.features import FeatureVector
from src.decision.synthetic import SyntheticFunction, load_presets, make_preset
from src.mdp.agency_mdp import ActionId, AgencyMdp, AgencyState, TransitionModel, TransitionOutcome

BOX_TOLERANCE = 1e-9

AXIS_MOVES = {
    "right": (0, 1.0),
    "left": (0, -1.0),
    "up": (1, 1.0),
    "down": (1, -1.0),
    "stay": (None, 0.0),
}


class LatticeModel(TransitionModel):
    """Deterministic moves inside a numeric box; every move costs one resource"""

    def __init__(self, df: SyntheticFunction, labels: Sequence[str], displacements: Sequence[np.ndarray]):
        super().__init__([ActionId(i, label) for i, label in enumerate(labels)])
        self.df = df
        self.box = np.asarray(df.box, dtype=np.float64)
        self._moves = [np.asarray(d, dtype=np.float64) for d in displacements]

    @classmethod
    def axis(cls, df: SyntheticFunction, labels: Sequence[str], step: float = 1.0) -> "LatticeModel":
        dims = len(df.schema)
        moves = []
        for label in labels:
            if label not in AXIS_MOVES:
                raise ConfigError(f"unknown lattice move '{label}'")
            axis, sign = AXIS_MOVES[label]
            move = np.zeros(dims)
            if axis is not None:
                if axis >= dims:
                    raise ConfigError(f"move '{label}' needs {axis + 1} dimensions")
                move[axis] = sign * step
            moves.append(move)
        return cls(df, labels, moves)

    @classmethod
    def compass(cls, df: SyntheticFunction, directions: int = 8, step: float = 1.0) -> "LatticeModel":
        if len(df.schema) != 2:
            raise ConfigError("compass moves need a two-dimensional function")
        labels, moves = [], []
        for k in range(directions):
            angle = 2.0 * math.pi * k / directions
            labels.append(f"heading {360.0 * k / directions:g}")
            moves.append(step * np.array([math.cos(angle), math.sin(angle)]))
        return cls(df, labels, moves)

    def displacement(self, action: ActionId) -> np.ndarray:
        return self._moves[action.index]

    def _target(self, state: AgencyState, action: ActionId) -> Optional[np.ndarray]:
        target = state.x + self._moves[action.index]
        low, high = self.box[:, 0], self.box[:, 1]
        if np.any(target < low - BOX_TOLERANCE) or np.any(target > high + BOX_TOLERANCE):
            return None
        return np.clip(target, low, high)

    def is_legal(self, state: AgencyState, action: ActionId) -> bool:
        return 0 <= action.index < len(self.actions) and self._target(state, action) is not None

    def outcomes(self, state: AgencyState, action: ActionId) -> List[TransitionOutcome]:
        features = FeatureVector.of(self.df.schema, self._target(state, action))
        return [TransitionOutcome(state.evolve(features=features, resources=state.resources - 1), 1.0)]


def lattice_state(df: SyntheticFunction, position: Sequence[float], resources: int) -> AgencyState:
    return AgencyState(FeatureVector.of(df.schema, position), int(resources))


def build_lattice_mdp(df: SyntheticFunction, domain: Dict, resources: Optional[int] = None,
                      start: Optional[Sequence[float]] = None) -> AgencyMdp:
    """Agency MDP moving a point over df's box

    Args:
        df: synthetic decision function
        domain: {"moves": "axis"|"compass", "actions", "directions", "step", "start", "resources"}
        resources: overrides domain["resources"]
        start: overrides domain["start"]
    """
    moves = domain.get("moves", "axis")
    step = float(domain.get("step", 1.0))
    if moves == "axis":
        model = LatticeModel.axis(df, domain["actions"], step)
    elif moves == "compass":
        model = LatticeModel.compass(df, int(domain.get("directions", 8)), step)
    else:
        raise ConfigError(f"unknown move set '{moves}'")
    r = int(domain.get("resources", 1) if resources is None else resources)
    initial = lattice_state(df, start if start is not None else domain["start"], r)

    def sampler(rng: np.random.Generator) -> AgencyState:
        low, high = model.box[:, 0], model.box[:, 1]
        if moves == "axis":
            point = [float(rng.integers(int(math.ceil(lo)), int(math.floor(hi)) + 1)) for lo, hi in zip(low, high)]
        else:
            point = rng.uniform(low, high).tolist()
        return lattice_state(df, point, r)

    return AgencyMdp(df, model, initial_state=initial, initial_sampler=sampler, name=df.name)


def build_preset_mdp(name: str, resources: Optional[int] = None, start: Optional[Sequence[float]] = None,
                     presets: Optional[Dict] = None) -> AgencyMdp:
    presets = presets if presets is not None else load_presets()
    df = make_preset(name, presets)
    return build_lattice_mdp(df, presets[name]["domain"], resources, start)
