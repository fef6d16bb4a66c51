"""
Gradient-following advice on continuous synthetic domains
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from src.config import settings
from src.config.exceptions import UnsupportedDomainError
from src.decision.base import DecisionFunction
from src.decision.features import coerce_values
from src.policies.baselines import AdvicePolicy


@dataclass
class GradientStep:
    displacement: np.ndarray
    stationary: bool
    gradient: np.ndarray


def _require_numeric(df: DecisionFunction):
    if not df.schema.all_numeric:
        raise UnsupportedDomainError(
            f"gradient advice needs numeric features; {df.name} has "
            f"{[s.name for s in df.schema if s.kind != 'numeric']}"
        )


def gradient_action(df: DecisionFunction, x, epsilon: float, fd_step: float = settings.FD_STEP) -> GradientStep:
    """Displacement of L2 norm epsilon along the finite-difference gradient

    Args:
        df: decision function with numeric features only
        x: point to differentiate at
        epsilon: step length
        fd_step: central-difference step
    Returns:
        GradientStep: zero displacement with stationary=True where the gradient vanishes
    """
    if epsilon <= 0 or fd_step <= 0:
        raise ValueError("epsilon and fd_step must be positive")
    _require_numeric(df)
    values = coerce_values(x)
    grad = df.gradient(values, fd_step)
    norm = float(np.linalg.norm(grad))
    if norm == 0.0 or not np.isfinite(norm):
        return GradientStep(np.zeros_like(values), True, grad)
    return GradientStep(epsilon * grad / norm, False, grad)


@dataclass
class GradientPath:
    points: List[np.ndarray] = field(default_factory=list)
    values: List[float] = field(default_factory=list)
    stalled: bool = False

    @property
    def final_value(self) -> float:
        return self.values[-1]


def follow_gradient(df: DecisionFunction, x0, budget: int, epsilon: float = 1.0,
                    fd_step: float = settings.FD_STEP, box: Optional[np.ndarray] = None) -> GradientPath:
    """Take `budget` continuous gradient steps of length epsilon from x0

    Steps leaving the box are clipped back onto it.
    """
    x = coerce_values(x0).copy()
    path = GradientPath([x.copy()], [df.evaluate_array(x)])
    for _ in range(budget):
        step = gradient_action(df, x, epsilon, fd_step)
        if step.stationary:
            path.stalled = True
            break
        x = x + step.displacement
        if box is not None:
            x = np.clip(x, box[:, 0], box[:, 1])
        path.points.append(x.copy())
        path.values.append(df.evaluate_array(x))
    return path


class GradientPolicy(AdvicePolicy):
    """Snap the gradient direction onto the most aligned available move.

    Needs a transition model exposing displacement(action); stationary points
    take the zero move when one exists.
    """

    kind = "gradient"

    def __init__(self, fd_step: float = settings.FD_STEP):
        self.fd_step = fd_step

    def choose(self, mdp, state, rng):
        df = mdp.decision_function
        _require_numeric(df)
        displacement = getattr(mdp.model, "displacement", None)
        if displacement is None:
            raise UnsupportedDomainError(f"{mdp.name} has no continuous moves for gradient advice")
        step = gradient_action(df, state.x, 1.0, self.fd_step)
        legal = mdp.legal_actions(state)
        if step.stationary:
            for action in legal:
                if not np.any(displacement(action)):
                    return action
            return legal[0]
        best, best_score = legal[0], -np.inf
        for action in legal:
            move = displacement(action)
            norm = float(np.linalg.norm(move))
            score = float(np.dot(move, step.displacement)) / norm if norm > 0 else 0.0
            if score > best_score + 1e-12:
                best, best_score = action, score
        return best

    def describe(self):
        return {"kind": self.kind, "fd_step": self.fd_step}
