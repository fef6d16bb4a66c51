"""
Build advice policies from config dictionaries
"""
from typing import Dict, Optional

from src.config import settings
from src.config.exceptions import ConfigError
from src.policies.baselines import AdvicePolicy, GreedyPolicy, RandomPolicy, fixed_policy
from src.policies.gradient import GradientPolicy
from src.policies.mcts import ITERATIONS, WALL_CLOCK, MctsPolicy, SearchBudget
from src.policies.search import BfsPolicy

POLICY_KINDS = ("random", "greedy", "gradient", "fixed", "bfs", "mcts")

# name -> (action label, fallback label)
FIXED_PRESETS = {
    "pay_max": ("pay full", "pay minimum"),
    "pay_minimum": ("pay minimum", None),
    "stay": ("stay", None),
}


def build_policy(kind: str, params: Optional[Dict] = None, seed: int = settings.DEFAULT_SEED) -> AdvicePolicy:
    """Create a policy

    Args:
        kind: one of POLICY_KINDS
        params: kind-specific options (iterations, budget_ms, exploration, node_cap,
                action, fallback, preset, fd_step)
        seed: master seed for search policies
    Returns:
        AdvicePolicy
    """
    params = dict(params or {})
    if kind == "random":
        return RandomPolicy()
    if kind == "greedy":
        return GreedyPolicy()
    if kind == "gradient":
        return GradientPolicy(float(params.get("fd_step", settings.FD_STEP)))
    if kind == "bfs":
        return BfsPolicy(int(params.get("node_cap", settings.BFS_NODE_CAP)))
    if kind == "mcts":
        if "budget_ms" in params:
            budget = SearchBudget(WALL_CLOCK, float(params["budget_ms"]))
        else:
            budget = SearchBudget(ITERATIONS, int(params.get("iterations", settings.MCTS_ITERATIONS)))
        return MctsPolicy(budget, float(params.get("exploration", settings.MCTS_EXPLORATION)),
                          int(params.get("seed", seed)))
    if kind == "fixed":
        preset = params.get("preset")
        if preset is not None:
            if preset not in FIXED_PRESETS:
                raise ConfigError(f"unknown fixed policy preset '{preset}', expected one of {sorted(FIXED_PRESETS)}")
            action, fallback = FIXED_PRESETS[preset]
            return fixed_policy(action, fallback, name=preset)
        if "action" not in params:
            raise ConfigError("fixed policy needs 'preset' or 'action'")
        return fixed_policy(params["action"], params.get("fallback"), name=params.get("name", params["action"]))
    raise ConfigError(f"unknown policy kind '{kind}', expected one of {POLICY_KINDS}")


def policy_label(kind: str, params: Optional[Dict] = None) -> str:
    params = params or {}
    if kind == "fixed":
        return params.get("preset") or params.get("name") or params.get("action", "fixed")
    return params.get("name", kind)
