"""
Run configuration: one JSON file per run, validated in full before any work.
"""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from src.app.experiments import ExperimentSpec
from src.app.output_generator import REPORT_FORMATS
from src.config import settings
from src.config.exceptions import ConfigError
from src.decision.forest import ForestConfig
from src.domains.recidivism import BLIND, variant_schema
from src.domains.registry import DOMAIN_KINDS, MAXIMIZE, MINIMIZE

logger = logging.getLogger(__name__)

PATH_KEYS = ("data_path", "cache_path", "models_dir")


@dataclass
class RunConfig:
    name: str
    domain: Dict
    policies: List[Dict] = field(default_factory=list)
    resources: List[int] = field(default_factory=list)
    n_states: int = 100
    rollouts: int = 1
    seed: int = settings.DEFAULT_SEED
    output_dir: str = str(settings.OUTPUT_DIR)
    formats: List[str] = field(default_factory=lambda: list(REPORT_FORMATS))
    objective: Optional[str] = None
    compare: bool = True
    group_report: Optional[Dict] = None
    scenario_report: Optional[Dict] = None

    def validate(self):
        kind = self.domain.get("kind")
        if kind not in DOMAIN_KINDS:
            raise ConfigError(f"unknown domain kind '{kind}', expected one of {DOMAIN_KINDS}")
        unknown = set(self.formats) - set(REPORT_FORMATS)
        if unknown:
            raise ConfigError(f"unknown report formats {sorted(unknown)}")
        if self.objective is None:
            self.objective = MINIMIZE if kind == "recidivism" else MAXIMIZE
        if self.compare:
            self.experiment_spec()
        for key in ("data_path", "cache_path"):
            if key in self.domain and not Path(self.domain[key]).is_file():
                raise ConfigError(f"domain {key} does not exist: {self.domain[key]}")
        if "forest" in self.domain:
            forest = ForestConfig.from_dict({"seed": self.seed, **self.domain["forest"]})
            forest.validate(len(variant_schema(BLIND)))
        if self.group_report is not None:
            if kind != "recidivism":
                raise ConfigError("group_report needs a recidivism domain")
            ks = self.group_report.get("ks", [])
            if not ks or any(int(k) < 0 for k in ks):
                raise ConfigError("group_report needs nonnegative step counts 'ks'")
            self.group_spec()
        if self.scenario_report is not None:
            horizons = self.scenario_report.get("horizons", [])
            if "scenario" not in self.scenario_report or not horizons or min(int(h) for h in horizons) < 1:
                raise ConfigError("scenario_report needs 'scenario' and horizons of at least one month")
            for entry in self.scenario_report.get("policies", self.policies):
                ExperimentSpec.label_of(entry)
        if not (self.compare or self.group_report or self.scenario_report):
            raise ConfigError("config runs nothing: enable compare, group_report or scenario_report")
        return self

    def experiment_spec(self) -> ExperimentSpec:
        return ExperimentSpec.from_dict({
            "name": self.name, "domain": self.domain, "policies": self.policies,
            "resources": self.resources, "n_states": self.n_states, "seed": self.seed,
            "rollouts": self.rollouts, "output_dir": self.output_dir, "objective": self.objective,
        })

    def group_spec(self) -> ExperimentSpec:
        block = self.group_report
        return ExperimentSpec.from_dict({
            "name": f"{self.name}_groups", "domain": self.domain,
            "policies": block.get("policies", self.policies[:1]),
            "resources": [int(k) for k in block["ks"]],
            "n_states": int(block.get("n_states", self.n_states)), "seed": self.seed,
            "output_dir": self.output_dir, "objective": MINIMIZE,
        })

    def to_dict(self) -> Dict:
        return asdict(self)


def _resolve_paths(domain: Dict) -> Dict:
    """Relative data paths are taken from the repository root"""
    resolved = dict(domain)
    for key in PATH_KEYS:
        if key in resolved and not Path(resolved[key]).is_absolute():
            resolved[key] = str(settings.ROOT_DIR / resolved[key])
    return resolved


def load_run_config(path, overrides: Optional[Dict] = None) -> RunConfig:
    """Read, apply scalar overrides and validate a run config

    Args:
        path: JSON config file
        overrides: scalar fields (seed, output_dir, n_states) replacing file values
    Returns:
        RunConfig: validated, with every default filled in
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    data.setdefault("name", path.stem)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})

    unknown = set(data) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    if "domain" not in data or not isinstance(data["domain"], dict):
        raise ConfigError("config needs a 'domain' object")
    data["domain"] = _resolve_paths(data["domain"])
    try:
        config = RunConfig(**data)
    except TypeError as e:
        raise ConfigError(f"invalid config: {e}") from e
    logger.info(f"Loaded run config {config.name} from {path}")
    return config.validate()
