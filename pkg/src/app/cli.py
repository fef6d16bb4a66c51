"""
Command-line entry point.

    python -m src.app.cli train-forest --data compas.csv --out models/
    python -m src.app.cli advise --config data/configs/fig1_bench.json --state start.json --policy bfs --budget 3
    python -m src.app.cli experiment --config data/configs/fig1_bench.json
    python -m src.app.cli check-theorems
    python -m src.app.cli build-cache --input raw.csv --out cache.csv

Exit codes: 0 success, 1 runtime failure, 2 usage, config or data error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pandas as pd

from src.app.advisor import Advisor
from src.app.experiments import credit_scenario_report, group_agency_report, recidivism_domains, run_experiment
from src.app.output_generator import emit_report
from src.app.run_config import load_run_config
from src.app.theorems import run_theorem_suite
from src.app.utils import format_advice, format_checks
from src.config import settings
from src.config.exceptions import AgencyError, ConfigError
from src.decision.forest import ForestConfig
from src.decision.query_cache import load_query_cache
from src.domains.credit import QUESTIONNAIRE_SCHEMA
from src.domains.recidivism import VARIANTS, train_risk_models
from src.domains.registry import model_paths
from src.ingestion.compas_loader import load_compas
from src.policies.factory import POLICY_KINDS

logger = logging.getLogger("agency")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from e


def cmd_train_forest(args) -> int:
    forest = _read_json(args.config) if args.config else {}
    config = ForestConfig.from_dict({"seed": args.seed, **forest})
    dataset = load_compas(args.data, label_column=args.label_column)
    models = train_risk_models(dataset.records, config, args.test_fraction)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for variant, path in model_paths(out).items():
        models.ensemble(variant).save(path)
    metrics = pd.DataFrame([{"variant": v, **models.metrics[v]} for v in VARIANTS],
                           columns=["variant", "auc", "accuracy", "n_train", "n_test"])
    metrics.to_csv(out / "metrics.csv", index=False, float_format="%.6f", lineterminator="\n")
    for row in metrics.itertuples():
        print(f"{row.variant}: held-out AUC {row.auc:.4f}, accuracy {row.accuracy:.4f}")
    print(f"Models written to {out}")
    return EXIT_OK


def cmd_advise(args) -> int:
    config = load_run_config(args.config, {"seed": args.seed})
    state = _read_json(args.state)
    params = {}
    if args.iterations is not None:
        params["iterations"] = args.iterations
    if args.fixed_preset is not None:
        params["preset"] = args.fixed_preset
    result = Advisor(config.domain, config.seed).advise(state, args.policy, args.budget, params)
    print(format_advice(result))
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = load_run_config(args.config, {"seed": args.seed, "output_dir": args.output_dir,
                                           "n_states": args.n_states, "resources": args.resources})
    if args.iterations is not None:
        for entry in config.policies:
            if entry.get("kind") == "mcts":
                entry.pop("budget_ms", None)
                entry["iterations"] = args.iterations
        config.validate()
    failures = 0
    domains = None
    if config.domain["kind"] == "recidivism" and (config.compare or config.group_report):
        domains = recidivism_domains(config.domain, config.seed)
    if config.compare:
        spec = config.experiment_spec()
        for name, table in run_experiment(spec, domains=domains).items():
            emit_report(table, name, config.formats, config.output_dir)
            failures += len(table.failures)
            for failure in table.failures:
                print(f"skipped {failure['policy']} at r={failure['resources']}: {failure['error']}")
    if config.group_report:
        spec = config.group_spec()
        report = group_agency_report(spec, config.group_report.get("groups"), domains)
        emit_report(report, spec.name, config.formats, config.output_dir)
    if config.scenario_report:
        block = config.scenario_report
        report = credit_scenario_report(block["scenario"], block["horizons"],
                                        block.get("policies", config.policies), config.seed)
        emit_report(report, f"{config.name}_{block['scenario']}", config.formats, config.output_dir)
    print(f"Reports written to {config.output_dir}")
    return EXIT_FAILURE if failures else EXIT_OK


def cmd_check_theorems(args) -> int:
    domains = None
    if args.data:
        domains = recidivism_domains({"kind": "recidivism", "data_path": args.data,
                                      "models_dir": args.models_dir}, args.seed)
    report = run_theorem_suite(args.seed, args.n_states, domains=domains)
    print(format_checks(report))
    if args.output_dir:
        emit_report(report, "theorem_checks", ["csv"], args.output_dir)
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_build_cache(args) -> int:
    cache = load_query_cache(args.input, QUESTIONNAIRE_SCHEMA)
    cache.save(args.out)
    print(f"Query cache with {len(cache)} rows written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agency", description="Agency-MDP advice toolkit")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="logging level (default from AGENCY_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-forest", help="train the full and race/sex-blind risk forests")
    p.add_argument("--data", required=True, help="COMPAS-format CSV")
    p.add_argument("--config", help="forest hyperparameters JSON")
    p.add_argument("--out", required=True, help="output directory for risk_full.json, risk_blind.json, metrics.csv")
    p.add_argument("--label-column", default="two_year_recid")
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.set_defaults(func=cmd_train_forest)

    p = sub.add_parser("advise", help="recommend the next action from a start state")
    p.add_argument("--config", required=True, help="run config naming the domain")
    p.add_argument("--state", required=True, help="state JSON (position, answers, household/scenario or record)")
    p.add_argument("--policy", choices=POLICY_KINDS, default="bfs")
    p.add_argument("--budget", type=int, required=True, help="resources left (steps, changes or months)")
    p.add_argument("--iterations", type=int, help="MCTS iteration budget")
    p.add_argument("--fixed-preset", help="preset for the fixed policy, e.g. pay_max")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_advise)

    p = sub.add_parser("experiment", help="run the comparison and report blocks of a run config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.add_argument("--n-states", type=int)
    p.add_argument("--resources", type=int, nargs="+", help="replace the config's resource levels")
    p.add_argument("--iterations", type=int, help="iteration budget for every MCTS policy")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("check-theorems", help="greedy/optimal agreement, straightness and greedy-gap checks")
    p.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    p.add_argument("--n-states", type=int, default=100)
    p.add_argument("--data", help="COMPAS-format CSV; adds the recidivism one-resource checks")
    p.add_argument("--models-dir", help="saved risk forests to use instead of training")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_check_theorems)

    p = sub.add_parser("build-cache", help="validate and normalize a questionnaire query-cache CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_cache)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.command == "advise" and args.budget < 0:
        parser.error("--budget must be nonnegative")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (AgencyError, RuntimeError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
