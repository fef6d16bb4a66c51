import contextlib
import io
import json
import os
import unittest

import pandas as pd

from src.app.cli import EXIT_OK, EXIT_USAGE, main
from src.config import settings
from tests.fixtures import SLOW, TempDirMixin, compas_frame

CONFIGS = settings.ROOT_DIR / "data" / "configs"
STATES = settings.ROOT_DIR / "data" / "states"


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(["--log-level", "WARNING", *map(str, argv)])
    return code, out.getvalue(), err.getvalue()


class TestAdvise(unittest.TestCase):

    def test_bimodal_advice(self):
        code, out, _ = run_cli("advise", "--config", CONFIGS / "fig1_bench.json",
                               "--state", STATES / "fig1_start.json", "--policy", "bfs", "--budget", 3)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("Advised action: right", out)
        self.assertIn("Optimal expected value: 4.5", out)

    def test_greedy_advice(self):
        code, out, _ = run_cli("advise", "--config", CONFIGS / "fig1_bench.json",
                               "--state", STATES / "fig1_start.json", "--policy", "greedy", "--budget", 3)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("Advised action: left", out)

    def test_sudden_debt_one_month(self):
        code, out, _ = run_cli("advise", "--config", CONFIGS / "sudden_debt.json",
                               "--state", STATES / "sudden_debt.json", "--budget", 1)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("Advised action: miss payment", out)
        self.assertIn("declare bankruptcy", out)

    def test_zero_budget(self):
        code, out, _ = run_cli("advise", "--config", CONFIGS / "fig1_bench.json",
                               "--state", STATES / "fig1_start.json", "--budget", 0)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("no actions available", out)


class TestCommands(TempDirMixin, unittest.TestCase):

    def write_json(self, name, data):
        with open(self.path(name), "w", encoding="utf-8") as f:
            json.dump(data, f)
        return self.path(name)

    def test_corrupt_config(self):
        with open(self.path("broken.json"), "w", encoding="utf-8") as f:
            f.write("{not json")
        code, _, err = run_cli("experiment", "--config", self.path("broken.json"))
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("error:", err)

    def test_config_with_unknown_field(self):
        config = self.write_json("odd.json", {"domain": {"kind": "synthetic", "preset": "fig1_default"},
                                              "policies": [{"kind": "greedy"}], "resources": [1], "speed": 3})
        code, _, _ = run_cli("experiment", "--config", config)
        self.assertEqual(code, EXIT_USAGE)

    def test_experiment_writes_reports(self):
        config = self.write_json("small.json", {
            "name": "small", "domain": {"kind": "synthetic", "preset": "fig1_default"},
            "policies": [{"kind": "greedy"}, {"kind": "bfs"}], "resources": [1, 3], "n_states": 1,
            "formats": ["csv"],
        })
        code, _, _ = run_cli("experiment", "--config", config, "--output-dir", self.path("out"))
        self.assertEqual(code, EXIT_OK)
        frame = pd.read_csv(self.path(os.path.join("out", "small.csv")))
        self.assertEqual(len(frame), 4)
        self.assertTrue(os.path.exists(self.path(os.path.join("out", "small.meta.json"))))

    def test_build_cache(self):
        out = self.path("cache.csv")
        code, stdout, _ = run_cli("build-cache", "--input", settings.ROOT_DIR / "data" / "cache" /
                                  "questionnaire_sample.csv", "--out", out)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("12 rows", stdout)
        self.assertEqual(len(pd.read_csv(out)), 12)

    def test_train_forest(self):
        data = self.path("compas.csv")
        compas_frame(200).to_csv(data, index=False)
        forest = self.write_json("forest.json", {"n_trees": 5, "max_depth": 3, "min_leaf": 5})
        code, stdout, _ = run_cli("train-forest", "--data", data, "--config", forest, "--out", self.path("models"))
        self.assertEqual(code, EXIT_OK)
        for name in ("risk_full.json", "risk_blind.json", "metrics.csv"):
            self.assertTrue(os.path.exists(self.path(os.path.join("models", name))), name)
        metrics = pd.read_csv(self.path(os.path.join("models", "metrics.csv")))
        self.assertEqual(list(metrics["variant"]), ["full", "blind"])
        self.assertIn("held-out AUC", stdout)

    def test_train_forest_missing_label(self):
        data = self.path("compas.csv")
        compas_frame(50).drop(columns=["two_year_recid"]).to_csv(data, index=False)
        code, _, err = run_cli("train-forest", "--data", data, "--out", self.path("models"))
        self.assertEqual(code, EXIT_USAGE)
        self.assertIn("two_year_recid", err)

    @unittest.skipUnless(SLOW, "set AGENCY_SLOW_TESTS=1")
    def test_check_theorems(self):
        code, stdout, _ = run_cli("check-theorems", "--n-states", 20, "--output-dir", self.tmp)
        self.assertEqual(code, EXIT_OK)
        self.assertNotIn("[FAIL]", stdout)
        self.assertTrue(os.path.exists(self.path("theorem_checks.csv")))


if __name__ == '__main__':
    unittest.main()
