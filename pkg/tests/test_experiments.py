import json
import math
import os
import unittest

import pandas as pd

from src.app.experiments import (
    COMPARISON_COLUMNS, ComparisonTable, ExperimentSpec, compare_policies, group_agency_report, run_experiment,
)
from src.app.output_generator import emit_report
from src.config.exceptions import ConfigError
from src.decision.forest import ForestConfig
from src.domains.recidivism import BLIND, FULL, train_risk_models
from src.domains.registry import RecidivismDomain
from tests.fixtures import SLOW, TempDirMixin, compas_records


def fig1_spec(**overrides):
    data = {
        "name": "fig1_test",
        "domain": {"kind": "synthetic", "preset": "fig1_default"},
        "policies": [{"kind": "random"}, {"kind": "greedy"}, {"kind": "bfs"}],
        "resources": [1, 2, 3],
        "n_states": 1,
        "rollouts": 20,
        "seed": 5,
    }
    data.update(overrides)
    return ExperimentSpec.from_dict(data)


class TestExperimentSpec(unittest.TestCase):

    def test_recidivism_defaults_to_minimize(self):
        spec = ExperimentSpec.from_dict({"name": "r", "domain": {"kind": "recidivism"},
                                         "policies": [{"kind": "greedy"}], "resources": [1]})
        self.assertEqual(spec.objective, "minimize")
        self.assertEqual(fig1_spec().objective, "maximize")

    def test_rejects_bad_blocks(self):
        with self.assertRaises(ConfigError):
            fig1_spec(resources=[])
        with self.assertRaises(ConfigError):
            fig1_spec(resources=[-1])
        with self.assertRaises(ConfigError):
            fig1_spec(policies=[{"kind": "greedy"}, {"kind": "greedy"}])
        with self.assertRaises(ConfigError):
            fig1_spec(policies=[{"kind": "psychic"}])
        with self.assertRaises(ConfigError):
            fig1_spec(n_states=0)
        with self.assertRaises(ConfigError):
            fig1_spec(colour="blue")


class TestComparePolicies(unittest.TestCase):

    def test_exact_search_beats_local_advice(self):
        table = compare_policies(fig1_spec())
        self.assertEqual(len(table.rows), 9)
        self.assertAlmostEqual(table.cell("greedy", 3).mean, 2.5, places=6)
        self.assertAlmostEqual(table.cell("bfs", 3).mean, 4.5, places=6)
        for r in (1, 2, 3):
            bfs = table.cell("bfs", r).mean
            self.assertGreaterEqual(bfs, table.cell("greedy", r).mean)
            self.assertGreaterEqual(bfs, table.cell("random", r).mean)
        self.assertAlmostEqual(table.cell("bfs", 1).mean, table.cell("greedy", 1).mean, places=12)

    def test_single_start_has_zero_stderr(self):
        table = compare_policies(fig1_spec())
        for row in table.rows:
            self.assertEqual(row.n, 1)
            self.assertEqual(row.stderr, 0.0)

    def test_same_seed_same_table(self):
        spec = fig1_spec(domain={"kind": "synthetic", "preset": "fig2_default", "sample": "uniform"},
                         n_states=4, resources=[1, 2])
        first = compare_policies(spec).to_frame()
        second = compare_policies(spec).to_frame()
        pd.testing.assert_frame_equal(first, second)

    def test_progress_callback(self):
        calls = []
        compare_policies(fig1_spec(), progress_callback=lambda done, total: calls.append((done, total)))
        self.assertEqual(calls[-1], (9, 9))
        self.assertEqual(len(calls), 9)

    def test_search_over_cap_is_skipped(self):
        spec = fig1_spec(domain={"kind": "synthetic", "preset": "fig2_default"},
                         policies=[{"kind": "greedy"}, {"kind": "bfs", "node_cap": 3}], resources=[4])
        table = compare_policies(spec)
        skipped = table.cell("bfs", 4)
        self.assertTrue(math.isnan(skipped.mean))
        self.assertEqual(skipped.n, 0)
        self.assertEqual(table.failures[0]["policy"], "bfs")
        self.assertEqual(table.cell("greedy", 4).n, 1)
        self.assertNotIn("bfs", table.series())

    def test_credit_domain(self):
        spec = ExperimentSpec.from_dict({
            "name": "credit", "domain": {"kind": "simple_credit"},
            "policies": [{"kind": "greedy"}, {"kind": "bfs"}], "resources": [1, 2], "n_states": 3, "seed": 2,
        })
        table = compare_policies(spec)
        self.assertAlmostEqual(table.cell("greedy", 1).mean, table.cell("bfs", 1).mean, places=9)
        self.assertGreaterEqual(table.cell("bfs", 2).mean, table.cell("greedy", 2).mean)

    @unittest.skipUnless(SLOW, "set AGENCY_SLOW_TESTS=1")
    def test_credit_benchmark_ordering(self):
        spec = ExperimentSpec.from_dict({
            "name": "credit_bench", "domain": {"kind": "simple_credit"},
            "policies": [{"kind": "random"}, {"kind": "greedy"}, {"kind": "mcts", "iterations": 300},
                         {"kind": "bfs"}],
            "resources": [1, 2, 3], "n_states": 20, "seed": 9,
        })
        table = compare_policies(spec)
        for r in (1, 2, 3):
            bfs = table.cell("bfs", r).mean
            for other in ("random", "greedy", "mcts"):
                self.assertGreaterEqual(bfs + 1e-9, table.cell(other, r).mean, f"{other} r={r}")
            self.assertGreaterEqual(table.cell("greedy", r).mean, table.cell("random", r).mean)


class TestEmitReport(TempDirMixin, unittest.TestCase):

    def read(self, path):
        with open(path, "rb") as f:
            return f.read()

    def test_empty_table_writes_header_only(self):
        paths = emit_report(ComparisonTable([]), "empty", ["csv"], self.tmp)
        self.assertEqual(self.read(paths[0]).decode(), ",".join(COMPARISON_COLUMNS) + "\n")
        self.assertTrue(os.path.exists(self.path("empty.meta.json")))

    def test_rows_and_files(self):
        spec = fig1_spec(policies=[{"kind": "greedy"}, {"kind": "bfs"}])
        paths = emit_report(compare_policies(spec), "fig1", ["csv", "svg"], self.tmp)
        self.assertEqual(sorted(os.path.basename(p) for p in paths), ["fig1.csv", "fig1.meta.json", "fig1.svg"])
        frame = pd.read_csv(self.path("fig1.csv"))
        self.assertEqual(list(frame.columns), COMPARISON_COLUMNS)
        self.assertEqual(len(frame), 6)
        with open(self.path("fig1.meta.json"), "r", encoding="utf-8") as f:
            meta = json.load(f)
        self.assertEqual(meta["metadata"]["experiment"]["seed"], 5)
        self.assertEqual(meta["failures"], [])

    def test_same_report_same_bytes(self):
        spec = fig1_spec()
        emit_report(compare_policies(spec), "a", ["csv"], self.path("one"))
        emit_report(compare_policies(spec), "a", ["csv"], self.path("two"))
        for name in ("a.csv", "a.meta.json"):
            self.assertEqual(self.read(os.path.join(self.tmp, "one", name)),
                             self.read(os.path.join(self.tmp, "two", name)))

    def test_unknown_format(self):
        with self.assertRaises(ConfigError):
            emit_report(ComparisonTable([]), "x", ["pdf"], self.tmp)


class TestRecidivismReports(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        records = compas_records(300, seed=8)
        models = train_risk_models(records, ForestConfig(n_trees=10, max_depth=4, min_leaf=5, seed=3))
        cls.domains = {variant: RecidivismDomain(records, models, variant, min_initial_score=1)
                       for variant in (FULL, BLIND)}

    def spec(self, **overrides):
        data = {"name": "recid", "domain": {"kind": "recidivism"}, "policies": [{"kind": "greedy"}],
                "resources": [0, 2], "n_states": 40, "seed": 4}
        data.update(overrides)
        return ExperimentSpec.from_dict(data)

    def test_zero_steps_leave_risk_unchanged(self):
        report = group_agency_report(self.spec(), domains=self.domains)
        zero = [row for row in report.rows if row.k == 0]
        self.assertTrue(zero)
        for row in zero:
            self.assertAlmostEqual(row.mean_after, row.mean_before, places=12)
        self.assertEqual({row.variant for row in report.rows}, {FULL, BLIND})
        for row in report.rows:
            self.assertEqual(row.small_sample_flag, row.n < 30)
        self.assertEqual(list(report.to_frame().columns)[:3], ["group", "variant", "k"])

    def test_group_filter(self):
        report = group_agency_report(self.spec(), groups=["Caucasian Male"], domains=self.domains)
        self.assertTrue(all(row.group == "Caucasian Male" for row in report.rows))

    def test_one_table_per_variant(self):
        tables = run_experiment(self.spec(resources=[1], n_states=5), domains=self.domains)
        self.assertEqual(sorted(tables), ["recid_blind", "recid_full"])
        for table in tables.values():
            self.assertEqual(table.metadata["objective"], "minimize")
            mean = table.cell("greedy", 1).mean
            self.assertTrue(1.0 <= mean <= 10.0)

    def test_needs_recidivism_domain(self):
        with self.assertRaises(ConfigError):
            group_agency_report(fig1_spec(), domains=self.domains)


if __name__ == '__main__':
    unittest.main()
