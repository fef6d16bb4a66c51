import unittest

import numpy as np

from src.app.theorems import (
    chord_deviation, gradient_straightness_check, greedy_gap, greedy_matches_one_step_search, policy_value,
    run_theorem_suite,
)
from src.app.utils import format_checks
from src.decision.forest import ForestConfig
from src.decision.synthetic import make_preset
from src.domains.lattice import build_preset_mdp
from src.domains.recidivism import VARIANTS, train_risk_models
from src.domains.registry import RecidivismDomain
from src.mdp.tabular import random_tabular_mdp
from src.policies.baselines import GreedyPolicy
from src.policies.search import optimal_value
from tests.fixtures import compas_records


class TestChordDeviation(unittest.TestCase):

    def test_straight_line(self):
        points = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
        self.assertAlmostEqual(chord_deviation(points), 0.0)

    def test_corner(self):
        points = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]])
        self.assertAlmostEqual(chord_deviation(points), 1.0)


class TestStraightness(unittest.TestCase):

    def test_linear_flow_is_straight(self):
        df = make_preset("linear_default")
        report = gradient_straightness_check(df, df.box, 5, step=0.01, seed=1)
        self.assertEqual(len(report.points), 5)
        self.assertLess(report.max_deviation, 1e-6)

    def test_radial_flow_is_straight(self):
        df = make_preset("radial_default")
        report = gradient_straightness_check(df, df.box, 5, step=0.01, seed=1)
        self.assertLess(report.max_deviation, 1e-6)

    def test_curved_flow_bends(self):
        df = make_preset("fig2_default")
        report = gradient_straightness_check(df, df.box, 20, step=0.01, seed=1)
        self.assertGreater(report.max_deviation, 0.1)

    def test_seeded(self):
        df = make_preset("fig2_default")
        first = gradient_straightness_check(df, df.box, 3, step=0.05, seed=7)
        second = gradient_straightness_check(df, df.box, 3, step=0.05, seed=7)
        self.assertEqual([p.start for p in first.points], [p.start for p in second.points])


class TestGreedyGap(unittest.TestCase):

    def test_bimodal_witness(self):
        mdp = build_preset_mdp("fig1_default", resources=3)
        rows = greedy_gap(mdp, [mdp.initial_state], [1, 2, 3])
        self.assertEqual([row.witness for row in rows], [False, False, True])
        self.assertAlmostEqual(rows[2].gap, 2.0, places=6)

    def test_straight_field_has_no_gap(self):
        mdp = build_preset_mdp("linear_1d", resources=1)
        rows = greedy_gap(mdp, [mdp.initial_state], [1, 2, 3, 4, 5])
        self.assertTrue(all(abs(row.gap) <= 1e-9 for row in rows))
        self.assertEqual(rows[-1].bfs_value, 6.0)

    def test_policy_value_matches_greedy_rollout(self):
        mdp = build_preset_mdp("fig2_default", resources=6)
        self.assertAlmostEqual(policy_value(mdp, GreedyPolicy(), mdp.initial_state), 7.0, places=9)

    def test_one_resource_agreement_on_random_tabular(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            mdp = random_tabular_mdp(rng)
            state = mdp.initial_state.evolve(resources=1)
            passed, misses = greedy_matches_one_step_search(mdp, [state])
            self.assertTrue(passed)
            self.assertEqual(misses, 0)
            self.assertGreaterEqual(optimal_value(mdp, mdp.initial_state), policy_value(mdp, GreedyPolicy(),
                                                                                        mdp.initial_state))


class TestTheoremSuite(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        records = compas_records()
        models = train_risk_models(records, ForestConfig(n_trees=10, max_depth=4, min_leaf=5, seed=3))
        cls.domains = {variant: RecidivismDomain(records, models, variant, min_initial_score=1)
                       for variant in VARIANTS}

    def test_every_check_passes(self):
        report = run_theorem_suite(seed=11, n_states=10, straightness_samples=20, domains=self.domains)
        self.assertTrue(report.passed, format_checks(report))
        one_resource = {check.domain: check.detail for check in report.checks
                        if check.check == "greedy_optimal_at_one_resource"}
        self.assertEqual(one_resource["realistic_credit"], "0 of 10 households disagree")
        self.assertEqual(one_resource["recidivism_full"], "0 of 10 records disagree")
        self.assertEqual(one_resource["recidivism_blind"], "0 of 10 records disagree")
        self.assertEqual(report.metadata["recidivism_variants"], ["blind", "full"])
        names = {check.check for check in report.checks}
        self.assertEqual(names, {
            "greedy_optimal_at_one_resource", "straight_gradient_field", "no_greedy_gap_on_straight_field",
            "curved_gradient_field", "greedy_gap_witness",
        })
        self.assertIn("[PASS]", format_checks(report))
        self.assertEqual(list(report.to_frame().columns), ["check", "domain", "passed", "detail"])


if __name__ == '__main__':
    unittest.main()
