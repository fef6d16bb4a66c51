import dataclasses
import unittest

import numpy as np

from src.config.exceptions import ConfigError, DataLoadError
from src.decision.forest import ForestConfig
from src.domains.recidivism import (
    BLIND, FULL, FULL_SCHEMA, STOP, bucket_score, build_recidivism_mdp, record_features, train_risk_models,
    variant_schema,
)
from src.domains.registry import RecidivismDomain
from src.ingestion.compas_loader import ChargeDictionary, CompasLoader, parse_degree
from src.policies.baselines import greedy_action
from tests.fixtures import compas_frame, compas_records

FOREST = ForestConfig(n_trees=20, max_depth=5, min_leaf=5, seed=13)


class TestCompasLoader(unittest.TestCase):

    def test_loads_fixture(self):
        dataset = CompasLoader().load_frame(compas_frame(50).astype(str))
        self.assertEqual(len(dataset), 50)
        self.assertEqual(dataset.dropped, 0)
        self.assertIn(dataset.records[0].charge_degree, ("F3", "M1"))

    def test_missing_column_is_named(self):
        frame = compas_frame(5).drop(columns=["priors_count"]).astype(str)
        with self.assertRaises(DataLoadError) as ctx:
            CompasLoader().load_frame(frame)
        self.assertEqual(ctx.exception.column, "priors_count")

    def test_custom_label_column(self):
        frame = compas_frame(5).rename(columns={"two_year_recid": "is_recid"}).astype(str)
        with self.assertRaises(DataLoadError):
            CompasLoader().load_frame(frame)
        self.assertEqual(len(CompasLoader(label_column="is_recid").load_frame(frame)), 5)

    def test_bad_rows_are_dropped_and_counts_clamped(self):
        frame = compas_frame(4).astype(str)
        frame.loc[0, "c_charge_degree"] = "(X9)"
        frame.loc[1, "age"] = ""
        frame.loc[2, "priors_count"] = "55"
        frame.loc[3, "race"] = "Martian"
        dataset = CompasLoader().load_frame(frame)
        self.assertEqual(dataset.dropped, 2)
        self.assertEqual(dataset.clamped, 1)
        self.assertEqual(dataset.records[0].priors_count, 40)
        self.assertEqual(dataset.records[1].race, "Other")

    def test_charge_categories(self):
        dictionary = ChargeDictionary.load()
        self.assertEqual(dictionary.categorize("Possession of Cannabis"), "drug")
        self.assertEqual(dictionary.categorize("Aggravated Battery"), "violent")
        self.assertEqual(dictionary.categorize("Driving License Suspended"), "other")

    def test_degree_codes(self):
        self.assertEqual(parse_degree("(F3)"), "F3")
        self.assertEqual(parse_degree("F"), "F3")
        self.assertEqual(parse_degree("M"), "M1")
        self.assertEqual(parse_degree("(MO3)"), "M2")
        self.assertIsNone(parse_degree("(X9)"))


class TestRiskScore(unittest.TestCase):

    def test_bucket_edges(self):
        self.assertEqual(bucket_score(0.0), 1)
        self.assertEqual(bucket_score(0.0999), 1)
        self.assertEqual(bucket_score(0.1), 2)
        self.assertEqual(bucket_score(0.95), 10)
        self.assertEqual(bucket_score(1.0), 10)
        with self.assertRaises(ValueError):
            bucket_score(1.2)

    def test_blind_schema_drops_protected_features(self):
        names = variant_schema(BLIND).names
        self.assertNotIn("race", names)
        self.assertNotIn("sex", names)
        self.assertEqual(len(names), len(FULL_SCHEMA) - 2)
        with self.assertRaises(ConfigError):
            variant_schema("partial")

    def test_needs_records(self):
        with self.assertRaises(ConfigError):
            train_risk_models(compas_records(3), FOREST)


class TestRiskModels(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.records = compas_records()
        cls.models = train_risk_models(cls.records, FOREST)

    def test_held_out_auc(self):
        for variant in (FULL, BLIND):
            self.assertGreater(self.models.metrics[variant]["auc"], 0.6, variant)
            self.assertEqual(self.models.metrics[variant]["n_test"], 100)

    def test_training_is_reproducible(self):
        again = train_risk_models(self.records, FOREST)
        self.assertEqual(again.full.trees, self.models.full.trees)
        self.assertEqual(again.metrics, self.models.metrics)

    def test_blind_score_ignores_race_and_sex(self):
        decision = self.models.decision(BLIND)
        for record in self.records[:40]:
            swapped = dataclasses.replace(record, race="Caucasian", sex="Female")
            self.assertEqual(decision.risk_score(record_features(record).values),
                             decision.risk_score(record_features(swapped).values))

    def test_decision_is_eleven_minus_risk(self):
        decision = self.models.decision(FULL)
        values = record_features(self.records[0]).values
        self.assertEqual(decision.evaluate(values), 11.0 - decision.risk_score(values))

    def test_action_model(self):
        record = dataclasses.replace(self.records[0], priors_count=0, charge_type="drug")
        mdp = build_recidivism_mdp(self.models.full, FULL, record, 2)
        self.assertEqual(len(mdp.actions), 15)
        legal = [a.label for a in mdp.legal_actions(mdp.initial_state)]
        self.assertNotIn("charge_type := drug", legal)
        self.assertNotIn("priors_count -1", legal)
        self.assertIn("priors_count +1", legal)

        action = greedy_action(mdp, mdp.initial_state)
        after = mdp.enumerate_outcomes(mdp.initial_state, action)[0].state
        for immutable in ("age", "race", "sex"):
            self.assertEqual(after.features.get(immutable), mdp.initial_state.features.get(immutable))
        self.assertEqual(after.resources, 1)

    def test_stop_action(self):
        mdp = build_recidivism_mdp(self.models.blind, BLIND, self.records[0], 3, allow_stop=True)
        self.assertEqual(mdp.actions[-1].label, STOP)
        stopped = mdp.enumerate_outcomes(mdp.initial_state, mdp.actions[-1])[0].state
        self.assertTrue(mdp.is_terminal(stopped))

    def test_domain_cohort_and_starts(self):
        domain = RecidivismDomain(self.records, self.models, FULL, min_initial_score=1)
        self.assertEqual(len(domain.cohort()), len(self.records))
        starts = domain.sample_starts(10, np.random.default_rng(1))
        self.assertEqual(len(starts), 10)
        self.assertEqual(domain.report_value(7.0), 4.0)

        strict = RecidivismDomain(self.records, self.models, FULL, min_initial_score=11)
        with self.assertRaises(ConfigError):
            strict.sample_starts(5, np.random.default_rng(1))


if __name__ == '__main__':
    unittest.main()
