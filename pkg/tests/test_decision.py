import unittest

import numpy as np

from src.config.exceptions import ConfigError, DecisionValueError, SchemaMismatchError, ShapeContractError
from src.decision.base import CallableDecision, ConstantDecision
from src.decision.features import FeatureSchema, FeatureSpec, FeatureVector
from src.decision.synthetic import load_presets, make_preset, make_synthetic


def small_schema():
    return FeatureSchema((
        FeatureSpec.numeric("x", 0.0, 10.0),
        FeatureSpec.ordinal("level", 3, ("low", "mid", "high")),
        FeatureSpec.categorical("color", ("red", "green")),
    ))


class TestFeatures(unittest.TestCase):

    def test_validate_accepts_values_in_range(self):
        values = small_schema().validate([2.5, 2, 1])
        self.assertEqual(values.dtype, np.float64)
        self.assertEqual(values.tolist(), [2.5, 2.0, 1.0])

    def test_validate_rejects_wrong_length(self):
        with self.assertRaises(SchemaMismatchError):
            small_schema().validate([1.0, 0])

    def test_validate_rejects_out_of_range(self):
        with self.assertRaises(SchemaMismatchError):
            small_schema().validate([11.0, 0, 0])
        with self.assertRaises(SchemaMismatchError):
            small_schema().validate([1.0, 3, 0])

    def test_vector_replace_and_lookup(self):
        vector = FeatureVector.of(small_schema(), [1.0, 0, 1])
        moved = vector.replace(level=2)
        self.assertEqual(moved.get("level"), 2.0)
        self.assertEqual(vector.get("level"), 0.0)
        self.assertEqual(moved.as_dict()["x"], 1.0)

    def test_subset_keeps_order_of_names(self):
        subset = small_schema().subset(["color", "x"])
        self.assertEqual(subset.names, ["color", "x"])

    def test_ordinal_levels(self):
        spec = FeatureSpec.ordinal("level", 4)
        self.assertEqual(spec.levels, 4)
        self.assertTrue(spec.is_discrete)


class TestDecisionFunctions(unittest.TestCase):

    def test_constant_decision_rejects_non_positive(self):
        with self.assertRaises(DecisionValueError):
            ConstantDecision(small_schema(), 0.0)

    def test_evaluate_checks_positivity(self):
        schema = FeatureSchema((FeatureSpec.numeric("x", -5.0, 5.0),))
        df = CallableDecision(schema, lambda v: float(v[0]), name="identity")
        self.assertEqual(df.evaluate([2.0]), 2.0)
        with self.assertRaises(DecisionValueError):
            df.evaluate([-1.0])

    def test_evaluate_checks_schema(self):
        df = ConstantDecision(small_schema(), 3.0)
        with self.assertRaises(SchemaMismatchError):
            df.evaluate([1.0])

    def test_gradient_of_linear_function(self):
        df = make_synthetic("linear", {"weights": [0.5, 0.25]}, [[0.0, 8.0], [0.0, 8.0]])
        grad = df.gradient([2.0, 3.0], 1e-5)
        np.testing.assert_allclose(grad, [0.5, 0.25], atol=1e-8)

    def test_repeated_evaluation_is_bitwise_identical(self):
        presets = load_presets()
        rng = np.random.default_rng(5)
        for name in presets:
            df = make_preset(name, presets)
            box = np.asarray(df.box, dtype=np.float64)
            for _ in range(20):
                x = rng.uniform(box[:, 0], box[:, 1]).tolist()
                first = df.evaluate(x)
                self.assertEqual([df.evaluate(x) for _ in range(5)], [first] * 5, name)


class TestSyntheticPresets(unittest.TestCase):

    def test_presets_load(self):
        presets = load_presets()
        for name in ("fig1_default", "fig2_default", "linear_default", "radial_default", "logistic_default"):
            self.assertIn(name, presets)
            df = make_preset(name, presets)
            self.assertGreater(df.evaluate(presets[name]["domain"]["start"]), 0.0)

    def test_bimodal_peaks(self):
        df = make_preset("fig1_default")
        self.assertAlmostEqual(df.evaluate([3.0]), 4.5, places=6)
        self.assertGreater(df.evaluate([-2.0]), 2.4)
        self.assertLess(df.evaluate([0.0]), df.evaluate([-1.0]))
        self.assertEqual(df.local_maxima(), [-2.0, 3.0])

    def test_curved_function_values(self):
        df = make_preset("fig2_default")
        self.assertAlmostEqual(df.evaluate([0.0, 0.0]), 1.0)
        self.assertAlmostEqual(df.evaluate([1.0, 2.0]), 1.0 + 1.0 + 0.3 * 4.0)

    def test_unknown_preset(self):
        with self.assertRaises(ConfigError):
            make_preset("no_such_preset")

    def test_bimodal_equal_heights_rejected(self):
        params = dict(load_presets()["fig1_default"]["params"], right_height=2.0)
        with self.assertRaises(ShapeContractError):
            make_synthetic("bimodal1d", params, [[-6.0, 8.0]])

    def test_bimodal_overlapping_peaks_rejected(self):
        params = dict(load_presets()["fig1_default"]["params"], left_width=2.0, right_width=2.0)
        with self.assertRaises(ShapeContractError):
            make_synthetic("bimodal1d", params, [[-6.0, 8.0]])

    def test_curved_needs_nonnegative_box(self):
        with self.assertRaises(ShapeContractError):
            make_synthetic("curved2d_monotone", {"a": 1.0, "b": 0.3}, [[-1.0, 8.0], [0.0, 8.0]])

    def test_linear_must_stay_positive(self):
        with self.assertRaises(ShapeContractError):
            make_synthetic("linear", {"weights": [-1.0]}, [[0.0, 10.0]])

    def test_unknown_kind(self):
        with self.assertRaises(ShapeContractError):
            make_synthetic("wavy", {}, [[0.0, 1.0]])


if __name__ == '__main__':
    unittest.main()
