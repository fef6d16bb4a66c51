import unittest

import numpy as np

from src.config.exceptions import QueryCacheLoadError, SchemaMismatchError
from src.config.settings import DATA_DIR
from src.decision.features import FeatureSchema, FeatureSpec
from src.decision.query_cache import QueryCache, load_query_cache
from src.domains.credit import QUESTIONNAIRE_SCHEMA, synthetic_fico
from tests.fixtures import TempDirMixin

LINE = FeatureSchema((FeatureSpec.numeric("x", 0.0, 4.0),))
SAMPLE = DATA_DIR / "cache" / "questionnaire_sample.csv"


class TestQueryCache(unittest.TestCase):

    def setUp(self):
        self.cache = QueryCache(LINE, [[0.0], [2.0], [4.0]], [1.0, 2.0, 3.0])

    def test_exact_point_returns_its_decision(self):
        self.assertEqual(self.cache.evaluate([2.0]), 2.0)
        self.assertEqual(self.cache.nearest([4.0]), (2, 0.0))

    def test_nearest_point_wins(self):
        self.assertEqual(self.cache.evaluate([3.5]), 3.0)

    def test_tie_goes_to_lowest_row(self):
        row, distance = self.cache.nearest([1.0])
        self.assertEqual(row, 0)
        self.assertAlmostEqual(distance, 0.25)
        self.assertEqual(self.cache.evaluate([3.0]), 2.0)

    def test_tie_with_duplicate_points(self):
        cache = QueryCache(LINE, [[1.0], [3.0], [1.0]], [5.0, 6.0, 7.0])
        self.assertEqual(cache.nearest([1.0])[0], 0)

    def test_large_cache_matches_brute_force(self):
        rng = np.random.default_rng(4)
        points = rng.integers(0, 5, size=(200, 1)).astype(float)
        cache = QueryCache(LINE, points, np.arange(1, 201, dtype=float))
        for query in (0.3, 1.5, 2.5, 3.9):
            distances = np.abs(points[:, 0] - query)
            expected = int(np.nonzero(distances == distances.min())[0][0])
            self.assertEqual(cache.nearest([query])[0], expected)

    def test_empty_cache_rejected(self):
        with self.assertRaises(QueryCacheLoadError):
            QueryCache(LINE, np.zeros((0, 1)), [])

    def test_wrong_width_rejected(self):
        with self.assertRaises(SchemaMismatchError):
            QueryCache(LINE, [[0.0, 1.0]], [1.0])


class TestLoadQueryCache(TempDirMixin, unittest.TestCase):

    def write(self, name, text):
        path = self.path(name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_sample_cache_agrees_with_synthetic_score(self):
        cache = load_query_cache(SAMPLE, QUESTIONNAIRE_SCHEMA)
        self.assertEqual(len(cache), 12)
        for point, decision in zip(cache.points, cache.decisions):
            self.assertEqual(cache.evaluate(point), decision)
            self.assertEqual(synthetic_fico(point.astype(int).tolist()), int(decision))

    def test_missing_file(self):
        with self.assertRaises(QueryCacheLoadError):
            load_query_cache(self.path("absent.csv"), LINE)

    def test_missing_column(self):
        path = self.write("cache.csv", "x\n1.0\n")
        with self.assertRaises(QueryCacheLoadError):
            load_query_cache(path, LINE)

    def test_non_positive_decision_names_row(self):
        path = self.write("cache.csv", "x,decision\n1.0,2.0\n2.0,0\n")
        with self.assertRaises(QueryCacheLoadError) as ctx:
            load_query_cache(path, LINE)
        self.assertEqual(ctx.exception.row, 2)
        self.assertIn("row 2", str(ctx.exception))

    def test_malformed_value_names_row(self):
        path = self.write("cache.csv", "x,decision\n1.0,2.0\n2.0,3.0\nabc,4.0\n")
        with self.assertRaises(QueryCacheLoadError) as ctx:
            load_query_cache(path, LINE)
        self.assertEqual(ctx.exception.row, 3)

    def test_out_of_schema_point_names_row(self):
        path = self.write("cache.csv", "x,decision\n9.0,2.0\n")
        with self.assertRaises(QueryCacheLoadError) as ctx:
            load_query_cache(path, LINE)
        self.assertEqual(ctx.exception.row, 1)

    def test_save_reloads_identically(self):
        cache = load_query_cache(SAMPLE, QUESTIONNAIRE_SCHEMA)
        cache.save(self.path("copy.csv"))
        copy = load_query_cache(self.path("copy.csv"), QUESTIONNAIRE_SCHEMA)
        np.testing.assert_array_equal(copy.points, cache.points)
        np.testing.assert_array_equal(copy.decisions, cache.decisions)


if __name__ == '__main__':
    unittest.main()
