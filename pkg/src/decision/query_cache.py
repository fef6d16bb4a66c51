"""
Nearest-neighbour decision function over stored (features, decision) queries.

A query returns the decision of the closest cached point under weighted L1
distance on schema-normalized features; ties go to the lowest row.
"""
import logging
from pathlib import Path
from typing import Optional, Sequence, Tuple

import faiss
import numpy as np
import pandas as pd

from src.config.exceptions import QueryCacheLoadError, SchemaMismatchError
from src.decision.base import DecisionFunction
from src.decision.features import FeatureSchema

logger = logging.getLogger(__name__)

DECISION_COLUMN = "decision"
SHORTLIST = 32
# float32 shortlist distances may be off by this much from the exact ones
_SHORTLIST_SLACK = 1e-4


class QueryCache(DecisionFunction):
    def __init__(self, schema: FeatureSchema, points, decisions, name: str = "query_cache"):
        """Initialize the cache and its faiss index
        Args:
            schema: schema of every cached point
            points: (n, d) feature matrix
            decisions: n positive decision values
        """
        super().__init__(schema, name=name)
        self.points = np.asarray(points, dtype=np.float64)
        self.decisions = np.asarray(decisions, dtype=np.float64)
        if self.points.shape[0] == 0:
            raise QueryCacheLoadError("query cache is empty")
        if self.points.ndim != 2 or self.points.shape[1] != len(schema):
            raise SchemaMismatchError(f"cache points must have {len(schema)} columns")
        if np.any(self.decisions <= 0) or not np.all(np.isfinite(self.decisions)):
            row = int(np.nonzero((self.decisions <= 0) | ~np.isfinite(self.decisions))[0][0]) + 1
            raise QueryCacheLoadError("decision values must be positive", row=row)

        span = schema.highs - schema.lows
        self._scale = np.where(span > 0, schema.weights / np.where(span > 0, span, 1.0), 0.0)
        self._offset = schema.lows
        self._normalized = self._normalize(self.points)

        self.dimension = len(schema)
        self.index = faiss.IndexFlat(self.dimension, faiss.METRIC_L1)
        self.index.add(self._normalized.astype("float32"))

    def __len__(self) -> int:
        return self.points.shape[0]

    def _normalize(self, values: np.ndarray) -> np.ndarray:
        return (values - self._offset) * self._scale

    def nearest(self, values: Sequence[float]) -> Tuple[int, float]:
        """Return (row index, exact distance) of the nearest cached point"""
        query = self._normalize(np.asarray(values, dtype=np.float64))
        k = min(SHORTLIST, len(self))
        distances, indices = self.index.search(query[None, :].astype("float32"), k)
        candidates = np.sort(indices[0][indices[0] != -1])
        exact = np.abs(self._normalized[candidates] - query).sum(axis=1)
        best = float(exact.min())
        if k < len(self) and float(distances[0][-1]) <= best + _SHORTLIST_SLACK:
            # shortlist may have cut off tied or closer points
            candidates = np.arange(len(self))
            exact = np.abs(self._normalized - query).sum(axis=1)
            best = float(exact.min())
        position = int(np.nonzero(exact == best)[0][0])
        return int(candidates[position]), best

    def evaluate_array(self, values: np.ndarray) -> float:
        row, _ = self.nearest(values)
        return float(self.decisions[row])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.points, columns=self.schema.names)
        frame[DECISION_COLUMN] = self.decisions
        return frame

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.17g", lineterminator="\n")

    def describe(self) -> dict:
        return {"name": self.name, "type": "QueryCache", "points": len(self)}


def load_query_cache(path, schema: FeatureSchema, name: Optional[str] = None) -> QueryCache:
    """Load a query-cache CSV (feature columns then `decision`)

    Rows are numbered from 1, the first data row after the header.
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except FileNotFoundError as e:
        raise QueryCacheLoadError(f"query cache file not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise QueryCacheLoadError(f"query cache file is empty: {path}") from e
    except pd.errors.ParserError as e:
        raise QueryCacheLoadError(f"malformed query cache {path}: {e}") from e

    expected = schema.names + [DECISION_COLUMN]
    missing = [c for c in expected if c not in frame.columns]
    if missing:
        raise QueryCacheLoadError(f"query cache is missing columns {missing}")
    if frame.empty:
        raise QueryCacheLoadError(f"query cache has no data rows: {path}")

    numeric = frame[expected].apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna().any(axis=1)
    if bad.any():
        row = int(np.nonzero(bad.to_numpy())[0][0]) + 1
        raise QueryCacheLoadError("malformed or missing value", row=row)

    values = numeric.to_numpy(dtype=np.float64)
    points, decisions = values[:, :-1], values[:, -1]
    non_positive = decisions <= 0
    if non_positive.any():
        row = int(np.nonzero(non_positive)[0][0]) + 1
        raise QueryCacheLoadError(f"non-positive decision {decisions[row - 1]}", row=row)
    for i, point in enumerate(points):
        try:
            schema.validate(point)
        except SchemaMismatchError as e:
            raise QueryCacheLoadError(str(e), row=i + 1) from e

    logger.info(f"Loaded query cache {path.name} with {len(points)} points")
    return QueryCache(schema, points, decisions, name=name or path.stem)
