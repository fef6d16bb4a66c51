"""Shared test data: a small COMPAS-format frame and temp-dir helpers."""
import os
import shutil
import tempfile

import numpy as np
import pandas as pd

from src.ingestion.compas_loader import CompasLoader

SLOW = os.getenv("AGENCY_SLOW_TESTS") == "1"

CHARGES = ("Possession of Cannabis", "Battery", "Petit Theft", "Burglary Unoccupied Dwelling", "Driving License Suspended")
RACES = ("African-American", "Caucasian", "Hispanic", "Other")


def compas_frame(n: int = 400, seed: int = 7) -> pd.DataFrame:
    """Synthetic arrestees whose label depends on priors and age only"""
    rng = np.random.default_rng(seed)
    age = rng.integers(18, 70, size=n)
    priors = rng.integers(0, 15, size=n)
    juv_fel = rng.integers(0, 3, size=n)
    logit = 0.35 * priors - 0.06 * (age - 35) - 1.0
    label = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(int)
    return pd.DataFrame({
        "age": age,
        "sex": rng.choice(("Male", "Female"), size=n),
        "race": rng.choice(RACES, size=n),
        "juv_fel_count": juv_fel,
        "juv_misd_count": rng.integers(0, 3, size=n),
        "juv_other_count": rng.integers(0, 2, size=n),
        "priors_count": priors,
        "c_charge_degree": rng.choice(("F", "M", "(F3)", "(M1)"), size=n),
        "c_charge_desc": rng.choice(CHARGES, size=n),
        "two_year_recid": label,
    })


def compas_records(n: int = 400, seed: int = 7):
    return CompasLoader().load_frame(compas_frame(n, seed).astype(str)).records


class TempDirMixin:
    def setUp(self):
        self.tmp = tempfile.mkdtemp(prefix="agency-test-")

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def path(self, name: str) -> str:
        return os.path.join(self.tmp, name)
