import os

import numpy as np
import pandas as pd
import pytest
from hypothesis import HealthCheck, settings

from energyvol.ingest import AlignedPanel

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def make_panel(columns: dict, start="2010-01-04", tags=None) -> AlignedPanel:
    """Business-day panel from a dict of equal-length arrays."""
    n = len(next(iter(columns.values())))
    idx = pd.bdate_range(start, periods=n)
    return AlignedPanel(pd.DataFrame({k: np.asarray(v, float) for k, v in columns.items()}, index=idx),
                        dict(tags or {}))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
