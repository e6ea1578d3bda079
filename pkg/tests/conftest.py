import datetime

import numpy as np
import pytest

from epicast.core import UnivariateSeries, load_india_panel, load_india_series

START = datetime.date(2020, 3, 14)


def make_series(values, name="test", start=START):
    dates = [start + datetime.timedelta(days=i) for i in range(len(values))]
    return UnivariateSeries(name, dates, values)


def linear_series(n, intercept=2.0, slope=3.0, name="linear"):
    t = np.arange(1, n + 1, dtype=float)
    return make_series(intercept + slope * t, name=name)


@pytest.fixture(scope="session")
def india():
    return load_india_series()


@pytest.fixture(scope="session")
def panel():
    return load_india_panel()
