import csv
import datetime as dt

import numpy as np
import pytest


def interior_corr(a, b, fraction=0.8):
    n = len(a)
    cut = int(round(n * (1 - fraction) / 2))
    return float(np.corrcoef(a[cut : n - cut], b[cut : n - cut])[0, 1])


def write_price_csv(path, values, start=dt.date(2016, 1, 4), column="close", shuffle=None):
    rows = [(start + dt.timedelta(days=i), float(v)) for i, v in enumerate(values)]
    if shuffle is not None:
        shuffle.shuffle(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", column])
        for d, v in rows:
            w.writerow([d.isoformat(), repr(v)])
    return path


@pytest.fixture
def two_tone():
    """Fast and slow tones (period 16 and 128) on a small trend, T = 1024."""
    t = np.arange(1024, dtype=float)
    fast = np.sin(2 * np.pi * t / 16)
    slow = np.sin(2 * np.pi * t / 128)
    trend = 0.01 * t
    return t, fast, slow, trend


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "VERDICTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
