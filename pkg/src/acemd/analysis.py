"""Timescale filters built from IMF subsets, and return/volatility statistics.

Volatilities are per observation (no annualization) with the unbiased
``T - 1`` denominator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import (
    Decomposition,
    EmptyInput,
    IndexOutOfRange,
    InsufficientConditionalSamples,
    TooShort,
    as_array,
)

QUARTER_WINDOW = 63
TWO_YEAR_WINDOW = 504
DEFAULT_EPSILON = 0.05


@dataclass(frozen=True, eq=False)
class FilteredSeries:
    values: np.ndarray
    kind: str
    components_used: int
    source: Decomposition

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def _check_components(d: Decomposition, m: int) -> None:
    if not 1 <= m <= d.n_imfs + 1:
        raise IndexOutOfRange(f"component count {m} outside 1..{d.n_imfs + 1}")


def low_pass(d: Decomposition, m_l: int) -> FilteredSeries:
    """Keep the slowest ``m_l`` components (the residual counts as one).

    ``x_L = x - sum_{j=1}^{n - m_l + 1} c_j``.
    """
    _check_components(d, m_l)
    drop = d.n_imfs - m_l + 1
    values = d.source.values - d.imfs[:drop].sum(axis=0)
    return FilteredSeries(values, "low_pass", m_l, d)


def high_pass(d: Decomposition, m_h: int) -> FilteredSeries:
    """Sum of the fastest ``m_h`` components; ``m_h = n + 1`` adds the residual."""
    _check_components(d, m_h)
    if m_h == d.n_imfs + 1:
        values = d.imfs.sum(axis=0) + d.residual
    else:
        values = d.imfs[:m_h].sum(axis=0)
    return FilteredSeries(values, "high_pass", m_h, d)


def log_returns(x) -> np.ndarray:
    values = as_array(x)
    if values.size < 2:
        raise TooShort("need at least two observations for returns")
    return np.diff(values)


def volatility(r) -> float:
    """Sample standard deviation of returns about their mean."""
    values = as_array(r)
    if values.size < 2:
        raise TooShort("need at least two returns")
    # Shifting by the first sample keeps constant input exactly at zero.
    return float(np.std(values - values[0], ddof=1))


def rolling_volatility(r, window: int = QUARTER_WINDOW) -> np.ndarray:
    """Trailing-window volatility, one value per window end (``T - window + 1``)."""
    values = as_array(r)
    if window < 2:
        raise ValueError("window must be at least 2")
    if values.size < window:
        raise TooShort(f"{values.size} returns, window is {window}")
    windows = sliding_window_view(values, window)
    return np.std(windows - windows[:, :1], axis=1, ddof=1)


def conditional_volatility(r):
    """Volatility conditioned on the previous return being above/below the mean.

    Returns ``(sigma_plus, sigma_minus)``. Samples whose previous return
    equals the mean fall in neither set.
    """
    values = as_array(r)
    if values.size < 3:
        raise TooShort("need at least three returns")
    mu = values.mean()
    prev, cur = values[:-1], values[1:]
    up = cur[prev > mu]
    down = cur[prev < mu]
    if up.size < 2 or down.size < 2:
        raise InsufficientConditionalSamples(
            f"{up.size} upside and {down.size} downside samples, need 2 of each"
        )
    return float(np.std(up, ddof=1)), float(np.std(down, ddof=1))


def rolling_conditional_volatility(r, window: int = QUARTER_WINDOW) -> np.ndarray:
    """Rows of ``(sigma_plus, sigma_minus, sigma)`` per trailing window.

    The mean is recomputed inside each window. A window with zero volatility
    reports zeros; a window lacking samples on one side reports NaN.
    """
    values = as_array(r)
    if values.size < window:
        raise TooShort(f"{values.size} returns, window is {window}")
    windows = sliding_window_view(values, window)
    out = np.full((windows.shape[0], 3), np.nan)
    for k, w in enumerate(windows):
        sigma = volatility(w)
        out[k, 2] = sigma
        if sigma == 0:
            out[k, :2] = 0.0
            continue
        try:
            out[k, :2] = conditional_volatility(w)
        except InsufficientConditionalSamples:
            pass
    return out


def asymmetry_frequencies(rolls, epsilon: float = DEFAULT_EPSILON):
    """Fractions of windows with upside and downside volatility asymmetry.

    ``rolls`` holds ``(sigma_plus, sigma_minus, sigma)`` rows. A window is an
    upside event when ``sigma_plus - sigma_minus > epsilon * sigma`` and a
    downside event when the difference is below ``-epsilon * sigma``. Rows
    containing NaN are ignored.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rows = np.asarray(rolls, dtype=np.float64).reshape(-1, 3)
    rows = rows[np.all(np.isfinite(rows), axis=1)]
    if rows.shape[0] == 0:
        raise EmptyInput("no usable volatility windows")
    diff = rows[:, 0] - rows[:, 1]
    bound = epsilon * rows[:, 2]
    return float(np.mean(diff > bound)), float(np.mean(diff < -bound))
