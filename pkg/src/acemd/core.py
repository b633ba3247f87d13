"""Shared domain types, error classes and series validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime
from typing import Iterable, Optional

import numpy as np

MIN_DECOMPOSE_LENGTH = 8
SPLINE_BOUNDARIES = ("mirror", "clamp")


# --------------------------------------------------------------------------
# Errors. Every class carries the process exit code used by the CLI.
# --------------------------------------------------------------------------


class AcemdError(ValueError):
    exit_code = 1


class ParseError(AcemdError):
    exit_code = 3


class DuplicateDate(AcemdError):
    exit_code = 4


class NonPositivePrice(AcemdError):
    exit_code = 5


class NonFiniteValue(AcemdError):
    exit_code = 6


class NonUniformSampling(AcemdError):
    exit_code = 7


class TooShort(AcemdError):
    exit_code = 8


class InsufficientExtrema(AcemdError):
    exit_code = 9


class ModeCountMismatch(AcemdError):
    exit_code = 10


class DateRangeMismatch(AcemdError):
    exit_code = 11


class IndexOutOfRange(AcemdError):
    exit_code = 12


class DegenerateSeries(AcemdError):
    exit_code = 13


class TooFewModes(AcemdError):
    exit_code = 14


class DegenerateFit(AcemdError):
    exit_code = 15


class InsufficientValidSamples(AcemdError):
    exit_code = 16


class InsufficientConditionalSamples(AcemdError):
    exit_code = 17


class NoModes(AcemdError):
    exit_code = 18


class EmptyInput(AcemdError):
    exit_code = 19


# --------------------------------------------------------------------------
# Types
# --------------------------------------------------------------------------


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled real series.

    The time base is the observation index; ``step`` is the sampling interval
    expressed in the caller's unit (1.0 = one observation). ``dates`` keeps
    the calendar labels of the observations when they are known.
    """

    values: np.ndarray
    start_time: Optional[datetime | date] = None
    step: float = 1.0
    label: str = ""
    dates: Optional[tuple] = None

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.ndim != 1:
            raise ValueError("TimeSeries values must be one-dimensional")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NonFiniteValue(f"non-finite value at position {bad}")
        if not (self.step > 0 and math.isfinite(self.step)):
            raise NonUniformSampling(f"step must be positive, got {self.step}")
        if self.dates is not None and len(self.dates) != values.size:
            raise ValueError("dates and values differ in length")
        object.__setattr__(self, "values", values)
        if self.dates is not None:
            object.__setattr__(self, "dates", tuple(self.dates))

    def __len__(self) -> int:
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def with_values(self, values, label: Optional[str] = None) -> "TimeSeries":
        """Same time index, new values."""
        return TimeSeries(
            values,
            start_time=self.start_time,
            step=self.step,
            label=self.label if label is None else label,
            dates=self.dates,
        )

    def window(self, start: int, stop: int) -> "TimeSeries":
        dates = None if self.dates is None else self.dates[start:stop]
        start_time = self.start_time if dates is None else dates[0]
        return TimeSeries(
            self.values[start:stop],
            start_time=start_time,
            step=self.step,
            label=self.label,
            dates=dates,
        )


@dataclass(frozen=True)
class EnsembleConfig:
    """Settings shared by every decomposition routine.

    ``ensemble_size`` is the number of noise draws; the complementary methods
    run two trials (+w and -w) per draw. ``noise_sigma`` is relative: to
    ``std(x)`` for EEMD/CEEMD, to the pilot amplitude for ACE-EMD.
    """

    ensemble_size: int = 100
    noise_sigma: float = 0.2
    seed: int = 42
    max_modes: Optional[int] = None
    sift_max_iters: int = 50
    sift_sd_tol: float = 0.2
    spline_boundary: str = "mirror"

    def __post_init__(self):
        if int(self.ensemble_size) != self.ensemble_size or self.ensemble_size < 1:
            raise ValueError("ensemble_size must be a positive integer")
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise ValueError("noise_sigma must be a finite nonnegative number")
        if self.max_modes is not None and (
            int(self.max_modes) != self.max_modes or self.max_modes < 1
        ):
            raise ValueError("max_modes must be a positive integer or None")
        if int(self.sift_max_iters) != self.sift_max_iters or self.sift_max_iters < 1:
            raise ValueError("sift_max_iters must be a positive integer")
        if not self.sift_sd_tol > 0:
            raise ValueError("sift_sd_tol must be positive")
        if self.spline_boundary not in SPLINE_BOUNDARIES:
            raise ValueError(f"spline_boundary must be one of {SPLINE_BOUNDARIES}")
        if int(self.seed) != self.seed:
            raise ValueError("seed must be an integer")

    def to_dict(self) -> dict:
        return {
            "ensemble_size": int(self.ensemble_size),
            "noise_sigma": float(self.noise_sigma),
            "seed": int(self.seed),
            "max_modes": None if self.max_modes is None else int(self.max_modes),
            "sift_max_iters": int(self.sift_max_iters),
            "sift_sd_tol": float(self.sift_sd_tol),
            "spline_boundary": self.spline_boundary,
        }


@dataclass(frozen=True)
class SiftReport:
    iterations_used: int
    sd_final: float
    num_extrema: int
    num_zero_crossings: int
    envelope_mean_maxabs: float

    @property
    def imf_check(self) -> bool:
        return abs(self.num_extrema - self.num_zero_crossings) <= 1

    def to_dict(self) -> dict:
        return {
            "iterations_used": self.iterations_used,
            "sd_final": self.sd_final,
            "num_extrema": self.num_extrema,
            "num_zero_crossings": self.num_zero_crossings,
            "envelope_mean_maxabs": self.envelope_mean_maxabs,
            "imf_check": self.imf_check,
        }


@dataclass(frozen=True, eq=False)
class Decomposition:
    """IMFs ``c_1..c_n`` (row 0 is the fastest) plus the residual."""

    source: TimeSeries
    imfs: np.ndarray
    residual: np.ndarray
    method: str = "EMD"
    config: Optional[EnsembleConfig] = None
    reports: tuple = field(default_factory=tuple)

    def __post_init__(self):
        n = len(self.source)
        imfs = np.array(self.imfs, dtype=np.float64, copy=True).reshape(-1, n)
        imfs.setflags(write=False)
        residual = _frozen_array(self.residual)
        if residual.shape != (n,):
            raise ValueError("residual length differs from the source")
        object.__setattr__(self, "imfs", imfs)
        object.__setattr__(self, "residual", residual)
        object.__setattr__(self, "reports", tuple(self.reports))

    @property
    def n_imfs(self) -> int:
        return self.imfs.shape[0]

    @property
    def modes(self) -> np.ndarray:
        """IMFs followed by the residual as the (n+1)-th mode."""
        return np.vstack([self.imfs, self.residual[None, :]])

    def reconstruction(self) -> np.ndarray:
        return self.imfs.sum(axis=0) + self.residual

    def reconstruction_error(self) -> float:
        """Max-norm reconstruction error relative to max|x|."""
        x = self.source.values
        scale = np.max(np.abs(x))
        err = np.max(np.abs(self.reconstruction() - x))
        return float(err / scale) if scale > 0 else float(err)


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def as_array(x) -> np.ndarray:
    """Float64 view of a TimeSeries or array-like."""
    if isinstance(x, TimeSeries):
        return x.values
    return np.asarray(x, dtype=np.float64)


def as_series(x, label: str = "") -> TimeSeries:
    if isinstance(x, TimeSeries):
        return x
    return TimeSeries(np.asarray(x, dtype=np.float64), label=label)


def validate_series(
    raw: Iterable[tuple],
    label: str = "",
    gap_policy: str = "observation",
    min_length: int = MIN_DECOMPOSE_LENGTH,
) -> TimeSeries:
    """Build a TimeSeries from ``(timestamp, value)`` pairs.

    With ``gap_policy="observation"`` any strictly increasing sequence of
    timestamps is accepted and the step is one observation (weekends and
    holidays are not gaps). ``gap_policy="calendar"`` additionally requires
    equal calendar spacing and reports the step in days.
    """
    pairs = list(raw)
    if not pairs:
        raise EmptyInput("no observations")
    stamps = [p[0] for p in pairs]
    values = np.array([float(p[1]) for p in pairs], dtype=np.float64)

    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise NonFiniteValue(f"non-finite value at {stamps[bad[0]]}")

    for prev, cur in zip(stamps, stamps[1:]):
        if cur == prev:
            raise DuplicateDate(f"duplicate timestamp {cur}")
        if cur < prev:
            raise NonUniformSampling(f"timestamps out of order at {cur}")

    step = 1.0
    if gap_policy == "calendar" and len(stamps) > 1:
        deltas = {_days_between(a, b) for a, b in zip(stamps, stamps[1:])}
        if len(deltas) != 1:
            raise NonUniformSampling(f"unequal calendar spacing: {sorted(deltas)}")
        step = deltas.pop()
    elif gap_policy not in ("observation", "calendar"):
        raise ValueError(f"unknown gap policy {gap_policy!r}")

    if values.size < min_length:
        raise TooShort(f"{values.size} observations, need at least {min_length}")
    return TimeSeries(values, start_time=stamps[0], step=step, label=label, dates=stamps)


def _days_between(a, b) -> float:
    delta = b - a
    if hasattr(delta, "total_seconds"):
        return delta.total_seconds() / 86400.0
    return float(delta)


def log_transform(s) -> TimeSeries:
    """Natural log of a price series, keeping the time index."""
    series = as_series(s)
    if np.any(series.values <= 0):
        pos = int(np.flatnonzero(series.values <= 0)[0])
        raise NonPositivePrice(f"non-positive price at position {pos}")
    return series.with_values(np.log(series.values))


def require_length(x: np.ndarray, n: int = MIN_DECOMPOSE_LENGTH) -> None:
    if x.size < n:
        raise TooShort(f"series of length {x.size}, need at least {n}")


def interior(n: int, fraction: float) -> slice:
    """Central slice keeping ``fraction`` of ``n`` samples."""
    cut = int(round(n * (1.0 - fraction) / 2.0))
    return slice(cut, n - cut)
