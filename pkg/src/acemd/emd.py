"""Plain empirical mode decomposition by cubic-spline sifting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .core import (
    Decomposition,
    EnsembleConfig,
    InsufficientExtrema,
    SiftReport,
    as_array,
    as_series,
    require_length,
)

DEFAULT_CONFIG = EnsembleConfig()


@dataclass(frozen=True)
class ExtremaSet:
    maxima: np.ndarray
    minima: np.ndarray
    max_values: np.ndarray
    min_values: np.ndarray

    @property
    def count(self) -> int:
        return self.maxima.size + self.minima.size


def find_extrema(x) -> ExtremaSet:
    """Interior local maxima and minima of ``x``.

    A run of equal samples forms one extremum at its midpoint (rounded down)
    when both neighbours are on the same side. Maxima and minima interleave.
    """
    values = np.ascontiguousarray(as_array(x))
    if values.size < 3:
        raise ValueError("find_extrema needs at least 3 samples")
    imax, imin = _kernels.local_extrema(values)
    return ExtremaSet(imax, imin, values[imax], values[imin])


def count_zero_crossings(x) -> int:
    return int(_kernels.zero_crossings(np.ascontiguousarray(as_array(x))))


def _extend(idx: np.ndarray, n: int, boundary: Optional[str], values: np.ndarray):
    """Knot positions and values after boundary treatment."""
    idx = np.asarray(idx, dtype=np.int64)
    knots = idx.astype(np.float64)
    knot_values = values[idx]
    if boundary is None or idx.size == 0:
        return knots, knot_values
    if boundary == "mirror":
        # Reflect the two outermost extrema about the first/last sample.
        left = idx[:2][::-1]
        left = left[left > 0]
        right = idx[-2:][::-1]
        right = right[right < n - 1]
        knots = np.concatenate((-left.astype(np.float64), knots, 2.0 * (n - 1) - right))
        knot_values = np.concatenate((values[left], knot_values, values[right]))
        return knots, knot_values
    if boundary == "clamp":
        # Hold the nearest extremum value flat out to each end sample.
        pre = [0.0] if idx[0] > 0 else []
        post = [float(n - 1)] if idx[-1] < n - 1 else []
        knots = np.concatenate((pre, knots, post))
        knot_values = np.concatenate(
            (values[idx[:1]] if pre else [], knot_values, values[idx[-1:]] if post else [])
        )
        return knots, knot_values
    raise ValueError(f"unknown spline boundary {boundary!r}")


def envelope(x, pts, boundary: Optional[str] = "mirror") -> np.ndarray:
    """Natural cubic spline through ``x`` at indices ``pts``, on the full grid.

    ``boundary`` selects the end treatment: ``"mirror"`` reflects the two
    outermost knots about each end sample, ``"clamp"`` adds flat end knots,
    and ``None`` fits the given knots only.
    """
    values = as_array(x)
    pts = np.unique(np.asarray(pts, dtype=np.int64))
    knots, knot_values = _extend(pts, values.size, boundary, values)
    if knots.size < 2:
        raise InsufficientExtrema(f"{knots.size} usable spline knot(s), need 2")
    return _kernels.natural_spline_grid(knots, knot_values, values.size)


def _envelope_mean(h: np.ndarray, boundary: str) -> np.ndarray:
    imax, imin = _kernels.local_extrema(h)
    if imax.size < 2 or imin.size < 2:
        raise InsufficientExtrema(
            f"{imax.size} maxima and {imin.size} minima, need at least 2 of each"
        )
    upper = envelope(h, imax, boundary)
    lower = envelope(h, imin, boundary)
    return 0.5 * (upper + lower)


def sift_once(h, boundary: str = "mirror") -> np.ndarray:
    """One sifting pass: subtract the mean of the upper and lower envelopes."""
    values = np.ascontiguousarray(as_array(h))
    return values - _envelope_mean(values, boundary)


def _siftable(h: np.ndarray) -> bool:
    imax, imin = _kernels.local_extrema(h)
    return imax.size >= 2 and imin.size >= 2


def _is_imf(h: np.ndarray) -> bool:
    imax, imin = _kernels.local_extrema(h)
    return abs(imax.size + imin.size - _kernels.zero_crossings(h)) <= 1


def _sift(x: np.ndarray, cfg: EnsembleConfig):
    code = _kernels.BOUNDARY_CODES[cfg.spline_boundary]
    h, iterations, sd = _kernels.sift(x, cfg.sift_sd_tol, cfg.sift_max_iters, code)
    return h, int(iterations), float(sd)


def extract_imf(x, cfg: EnsembleConfig = DEFAULT_CONFIG):
    """Sift ``x`` into its finest intrinsic mode function.

    Sifting stops once the Cauchy-type ratio
    ``SD = sum((h_prev - h)^2) / sum(h_prev^2)`` is at most ``cfg.sift_sd_tol``
    and the extrema and zero-crossing counts differ by at most one, or after
    ``cfg.sift_max_iters`` passes.

    Returns
    -------
    imf : np.ndarray
    report : SiftReport
    """
    values = np.ascontiguousarray(as_array(x))
    if not _siftable(values):
        ext = find_extrema(values)
        raise InsufficientExtrema(
            f"{ext.maxima.size} maxima and {ext.minima.size} minima, need at least 2 of each"
        )
    imf, iterations, sd = _sift(values, cfg)
    return imf, _report(imf, iterations, sd, cfg.spline_boundary)


def _report(imf: np.ndarray, iterations: int, sd: float, boundary: str) -> SiftReport:
    imax, imin = _kernels.local_extrema(imf)
    try:
        mean_env = float(np.max(np.abs(_envelope_mean(imf, boundary))))
    except InsufficientExtrema:
        mean_env = float("nan")
    return SiftReport(
        iterations_used=iterations,
        sd_final=sd,
        num_extrema=int(imax.size + imin.size),
        num_zero_crossings=int(_kernels.zero_crossings(imf)),
        envelope_mean_maxabs=mean_env,
    )


def _emd_arrays(x: np.ndarray, cfg: EnsembleConfig, max_modes: Optional[int], reports: bool):
    limit = x.size if max_modes is None else max_modes
    code = _kernels.BOUNDARY_CODES[cfg.spline_boundary]
    imfs, residual, iters, sds = _kernels.decompose(x, cfg.sift_sd_tol, cfg.sift_max_iters, code, limit)
    sift_reports = []
    if reports:
        sift_reports = [
            _report(imf, int(it), float(sd), cfg.spline_boundary) for imf, it, sd in zip(imfs, iters, sds)
        ]
    return list(imfs), residual, sift_reports


def emd(x, cfg: EnsembleConfig = DEFAULT_CONFIG) -> Decomposition:
    """Decompose ``x`` into IMFs and a nonoscillatory residual.

    IMFs are peeled off the running residual until it has fewer than two
    maxima or fewer than two minima, or ``cfg.max_modes`` is reached. The
    residual is obtained by subtraction, so the IMFs plus residual telescope
    back to ``x``. A series without oscillation gives zero IMFs.
    """
    series = as_series(x)
    values = np.ascontiguousarray(series.values)
    require_length(values)
    imfs, residual, reports = _emd_arrays(values, cfg, cfg.max_modes, reports=True)
    return Decomposition(
        source=series,
        imfs=np.array(imfs).reshape(len(imfs), values.size),
        residual=residual,
        method="EMD",
        config=cfg,
        reports=tuple(reports),
    )
