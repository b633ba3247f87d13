"""Hilbert spectral analysis of IMFs.

Frequencies are in cycles per observation throughout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
import numpy as np

from .core import (
    Decomposition,
    DegenerateFit,
    EnsembleConfig,
    InsufficientValidSamples,
    ModeCountMismatch,
    NoModes,
    TooFewModes,
    TooShort,
    as_array,
    as_series,
)

log = logging.getLogger(__name__)

EDGE_SAMPLES = 2
MIN_VALID_SAMPLES = 8
ENERGY_GUARD = 1e-12
SEED_MASK = (1 << 64) - 1


def analytic_signal(x) -> np.ndarray:
    """``x + i H[x]`` by the one-sided spectrum construction."""
    values = as_array(x)
    n = values.size
    if n < 8:
        raise TooShort(f"Hilbert transform needs at least 8 samples, got {n}")
    spectrum = np.fft.fft(values)
    weights = np.zeros(n)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[n // 2] = 1.0
        weights[1 : n // 2] = 2.0
    else:
        weights[1 : (n + 1) // 2] = 2.0
    return np.fft.ifft(spectrum * weights)


def hilbert_transform(x) -> np.ndarray:
    """Discrete Hilbert transform (imaginary part of the analytic signal)."""
    return analytic_signal(x).imag


@dataclass(frozen=True)
class AnalyticMode:
    amplitude: np.ndarray
    phase: np.ndarray
    frequency: np.ndarray
    energy: np.ndarray
    valid: np.ndarray

    @property
    def n_valid(self) -> int:
        return int(np.count_nonzero(self.valid))


def analytic_mode(c) -> AnalyticMode:
    """Instantaneous amplitude, unwrapped phase, frequency and energy of ``c``.

    Frequency is the central difference of the unwrapped phase over 2*pi
    (one-sided at the ends). The first and last two samples and any sample
    with nonpositive frequency are masked out.
    """
    z = analytic_signal(c)
    amplitude = np.abs(z)
    phase = np.unwrap(np.angle(z))
    frequency = np.gradient(phase) / (2.0 * np.pi)
    valid = frequency > 0
    valid[:EDGE_SAMPLES] = False
    valid[-EDGE_SAMPLES:] = False
    return AnalyticMode(amplitude, phase, frequency, amplitude * amplitude, valid)


@dataclass(frozen=True)
class HilbertSpectrum:
    """Sparse energy-frequency spectrum: one entry per (mode, valid sample)."""

    time: np.ndarray
    mode: np.ndarray
    frequency: np.ndarray
    energy: np.ndarray
    amplitude: np.ndarray

    def __len__(self) -> int:
        return self.time.size


def hilbert_spectrum(d: Decomposition) -> HilbertSpectrum:
    if d.n_imfs == 0:
        raise NoModes("decomposition has no IMFs")
    parts = []
    for j, imf in enumerate(d.imfs):
        m = analytic_mode(imf)
        t = np.flatnonzero(m.valid)
        parts.append((t, np.full(t.size, j + 1), m.frequency[t], m.energy[t], m.amplitude[t]))
    cols = [np.concatenate(col) for col in zip(*parts)]
    return HilbertSpectrum(*cols)


@dataclass(frozen=True)
class CentralPoint:
    frequency: float
    energy: float
    n_valid: int
    n_energy_excluded: int


def central_frequency_energy(m: AnalyticMode) -> CentralPoint:
    """Geometric-mean frequency and energy over the valid samples.

    Samples with energy below ``1e-12 * max E`` are left out of the energy
    mean and counted in ``n_energy_excluded``.
    """
    f = m.frequency[m.valid]
    e = m.energy[m.valid]
    if f.size < MIN_VALID_SAMPLES:
        raise InsufficientValidSamples(f"{f.size} valid samples, need {MIN_VALID_SAMPLES}")
    keep = e >= ENERGY_GUARD * np.max(e)
    if not np.any(keep) or np.max(e) <= 0:
        raise InsufficientValidSamples("mode carries no energy")
    return CentralPoint(
        frequency=float(np.exp(np.mean(np.log(f)))),
        energy=float(np.exp(np.mean(np.log(e[keep])))),
        n_valid=int(f.size),
        n_energy_excluded=int(np.count_nonzero(~keep)),
    )


def power_exponent(frequencies, energies):
    """OLS fit of log energy on log frequency.

    Returns ``(alpha, r_squared)`` with ``alpha`` the negated slope, so
    ``E ~ f^-alpha``.
    """
    lf = np.log(np.asarray(frequencies, dtype=np.float64))
    le = np.log(np.asarray(energies, dtype=np.float64))
    if lf.size < 3:
        raise TooFewModes(f"{lf.size} mode points, need at least 3")
    dx = lf - lf.mean()
    sxx = float(np.dot(dx, dx))
    if sxx <= 1e-300:
        raise DegenerateFit("all central frequencies are equal")
    dy = le - le.mean()
    slope = float(np.dot(dx, dy)) / sxx
    syy = float(np.dot(dy, dy))
    resid = dy - slope * dx
    r_squared = 1.0 - float(np.dot(resid, resid)) / syy if syy > 0 else 1.0
    return -slope, min(max(r_squared, 0.0), 1.0)


@dataclass(frozen=True)
class SpectrumSummary:
    central_frequencies: np.ndarray
    central_energies: np.ndarray
    alpha: float
    r_squared: float
    modes_used: int
    mode_index: np.ndarray
    n_energy_excluded: np.ndarray

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "r_squared": self.r_squared,
            "modes_used": self.modes_used,
            "central_frequencies": [float(v) for v in self.central_frequencies],
            "central_energies": [float(v) for v in self.central_energies],
            "mode_index": [int(v) for v in self.mode_index],
        }


def central_points(d: Decomposition):
    """Central points of every IMF that has enough valid samples."""
    if d.n_imfs == 0:
        raise NoModes("decomposition has no IMFs")
    points = []
    for j, imf in enumerate(d.imfs):
        try:
            points.append((j + 1, central_frequency_energy(analytic_mode(imf))))
        except InsufficientValidSamples as exc:
            log.warning("mode %d left out of the spectrum: %s", j + 1, exc)
    return points


def spectrum_summary(d: Decomposition, require_fit: bool = True) -> SpectrumSummary:
    """Central points of every usable mode and the power-law fit through them.

    With ``require_fit=False`` a decomposition too small for the fit still
    yields its central points, with ``alpha`` and ``r_squared`` set to NaN.
    """
    points = central_points(d)
    freqs = np.array([p.frequency for _, p in points])
    energies = np.array([p.energy for _, p in points])
    try:
        alpha, r2 = power_exponent(freqs, energies)
    except (TooFewModes, DegenerateFit):
        if require_fit:
            raise
        alpha = r2 = float("nan")
    return SpectrumSummary(
        central_frequencies=freqs,
        central_energies=energies,
        alpha=alpha,
        r_squared=r2,
        modes_used=len(points),
        mode_index=np.array([j for j, _ in points]),
        n_energy_excluded=np.array([p.n_energy_excluded for _, p in points]),
    )


def frequency_deviation(s1: SpectrumSummary, s2: SpectrumSummary) -> float:
    """Sum over modes of squared log ratios of central frequencies."""
    if s1.modes_used != s2.modes_used:
        raise ModeCountMismatch(f"{s1.modes_used} modes vs {s2.modes_used} modes")
    diff = np.log(s1.central_frequencies) - np.log(s2.central_frequencies)
    return float(np.dot(diff, diff))


def window_seed(seed: int, window_index: int) -> int:
    return (int(seed) + int(window_index)) & SEED_MASK


def rolling_windows(n: int, window: int, step: int):
    """(start, stop) of trailing windows, the last one ending at the series end."""
    if window > n:
        raise TooShort(f"window {window} longer than series ({n})")
    ends = list(range(n, window - 1, -step))[::-1]
    return [(stop - window, stop) for stop in ends]


def rolling_spectrum(
    x,
    window: int,
    step: int,
    cfg: EnsembleConfig,
    n_jobs: int = 1,
):
    """ACE-EMD spectrum summary on trailing windows.

    Window ``k`` uses seed ``cfg.seed + k``; a single full-length window
    therefore matches the full-sample run. Returns ``(end_index, summary)``
    pairs where ``end_index`` is the last observation in the window.
    """
    from .ensemble import ace_emd

    if window < 256:
        raise TooShort(f"rolling window must be at least 256, got {window}")
    if step < 1:
        raise ValueError("step must be at least 1")
    series = as_series(x)
    out = []
    for k, (start, stop) in enumerate(rolling_windows(len(series), window, step)):
        wcfg = replace(cfg, seed=window_seed(cfg.seed, k))
        d, _ = ace_emd(series.window(start, stop), wcfg, n_jobs=n_jobs)
        out.append((stop - 1, spectrum_summary(d)))
    return out
