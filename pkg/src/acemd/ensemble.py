"""Noise-assisted decompositions (EEMD, CEEMD, ACE-EMD) and their diagnostics.

Every trial draws its noise from a private substream seeded by
``(seed, trial_index)``, and trial results are reduced in trial order, so the
output does not depend on ``n_jobs``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .core import (
    Decomposition,
    DegenerateSeries,
    EnsembleConfig,
    InsufficientExtrema,
    TooFewModes,
    as_series,
    require_length,
)
from .emd import DEFAULT_CONFIG, _emd_arrays, emd, envelope, extract_imf, find_extrema

log = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1
DEFAULT_SIGMA_GRID = (0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
OI_THRESHOLD = 0.05
AMPLITUDE_FLOOR = 1e-6

NoiseGenerator = Callable[[np.random.Generator, int], np.ndarray]


def gaussian_noise(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n)


@dataclass(frozen=True)
class NoiseRealization:
    values: np.ndarray
    trial_index: int
    polarity: int = 1


@dataclass(frozen=True)
class DecompositionDiagnostics:
    orthogonality_index: float
    separability: float
    sigma_used: float
    ensemble_size_used: int

    def to_dict(self) -> dict:
        return {
            "orthogonality_index": self.orthogonality_index,
            "separability": self.separability,
            "sigma_used": self.sigma_used,
            "ensemble_size_used": self.ensemble_size_used,
        }


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & SEED_MASK, int(trial_index)]))


def noise_draw(
    seed: int,
    trial_index: int,
    scale,
    n: int,
    generator: NoiseGenerator = gaussian_noise,
) -> NoiseRealization:
    """Unit-variance noise from the trial substream, multiplied by ``scale``.

    ``scale`` is a scalar (constant noise level) or a length-``n`` array
    giving the standard deviation at every sample.
    """
    z = generator(trial_rng(seed, trial_index), n)
    return NoiseRealization(np.asarray(scale) * z, trial_index)


# --------------------------------------------------------------------------
# Pilot amplitude and adaptive noise
# --------------------------------------------------------------------------


def pilot_amplitude(x, cfg: EnsembleConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Upper spline envelope of the first IMF of ``x``.

    The envelope is floored at ``1e-6 * max|c_p|`` so the adaptive noise
    never collapses to zero variance.
    """
    values = np.ascontiguousarray(as_series(x).values)
    pilot, _ = extract_imf(values, cfg)
    ext = find_extrema(pilot)
    if ext.maxima.size < 1:
        raise InsufficientExtrema("pilot mode has no maxima")
    amp = envelope(pilot, ext.maxima, cfg.spline_boundary)
    floor = AMPLITUDE_FLOOR * float(np.max(np.abs(pilot)))
    return np.maximum(amp, floor)


def adaptive_noise(
    x,
    cfg: EnsembleConfig,
    trial_index: int,
    amplitude: Optional[np.ndarray] = None,
    generator: NoiseGenerator = gaussian_noise,
) -> NoiseRealization:
    """Noise for one ACE-EMD trial: zero mean, std ``sigma * a_p(t)``."""
    if amplitude is None:
        amplitude = pilot_amplitude(x, cfg)
    return noise_draw(cfg.seed, trial_index, cfg.noise_sigma * amplitude, amplitude.size, generator)


# --------------------------------------------------------------------------
# Trial execution
# --------------------------------------------------------------------------


def _trial_modes(signal: np.ndarray, cfg: EnsembleConfig, n_modes: int) -> np.ndarray:
    """EMD of one noisy signal forced to ``n_modes`` IMFs.

    Trials that run out of oscillation early get zero IMFs inserted before
    the residual. Rows: IMFs then residual.
    """
    imfs, residual, _ = _emd_arrays(signal, cfg, n_modes, reports=False)
    out = np.zeros((n_modes + 1, signal.size))
    for j, imf in enumerate(imfs):
        out[j] = imf
    out[n_modes] = residual
    return out


def _pair_task(args):
    x, noise, cfg, n_modes, complementary = args
    modes = _trial_modes(np.ascontiguousarray(x + noise), cfg, n_modes)
    if complementary:
        modes += _trial_modes(np.ascontiguousarray(x - noise), cfg, n_modes)
    return modes


def _run_trials(tasks: Iterable, n_jobs: int) -> Iterable[np.ndarray]:
    if n_jobs is None or n_jobs <= 1:
        return map(_pair_task, tasks)
    tasks = list(tasks)
    chunk = max(1, len(tasks) // (4 * n_jobs))
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_pair_task, tasks, chunksize=chunk))


def _reference_mode_count(values: np.ndarray, cfg: EnsembleConfig) -> int:
    if cfg.max_modes is not None:
        return int(cfg.max_modes)
    imfs, _, _ = _emd_arrays(values, cfg, None, reports=False)
    return len(imfs)


def _ensemble(
    x,
    cfg: EnsembleConfig,
    scale,
    complementary: bool,
    method: str,
    n_jobs: int,
    generator: NoiseGenerator,
) -> Decomposition:
    series = as_series(x)
    values = np.ascontiguousarray(series.values)
    require_length(values)
    n_modes = _reference_mode_count(values, cfg)
    tasks = (
        (values, noise_draw(cfg.seed, i, scale, values.size, generator).values, cfg, n_modes, complementary)
        for i in range(cfg.ensemble_size)
    )
    total = np.zeros((n_modes + 1, values.size))
    for modes in _run_trials(tasks, n_jobs):
        total += modes
    total /= cfg.ensemble_size * (2 if complementary else 1)
    return Decomposition(
        source=series,
        imfs=total[:n_modes],
        residual=total[n_modes],
        method=method,
        config=cfg,
    )


def _zero_noise(x, cfg: EnsembleConfig, method: str) -> Decomposition:
    d = emd(x, cfg)
    return replace(d, method=method)


def _with_diagnostics(d: Decomposition, sigma: float):
    return d, diagnose(d, sigma)


def eemd(
    x,
    cfg: EnsembleConfig = DEFAULT_CONFIG,
    n_jobs: int = 1,
    generator: NoiseGenerator = gaussian_noise,
):
    """Ensemble EMD with constant-variance white noise of std ``sigma * std(x)``.

    The ensemble mean does not reconstruct ``x`` exactly: the gap equals the
    mean added noise and shrinks like ``1/sqrt(N)``.
    """
    if cfg.noise_sigma <= 0:
        raise ValueError("eemd needs noise_sigma > 0")
    values = as_series(x).values
    scale = cfg.noise_sigma * float(np.std(values))
    d = _ensemble(x, cfg, scale, False, "EEMD", n_jobs, generator)
    return _with_diagnostics(d, cfg.noise_sigma)


def ceemd(
    x,
    cfg: EnsembleConfig = DEFAULT_CONFIG,
    n_jobs: int = 1,
    generator: NoiseGenerator = gaussian_noise,
):
    """Complementary ensemble EMD: each noise draw is used as +w and -w.

    The paired noise cancels in the ensemble mean, so the components sum
    back to ``x`` for any ensemble size. ``noise_sigma == 0`` returns plain
    EMD.
    """
    if cfg.noise_sigma == 0:
        return _with_diagnostics(_zero_noise(x, cfg, "CEEMD"), 0.0)
    values = as_series(x).values
    scale = cfg.noise_sigma * float(np.std(values))
    d = _ensemble(x, cfg, scale, True, "CEEMD", n_jobs, generator)
    return _with_diagnostics(d, cfg.noise_sigma)


def ace_emd(
    x,
    cfg: EnsembleConfig = DEFAULT_CONFIG,
    n_jobs: int = 1,
    generator: NoiseGenerator = gaussian_noise,
):
    """Adaptive complementary ensemble EMD.

    A pilot sift of ``x`` gives the first IMF ``c_p`` and its upper envelope
    ``a_p(t)``. Each trial adds and subtracts independent noise with
    pointwise std ``sigma * a_p(t)``; the 2N decompositions are averaged mode
    by mode. ``noise_sigma == 0`` returns plain EMD.

    Returns
    -------
    decomposition : Decomposition
    diagnostics : DecompositionDiagnostics
    """
    if cfg.noise_sigma == 0:
        return _with_diagnostics(_zero_noise(x, cfg, "ACE-EMD"), 0.0)
    amplitude = pilot_amplitude(x, cfg)
    d = _ensemble(x, cfg, cfg.noise_sigma * amplitude, True, "ACE-EMD", n_jobs, generator)
    return _with_diagnostics(d, cfg.noise_sigma)


# --------------------------------------------------------------------------
# Diagnostics
# --------------------------------------------------------------------------


def orthogonality_index(d: Decomposition) -> float:
    """Time-averaged sum of mode cross products over ``x(t)^2``.

    The residual is the (n+1)-th mode. Samples with ``|x| < 1e-12 max|x|``
    are skipped.
    """
    x = d.source.values
    modes = d.modes
    keep = np.abs(x) >= 1e-12 * np.max(np.abs(x))
    if not np.any(keep):
        raise DegenerateSeries("every sample of x is numerically zero")
    total = modes.sum(axis=0)
    cross = total * total - np.sum(modes * modes, axis=0)
    return float(np.mean(cross[keep] / (x[keep] * x[keep])))


def separability(d: Decomposition) -> float:
    """Root-mean-square Pearson correlation over all unordered mode pairs.

    The residual is included; a constant mode has correlation 0 with
    everything.
    """
    modes = d.modes
    k = modes.shape[0]
    if k < 2:
        raise TooFewModes("separability needs at least two modes")
    centered = modes - modes.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.sum(centered * centered, axis=1))
    live = norms > 0
    unit = np.zeros_like(centered)
    unit[live] = centered[live] / norms[live, None]
    corr = unit @ unit.T
    iu = np.triu_indices(k, 1)
    return float(np.sqrt(np.mean(corr[iu] ** 2)))


def diagnose(d: Decomposition, sigma: float) -> DecompositionDiagnostics:
    try:
        oi = orthogonality_index(d)
    except DegenerateSeries:
        oi = float("nan")
    try:
        sep = separability(d)
    except TooFewModes:
        sep = float("nan")
    size = 0 if sigma == 0 or d.config is None else d.config.ensemble_size
    return DecompositionDiagnostics(oi, sep, float(sigma), int(size))


# --------------------------------------------------------------------------
# Noise-level selection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaTrial:
    sigma: float
    orthogonality_index: float
    separability: float
    feasible: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "orthogonality_index": self.orthogonality_index,
            "separability": self.separability,
            "feasible": self.feasible,
            "error": self.error,
        }


@dataclass(frozen=True)
class SigmaSelection:
    sigma: float
    constraint_unmet: bool
    table: tuple
    decomposition: Decomposition
    diagnostics: DecompositionDiagnostics


def select_sigma(
    x,
    grid: Sequence[float] = DEFAULT_SIGMA_GRID,
    cfg: EnsembleConfig = DEFAULT_CONFIG,
    oi_threshold: float = OI_THRESHOLD,
    n_jobs: int = 1,
) -> SigmaSelection:
    """Pick the ACE-EMD noise level on ``grid``.

    Among grid points with ``|OI| < oi_threshold`` the one with the smallest
    separability wins. When no point is feasible, the smallest ``|OI|`` is
    returned and ``constraint_unmet`` is set. All points share ``cfg.seed``.
    """
    grid = [float(s) for s in grid]
    if not grid:
        raise ValueError("sigma grid is empty")
    table = []
    results = {}
    for sigma in grid:
        try:
            d, diag = ace_emd(x, replace(cfg, noise_sigma=sigma), n_jobs=n_jobs)
        except (InsufficientExtrema, DegenerateSeries, TooFewModes) as exc:
            log.warning("sigma=%g skipped: %s", sigma, exc)
            table.append(SigmaTrial(sigma, float("nan"), float("nan"), False, str(exc)))
            continue
        oi, sep = diag.orthogonality_index, diag.separability
        feasible = bool(np.isfinite(oi) and np.isfinite(sep) and abs(oi) < oi_threshold)
        table.append(SigmaTrial(sigma, oi, sep, feasible))
        results[sigma] = (d, diag)

    if not results:
        raise InsufficientExtrema("every grid point failed to decompose")
    feasible = [t for t in table if t.feasible]
    if feasible:
        best = min(feasible, key=lambda t: t.separability)
        unmet = False
    else:
        scored = [t for t in table if np.isfinite(t.orthogonality_index)]
        if scored:
            best = min(scored, key=lambda t: abs(t.orthogonality_index))
        else:
            # OI undefined everywhere (x numerically zero): first usable point.
            best = next(t for t in table if t.sigma in results)
        unmet = True
    d, diag = results[best.sigma]
    return SigmaSelection(best.sigma, unmet, tuple(table), d, diag)
