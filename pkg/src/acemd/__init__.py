"""Adaptive complementary ensemble EMD and Hilbert spectral analysis."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AcemdError,
    Decomposition,
    EnsembleConfig,
    SiftReport,
    TimeSeries,
    log_transform,
    validate_series,
)
from .emd import emd, envelope, extract_imf, find_extrema, sift_once  # noqa: E402
from .ensemble import (  # noqa: E402
    ace_emd,
    ceemd,
    eemd,
    orthogonality_index,
    pilot_amplitude,
    select_sigma,
    separability,
)
from .analysis import (  # noqa: E402
    asymmetry_frequencies,
    conditional_volatility,
    high_pass,
    log_returns,
    low_pass,
    rolling_volatility,
    volatility,
)
from .spectral import (  # noqa: E402
    analytic_mode,
    central_frequency_energy,
    frequency_deviation,
    hilbert_spectrum,
    hilbert_transform,
    power_exponent,
    rolling_spectrum,
    spectrum_summary,
)


__all__ = [
    "__version__",
    "AcemdError",
    "Decomposition",
    "EnsembleConfig",
    "SiftReport",
    "TimeSeries",
    "log_transform",
    "validate_series",
    "emd",
    "envelope",
    "extract_imf",
    "find_extrema",
    "sift_once",
    "ace_emd",
    "ceemd",
    "eemd",
    "orthogonality_index",
    "pilot_amplitude",
    "select_sigma",
    "separability",
    "asymmetry_frequencies",
    "conditional_volatility",
    "high_pass",
    "log_returns",
    "low_pass",
    "rolling_volatility",
    "volatility",
    "analytic_mode",
    "central_frequency_energy",
    "frequency_deviation",
    "hilbert_spectrum",
    "hilbert_transform",
    "power_exponent",
    "rolling_spectrum",
    "spectrum_summary",
]
