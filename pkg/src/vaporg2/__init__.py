"""Photon statistics of dipole-coupled atom pairs in a thermal vapor."""

__version__ = "0.1.0"

from .analysis import first_peak_fwhm, g2_at_zero, peak_metrics, peak_positions
from .coupling import DipoleGeometry, collective_params, coupling_g12, damping_gamma12, f_quadrature
from .dynamics import PairConfig, build_system, propagate, steady_state
from .ensemble import EnsembleSpec, VaporConditions, ensemble_g2, mean_spacing
from .regression import G2Series, ZeroDenominatorError, g2_series

__all__ = [
    "DipoleGeometry",
    "EnsembleSpec",
    "G2Series",
    "PairConfig",
    "VaporConditions",
    "ZeroDenominatorError",
    "build_system",
    "collective_params",
    "coupling_g12",
    "damping_gamma12",
    "ensemble_g2",
    "f_quadrature",
    "first_peak_fwhm",
    "g2_at_zero",
    "g2_series",
    "mean_spacing",
    "peak_metrics",
    "peak_positions",
    "propagate",
    "steady_state",
]
