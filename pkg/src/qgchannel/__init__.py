"""Spectral solvers for forced-dissipative barotropic flow in a beta-plane channel."""

from .params import Affine, ChannelParams, ConstantFave, ConstantUave, Ridge, Spectral, Zonal
from .fields import SpectralState, compute_Eave, compute_Uave, eval_physical, symmetry_project
from .lowdim import LowDimParams, LowDimState, lowdim_diagnostics, lowdim_equilibria, lowdim_integrate, lowdim_rhs

__all__ = [
    "Affine", "ChannelParams", "ConstantFave", "ConstantUave", "Ridge", "Spectral", "Zonal",
    "SpectralState", "compute_Eave", "compute_Uave", "eval_physical", "symmetry_project",
    "LowDimParams", "LowDimState", "lowdim_diagnostics", "lowdim_equilibria", "lowdim_integrate",
    "lowdim_rhs",
]
