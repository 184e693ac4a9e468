"""Discretised spherical maximal operators on periodic grids."""

__version__ = "0.1.0"

from .annulus import AnnulusSpec, annulus_measure, rasterize_annulus, sumset_volume_bound
from .atoms import (
    Atom,
    AtomSet,
    DyadicCube,
    LevelSetSystem,
    build_atoms,
    build_level_system,
    stopping_time,
    verify_decomposition,
)
from .grid import Field, FieldDecodeError, GridSpec, direct_convolve, level_measure, lp_norm, make_grid, read_field, write_field
from .littlewood_paley import (
    BumpFamily,
    build_bump_family,
    h1_norm,
    peetre_square_function,
    reproducing_residual,
    square_function,
)
from .maximal import DilationRange, band_max, band_operator, hl_max, lacunary_max, strong_max, strong_rect_max
from .special import BesselOrder, annulus_fourier, bessel_j, sphere_fourier
from .spectral import KernelCache, SpectralField, delta_convolve, fft_convolve, forward_transform, inverse_transform

__all__ = [
    "AnnulusSpec",
    "Atom",
    "AtomSet",
    "BesselOrder",
    "BumpFamily",
    "DilationRange",
    "DyadicCube",
    "Field",
    "FieldDecodeError",
    "GridSpec",
    "KernelCache",
    "LevelSetSystem",
    "SpectralField",
    "annulus_fourier",
    "annulus_measure",
    "band_max",
    "band_operator",
    "bessel_j",
    "build_atoms",
    "build_bump_family",
    "build_level_system",
    "delta_convolve",
    "direct_convolve",
    "fft_convolve",
    "forward_transform",
    "h1_norm",
    "hl_max",
    "inverse_transform",
    "lacunary_max",
    "level_measure",
    "lp_norm",
    "make_grid",
    "peetre_square_function",
    "rasterize_annulus",
    "read_field",
    "reproducing_residual",
    "sphere_fourier",
    "square_function",
    "stopping_time",
    "strong_max",
    "strong_rect_max",
    "sumset_volume_bound",
    "verify_decomposition",
    "write_field",
]
