"""Discrete Fourier transforms on the periodic grid and FFT convolution.

The forward transform approximates ``F(xi) = int f(x) exp(-2 pi i x.xi) dx`` by
``h^d * DFT``; lattice frequencies are ``m / L``. With this scaling Parseval
reads ``sum |f|^2 h^d = sum |F|^2 / L^d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .annulus import AnnulusSpec, RasterRule, rasterize_annulus
from .grid import Field, GridSpec


@dataclass(frozen=True)
class SpectralField:
    """Centred Fourier coefficients of a field (index ``-n/2 .. n/2-1`` per axis)."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != grid shape {self.grid.shape}")
        self.coeffs.setflags(write=False)

    def frequencies(self) -> list[np.ndarray]:
        """Centred lattice frequencies ``m / L`` matching ``coeffs``, per axis."""
        return [np.fft.fftshift(f) for f in self.grid.frequencies()]

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2) / self.grid.volume))


def forward_transform(f: Field) -> SpectralField:
    g = f.grid
    c = sfft.fftn(f.values, workers=-1) * g.cell_volume
    return SpectralField(g, np.fft.fftshift(c))


def inverse_transform(F: SpectralField) -> Field:
    g = F.grid
    v = sfft.ifftn(np.fft.ifftshift(F.coeffs), workers=-1) / g.cell_volume
    return Field(g, v.real)


def real_spectrum(f: Field) -> np.ndarray:
    """Half-spectrum ``h^d rfftn(f)`` (FFT order, last axis non-negative)."""
    return sfft.rfftn(f.values, workers=-1) * f.grid.cell_volume


def from_real_spectrum(g: GridSpec, spec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`real_spectrum`, returning a plain real array."""
    return sfft.irfftn(spec, s=g.shape, workers=-1) / g.cell_volume


def fft_convolve(f: Field, g: Field) -> Field:
    """Periodic convolution ``(f * g)(x) = sum_y f(y) g(x - y) h^d`` via FFT."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    prod = sfft.rfftn(f.values, workers=-1) * sfft.rfftn(g.values, workers=-1)
    return Field(grid, sfft.irfftn(prod, s=grid.shape, workers=-1) * grid.cell_volume)


@dataclass
class KernelCache:
    """Per-run store of rasterised annulus multipliers keyed by (grid, spec, rule).

    A cache belongs to one experiment run; it is not shared global state.
    """

    rule: RasterRule = "centre"
    _store: dict = field(default_factory=dict, repr=False)

    def kernel(self, g: GridSpec, spec: AnnulusSpec) -> Field:
        return self._entry(g, spec)[0]

    def multiplier(self, g: GridSpec, spec: AnnulusSpec) -> np.ndarray:
        """Half-spectrum transform of the kernel (unit value at zero frequency)."""
        return self._entry(g, spec)[1]

    def _entry(self, g: GridSpec, spec: AnnulusSpec):
        key = (g, spec, self.rule)
        hit = self._store.get(key)
        if hit is None:
            k = rasterize_annulus(g, spec, self.rule)
            m = real_spectrum(k)
            m.setflags(write=False)
            hit = (k, m)
            self._store[key] = hit
        return hit

    def __len__(self) -> int:
        return len(self._store)


def delta_convolve(
    f: Field, spec: AnnulusSpec, rule: RasterRule = "centre", cache: KernelCache | None = None
) -> Field:
    """Average of ``f`` over the dilated shell ``spec`` around every point."""
    if cache is None:
        cache = KernelCache(rule)
    elif cache.rule != rule:
        raise ValueError(f"cache built for rule {cache.rule!r}, asked for {rule!r}")
    mult = cache.multiplier(f.grid, spec)
    return Field(f.grid, from_real_spectrum(f.grid, real_spectrum(f) * mult))
