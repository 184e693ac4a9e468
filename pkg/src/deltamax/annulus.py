"""Annulus specifications, exact measures, rasterised averaging kernels and
sum-set volume diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .grid import Field, GridSpec
from .special import unit_ball_volume

RasterRule = Literal["centre", "area"]
RASTER_RULES = ("centre", "area")
# Sub-samples per axis for the semi-analytic area rule when d >= 3.
AREA_SUPERSAMPLE = 8


@dataclass(frozen=True)
class AnnulusSpec:
    """The shell ``1 - delta < |2^{-k} y| < 1 + delta`` with per-axis exponents ``kvec``."""

    d: int
    delta: float
    kvec: tuple[int, ...]

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta={self.delta} must lie in (0, 1/2)")
        if self.d < 2:
            raise ValueError("annuli need d >= 2")
        kv = tuple(int(k) for k in self.kvec)
        if len(kv) != self.d:
            raise ValueError(f"kvec has length {len(kv)}, expected {self.d}")
        object.__setattr__(self, "kvec", kv)

    @classmethod
    def isotropic(cls, d: int, delta: float, k: int) -> AnnulusSpec:
        return cls(d, float(delta), (int(k),) * d)

    @property
    def scales(self) -> np.ndarray:
        return np.exp2(np.asarray(self.kvec, dtype=np.float64))

    @property
    def diameter(self) -> float:
        """Diameter along the most stretched axis."""
        return 2.0 * (1.0 + self.delta) * float(self.scales.max())

    @property
    def volume(self) -> float:
        """Measure of the dilated shell, ``|C^delta| 2^{sum k}``."""
        return annulus_measure(self.d, self.delta) * 2.0 ** sum(self.kvec)


def annulus_measure(d: int, delta: float) -> float:
    """Volume of ``{1 - delta < |y| < 1 + delta}`` in R^d."""
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta={delta} must lie in (0, 1/2)")
    if d < 2:
        raise ValueError("annulus_measure needs d >= 2")
    return unit_ball_volume(d) * ((1.0 + delta) ** d - (1.0 - delta) ** d)


def check_fits(g: GridSpec, spec: AnnulusSpec, rule: RasterRule = "centre") -> None:
    """Raise ``ValueError`` unless ``spec`` is representable on ``g``.

    The dilated shell must leave a margin of its own diameter inside the box
    so periodic wrap never overlaps it. The ``centre`` rule additionally
    needs the thinnest shell to span four cells; the ``area`` rule integrates
    the shell exactly and only needs the smallest radius to reach half a cell.
    """
    if spec.d != g.d:
        raise ValueError(f"annulus dimension {spec.d} differs from grid dimension {g.d}")
    if 2.0 * spec.diameter > g.box_length:
        raise ValueError(
            f"annulus kvec={spec.kvec} diameter {spec.diameter:g} does not fit box {g.box_length:g} with margin"
        )
    kmin = 2.0 ** min(spec.kvec)
    if rule == "centre":
        if g.spacing > spec.delta * kmin / 4.0:
            raise ValueError(
                f"grid spacing {g.spacing:g} does not resolve shell of width {spec.delta * kmin:g} (need h <= width/4)"
            )
    elif rule == "area":
        if g.spacing > 2.0 * kmin:
            raise ValueError(f"grid spacing {g.spacing:g} too coarse for radius {kmin:g} (need h <= 2 radius)")
    else:
        raise ValueError(f"unknown rasterisation rule {rule!r}")


def _disc_quadrant_area(x: np.ndarray, y: np.ndarray, r: float) -> np.ndarray:
    """Signed area of ``[0, x] x [0, y]`` inside the disc of radius ``r`` (odd in x and y)."""
    sx, sy = np.sign(x), np.sign(y)
    xa = np.minimum(np.abs(x), r)
    ya = np.minimum(np.abs(y), r)
    inside = xa * xa + ya * ya <= r * r
    ustar = np.sqrt(np.maximum(r * r - ya * ya, 0.0))
    # Only meaningful where the corner lies outside; clamp for safety.
    ustar = np.minimum(ustar, xa)

    def prim(u):
        return 0.5 * (u * np.sqrt(np.maximum(r * r - u * u, 0.0)) + r * r * np.arcsin(np.clip(u / r, -1.0, 1.0)))

    cut = ustar * ya + prim(xa) - prim(ustar)
    return sx * sy * np.where(inside, xa * ya, cut)


def _rect_disc_area(x0, x1, y0, y1, r: float) -> np.ndarray:
    g = _disc_quadrant_area
    return g(x1, y1, r) - g(x0, y1, r) - g(x1, y0, r) + g(x0, y0, r)


def _segment_in_ball(a: np.ndarray, b: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """Length of ``[a, b] ∩ [-T, T]`` with ``T = sqrt(t2)`` (zero if ``t2 <= 0``)."""
    t = np.sqrt(np.maximum(t2, 0.0))
    lo = np.maximum(a, -t)
    hi = np.minimum(b, t)
    return np.where(t2 > 0, np.maximum(hi - lo, 0.0), 0.0)


def _area_weights(g: GridSpec, spec: AnnulusSpec) -> np.ndarray:
    """Volume of each cell inside the shell, measured in scaled coordinates."""
    scales = spec.scales
    h = g.spacing
    ro, ri = 1.0 + spec.delta, 1.0 - spec.delta
    # The shell is symmetric under each reflection, so work with |centre|;
    # this makes the weights exactly reflection invariant.
    coords = [np.abs(c) for c in g.coordinates()]
    # Cell boundaries in the scaled frame 2^{-k} y.
    lo = [(c - h / 2.0) / s for c, s in zip(coords, scales)]
    hi = [(c + h / 2.0) / s for c, s in zip(coords, scales)]
    # Cells that miss the shell entirely get an exact zero, not round-off.
    near2 = sum(np.maximum(a, 0.0) ** 2 for a in lo)
    far2 = sum(b * b for b in hi)
    meets = (near2 < ro * ro) & (far2 > ri * ri)
    if g.d == 2:
        w = _rect_disc_area(lo[0], hi[0], lo[1], hi[1], ro) - _rect_disc_area(lo[0], hi[0], lo[1], hi[1], ri)
        return np.where(meets, w, 0.0)
    m = AREA_SUPERSAMPLE
    sub = (np.arange(m) + 0.5) / m
    out = np.zeros(g.shape)
    cell = [(h / s) for s in scales]
    for idx in np.ndindex(*(m,) * (g.d - 1)):
        rho2 = 0.0
        for axis, i in enumerate(idx):
            pos = lo[axis] + sub[i] * cell[axis]
            rho2 = rho2 + pos * pos
        a, b = lo[-1], hi[-1]
        seg = _segment_in_ball(a, b, ro * ro - rho2) - _segment_in_ball(a, b, ri * ri - rho2)
        out = out + seg
    return np.where(meets, out, 0.0) * float(np.prod(cell[:-1])) / m ** (g.d - 1)


def rasterize_annulus(g: GridSpec, spec: AnnulusSpec, rule: RasterRule = "centre") -> Field:
    """Averaging kernel ``K`` with ``sum K h^d = 1`` supported on the dilated shell.

    Parameters
    ----------
    g : GridSpec
        Target grid; the kernel is centred at the origin cell.
    spec : AnnulusSpec
        Shell thickness and per-axis dilation exponents.
    rule : {"centre", "area"}
        ``centre`` keeps cells whose centre lies in the shell; ``area`` weights
        every cell by the exact volume of its intersection with the shell.
    """
    check_fits(g, spec, rule)
    if rule == "centre":
        r2 = sum((c / s) ** 2 for c, s in zip(g.coordinates(), spec.scales))
        lo, hi = (1.0 - spec.delta) ** 2, (1.0 + spec.delta) ** 2
        w = ((r2 > lo) & (r2 < hi)).astype(np.float64)
    else:
        w = np.clip(_area_weights(g, spec), 0.0, None)
    total = w.sum()
    if total == 0.0:
        raise ValueError(f"annulus {spec} captures no cells on {g}")
    return Field(g, w / (total * g.cell_volume))


def support_volume(kernel: Field) -> float:
    """Measure of the cells where the kernel is nonzero."""
    return float(np.count_nonzero(kernel.values)) * kernel.grid.cell_volume


def sumset_volume_bound(level_w: int, k: int, delta: float, d: int) -> float:
    """Simplified bound ``2^{kd} (delta + 2^{level_w - k})`` on ``|W* + supp sigma_k|``."""
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta={delta} must lie in (0, 1/2)")
    return 2.0 ** (k * d) * (delta + 2.0 ** (level_w - k))


def measured_sumset_volume(
    g: GridSpec, level_w: int, k: int, delta: float, enlargement: float = 20.0
) -> float:
    """Volume of the Minkowski sum of a cube of side ``enlargement * 2^level_w``
    with the rasterised shell of radius ``2^k`` and thickness ``2^k delta``.

    The shell support is the set of cells meeting it (``area`` rule), so thin
    shells are never lost between sample points.
    """
    from scipy import ndimage

    spec = AnnulusSpec.isotropic(g.d, delta, k)
    if 2.0 * spec.diameter > g.box_length:
        raise ValueError("shell does not fit the box")
    w = _area_weights(g, spec)
    mask = w > 0.0
    side = enlargement * 2.0**level_w / g.spacing
    cells = max(1, int(round(side)))
    if cells + spec.diameter / g.spacing >= g.n:
        raise ValueError("sum set wraps around the box")
    grown = ndimage.maximum_filter(mask.astype(np.uint8), size=cells, mode="wrap")
    return float(np.count_nonzero(grown)) * g.cell_volume


def covering_number(r: float, d: int) -> float:
    """Order of magnitude ``r^{-(d-1)}`` of radius-r balls needed to cover the unit sphere."""
    if r <= 0:
        raise ValueError("radius must be positive")
    return r ** (-(d - 1)) if r < 1 else 1.0
