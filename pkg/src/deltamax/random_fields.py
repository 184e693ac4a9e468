"""Seeded random inputs: band-limited Gaussian fields and mean-zero cube bumps.

Every stream is a Philox generator (64-bit counter-based) keyed by
``SeedSequence([seed, stream_code, trial])``, so any single trial can be
replayed without generating the ones before it.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Field, GridSpec
from .spectral import from_real_spectrum, real_spectrum

STREAMS = {"band": 1, "bump": 2, "noise": 3}


def trial_rng(seed: int, stream: str, trial: int) -> np.random.Generator:
    code = STREAMS[stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), code, int(trial)])))


def band_limited_field(g: GridSpec, rng: np.random.Generator, fmax: float | None = None) -> Field:
    """Gaussian noise with spectrum restricted to ``0 < |xi| <= fmax``, unit L^2 norm.

    ``fmax`` defaults to the largest lattice frequency, which keeps every
    nonzero mode (mean-zero white noise).
    """
    noise = Field(g, rng.standard_normal(g.shape))
    spec = real_spectrum(noise)
    r = g.radial_frequency(real=True)
    mask = r > 0
    if fmax is not None:
        mask &= r <= fmax
    if not mask.any():
        raise ValueError(f"no lattice frequency in (0, {fmax}]")
    v = from_real_spectrum(g, spec * mask)
    norm = math.sqrt(float(np.sum(v * v)) * g.cell_volume)
    return Field(g, v / norm)


def cube_bump(
    g: GridSpec, rng: np.random.Generator, min_side_cells: int = 2, max_side_cells: int | None = None
) -> Field:
    """Mean-zero bump on a random dyadic cube: ``+-1/|W|`` on the two halves split along a random axis."""
    if max_side_cells is None:
        max_side_cells = g.n // 8
    lo = int(math.log2(min_side_cells))
    hi = int(math.log2(max_side_cells))
    if 2**lo != min_side_cells or 2**hi != max_side_cells or lo < 1 or hi < lo or max_side_cells > g.n:
        raise ValueError("cube sides must be powers of two with 2 <= min <= max <= n")
    side = 2 ** int(rng.integers(lo, hi + 1))
    corner = [int(rng.integers(0, g.n // side)) * side for _ in range(g.d)]
    axis = int(rng.integers(0, g.d))
    vol = (side * g.spacing) ** g.d
    v = np.zeros(g.shape)
    idx = tuple(slice(c, c + side) for c in corner)
    block = np.full((side,) * g.d, 1.0 / vol)
    sl = [slice(None)] * g.d
    sl[axis] = slice(side // 2, side)
    block[tuple(sl)] *= -1.0
    v[idx] = block
    return Field(g, v)
