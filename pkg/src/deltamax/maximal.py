"""Lacunary, strong, Hardy-Littlewood and band maximal operators on the grid."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .annulus import AnnulusSpec, RasterRule, check_fits
from .grid import Field, GridSpec
from .littlewood_paley import BumpFamily
from .spectral import KernelCache, from_real_spectrum, real_spectrum


@dataclass(frozen=True)
class DilationRange:
    """Box ``[lo_i, hi_i]`` of per-axis dilation exponents."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(int(v) for v in self.lo)
        hi = tuple(int(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi differ in length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"empty dilation range lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def isotropic(cls, d: int, kmin: int, kmax: int) -> DilationRange:
        return cls((kmin,) * d, (kmax,) * d)

    @classmethod
    def box(cls, d: int, kmin: int, kmax: int) -> DilationRange:
        return cls.isotropic(d, kmin, kmax)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def is_isotropic(self) -> bool:
        return len(set(self.lo)) == 1 and len(set(self.hi)) == 1

    def diagonal(self) -> list[tuple[int, ...]]:
        """Equal-entry vectors ``(k, ..., k)`` for ``k`` in the common range."""
        if not self.is_isotropic:
            raise ValueError("lacunary operators need an isotropic range")
        return [(k,) * self.d for k in range(self.lo[0], self.hi[0] + 1)]

    def vectors(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(a, b + 1) for a, b in zip(self.lo, self.hi))))

    def check(self, g: GridSpec, delta: float, rule: RasterRule, diagonal: bool = False) -> None:
        for kv in self.diagonal() if diagonal else self.vectors():
            check_fits(g, AnnulusSpec(g.d, delta, kv), rule)


def default_range(g: GridSpec, delta: float, rule: RasterRule = "centre") -> DilationRange:
    """Widest isotropic range with resolved shells and diameter at most ``L/4``."""
    kmax = math.floor(math.log2(g.box_length / (4.0 * 2.0 * (1.0 + delta))))
    kmin = kmax
    while True:
        try:
            check_fits(g, AnnulusSpec.isotropic(g.d, delta, kmin - 1), rule)
        except ValueError:
            break
        kmin -= 1
    rng = DilationRange.isotropic(g.d, kmin, kmax)
    rng.check(g, delta, rule, diagonal=True)
    return rng


def _sup_over(f: Field, delta: float, kvecs, rule: RasterRule, cache: KernelCache | None) -> Field:
    if not kvecs:
        raise ValueError("empty dilation range")
    cache = KernelCache(rule) if cache is None else cache
    if cache.rule != rule:
        raise ValueError(f"cache built for rule {cache.rule!r}, asked for {rule!r}")
    g = f.grid
    for kv in kvecs:
        check_fits(g, AnnulusSpec(g.d, delta, kv), rule)
    spec = real_spectrum(f)
    out = None
    for kv in kvecs:
        mult = cache.multiplier(g, AnnulusSpec(g.d, delta, kv))
        avg = np.abs(from_real_spectrum(g, spec * mult))
        out = avg if out is None else np.maximum(out, avg)
    return Field(g, out)


def lacunary_max(
    f: Field, delta: float, r: DilationRange, rule: RasterRule = "centre", cache: KernelCache | None = None
) -> Field:
    """``sup_k |f *_delta sigma_k|`` over the isotropic range ``r``."""
    return _sup_over(f, delta, r.diagonal(), rule, cache)


def strong_max(
    f: Field, delta: float, r: DilationRange, rule: RasterRule = "centre", cache: KernelCache | None = None
) -> Field:
    """``sup_kvec |f *_delta sigma_kvec|`` over the box ``r``."""
    return _sup_over(f, delta, r.vectors(), rule, cache)


def _dyadic_levels(g: GridSpec) -> int:
    return int(round(math.log2(g.n)))


def hl_max(f: Field) -> Field:
    """Uncentred maximal mean of ``|f|`` over cubes of side ``2^i`` cells."""
    g = f.grid
    a = np.abs(f.values)
    best = a.copy()
    for i in range(_dyadic_levels(g) + 1):
        s = 2**i
        cur = a
        for axis in range(g.d):
            cur = _window_mean(cur, axis, s)
        for axis in range(g.d):
            cur = _window_max(cur, axis, s)
        best = np.maximum(best, cur)
    return Field(g, best)


def _window_mean(a: np.ndarray, axis: int, s: int) -> np.ndarray:
    """Mean over ``[x, x + s)`` along one axis (``s`` a power of two)."""
    w = 1
    while w < s:
        a = 0.5 * (a + np.roll(a, -w, axis=axis))
        w *= 2
    return a


def _window_max(a: np.ndarray, axis: int, s: int) -> np.ndarray:
    """Max over window starts ``(x - s, x]`` along one axis."""
    m = 1
    while m < s:
        a = np.maximum(a, np.roll(a, m, axis=axis))
        m *= 2
    return a


def strong_rect_max(f: Field) -> Field:
    """Uncentred maximal mean of ``|f|`` over rectangles with dyadic side per axis.

    Means are taken along every axis before any window maximum, so each
    candidate is the mean over one rectangle; side tuples are streamed.
    """
    g = f.grid
    sides = [2**i for i in range(_dyadic_levels(g) + 1)]
    best = np.abs(f.values)
    for combo in itertools.product(sides, repeat=g.d):
        cur = np.abs(f.values)
        for axis, s in enumerate(combo):
            cur = _window_mean(cur, axis, s)
        for axis, s in enumerate(combo):
            cur = _window_max(cur, axis, s)
        best = np.maximum(best, cur)
    return Field(g, best)


def _check_band(g: GridSpec, jvec, kvec) -> None:
    nyquist = 1.0 / (2.0 * g.spacing)
    for j, k in zip(jvec, kvec):
        if j < 0:
            raise ValueError(f"band index j={j} must be non-negative")
        if j > 0 and 2.0 ** (j - k - 1) >= nyquist:
            raise ValueError(f"band (j={j}, k={k}) lies above the grid Nyquist frequency")


def band_multiplier(
    fam: BumpFamily, jvec, kvec, delta: float, rule: RasterRule, cache: KernelCache
) -> np.ndarray:
    g = fam.grid
    jvec = tuple(int(j) for j in jvec)
    kvec = tuple(int(k) for k in kvec)
    if len(jvec) != g.d or len(kvec) != g.d:
        raise ValueError("jvec and kvec must have one entry per axis")
    if cache.rule != rule:
        raise ValueError(f"cache built for rule {cache.rule!r}, asked for {rule!r}")
    _check_band(g, jvec, kvec)
    return fam.tensor_band(jvec, kvec) * cache.multiplier(g, AnnulusSpec(g.d, delta, kvec))


def band_operator(
    f: Field,
    jvec,
    kvec,
    delta: float,
    fam: BumpFamily,
    rule: RasterRule = "centre",
    cache: KernelCache | None = None,
) -> Field:
    """``A_j^k f``: the tensor band of ``f`` at offsets ``k - j`` averaged over the shell ``k``."""
    if fam.grid != f.grid:
        raise ValueError("bump family was built for a different grid")
    cache = KernelCache(rule) if cache is None else cache
    mult = band_multiplier(fam, jvec, kvec, delta, rule, cache)
    return Field(f.grid, from_real_spectrum(f.grid, real_spectrum(f) * mult))


def band_max(
    f: Field,
    jvec,
    delta: float,
    r: DilationRange,
    fam: BumpFamily,
    rule: RasterRule = "centre",
    cache: KernelCache | None = None,
    spectrum: np.ndarray | None = None,
) -> Field:
    """``sup_k |A_j^k f|`` over the box ``r``."""
    if fam.grid != f.grid:
        raise ValueError("bump family was built for a different grid")
    cache = KernelCache(rule) if cache is None else cache
    g = f.grid
    kvecs = r.vectors()
    mults = [band_multiplier(fam, jvec, kv, delta, rule, cache) for kv in kvecs]
    spec = real_spectrum(f) if spectrum is None else spectrum
    out = None
    for m in mults:
        v = np.abs(from_real_spectrum(g, spec * m))
        out = v if out is None else np.maximum(out, v)
    return Field(g, out)
