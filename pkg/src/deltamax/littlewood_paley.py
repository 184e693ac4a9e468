"""Frequency-side Littlewood-Paley windows, square functions and the H^1 norm.

Scale convention: the window at scale ``j`` has transform ``w(2^j xi)``, so
large ``j`` is a coarse (low-frequency) scale.  All windows are built from
one smooth plateau profile ``eta`` with ``eta = 1`` on ``[0, 1]`` and ``0`` on
``[2, inf)``:

* ``psi_hat(xi) = eta(|xi|)``                low-pass
* ``Psi_hat(xi) = eta(|xi|) - eta(2|xi|)``    band, support ``(1/2, 2)``
* ``phi_hat = Psi_hat``                       analysis window
* ``theta_hat(xi) = eta(|xi|/2) - eta(4|xi|)`` synthesis window, ``1`` on ``[1/2, 2]``

Because ``theta_hat = 1`` on the support of ``phi_hat``, the sum
``sum_j theta_hat(2^j xi)^2 phi_hat(2^j xi)`` telescopes to ``1`` on the
resolved annulus ``2^{-j_max} <= |xi| <= 2^{-j_min}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .grid import Field, GridSpec
from .spectral import from_real_spectrum, real_spectrum


def _glue(s: np.ndarray) -> np.ndarray:
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def eta(t) -> np.ndarray:
    """Smooth plateau: 1 on ``[0, 1]``, 0 on ``[2, inf)``, monotone in between."""
    t = np.asarray(t, dtype=np.float64)
    a = _glue(2.0 - t)
    b = _glue(t - 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = a / (a + b)
    return np.where(t <= 1.0, 1.0, np.where(t >= 2.0, 0.0, mid))


def psi_hat(r) -> np.ndarray:
    return eta(r)


def Psi_hat(r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    return eta(r) - eta(2.0 * r)


def theta_hat(r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    return eta(0.5 * r) - eta(4.0 * r)


def default_scales(g: GridSpec) -> tuple[int, int]:
    """Scales whose resolved region ``[2^{-j_max}, 2^{-j_min}]`` covers every nonzero lattice frequency."""
    return math.floor(math.log2(g.spacing)), math.ceil(math.log2(g.box_length))


@dataclass(frozen=True)
class BumpFamily:
    """Radial windows on one grid at scales ``j_min .. j_max`` (inclusive).

    Window arrays are half-spectra (real FFT layout) and are built lazily;
    the family is otherwise immutable.
    """

    grid: GridSpec
    j_min: int
    j_max: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    @property
    def scales(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def _radial(self) -> np.ndarray:
        r = self._cache.get("radial")
        if r is None:
            r = self.grid.radial_frequency(real=True)
            self._cache["radial"] = r
        return r

    def _axis_freq(self, axis: int) -> np.ndarray:
        return np.abs(self.grid.frequencies(real=True)[axis])

    def _window(self, name: str, j: int, fn) -> np.ndarray:
        key = (name, j)
        w = self._cache.get(key)
        if w is None:
            w = fn(2.0**j * self._radial())
            w.setflags(write=False)
            self._cache[key] = w
        return w

    def phi(self, j: int) -> np.ndarray:
        """Analysis window ``Psi_hat(2^j xi)``."""
        return self._window("phi", j, Psi_hat)

    def theta(self, j: int) -> np.ndarray:
        """Synthesis window ``theta_hat(2^j xi)``."""
        return self._window("theta", j, theta_hat)

    def low_pass(self, j: int) -> np.ndarray:
        return self._window("psi", j, psi_hat)

    def axis_factor(self, axis: int, j: int, k: int) -> np.ndarray:
        """One-axis factor of the tensor band window for indices ``(j_i, k_i)``.

        ``j = 0`` gives the low-pass ``psi_hat(2^k xi_i)``; ``j > 0`` the band
        ``Psi_hat(2^{k-j} xi_i)``.  Summed over ``0 <= j <= J`` the factors
        telescope to ``eta(2^{k-J} |xi_i|)``.
        """
        xi = self._axis_freq(axis)
        if j == 0:
            return psi_hat(2.0**k * xi)
        return Psi_hat(2.0 ** (k - j) * xi)

    def tensor_band(self, jvec, kvec) -> np.ndarray:
        out = np.ones(1)
        for axis, (j, k) in enumerate(zip(jvec, kvec)):
            out = out * self.axis_factor(axis, j, k)
        return out

    def resolved_region(self) -> tuple[float, float]:
        return 2.0 ** (-self.j_max), 2.0 ** (-self.j_min)

    def partition_sum(self, r) -> np.ndarray:
        """``sum_j theta_hat(2^j r)^2 phi_hat(2^j r)`` over the family's scales."""
        r = np.asarray(r, dtype=np.float64)
        return sum(theta_hat(2.0**j * r) ** 2 * Psi_hat(2.0**j * r) for j in self.scales)


def build_bump_family(g: GridSpec, j_min: int | None = None, j_max: int | None = None) -> BumpFamily:
    """Build the window family for ``g``.

    Scales default to the range whose resolved region covers every nonzero
    lattice frequency.  A finest band must reach below the largest lattice
    frequency and a coarsest band must reach above the smallest nonzero one.
    """
    dj_min, dj_max = default_scales(g)
    j_min = dj_min if j_min is None else int(j_min)
    j_max = dj_max if j_max is None else int(j_max)
    if j_min > j_max:
        raise ValueError(f"empty scale range [{j_min}, {j_max}]")
    nyquist = 1.0 / (2.0 * g.spacing)
    # Band j occupies 2^{-j-1} < |xi| < 2^{1-j}.
    if 2.0 ** (-j_min - 1) >= math.sqrt(g.d) * nyquist:
        raise ValueError(f"finest scale j_min={j_min} lies above every lattice frequency")
    if 2.0 ** (1 - j_max) <= 1.0 / g.box_length:
        raise ValueError(f"coarsest scale j_max={j_max} lies below the lowest nonzero frequency")
    return BumpFamily(g, j_min, j_max)


def band_pieces(f: Field, fam: BumpFamily) -> dict[int, np.ndarray]:
    """``f_j = phi_j * f`` for every scale, as plain arrays."""
    _check_family(f, fam)
    spec = real_spectrum(f)
    return {j: from_real_spectrum(f.grid, spec * fam.phi(j)) for j in fam.scales}


def square_function(f: Field, fam: BumpFamily) -> Field:
    """``S f = (sum_j |phi_j * f|^2)^(1/2)``."""
    pieces = band_pieces(f, fam)
    return Field(f.grid, np.sqrt(sum(p * p for p in pieces.values())))


def ball_offsets_max(a: np.ndarray, radius_cells: float) -> np.ndarray:
    """Running max of ``a`` over ``{y : |x - y| < radius_cells}`` on the torus.

    The ball is a union of axis-0 slabs; each slab is a lower-dimensional ball,
    and the 1-D innermost level uses a linear-time sliding max.
    """
    n = a.shape[0]
    d = a.ndim
    # Balls that reach past the torus half-diagonal cover every point.
    if radius_cells > 0.5 * n * math.sqrt(d) + 1:
        return np.full_like(a, a.max())
    return _ball_max(a, radius_cells * radius_cells, 0)


def _ball_max(a: np.ndarray, r2: float, axis: int) -> np.ndarray:
    n = a.shape[axis]
    if axis == a.ndim - 1:
        w = _half_width(r2)
        if w < 0:
            return None
        size = min(2 * w + 1, n)
        if size >= n:
            return np.repeat(a.max(axis=axis, keepdims=True), n, axis=axis)
        return ndimage.maximum_filter1d(a, size=size, axis=axis, mode="wrap")
    out = None
    cache: dict = {}
    top = _half_width(r2)
    for dy in range(-top, top + 1):
        rem = r2 - dy * dy
        # The innermost level depends only on its half width; deeper
        # recursions depend on the exact remaining squared radius.
        key = _half_width(rem) if axis + 1 == a.ndim - 1 else rem
        inner = cache.get(key)
        if inner is None:
            inner = _ball_max(a, rem, axis + 1)
            cache[key] = inner
        if inner is None:
            continue
        shifted = np.roll(inner, dy, axis=axis) if dy % n else inner
        out = shifted if out is None else np.maximum(out, shifted)
    return out


def _half_width(r2: float) -> int:
    """Largest integer ``w`` with ``w^2 < r2`` (``-1`` if none)."""
    if r2 <= 0:
        return -1
    w = math.isqrt(max(int(math.ceil(r2)) - 1, 0))
    while w * w >= r2:
        w -= 1
    while (w + 1) * (w + 1) < r2:
        w += 1
    return w


def peetre_radius_cells(g: GridSpec, j: int) -> float:
    """Window radius ``2^j`` in cells, floored at one cell."""
    return max(2.0**j / g.spacing, 1.0)


def peetre_square_function(f: Field, fam: BumpFamily) -> Field:
    """``S_max f = (sum_j sup_{|x-y| < 2^j} |phi_j * f(y)|^2)^(1/2)``."""
    pieces = band_pieces(f, fam)
    total = np.zeros(f.grid.shape)
    for j, p in pieces.items():
        total += ball_offsets_max(p * p, peetre_radius_cells(f.grid, j))
    return Field(f.grid, np.sqrt(total))


def h1_norm(f: Field, fam: BumpFamily) -> float:
    """``||S_max f||_1``."""
    return float(np.sum(peetre_square_function(f, fam).values) * f.grid.cell_volume)


def reproducing_residual(f: Field, fam: BumpFamily) -> float:
    """Relative L^2 residual of ``f - sum_j theta_j * theta_j * phi_j * f``."""
    _check_family(f, fam)
    spec = real_spectrum(f)
    recon = sum(spec * (fam.theta(j) ** 2 * fam.phi(j)) for j in fam.scales)
    diff = from_real_spectrum(f.grid, spec - recon)
    norm = float(np.sqrt(np.sum(f.values**2)))
    if norm == 0.0:
        return 0.0
    return float(np.sqrt(np.sum(diff**2))) / norm


def reconstruct(pieces: dict[int, np.ndarray], g: GridSpec, fam: BumpFamily) -> np.ndarray:
    """``sum_j theta_j * theta_j * p_j`` for per-scale arrays ``p_j``."""
    acc = None
    for j, p in pieces.items():
        term = real_spectrum(Field(g, p)) * fam.theta(j) ** 2
        acc = term if acc is None else acc + term
    if acc is None:
        return np.zeros(g.shape)
    return from_real_spectrum(g, acc)


def _check_family(f: Field, fam: BumpFamily) -> None:
    if fam.grid != f.grid:
        raise ValueError("bump family was built for a different grid")
