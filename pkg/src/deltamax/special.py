"""Bessel functions of integer and half-integer order and radial Fourier profiles.

The Fourier transform uses the kernel ``exp(-2 pi i x.xi)``. Radial profiles are
expressed through the normalised Bessel function

    Lambda_nu(z) = Gamma(nu + 1) (z/2)^(-nu) J_nu(z),

which is entire in ``z``, equals 1 at the origin and is evaluated by its own
power series near zero, so no profile divides by a vanishing argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Below this argument (or 2*nu, whichever is larger) the power series is used.
SERIES_SWITCH = 12.0

_LD = np.longdouble
_LD_EPS = float(np.finfo(np.longdouble).eps)


@dataclass(frozen=True, order=True)
class BesselOrder:
    """Order ``nu = twice_order / 2`` (integer or half-integer, non-negative)."""

    twice_order: int

    def __post_init__(self):
        if int(self.twice_order) != self.twice_order or self.twice_order < 0:
            raise ValueError(f"twice_order must be a non-negative integer, got {self.twice_order}")

    @classmethod
    def of(cls, nu) -> BesselOrder:
        if isinstance(nu, BesselOrder):
            return nu
        two = 2.0 * float(nu)
        if not two.is_integer():
            raise ValueError(f"order {nu} is neither integer nor half-integer")
        return cls(int(two))

    @property
    def nu(self) -> float:
        return self.twice_order / 2.0


def _switch_point(nu: float) -> float:
    return max(SERIES_SWITCH, 2.0 * nu)


@lru_cache(maxsize=None)
def _hankel_coefficients(twice_order: int, count: int = 200) -> tuple[float, ...]:
    """a_k(nu) = prod_{m=1..k} (4 nu^2 - (2m-1)^2) / (k! 8^k)."""
    mu = float(twice_order) ** 2  # 4 nu^2
    coeffs = [1.0]
    for k in range(1, count):
        coeffs.append(coeffs[-1] * (mu - (2 * k - 1) ** 2) / (8.0 * k))
        if coeffs[-1] == 0.0:
            break
    return tuple(coeffs)


def _hankel_pq(order: BesselOrder, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Asymptotic P, Q sums truncated at the smallest term, per element."""
    a = _hankel_coefficients(order.twice_order)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)
    prev = np.full(x.shape, np.inf)
    xp = np.ones_like(x)
    for k, ak in enumerate(a):
        if k:
            xp = xp * x
        term = ak / xp
        mag = np.abs(term)
        # Stop each element once terms begin to grow (optimal truncation).
        # Early terms may grow for large orders; only the tail is checked.
        if 2 * k - 1 > order.twice_order:
            active &= mag <= prev
        if not active.any():
            break
        sign = -1.0 if (k // 2) % 2 else 1.0
        contrib = np.where(active, sign * term, 0.0)
        if k % 2 == 0:
            p += contrib
        else:
            q += contrib
        prev = np.where(active, mag, prev)
        active &= mag > 1e-18 * np.maximum(np.abs(p), 1e-300)
    return p, q


def _bessel_asymptotic(order: BesselOrder, x: np.ndarray) -> np.ndarray:
    nu = order.nu
    p, q = _hankel_pq(order, x)
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _lambda_series(order: BesselOrder, z: np.ndarray) -> np.ndarray:
    """Lambda_nu(z) = sum_k (-1)^k (z/2)^(2k) Gamma(nu+1) / (k! Gamma(k+nu+1))."""
    nu = _LD(order.nu)
    w = (np.asarray(z, dtype=_LD) / 2) ** 2
    term = np.ones_like(w)
    total = np.ones_like(w)
    k = 0
    while True:
        k += 1
        term = -term * w / (k * (k + nu))
        total += term
        if np.all(np.abs(term) <= _LD_EPS * np.maximum(np.abs(total), _LD(1e-30))):
            break
        if k > 400:
            break
    return total.astype(np.float64)


def normalized_bessel(nu, z) -> np.ndarray | float:
    """Lambda_nu(z) = Gamma(nu+1) (z/2)^(-nu) J_nu(z); equals 1 at ``z = 0``."""
    order = BesselOrder.of(nu)
    z_arr = np.asarray(z, dtype=np.float64)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(np.abs(z_arr))
    out = np.empty_like(z_arr)
    small = z_arr <= _switch_point(order.nu)
    if small.any():
        out[small] = _lambda_series(order, z_arr[small])
    if (~small).any():
        zl = z_arr[~small]
        scale = math.gamma(order.nu + 1.0) * (zl / 2.0) ** (-order.nu)
        out[~small] = scale * _bessel_asymptotic(order, zl)
    return float(out[0]) if scalar else out


def bessel_j(nu, x) -> np.ndarray | float:
    """Bessel function of the first kind J_nu(x) for ``x >= 0``.

    Parameters
    ----------
    nu : BesselOrder, int or float
        Integer or half-integer order.
    x : float or array_like
        Non-negative arguments.
    """
    order = BesselOrder.of(nu)
    x_arr = np.asarray(x, dtype=np.float64)
    if np.any(x_arr < 0) or np.any(~np.isfinite(x_arr)):
        raise ValueError("bessel_j requires finite x >= 0")
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    out = np.empty_like(x_arr)
    small = x_arr <= _switch_point(order.nu)
    if small.any():
        xs = x_arr[small]
        lam = _lambda_series(order, xs)
        out[small] = lam * (xs / 2.0) ** order.nu / math.gamma(order.nu + 1.0)
    if (~small).any():
        out[~small] = _bessel_asymptotic(order, x_arr[~small])
    return float(out[0]) if scalar else out


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d."""
    return d * unit_ball_volume(d)


def sphere_fourier(d: int, rho) -> np.ndarray | float:
    """Radial Fourier profile of the normalised surface measure on the unit sphere.

    Equals ``Gamma(d/2) (pi rho)^(1-d/2) J_{(d-2)/2}(2 pi rho)`` and 1 at ``rho = 0``.
    """
    if d < 2:
        raise ValueError("sphere_fourier needs d >= 2")
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    out = normalized_bessel(BesselOrder(d - 2), 2.0 * math.pi * rho)
    return float(out) if np.ndim(out) == 0 else out


def annulus_fourier(d: int, delta: float, rho) -> np.ndarray | float:
    """Fourier transform of the indicator of ``{1 - delta < |y| < 1 + delta}`` at ``|xi| = rho``.

    The transform of a ball of radius ``R`` is ``omega_d R^d Lambda_{d/2}(2 pi R rho)``;
    the annulus is the difference of two balls.
    """
    _check_delta(delta)
    if d < 2:
        raise ValueError("annulus_fourier needs d >= 2")
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    order = BesselOrder(d)
    ro, ri = 1.0 + delta, 1.0 - delta
    outer = ro**d * normalized_bessel(order, 2.0 * math.pi * ro * rho)
    inner = ri**d * normalized_bessel(order, 2.0 * math.pi * ri * rho)
    out = unit_ball_volume(d) * (outer - inner)
    return float(out) if np.ndim(out) == 0 else out


def _check_delta(delta: float) -> None:
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta={delta} must lie in (0, 1/2)")


@dataclass(frozen=True)
class DecayEnvelopes:
    """Sup-ratios of the annulus transform against the three decay envelopes."""

    d: int
    delta: float
    envelope_a: float
    envelope_b: float
    interpolated: float


def decay_envelopes(d: int, delta: float, rho) -> DecayEnvelopes:
    """Evaluate the three envelope sup-ratios on the radial sample points ``rho``.

    envelope_a   sup (1 + 2 pi rho)^((d-1)/2) |chi_hat| / |C|
    envelope_b   sup (1 + 2 pi rho)^((d+1)/2) |chi_hat|
    interpolated sup delta^(1/2) (1 + 2 pi rho)^(d/2) |chi_hat| / |C|
    """
    from .annulus import annulus_measure

    rho = np.asarray(rho, dtype=np.float64)
    chi = np.abs(annulus_fourier(d, delta, rho))
    vol = annulus_measure(d, delta)
    base = 1.0 + 2.0 * math.pi * rho
    return DecayEnvelopes(
        d=d,
        delta=delta,
        envelope_a=float(np.max(base ** ((d - 1) / 2.0) * chi / vol)),
        envelope_b=float(np.max(base ** ((d + 1) / 2.0) * chi)),
        interpolated=float(np.max(math.sqrt(delta) * base ** (d / 2.0) * chi / vol)),
    )
