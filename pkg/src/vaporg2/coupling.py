"""Collective damping and dipole-dipole coupling of two identical emitters.

Both rates are returned in units of Gamma and take ``x = k0 * r12`` and the
cosine of the angle between the (shared) dipole axis and the separation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .constants import K0

# Below this x the radiative bracket of gamma12 is evaluated from its Taylor
# series to avoid cancellation between cos(x)/x^2 and sin(x)/x^3.
_SERIES_X = 0.5
_SERIES_TERMS = 10


class QuadratureError(RuntimeError):
    """The solid-angle integral did not reach the requested tolerance."""


@dataclass(frozen=True)
class DipoleGeometry:
    r12: np.ndarray
    dipole_axis: np.ndarray

    def __post_init__(self):
        r12 = np.asarray(self.r12, dtype=float).reshape(3)
        axis = np.asarray(self.dipole_axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise ValueError("dipole_axis must be a unit vector")
        if not np.linalg.norm(r12) > 0.0:
            raise ValueError("zero separation: collective parameters are undefined")
        object.__setattr__(self, "r12", r12)
        object.__setattr__(self, "dipole_axis", axis)


@dataclass(frozen=True)
class CollectiveParams:
    gamma12: float
    g12: float
    x: float
    cos_theta: float


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0.0)):
        raise ValueError("x = k0*r must be strictly positive")
    return x


def _as_output(value):
    return float(value) if np.ndim(value) == 0 else value


def damping_gamma12(x, cos_theta):
    """Collective decay rate gamma12 / Gamma.

    Accepts scalars or broadcastable arrays.  ``x <= 0`` raises ``ValueError``;
    gamma12 tends to 1 from below as x -> 0.
    """
    x = _check_x(x)
    c2 = np.asarray(cos_theta, dtype=float) ** 2
    x, c2 = np.broadcast_arrays(x, c2)
    small = x < _SERIES_X
    xs = np.where(small, x, 1.0)
    xl = np.where(small, 1.0, x)
    # (x cos x - sin x) / x^3 = sum_{n>=1} (-1)^n 2n x^(2n-2) / (2n+1)!
    x2 = xs * xs
    rad_s = np.zeros_like(xs)
    power = np.ones_like(xs)
    for n in range(1, _SERIES_TERMS + 1):
        rad_s += (-1.0) ** n * 2 * n / math.factorial(2 * n + 1) * power
        power = power * x2
    rad = np.where(small, rad_s, np.cos(xl) / xl**2 - np.sin(xl) / xl**3)
    sinc = np.sin(x) / x
    out = 1.5 * ((1.0 - c2) * sinc + (1.0 - 3.0 * c2) * rad)
    return _as_output(out)


def coupling_g12(x, cos_theta):
    """Coherent dipole-dipole exchange rate g12 / Gamma (diverges as 1/x^3)."""
    x = _check_x(x)
    c2 = np.asarray(cos_theta, dtype=float) ** 2
    out = 1.5 * (
        -(1.0 - c2) * np.cos(x) / x
        + (1.0 - 3.0 * c2) * (np.sin(x) / x**2 + np.cos(x) / x**3)
    )
    return _as_output(out)


def _sphere_integral(x, cos_theta, epsabs, n_phi):
    # Polar axis along r12, dipole in the xz-plane at angle theta to it.
    sin_theta = np.sqrt(max(0.0, 1.0 - cos_theta * cos_theta))
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    cos_phi = np.cos(phi)

    def angular(u):
        s = np.sqrt(max(0.0, 1.0 - u * u))
        proj = sin_theta * s * cos_phi + cos_theta * u
        # periodic trapezoid over the azimuth
        return np.mean(1.0 - proj * proj)

    def re(u):
        return angular(u) * np.cos(x * u)

    def im(u):
        return angular(u) * np.sin(x * u)

    opts = dict(epsabs=epsabs, epsrel=0.0, limit=500)
    vr, er = integrate.quad(re, -1.0, 1.0, **opts)
    vi, ei = integrate.quad(im, -1.0, 1.0, **opts)
    # dOmega / 4pi = du dphi / 4pi -> (1/2) du after the azimuthal mean
    scale = 1.5 * 0.5
    return complex(scale * vr, scale * vi), scale * max(er, ei)


def f_quadrature(x: float, cos_theta: float, tol: float = 1e-10) -> complex:
    """Numerical solid-angle integral whose real part equals gamma12 / Gamma.

    Integrates (3/2) <(1 - (e_d . e_k)^2) exp(i k.r)> over k directions with an
    adaptive Gauss-Kronrod rule in cos(polar angle) and a periodic trapezoid
    in azimuth.  Convergence is certified by repeating the integration at half
    the tolerance and a doubled azimuthal grid; a disagreement larger than
    ``tol`` raises :class:`QuadratureError`.
    """
    x = float(_check_x(x))
    cos_theta = float(cos_theta)
    if abs(cos_theta) > 1.0:
        raise ValueError("cos_theta must lie in [-1, 1]")
    coarse, err_c = _sphere_integral(x, cos_theta, tol, 16)
    fine, err_f = _sphere_integral(x, cos_theta, tol / 2, 32)
    if abs(coarse - fine) > tol or err_f > tol:
        raise QuadratureError(
            f"solid-angle quadrature not converged at x={x}: "
            f"|delta|={abs(coarse - fine):.3e}, estimate={err_f:.3e}"
        )
    if abs(fine.imag) >= tol:
        raise QuadratureError(f"imaginary residue {fine.imag:.3e} exceeds {tol}")
    return fine


def collective_params(geom: DipoleGeometry) -> CollectiveParams:
    r = float(np.linalg.norm(geom.r12))
    cos_theta = float(np.dot(geom.dipole_axis, geom.r12) / r)
    cos_theta = min(1.0, max(-1.0, cos_theta))
    x = K0 * r
    return CollectiveParams(
        gamma12=damping_gamma12(x, cos_theta),
        g12=coupling_g12(x, cos_theta),
        x=x,
        cos_theta=cos_theta,
    )
