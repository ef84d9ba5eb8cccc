"""Reflection operators of the two birefringent plates for one transverse mode.

A mode is a plane-wave component ``exp(i(u y + v z))`` at imaginary
frequency ``xi = c*kappa``. Everything here broadcasts over arrays of
``(kappa, u, v)`` so a whole quadrature panel is evaluated in one call;
3-vectors live on the last axis, 3x3 matrices on the last two.

Products between polarization vectors are the bilinear (unconjugated)
dot product throughout. Plate 2 reflects the wave travelling towards +x
(wave vector ``(i w, u, v)``), plate 1 the one travelling towards -x.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .materials import Scenario

__all__ = [
    "AxisModeError",
    "TransverseMode",
    "PolarizationBasis",
    "PlateResponse",
    "make_mode",
    "polarization_basis",
    "plate2_response",
    "plate1_response",
    "bdot",
    "outer",
]


class AxisModeError(ValueError):
    """Mode lies on u=0 or v=0 (or the primed axes) where the plate scalars
    are singular; the quadrature never places nodes there."""

    code = "axis-mode"

    def __init__(self, which: str):
        super().__init__(f"axis mode ({which} = 0), use limit path")
        self.which = which


def bdot(a, b):
    return np.sum(a * b, axis=-1)


def outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _is_mp(x) -> bool:
    return isinstance(x, np.ndarray) and x.dtype == object


def _real_array(x):
    x = np.asarray(x)
    return x if x.dtype == object else x.astype(float)


_mp_sqrt = np.vectorize(lambda z: mpmath.sqrt(z), otypes=[object])


def _sqrt(x):
    return _mp_sqrt(x) if _is_mp(x) else np.sqrt(x)


def _cos_sin(theta):
    if isinstance(theta, mpmath.mpf):
        return mpmath.cos(theta), mpmath.sin(theta)
    return np.cos(theta), np.sin(theta)


def _vec(x, y, z):
    x, y, z = np.broadcast_arrays(x, y, z)
    out = np.stack([x, y, z], axis=-1)
    return out if out.dtype == object else out.astype(complex)


@dataclass(frozen=True)
class TransverseMode:
    """Wavenumbers of one mode (any consistent inverse-length unit) and the
    six response values frozen at its frequency.

    Arrays of ``mpmath.mpf`` (dtype object) are accepted and carried
    through unchanged, giving an extended-precision evaluation path.
    """

    kappa: np.ndarray
    u: np.ndarray
    v: np.ndarray
    theta: float
    eps: np.ndarray
    mu: np.ndarray
    eps1_perp: np.ndarray
    eps1_par: np.ndarray
    eps2_perp: np.ndarray
    eps2_par: np.ndarray

    def __post_init__(self):
        for name in ("kappa", "u", "v", "eps", "mu", "eps1_perp", "eps1_par", "eps2_perp", "eps2_par"):
            object.__setattr__(self, name, _real_array(getattr(self, name)))
        if np.any((self.kappa == 0) & (self.u == 0) & (self.v == 0)):
            raise ValueError("all-zero mode (kappa, u, v) = 0")
        ct, st = _cos_sin(self.theta)
        s = self.u**2 + self.v**2
        k2 = self.kappa**2
        up = self.u * ct - self.v * st
        vp = self.v * ct + self.u * st
        sp = up**2 + vp**2
        derived = {
            "q2": s,
            "u_p": up,
            "v_p": vp,
            "w": _sqrt(s + self.eps * self.mu * k2),
            "w2o": _sqrt(s + self.eps2_perp * k2),
            "w2e": _sqrt(self.u**2 + self.v**2 * self.eps2_par / self.eps2_perp + self.eps2_par * k2),
            "w1o": _sqrt(sp + self.eps1_perp * k2),
            "w1e": _sqrt(up**2 + vp**2 * self.eps1_par / self.eps1_perp + self.eps1_par * k2),
        }
        for name, val in derived.items():
            object.__setattr__(self, name, val)

    def with_theta(self, theta: float) -> "TransverseMode":
        return TransverseMode(
            self.kappa, self.u, self.v, theta, self.eps, self.mu,
            self.eps1_perp, self.eps1_par, self.eps2_perp, self.eps2_par,
        )


def make_mode(scenario: Scenario, kappa, u, v, unit: float = 1.0,
              theta: float | None = None) -> TransverseMode:
    """Build a mode for ``scenario``.

    ``kappa, u, v`` are in units of ``1/unit`` metres, so ``unit=1`` means
    SI and ``unit=scenario.a`` means wavenumbers scaled by the separation.
    Materials are evaluated at ``xi = c * kappa / unit``.
    """
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0):
        raise ValueError("kappa must be >= 0")
    xi = SPEED_OF_LIGHT * kappa / unit
    responses = scenario.responses(xi)
    return TransverseMode(
        kappa, u, v, scenario.theta if theta is None else theta, *responses
    )


@dataclass(frozen=True)
class PolarizationBasis:
    nE: np.ndarray
    nB2: np.ndarray
    nB1: np.ndarray


def polarization_basis(mode: TransverseMode) -> PolarizationBasis:
    if np.any(mode.q2 == 0):
        raise AxisModeError("u = v")
    rs = _sqrt(mode.q2)
    norm_b = mode.kappa * _sqrt(mode.eps * mode.mu) * rs
    u, v, w = mode.u, mode.v, mode.w
    nE = _vec(0.0, -v / rs, u / rs)
    nB2 = _vec(1j * mode.q2, u * w, v * w) / norm_b[..., None]
    nB1 = _vec(1j * mode.q2, -u * w, -v * w) / norm_b[..., None]
    return PolarizationBasis(nE, nB2, nB1)


@dataclass(frozen=True)
class PlateResponse:
    plate: int
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    mE: np.ndarray
    mB: np.ndarray
    R: np.ndarray
    matched: np.ndarray | None = None


def _plate_scalars(kappa, u, v, w, wo, we, eps, mu, eps_perp):
    """Transmission scalars and m-vector components of a plate whose optical
    axis is the local z-axis, for the wave incident with decay constant ``w``.

    Returns ``alpha, beta, gamma, delta, mE_raw, mB_raw`` with the m-vectors
    not yet divided by their normalisations.
    """
    k2 = kappa**2
    alpha = 1j * u * (eps * wo + eps_perp * w) / (v * (eps * wo**2 + eps_perp * we * w))
    gamma = -1j * v * wo * (w + mu * wo) / (eps_perp * u * k2 * (w + mu * we))
    beta = 2j * eps * v * w / (
        eps * wo * w + eps_perp * u**2
        + 1j * u * v * alpha * (eps * w + eps_perp * we)
        + eps * mu * (v**2 + eps_perp * k2)
    )
    delta = 2 * eps * w * (u**2 + v**2) / (
        eps * u * wo + 1j * eps * gamma * v * wo**2
        + eps_perp * w * (u + 1j * gamma * v * we)
    )
    ext = v**2 + eps_perp * k2
    mE = _vec(
        eps_perp * beta * (u + 1j * alpha * v * we) / eps,
        beta * (-1j * wo + alpha * u * v),
        alpha * beta * ext,
    )
    mB = _vec(
        eps_perp * delta * (-1j * u + gamma * v * we) / eps,
        -delta * (wo + 1j * gamma * u * v),
        -1j * gamma * delta * ext,
    )
    return alpha, beta, gamma, delta, mE, mB


def _norms(mode):
    rs = _sqrt(mode.q2)
    return rs, mode.kappa * _sqrt(mode.eps * mode.mu) * rs


def plate2_response(mode: TransverseMode, basis: PolarizationBasis | None = None) -> PlateResponse:
    """Scalars, m-vectors and reflection matrix of plate 2 (axis along z)."""
    if np.any(mode.u == 0):
        raise AxisModeError("u")
    if np.any(mode.v == 0):
        raise AxisModeError("v")
    basis = basis or polarization_basis(mode)
    alpha, beta, gamma, delta, mE, mB = _plate_scalars(
        mode.kappa, mode.u, mode.v, mode.w, mode.w2o, mode.w2e,
        mode.eps, mode.mu, mode.eps2_perp,
    )
    rs, nb = _norms(mode)
    mE = mE / rs[..., None]
    mB = mB / nb[..., None]
    matched = _matched(mode, mode.eps2_perp, mode.eps2_par)
    mE, mB = _silence(matched, basis.nE, basis.nB2, mE, mB)
    R = -outer(basis.nE + mE, basis.nE) - outer(basis.nB2 + mB, basis.nB2)
    return PlateResponse(2, alpha, beta, gamma, delta, mE, mB, R, matched)


def _matched(mode, eps_perp, eps_par):
    """Modes at which the plate is indistinguishable from the gap."""
    return (eps_perp == mode.eps) & (eps_par == mode.eps) & (mode.mu == 1)


def _silence(matched, n_e, n_b, mE, mB):
    """Set m = -n where the plate matches the gap, so that R is exactly zero
    there instead of rounding noise."""
    if not np.any(matched):
        return mE, mB
    mask = matched[..., None]
    return np.where(mask, -n_e, mE), np.where(mask, -n_b, mB)


def _rotate(theta, vec):
    ct, st = _cos_sin(theta)
    x, y, z = vec[..., 0], vec[..., 1], vec[..., 2]
    return np.stack([x, ct * y + st * z, -st * y + ct * z], axis=-1)


def plate1_response(mode: TransverseMode, theta: float | None = None,
                    basis: PolarizationBasis | None = None) -> PlateResponse:
    """Plate 1, optical axis rotated by ``theta`` from z.

    Built in the frame where the plate's axis is z (primed wavenumbers),
    then rotated back with the x-axis rotation matrix.
    """
    if theta is not None and theta != mode.theta:
        mode = mode.with_theta(theta)
    up, vp = mode.u_p, mode.v_p
    if np.any(up == 0):
        raise AxisModeError("u'")
    if np.any(vp == 0):
        raise AxisModeError("v'")
    basis = basis or polarization_basis(mode)
    eps, mu, e1 = mode.eps, mode.mu, mode.eps1_perp
    w, wo, we = mode.w, mode.w1o, mode.w1e
    k2 = mode.kappa**2

    alpha = -1j * up * (eps * wo + e1 * w) / (vp * (eps * wo**2 + e1 * we * w))
    gamma = 1j * vp * wo * (w + mu * wo) / (e1 * up * k2 * (w + mu * we))
    beta = -2j * eps * vp * w / (
        eps * wo * w + e1 * up**2
        - 1j * up * vp * alpha * (eps * w + e1 * we)
        + eps * mu * (vp**2 + e1 * k2)
    )
    delta = 2 * eps * w * (up**2 + vp**2) / (
        eps * up * wo - 1j * eps * gamma * vp * wo**2
        + e1 * w * (up - 1j * gamma * vp * we)
    )
    ext = vp**2 + e1 * k2
    rs, nb = _norms(mode)
    mE_p = _vec(
        e1 * beta * (up - 1j * alpha * vp * we) / eps,
        beta * (1j * wo + alpha * up * vp),
        alpha * beta * ext,
    )
    mB_p = _vec(
        e1 * delta * (-1j * up - gamma * vp * we) / eps,
        -delta * (-wo + 1j * gamma * up * vp),
        -1j * gamma * delta * ext,
    )
    mE = _rotate(mode.theta, mE_p) / rs[..., None]
    mB = _rotate(mode.theta, mB_p) / nb[..., None]
    matched = _matched(mode, mode.eps1_perp, mode.eps1_par)
    mE, mB = _silence(matched, basis.nE, basis.nB1, mE, mB)
    R = -outer(basis.nE + mE, basis.nE) - outer(basis.nB1 + mB, basis.nB1)
    return PlateResponse(1, alpha, beta, gamma, delta, mE, mB, R, matched)
