"""Independent reference calculations used by the tests and acceptance runs.

Nothing here uses the closed-form plate scalars of :mod:`scattering`:

* :func:`fresnel` is the textbook two-channel result for isotropic plates,
* :func:`boundary_solve` matches tangential A and H numerically, with the
  plate's transmitted waves taken from the 4x4 first-order (Berreman)
  system of the full lab-frame dielectric tensor,
* :func:`lifshitz_isotropic` integrates the scalar Lifshitz formula,
* :func:`constant_mirror_ratio` gives the energy of constant-permittivity
  half-spaces in vacuum in closed form up to one smooth integral.

Not included: a comparison with a closed-form free energy for birefringent
half-spaces, for which no formula is available here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
import scipy.linalg

from .materials import MaterialError, Scenario, dielectric_tensor, rotation_matrix

__all__ = [
    "FresnelPair",
    "fresnel",
    "boundary_solve",
    "reflection_matrix",
    "lifshitz_isotropic",
    "ideal_mirror_pressure",
    "ideal_mirror_energy",
    "constant_mirror_ratio",
    "SingularSystemError",
]

IDEAL_PRESSURE = math.pi**2 / 240
IDEAL_ENERGY = math.pi**2 / 720


class SingularSystemError(ArithmeticError):
    pass


def ideal_mirror_pressure() -> float:
    """|F| a^4 / (hbar c) for perfect mirrors in vacuum."""
    return IDEAL_PRESSURE


def ideal_mirror_energy() -> float:
    """|E| a^3 / (hbar c) for perfect mirrors in vacuum."""
    return IDEAL_ENERGY


def constant_mirror_ratio(eps: float, dps: int = 30) -> float:
    """E(eps) / E(ideal) for two constant-``eps`` half-spaces in vacuum.

    Writing ``kappa = p w`` and ``q = w sqrt(1 - p^2)``, the reflection
    amplitudes depend on ``p`` alone and the radial integral is elementary,
    ``int w^2 ln(1 - R e^{-2w}) dw = -Li4(R) / 4``, so

        ratio = (45 / pi^4) int_0^1 [Li4(rE^2) + Li4(rB^2)] dp

    with ``s = sqrt(1 - p^2 + eps p^2)``, ``rE = (1 - s)/(1 + s)`` and
    ``rB = (eps - s)/(eps + s)``. Constant materials have ``F a^4 = 3 E a^3``,
    so the same ratio holds for the pressure. The ratio approaches 1 only
    like ``ln(eps) / sqrt(eps)``; at ``eps = 1e8`` it is 0.998096.
    """
    if eps <= 1:
        raise ValueError("eps must be > 1")
    with mpmath.workdps(dps):
        e = mpmath.mpf(eps)

        def f(p):
            s = mpmath.sqrt(1 - p * p + e * p * p)
            rE, rB = (1 - s) / (1 + s), (e - s) / (e + s)
            return mpmath.polylog(4, rE**2) + mpmath.polylog(4, rB**2)

        # the integrand varies on the scale p ~ 1/sqrt(eps)
        knee = 1 / mpmath.sqrt(e)
        edges = sorted({mpmath.mpf(0), mpmath.mpf(1),
                        *(mpmath.mpf(10) ** k * knee for k in range(-3, 4)
                          if mpmath.mpf(10) ** k * knee < 1)})
        return float(45 / mpmath.pi**4 * mpmath.quad(f, edges))


@dataclass(frozen=True)
class FresnelPair:
    rE: np.ndarray
    rB: np.ndarray


def fresnel(kappa, q, eps, mu, eps_plate, mu_plate=1.0) -> FresnelPair:
    """Imaginary-frequency Fresnel amplitudes of an isotropic half-space.

    ``q`` is the transverse wavenumber ``sqrt(u**2 + v**2)``; ``eps, mu``
    belong to the incidence medium.
    """
    k2 = np.asarray(kappa, dtype=float) ** 2
    q2 = np.asarray(q, dtype=float) ** 2
    w = np.sqrt(q2 + eps * mu * k2)
    wp = np.sqrt(q2 + eps_plate * mu_plate * k2)
    rE = (mu_plate * w - mu * wp) / (mu_plate * w + mu * wp)
    rB = (eps_plate * w - eps * wp) / (eps_plate * w + eps * wp)
    return FresnelPair(rE, rB)


def _cross(a, b):
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def _first_order_matrix(kappa, u, v, eps_t, mu):
    """Matrix M of d/dx (Ay, Az, by, bz) = M (Ay, Az, by, bz), b = curl A / mu.

    From curl(curl A / mu) + kappa^2 eps A = 0 with transverse dependence
    exp(i(u y + v z)).
    """
    k2 = kappa**2
    M = np.zeros((4, 4), dtype=complex)
    for col in range(4):
        Ay, Az, by, bz = np.eye(4)[col]
        Ax = ((-1j * u * bz + 1j * v * by) / k2 - eps_t[0, 1] * Ay - eps_t[0, 2] * Az) / eps_t[0, 0]
        bx = (1j * u * Az - 1j * v * Ay) / mu
        A = np.array([Ax, Ay, Az])
        epsA = eps_t @ A
        M[:, col] = [
            1j * u * Ax + mu * bz,
            1j * v * Ax - mu * by,
            1j * u * bx - k2 * epsA[2],
            1j * v * bx + k2 * epsA[1],
        ]
    return M


def _plate_modes(kappa, u, v, eps_t, side):
    """Orthonormal basis (4x2) of the plate waves decaying away from the gap.

    ``side=+1``: plate occupies x > interface, waves ~ exp(m x), Re m < 0.
    """
    M = _first_order_matrix(kappa, u, v, eps_t, 1.0)
    _, Z, sdim = scipy.linalg.schur(M, output="complex", sort="lhp" if side > 0 else "rhp")
    if sdim != 2:
        raise SingularSystemError(f"expected 2 decaying plate waves, found {sdim}")
    return Z[:, :2]


def _gap_state(k, A, mu):
    b = 1j * _cross(k, A) / mu
    return np.array([A[1], A[2], b[1], b[2]])


def _gap_wavevectors(kappa, u, v, eps, mu):
    w = math.sqrt(u * u + v * v + eps * mu * kappa * kappa)
    return np.array([1j * w, u, v]), np.array([-1j * w, u, v])


def _transverse_pair(k):
    t1 = np.array([0.0, -k[2], k[1]], dtype=complex)
    return t1, _cross(k, t1)


def boundary_solve(kappa, u, v, eps, mu, eps_tensor, incident, plate=2):
    """Reflected vector potential for ``incident`` polarization at one plate.

    Parameters
    ----------
    kappa, u, v : float
        Mode wavenumbers.
    eps, mu : float
        Gap response.
    eps_tensor : (3, 3) array
        Lab-frame dielectric tensor of the plate (non-magnetic).
    incident : (3,) complex array
        Polarization of the incident wave; must be transverse to its wave
        vector (``(i w, u, v)`` at plate 2, ``(-i w, u, v)`` at plate 1).
    plate : {1, 2}
        Plate 2 lies at x > gap, plate 1 at x < gap.
    """
    k_plus, k_minus = _gap_wavevectors(kappa, u, v, eps, mu)
    k_in, k_out = (k_plus, k_minus) if plate == 2 else (k_minus, k_plus)
    incident = np.asarray(incident, dtype=complex)
    if abs(np.dot(k_in, incident)) > 1e-9 * np.linalg.norm(k_in) * np.linalg.norm(incident):
        raise ValueError("incident polarization is not transverse")
    r1, r2 = _transverse_pair(k_out)
    modes = _plate_modes(kappa, u, v, np.asarray(eps_tensor, dtype=float), +1 if plate == 2 else -1)
    system = np.column_stack([_gap_state(k_out, r1, mu), _gap_state(k_out, r2, mu), -modes])
    rhs = -_gap_state(k_in, incident, mu)
    if np.linalg.cond(system) > 1e13:
        raise SingularSystemError("boundary-condition system is singular")
    coef = np.linalg.solve(system, rhs)
    return coef[0] * r1 + coef[1] * r2


def reflection_matrix(kappa, u, v, eps, mu, eps_tensor, plate=2):
    """3x3 reflection operator assembled from :func:`boundary_solve`.

    The operator maps incident polarization to reflected polarization and
    annihilates the incident wave vector.
    """
    k_plus, k_minus = _gap_wavevectors(kappa, u, v, eps, mu)
    k_in = k_plus if plate == 2 else k_minus
    p1, p2 = _transverse_pair(k_in)
    images = np.column_stack([
        boundary_solve(kappa, u, v, eps, mu, eps_tensor, p1, plate),
        boundary_solve(kappa, u, v, eps, mu, eps_tensor, p2, plate),
        np.zeros(3, dtype=complex),
    ])
    return images @ np.linalg.inv(np.column_stack([p1, p2, k_in]))


def scenario_reflection_matrices(scenario: Scenario, kappa, u, v, xi):
    """Oracle (R1, R2) for ``scenario`` at one mode, materials at ``xi``."""
    eps = float(scenario.gap_eps(xi))
    mu = float(scenario.gap_mu(xi))
    R2 = reflection_matrix(kappa, u, v, eps, mu, dielectric_tensor(scenario.plate2, 0.0, xi), plate=2)
    R1 = reflection_matrix(kappa, u, v, eps, mu,
                           dielectric_tensor(scenario.plate1, scenario.theta, xi), plate=1)
    return R1, R2


def lifshitz_isotropic(scenario: Scenario, spec=None):
    """Pressure and energy of isotropic plates from the scalar Lifshitz formula.

    Returns ``((F, F_err), (E, E_err))`` in Pa and J/m^2 with attraction
    negative. Uses the shared adaptive engine over (kappa, q) with the
    angular integral done analytically.
    """
    from . import quadrature

    for plate in (scenario.plate1, scenario.plate2):
        if plate.eps_perp != plate.eps_par:
            raise MaterialError("lifshitz_isotropic needs isotropic plates")
    spec = spec or quadrature.QuadratureSpec()
    a = scenario.a

    def integrand(kappa_hat, q_hat):
        xi = quadrature.frequency(kappa_hat, a)
        eps = float(scenario.gap_eps(xi))
        mu = float(scenario.gap_mu(xi))
        e1 = float(scenario.plate1.eps_perp(xi))
        e2 = float(scenario.plate2.eps_perp(xi))
        w = np.sqrt(q_hat**2 + eps * mu * kappa_hat**2)
        x = np.exp(-2 * w)
        p = np.zeros_like(w)
        e = np.zeros_like(w)
        f1, f2 = fresnel(kappa_hat, q_hat, eps, mu, e1), fresnel(kappa_hat, q_hat, eps, mu, e2)
        for r in (f1.rE * f2.rE, f1.rB * f2.rB):
            p += 2 * w * r * x / (1 - r * x)
            e += np.log1p(-r * x)
        jac = 2 * np.pi * q_hat
        # d/da ln(1 - r x) = 2 w r x / (1 - r x); F = -dE/da
        return np.stack([-jac * p, jac * e])

    res = quadrature.integrate_polar(integrand, spec, ncomp=2)
    pref = quadrature.HBAR_C / (8 * np.pi**3)
    F = (pref * res.values[0] / a**4, pref * res.errors[0] / a**4)
    E = (pref * res.values[1] / a**3, pref * res.errors[1] / a**3)
    return F, E


def rotated_tensor(eps_perp, eps_par, theta):
    lam = rotation_matrix(theta)
    return lam @ np.diag([eps_perp, eps_perp, eps_par]) @ lam.T
