"""Round-trip invariants A, B and the pressure/energy integrands.

``A`` and ``B`` are the trace and second invariant of the round-trip
matrix ``R1 @ R2``, built from six scalar products of the polarization and
m-vectors. With ``x = exp(-2 a w)`` the round trip enters through
``det(1 - x R1 R2) = 1 - A x + B x**2``.

The integrands are returned with the sign of the reflection-operator
formulation (positive for attracting plates); :mod:`quadrature` applies the
overall sign so that attraction is reported negative.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .scattering import PlateResponse, PolarizationBasis, bdot

__all__ = [
    "NumericalConsistencyError",
    "KernelValues",
    "kernel_values",
    "round_trip_invariants",
    "pressure_integrand",
    "energy_integrand",
    "CrossCheck",
    "invariants_extended_precision",
    "lambda_dot_products",
]

IMAG_TOL = 1e-10
CROSS_CHECK_TOL = 1e-10
ROUNDING_SLACK = 256 * np.finfo(float).eps


class NumericalConsistencyError(ArithmeticError):
    """An internal identity failed; indicates a bug, not bad input."""


@dataclass(frozen=True)
class KernelValues:
    lam1EE: np.ndarray
    lam2EE: np.ndarray
    lam1BB: np.ndarray
    lam2BB: np.ndarray
    lam1BE: np.ndarray
    lam2BE: np.ndarray
    A: np.ndarray
    B: np.ndarray
    checked: bool = False


def round_trip_invariants(R1, R2):
    """Trace and second invariant of ``M = R1 @ R2``."""
    M = R1 @ R2
    tr = np.trace(M, axis1=-2, axis2=-1)
    tr2 = np.trace(M @ M, axis1=-2, axis2=-1)
    return tr, 0.5 * (tr * tr - tr2)


def invariants_extended_precision(mode_args, dps: int | None = None):
    """Round-trip invariants for one mode with R1, R2 built in ``dps``-digit
    arithmetic.

    ``mode_args`` are the :class:`~birefcasimir.scattering.TransverseMode`
    fields ``(kappa, u, v, theta, eps, mu, eps1_perp, eps1_par, eps2_perp,
    eps2_par)`` as floats. The matrix route cancels terms of size
    ``|R1|^2 |R2|^2 ~ (q/kappa)^8``, so by default the working precision
    grows by 8 digits per decade of ``q/kappa`` on top of 30.
    """
    from .scattering import TransverseMode, plate1_response, plate2_response, polarization_basis

    if dps is None:
        kappa, u, v = mode_args[:3]
        ratio = math.hypot(u, v) / kappa if kappa > 0 else 1e16
        dps = 30 + 8 * max(0, math.ceil(math.log10(max(ratio, 1.0))))
    with mpmath.workdps(dps):
        def arr(x):
            return np.array([mpmath.mpf(x)], dtype=object)

        kappa, u, v, theta, *rest = mode_args
        mode = TransverseMode(arr(kappa), arr(u), arr(v), mpmath.mpf(theta), *(arr(x) for x in rest))
        basis = polarization_basis(mode)
        R1 = plate1_response(mode, basis=basis).R[0]
        R2 = plate2_response(mode, basis=basis).R[0]
        M = np.dot(R1, R2)
        tr = sum(M[i, i] for i in range(3))
        M2 = np.dot(M, M)
        second = (tr * tr - sum(M2[i, i] for i in range(3))) / 2
        return complex(tr), complex(second)


def lambda_dot_products(r1: PlateResponse, r2: PlateResponse, basis: PolarizationBasis):
    """The six lambda scalars as literal bilinear dot products (reference
    form; accurate only while kappa is not small against u, v)."""
    nE, nB1, nB2 = basis.nE, basis.nB1, basis.nB2
    return (
        bdot(nE + r1.mE, nE), bdot(nE + r2.mE, nE),
        bdot(nB1 + r1.mB, nB2), bdot(nB2 + r2.mB, nB1),
        bdot(r1.mB, nE), bdot(r2.mB, nE),
    )


class CrossCheck:
    """Sampling policy for the matrix-invariant check: every ``every``-th call.

    Thread-safe counter; ``every=1`` checks all calls, ``every=0`` none.
    """

    def __init__(self, every: int = 997):
        self.every = every
        self._counter = itertools.count()

    def due(self) -> bool:
        if self.every <= 0:
            return False
        return next(self._counter) % self.every == 0


def _real(z, name):
    z = np.asarray(z)
    scale = np.maximum(np.abs(z), 1.0)
    if np.any(np.abs(z.imag) > IMAG_TOL * scale):
        worst = np.max(np.abs(z.imag) / scale)
        raise NumericalConsistencyError(f"{name} has imaginary part {worst:.3g}")
    return z.real


def _silence(response: PlateResponse, *lams):
    """Exact zeros for modes where the plate matches the gap; the scalars
    would otherwise keep rounding residue of size eps."""
    if response.matched is None or not np.any(response.matched):
        return lams
    return tuple(np.where(response.matched, 0.0, lam) for lam in lams)


def kernel_values(r1: PlateResponse, r2: PlateResponse, basis: PolarizationBasis,
                  check: bool | CrossCheck = True) -> KernelValues:
    """Six lambda scalars and the invariants A, B for one set of modes.

    With ``check`` (or when a :class:`CrossCheck` says so) A and B are
    compared with ``trace(R1 R2)`` and its second invariant.
    """
    nE, nB1, nB2 = basis.nE, basis.nB1, basis.nB2
    lam1EE = bdot(nE + r1.mE, nE)
    lam2EE = bdot(nE + r2.mE, nE)
    # (nB1 + mB1).nB2 and (nB2 + mB2).nB1, using that each reflected vector is
    # transverse to its wave vector; the plain dot product cancels terms of
    # order (q/kappa)^2 and loses all digits as kappa -> 0.
    lam1BB = 1 + r1.mB[..., 0] / nB1[..., 0]
    lam2BB = 1 + r2.mB[..., 0] / nB2[..., 0]
    lam1BE = bdot(r1.mB, nE)
    lam2BE = bdot(r2.mB, nE)
    lam1EE, lam1BB, lam1BE = _silence(r1, lam1EE, lam1BB, lam1BE)
    lam2EE, lam2BB, lam2BE = _silence(r2, lam2EE, lam2BB, lam2BE)
    A = lam1EE * lam2EE + lam1BB * lam2BB - 2 * lam1BE * lam2BE
    B = (lam1EE * lam1BB + lam1BE**2) * (lam2EE * lam2BB + lam2BE**2)

    do_check = check.due() if isinstance(check, CrossCheck) else bool(check)
    if do_check:
        tr, second = round_trip_invariants(r1.R, r2.R)
        # rounding in either route scales with the operator sizes, not with
        # |A|; the lambda scalars also carry O(eps) absolute error from
        # n + m cancelling for weak reflection
        size = (1 + np.linalg.norm(r1.R, axis=(-2, -1))) * (1 + np.linalg.norm(r2.R, axis=(-2, -1)))
        for name, ours, ref, slack in (("A", A, tr, size), ("B", B, second, size**2)):
            dev = np.abs(ours - ref)
            bad = dev > CROSS_CHECK_TOL * np.abs(ref) + ROUNDING_SLACK * slack
            if np.any(bad):
                rel = np.max(dev[bad] / np.maximum(np.abs(ref[bad]), 1e-300))
                raise NumericalConsistencyError(
                    f"{name} disagrees with round-trip matrix invariant (rel {rel:.3g})"
                )
    return KernelValues(
        lam1EE, lam2EE, lam1BB, lam2BB, lam1BE, lam2BE,
        _real(A, "A"), _real(B, "B"), checked=do_check,
    )


def _denominator(A, B, x):
    d = 1 - A * x + B * x * x
    if np.any(d <= 0):
        raise NumericalConsistencyError("round-trip denominator 1 - A x + B x^2 is not positive")
    return d


def pressure_integrand(kv: KernelValues | tuple, w, a):
    """``w (A e^{-2aw} - 2B e^{-4aw}) / (1 - A e^{-2aw} + B e^{-4aw})``."""
    A, B = (kv.A, kv.B) if isinstance(kv, KernelValues) else kv
    x = np.exp(-2 * a * np.asarray(w))
    return w * (A * x - 2 * B * x * x) / _denominator(A, B, x)


def energy_integrand(kv: KernelValues | tuple, w, a):
    """``-ln(1 - A e^{-2aw} + B e^{-4aw}) / 2``; vanishes as ``a -> inf``."""
    A, B = (kv.A, kv.B) if isinstance(kv, KernelValues) else kv
    x = np.exp(-2 * a * np.asarray(w))
    _denominator(A, B, x)
    return -0.5 * np.log1p(-A * x + B * x * x)
