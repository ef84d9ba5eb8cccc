import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from birefcasimir.kernel import (
    CrossCheck,
    KernelValues,
    NumericalConsistencyError,
    energy_integrand,
    invariants_extended_precision,
    kernel_values,
    lambda_dot_products,
    pressure_integrand,
    round_trip_invariants,
)
from birefcasimir.oracle import fresnel
from birefcasimir.scattering import plate1_response, plate2_response, polarization_basis

from conftest import mode_from_args, random_mode_args
from test_scattering import mode


def values_for(m, check=True):
    b = polarization_basis(m)
    return kernel_values(plate1_response(m, basis=b), plate2_response(m, b), b, check=check)


# ------------------------------------------------------------ integrands


def test_pressure_integrand_examples():
    assert pressure_integrand((0.0, 0.0), 1.0, 1.0) == 0.0
    assert pressure_integrand((1.0, 0.0), 1.0, 1.0) == pytest.approx(1 / (math.e**2 - 1), rel=1e-15)
    assert pressure_integrand((1.0, 0.0), 1.0, 1.0) == pytest.approx(0.156518, abs=5e-7)


def test_energy_integrand_examples():
    assert energy_integrand((0.0, 0.0), 1.0, 1.0) == 0.0
    # -ln(1 - e^-2) / 2 = 0.0727067...
    assert energy_integrand((1.0, 0.0), 1.0, 1.0) == pytest.approx(-0.5 * math.log(1 - math.exp(-2)), rel=1e-15)
    assert energy_integrand((1.0, 0.0), 1.0, 1.0) == pytest.approx(0.0727067, abs=5e-8)


@given(st.floats(-1.9, 1.9), st.floats(0, 1), st.floats(0.1, 5))
def test_pressure_large_separation_asymptote(A, B, w):
    a = 20.0 / w  # 2 a w = 40
    x = math.exp(-40.0)
    got = pressure_integrand((A, B), w, a)
    assert abs(got - w * A * x) <= 1e-12 * w * x


def test_overflow_safe_at_huge_separation():
    assert pressure_integrand((1.0, 0.5), 1.0, 1e4) == 0.0
    assert energy_integrand((1.0, 0.5), 1.0, 1e4) == 0.0


@given(st.floats(-1.9, 1.9), st.floats(0, 0.95), st.floats(0.1, 5), st.floats(0.05, 3))
def test_energy_derivative_is_minus_pressure(A, B, w, a):
    """d/da of the energy integrand is minus the pressure integrand."""
    if 1 - abs(A) + B <= 0.05:
        return
    h = 1e-4 * a
    fd = (energy_integrand((A, B), w, a + h) - energy_integrand((A, B), w, a - h)) / (2 * h)
    scale = max(abs(pressure_integrand((A, B), w, a)), 1e-12)
    assert abs(fd + pressure_integrand((A, B), w, a)) < 1e-8 * max(scale, w)


def test_denominator_violation_raises():
    with pytest.raises(NumericalConsistencyError):
        pressure_integrand((3.0, 0.0), 0.01, 1.0)
    with pytest.raises(NumericalConsistencyError):
        energy_integrand((3.0, 0.0), 0.01, 1.0)


# ------------------------------------------------------------ kernel values


def test_matched_plates_give_zero_kernel():
    m = mode(0.7, 0.4, 1.3, 0.3, eps=2.0, e1p=2.0, e1a=2.0, e2p=2.0, e2a=2.0)
    kv = values_for(m)
    for name in ("lam1EE", "lam2EE", "lam1BB", "lam2BB", "lam1BE", "lam2BE", "A", "B"):
        assert abs(getattr(kv, name)[0]) < 1e-12


@given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0.05, 3), st.floats(1.1, 10), st.floats(1.1, 10),
       st.floats(0, math.pi))
def test_isotropic_plates_reduce_to_fresnel(kappa, u, v, e1, e2, theta):
    m = mode(kappa, u, v, theta, e1p=e1, e1a=e1, e2p=e2, e2a=e2)
    kv = values_for(m)
    q = math.hypot(u, v)
    f1, f2 = fresnel(kappa, q, 1.0, 1.0, e1), fresnel(kappa, q, 1.0, 1.0, e2)
    A = f1.rE * f2.rE + f1.rB * f2.rB
    B = f1.rE * f2.rE * f1.rB * f2.rB
    assert kv.A[0] == pytest.approx(A, rel=1e-10, abs=1e-14)
    assert kv.B[0] == pytest.approx(B, rel=1e-10, abs=1e-14)
    assert abs(kv.lam1BE[0]) < 1e-12 and abs(kv.lam2BE[0]) < 1e-12


def test_invariants_match_extended_precision(mode_set):
    for args in mode_set[:200]:
        kv = values_for(mode_from_args(args))
        tr, second = invariants_extended_precision(args)
        assert abs(kv.A[0] - tr.real) <= 1e-10 * abs(tr)
        assert abs(kv.B[0] - second.real) <= 1e-10 * abs(second)


def test_kernel_values_are_real(mode_set):
    for args in mode_set[:200]:
        kv = values_for(mode_from_args(args))
        assert np.isrealobj(kv.A) and np.isrealobj(kv.B)
        for lam in (kv.lam1EE, kv.lam2EE, kv.lam1BB, kv.lam2BB, kv.lam1BE, kv.lam2BE):
            assert abs(lam.imag[0]) <= 1e-10 * max(abs(lam[0]), 1.0)


def test_bb_scalars_match_dot_products_at_desk_scale(mode_set):
    for args in mode_set[:200]:
        m = mode_from_args(args)
        b = polarization_basis(m)
        r1, r2 = plate1_response(m, basis=b), plate2_response(m, b)
        kv = kernel_values(r1, r2, b)
        dots = lambda_dot_products(r1, r2, b)
        np.testing.assert_allclose([kv.lam1BB[0], kv.lam2BB[0]], [dots[2][0], dots[3][0]], rtol=1e-11)


@pytest.mark.parametrize("kappa", [1e-3, 1e-5, 1e-7])
def test_invariants_accurate_at_small_kappa(kappa):
    """The transversality form of the BB scalars keeps A at full precision
    where the literal dot product cancels terms of size (q/kappa)^2. B is
    O(kappa^4) there and only its absolute error matters in 1 - A x + B x^2."""
    args = (kappa, 0.6, 0.8, 0.7, 1.0, 1.0, 3.0, 7.0, 2.0, 5.0)
    kv = values_for(mode_from_args(args), check=False)
    tr, second = invariants_extended_precision(args)
    assert kv.A[0] == pytest.approx(tr.real, rel=1e-12)
    assert abs(kv.B[0] - second.real) < 1e-14


def test_extended_precision_reference_needs_growing_precision():
    args = (1e-7, 0.6, 0.8, 0.7, 1.0, 1.0, 3.0, 7.0, 2.0, 5.0)
    _, fixed = invariants_extended_precision(args, dps=50)
    _, auto = invariants_extended_precision(args)
    _, high = invariants_extended_precision(args, dps=160)
    assert auto.real == pytest.approx(high.real, rel=1e-12)
    assert abs(fixed.real - high.real) > 1e3 * abs(high.real)


def test_large_permittivity_small_kappa_static_limit():
    """At eps = 1e8 and kappa << q/sqrt(eps) the E channel stops reflecting,
    leaving A = rB^2 (about 1 - 4/eps) instead of the mirror value 2."""
    args = (1e-7, 0.6, 0.8, 0.0, 1.0, 1.0, 1e8, 1e8, 1e8, 1e8)
    kv = values_for(mode_from_args(args), check=False)
    f = fresnel(1e-7, 1.0, 1.0, 1.0, 1e8)
    assert kv.A[0] == pytest.approx(f.rE**2 + f.rB**2, rel=1e-12)
    assert kv.A[0] == pytest.approx(1 - 4e-8, rel=1e-9)


def test_director_period_of_kernel(mode_set):
    for args in mode_set[:100]:
        kv = values_for(mode_from_args(args))
        shifted = values_for(mode_from_args((*args[:3], args[3] + math.pi, *args[4:])))
        assert shifted.A[0] == pytest.approx(kv.A[0], rel=1e-12, abs=1e-15)
        assert shifted.B[0] == pytest.approx(kv.B[0], rel=1e-12, abs=1e-15)


def test_round_trip_invariants_of_known_matrices():
    R1 = np.diag([0.5, -0.25, 0.0]).astype(complex)
    R2 = np.diag([0.4, 0.8, 0.0]).astype(complex)
    tr, second = round_trip_invariants(R1, R2)
    assert tr == pytest.approx(0.2 - 0.2)
    assert second == pytest.approx(0.2 * -0.2)


def test_cross_check_catches_corrupted_operator():
    m = mode(0.8, 0.5, 1.1, 0.6, e1p=2.0, e1a=5.0, e2p=3.0, e2a=1.5)
    b = polarization_basis(m)
    r1, r2 = plate1_response(m, basis=b), plate2_response(m, b)
    bad = dataclasses.replace(r2, R=r2.R * 1.001)
    with pytest.raises(NumericalConsistencyError, match="A disagrees"):
        kernel_values(r1, bad, b, check=True)
    assert not kernel_values(r1, bad, b, check=False).checked


def test_cross_check_sampling():
    cc = CrossCheck(every=3)
    assert [cc.due() for _ in range(7)] == [True, False, False, True, False, False, True]
    assert not any(CrossCheck(every=0).due() for _ in range(5))


def test_vectorised_kernel_over_panel():
    args = random_mode_args(np.random.default_rng(5), 30)
    from birefcasimir.scattering import TransverseMode

    eps = (1.3, 1.0, 2.0, 6.0, 4.0, 1.7)
    batch = TransverseMode(*(np.array([a[i] for a in args]) for i in range(3)), 0.4,
                           *(np.full(30, e) for e in eps))
    kv = values_for(batch)
    assert isinstance(kv, KernelValues) and kv.A.shape == (30,)
    for i, a in enumerate(args):
        single = values_for(mode_from_args((*a[:3], 0.4, *eps)))
        assert kv.A[i] == single.A[0] and kv.B[i] == single.B[0]


def test_matched_plates_give_exact_zeros_over_wide_range():
    q = np.geomspace(1e-12, 300, 40)
    phi = 0.1 + np.linspace(0, math.pi, 9)[:-1]
    u, v = (q[:, None] * np.cos(phi)).ravel(), (q[:, None] * np.sin(phi)).ravel()
    from birefcasimir.scattering import TransverseMode

    m = TransverseMode(1.05, u, v, 0.3, 2.0, 1.0, 2.0, 2.0, 2.0, 2.0)
    kv = values_for(m, check=False)
    assert not np.any(kv.A) and not np.any(kv.B)


def test_partially_matched_modes_only_silence_matching_plate():
    from birefcasimir.scattering import TransverseMode

    one = lambda x: np.array([x, x])  # noqa: E731
    m = TransverseMode(one(0.8), one(0.5), one(1.1), 0.6, one(2.0), one(1.0),
                       np.array([2.0, 3.0]), np.array([2.0, 5.0]), one(3.0), one(1.5))
    kv = values_for(m)
    assert kv.lam1EE[0] == 0 and kv.lam1BB[0] == 0 and kv.lam1BE[0] == 0 and kv.A[0] == 0
    assert kv.lam2EE[0] != 0 and kv.A[1] != 0
