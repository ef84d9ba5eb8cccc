import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from birefcasimir.materials import Constant, OscillatorSum, Oscillator, Scenario, UniaxialPlate
from birefcasimir.scattering import TransverseMode

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def _off_axis(phi, margin=1e-3):
    return abs(math.sin(2 * phi)) > margin


def random_mode_args(rng, n):
    """``n`` random desk-scale modes with random uniaxial materials.

    Plate permittivities in [1.1, 10] with eps_par/eps_perp in [0.3, 3]
    (bounded below so eps_par stays >= 1.1), gap eps in [1, 3], mu in
    [0.8, 2], kappa and q log-uniform in [0.05, 3], directions off the lab
    and rotated axes.
    """
    out = []
    while len(out) < n:
        kappa = math.exp(rng.uniform(math.log(0.05), math.log(3.0)))
        q = math.exp(rng.uniform(math.log(0.05), math.log(3.0)))
        phi = rng.uniform(0, 2 * math.pi)
        theta = rng.uniform(0, math.pi)
        if not (_off_axis(phi) and _off_axis(phi + theta)):
            continue
        e1p, e2p = rng.uniform(1.1, 10.0, size=2)
        r1 = rng.uniform(max(0.3, 1.1 / e1p), 3.0)
        r2 = rng.uniform(max(0.3, 1.1 / e2p), 3.0)
        eps = rng.uniform(1.0, 3.0)
        mu = rng.uniform(0.8, 2.0)
        out.append((kappa, q * math.cos(phi), q * math.sin(phi), theta,
                    eps, mu, e1p, e1p * r1, e2p, e2p * r2))
    return out


def mode_from_args(args):
    kappa, u, v, theta, *rest = args
    return TransverseMode(np.array([kappa]), np.array([u]), np.array([v]), theta,
                          *(np.array([x]) for x in rest))


@pytest.fixture(scope="session")
def mode_set():
    """The fixed-seed 1000-mode set shared by the oracle checks."""
    return random_mode_args(np.random.default_rng(20260), 1000)


@pytest.fixture
def birefringent():
    return UniaxialPlate(Constant(3.0), Constant(6.0))


@pytest.fixture
def dispersive_model():
    # two-oscillator fit of a generic dielectric on the imaginary axis
    return OscillatorSum((Oscillator(1.5e32, 1.2e16, 0.0), Oscillator(2.0e28, 4.0e13, 1e12)))


@pytest.fixture
def matched_scenario():
    p = UniaxialPlate.isotropic(Constant(2.0))
    return Scenario(p, p, 1e-7, 0.3, gap_eps=Constant(2.0))


# criterion number -> (passed, one-line detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
