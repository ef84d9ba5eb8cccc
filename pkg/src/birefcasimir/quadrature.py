"""Adaptive evaluation of the pressure, energy and torque integrals.

Coordinates are dimensionless: wavenumbers in units of 1/a. The transverse
plane is polar, ``(u, v) = r (cos phi, sin phi)``. The angle uses an equally
spaced periodic rule offset from the axes (the plate scalars are singular on
u=0, v=0 and on the rotated axes); the integrand is even under
``(u, v) -> (-u, -v)`` so only ``phi`` in [0, pi) is evaluated. ``r`` and
``kappa`` are mapped from [0, 1) and integrated with nested adaptive
Gauss-Kronrod (7/15) panels.

Results are reported with attraction negative: ``F = -dE/da`` and
``Q = -dE/dtheta``.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT, hbar

from .kernel import CrossCheck, energy_integrand, kernel_values, pressure_integrand
from .materials import Scenario
from .scattering import TransverseMode, plate1_response, plate2_response, polarization_basis

__all__ = [
    "HBAR_C",
    "QuadratureSpec",
    "PointResult",
    "IntegrationResult",
    "gauss_kronrod",
    "pairwise_sum",
    "adaptive_gk",
    "integrate_polar",
    "angular_nodes",
    "integrate_pressure",
    "integrate_energy",
    "torque",
    "evaluate_point",
    "sweep",
    "frequency",
]

HBAR_C = hbar * SPEED_OF_LIGHT

# Gauss-Kronrod 7/15 (QUADPACK qk15): Kronrod abscissae on [0, 1] of the
# symmetric rule; every other one (starting at index 1) is a Gauss node.
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])


def gauss_kronrod():
    """Nodes on [-1, 1], Kronrod weights and Gauss weights (zero off the
    Gauss nodes) of the 15-point rule."""
    x = np.concatenate([-_XGK[:-1], _XGK[::-1]])
    wk = np.concatenate([_WGK[:-1], _WGK[::-1]])
    wg_half = np.zeros(8)
    wg_half[1::2] = _WG
    wg = np.concatenate([wg_half[:-1], wg_half[::-1]])
    return x, wk, wg


_GK_X, _GK_WK, _GK_WG = gauss_kronrod()


def pairwise_sum(items):
    """Sum a sequence of arrays as a balanced binary tree in the given order."""
    items = list(items)
    if not items:
        raise ValueError("empty sum")
    while len(items) > 1:
        paired = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            paired.append(items[-1])
        items = paired
    return items[0]


def frequency(kappa_hat, a):
    """Imaginary frequency (rad/s) of a dimensionless wavenumber."""
    return SPEED_OF_LIGHT * np.asarray(kappa_hat) / a


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and discretisation of the triple integrals.

    ``abs_floor`` is relative to the natural scale (hbar c / a^4 for the
    pressure, hbar c / a^3 for energy and torque). ``angular_order`` counts
    nodes on the full circle; it is doubled (at most ``max_angular_factor``
    times) when a probe shows the angular rule is the accuracy bottleneck.
    ``workers`` only affects wall time, never results.
    """

    rel_tol: float = 1e-6
    abs_floor: float = 1e-30
    max_refinement_depth: int = 30
    angular_order: int = 32
    angular_offset: float | None = None
    radial_map: str = "rational"
    kappa_map: str = "rational"
    torque_step: float = 1e-3
    max_angular_factor: int = 4
    initial_panels: int = 4
    cross_check_every: int = 997
    workers: int = 1
    max_panels: int = 4000

    def __post_init__(self):
        if not (0 < self.rel_tol < 1):
            raise ValueError("rel_tol must be in (0, 1)")
        if self.angular_order < 4 or self.angular_order % 4:
            raise ValueError("angular_order must be a positive multiple of 4")
        for name in ("radial_map", "kappa_map"):
            if getattr(self, name) not in _MAPS:
                raise ValueError(f"{name} must be one of {sorted(_MAPS)}")
        if self.torque_step <= 0:
            raise ValueError("torque_step must be > 0")
        if self.max_refinement_depth < 1 or self.workers < 1:
            raise ValueError("max_refinement_depth and workers must be >= 1")

    @property
    def offset(self) -> float:
        if self.angular_offset is not None:
            return self.angular_offset
        return math.pi / (4 * self.angular_order)


def _rational(t):
    return t / (1 - t), 1 / (1 - t) ** 2


def _exp_tail(t):
    return -np.log1p(-t), 1 / (1 - t)


_MAPS = {"rational": _rational, "exp-tail": _exp_tail}


@dataclass
class _Panel:
    lo: float
    hi: float
    depth: int
    value: np.ndarray
    error: np.ndarray
    l1: np.ndarray
    nodes: int


def _gk_panel(func, lo, hi, depth, tmap):
    half = 0.5 * (hi - lo)
    t = 0.5 * (hi + lo) + half * _GK_X
    x, jac = tmap(t)
    vals, extra_err, nodes = func(x)
    vals = vals * jac
    k = half * (vals @ _GK_WK)
    g = half * (vals @ _GK_WG)
    err = np.abs(k - g)
    if extra_err is not None:
        err = err + half * ((extra_err * jac) @ _GK_WK)
    l1 = half * (np.abs(vals) @ _GK_WK)
    return _Panel(lo, hi, depth, k, err, l1, nodes)


@dataclass
class IntegrationResult:
    values: np.ndarray
    errors: np.ndarray
    converged: bool
    nodes: int
    panels: int


def adaptive_gk(func, ncomp, rel_tol, abs_floor, max_depth, tmap=_rational,
                check=None, executor=None, initial_panels=4, max_panels=4000, tie=None):
    """Vector-valued adaptive Gauss-Kronrod over t in [0, 1].

    ``func(x)`` takes the mapped abscissae (shape (15,)) and returns
    ``(values, extra_error, nodes)`` with ``values`` of shape (ncomp, 15);
    ``extra_error`` (same shape or None) is added to the panel error, which
    is how inner-integral errors reach the outer level.

    ``check`` lists the components that must meet the tolerance
    ``max(rel_tol * L1, abs_floor)``, with ``L1`` the integral of the
    absolute integrand; default all. ``tie`` maps a component to another
    whose ``L1`` also sets its scale, for integrals that may cancel to zero
    (the torque at a symmetry angle is measured against the energy). Each round splits the
    worst panels (ties broken by position) until the remaining error is
    below half the tolerance; the panel set and the final pairwise sum are
    independent of how panel evaluations are scheduled.
    """
    check = list(range(ncomp)) if check is None else list(check)
    abs_floor = np.broadcast_to(np.asarray(abs_floor, dtype=float), (ncomp,))

    def run(intervals):
        jobs = [(lo, hi, d) for lo, hi, d in intervals]
        if executor is None:
            return [_gk_panel(func, lo, hi, d, tmap) for lo, hi, d in jobs]
        return list(executor.map(lambda j: _gk_panel(func, j[0], j[1], j[2], tmap), jobs))

    edges = np.linspace(0.0, 1.0, initial_panels + 1)
    panels = run([(edges[i], edges[i + 1], 0) for i in range(initial_panels)])
    converged = False
    while True:
        panels.sort(key=lambda p: p.lo)
        total = pairwise_sum([p.value for p in panels])
        err = pairwise_sum([p.error for p in panels])
        scale = np.maximum(pairwise_sum([p.l1 for p in panels]), np.abs(total))
        for i, j in (tie or {}).items():
            scale[i] = max(scale[i], scale[j])
        tol = np.maximum(rel_tol * scale, abs_floor)
        if np.all(err[check] <= tol[check]):
            converged = True
            break
        score = [float(np.max(p.error[check] / tol[check])) for p in panels]
        order = sorted(range(len(panels)), key=lambda i: (-score[i], panels[i].lo))
        remaining = err[check].copy()
        split = []
        for i in order:
            if np.all(remaining <= 0.5 * tol[check]):
                break
            if panels[i].depth >= max_depth:
                continue
            split.append(i)
            remaining = remaining - panels[i].error[check]
        if not split or len(panels) + len(split) > max_panels:
            break
        children = []
        for i in split:
            p = panels[i]
            mid = 0.5 * (p.lo + p.hi)
            children += [(p.lo, mid, p.depth + 1), (mid, p.hi, p.depth + 1)]
        keep = [p for j, p in enumerate(panels) if j not in set(split)]
        panels = keep + run(children)
    return IntegrationResult(
        values=total, errors=err, converged=converged,
        nodes=sum(p.nodes for p in panels), panels=len(panels),
    )


def integrate_polar(integrand, spec: QuadratureSpec, ncomp, check=None, executor=None,
                    tie=None):
    """Nested adaptive integral over dimensionless ``kappa`` then ``q``.

    ``integrand(kappa_hat, q_hat_array) -> (ncomp, len(q))`` must already
    include the radial Jacobian and the angular integral. The absolute
    floor is applied in dimensionless form, where the natural scale is 1.
    Inner errors are added to the outer panel errors.
    """
    inner_rel = spec.rel_tol / 10
    floor = spec.abs_floor
    rmap, kmap = _MAPS[spec.radial_map], _MAPS[spec.kappa_map]

    def inner(kappa_hat):
        def f(q):
            return integrand(kappa_hat, q), None, q.size

        return adaptive_gk(f, ncomp, inner_rel, floor, spec.max_refinement_depth, rmap,
                           check=check, initial_panels=2, max_panels=spec.max_panels, tie=tie)

    def outer(kappas):
        results = [inner(k) for k in kappas]
        vals = np.stack([r.values for r in results], axis=1)
        errs = np.stack([r.errors for r in results], axis=1)
        outer.ok &= all(r.converged for r in results)
        return vals, errs, sum(r.nodes for r in results)

    outer.ok = True
    res = adaptive_gk(outer, ncomp, spec.rel_tol, floor, spec.max_refinement_depth, kmap,
                      check=check, executor=executor, initial_panels=spec.initial_panels,
                      max_panels=spec.max_panels, tie=tie)
    res.converged = res.converged and outer.ok
    return res


def angular_nodes(order: int, offset: float, thetas=()) -> np.ndarray:
    """Half-circle angles ``offset + 2 pi k / order``, k < order/2.

    The offset is nudged if any node (or node + theta for the given plate-1
    angles) falls within 1e-6 rad of a multiple of pi/2.
    """
    step = 2 * math.pi / order
    k = np.arange(order // 2)
    for attempt in range(16):
        phi = offset + step * k
        worst = min(_axis_distance(phi + t) for t in (0.0, *thetas))
        if worst > 1e-6:
            return phi
        offset += step / (2.0 + attempt)
    raise RuntimeError("could not place angular nodes off the axes")


def _axis_distance(angles):
    r = np.mod(angles, math.pi / 2)
    return float(np.min(np.minimum(r, math.pi / 2 - r)))


class _ModeIntegrand:
    """Angle-integrated pressure, energy and torque integrands at one kappa."""

    def __init__(self, scenario: Scenario, spec: QuadratureSpec, theta: float,
                 order: int, want_torque: bool, checker: CrossCheck):
        self.scenario = scenario
        self.spec = spec
        self.theta = theta
        self.want_torque = want_torque
        self.checker = checker
        h = spec.torque_step
        self.shifts = (h, -h, h / 2, -h / 2) if want_torque else ()
        self.phi = angular_nodes(order, spec.offset, tuple(theta + s for s in (0.0, *self.shifts)))
        self.weight = 2 * (2 * math.pi / order)
        self.cos, self.sin = np.cos(self.phi), np.sin(self.phi)

    def responses(self, kappa_hat):
        xi = frequency(kappa_hat, self.scenario.a)
        return tuple(float(x) for x in self.scenario.responses(xi))

    def __call__(self, kappa_hat, q, phi_stride=1):
        cos, sin = self.cos[::phi_stride], self.sin[::phi_stride]
        weight = self.weight * phi_stride
        nq, nphi = q.size, cos.size
        u = (q[:, None] * cos[None, :]).ravel()
        v = (q[:, None] * sin[None, :]).ravel()
        resp = self.responses(kappa_hat)
        out = np.zeros((4, nq * nphi))
        eps, mu = resp[0], resp[1]
        w_all = np.sqrt(u * u + v * v + eps * mu * kappa_hat**2)
        live = 2 * w_all < 740.0
        if np.any(live):
            mode = TransverseMode(kappa_hat, u[live], v[live], self.theta, *resp)
            basis = polarization_basis(mode)
            r2 = plate2_response(mode, basis)
            r1 = plate1_response(mode, basis=basis)
            kv = kernel_values(r1, r2, basis, check=self.checker)
            w = mode.w
            out[0, live] = pressure_integrand(kv, w, 1.0)
            out[1, live] = energy_integrand(kv, w, 1.0)
            if self.want_torque:
                e = []
                for s in self.shifts:
                    m_s = mode.with_theta(self.theta + s)
                    kv_s = kernel_values(plate1_response(m_s, basis=basis), r2, basis, check=False)
                    e.append(energy_integrand(kv_s, w, 1.0))
                h = self.spec.torque_step
                d_h = (e[0] - e[1]) / (2 * h)
                d_h2 = (e[2] - e[3]) / h
                out[2, live] = (4 * d_h2 - d_h) / 3
                out[3, live] = np.abs(d_h2 - d_h) / 3
        out = out.reshape(4, nq, nphi).sum(axis=2) * weight
        return out * q[None, :]


def _choose_angular_order(make, spec: QuadratureSpec):
    """Smallest order (angular_order * 2^j) whose angular sums agree with a
    4x finer rule to rel_tol/10 at probe points; returns (order, rel_err)."""
    probes = [(k, q) for k in (1e-3, 0.05, 0.3, 1.0) for q in (0.05, 0.5, 2.0)]
    order = spec.angular_order
    limit = spec.angular_order * spec.max_angular_factor
    while True:
        coarse = make(order)
        fine = make(order * 4)
        worst = 0.0
        for k, q in probes:
            a = coarse(k, np.array([q]))[:3, 0]
            b = fine(k, np.array([q]))[:3, 0]
            scale = np.abs(b[:2]).max()
            if scale == 0:
                continue
            worst = max(worst, float(np.max(np.abs(a - b)[:2]) / scale))
        if worst <= spec.rel_tol / 10 or order >= limit:
            return order, worst
        order *= 2


@dataclass
class PointResult:
    """F (Pa), E (J/m^2), Q (J/m^2/rad) with error estimates for one point."""

    a: float
    theta: float
    F: float = math.nan
    F_err: float = math.nan
    E: float = math.nan
    E_err: float = math.nan
    Q: float = math.nan
    Q_err: float = math.nan
    converged: bool = False
    nodes: int = 0
    seconds: float = 0.0
    angular_order: int = 0
    error: str | None = None

    def as_dict(self):
        return asdict(self)


def evaluate_point(scenario: Scenario, spec: QuadratureSpec | None = None,
                   quantities=("F", "E", "Q"), theta: float | None = None) -> PointResult:
    """Evaluate the requested quantities on shared quadrature nodes.

    ``theta`` overrides ``scenario.theta`` without reduction to [0, pi),
    which lets tests probe the periodicity of the integrand itself.
    """
    spec = spec or QuadratureSpec()
    theta = scenario.theta if theta is None else float(theta)
    start = time.perf_counter()
    want_torque = "Q" in quantities
    checker = CrossCheck(spec.cross_check_every)

    def make(order):
        return _ModeIntegrand(scenario, spec, theta, order, want_torque, checker)

    order, _ = _choose_angular_order(make, spec)
    integrand = make(order)
    comp = {"F": 0, "E": 1, "Q": 2}
    check = sorted(comp[qn] for qn in quantities)
    executor = ThreadPoolExecutor(spec.workers) if spec.workers > 1 else None
    try:
        res = integrate_polar(integrand, spec, 4, check=check, executor=executor,
                              tie={2: 1} if want_torque else None)
    finally:
        if executor is not None:
            executor.shutdown()
    a = scenario.a
    pref = HBAR_C / (4 * math.pi**3)
    p4, p3 = pref / a**4, pref / a**3
    floor4, floor3 = spec.abs_floor * HBAR_C / a**4, spec.abs_floor * HBAR_C / a**3
    out = PointResult(a=a, theta=theta, converged=res.converged, nodes=res.nodes * (order // 2),
                      angular_order=order)
    if "F" in quantities:
        # "+ 0.0" turns the -0.0 of an exactly vanishing integral into 0.0
        out.F = -p4 * res.values[0] + 0.0
        out.F_err = max(p4 * res.errors[0], floor4)
    if "E" in quantities:
        out.E = -p3 * res.values[1] + 0.0
        out.E_err = max(p3 * res.errors[1], floor3)
    if "Q" in quantities:
        out.Q = p3 * res.values[2]
        out.Q_err = max(p3 * (res.errors[2] + abs(res.values[3])), floor3)
    out.seconds = time.perf_counter() - start
    return out


def integrate_pressure(scenario: Scenario, spec: QuadratureSpec | None = None):
    """Perpendicular force per unit area (Pa, attraction negative) and error."""
    r = evaluate_point(scenario, spec, ("F",))
    return r.F, r.F_err


def integrate_energy(scenario: Scenario, spec: QuadratureSpec | None = None):
    """Interaction energy per unit area (J/m^2) and error."""
    r = evaluate_point(scenario, spec, ("E",))
    return r.E, r.E_err


def torque(scenario: Scenario, spec: QuadratureSpec | None = None):
    """Torque per unit area ``-dE/dtheta`` (J/m^2/rad) and error.

    Differentiates the integrand by central differences at steps ``h`` and
    ``h/2`` on shared nodes and Richardson-combines them; the difference of
    the two estimates is folded into the error.
    """
    r = evaluate_point(scenario, spec, ("Q",))
    return r.Q, r.Q_err


def _sweep_one(args):
    scenario, spec, quantities = args
    try:
        return evaluate_point(scenario, spec, quantities)
    except Exception as exc:  # recorded in-row, sweep continues
        return PointResult(a=scenario.a, theta=scenario.theta, error=f"{type(exc).__name__}: {exc}")


def sweep(scenarios, spec: QuadratureSpec | None = None, quantities=("F", "E", "Q"),
          workers: int | None = None):
    """Evaluate each scenario; results come back in input order.

    With ``workers > 1`` several points run in separate processes (each
    single-threaded); a lone point uses ``workers`` threads over its outer
    panels instead. Each point is computed exactly as it would be alone, so
    output is bit-identical for any worker count.
    """
    scenarios = list(scenarios)
    if not scenarios:
        raise ValueError("sweep needs at least one scenario")
    spec = spec or QuadratureSpec()
    workers = spec.workers if workers is None else workers
    if len(scenarios) == 1:
        return [_sweep_one((scenarios[0], replace(spec, workers=max(workers, 1)), tuple(quantities)))]
    serial = replace(spec, workers=1)
    jobs = [(s, serial, tuple(quantities)) for s in scenarios]
    if workers <= 1:
        return [_sweep_one(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
        return list(pool.map(_sweep_one, jobs))
