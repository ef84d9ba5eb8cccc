"""Dielectric response on the imaginary frequency axis.

All models are evaluated at ``omega = i*xi`` with ``xi`` in rad/s, where
passive response functions are real and (for permittivities) at least 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "MaterialError",
    "Constant",
    "Oscillator",
    "OscillatorSum",
    "Tabulated",
    "MaterialModel",
    "UniaxialPlate",
    "Scenario",
    "evaluate",
    "rotation_matrix",
    "dielectric_tensor",
    "load_tabulated",
]

MIN_TABLE_ROWS = 4


class MaterialError(ValueError):
    """Invalid material data (raised at construction or load time)."""


def _check_kind(kind: str) -> None:
    if kind not in ("permittivity", "permeability"):
        raise MaterialError(f"unknown response kind {kind!r}")


def _check_values(values: np.ndarray, kind: str) -> None:
    if not np.all(np.isfinite(values)):
        raise MaterialError("non-finite response value")
    if kind == "permittivity" and np.any(values < 1.0):
        raise MaterialError("permittivity < 1 violates passivity on the imaginary axis")
    if kind == "permeability" and np.any(values <= 0.0):
        raise MaterialError("permeability must be > 0")


@dataclass(frozen=True)
class Constant:
    """Dispersionless response."""

    value: float
    kind: str = "permittivity"

    def __post_init__(self):
        _check_kind(self.kind)
        object.__setattr__(self, "value", float(self.value))
        _check_values(np.array([self.value]), self.kind)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.full(xi.shape, self.value) if xi.ndim else self.value


@dataclass(frozen=True)
class Oscillator:
    """One Lorentz term: ``strength / (resonance**2 + xi**2 + damping*xi)``.

    ``strength`` is the squared plasma frequency (rad^2/s^2). A zero
    resonance with positive damping gives a Drude term.
    """

    strength: float
    resonance: float
    damping: float = 0.0

    def __post_init__(self):
        if self.strength < 0 or self.resonance < 0 or self.damping < 0:
            raise MaterialError("oscillator parameters must be non-negative")
        if self.resonance == 0 and self.damping == 0:
            raise MaterialError("oscillator needs a resonance or damping")


@dataclass(frozen=True)
class OscillatorSum:
    """``eps(i xi) = 1 + sum_j s_j / (w_j**2 + xi**2 + g_j*xi)``."""

    oscillators: tuple[Oscillator, ...]
    kind: str = field(default="permittivity", init=False)

    def __post_init__(self):
        object.__setattr__(self, "oscillators", tuple(self.oscillators))
        if not self.oscillators:
            raise MaterialError("oscillator sum needs at least one term")

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = np.ones(xi.shape)
        for osc in self.oscillators:
            out = out + osc.strength / (osc.resonance**2 + xi * xi + osc.damping * xi)
        return out if xi.ndim else float(out)

    @property
    def max_resonance(self) -> float:
        return max(o.resonance for o in self.oscillators)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Monotone-cubic interpolation of imaginary-axis data.

    Below the grid the first value is held; above it the response relaxes
    to 1 as ``(xi_last/xi)**2``, continuous with the last tabulated point.
    """

    xi: np.ndarray
    values: np.ndarray
    kind: str = "permittivity"
    source: str | None = None

    def __post_init__(self):
        _check_kind(self.kind)
        xi = np.array(self.xi, dtype=float)
        values = np.array(self.values, dtype=float)
        if xi.ndim != 1 or xi.shape != values.shape:
            raise MaterialError("frequency grid and values must be 1-d of equal length")
        if xi.size < MIN_TABLE_ROWS:
            raise MaterialError(f"need at least {MIN_TABLE_ROWS} rows, got {xi.size}")
        if np.any(xi < 0) or not np.all(np.isfinite(xi)):
            raise MaterialError("frequencies must be finite and >= 0")
        if np.any(np.diff(xi) <= 0):
            raise MaterialError("non-monotone frequency grid")
        _check_values(values, self.kind)
        xi.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_interp", PchipInterpolator(xi, values, extrapolate=False))

    def __call__(self, xi):
        x = np.asarray(xi, dtype=float)
        flat = np.atleast_1d(x)
        out = np.empty(flat.shape)
        lo, hi = self.xi[0], self.xi[-1]
        below = flat <= lo
        above = flat >= hi
        inside = ~(below | above)
        out[below] = self.values[0]
        out[above] = 1.0 + (self.values[-1] - 1.0) * (hi / flat[above]) ** 2
        out[inside] = self._interp(flat[inside])
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def __eq__(self, other):
        if not isinstance(other, Tabulated):
            return NotImplemented
        return (
            self.kind == other.kind
            and np.array_equal(self.xi, other.xi)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.kind, self.xi.tobytes(), self.values.tobytes()))


MaterialModel = Constant | OscillatorSum | Tabulated


def evaluate(model: MaterialModel, xi):
    """Response of ``model`` at imaginary frequency ``i*xi`` (``xi`` >= 0, rad/s)."""
    if np.any(np.asarray(xi) < 0):
        raise ValueError("xi must be >= 0")
    return model(xi)


@dataclass(frozen=True)
class UniaxialPlate:
    """Uniaxial crystal: ``eps_par`` along the optical axis, ``eps_perp`` across it."""

    eps_perp: MaterialModel
    eps_par: MaterialModel

    def __post_init__(self):
        for m in (self.eps_perp, self.eps_par):
            if getattr(m, "kind", None) != "permittivity":
                raise MaterialError("plate permittivities must be permittivity models")

    @classmethod
    def isotropic(cls, eps: MaterialModel) -> "UniaxialPlate":
        return cls(eps, eps)


@dataclass(frozen=True)
class Scenario:
    """Two uniaxial plates at separation ``a`` (m) with an isotropic gap.

    Plate 2 has its optical axis along z; plate 1 is rotated by ``theta``
    about the plate normal. ``theta`` is stored reduced to [0, pi).
    """

    plate1: UniaxialPlate
    plate2: UniaxialPlate
    a: float
    theta: float = 0.0
    gap_eps: MaterialModel = Constant(1.0)
    gap_mu: MaterialModel = Constant(1.0)

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise MaterialError(f"separation must be > 0, got {self.a}")
        if not math.isfinite(self.theta):
            raise MaterialError("theta must be finite")
        if getattr(self.gap_eps, "kind", None) != "permittivity":
            raise MaterialError("gap_eps must be a permittivity model")
        if not isinstance(self.gap_mu, (Constant, Tabulated)):
            raise MaterialError("gap_mu must be Constant or Tabulated")
        object.__setattr__(self, "a", float(self.a))
        theta = math.fmod(float(self.theta), math.pi) % math.pi
        # a tiny negative remainder rounds up to exactly pi under %
        object.__setattr__(self, "theta", 0.0 if theta >= math.pi else theta)

    def responses(self, xi):
        """The six response values at ``xi``, in the order
        ``(eps, mu, eps1_perp, eps1_par, eps2_perp, eps2_par)``."""
        return (
            evaluate(self.gap_eps, xi),
            evaluate(self.gap_mu, xi),
            evaluate(self.plate1.eps_perp, xi),
            evaluate(self.plate1.eps_par, xi),
            evaluate(self.plate2.eps_perp, xi),
            evaluate(self.plate2.eps_par, xi),
        )

    @property
    def is_dispersionless(self) -> bool:
        models = (
            self.gap_eps, self.gap_mu,
            self.plate1.eps_perp, self.plate1.eps_par,
            self.plate2.eps_perp, self.plate2.eps_par,
        )
        return all(isinstance(m, Constant) for m in models)


def rotation_matrix(theta: float) -> np.ndarray:
    """Rotation by ``theta`` about the x-axis (plate normal)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def dielectric_tensor(plate: UniaxialPlate, theta: float, xi: float) -> np.ndarray:
    lam = rotation_matrix(theta)
    eps = np.diag([evaluate(plate.eps_perp, xi), evaluate(plate.eps_perp, xi), evaluate(plate.eps_par, xi)])
    return lam @ eps @ lam.T


def load_tabulated(path, xi_column: int = 0, value_column: int = 1,
                   kind: str = "permittivity") -> Tabulated:
    """Read a two-column (or wider) whitespace table of ``xi value`` rows.

    Lines starting with ``#`` and blank lines are skipped. Errors carry the
    file name and line number.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MaterialError(f"{path}: cannot read ({exc.strerror})") from exc
    xs, vs = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        try:
            x = float(fields[xi_column])
            v = float(fields[value_column])
        except (IndexError, ValueError):
            raise MaterialError(f"{path}:{lineno}: cannot parse row {stripped!r}") from None
        if xs and x <= xs[-1]:
            raise MaterialError(f"{path}:{lineno}: non-monotone frequency grid")
        if kind == "permittivity" and v < 1.0:
            raise MaterialError(f"{path}:{lineno}: permittivity {v} < 1")
        xs.append(x)
        vs.append(v)
    try:
        return Tabulated(np.array(xs), np.array(vs), kind=kind, source=str(path))
    except MaterialError as exc:
        raise MaterialError(f"{path}: {exc}") from None
