"""Polarization-resolved detection amplitudes, coincidence rates and the reduced density matrix.

The delay element delays the Y (-45 deg) axis by ``tau``. Resolving both
detected photons on the X/Y axes gives four component amplitudes

    Psi_XX =   A(t1, t2)         + A(t2, t1)
    Psi_YY = -[A(t1+tau, t2+tau) + A(t2+tau, t1+tau)]
    Psi_XY =   A(t1, t2+tau)     - A(t2+tau, t1)
    Psi_YX = -[A(t1+tau, t2)     - A(t2, t1+tau)]

and an analyzer pair projects them with ``c = cos(pi/4 - theta)`` (X) and
``s = sin(pi/4 - theta)`` (Y). The truncated model keeps only the XX and YY
components.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._csv import fmt
from .amplitude import DIRECT, EXCHANGED, BiphotonAmplitude, Field, Term
from .config import AnalyzerPair, DelayElement, ModelKind
from .errors import DataError, GridError, NumericalError

__all__ = [
    "BASIS",
    "ComponentAmplitudes",
    "PolarizationDensityMatrix",
    "component_amplitudes",
    "detection_amplitude",
    "coincidence_rate",
    "rate_no_delay",
    "mixture_law_rate",
    "density_matrix",
    "rate_from_rho",
    "bell_fidelity",
    "bell_state",
    "field_rate",
    "density_matrix_to_csv",
    "read_density_matrix_csv",
]

BASIS = ("XX", "XY", "YX", "YY")

# clamp threshold for rates that are zero up to rounding
_NEGATIVE_RATE_TOL = 1e-12


@dataclass(frozen=True)
class ComponentAmplitudes:
    xx: Field
    xy: Field
    yx: Field
    yy: Field
    tau: float

    def __iter__(self):
        return iter((self.xx, self.xy, self.yx, self.yy))

    @property
    def amp(self) -> BiphotonAmplitude:
        return self.xx.amp


@dataclass(frozen=True)
class PolarizationDensityMatrix:
    """4x4 density matrix in the (XX, XY, YX, YY) basis."""

    matrix: np.ndarray
    basis: tuple = BASIS

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_hermitian(self, tol=1e-10) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))

    @classmethod
    def pure(cls, state) -> "PolarizationDensityMatrix":
        v = np.asarray(state, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))


def _clamp_rate(value: float, scale: float) -> float:
    if value < 0:
        if value < -_NEGATIVE_RATE_TOL * max(scale, 1e-300):
            raise NumericalError(f"negative coincidence rate {value:.3e} beyond rounding")
        return 0.0
    return value


def component_amplitudes(amp: BiphotonAmplitude, delay: DelayElement) -> ComponentAmplitudes:
    """Four X/Y-resolved detection amplitudes behind the delay element."""
    tau = delay.effective_tau
    span = amp.grid.t_max - amp.grid.t_min
    if abs(tau) >= span:
        raise GridError(f"|tau| = {abs(tau)} fs is not covered by a {span} fs grid")

    def a(term):
        return amp.field(term)

    xx = a(DIRECT) + a(EXCHANGED)
    yy = -(a(Term(False, tau, tau)) + a(Term(True, tau, tau)))
    xy = a(Term(False, 0.0, tau)) - a(Term(True, 0.0, tau))
    yx = -(a(Term(False, tau, 0.0)) - a(Term(True, tau, 0.0)))
    return ComponentAmplitudes(xx, xy, yx, yy, tau)


def detection_amplitude(comp: ComponentAmplitudes, angles: AnalyzerPair,
                        model: ModelKind = ModelKind.FULL) -> Field:
    """Two-photon amplitude behind the analyzers."""
    c1, s1, c2, s2 = angles.projections()
    if ModelKind.parse(model) is ModelKind.TRUNCATED:
        return 0.5 * (c1 * c2 * comp.xx + s1 * s2 * comp.yy)
    return 0.5 * (c1 * c2 * comp.xx + c1 * s2 * comp.xy + s1 * c2 * comp.yx + s1 * s2 * comp.yy)


def coincidence_rate(amp: BiphotonAmplitude, angles: AnalyzerPair, delay: DelayElement,
                     model: ModelKind = ModelKind.FULL) -> float:
    """Coincidence rate with an infinitely long coincidence window."""
    comp = component_amplitudes(amp, delay)
    return field_rate(detection_amplitude(comp, angles, model))


def field_rate(field: Field) -> float:
    """``integral of |field|^2``, clamped at zero within rounding."""
    value = field.norm2()
    return _clamp_rate(value, field.amp.gram(DIRECT, DIRECT).real)


def rate_no_delay(amp: BiphotonAmplitude, angles: AnalyzerPair) -> float:
    """Coincidence rate with the delay element removed from the setup."""
    direct, exchanged = angles.hv_coefficients()
    field = amp.field(DIRECT, direct) + amp.field(EXCHANGED, exchanged)
    return field_rate(field)


def mixture_law_rate(normN: float, O: complex, angles: AnalyzerPair) -> float:
    """Closed-form zero-delay rate from the amplitude norm and transpose overlap."""
    if abs(O) > 1 + 1e-9:
        raise ValueError(f"|O| must not exceed 1 (got {abs(O)})")
    t1 = math.radians(angles.theta1)
    t2 = math.radians(angles.theta2)
    a = math.sin(t1) * math.cos(t2)
    b = math.cos(t1) * math.sin(t2)
    value = normN * (a * a + b * b + 2.0 * complex(O).real * a * b)
    return _clamp_rate(value, normN)


def density_matrix(comp: ComponentAmplitudes) -> PolarizationDensityMatrix:
    """Polarization density matrix with the detection times traced out."""
    fields = list(comp)
    gram = np.empty((4, 4), dtype=complex)
    for p in range(4):
        for q in range(p, 4):
            gram[p, q] = fields[p].inner(fields[q])
            gram[q, p] = gram[p, q].conjugate()
        gram[p, p] = gram[p, p].real
    total = np.trace(gram).real
    if not math.isfinite(total) or total <= 0:
        raise NumericalError(f"component amplitudes have total norm {total}")
    return PolarizationDensityMatrix(gram / total)


def rate_from_rho(rho: PolarizationDensityMatrix, angles: AnalyzerPair) -> float:
    """Normalized coincidence rate ``<v|rho|v>`` for the analyzer projection vector ``v``."""
    v = np.asarray(angles.xy_vector(), dtype=float)
    value = float(np.real(v @ rho.matrix @ v))
    return _clamp_rate(value, 1.0)


def bell_state() -> np.ndarray:
    """``(|XX> - |YY>) / sqrt(2)`` in the (XX, XY, YX, YY) basis."""
    return np.array([1.0, 0.0, 0.0, -1.0]) / math.sqrt(2.0)


def bell_fidelity(rho: PolarizationDensityMatrix) -> float:
    phi = bell_state()
    value = float(np.real(phi.conj() @ rho.matrix @ phi))
    return min(max(value, 0.0), 1.0)


def density_matrix_to_csv(rho: PolarizationDensityMatrix) -> str:
    """Header of the four basis labels, then one row per matrix row as ``re,im`` pairs."""
    lines = [",".join(rho.basis)]
    for row in rho.matrix:
        lines.append(",".join(f"{fmt(z.real)},{fmt(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def read_density_matrix_csv(text: str) -> PolarizationDensityMatrix:
    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if len(lines) != 5:
        raise DataError(f"density matrix CSV needs a header and 4 rows, got {len(lines)} lines")
    basis = tuple(cell.strip() for cell in lines[0].split(","))
    if len(basis) != 4:
        raise DataError(f"line 1: expected 4 basis labels, got {len(basis)}")
    matrix = np.empty((4, 4), dtype=complex)
    for r, line in enumerate(lines[1:]):
        try:
            nums = [float(x) for x in line.split(",")]
        except ValueError:
            raise DataError(f"line {r + 2}: non-numeric entry") from None
        if len(nums) != 8:
            raise DataError(f"line {r + 2}: expected 8 numbers (4 re,im pairs), got {len(nums)}")
        matrix[r] = np.array(nums[0::2]) + 1j * np.array(nums[1::2])
    return PolarizationDensityMatrix(matrix, basis)
