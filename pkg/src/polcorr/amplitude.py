"""Two-photon time-domain amplitude, spectral filtering, norm and transpose overlap.

The unfiltered amplitude of a pulsed type-II source is

    A(t_e, t_o) = E_p(t_e - r * d) * [0 <= d <= DL],   d = t_o + tau_c - t_e,

a Gaussian-weighted strip whose edges are lines of constant ``t2 - t1``.
Every quantity the package integrates is a product of two such strips
(possibly shifted or with exchanged arguments), so unfiltered integrals are
evaluated diagonal by diagonal: a trapezoidal sum along each grid diagonal,
then an integral over the diagonal offset restricted *exactly* to the
intersection of the two strips. This keeps abutting strips (``tau_c = 0``)
free of spurious overlap and makes the strip edges second order or better.

Filtered amplitudes are smooth and live only as grid samples; their
integrals are plain two-dimensional trapezoidal sums.
"""
from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from scipy import ndimage, signal
from scipy.interpolate import CubicSpline

from .config import Crystal, FilterSpec, PumpPulse, TimeGrid, grid_violations
from .errors import ConfigError, GridError, NumericalError

__all__ = [
    "Term",
    "DIRECT",
    "EXCHANGED",
    "Field",
    "BiphotonAmplitude",
    "OverlapResult",
    "build_amplitude",
    "apply_filters",
    "prepare_amplitude",
    "norm",
    "overlap",
    "gaussian_kernel",
]

# extra lattice points either side of a strip interval used by the spline
_SPLINE_PAD = 3
# kernel truncation in units of sigma_f
_KERNEL_HALF_WIDTH = 8.0
# sampled-term arrays kept per amplitude
_TERM_CACHE_SIZE = 8


@dataclass(frozen=True)
class Term:
    """The amplitude at shifted, optionally exchanged, detection times.

    ``Term(False, s1, s2)`` is ``A(t1 + s1, t2 + s2)`` and
    ``Term(True, s1, s2)`` is ``A(t2 + s2, t1 + s1)``.
    """

    swapped: bool = False
    s1: float = 0.0
    s2: float = 0.0

    def strip(self, crystal: Crystal) -> tuple[float, float]:
        """Interval of ``t2 - t1`` on which this term can be non-zero (unfiltered)."""
        offset = self.s1 - self.s2
        if self.swapped:
            return offset + crystal.tau_c - crystal.DL, offset + crystal.tau_c
        return offset - crystal.tau_c, offset - crystal.tau_c + crystal.DL


DIRECT = Term()
EXCHANGED = Term(swapped=True)


class Field:
    """Linear combination of amplitude terms, a complex field over ``(t1, t2)``.

    Fields support ``+``, ``-`` and scalar multiplication. Integrals go
    through :meth:`inner`, which uses the amplitude's quadrature; ``values``
    samples the field on the grid for inspection and export.
    """

    def __init__(self, amp: "BiphotonAmplitude", coeffs=None):
        self.amp = amp
        self.coeffs: dict[Term, complex] = {}
        for term, c in (coeffs or {}).items():
            if c != 0:
                self.coeffs[term] = self.coeffs.get(term, 0) + complex(c)

    @classmethod
    def of(cls, amp, term: Term, coeff=1.0) -> "Field":
        return cls(amp, {term: coeff})

    def _check(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        if other.amp is not self.amp:
            raise ValueError("fields built from different amplitudes cannot be combined")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        merged = dict(self.coeffs)
        for term, c in other.coeffs.items():
            merged[term] = merged.get(term, 0) + c
        return Field(self.amp, merged)

    def __neg__(self):
        return Field(self.amp, {t: -c for t, c in self.coeffs.items()})

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            return NotImplemented
        return Field(self.amp, {t: c * scalar for t, c in self.coeffs.items()})

    __rmul__ = __mul__

    def inner(self, other: "Field") -> complex:
        """``integral of self * conj(other) dt1 dt2``."""
        self._check(other)
        total = 0j
        for ta, ca in self.coeffs.items():
            for tb, cb in other.coeffs.items():
                total += ca * cb.conjugate() * self.amp.gram(ta, tb)
        return total

    def norm2(self) -> float:
        return self.inner(self).real

    @property
    def values(self) -> np.ndarray:
        out = np.zeros((self.amp.grid.n, self.amp.grid.n), dtype=complex)
        for term, c in self.coeffs.items():
            out += c * self.amp.term_values(term)
        return out

    def __repr__(self):
        return f"Field({len(self.coeffs)} terms)"


@dataclass(frozen=True)
class OverlapResult:
    O: complex
    norm: float


class _Core:
    """Shared immutable data and memo tables behind amplitude views."""

    def __init__(self, grid, pump=None, crystal=None, samples=None, filter=None):
        self.grid = grid
        self.pump = pump
        self.crystal = crystal
        self.samples = samples
        self.filter = filter
        self.gram_cache: dict = {}
        self.term_cache: OrderedDict = OrderedDict()
        self._weights = None

    @property
    def analytic(self) -> bool:
        return self.samples is None

    # --- analytic generator -------------------------------------------------

    def smooth(self, term: Term, t1, t2):
        """Pump-envelope factor of ``term`` at ``(t1, t2)``, ignoring the strip."""
        if term.swapped:
            te, to = t2 + term.s2, t1 + term.s1
        else:
            te, to = t1 + term.s1, t2 + term.s2
        c = self.crystal
        return self.pump.envelope(te - c.r * (to + c.tau_c - te))

    def evaluate(self, te, to):
        te = np.asarray(te, dtype=float)
        to = np.asarray(to, dtype=float)
        if self.analytic:
            c = self.crystal
            d = to + c.tau_c - te
            inside = (d >= 0.0) & (d <= c.DL)
            return np.where(inside, self.pump.envelope(te - c.r * d), 0.0)
        g = self.grid
        coords = np.array([(te - g.t_min) / g.dt, (to - g.t_min) / g.dt])
        flat = coords.reshape(2, -1)
        re = ndimage.map_coordinates(self.samples.real, flat, order=1, mode="grid-constant")
        if np.iscomplexobj(self.samples):
            re = re + 1j * ndimage.map_coordinates(self.samples.imag, flat, order=1, mode="grid-constant")
        return re.reshape(te.shape)

    # --- grid samples -------------------------------------------------------

    def term_values(self, term: Term) -> np.ndarray:
        cached = self.term_cache.get(term)
        if cached is not None:
            self.term_cache.move_to_end(term)
            return cached
        if self.analytic:
            t = self.grid.times
            values = self._analytic_samples(term, t[:, None], t[None, :])
        else:
            values = self._shifted_samples(term)
        values.setflags(write=False)
        self.term_cache[term] = values
        if len(self.term_cache) > _TERM_CACHE_SIZE:
            self.term_cache.popitem(last=False)
        return values

    def _analytic_samples(self, term, t1, t2):
        lo, hi = term.strip(self.crystal)
        d = t2 - t1
        inside = (d >= lo) & (d <= hi)
        return np.where(inside, self.smooth(term, t1, t2), 0.0)

    def _shifted_samples(self, term):
        dt = self.grid.dt
        if term.swapped:
            shifts = (-term.s2 / dt, -term.s1 / dt)
        else:
            shifts = (-term.s1 / dt, -term.s2 / dt)
        base = self.samples
        if shifts == (0.0, 0.0):
            out = base.copy()
        else:
            span = self.grid.n
            if max(abs(s) for s in shifts) >= span:
                raise GridError(f"shift of {max(abs(term.s1), abs(term.s2))} fs exceeds the grid span")
            # bilinear: separable linear interpolation, zero outside the grid
            out = ndimage.shift(base, shifts, order=1, mode="grid-constant", cval=0.0, prefilter=False)
        return out.T.copy() if term.swapped else out

    def cell_averaged_samples(self) -> np.ndarray:
        """Samples with the strip indicator averaged over each grid cell along ``t_o - t_e``.

        Used as the input to filtering, so that the discrete convolution sees
        the strip edge at its true position rather than snapped to the grid.
        """
        g, c = self.grid, self.crystal
        t = g.times
        te, to = t[:, None], t[None, :]
        d = to + c.tau_c - te
        half = 0.5 * g.dt
        cover = np.clip(np.minimum(d + half, c.DL) - np.maximum(d - half, 0.0), 0.0, None) / g.dt
        return self.pump.envelope(te - c.r * d) * cover

    # --- quadrature -----------------------------------------------------------

    def gram(self, ta: Term, tb: Term) -> complex:
        key = (ta, tb)
        if key in self.gram_cache:
            return self.gram_cache[key]
        if (tb, ta) in self.gram_cache:
            value = self.gram_cache[(tb, ta)].conjugate()
        elif self.analytic:
            value = complex(self._strip_gram(ta, tb))
        else:
            value = self._grid_gram(ta, tb)
        self.gram_cache[key] = value
        return value

    def trapezoid_weights(self) -> np.ndarray:
        if self._weights is None:
            w = np.full(self.grid.n, self.grid.dt)
            w[0] = w[-1] = 0.5 * self.grid.dt
            self._weights = w
        return self._weights

    def _grid_gram(self, ta, tb) -> complex:
        w = self.trapezoid_weights()
        product = self.term_values(ta) * np.conj(self.term_values(tb))
        return complex(w @ product @ w)

    def _strip_gram(self, ta, tb) -> float:
        g = self.grid
        n, dt = g.n, g.dt
        lo_a, hi_a = ta.strip(self.crystal)
        lo_b, hi_b = tb.strip(self.crystal)
        span = (n - 1) * dt
        lo = max(lo_a, lo_b, -span)
        hi = min(hi_a, hi_b, span)
        if not hi > lo:
            return 0.0

        k_lo = max(-(n - 1), math.floor(lo / dt) - _SPLINE_PAD)
        k_hi = min(n - 1, math.ceil(hi / dt) + _SPLINE_PAD)
        ks = np.arange(k_lo, k_hi + 1)
        i = np.arange(n)
        j = i[None, :] + ks[:, None]
        valid = (j >= 0) & (j < n)
        t1 = g.t_min + dt * i[None, :]
        t2 = g.t_min + dt * np.clip(j, 0, n - 1)
        product = np.where(valid, self.smooth(ta, t1, t2) * self.smooth(tb, t1, t2), 0.0)

        # trapezoid along each diagonal: half weight at both ends
        first = np.maximum(0, -ks)
        last = np.minimum(n - 1, n - 1 - ks)
        rows = np.arange(len(ks))
        along = product.sum(axis=1) - 0.5 * (product[rows, first] + product[rows, last])
        along *= dt

        offsets = ks * dt
        if len(ks) == 1:
            return float(along[0] * (hi - lo))
        spline = CubicSpline(offsets, along)
        return float(spline.integrate(lo, hi))


class BiphotonAmplitude:
    """Two-photon amplitude ``A(t_e, t_o)`` on a square time grid.

    The first argument is the e-ray (V) photon time, the second the o-ray (H)
    photon time. Instances are immutable views; :meth:`scaled` and
    :meth:`transposed` return new views that share the underlying data.

    An amplitude is either *analytic* (built from pump and crystal, point
    evaluation is exact) or *sampled* (grid values only, e.g. after
    filtering; point evaluation is bilinear).
    """

    def __init__(self, core: _Core, scale: complex = 1.0, transposed: bool = False):
        self._core = core
        self.scale = complex(scale)
        self.transposed = bool(transposed)

    @classmethod
    def from_values(cls, grid: TimeGrid, values, filter: FilterSpec | None = None) -> "BiphotonAmplitude":
        """Wrap arbitrary grid samples (rows: ``t_e``, columns: ``t_o``)."""
        values = np.array(values, dtype=complex if np.iscomplexobj(values) else float)
        if values.shape != (grid.n, grid.n):
            raise ValueError(f"values must have shape {(grid.n, grid.n)}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericalError("amplitude samples must be finite")
        values.setflags(write=False)
        return cls(_Core(grid, samples=values, filter=filter))

    grid = property(lambda self: self._core.grid)
    pump = property(lambda self: self._core.pump)
    crystal = property(lambda self: self._core.crystal)
    filter = property(lambda self: self._core.filter)

    @property
    def analytic(self) -> bool:
        """True when the closed-form generator is available."""
        return self._core.analytic

    def _base_term(self, term: Term) -> Term:
        if self.transposed:
            return Term(not term.swapped, term.s1, term.s2)
        return term

    def __call__(self, te, to):
        """Point evaluation at arbitrary ``(t_e, t_o)`` (broadcasting)."""
        if self.transposed:
            te, to = to, te
        return self.scale * self._core.evaluate(te, to)

    @property
    def values(self) -> np.ndarray:
        return self.term_values(DIRECT)

    def term_values(self, term: Term) -> np.ndarray:
        return self.scale * self._core.term_values(self._base_term(term))

    def gram(self, ta: Term, tb: Term) -> complex:
        """``integral of T_a * conj(T_b) dt1 dt2`` for two terms of this amplitude."""
        base = self._core.gram(self._base_term(ta), self._base_term(tb))
        return abs(self.scale) ** 2 * base

    def field(self, term: Term = DIRECT, coeff=1.0) -> Field:
        return Field.of(self, term, coeff)

    def scaled(self, factor) -> "BiphotonAmplitude":
        return BiphotonAmplitude(self._core, self.scale * factor, self.transposed)

    def transpose(self) -> "BiphotonAmplitude":
        """``A^T(t1, t2) = A(t2, t1)``."""
        return BiphotonAmplitude(self._core, self.scale, not self.transposed)

    def base_samples(self) -> np.ndarray:
        """Grid samples suitable as filter input (cell-averaged strip if analytic)."""
        core = self._core
        samples = core.cell_averaged_samples() if core.analytic else np.asarray(core.samples)
        if self.transposed:
            samples = samples.T
        return self.scale * samples if self.scale != 1 else samples

    def __repr__(self):
        kind = "analytic" if self.analytic else "sampled"
        return f"BiphotonAmplitude({kind}, n={self.grid.n}, dt={self.grid.dt:.4g} fs)"


def build_amplitude(pump: PumpPulse, crystal: Crystal, grid: TimeGrid) -> BiphotonAmplitude:
    """Analytic amplitude of the uncompensated or compensated crystal on ``grid``."""
    problems = []
    if not pump.sigma_p > 0:
        problems.append(f"sigma_p_fs must be > 0 (got {pump.sigma_p})")
    if not crystal.DL > 0:
        problems.append(f"DL_fs must be > 0 (got {crystal.DL})")
    if not 0 <= crystal.r <= 1:
        problems.append(f"r must lie in [0, 1] (got {crystal.r})")
    if not 0 <= crystal.tau_c <= crystal.DL:
        problems.append(f"tau_c_fs must lie in [0, DL_fs] (got {crystal.tau_c})")
    if problems:
        raise ConfigError("; ".join(problems), problems)
    problems = grid_violations(grid, pump, crystal)
    if problems:
        raise GridError("; ".join(problems))
    return BiphotonAmplitude(_Core(grid, pump=pump, crystal=crystal))


def gaussian_kernel(dt: float, sigma_f: float, max_half_width: int | None = None) -> np.ndarray:
    """Sampled ``exp(-t^2 / (2 sigma_f^2))`` normalized to unit sum (unit integral)."""
    half = int(math.ceil(_KERNEL_HALF_WIDTH * sigma_f / dt))
    if max_half_width is not None:
        half = min(half, max_half_width)
    t = dt * np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (t / sigma_f) ** 2)
    return kernel / kernel.sum()


def apply_filters(amp: BiphotonAmplitude, filter: FilterSpec) -> BiphotonAmplitude:
    """Convolve the amplitude with the Gaussian filter response along each time axis.

    The result is grid-sampled only. Passing a disabled filter is a caller
    error: the identity filter is handled by not calling this function.
    """
    if not filter.enabled:
        raise ValueError("apply_filters called with a disabled filter")
    if not filter.sigma_f > 0:
        raise ConfigError(f"filter_sigma_fs must be > 0 (got {filter.sigma_f})")
    grid = amp.grid
    samples = amp.base_samples()
    kernel = gaussian_kernel(grid.dt, filter.sigma_f, grid.n - 1)
    out = signal.fftconvolve(samples, kernel[:, None], mode="same")
    out = signal.fftconvolve(out, kernel[None, :], mode="same")
    if not np.iscomplexobj(samples):
        out = out.real
    return BiphotonAmplitude.from_values(grid, out, filter=filter)


def prepare_amplitude(cfg) -> BiphotonAmplitude:
    """Amplitude for an :class:`ExperimentConfig`, filtered when the filter is enabled."""
    amp = build_amplitude(cfg.pump, cfg.crystal, cfg.grid)
    if cfg.filter.enabled:
        problems = grid_violations(cfg.grid, cfg.pump, cfg.crystal, cfg.filter.sigma_f)
        if problems:
            raise GridError("; ".join(problems))
        amp = apply_filters(amp, cfg.filter)
    return amp


def norm(amp: BiphotonAmplitude) -> float:
    """``integral of |A|^2 dt1 dt2``."""
    value = amp.gram(DIRECT, DIRECT).real
    if not math.isfinite(value) or value <= 0.0:
        raise NumericalError(f"amplitude norm is {value}; degenerate configuration")
    return value


def overlap(amp: BiphotonAmplitude) -> OverlapResult:
    """Normalized overlap of the amplitude with its time transpose."""
    n = norm(amp)
    return OverlapResult(O=amp.gram(DIRECT, EXCHANGED) / n, norm=n)
