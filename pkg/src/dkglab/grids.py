"""
Discrete lattices for R^2 and R^{1+2}, Fourier transforms, multipliers, and
space-time weight functions.

Conventions (fixed once, used by every norm in the package):

* Forward transforms approximate the continuum integrals
  ``fhat(xi) = int exp(-i x.xi) f(x) dx`` and
  ``utilde(tau, xi) = int exp(-i(t tau + x.xi)) u(t,x) dt dx``
  by Riemann sums with cell volumes ``dx^2`` and ``dt dx^2``.
* Frequencies are integer multiples of ``2 pi / box`` stored in numpy fft
  order; physical coordinates are the wrapped values ``box * fftfreq(n)`` in
  ``[-box/2, box/2)``.
* Discrete Plancherel then reads, exactly,
  ``||f||_{L2(phys)} = (2 pi)^{-1} ||fhat||_{L2(freq)}`` on R^2 and
  ``||u||_{L2(phys)} = (2 pi)^{-3/2} ||utilde||_{L2(freq)}`` on R^{1+2},
  where each side is the square-rooted Riemann sum over its lattice.
  Norm values quoted by this package use these (2 pi) factors so that the
  s = b = 0 space-time norm is the physical L^2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Union

import numpy as np

PHYSICAL = "physical"
FREQUENCY = "frequency"


class BasisMismatchError(ValueError):
    """Field basis does not match the operation's contract."""


class NonFiniteSymbolError(ValueError):
    """A multiplier symbol produced a non-finite value at a lattice point."""


class GridCompatibilityError(ValueError):
    """Fields live on incompatible lattices."""


# Audit trail for silently zeroed zero modes (homogeneous negative powers,
# spinor projections).  Drained by tests and report writers.
_ZERO_MODE_NOTES: list[str] = []


def record_zero_mode_note(context: str) -> None:
    _ZERO_MODE_NOTES.append(context)


def pop_zero_mode_notes() -> list[str]:
    notes = list(_ZERO_MODE_NOTES)
    _ZERO_MODE_NOTES.clear()
    return notes


@dataclass(frozen=True)
class GridSpec2:
    """
    Periodic square lattice for R^2.

    Parameters
    ----------
    n : int
        Points per axis; even and >= 4 so the frequency lattice is symmetric
        about 0 (Nyquist row included on the negative side).
    box : float
        Physical side length. Frequency spacing is ``2 pi / box``.
    """

    n: int
    box: float

    def __post_init__(self):
        if self.n < 4 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 4, got {self.n}")
        if not self.box > 0:
            raise ValueError(f"box must be positive, got {self.box}")

    @property
    def dx(self) -> float:
        return self.box / self.n

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.box

    def x_axis(self) -> np.ndarray:
        """Wrapped physical coordinates in fft order, values in [-box/2, box/2)."""
        return self.box * np.fft.fftfreq(self.n)

    def xi_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def xi_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        ax = self.xi_axis()
        return np.meshgrid(ax, ax, indexing="ij")

    def x_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        ax = self.x_axis()
        return np.meshgrid(ax, ax, indexing="ij")

    def xi_norm(self) -> np.ndarray:
        x1, x2 = self.xi_mesh()
        return np.hypot(x1, x2)


@dataclass(frozen=True)
class GridSpec3:
    """Space-time lattice: one time axis and a square spatial lattice."""

    n_t: int
    n_x: int
    box_t: float
    box_x: float

    def __post_init__(self):
        for name, cnt in (("n_t", self.n_t), ("n_x", self.n_x)):
            if cnt < 4 or cnt % 2 != 0:
                raise ValueError(f"{name} must be even and >= 4, got {cnt}")
        for name, length in (("box_t", self.box_t), ("box_x", self.box_x)):
            if not length > 0:
                raise ValueError(f"{name} must be positive, got {length}")

    @property
    def dt(self) -> float:
        return self.box_t / self.n_t

    @property
    def dx(self) -> float:
        return self.box_x / self.n_x

    @property
    def dtau(self) -> float:
        return 2.0 * np.pi / self.box_t

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.box_x

    @property
    def spatial(self) -> GridSpec2:
        return GridSpec2(self.n_x, self.box_x)

    def t_axis(self) -> np.ndarray:
        return self.box_t * np.fft.fftfreq(self.n_t)

    def tau_axis(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_t, d=self.dt)

    def tau_xi_mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        ax_x = 2.0 * np.pi * np.fft.fftfreq(self.n_x, d=self.dx)
        return np.meshgrid(self.tau_axis(), ax_x, ax_x, indexing="ij")


def _as_complex(values: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=np.complex128)


@dataclass(frozen=True)
class SpectralField2:
    grid: GridSpec2
    values: np.ndarray
    basis: str = PHYSICAL

    def __post_init__(self):
        object.__setattr__(self, "values", _as_complex(self.values))
        if self.values.shape != (self.grid.n, self.grid.n):
            raise GridCompatibilityError(
                f"values shape {self.values.shape} != grid {(self.grid.n, self.grid.n)}"
            )
        if self.basis not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown basis {self.basis!r}")

    def with_values(self, values, basis=None) -> "SpectralField2":
        return replace(self, values=values, basis=basis or self.basis)


@dataclass(frozen=True)
class SpectralField3:
    grid: GridSpec3
    values: np.ndarray
    basis: str = PHYSICAL

    def __post_init__(self):
        object.__setattr__(self, "values", _as_complex(self.values))
        shape = (self.grid.n_t, self.grid.n_x, self.grid.n_x)
        if self.values.shape != shape:
            raise GridCompatibilityError(f"values shape {self.values.shape} != grid {shape}")
        if self.basis not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown basis {self.basis!r}")

    def with_values(self, values, basis=None) -> "SpectralField3":
        return replace(self, values=values, basis=basis or self.basis)


@dataclass(frozen=True)
class SpinorField2:
    """C^2-valued field on a GridSpec2; components stacked along axis 0."""

    grid: GridSpec2
    values: np.ndarray
    basis: str = PHYSICAL

    def __post_init__(self):
        object.__setattr__(self, "values", _as_complex(self.values))
        if self.values.shape != (2, self.grid.n, self.grid.n):
            raise GridCompatibilityError(f"spinor shape {self.values.shape} invalid")
        if self.basis not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown basis {self.basis!r}")

    def with_values(self, values, basis=None) -> "SpinorField2":
        return replace(self, values=values, basis=basis or self.basis)

    def component(self, i: int) -> SpectralField2:
        return SpectralField2(self.grid, self.values[i], self.basis)


@dataclass(frozen=True)
class SpinorField3:
    grid: GridSpec3
    values: np.ndarray
    basis: str = PHYSICAL

    def __post_init__(self):
        object.__setattr__(self, "values", _as_complex(self.values))
        shape = (2, self.grid.n_t, self.grid.n_x, self.grid.n_x)
        if self.values.shape != shape:
            raise GridCompatibilityError(f"spinor shape {self.values.shape} != {shape}")
        if self.basis not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown basis {self.basis!r}")

    def with_values(self, values, basis=None) -> "SpinorField3":
        return replace(self, values=values, basis=basis or self.basis)


Field = Union[SpectralField2, SpectralField3, SpinorField2, SpinorField3]

_SPINOR_TYPES = (SpinorField2, SpinorField3)


def _fft_axes(field: Field) -> tuple[int, ...]:
    nd = field.values.ndim
    if isinstance(field, _SPINOR_TYPES):
        return tuple(range(1, nd))
    return tuple(range(nd))


def _phys_cell(field: Field) -> float:
    g = field.grid
    if isinstance(g, GridSpec2):
        return g.dx**2
    return g.dt * g.dx**2


def transform(field: Field, direction: str) -> Field:
    """
    Forward (physical -> frequency) or inverse discrete Fourier transform.

    The forward transform multiplies the FFT by the physical cell volume so it
    approximates the continuum integral; the round trip is the identity to
    machine precision.
    """
    if direction == "forward":
        if field.basis != PHYSICAL:
            raise BasisMismatchError("forward transform requires a physical-basis field")
        vals = np.fft.fftn(field.values, axes=_fft_axes(field)) * _phys_cell(field)
        return field.with_values(vals, FREQUENCY)
    if direction == "inverse":
        if field.basis != FREQUENCY:
            raise BasisMismatchError("inverse transform requires a frequency-basis field")
        vals = np.fft.ifftn(field.values, axes=_fft_axes(field)) / _phys_cell(field)
        return field.with_values(vals, PHYSICAL)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def to_frequency(field: Field) -> Field:
    return field if field.basis == FREQUENCY else transform(field, "forward")


def to_physical(field: Field) -> Field:
    return field if field.basis == PHYSICAL else transform(field, "inverse")


def _symbol_array(field: Field, symbol: Callable[..., np.ndarray]) -> np.ndarray:
    g = field.grid
    if isinstance(g, GridSpec2):
        coords = g.xi_mesh()
    else:
        coords = g.tau_xi_mesh()
    sym = np.asarray(symbol(*coords))
    sym = np.broadcast_to(sym, coords[0].shape)
    if not np.all(np.isfinite(sym)):
        bad = np.argwhere(~np.isfinite(np.real(sym) + np.imag(sym)))[0]
        point = tuple(float(c[tuple(bad)]) for c in coords)
        label = "(xi1, xi2)" if isinstance(g, GridSpec2) else "(tau, xi1, xi2)"
        raise NonFiniteSymbolError(f"symbol non-finite at lattice point {label} = {point}")
    return sym


def apply_multiplier(field: Field, symbol: Callable[..., np.ndarray]) -> Field:
    """
    Pointwise Fourier multiplier: the symbol is evaluated on the frequency
    lattice, ``(tau, xi1, xi2)`` for space-time fields and ``(xi1, xi2)`` for
    spatial ones.  Physical-basis inputs are transformed in and back out.
    """
    was_physical = field.basis == PHYSICAL
    f = to_frequency(field)
    sym = _symbol_array(f, symbol)
    out = f.with_values(f.values * sym)
    return to_physical(out) if was_physical else out


def bracket(x: np.ndarray) -> np.ndarray:
    """The Japanese-bracket convention used throughout: 1 + |x| (not smooth)."""
    return 1.0 + np.abs(x)


def homogeneous_power(s: float, context: str = "") -> Callable[..., np.ndarray]:
    """
    Symbol for |xi|^s on R^2.  For s < 0 the zero mode is set to 0 and a note
    is recorded; homogeneous norms downstream require s > -1.
    """

    def sym(x1, x2):
        r = np.hypot(x1, x2)
        if s == 0:
            return np.ones_like(r)
        if s > 0:
            return r**s
        out = np.zeros_like(r)
        nz = r > 0
        out[nz] = r[nz] ** s
        record_zero_mode_note(f"zero-mode zeroed in |xi|^{s}" + (f" ({context})" if context else ""))
        return out

    return sym


@dataclass(frozen=True)
class WeightPoint:
    """
    The space-time convolution weights at one sample (lam, eta, tau, xi):
    A = |tau| - |xi|, B = lam + |eta|, C_pm = lam - tau +- |eta - xi|,
    rho_plus = |xi| - ||eta| - |eta - xi||,
    rho_minus = |eta| + |eta - xi| - |xi|.

    Fields may be scalars or equally-shaped arrays (batch evaluation).
    """

    A: np.ndarray
    B: np.ndarray
    C_plus: np.ndarray
    C_minus: np.ndarray
    rho_plus: np.ndarray
    rho_minus: np.ndarray


def weights_at(lam, eta, tau, xi) -> WeightPoint:
    """Evaluate the weight functions; eta, xi have shape (..., 2)."""
    lam = np.asarray(lam, dtype=float)
    tau = np.asarray(tau, dtype=float)
    eta = np.asarray(eta, dtype=float)
    xi = np.asarray(xi, dtype=float)
    abs_eta = np.hypot(eta[..., 0], eta[..., 1])
    abs_xi = np.hypot(xi[..., 0], xi[..., 1])
    diff = eta - xi
    abs_diff = np.hypot(diff[..., 0], diff[..., 1])
    return WeightPoint(
        A=np.abs(tau) - abs_xi,
        B=lam + abs_eta,
        C_plus=lam - tau + abs_diff,
        C_minus=lam - tau - abs_diff,
        rho_plus=abs_xi - np.abs(abs_eta - abs_diff),
        rho_minus=abs_eta + abs_diff - abs_xi,
    )
