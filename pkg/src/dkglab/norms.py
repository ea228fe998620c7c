"""
Discrete evaluation of the norms used throughout: Sobolev norms on R^2,
X^{s,b}-type and wave-Sobolev norms on R^{1+2}, and mixed L^q_t L^r_x norms.

All frequency-side norms are Riemann sums over the lattice carrying the
(2 pi) factors fixed in :mod:`dkglab.grids`, so the s = b = 0 cases reduce
exactly to the physical L^2 norm.  The bracket is 1 + |.| throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import (
    FREQUENCY,
    GridSpec3,
    SpectralField2,
    SpectralField3,
    SpinorField3,
    bracket,
    record_zero_mode_note,
    to_frequency,
    to_physical,
)

SOBOLEV = "sobolev"
SOBOLEV_HOMOG = "sobolev_homog"
XSB_PLUS = "xsb_plus"
XSB_MINUS = "xsb_minus"
WAVE_SOBOLEV = "wave_sobolev"
WAVE_SOBOLEV_CURLY = "wave_sobolev_curly"
MIXED_LQ_LR = "mixed_lq_lr"

_KINDS = {SOBOLEV, SOBOLEV_HOMOG, XSB_PLUS, XSB_MINUS, WAVE_SOBOLEV, WAVE_SOBOLEV_CURLY, MIXED_LQ_LR}


@dataclass(frozen=True)
class NormSpec:
    kind: str
    s: float = 0.0
    b: float = 0.0
    q: float = 2.0
    r: float = 2.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == SOBOLEV_HOMOG and self.s <= -1.0:
            raise ValueError("homogeneous Sobolev norms need s > -1 in two space dimensions")
        if self.kind == MIXED_LQ_LR and (self.q < 1 or self.r < 1):
            raise ValueError("mixed-norm exponents must be >= 1")


def _freq_l2(weighted_sq: np.ndarray, cell: float, dim: int) -> float:
    return float(np.sqrt(weighted_sq.sum() * cell) * (2.0 * np.pi) ** (-dim / 2.0))


def sobolev_norm(f: SpectralField2, s: float, homogeneous: bool = False) -> float:
    """H^s (bracket weight) or homogeneous |xi|^s norm of a spatial field."""
    if homogeneous and s <= -1.0:
        raise ValueError("homogeneous Sobolev norms need s > -1 in two space dimensions")
    fh = to_frequency(f)
    r = fh.grid.xi_norm()
    if homogeneous:
        if s < 0:
            w = np.zeros_like(r)
            nz = r > 0
            w[nz] = r[nz] ** (2.0 * s)
            if fh.values[0, 0] != 0:
                record_zero_mode_note(f"zero-mode mass dropped by homogeneous H^{s} norm")
        else:
            w = r ** (2.0 * s) if s > 0 else np.ones_like(r)
    else:
        w = bracket(r) ** (2.0 * s)
    return _freq_l2(w * np.abs(fh.values) ** 2, fh.grid.dxi**2, dim=2)


def _spacetime_weight_sq(grid: GridSpec3, spec: NormSpec) -> np.ndarray:
    tau, x1, x2 = grid.tau_xi_mesh()
    r = np.hypot(x1, x2)
    if spec.kind == XSB_PLUS:
        return bracket(r) ** (2 * spec.s) * bracket(tau + r) ** (2 * spec.b)
    if spec.kind == XSB_MINUS:
        return bracket(r) ** (2 * spec.s) * bracket(tau - r) ** (2 * spec.b)
    if spec.kind == WAVE_SOBOLEV:
        return bracket(r) ** (2 * spec.s) * bracket(np.abs(tau) - r) ** (2 * spec.b)
    raise ValueError(f"kind {spec.kind!r} is not a weighted space-time kind")


def _mod_sq(u: SpectralField3 | SpinorField3) -> np.ndarray:
    uh = to_frequency(u)
    vals = np.abs(uh.values) ** 2
    if isinstance(u, SpinorField3):
        return vals.sum(axis=0)
    return vals


def spacetime_norm(u: SpectralField3 | SpinorField3, spec: NormSpec) -> float:
    """
    Weighted space-time L^2 norm of the given kind.  Spinor inputs contribute
    through their C^2 magnitude.  The two-parameter wave norm (curly kind) is
    the sum form: wave_sobolev(s, b) of u plus wave_sobolev(s-1, b) of du/dt,
    the time derivative realized as the i*tau multiplier.
    """
    grid = u.grid
    cell = grid.dtau * grid.dxi**2
    if spec.kind == WAVE_SOBOLEV_CURLY:
        uh = to_frequency(u)
        tau = grid.tau_axis().reshape(-1, 1, 1)
        if isinstance(u, SpinorField3):
            tau = tau[None, ...]
        du = uh.with_values(uh.values * (1j * tau))
        base = NormSpec(WAVE_SOBOLEV, s=spec.s, b=spec.b)
        lower = NormSpec(WAVE_SOBOLEV, s=spec.s - 1.0, b=spec.b)
        return spacetime_norm(uh, base) + spacetime_norm(du, lower)
    w = _spacetime_weight_sq(grid, spec)
    return _freq_l2(w * _mod_sq(u), cell, dim=3)


def spacetime_norm_curly_product_form(u: SpectralField3 | SpinorField3, s: float, b: float) -> float:
    """
    Cross-check variant of the two-parameter wave norm as a single product
    weight bracket(r)^(s-1) * bracket(|tau|+r) * bracket(|tau|-r)^b.  Agrees
    with the sum form only up to a bounded factor.
    """
    grid = u.grid
    tau, x1, x2 = grid.tau_xi_mesh()
    r = np.hypot(x1, x2)
    w = (
        bracket(r) ** (2 * (s - 1.0))
        * bracket(np.abs(tau) + r) ** 2
        * bracket(np.abs(tau) - r) ** (2 * b)
    )
    return _freq_l2(w * _mod_sq(u), grid.dtau * grid.dxi**2, dim=3)


def mixed_norm(u: SpectralField3, q: float, r: float) -> float:
    """
    L^q_t L^r_x Riemann norm of a space-time field; infinite exponents use the
    lattice max (a lower bound for the continuum sup).
    """
    if q < 1 or r < 1:
        raise ValueError("exponents must be >= 1")
    up = to_physical(u)
    g = up.grid
    mags = np.abs(up.values)
    if np.isinf(r):
        slices = mags.max(axis=(1, 2))
    else:
        slices = (np.sum(mags**r, axis=(1, 2)) * g.dx**2) ** (1.0 / r)
    if np.isinf(q):
        return float(slices.max())
    return float((np.sum(slices**q) * g.dt) ** (1.0 / q))


def spatial_l2(f: SpectralField2) -> float:
    if f.basis == FREQUENCY:
        return _freq_l2(np.abs(f.values) ** 2, f.grid.dxi**2, dim=2)
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.dx**2))
