"""
Pseudo-spectral integrator for the massless 2d Dirac-Klein-Gordon system in
split half-wave form:

    (-i d_t +- |D|) psi_pm = -P_pm(D)(phi beta psi),      psi = psi_+ + psi_-,
    (-d_tt + Laplacian) phi = -<beta psi, psi>,

with exact linear phases and a Lawson (integrating-factor) RK4 stage rule for
the nonlinearity, plus Picard iterates and a first-iterate regularity probe.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grids import (
    GridSpec2,
    SpectralField2,
    SpinorField2,
    record_zero_mode_note,
    to_frequency,
)
from .norms import sobolev_norm
from .util import mode_hash_uniform, smooth_time_cutoff
from .waves import duhamel_slices


class NumericalBlowupError(RuntimeError):
    """The time stepper produced non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    """
    Run parameters.  Masses are kept only to reject nonzero values: the
    solver implements the massless system.
    """

    grid: GridSpec2
    dt: float
    T: float
    dealias: bool = True
    picard_depth: int = 5
    seed: int = 0
    nonlinear: bool = True
    dirac_mass: float = 0.0
    meson_mass: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.dirac_mass != 0.0 or self.meson_mass != 0.0:
            raise ValueError("only the massless system is implemented; masses must be 0")

    @property
    def n_steps(self) -> int:
        return max(1, round(self.T / self.dt))


@dataclass(frozen=True)
class DKGState:
    """Frequency-basis snapshot of (psi_+, psi_-, phi, d_t phi) at one time."""

    psi_plus: SpinorField2
    psi_minus: SpinorField2
    phi: SpectralField2
    phi_t: SpectralField2
    time: float


@lru_cache(maxsize=32)
def _tables(grid: GridSpec2):
    r = grid.xi_norm()
    with np.errstate(invalid="ignore", divide="ignore"):
        u1 = np.where(r > 0, grid.xi_mesh()[0] / np.where(r > 0, r, 1.0), 0.0)
        u2 = np.where(r > 0, grid.xi_mesh()[1] / np.where(r > 0, r, 1.0), 0.0)
    # 2/3-rule mask for quadratic nonlinearities
    ax = np.abs(grid.xi_axis())
    cut = ax.max() * (2.0 / 3.0)
    keep = (ax[:, None] <= cut) & (ax[None, :] <= cut)
    return r, u1 + 1j * u2, keep


def project_spinor_values(vals: np.ndarray, sign: int, grid: GridSpec2,
                          note: str | None = None) -> np.ndarray:
    """
    Apply the half-wave eigenprojection to frequency spinor values (2, n, n).
    The zero mode is zeroed (the projector is undefined there); when that
    drops actual mass a note is recorded.
    """
    r, w, _ = _tables(grid)
    a = sign * np.conj(w)  # (u1 - i u2) * sign
    out = np.empty_like(vals)
    out[0] = 0.5 * (vals[0] + a * vals[1])
    out[1] = 0.5 * (np.conj(a) * vals[0] + vals[1])
    if vals[0][r == 0].any() or vals[1][r == 0].any():
        record_zero_mode_note(note or "spinor zero mode zeroed before projection")
    out[0][r == 0] = 0.0
    out[1][r == 0] = 0.0
    return out


def prepare_state(psi0: SpinorField2, phi0: SpectralField2, phi1: SpectralField2,
                  time: float = 0.0) -> DKGState:
    """Split the spinor datum into half-wave parts and normalize bases."""
    grid = psi0.grid
    ph = to_frequency(psi0)
    plus = project_spinor_values(ph.values, +1, grid, "initial spinor zero mode zeroed")
    minus = project_spinor_values(ph.values, -1, grid, "initial spinor zero mode zeroed")
    return DKGState(
        psi_plus=SpinorField2(grid, plus, "frequency"),
        psi_minus=SpinorField2(grid, minus, "frequency"),
        phi=to_frequency(phi0),
        phi_t=to_frequency(phi1),
        time=time,
    )


def _ifft2(vals: np.ndarray, grid: GridSpec2) -> np.ndarray:
    return np.fft.ifftn(vals, axes=(-2, -1)) / grid.dx**2


def _fft2(vals: np.ndarray, grid: GridSpec2) -> np.ndarray:
    return np.fft.fftn(vals, axes=(-2, -1)) * grid.dx**2


def nonlinearity(state: DKGState, dealias: bool = True):
    """
    The coupling terms at the state's time: frequency-basis
    (-P_+(D)(phi beta psi), -P_-(D)(phi beta psi), -<beta psi, psi>^hat),
    optionally de-aliased by the 2/3 rule.
    """
    grid = state.psi_plus.grid
    r, _, keep = _tables(grid)
    psi_hat = state.psi_plus.values + state.psi_minus.values
    psi = _ifft2(psi_hat, grid)
    phi = _ifft2(state.phi.values, grid)
    coupled = np.stack([phi * psi[0], -phi * psi[1]])  # phi * beta psi
    density = np.abs(psi[0]) ** 2 - np.abs(psi[1]) ** 2  # <beta psi, psi>
    coupled_hat = _fft2(coupled, grid)
    density_hat = _fft2(density.astype(complex), grid)
    if dealias:
        coupled_hat *= keep
        density_hat *= keep
    rhs_plus = -project_spinor_values(coupled_hat, +1, grid)
    rhs_minus = -project_spinor_values(coupled_hat, -1, grid)
    return (
        SpinorField2(grid, rhs_plus, "frequency"),
        SpinorField2(grid, rhs_minus, "frequency"),
        SpectralField2(grid, -density_hat, "frequency"),
    )


def _linear_flow(arrs, h: float, grid: GridSpec2):
    """Exact free flow by time h on the packed frequency arrays."""
    r, _, _ = _tables(grid)
    pp, pm, phi, phit = arrs
    ep = np.exp(-1j * h * r)
    pp = pp * ep
    pm = pm * np.conj(ep)
    ct, st = np.cos(h * r), np.sin(h * r)
    safe_r = np.where(r == 0, 1.0, r)
    sinc = np.where(r == 0, h, st / safe_r)
    phi_new = ct * phi + sinc * phit
    phit_new = -safe_r * st * phi + ct * phit
    phit_new = np.where(r == 0, phit, phit_new)
    return [pp, pm, phi_new, phit_new]


def _nonlinear_derivative(arrs, grid: GridSpec2, dealias: bool):
    pp, pm, phi, phit = arrs
    state = DKGState(
        SpinorField2(grid, pp, "frequency"),
        SpinorField2(grid, pm, "frequency"),
        SpectralField2(grid, phi, "frequency"),
        SpectralField2(grid, phit, "frequency"),
        time=0.0,
    )
    fp, fm, fphi = nonlinearity(state, dealias)
    # d_t psi_pm picks up i * F_pm; the wave source enters d_t phi_t with -F
    return [1j * fp.values, 1j * fm.values, np.zeros_like(phi), -fphi.values]


def _axpy(y, a, x):
    return [yi + a * xi for yi, xi in zip(y, x)]


def step(state: DKGState, config: SolverConfig, dt: float | None = None) -> DKGState:
    """
    One Lawson-RK4 step: exact half-wave and wave phases, classical RK4 on the
    interaction-picture nonlinearity.  Deterministic; aborts on non-finite
    values.
    """
    h = config.dt if dt is None else dt
    grid = state.psi_plus.grid
    y0 = [
        state.psi_plus.values,
        state.psi_minus.values,
        state.phi.values,
        state.phi_t.values,
    ]
    if config.nonlinear:
        nl = lambda a: _nonlinear_derivative(a, grid, config.dealias)
        k1 = nl(y0)
        half = _linear_flow(y0, h / 2, grid)
        k2 = nl(_axpy(half, h / 2, _linear_flow(k1, h / 2, grid)))
        k3 = nl(_axpy(half, h / 2, k2))
        full = _linear_flow(y0, h, grid)
        k3h = _linear_flow(k3, h / 2, grid)
        k4 = nl(_axpy(full, h, k3h))
        k1f = _linear_flow(k1, h, grid)
        k2h = _linear_flow(k2, h / 2, grid)
        incr = [
            (a + 2 * b + 2 * c + d) * (h / 6.0) for a, b, c, d in zip(k1f, k2h, k3h, k4)
        ]
        y1 = _axpy(full, 1.0, incr)
    else:
        y1 = _linear_flow(y0, h, grid)
    if not all(np.all(np.isfinite(a.view(float))) for a in y1):
        raise NumericalBlowupError(f"non-finite state after step at t = {state.time + h}")
    return DKGState(
        SpinorField2(grid, y1[0], "frequency"),
        SpinorField2(grid, y1[1], "frequency"),
        SpectralField2(grid, y1[2], "frequency"),
        SpectralField2(grid, y1[3], "frequency"),
        time=state.time + h,
    )


def _support_radius(vals: np.ndarray, grid: GridSpec2, frac: float = 0.99) -> float:
    mags = (np.abs(_ifft2(vals, grid)) ** 2).reshape(-1, grid.n, grid.n).sum(axis=0)
    total = mags.sum()
    if total == 0:
        return 0.0
    x1, x2 = grid.x_mesh()
    rho = np.hypot(x1, x2)
    order = np.argsort(rho.ravel())
    cum = np.cumsum(mags.ravel()[order])
    k = int(np.searchsorted(cum, frac * total))
    return float(rho.ravel()[order][min(k, rho.size - 1)])


def solve(psi0: SpinorField2, phi0: SpectralField2, phi1: SpectralField2,
          config: SolverConfig) -> list[DKGState]:
    """Advance the system to T, returning the trajectory of states (t = 0 first)."""
    grid = config.grid
    state = prepare_state(psi0, phi0, phi1)
    max_xi = float(np.abs(grid.xi_axis()).max()) * np.sqrt(2.0)
    if config.dt > 0.5 / max_xi:
        warnings.warn(
            f"dt = {config.dt} exceeds 0.5/max|xi| = {0.5 / max_xi:.3g}; the linear flow "
            "is exact, but the nonlinear stages may be underresolved",
            stacklevel=2,
        )
    # finite propagation speed acts on the raw data's support (the half-wave
    # split adds slowly decaying tails that no box can contain); data filling
    # the torus is taken as deliberately periodic and not warned about
    support = max(
        _support_radius(to_frequency(psi0).values, grid),
        _support_radius(to_frequency(phi0).values[None], grid),
    )
    if support <= 0.45 * grid.box and grid.box < 8.0 * support + config.T:
        warnings.warn(
            f"box = {grid.box} is below 8 x data radius + T = {8 * support + config.T:.3g}; "
            "wraparound may enter the observation window",
            stacklevel=2,
        )
    dt = config.T / config.n_steps
    traj = [state]
    for _ in range(config.n_steps):
        state = step(state, config, dt)
        traj.append(state)
    return traj


def charge(state: DKGState) -> float:
    """Conserved L^2 mass of the spinor, as a frequency-lattice Riemann sum."""
    grid = state.psi_plus.grid
    psi_hat = state.psi_plus.values + state.psi_minus.values
    return float(np.sum(np.abs(psi_hat) ** 2) * grid.dxi**2 / (2 * np.pi) ** 2)


def projection_residual(state: DKGState) -> float:
    """Max over signs of ||(I - P_pm) psi_pm|| / ||psi_pm|| (0 for a zero part)."""
    grid = state.psi_plus.grid
    worst = 0.0
    for sign, part in ((+1, state.psi_plus), (-1, state.psi_minus)):
        norm = np.linalg.norm(part.values)
        if norm == 0:
            continue
        proj = project_spinor_values(part.values, sign, grid)
        worst = max(worst, float(np.linalg.norm(proj - part.values) / norm))
    return worst


def phi_reality_defect(state: DKGState) -> float:
    grid = state.phi.grid
    return float(np.abs(_ifft2(state.phi.values[None], grid)[0].imag).max())


def time_reversed_data(state: DKGState):
    """
    Data for the time-reversal involution of the massless system: evolving
    (sigma2 conj psi, -phi, +phi_t) for time t returns (-psi(0), -phi(0)) up
    to integrator error.
    """
    grid = state.psi_plus.grid
    psi_hat = state.psi_plus.values + state.psi_minus.values
    psi_phys = _ifft2(psi_hat, grid)
    flipped = np.stack([-1j * psi_phys[1].conj(), 1j * psi_phys[0].conj()])
    psi_r = SpinorField2(grid, _fft2(flipped, grid), "frequency")
    phi_r = state.phi.with_values(-state.phi.values)
    return psi_r, phi_r, state.phi_t


# ---------------------------------------------------------------------------
# Picard iterates


def _density_hat(psi_vals_phys: np.ndarray, grid: GridSpec2) -> np.ndarray:
    density = np.abs(psi_vals_phys[0]) ** 2 - np.abs(psi_vals_phys[1]) ** 2
    return _fft2(density.astype(complex), grid)


def picard_iterates(psi0: SpinorField2, phi0: SpectralField2, phi1: SpectralField2,
                    config: SolverConfig, depth: int | None = None):
    """
    Iterate the Duhamel formulation: iterate 0 is the free flow, and iterate
    j+1 solves the linear equations with sources built from iterate j.

    Returns (times, iterates) where each iterate holds frequency-basis slice
    arrays 'psi' (n_t, 2, n, n), 'phi' and 'phi_t' (n_t, n, n).
    """
    depth = config.picard_depth if depth is None else depth
    if depth < 1:
        raise ValueError("depth must be >= 1")
    grid = config.grid
    n_t = config.n_steps + 1
    times = np.linspace(0.0, config.T, n_t)
    r, _, keep = _tables(grid)
    state0 = prepare_state(psi0, phi0, phi1)
    phase = np.exp(-1j * times[:, None, None] * r[None])  # e^{-i t |xi|}

    def free_psi():
        out = np.empty((n_t, 2, grid.n, grid.n), dtype=complex)
        for c in range(2):
            out[:, c] = phase * state0.psi_plus.values[c][None]
            out[:, c] += np.conj(phase) * state0.psi_minus.values[c][None]
        return out

    iterates = []
    psi = free_psi()
    ct = np.cos(times[:, None, None] * r[None])
    st = np.sin(times[:, None, None] * r[None])
    safe_r = np.where(r == 0, 1.0, r)[None]
    sinc = np.where(r[None] == 0, times[:, None, None], st / safe_r)
    phi = ct * state0.phi.values[None] + sinc * state0.phi_t.values[None]
    phi_t = -safe_r * st * state0.phi.values[None] + ct * state0.phi_t.values[None]
    phi_t = np.where(r[None] == 0, state0.phi_t.values[None], phi_t)
    iterates.append({"psi": psi, "phi": phi, "phi_t": phi_t})

    for _ in range(depth):
        prev = iterates[-1]
        # sources from the previous iterate, slice by slice
        coupled = np.empty_like(prev["psi"])
        density = np.empty((n_t, grid.n, grid.n), dtype=complex)
        for i in range(n_t):
            psi_phys = _ifft2(prev["psi"][i], grid)
            phi_phys = _ifft2(prev["phi"][i][None], grid)[0]
            ch = _fft2(np.stack([phi_phys * psi_phys[0], -phi_phys * psi_phys[1]]), grid)
            dh = _density_hat(psi_phys, grid)
            if config.dealias:
                ch *= keep
                dh *= keep
            coupled[i] = ch
            density[i] = dh

        psi_next = None
        for sign in (+1, -1):
            # (-i d_t +- |D|) psi = -P(coupled): psi(t) = e^{-+itr}[psi0 + i Int e^{+-isr} F ds]
            proj = np.stack(
                [project_spinor_values(-coupled[i], sign, grid) for i in range(n_t)]
            )
            ph = phase if sign > 0 else np.conj(phase)
            cum = _cum_from(np.conj(ph)[:, None] * 1j * proj, times)
            base = state0.psi_plus.values if sign > 0 else state0.psi_minus.values
            contrib = ph[:, None] * (base[None] + cum)
            psi_next = contrib if psi_next is None else psi_next + contrib

        sol = duhamel_slices(state0.phi.values, state0.phi_t.values, -density, times, r)
        # velocity: d_t of the forced part is -(cos(rt) Ic + sin(rt) Is), with
        # the r -> 0 limit -I0 (the F(t) terms cancel in the derivative)
        ic = _cum_from(ct * (-density), times)
        is_ = _cum_from(st * (-density), times)
        i0 = _cum_from(-density, times)
        forced_t = np.where(r[None] == 0, -i0, -(ct * ic + st * is_))
        phi_t_next = (
            -safe_r * st * state0.phi.values[None] + ct * state0.phi_t.values[None] + forced_t
        )
        iterates.append({"psi": psi_next, "phi": sol, "phi_t": phi_t_next})

    return times, iterates


def _cum_from(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    dt_vec = np.diff(times).reshape((-1,) + (1,) * (values.ndim - 1))
    seg = 0.5 * (values[:-1] + values[1:]) * dt_vec
    return np.concatenate([np.zeros_like(values[:1]), np.cumsum(seg, axis=0)])


def iterate_distance(it_a: dict, it_b: dict, grid: GridSpec2, s: float) -> float:
    """sup-in-time H^s distance of the spinor parts of two Picard iterates."""
    diff = it_a["psi"] - it_b["psi"]
    worst = 0.0
    for i in range(diff.shape[0]):
        hs = sum(
            sobolev_norm(SpectralField2(grid, diff[i, c], "frequency"), s) ** 2
            for c in range(2)
        )
        worst = max(worst, float(np.sqrt(hs)))
    return worst


# ---------------------------------------------------------------------------
# First-iterate regularity probe and rough data


def first_iterate_regularity(psi0: SpinorField2, sigma: float, t: float = 1.0,
                             n_time: int | None = None) -> float:
    """
    H^sigma size at time t of the modified first meson iterate: the solution
    of (-box) Phi = g(s) <beta psi0_free(s), psi0_free(s)> with zero data and
    g(s) = s * chi(s), driven by the free evolution of psi0.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    grid = psi0.grid
    n_time = 4 * grid.n if n_time is None else n_time
    state0 = prepare_state(psi0, SpectralField2(grid, np.zeros((grid.n, grid.n)), "frequency"),
                           SpectralField2(grid, np.zeros((grid.n, grid.n)), "frequency"))
    r, _, _ = _tables(grid)
    times = np.linspace(0.0, t, n_time + 1)
    dt = times[1] - times[0]
    ic = np.zeros((grid.n, grid.n), dtype=complex)
    is_ = np.zeros_like(ic)
    i0 = np.zeros_like(ic)
    i1 = np.zeros_like(ic)
    prev = None
    for s in times:
        ph = np.exp(-1j * s * r)
        psi_hat = ph[None] * state0.psi_plus.values + np.conj(ph)[None] * state0.psi_minus.values
        psi_phys = _ifft2(psi_hat, grid)
        g = s * smooth_time_cutoff(np.array([s]))[0]
        force = -g * _density_hat(psi_phys, grid)  # box Phi = -g N
        cur = (np.cos(r * s) * force, np.sin(r * s) * force, force, s * force)
        if prev is not None:
            ic += 0.5 * dt * (prev[0] + cur[0])
            is_ += 0.5 * dt * (prev[1] + cur[1])
            i0 += 0.5 * dt * (prev[2] + cur[2])
            i1 += 0.5 * dt * (prev[3] + cur[3])
        prev = cur
    safe_r = np.where(r == 0, 1.0, r)
    phi_hat = -(np.sin(r * t) * ic - np.cos(r * t) * is_) / safe_r
    phi_hat = np.where(r == 0, -(t * i0 - i1), phi_hat)
    return sobolev_norm(SpectralField2(grid, phi_hat, "frequency"), sigma)


def rough_data(s: float, seed: int, grid: GridSpec2, kind: str = "scalar"):
    """
    Borderline-H^s data: spectrum bracket(|xi|)^-(s+1) with unit-modulus
    deterministic pseudo-random phases per integer mode.  Phases depend only
    on (seed, mode index), so refining the grid extends the same function.
    kind: 'scalar' (complex), 'real' (conjugate-symmetric), 'spinor'.
    """
    n = grid.n
    i = np.arange(n)
    k = np.where(i < n // 2, i, i - n)  # signed integer modes
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    env = (1.0 + grid.xi_norm()) ** (-(s + 1.0))

    def phase_plane(comp: int) -> np.ndarray:
        theta = mode_hash_uniform(seed + 7919 * comp, k1, k2)
        return np.exp(2j * np.pi * theta)

    if kind == "spinor":
        vals = np.stack([env * phase_plane(0), env * phase_plane(1)])
        return SpinorField2(grid, vals, "frequency")
    ph = phase_plane(0)
    if kind == "real":
        neg = (-i) % n
        ph_neg = ph[np.ix_(neg, neg)]
        # one representative per conjugate pair; Nyquist rows pair within themselves
        axis_self = lambda k: (k == 0) | (k == -(n // 2))
        positive = (k1 > 0) | (axis_self(k1) & (k2 > 0))
        ph = np.where(positive, ph, np.conj(ph_neg))
        ph = np.where(axis_self(k1) & axis_self(k2), 1.0, ph)
    elif kind != "scalar":
        raise ValueError(f"unknown kind {kind!r}")
    return SpectralField2(grid, env * ph, "frequency")


# ---------------------------------------------------------------------------
# Snapshots and trajectory export

SNAPSHOT_MAGIC = b"DKGS"
SNAPSHOT_VERSION = 1


def write_snapshot(state: DKGState, path) -> None:
    """Versioned little-endian binary snapshot (arrays stored as complex64)."""
    grid = state.psi_plus.grid
    header = struct.pack("<4sII d d", SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.n,
                         grid.box, state.time)
    arrays = [
        state.psi_plus.values,
        state.psi_minus.values,
        state.phi.values[None],
        state.phi_t.values[None],
    ]
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<c8").tobytes())


def read_snapshot(path) -> DKGState:
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sII d d"))
        magic, version, n, box, time = struct.unpack("<4sII d d", head)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError("not a DKGS snapshot")
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        grid = GridSpec2(int(n), float(box))
        count = n * n

        def read_block(shape):
            raw = np.frombuffer(fh.read(8 * int(np.prod(shape))), dtype="<c8")
            return raw.reshape(shape).astype(np.complex128)

        pp = read_block((2, n, n))
        pm = read_block((2, n, n))
        phi = read_block((1, n, n))[0]
        phit = read_block((1, n, n))[0]
    return DKGState(
        SpinorField2(grid, pp, "frequency"),
        SpinorField2(grid, pm, "frequency"),
        SpectralField2(grid, phi, "frequency"),
        SpectralField2(grid, phit, "frequency"),
        time=float(time),
    )


def trajectory_rows(traj: list[DKGState], s: float, r: float) -> list[dict]:
    """Per-step diagnostics: time, charge, H^s of psi, H^r of phi, H^(r-1) of phi_t."""
    rows = []
    for st in traj:
        grid = st.psi_plus.grid
        psi_hat = st.psi_plus.values + st.psi_minus.values
        psi_hs = np.sqrt(
            sum(
                sobolev_norm(SpectralField2(grid, psi_hat[c], "frequency"), s) ** 2
                for c in range(2)
            )
        )
        rows.append(
            {
                "time": st.time,
                "charge": charge(st),
                "psi_hs": float(psi_hs),
                "phi_hr": sobolev_norm(st.phi, r),
                "phi_t_hrm1": sobolev_norm(st.phi_t, r - 1.0),
            }
        )
    return rows
