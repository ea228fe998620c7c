"""
Bilinear null-form estimate laboratory: evaluates both sides of the estimates
on arbitrary space-time spinors, generates the four sharpness families of
frequency-localized slab data, and fits the scaling of estimate ratios in the
concentration parameter L against the closed-form exponents.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dirac import eigenvector
from .grids import (
    GridCompatibilityError,
    SpectralField3,
    SpinorField3,
    bracket,
    to_frequency,
    to_physical,
)
from .norms import (
    NormSpec,
    WAVE_SOBOLEV,
    XSB_MINUS,
    XSB_PLUS,
    spacetime_norm,
)
from .solver import _tables
from .util import run_jobs, smooth_time_cutoff

FAMILIES = ("R1", "R2", "R3", "S")

SLOPE_TOLERANCE = 0.15


def failure_exponent(family: str, s: float, r: float) -> float:
    """
    The closed-form exponent delta(r, s) of each family: the estimate ratio
    scales like L^(-delta), so delta < 0 means the ratio grows and the
    estimate fails at (s, r).
    """
    if family == "R1":
        return 0.75 - r + 2.0 * s
    if family == "R2":
        return 0.75 - r + 1.5 * s
    if family == "R3":
        return 1.0 - r + s
    if family == "S":
        return 0.5 + 2.0 * s
    raise ValueError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# Dense operations on space-time spinors


@dataclass(frozen=True)
class EstimateCase:
    """
    which = "B": the product-of-spinors estimate; lhs in the wave-Sobolev
    space with exponents (r - 1, -1/2 + 2 eps), rhs a product of X^{s,1/2+eps}
    norms.  which = "A": the dual form; lhs exponents (-r, -1/2 - eps), rhs
    X^{s,1/2+eps} x X^{-s,1/2-2eps}.
    """

    which: str
    signs: tuple[int, int] = (1, 1)
    s: float = 0.0
    r: float = 0.5
    epsilon: float = 0.0

    def __post_init__(self):
        if self.which not in ("A", "B"):
            raise ValueError("which must be 'A' or 'B'")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


def _project3(vals: np.ndarray, sign: int, grid2) -> np.ndarray:
    """Spatial eigenprojection applied to (2, n_t, n, n) frequency values."""
    r, w, _ = _tables(grid2)
    a = sign * np.conj(w)[None]
    out = np.empty_like(vals)
    out[0] = 0.5 * (vals[0] + a * vals[1])
    out[1] = 0.5 * (np.conj(a) * vals[0] + vals[1])
    out[:, :, r == 0] = 0.0
    return out


def null_form(psi: SpinorField3, psi_prime: SpinorField3,
              signs: tuple[int, int] = (1, 1)) -> SpectralField3:
    """
    Space-time spectrum of <beta P_1 psi, P_2 psi'>: project each spinor,
    take the pointwise beta pairing in physical space (which realizes the
    frequency convolution with the conjugate-reflected second factor), and
    transform back.  Inputs must share a grid and be band-limited enough
    that the quadratic product does not alias.
    """
    if psi.grid != psi_prime.grid:
        raise GridCompatibilityError("null form needs both spinors on one grid")
    grid = psi.grid
    ph = to_frequency(psi)
    pph = to_frequency(psi_prime)
    z = _project3(ph.values, signs[0], grid.spatial)
    w = _project3(pph.values, signs[1], grid.spatial)
    zf = to_physical(SpinorField3(grid, z, "frequency")).values
    wf = to_physical(SpinorField3(grid, w, "frequency")).values
    pairing = np.conj(wf[0]) * zf[0] - np.conj(wf[1]) * zf[1]
    return to_frequency(SpectralField3(grid, pairing, "physical"))


def _xsb_kind(sign: int) -> str:
    return XSB_PLUS if sign > 0 else XSB_MINUS


def estimate_sides(case: EstimateCase, psi: SpinorField3,
                   psi_prime: SpinorField3) -> tuple[float, float]:
    """Both sides of the chosen bilinear estimate for the given inputs."""
    nf = null_form(psi, psi_prime, case.signs)
    eps = case.epsilon
    if case.which == "B":
        lhs = spacetime_norm(nf, NormSpec(WAVE_SOBOLEV, s=case.r - 1.0, b=-0.5 + 2 * eps))
        rhs = spacetime_norm(psi, NormSpec(_xsb_kind(case.signs[0]), s=case.s, b=0.5 + eps))
        rhs *= spacetime_norm(psi_prime, NormSpec(_xsb_kind(case.signs[1]), s=case.s, b=0.5 + eps))
    else:
        lhs = spacetime_norm(nf, NormSpec(WAVE_SOBOLEV, s=-case.r, b=-0.5 - eps))
        rhs = spacetime_norm(psi, NormSpec(_xsb_kind(case.signs[0]), s=case.s, b=0.5 + eps))
        rhs *= spacetime_norm(
            psi_prime, NormSpec(_xsb_kind(case.signs[1]), s=-case.s, b=0.5 - 2 * eps)
        )
    if rhs == 0:
        raise ValueError("zero right-hand side")
    return lhs, rhs


def projected_product(phi: SpectralField3, psi: SpinorField3,
                      signs: tuple[int, int] = (1, 1)) -> SpinorField3:
    """P_2(D)(phi beta P_1(D) psi) as a space-time spinor (frequency basis)."""
    if phi.grid != psi.grid:
        raise GridCompatibilityError("grid mismatch")
    grid = psi.grid
    z = _project3(to_frequency(psi).values, signs[0], grid.spatial)
    zf = to_physical(SpinorField3(grid, z, "frequency")).values
    phif = to_physical(phi).values
    prod = np.stack([phif * zf[0], -phif * zf[1]])
    prod_hat = to_frequency(SpinorField3(grid, prod, "physical")).values
    return SpinorField3(grid, _project3(prod_hat, signs[1], grid.spatial), "frequency")


def duality_pairing_gap(phi: SpectralField3, psi: SpinorField3, psi_prime: SpinorField3,
                        signs: tuple[int, int] = (1, 1)) -> float:
    """
    The exact transposition identity behind the dual form:
    <P_2(phi beta P_1 psi), psi'>_{L2} = integral of phi times the null form.
    Returns the relative gap between the two space-time pairings.
    """
    grid = psi.grid
    lhs_field = projected_product(phi, psi, signs)
    wf = to_physical(psi_prime).values
    zf = to_physical(lhs_field).values
    cell = grid.dt * grid.dx**2
    inner1 = np.sum(np.conj(wf) * zf) * cell
    nf = to_physical(null_form(psi, psi_prime, signs)).values
    inner2 = np.sum(to_physical(phi).values * nf) * cell
    scale = max(abs(inner1), abs(inner2), 1e-300)
    return float(abs(inner1 - inner2) / scale)


def time_cutoff(psi: SpinorField3 | SpectralField3, kind: str = "smooth"):
    """
    Multiply by an even time cutoff: 'smooth' is 1 on |t| <= 1 and 0 on
    |t| >= 2, 'sharp' is the indicator of |t| <= 1.
    """
    phys = to_physical(psi)
    t = phys.grid.t_axis()
    if kind == "smooth":
        chi = smooth_time_cutoff(t)
    elif kind == "sharp":
        chi = (np.abs(t) <= 1.0).astype(float)
    else:
        raise ValueError(f"unknown cutoff kind {kind!r}")
    shape = (1, -1, 1, 1) if isinstance(psi, SpinorField3) else (-1, 1, 1)
    out = phys.with_values(phys.values * chi.reshape(shape))
    return out if psi.basis == "physical" else to_frequency(out)


# ---------------------------------------------------------------------------
# Region of validity


@dataclass(frozen=True)
class RegionVerdict:
    classification: str  # inside | boundary | outside
    violated: list[str]


def region_check(s: float, r: float, tol: float = 1e-9) -> RegionVerdict:
    """Locate (s, r) relative to the convex well-posedness region."""
    margins = {
        "s > -1/5": s + 0.2,
        "r > 1/4 - s/2": r - (0.25 - 0.5 * s),
        "r > 1/4 + s/2": r - (0.25 + 0.5 * s),
        "r > s": r - s,
        "r < 3/4 + 2s": (0.75 + 2.0 * s) - r,
        "r < 3/4 + 3s/2": (0.75 + 1.5 * s) - r,
        "r < 1 + s": (1.0 + s) - r,
    }
    worst = min(margins.values())
    if worst < -tol:
        cls = "outside"
    elif worst <= tol:
        cls = "boundary"
    else:
        cls = "inside"
    violated = [name for name, m in margins.items() if m <= tol] if cls != "inside" else []
    return RegionVerdict(cls, violated)


# ---------------------------------------------------------------------------
# Weight relation verification


@dataclass(frozen=True)
class WeightRelationsReport:
    samples: int
    violations_triangle: int
    violations_sum_bound: int
    theta_plus_ratio: tuple[float, float]
    theta_minus_ratio: tuple[float, float]
    passed: bool


def verify_weight_relations(samples: int = 1_000_000, seed: int = 0,
                            slack: float = 1e-12) -> WeightRelationsReport:
    """
    Random check of the convolution-weight inequalities and of the
    angle-weight comparability, over samples with |eta|, |eta - xi| >= 1.
    """
    from .grids import weights_at

    rng = np.random.default_rng(seed)
    got = 0
    vio_a = vio_b = 0
    prange = [np.inf, -np.inf]
    mrange = [np.inf, -np.inf]
    while got < samples:
        m = min(samples - got, 2_000_000)
        lam = rng.uniform(-100, 100, m)
        tau = rng.uniform(-100, 100, m)
        eta = rng.uniform(-30, 30, (m, 2))
        xi = rng.uniform(-30, 30, (m, 2))
        abs_eta = np.hypot(eta[:, 0], eta[:, 1])
        diff = eta - xi
        abs_diff = np.hypot(diff[:, 0], diff[:, 1])
        ok = (abs_eta >= 1.0) & (abs_diff >= 1.0)
        lam, tau, eta, xi = lam[ok], tau[ok], eta[ok], xi[ok]
        abs_eta, diff, abs_diff = abs_eta[ok], diff[ok], abs_diff[ok]
        got += len(lam)
        w = weights_at(lam, eta, tau, xi)
        mn = np.minimum(abs_eta, abs_diff)
        vio_a += int(np.sum(w.rho_plus > 2 * mn + slack))
        vio_a += int(np.sum(w.rho_minus > 2 * mn + slack))
        vio_b += int(np.sum(w.rho_plus > np.abs(w.A) + np.abs(w.B) + np.abs(w.C_plus) + slack))
        vio_b += int(np.sum(w.rho_minus > np.abs(w.A) + np.abs(w.B) + np.abs(w.C_minus) + slack))

        cross = eta[:, 0] * diff[:, 1] - eta[:, 1] * diff[:, 0]
        dot = eta[:, 0] * diff[:, 0] + eta[:, 1] * diff[:, 1]
        theta_p = np.arctan2(np.abs(cross), dot)
        theta_m = np.pi - theta_p
        abs_xi = np.hypot(xi[:, 0], xi[:, 1])
        denom_p = abs_xi * w.rho_plus / (abs_eta * abs_diff)
        nz = denom_p > 1e-14
        ratios = theta_p[nz] ** 2 / denom_p[nz]
        if ratios.size:
            prange = [min(prange[0], ratios.min()), max(prange[1], ratios.max())]
        denom_m = w.rho_minus / mn
        nz = denom_m > 1e-14
        ratios = theta_m[nz] ** 2 / denom_m[nz]
        if ratios.size:
            mrange = [min(mrange[0], ratios.min()), max(mrange[1], ratios.max())]

    in_band = lambda rg: 0.125 <= rg[0] <= rg[1] <= 8.0
    return WeightRelationsReport(
        samples=got,
        violations_triangle=vio_a,
        violations_sum_bound=vio_b,
        theta_plus_ratio=(float(prange[0]), float(prange[1])),
        theta_minus_ratio=(float(mrange[0]), float(mrange[1])),
        passed=vio_a == 0 and vio_b == 0 and in_band(prange) and in_band(mrange),
    )


# ---------------------------------------------------------------------------
# Sharpness families: frequency-localized slab data on anisotropic lattices


@dataclass(frozen=True)
class CounterexampleFamily:
    family: str
    L: float
    delta0: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        m = np.log2(self.L)
        if self.L < 8 or abs(m - round(m)) > 1e-12:
            raise ValueError("L must be a power of two and >= 8")
        if not 0 < self.delta0 <= 1:
            raise ValueError("delta0 must lie in (0, 1]")


@dataclass
class CounterexampleData:
    """
    Lattice realization of one family at one scale: the input boxes A (for
    psi) and B (for psi'), the output box C, the slab thickness, and the
    spacings.  Slabs sit on the tau lattice with half-thickness delta0.
    """

    family: str
    L: float
    delta0: float
    dtau: float
    dxi: tuple[float, float]
    eta: np.ndarray          # (Ma, 2) lattice points of A
    xi: np.ndarray           # (Mc, 2) lattice points of C
    zeta: np.ndarray         # (Mb, 2) lattice points of B
    b_center: np.ndarray
    b_half: np.ndarray
    second_sign: int         # sign of the psi' half-wave piece
    boxes: dict = field(default_factory=dict)

    def psi_lambda_center(self, eta: np.ndarray) -> np.ndarray:
        if self.family == "S":
            return -np.hypot(eta[..., 0], eta[..., 1])
        return -eta[..., 0]

    def psi_prime_lambda_center(self, zeta: np.ndarray) -> np.ndarray:
        if self.family == "S":
            return np.hypot(zeta[..., 0], zeta[..., 1])
        return -zeta[..., 0]

    def output_tau_center(self, xi: np.ndarray) -> np.ndarray:
        if self.family == "S":
            return np.full(xi.shape[:-1], -2.0 * self.L)
        return -xi[..., 0]

    def in_b(self, zeta: np.ndarray) -> np.ndarray:
        d = np.abs(zeta - self.b_center)
        return (d[..., 0] <= self.b_half[0] + 1e-9) & (d[..., 1] <= self.b_half[1] + 1e-9)

    def pairing(self, eta: np.ndarray, zeta: np.ndarray) -> np.ndarray:
        """<beta v_+(eta), v_{sign2}(zeta)> at point pairs."""
        ve = eigenvector(+1, eta)
        vz = eigenvector(self.second_sign, zeta)
        return np.conj(vz[..., 0]) * ve[..., 0] - np.conj(vz[..., 1]) * ve[..., 1]


def _box_points(center, half, spacing) -> np.ndarray:
    """Closed lattice box center + spacing * Z^2 with |offset| <= half."""
    pts = []
    for c, h, d in zip(center, half, spacing):
        k = int(np.floor(h / d + 1e-9))
        pts.append(c + d * np.arange(-k, k + 1))
    g1, g2 = np.meshgrid(pts[0], pts[1], indexing="ij")
    return np.stack([g1.ravel(), g2.ravel()], axis=-1)


def _geometry(family: str, L: float, delta0: float):
    rt = np.sqrt(L)
    if family == "R1":
        spacing = (L / 32.0, rt / 16.0)
        boxes = {
            "A": ((L, rt), (L / 4, rt / 4)),
            "B": ((2 * L, 0.0), (L / 2, rt / 2)),
            "C": ((-L, rt), (L / 4, rt / 4)),
        }
        sign2 = +1
    elif family == "R2":
        spacing = (rt / 16.0, rt / 16.0)
        boxes = {
            "A": ((0.0, 1.0), (rt / 2, rt / 2)),
            "B": ((L, 0.0), (rt, rt)),
            "C": ((-L, 1.0), (rt / 2, rt / 2)),
        }
        sign2 = +1
    elif family == "R3":
        spacing = (1.0 / 16.0, 1.0 / 16.0)
        boxes = {
            "A": ((0.0, 1.0), (0.5, 0.5)),
            "B": ((L, 0.0), (1.0, 1.0)),
            "C": ((-L, 1.0), (0.5, 0.5)),
        }
        sign2 = +1
    else:  # S
        spacing = (1.0 / 16.0, 1.0 / 16.0)
        boxes = {
            "A": ((L, 1.0), (0.25, 0.25)),
            "B": ((L, 0.0), (0.5, 0.5)),
            "C": ((0.0, 1.0), (0.25, 0.25)),
        }
        sign2 = -1
    # tau spacing: resolves the slab thickness and, for the R families,
    # divides the xi_1 spacing so slab sampling is scale-similar
    dtau = min(delta0 / 4.0, spacing[0] / 2.0, 0.25)
    return spacing, boxes, dtau, sign2


def build_counterexample(family: CounterexampleFamily) -> CounterexampleData:
    """Construct the lattice slab data of the family at its scale."""
    spacing, boxes, dtau, sign2 = _geometry(family.family, family.L, family.delta0)
    eta = _box_points(*boxes["A"], spacing)
    xi = _box_points(*boxes["C"], spacing)
    zeta = _box_points(*boxes["B"], spacing)
    # the projector direction is undefined at the origin; R2's input box can
    # contain it, and the construction excludes that single cell
    eta = eta[np.hypot(eta[:, 0], eta[:, 1]) > 1e-12]
    zeta = zeta[np.hypot(zeta[:, 0], zeta[:, 1]) > 1e-12]
    return CounterexampleData(
        family=family.family,
        L=family.L,
        delta0=family.delta0,
        dtau=dtau,
        dxi=spacing,
        eta=eta,
        xi=xi,
        zeta=zeta,
        b_center=np.asarray(boxes["B"][0], dtype=float),
        b_half=np.asarray(boxes["B"][1], dtype=float),
        second_sign=sign2,
        boxes=boxes,
    )


def _lattice_interval(lo: np.ndarray, hi: np.ndarray, d: float):
    """Endpoints (as integer indices) of d*Z within [lo, hi]."""
    kmin = np.ceil(lo / d - 1e-9).astype(int)
    kmax = np.floor(hi / d + 1e-9).astype(int)
    return kmin, kmax


def _slab_weight_sum(centers: np.ndarray, on_cone_shift: np.ndarray, delta0: float,
                     dtau: float, exponent: float) -> np.ndarray:
    """
    For each support point, sum over the lattice lambdas in the slab
    |lambda - center| <= delta0 of bracket(lambda + shift)^exponent, where
    shift is the cone offset making the weight O(1) on the slab.
    """
    kmin, kmax = _lattice_interval(centers - delta0, centers + delta0, dtau)
    width = int((kmax - kmin).max()) + 1
    offsets = np.arange(width)
    lam = (kmin[:, None] + offsets[None, :]) * dtau
    mask = lam <= (centers + delta0 + 1e-9)[:, None]
    vals = bracket(lam + on_cone_shift[:, None]) ** exponent
    return (vals * mask).sum(axis=1)


def _lambda_overlap_count(lo1, hi1, lo2, hi2, d):
    lo = np.maximum(lo1, lo2)
    hi = np.minimum(hi1, hi2)
    kmin, kmax = _lattice_interval(lo, hi, d)
    return np.maximum(kmax - kmin + 1, 0)


def family_sides(data: CounterexampleData, s: float, r: float,
                 epsilon: float = 0.0) -> tuple[float, float]:
    """
    Both sides of the product-form estimate for this family's slab data, with
    the output norm restricted to the family's output region.
    """
    two_pi3 = (2 * np.pi) ** 3
    cell = data.dtau * data.dxi[0] * data.dxi[1]
    eta = data.eta
    abs_eta = np.hypot(eta[:, 0], eta[:, 1])

    # rhs: slab X norms of psi (plus piece) and psi' (second sign); the plus
    # weight argument is lambda + |eta|, which on the null-plane slabs equals
    # (lambda - center) + (|eta| - eta_1)
    psi_centers = data.psi_lambda_center(eta)
    wsum = _slab_weight_sum(psi_centers, abs_eta, data.delta0, data.dtau, 1.0 + 2 * epsilon)
    rhs1_sq = (bracket(abs_eta) ** (2 * s) * 2.0 * wsum).sum() * cell / two_pi3

    zeta = data.zeta
    abs_zeta = np.hypot(zeta[:, 0], zeta[:, 1])
    pp_centers = data.psi_prime_lambda_center(zeta)
    shift2 = abs_zeta if data.second_sign > 0 else -abs_zeta
    wsum2 = _slab_weight_sum(pp_centers, shift2, data.delta0, data.dtau, 1.0 + 2 * epsilon)
    rhs2_sq = (bracket(abs_zeta) ** (2 * s) * 2.0 * wsum2).sum() * cell / two_pi3
    rhs = np.sqrt(rhs1_sq) * np.sqrt(rhs2_sq)

    # lhs: convolution on the output region
    xi = data.xi
    abs_xi = np.hypot(xi[:, 0], xi[:, 1])
    out_centers = data.output_tau_center(xi)
    kmin, kmax = _lattice_interval(out_centers - data.delta0, out_centers + data.delta0,
                                   data.dtau)
    lhs_sq = 0.0
    eta_lo = psi_centers - data.delta0
    eta_hi = psi_centers + data.delta0
    for i in range(len(xi)):
        z = eta - xi[i]
        member = data.in_b(z)
        if not member.any():
            continue
        em = eta[member]
        zm = z[member]
        pair = data.pairing(em, zm)
        lo1, hi1 = eta_lo[member], eta_hi[member]
        c2 = data.psi_prime_lambda_center(zm)
        taus = (np.arange(kmin[i], kmax[i] + 1)) * data.dtau
        # lambda runs over slab1 intersect (tau + slab2)
        lo2 = taus[:, None] + c2[None, :] - data.delta0
        hi2 = taus[:, None] + c2[None, :] + data.delta0
        counts = _lambda_overlap_count(lo1[None, :], hi1[None, :], lo2, hi2, data.dtau)
        tvals = (counts * pair[None, :]).sum(axis=1) * cell / two_pi3
        w_out = bracket(abs_xi[i]) ** (2 * (r - 1.0)) * bracket(
            np.abs(taus) - abs_xi[i]
        ) ** (2 * (-0.5 + 2 * epsilon))
        lhs_sq += float((w_out * np.abs(tvals) ** 2).sum())
    lhs = np.sqrt(lhs_sq * cell / two_pi3)
    return float(lhs), float(rhs)


@dataclass
class ScalingReport:
    family: str
    s: float
    r: float
    rows: list[dict]
    fitted_slope: float
    predicted_slope: float
    passed: bool

    @property
    def tolerance(self) -> float:
        return SLOPE_TOLERANCE


def fit_scaling(family: str, s: float, r: float,
                L_list: tuple[float, ...] = (8.0, 16.0, 32.0, 64.0),
                delta0: float = 1.0, epsilon: float = 0.0) -> ScalingReport:
    """
    Measure the estimate ratio of the family across the scales, fit the
    log-log slope by least squares, and compare against -delta(r, s).
    """
    if len(L_list) < 3:
        raise ValueError("need at least three scales for a slope fit")

    def one_scale(L):
        data = build_counterexample(CounterexampleFamily(family, L, delta0))
        lhs, rhs = family_sides(data, s, r, epsilon)
        return {"L": L, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs}

    # scales are independent jobs; ordering of the report is deterministic
    rows = run_jobs(one_scale, list(L_list))
    logL = np.log([row["L"] for row in rows])
    logm = np.log([row["ratio"] for row in rows])
    slope = float(np.polyfit(logL, logm, 1)[0])
    predicted = -failure_exponent(family, s, r)
    return ScalingReport(
        family=family,
        s=s,
        r=r,
        rows=rows,
        fitted_slope=slope,
        predicted_slope=predicted,
        passed=abs(slope - predicted) <= SLOPE_TOLERANCE,
    )


def orientation_signs(data: CounterexampleData) -> np.ndarray:
    """
    Signs of the imaginary part of the beta pairing over all support pairs
    (eta in A, xi in C with eta - xi in B); nonzero entries only.
    """
    signs = []
    for i in range(len(data.xi)):
        z = data.eta - data.xi[i]
        member = data.in_b(z)
        if not member.any():
            continue
        im = data.pairing(data.eta[member], z[member]).imag
        signs.append(np.sign(im[np.abs(im) > 1e-13]))
    return np.concatenate(signs) if signs else np.array([])
