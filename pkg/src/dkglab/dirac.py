"""
2x2 Dirac matrix algebra: anticommutation checks, the eigenprojections of the
symbol xi.alpha, explicit eigenvectors, and the bilinear null symbol with its
angle bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY2 = np.eye(2, dtype=np.complex128)


@dataclass(frozen=True)
class DiracRep:
    """A choice of 2x2 matrices (alpha1, alpha2, beta)."""

    alpha1: np.ndarray
    alpha2: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta"):
            m = np.asarray(getattr(self, name), dtype=np.complex128)
            if m.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2")
            object.__setattr__(self, name, m)

    @property
    def alphas(self) -> tuple[np.ndarray, np.ndarray]:
        return (self.alpha1, self.alpha2)


def pauli_representation() -> DiracRep:
    """alpha1 = sigma1, alpha2 = sigma2, beta = sigma3 (the default)."""
    return DiracRep(SIGMA1, SIGMA2, SIGMA3)


@dataclass(frozen=True)
class CliffordReport:
    passed: bool
    max_violation: float
    violations: dict


def check_clifford(rep: DiracRep, tol: float = 1e-12) -> CliffordReport:
    """
    Verify hermiticity, unit squares, alpha-beta anticommutation and the
    alpha-alpha anticommutation relations.
    """
    a = rep.alphas
    b = rep.beta
    checks = {
        "beta_hermitian": b.conj().T - b,
        "beta_squares_to_identity": b @ b - IDENTITY2,
    }
    for j in range(2):
        checks[f"alpha{j + 1}_hermitian"] = a[j].conj().T - a[j]
        checks[f"alpha{j + 1}_squares_to_identity"] = a[j] @ a[j] - IDENTITY2
        checks[f"alpha{j + 1}_beta_anticommute"] = a[j] @ b + b @ a[j]
    for j in range(2):
        for k in range(2):
            target = 2.0 * IDENTITY2 if j == k else np.zeros((2, 2))
            checks[f"alpha{j + 1}_alpha{k + 1}_anticommute"] = a[j] @ a[k] + a[k] @ a[j] - target
    violations = {name: float(np.max(np.abs(m))) for name, m in checks.items()}
    worst = max(violations.values())
    return CliffordReport(passed=worst <= tol, max_violation=worst, violations=violations)


def _unit(xi: np.ndarray) -> np.ndarray:
    xi = np.asarray(xi, dtype=float)
    norm = np.hypot(xi[..., 0], xi[..., 1])
    if np.any(norm == 0):
        raise ValueError("projector/eigenvector undefined at xi = 0")
    return xi / norm[..., None]


def projector(sign: int, xi: np.ndarray, rep: DiracRep | None = None) -> np.ndarray:
    """
    Eigenprojection (1/2)(I + sign * unit(xi).alpha) of the Dirac symbol.

    xi may have shape (..., 2); the result has shape (..., 2, 2).
    xi = 0 is an error: every in-scope use excludes the zero mode, and a
    silent convention there could bias norm computations.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    rep = rep or pauli_representation()
    u = _unit(xi)
    mat = u[..., 0, None, None] * rep.alpha1 + u[..., 1, None, None] * rep.alpha2
    return 0.5 * (IDENTITY2 + sign * mat)


def eigenvector(sign: int, xi: np.ndarray) -> np.ndarray:
    """
    Unnormalized eigenvector of the +/- projector in the Pauli representation:
    v_plus(xi) = [1, unit(xi)_1 + i unit(xi)_2], v_minus(xi) = v_plus(-xi).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    u = _unit(xi) * sign
    out = np.empty(u.shape[:-1] + (2,), dtype=np.complex128)
    out[..., 0] = 1.0
    out[..., 1] = u[..., 0] + 1j * u[..., 1]
    return out


def angle_between(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Unsigned angle in [0, pi] between planar vectors, plus the orientation
    sign of the pair (+1 if rotating a counterclockwise by the angle aligns
    it with b).  atan2-based, so nearly parallel vectors lose no precision.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    dot = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    ang = np.arctan2(np.abs(cross), dot)
    return ang, np.sign(cross)


@dataclass(frozen=True)
class NullSymbolValue:
    matrix: np.ndarray
    op_norm: np.ndarray
    angle: np.ndarray


def _opnorm_2x2(m: np.ndarray) -> np.ndarray:
    # Largest singular value via the closed-form eigenvalues of m^H m.
    sq = np.abs(m) ** 2
    tr = sq.sum(axis=(-2, -1))
    det = np.abs(m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]) ** 2
    disc = np.sqrt(np.maximum(tr**2 - 4.0 * det, 0.0))
    return np.sqrt(0.5 * (tr + disc))


def null_symbol(sign1: int, sign2: int, eta: np.ndarray, zeta: np.ndarray,
                rep: DiracRep | None = None) -> NullSymbolValue:
    """
    The 2x2 matrix P_{sign2}(zeta) beta P_{sign1}(eta), its operator norm, and
    the angle between sign1*eta and sign2*zeta.

    The operator norm never exceeds that angle; in fact it equals
    sin(angle / 2) exactly, which the test suite checks against the
    singular-value computation done here.
    """
    rep = rep or pauli_representation()
    p1 = projector(sign1, eta, rep)
    p2 = projector(sign2, zeta, rep)
    mat = p2 @ rep.beta @ p1
    eta = np.asarray(eta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    ang, _ = angle_between(sign1 * eta, sign2 * zeta)
    return NullSymbolValue(matrix=mat, op_norm=_opnorm_2x2(mat), angle=ang)
