"""
Batch experiment runner: every command writes a manifest before computing,
then emits CSV tables with matplotlib figures alongside, and exits 0 on pass,
1 on a scientific-check failure, 2 on usage errors, 3 on numerical aborts.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import reporting
from .dirac import (
    DiracRep,
    SIGMA1,
    SIGMA2,
    angle_between,
    check_clifford,
    eigenvector,
    null_symbol,
    pauli_representation,
    projector,
)
from .grids import GridSpec2, SpectralField2, SpinorField2, to_physical
from .harness import (
    SLOPE_TOLERANCE,
    fit_scaling,
    region_check,
    verify_weight_relations,
)
from .util import run_jobs
from .solver import (
    NumericalBlowupError,
    SolverConfig,
    first_iterate_regularity,
    iterate_distance,
    phi_reality_defect,
    picard_iterates,
    projection_residual,
    rough_data,
    solve,
    trajectory_rows,
    write_snapshot,
)
from .waves import (
    StrichartzCase,
    annulus_mask,
    dilated_annulus_profile,
    hash_phase_field,
    hh_coherent_pair_ratio,
    improved_square_strichartz_ratio,
    square_mask,
    squares_covering,
    strichartz_ratio,
    thin_shell_indicator,
)

ALGEBRA_TOL = 1e-12


def _verdict(name: str, ok: bool, detail: str = "") -> bool:
    print(f"{'PASS' if ok else 'FAIL'}: {name}" + (f" ({detail})" if detail else ""))
    return ok


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# verify-algebra


def _algebra_checks(samples: int, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    rows = []
    rep = pauli_representation()
    cl = check_clifford(rep, ALGEBRA_TOL)
    rows.append({"check": "clifford_identities", "samples": 1,
                 "max_violation": cl.max_violation, "tolerance": ALGEBRA_TOL,
                 "passed": cl.passed})

    def draw(n):
        v = rng.standard_normal((n, 2)) * rng.uniform(0.5, 20, (n, 1))
        return v[np.hypot(v[:, 0], v[:, 1]) > 1e-9]

    xi = draw(samples // 4)
    p = projector(+1, xi)
    q = projector(-1, xi)
    worst = max(
        float(np.abs(p @ p - p).max()),
        float(np.abs(p - p.conj().swapaxes(-1, -2)).max()),
        float(np.abs(p + q - np.eye(2)).max()),
    )
    rows.append({"check": "projector_idempotent_hermitian_complementary",
                 "samples": len(xi), "max_violation": worst,
                 "tolerance": ALGEBRA_TOL, "passed": worst <= ALGEBRA_TOL})

    v = eigenvector(+1, xi)
    pv = np.einsum("...ij,...j->...i", p, v)
    worst = float(np.abs(pv - v).max())
    rows.append({"check": "eigenvector_fixed_by_projector", "samples": len(xi),
                 "max_violation": worst, "tolerance": ALGEBRA_TOL,
                 "passed": worst <= ALGEBRA_TOL})

    eta = draw(samples)
    zeta = draw(samples)
    m = min(len(eta), len(zeta))
    eta, zeta = eta[:m], zeta[:m]
    bound_violations = 0
    law_worst = 0.0
    for s1 in (1, -1):
        for s2 in (1, -1):
            val = null_symbol(s1, s2, eta, zeta)
            bound_violations += int(np.sum(val.op_norm > val.angle + ALGEBRA_TOL))
            if (s1, s2) == (1, 1):
                law_worst = float(np.abs(val.op_norm - np.sin(val.angle / 2)).max())
    rows.append({"check": "null_symbol_angle_bound", "samples": 4 * m,
                 "max_violation": float(bound_violations), "tolerance": 0.0,
                 "passed": bound_violations == 0})
    rows.append({"check": "null_symbol_half_angle_law", "samples": m,
                 "max_violation": law_worst, "tolerance": ALGEBRA_TOL,
                 "passed": law_worst <= ALGEBRA_TOL})

    ve = eigenvector(+1, eta)
    vz = eigenvector(+1, zeta)
    beta = pauli_representation().beta
    pairing = np.einsum("...i,ij,...j->...", vz.conj(), beta, ve)
    ang, orient = angle_between(eta, zeta)
    worst = float(np.abs(np.abs(pairing.imag) - np.sin(ang)).max())
    nontrivial = np.abs(pairing.imag) > 1e-12
    sign_ok = np.all(np.sign(pairing.imag)[nontrivial] == orient[nontrivial])
    rows.append({"check": "imaginary_part_sine_law", "samples": m,
                 "max_violation": worst, "tolerance": ALGEBRA_TOL,
                 "passed": worst <= ALGEBRA_TOL and bool(sign_ok)})
    return rows


def cmd_verify_algebra(args) -> int:
    run = reporting.run_directory(args.outdir, "verify-algebra", args.label)
    reporting.write_manifest(run, "verify-algebra",
                             {"samples": args.samples, "rep": args.rep}, args.seed)
    if args.rep == "beta-identity":
        rep = DiracRep(SIGMA1, SIGMA2, np.eye(2))
        cl = check_clifford(rep, ALGEBRA_TOL)
        rows = [{"check": "clifford_identities", "samples": 1,
                 "max_violation": cl.max_violation, "tolerance": ALGEBRA_TOL,
                 "passed": cl.passed}]
    else:
        rows = _algebra_checks(args.samples, args.seed)
        wrep = verify_weight_relations(args.samples, args.seed)
        rows.append({"check": "weight_inequalities", "samples": wrep.samples,
                     "max_violation": float(wrep.violations_triangle + wrep.violations_sum_bound),
                     "tolerance": 0.0, "passed": wrep.passed})
        print(f"theta_plus comparability ratio range: {wrep.theta_plus_ratio}")
        print(f"theta_minus comparability ratio range: {wrep.theta_minus_ratio}")
    reporting.write_csv(run / "algebra.csv",
                        ["check", "samples", "max_violation", "tolerance", "passed"], rows)
    reporting.fig_algebra({r["check"]: r["max_violation"] for r in rows}, run / "algebra.png")
    ok = all(r["passed"] for r in rows)
    for r in rows:
        _verdict(r["check"], r["passed"], f"max violation {r['max_violation']:.3g}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# sharpness


def cmd_sharpness(args) -> int:
    run = reporting.run_directory(args.outdir, "sharpness", args.label)
    reporting.write_manifest(
        run, "sharpness",
        {"family": args.family, "s": args.s, "r": args.r, "L": args.L,
         "delta0": args.delta0, "epsilon": args.epsilon}, args.seed,
    )
    report = fit_scaling(args.family, args.s, args.r, tuple(_floats(args.L)),
                         args.delta0, args.epsilon)
    rows = [
        {"family": report.family, "s": report.s, "r": report.r, **row,
         "fitted_slope": report.fitted_slope,
         "predicted_slope": report.predicted_slope, "pass": report.passed}
        for row in report.rows
    ]
    reporting.write_csv(
        run / "scaling.csv",
        ["family", "s", "r", "L", "lhs", "rhs", "ratio", "fitted_slope",
         "predicted_slope", "pass"], rows,
    )
    reporting.fig_scaling(report, run / "scaling.png")
    ok = _verdict(
        f"{args.family} slope at (s, r) = ({args.s:g}, {args.r:g})",
        report.passed,
        f"fitted {report.fitted_slope:+.4f} vs predicted {report.predicted_slope:+.4f} "
        f"(tolerance {SLOPE_TOLERANCE})",
    )
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# strichartz


def _scan_grid(max_freq: float) -> GridSpec2:
    n = int(2 * max_freq + 24)
    return GridSpec2(n + n % 2, 2 * np.pi)


def _at_endpoint(q: float, s1: float, s2: float) -> bool:
    checks = [abs(s1 + s2 - 1.0 / q), abs(s1 - (1 - 1.0 / q)), abs(s2 - (1 - 1.0 / q))]
    return (not np.isinf(q)) and min(checks) <= 1e-9


def cmd_strichartz(args) -> int:
    run = reporting.run_directory(args.outdir, "strichartz", args.label)
    params = {k: getattr(args, k) for k in
              ("mode", "q", "s1", "s2", "s3", "scales", "lam", "mus", "n_time")}
    reporting.write_manifest(run, "strichartz", params, args.seed)
    signs = {"++": (1, 1), "+-": (1, -1), "-+": (-1, 1), "--": (-1, -1)}[args.signs]
    q = np.inf if args.q == "inf" else float(args.q)

    if args.mode == "square":
        lam = args.lam
        rows = []
        for mu in _floats(args.mus):
            grid = _scan_grid(2 * lam + mu)
            # the nonempty annulus square nearest the diagonal direction
            target = lam * 1.4 / np.sqrt(2.0)
            pieces = squares_covering(grid, lam, mu)
            piece = min(pieces, key=lambda p: (p.j * mu - target) ** 2 + (p.k * mu - target) ** 2)
            mask = annulus_mask(grid, lam) & square_mask(grid, mu, piece.j, piece.k)
            f = hash_phase_field(grid, mask, args.seed)
            ratio = improved_square_strichartz_ratio(f, lam, piece, q=q, n_time=args.n_time)
            rows.append({"lam": lam, "mu": mu, "q": args.q, "ratio": ratio})
        reporting.write_csv(run / "square.csv", ["lam", "mu", "q", "ratio"], rows)
        reporting.fig_ratio_scan(rows, "mu", ["ratio"], run / "square.png",
                                 title=f"square-localized dispersion, lambda = {lam:g}")
        ratios = np.array([r["ratio"] for r in rows])
        if np.isinf(q):
            ok = _verdict("square ratio below unit-bound", bool(ratios.max() <= 1.05),
                          f"max {ratios.max():.3f}")
        else:
            ok = _verdict("square ratio stable in mu",
                          bool(ratios.max() / ratios.min() <= 2.0),
                          f"max/min {ratios.max() / ratios.min():.3f}")
        return 0 if ok else 1

    case = StrichartzCase(q=q, s1=args.s1, s2=args.s2, s3=args.s3, signs=signs)
    rows = []
    for scale in _floats(args.scales):
        if args.mode == "scale":
            grid = _scan_grid(4.4 * scale)
            f = dilated_annulus_profile(grid, scale)
        else:
            grid = _scan_grid(2 * (scale + 1))
            f = thin_shell_indicator(grid, scale)
        ratio = strichartz_ratio(case, f, f, n_time=args.n_time)
        rows.append({"scale": scale, "q": args.q, "s1": args.s1, "s2": args.s2,
                     "s3": args.s3, "signs": args.signs, "ratio": ratio})
    reporting.write_csv(run / "strichartz.csv",
                        ["scale", "q", "s1", "s2", "s3", "signs", "ratio"], rows)
    reporting.fig_ratio_scan(rows, "scale", ["ratio"], run / "strichartz.png",
                             title=f"mode = {args.mode}")
    ratios = np.array([r["ratio"] for r in rows])
    if _at_endpoint(case.q, case.s1, case.s2):
        print("endpoint exponents: run recorded, not judged")
        return 0
    if args.mode == "scale":
        ok = _verdict("dilation invariance of the ratio",
                      bool(ratios.max() / ratios.min() <= 1.25),
                      f"max/min {ratios.max() / ratios.min():.3f}")
    else:
        ok = _verdict("monotone ratio growth for the violating exponents",
                      bool(np.all(np.diff(ratios) > 0)),
                      f"ratios {np.round(ratios, 4).tolist()}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# hh-scan


def cmd_hh_scan(args) -> int:
    run = reporting.run_directory(args.outdir, "hh-scan", args.label)
    reporting.write_manifest(
        run, "hh-scan",
        {"lambdas": args.lambdas, "s1": args.s1, "s2": args.s2, "s3": args.s3,
         "window_per_lambda": args.window_per_lambda, "dxi": args.dxi}, args.seed,
    )
    def one_lambda(lam):
        same = hh_coherent_pair_ratio(lam, +1, args.s1, args.s2, args.s3,
                                      dxi=args.dxi, window_per_lam=args.window_per_lambda)
        opp = hh_coherent_pair_ratio(lam, -1, args.s1, args.s2, args.s3,
                                     dxi=args.dxi, window_per_lam=args.window_per_lambda)
        return {"lam": lam, "ratio_same": same, "ratio_opposite": opp}

    rows = run_jobs(one_lambda, _floats(args.lambdas))
    reporting.write_csv(run / "hh_scan.csv", ["lam", "ratio_same", "ratio_opposite"], rows)
    reporting.fig_ratio_scan(rows, "lam", ["ratio_same", "ratio_opposite"],
                             run / "hh_scan.png", title="high-high-to-low sign dichotomy")
    same = np.array([r["ratio_same"] for r in rows])
    opp = np.array([r["ratio_opposite"] for r in rows])
    ok1 = _verdict("equal-sign ratio bounded", bool(same.max() / same.min() <= 2.0),
                   f"max/min {same.max() / same.min():.3f}")
    ok2 = _verdict("opposite-sign ratio grows at least twofold",
                   bool(opp[-1] / opp[0] >= 2.0), f"growth {opp[-1] / opp[0]:.3f}")
    return 0 if (ok1 and ok2) else 1


# ---------------------------------------------------------------------------
# solve / picard / zheng / region


def _smooth_cauchy_data(grid: GridSpec2, amp: float):
    x1, x2 = grid.x_mesh()
    bump = np.exp(-4.0 * (x1**2 + x2**2))
    psi = SpinorField2(grid, amp * np.stack([bump, 0.5 * bump * np.exp(1j * x1)]))
    phi0 = SpectralField2(grid, amp * bump * (1 + 0.2 * np.cos(x2)))
    phi1 = SpectralField2(grid, amp * 0.1 * bump)
    return psi, phi0, phi1


def _rough_cauchy_data(grid: GridSpec2, amp: float, s: float, r: float, seed: int):
    psi = rough_data(s + 0.75, seed, grid, kind="spinor")
    psi = psi.with_values(amp * psi.values)
    phi0 = rough_data(r + 0.75, seed + 1, grid, kind="real")
    phi0 = phi0.with_values(amp * phi0.values)
    phi1 = rough_data(r - 0.25, seed + 2, grid, kind="real")
    phi1 = phi1.with_values(0.1 * amp * phi1.values)
    return psi, phi0, phi1


def cmd_solve(args) -> int:
    run = reporting.run_directory(args.outdir, "solve", args.label)
    params = {k: getattr(args, k) for k in
              ("n", "box", "dt", "T", "amp", "data", "s", "r", "drift_tol")}
    reporting.write_manifest(run, "solve", params, args.seed,
                             {"n": args.n, "box": args.box})
    grid = GridSpec2(args.n, args.box)
    if args.data == "smooth":
        psi, phi0, phi1 = _smooth_cauchy_data(grid, args.amp)
    else:
        psi, phi0, phi1 = _rough_cauchy_data(grid, args.amp, args.s, args.r, args.seed)
    cfg = SolverConfig(grid, dt=args.dt, T=args.T, seed=args.seed)
    traj = solve(psi, phi0, phi1, cfg)
    rows = trajectory_rows(traj, s=args.s, r=args.r)
    reporting.write_csv(run / "trajectory.csv",
                        ["time", "charge", "psi_hs", "phi_hr", "phi_t_hrm1"], rows)
    reporting.fig_trajectory(rows, run / "trajectory.png")
    write_snapshot(traj[-1], run / "final_state.dkgs")
    charges = np.array([row["charge"] for row in rows])
    drift = float(np.ptp(charges) / charges[0]) if charges[0] > 0 else 0.0
    resid = max(projection_residual(st) for st in traj)
    reality = max(phi_reality_defect(st) for st in traj)
    ok = _verdict("charge conservation", drift <= args.drift_tol,
                  f"relative drift {drift:.3g}")
    ok &= _verdict("projection consistency", resid <= 1e-10, f"residual {resid:.3g}")
    ok &= _verdict("meson reality", reality <= 1e-10, f"defect {reality:.3g}")
    return 0 if ok else 1


def cmd_picard(args) -> int:
    run = reporting.run_directory(args.outdir, "picard", args.label)
    params = {k: getattr(args, k) for k in ("n", "box", "dt", "T", "depth", "s", "r", "amp")}
    reporting.write_manifest(run, "picard", params, args.seed, {"n": args.n, "box": args.box})
    grid = GridSpec2(args.n, args.box)

    def run_point(s: float, r: float, tag: str):
        psi, phi0, phi1 = _rough_cauchy_data(grid, args.amp, s, r, args.seed)
        cfg = SolverConfig(grid, dt=args.dt, T=args.T, seed=args.seed)
        _, iterates = picard_iterates(to_physical(psi), to_physical(phi0),
                                      to_physical(phi1), cfg, depth=args.depth)
        d = [iterate_distance(iterates[j + 1], iterates[j], grid, s=s)
             for j in range(len(iterates) - 1)]
        rows = []
        for j, dj in enumerate(d):
            ratio = d[j] / d[j - 1] if j > 0 and d[j - 1] > 0 else float("nan")
            rows.append({"point": tag, "s": s, "r": r, "j": j, "d_psi": dj, "ratio": ratio})
        return rows, d

    rows, d = run_point(args.s, args.r, "inside")
    all_rows = list(rows)
    ratios = [d[j + 1] / d[j] for j in range(len(d) - 1) if d[j] > 0]
    ok = _verdict(
        f"iterate contraction at (s, r) = ({args.s:g}, {args.r:g})",
        len(ratios) >= min(4, args.depth - 1) and all(x < 1 for x in ratios),
        f"ratios {[round(x, 4) for x in ratios]}",
    )
    if args.outside:
        out_rows, d_out = run_point(-0.3, 0.5, "outside")
        all_rows += out_rows
        out_ratios = [d_out[j + 1] / d_out[j] for j in range(len(d_out) - 1) if d_out[j] > 0]
        print(f"report only, outside point (-0.3, 0.5): ratios "
              f"{[round(x, 4) for x in out_ratios]}")
    reporting.write_csv(run / "picard.csv", ["point", "s", "r", "j", "d_psi", "ratio"],
                        all_rows)
    reporting.fig_picard(rows, run / "picard.png")
    return 0 if ok else 1


def cmd_zheng(args) -> int:
    run = reporting.run_directory(args.outdir, "zheng", args.label)
    params = {"sigmas": args.sigmas, "base_n": args.base_n,
              "refinements": args.refinements, "box": args.box}
    reporting.write_manifest(run, "zheng", params, args.seed)
    sizes = [args.base_n * 2**k for k in range(args.refinements + 1)]
    rows = []
    ok = True
    for sigma in _floats(args.sigmas):
        norms = []
        for n in sizes:
            grid = GridSpec2(n, args.box)
            psi0 = rough_data(0.0, args.seed, grid, kind="spinor")
            norms.append(first_iterate_regularity(psi0, sigma, t=1.0, n_time=4 * n))
        total = norms[-1] / norms[0] - 1.0
        if total <= 0.10:
            verdict = "stable"
        elif total >= 0.25:
            verdict = "growing"
        else:
            verdict = "indeterminate"
        for n, norm in zip(sizes, norms):
            rows.append({"sigma": sigma, "n": n, "norm": norm,
                         "total_change": total, "verdict": verdict})
        expected_stable = sigma < 0.75
        direction_ok = (verdict == "stable") if expected_stable else (verdict != "stable")
        ok &= _verdict(
            f"first-iterate refinement behavior at sigma = {sigma:g}",
            direction_ok, f"total change {total:+.2%} -> {verdict}",
        )
    reporting.write_csv(run / "zheng.csv",
                        ["sigma", "n", "norm", "total_change", "verdict"], rows)
    reporting.fig_zheng(rows, run / "zheng.png")
    return 0 if ok else 1


def cmd_region(args) -> int:
    run = reporting.run_directory(args.outdir, "region", args.label)
    reporting.write_manifest(run, "region", {"s": args.s, "r": args.r})
    verdict = region_check(args.s, args.r)
    rows = [{"s": args.s, "r": args.r, "classification": verdict.classification,
             "violated": ";".join(verdict.violated)}]
    reporting.write_csv(run / "region.csv", ["s", "r", "classification", "violated"], rows)
    reporting.fig_region(args.s, args.r, verdict.classification, run / "region.png")
    print(f"({args.s:g}, {args.r:g}) is {verdict.classification}"
          + (f"; constraints at or past their limit: {', '.join(verdict.violated)}"
             if verdict.violated else ""))
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(sub):
    sub.add_argument("--outdir", default="runs")
    sub.add_argument("--label", default=None,
                     help="run folder name (defaults to a UTC timestamp)")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--config", default=None,
                     help="key=value file applied as option defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dkglab",
        description="Numerical laboratory for the 2d split Dirac-Klein-Gordon system",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-algebra", help="matrix algebra and weight inequality battery")
    _add_common(p)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--rep", choices=["pauli", "beta-identity"], default="pauli")
    p.set_defaults(func=cmd_verify_algebra)

    p = sub.add_parser("sharpness", help="fit the concentration-scaling of an estimate ratio")
    _add_common(p)
    p.add_argument("--family", choices=["R1", "R2", "R3", "S"], required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--L", default="8,16,32,64")
    p.add_argument("--delta0", type=float, default=1.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("strichartz", help="bilinear dispersion ratio scans")
    _add_common(p)
    p.add_argument("--mode", choices=["scale", "violate", "square"], default="scale")
    p.add_argument("--q", default="4")
    p.add_argument("--s1", type=float, default=0.375)
    p.add_argument("--s2", type=float, default=0.375)
    p.add_argument("--s3", type=float, default=0.0)
    p.add_argument("--signs", choices=["++", "+-", "-+", "--"], default="++")
    p.add_argument("--scales", default="2,4,8")
    p.add_argument("--lam", type=float, default=32.0)
    p.add_argument("--mus", default="2,4,8,16,32")
    p.add_argument("--n-time", type=int, default=24)
    p.set_defaults(func=cmd_strichartz)

    p = sub.add_parser("hh-scan", help="high-high-to-low sign dichotomy scan")
    _add_common(p)
    p.add_argument("--lambdas", default="4,8,16,32,64")
    p.add_argument("--s1", type=float, default=0.125)
    p.add_argument("--s2", type=float, default=0.125)
    p.add_argument("--s3", type=float, default=0.25)
    p.add_argument("--window-per-lambda", type=float, default=0.25)
    p.add_argument("--dxi", type=float, default=0.125)
    p.set_defaults(func=cmd_hh_scan)

    p = sub.add_parser("solve", help="integrate the coupled system and check invariants")
    _add_common(p)
    p.add_argument("--n", type=int, default=48)
    p.add_argument("--box", type=float, default=12.0)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--amp", type=float, default=0.05)
    p.add_argument("--data", choices=["smooth", "rough"], default="smooth")
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--drift-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("picard", help="iterate-contraction diagnostic")
    _add_common(p)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--box", type=float, default=8.0)
    p.add_argument("--dt", type=float, default=0.025)
    p.add_argument("--T", type=float, default=0.25)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--amp", type=float, default=0.05)
    p.add_argument("--outside", action="store_true",
                   help="also report the diagnostic at (-0.3, 0.5)")
    p.set_defaults(func=cmd_picard)

    p = sub.add_parser("zheng", help="first-iterate refinement-stability table")
    _add_common(p)
    p.add_argument("--sigmas", default="0.5,0.7,0.9")
    p.add_argument("--base-n", type=int, default=48)
    p.add_argument("--refinements", type=int, default=2)
    p.add_argument("--box", type=float, default=2 * np.pi)
    p.set_defaults(func=cmd_zheng)

    p = sub.add_parser("region", help="locate (s, r) relative to the admissible region")
    _add_common(p)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.set_defaults(func=cmd_region)

    return parser


def _apply_config(argv: list[str]) -> list[str]:
    """
    Splice key=value file entries in as options directly after the subcommand,
    so explicit command-line options take precedence.  Unknown keys surface as
    normal argparse errors (exit code 2).
    """
    if "--config" not in argv:
        return argv
    path = Path(argv[argv.index("--config") + 1])
    extra: list[str] = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        extra += [f"--{key.strip().replace('_', '-')}", value.strip()]
    return argv[:1] + extra + argv[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalBlowupError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
