"""
Tests for the bilinear estimate machinery, the sharpness families and the
region/weight verdicts.
"""

import numpy as np
import pytest

from dkglab.dirac import eigenvector
from dkglab.grids import GridSpec3, SpectralField3, SpinorField3
from dkglab.harness import (
    CounterexampleFamily,
    EstimateCase,
    build_counterexample,
    duality_pairing_gap,
    estimate_sides,
    failure_exponent,
    family_sides,
    fit_scaling,
    null_form,
    orientation_signs,
    projected_product,
    region_check,
    time_cutoff,
    verify_weight_relations,
)
from dkglab.norms import NormSpec, XSB_MINUS, XSB_PLUS, spacetime_norm


def _rand_spinor3(grid, rng, band=None):
    shape = (2, grid.n_t, grid.n_x, grid.n_x)
    vals = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if band is not None:
        k = np.abs(np.fft.fftfreq(grid.n_x, d=1.0 / grid.n_x))
        keep = (k[:, None] <= band) & (k[None, :] <= band)
        vals = vals * keep[None, None]
    return SpinorField3(grid, vals, "frequency")


class TestNullForm:
    def test_single_mode_pair_oracle(self):
        g = GridSpec3(8, 8, 2.0, 4.0)
        it1, ik1 = 2, (1, 7)
        it2, ik2 = 5, (3, 1)
        ax = g.spatial.xi_axis()
        eta = np.array([ax[ik1[0]], ax[ik1[1]]])
        zeta = np.array([ax[ik2[0]], ax[ik2[1]]])
        a = np.zeros((2, 8, 8, 8), dtype=complex)
        a[:, it1, ik1[0], ik1[1]] = eigenvector(+1, eta)
        b = np.zeros_like(a)
        b[:, it2, ik2[0], ik2[1]] = eigenvector(+1, zeta)
        out = null_form(SpinorField3(g, a, "frequency"), SpinorField3(g, b, "frequency"))
        ve, vz = eigenvector(+1, eta), eigenvector(+1, zeta)
        pairing = np.conj(vz[0]) * ve[0] - np.conj(vz[1]) * ve[1]
        expected = pairing / (g.box_t * g.box_x**2)
        loc = ((it1 - it2) % 8, (ik1[0] - ik2[0]) % 8, (ik1[1] - ik2[1]) % 8)
        assert out.values[loc] == pytest.approx(expected, rel=1e-10)
        rest = out.values.copy()
        rest[loc] = 0.0
        assert np.abs(rest).max() < 1e-12 * abs(expected)

    def test_same_mode_same_sign_vanishes(self):
        g = GridSpec3(8, 8, 2.0, 4.0)
        ax = g.spatial.xi_axis()
        eta = np.array([ax[2], ax[3]])
        a = np.zeros((2, 8, 8, 8), dtype=complex)
        a[:, 1, 2, 3] = eigenvector(+1, eta)
        psi = SpinorField3(g, a, "frequency")
        out = null_form(psi, psi, (1, 1))
        assert np.abs(out.values).max() < 1e-14

    def test_bilinear_in_each_slot(self):
        rng = np.random.default_rng(0)
        g = GridSpec3(8, 8, 2.0, 2.0)
        p1, p2, q = (_rand_spinor3(g, rng, band=2) for _ in range(3))
        a, b = 0.7, -1.1j
        combo = p1.with_values(a * p1.values + b * p2.values)
        lhs = null_form(combo, q).values
        rhs = a * null_form(p1, q).values + np.conj(b) * 0  # placeholder, see below
        # first slot is linear, second conjugate-linear
        rhs = a * null_form(p1, q).values + b * null_form(p2, q).values
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
        combo2 = q.with_values(a * q.values)
        np.testing.assert_allclose(
            null_form(p1, combo2).values, np.conj(a) * null_form(p1, q).values, atol=1e-12
        )


class TestEstimateSides:
    def test_zero_input_rejected(self):
        g = GridSpec3(8, 8, 2.0, 2.0)
        z = SpinorField3(g, np.zeros((2, 8, 8, 8)), "frequency")
        with pytest.raises(ValueError):
            estimate_sides(EstimateCase("B", s=0.0, r=0.75), z, z)

    def test_amplitude_invariance_of_ratio(self):
        rng = np.random.default_rng(1)
        g = GridSpec3(8, 8, 2.0, 2.0)
        p, q = _rand_spinor3(g, rng, band=2), _rand_spinor3(g, rng, band=2)
        case = EstimateCase("B", s=0.2, r=0.6, epsilon=0.05)
        l1, r1 = estimate_sides(case, p, q)
        l2, r2 = estimate_sides(case, p.with_values(3.0 * p.values),
                                q.with_values(-0.5j * q.values))
        assert l1 / r1 == pytest.approx(l2 / r2, rel=1e-10)

    def test_dual_form_case_runs(self):
        rng = np.random.default_rng(2)
        g = GridSpec3(8, 8, 2.0, 2.0)
        p, q = _rand_spinor3(g, rng, band=2), _rand_spinor3(g, rng, band=2)
        lhs, rhs = estimate_sides(EstimateCase("A", s=0.3, r=0.5, epsilon=0.05), p, q)
        assert lhs > 0 and rhs > 0

    def test_transpose_identity(self):
        rng = np.random.default_rng(3)
        g = GridSpec3(8, 8, 2.0, 2.0)
        p, q = _rand_spinor3(g, rng, band=2), _rand_spinor3(g, rng, band=2)
        phf = rng.standard_normal((8, 8, 8))
        phi = SpectralField3(g, phf, "physical")
        for signs in ((1, 1), (1, -1), (-1, 1)):
            assert duality_pairing_gap(phi, p, q, signs) < 1e-10

    def test_duality_bound(self):
        # |<P2(phi beta P1 psi), psi'>| <= ||P2(...)||_{X^{s,b}} ||psi'||_{X^{-s,-b}}
        rng = np.random.default_rng(4)
        g = GridSpec3(8, 8, 2.0, 2.0)
        p, q = _rand_spinor3(g, rng, band=2), _rand_spinor3(g, rng, band=2)
        phi = SpectralField3(g, rng.standard_normal((8, 8, 8)), "physical")
        prod = projected_product(phi, p, (1, 1))
        s, b = 0.3, -0.45
        lhs_norm = spacetime_norm(prod, NormSpec(XSB_PLUS, s=s, b=b))
        dual_norm = spacetime_norm(q, NormSpec(XSB_PLUS, s=-s, b=-b))
        from dkglab.grids import to_physical

        cell = g.dt * g.dx**2
        inner = abs(np.sum(np.conj(to_physical(q).values) * to_physical(prod).values) * cell)
        assert inner <= lhs_norm * dual_norm * (1 + 1e-10)


class TestTimeCutoff:
    def test_profile_on_constant(self):
        g = GridSpec3(16, 8, 8.0, 2.0)
        u = SpectralField3(g, np.ones((16, 8, 8)), "physical")
        out = time_cutoff(u, "smooth")
        from dkglab.util import smooth_time_cutoff

        expected = smooth_time_cutoff(g.t_axis())
        np.testing.assert_allclose(out.values[:, 0, 0], expected, atol=1e-14)

    def test_idempotent_on_core_support(self):
        rng = np.random.default_rng(5)
        g = GridSpec3(16, 8, 8.0, 2.0)
        vals = rng.standard_normal((2, 16, 8, 8)) + 0j
        vals[:, np.abs(g.t_axis()) > 1.0] = 0.0
        u = SpinorField3(g, vals, "physical")
        once = time_cutoff(u, "smooth")
        twice = time_cutoff(once, "smooth")
        np.testing.assert_allclose(once.values, u.values, atol=1e-14)
        np.testing.assert_allclose(twice.values, once.values, atol=1e-14)

    def test_bounded_on_x_norms(self):
        rng = np.random.default_rng(6)
        g = GridSpec3(32, 12, 8.0, 4.0)
        vals = rng.standard_normal((2, 32, 12, 12)) + 1j * rng.standard_normal((2, 32, 12, 12))
        u = SpinorField3(g, vals, "frequency")
        spec = NormSpec(XSB_PLUS, s=0.3, b=0.55)
        measured = spacetime_norm(time_cutoff(u, "smooth"), spec) / spacetime_norm(u, spec)
        assert 0.0 < measured <= 4.0


class TestRegionCheck:
    def test_examples(self):
        assert region_check(0.0, 0.5).classification == "inside"
        assert region_check(0.5, 1.0).classification == "inside"
        out = region_check(-0.2, 0.3)
        assert out.classification in ("outside", "boundary")
        assert any("s > -1/5" in v for v in out.violated)
        far = region_check(1.0, 2.0 + 1e-3)
        assert far.classification == "outside"
        assert any("r < 1 + s" in v for v in far.violated)

    def test_boundary_detection(self):
        v = region_check(0.0, 0.75)
        assert v.classification == "boundary"
        assert "r < 3/4 + 2s" in v.violated and "r < 3/4 + 3s/2" in v.violated


class TestWeightRelations:
    def test_collinear_degeneracies(self):
        from dkglab.grids import weights_at

        eta = np.array([2.0, 0.0])
        xi = np.array([3.0, 0.0])  # eta - xi = (-1, 0): anti-parallel to eta
        w = weights_at(0.0, eta, 0.0, xi)
        assert w.rho_minus == pytest.approx(0.0)  # theta_minus = 0 here
        xi2 = np.array([1.0, 0.0])  # eta - xi = (1, 0): parallel
        w2 = weights_at(0.0, eta, 0.0, xi2)
        assert w2.rho_plus == pytest.approx(0.0)  # theta_plus = 0 here

    def test_random_battery(self):
        rep = verify_weight_relations(samples=200_000, seed=1)
        assert rep.passed
        assert rep.violations_triangle == 0 and rep.violations_sum_bound == 0
        assert 0.125 <= rep.theta_plus_ratio[0] <= rep.theta_plus_ratio[1] <= 8.0
        assert 0.125 <= rep.theta_minus_ratio[0] <= rep.theta_minus_ratio[1] <= 8.0


class TestFamilies:
    def test_family_validation(self):
        with pytest.raises(ValueError):
            CounterexampleFamily("R9", 16)
        with pytest.raises(ValueError):
            CounterexampleFamily("R1", 12)
        with pytest.raises(ValueError):
            CounterexampleFamily("R1", 16, delta0=0.0)

    def test_r1_support_volume(self):
        L = 16.0
        data = build_counterexample(CounterexampleFamily("R1", L))
        measured = len(data.eta) * data.dxi[0] * data.dxi[1]
        exact = L**1.5 / 4.0
        layer = (1 + data.dxi[0] / (L / 4)) * (1 + data.dxi[1] / (np.sqrt(L) / 4))
        assert exact <= measured <= exact * layer * (1 + 1e-9)
        measured_c = len(data.xi) * data.dxi[0] * data.dxi[1]
        assert measured_c == pytest.approx(measured)

    def test_r3_unit_areas(self):
        data = build_counterexample(CounterexampleFamily("R3", 32.0))
        for pts, half in ((data.eta, 0.5), (data.xi, 0.5), (data.zeta, 1.0)):
            area = len(pts) * data.dxi[0] * data.dxi[1]
            exact = (2 * half) ** 2
            assert exact <= area <= exact * (1 + data.dxi[0] / half) ** 2

    @pytest.mark.parametrize("family", ["R1", "R2", "R3", "S"])
    def test_abc_property_exact(self, family):
        data = build_counterexample(CounterexampleFamily(family, 16.0))
        diffs = data.eta[:, None, :] - data.xi[None, :, :]
        assert data.in_b(diffs).all()

    @pytest.mark.parametrize("family", ["R1", "R3", "S"])
    def test_orientation_constant(self, family):
        data = build_counterexample(CounterexampleFamily(family, 16.0))
        signs = orientation_signs(data)
        assert signs.size > 0
        assert np.all(signs == signs[0])

    def test_r2_orientation_mixed(self):
        # the R2 input box straddles the origin, so the pair orientation is
        # genuinely not constant there; the real part of the pairing is
        # nonnegative and carries the lower bound instead
        data = build_counterexample(CounterexampleFamily("R2", 16.0))
        signs = orientation_signs(data)
        assert (signs > 0).any() and (signs < 0).any()
        for i in range(0, len(data.xi), 37):
            z = data.eta - data.xi[i]
            member = data.in_b(z)
            re = data.pairing(data.eta[member], z[member]).real
            assert np.all(re >= -1e-13)


class TestScaling:
    def test_r3_boundary_slope_zero(self):
        rep = fit_scaling("R3", 0.5, 1.5, L_list=(8.0, 16.0, 32.0))
        assert rep.predicted_slope == pytest.approx(0.0)
        assert abs(rep.fitted_slope) <= 0.15
        assert rep.passed

    def test_r1_failure_direction(self):
        rep = fit_scaling("R1", 0.0, 1.0, L_list=(8.0, 16.0, 32.0))
        assert rep.predicted_slope == pytest.approx(0.25)
        assert rep.fitted_slope > 0.1
        ratios = [row["ratio"] for row in rep.rows]
        assert ratios == sorted(ratios)

    def test_slope_monotone_in_r_and_crossing(self):
        slopes = []
        for r in (0.45, 0.75, 1.05):
            slopes.append(fit_scaling("R1", 0.0, r, L_list=(8.0, 16.0, 32.0)).fitted_slope)
        assert slopes[0] < slopes[1] < slopes[2]
        assert abs(slopes[1]) <= 0.15

    def test_exponent_table(self):
        assert failure_exponent("R1", 0.0, 0.75) == pytest.approx(0.0)
        assert failure_exponent("R2", 0.25, 1.125) == pytest.approx(0.0)
        assert failure_exponent("R3", 1.0, 2.0) == pytest.approx(0.0)
        assert failure_exponent("S", -0.25, 0.5) == pytest.approx(0.0)
        with pytest.raises(ValueError):
            failure_exponent("X", 0, 0)

    def test_scaling_report_rows_restricted_to_output_region(self):
        data = build_counterexample(CounterexampleFamily("S", 8.0))
        lhs, rhs = family_sides(data, 0.0, 0.5)
        assert lhs > 0 and rhs > 0
