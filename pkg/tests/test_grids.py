"""
Tests for lattices, transforms, multipliers and the space-time weights.
"""

import numpy as np
import pytest

from dkglab.grids import (
    BasisMismatchError,
    GridSpec2,
    GridSpec3,
    NonFiniteSymbolError,
    SpectralField2,
    SpectralField3,
    SpinorField2,
    apply_multiplier,
    bracket,
    homogeneous_power,
    pop_zero_mode_notes,
    to_frequency,
    to_physical,
    transform,
    weights_at,
)


def _rand_field2(grid, rng, basis="physical"):
    vals = rng.standard_normal((grid.n, grid.n)) + 1j * rng.standard_normal((grid.n, grid.n))
    return SpectralField2(grid, vals, basis)


def _rand_field3(grid, rng):
    shape = (grid.n_t, grid.n_x, grid.n_x)
    return SpectralField3(grid, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class TestGridSpecs:
    def test_rejects_odd_or_tiny_counts(self):
        with pytest.raises(ValueError):
            GridSpec2(7, 1.0)
        with pytest.raises(ValueError):
            GridSpec2(2, 1.0)
        with pytest.raises(ValueError):
            GridSpec3(8, 6, -1.0, 2.0)

    def test_frequency_lattice_symmetric(self):
        g = GridSpec2(8, 2.0)
        ax = np.sort(g.xi_axis())
        assert ax[0] == -np.pi * g.n / g.box
        # all nonzero frequencies have a partner of opposite sign except Nyquist
        assert np.allclose(ax[1:], -ax[1:][::-1])

    def test_spacing_relation(self):
        g = GridSpec2(16, 5.0)
        assert g.dxi == pytest.approx(2 * np.pi / 5.0)
        assert g.dx * g.n == pytest.approx(g.box)


class TestTransform:
    def test_constant_field_is_dc_mode(self):
        g = GridSpec3(8, 8, 2.0, 3.0)
        f = SpectralField3(g, np.ones((8, 8, 8)))
        fh = transform(f, "forward")
        assert fh.values[0, 0, 0] == pytest.approx(g.box_t * g.box_x**2)
        off = fh.values.copy()
        off[0, 0, 0] = 0
        assert np.max(np.abs(off)) < 1e-12

    def test_plane_wave_single_coefficient(self):
        g = GridSpec3(8, 8, 2.0, 4.0)
        tau0 = g.tau_axis()[3]
        xi0 = (g.spatial.xi_axis()[2], g.spatial.xi_axis()[-1])
        t = g.t_axis()[:, None, None]
        x1, x2 = g.spatial.x_mesh()
        vals = np.exp(1j * (t * tau0 + x1[None] * xi0[0] + x2[None] * xi0[1]))
        fh = transform(SpectralField3(g, vals), "forward")
        assert fh.values[3, 2, -1] == pytest.approx(g.box_t * g.box_x**2)
        rest = fh.values.copy()
        rest[3, 2, -1] = 0
        assert np.max(np.abs(rest)) < 1e-9 * abs(fh.values[3, 2, -1])

    def test_round_trip_random(self):
        rng = np.random.default_rng(7)
        g = GridSpec3(8, 12, 1.5, 2.5)
        for _ in range(1000):
            f = _rand_field3(g, rng)
            back = transform(transform(f, "forward"), "inverse")
            err = np.linalg.norm(back.values - f.values) / np.linalg.norm(f.values)
            assert err < 1e-10

    def test_basis_contract(self):
        g = GridSpec2(8, 1.0)
        f = SpectralField2(g, np.zeros((8, 8)), "frequency")
        with pytest.raises(BasisMismatchError):
            transform(f, "forward")
        with pytest.raises(BasisMismatchError):
            transform(to_physical(f), "inverse")

    def test_plancherel_convention(self):
        rng = np.random.default_rng(3)
        g = GridSpec2(16, 3.0)
        f = _rand_field2(g, rng)
        phys = np.sqrt(np.sum(np.abs(f.values) ** 2) * g.dx**2)
        fh = to_frequency(f)
        freq = np.sqrt(np.sum(np.abs(fh.values) ** 2) * g.dxi**2)
        assert phys == pytest.approx(freq / (2 * np.pi), rel=1e-12)

    def test_spinor_transform_componentwise(self):
        rng = np.random.default_rng(5)
        g = GridSpec2(8, 2.0)
        vals = rng.standard_normal((2, 8, 8)) + 0j
        sp = SpinorField2(g, vals)
        sph = to_frequency(sp)
        for i in range(2):
            single = to_frequency(sp.component(i))
            np.testing.assert_allclose(sph.values[i], single.values, atol=1e-13)


class TestMultipliers:
    def test_identity_symbol(self):
        rng = np.random.default_rng(0)
        g = GridSpec2(8, 2.0)
        f = _rand_field2(g, rng)
        out = apply_multiplier(f, lambda x1, x2: np.ones_like(x1))
        np.testing.assert_allclose(out.values, f.values, atol=1e-12)

    def test_abs_power_on_plane_wave(self):
        g = GridSpec2(16, 2 * np.pi)
        k = (g.xi_axis()[3], g.xi_axis()[2])
        x1, x2 = g.x_mesh()
        f = SpectralField2(g, np.exp(1j * (k[0] * x1 + k[1] * x2)))
        s = 0.7
        out = apply_multiplier(f, homogeneous_power(s))
        expected = np.hypot(*k) ** s * f.values
        np.testing.assert_allclose(out.values, expected, rtol=1e-10)

    def test_bracket_inverse_pair(self):
        rng = np.random.default_rng(1)
        g = GridSpec2(12, 3.0)
        f = _rand_field2(g, rng)
        up = apply_multiplier(f, lambda x1, x2: bracket(np.hypot(x1, x2)))
        down = apply_multiplier(up, lambda x1, x2: bracket(np.hypot(x1, x2)) ** -1.0)
        err = np.linalg.norm(down.values - f.values) / np.linalg.norm(f.values)
        assert err < 1e-12

    def test_composition_matches_product(self):
        rng = np.random.default_rng(2)
        g = GridSpec3(8, 8, 2.0, 2.0)
        u = _rand_field3(g, rng)
        s1 = lambda tau, x1, x2: bracket(tau) ** 0.5
        s2 = lambda tau, x1, x2: bracket(np.hypot(x1, x2)) ** -1.2
        a = apply_multiplier(apply_multiplier(u, s1), s2)
        b = apply_multiplier(u, lambda tau, x1, x2: s1(tau, x1, x2) * s2(tau, x1, x2))
        err = np.linalg.norm(a.values - b.values) / np.linalg.norm(u.values)
        assert err < 1e-12

    def test_nonfinite_symbol_names_point(self):
        g = GridSpec2(8, 2 * np.pi)
        f = SpectralField2(g, np.ones((8, 8)))
        with np.errstate(divide="ignore"), pytest.raises(NonFiniteSymbolError, match="xi1"):
            apply_multiplier(f, lambda x1, x2: 1.0 / np.hypot(x1, x2))

    def test_zero_mode_note_recorded(self):
        pop_zero_mode_notes()
        g = GridSpec2(8, 2.0)
        f = SpectralField2(g, np.ones((8, 8)))
        apply_multiplier(f, homogeneous_power(-0.5))
        notes = pop_zero_mode_notes()
        assert len(notes) == 1 and "zero-mode" in notes[0]


class TestWeightPoints:
    def test_collinear_example(self):
        w = weights_at(0.0, np.array([1.0, 0.0]), 0.0, np.array([2.0, 0.0]))
        assert w.rho_plus == pytest.approx(2.0)
        assert w.rho_minus == pytest.approx(0.0)

    def test_orthogonal_example(self):
        w = weights_at(0.0, np.array([0.0, 1.0]), 0.0, np.array([1.0, 0.0]))
        assert w.rho_minus == pytest.approx(np.sqrt(2.0))

    def test_on_null_cone(self):
        eta = np.array([3.0, 4.0])
        w = weights_at(-5.0, eta, 0.3, np.array([1.0, 1.0]))
        assert w.B == pytest.approx(0.0)

    def test_invariants_random_batch(self):
        rng = np.random.default_rng(11)
        n = 200_000
        lam = rng.uniform(-50, 50, n)
        tau = rng.uniform(-50, 50, n)
        eta = rng.uniform(-20, 20, (n, 2))
        xi = rng.uniform(-20, 20, (n, 2))
        w = weights_at(lam, eta, tau, xi)
        mn = np.minimum(np.hypot(eta[:, 0], eta[:, 1]), np.hypot(*(eta - xi).T))
        slack = 1e-12
        assert np.all(w.rho_plus >= -slack)
        assert np.all(w.rho_minus >= -slack)
        assert np.all(w.rho_plus <= 2 * mn + slack)
        assert np.all(w.rho_minus <= 2 * mn + slack)
        bound_p = np.abs(w.A) + np.abs(w.B) + np.abs(w.C_plus)
        bound_m = np.abs(w.A) + np.abs(w.B) + np.abs(w.C_minus)
        assert np.all(w.rho_plus <= bound_p + slack)
        assert np.all(w.rho_minus <= bound_m + slack)
