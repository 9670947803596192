import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strucdamp.kernels import (Branch, LinearState, characteristic_roots,
                               discriminant_zero_radius, evolve_linear,
                               kernel_arrays, kernel_values, radial_norm)
from strucdamp.spectral import Grid, RealField, forward, inverse

from conftest import rk4_kernel_adaptive, rk4_kernel_grid


class TestRoots:
    def test_zero_frequency(self):
        assert characteristic_roots(0.0, 0.3) == (0.0, 0.0)

    def test_half_damping_unit_frequency(self):
        lam1, lam2 = characteristic_roots(1.0, 0.5)
        assert lam1 == pytest.approx(complex(-0.5, math.sqrt(3) / 2), abs=1e-14)
        assert lam2 == pytest.approx(complex(-0.5, -math.sqrt(3) / 2), abs=1e-14)

    def test_frictional_small_frequency_real_roots(self):
        lam1, lam2 = characteristic_roots(0.3, 0.0)
        assert lam1.imag == 0 and lam2.imag == 0
        assert lam1.real < 0 and lam2.real < 0
        assert (lam1 * lam2).real == pytest.approx(0.09, abs=1e-14)

    @given(st.floats(1e-8, 50.0), st.floats(0.0, 0.5))
    @settings(max_examples=300, deadline=None)
    def test_vieta_identities(self, xi, delta):
        lam1, lam2 = characteristic_roots(xi, delta)
        s = xi ** (2 * delta)
        assert abs(lam1 + lam2 + s) <= 1e-11 * max(s, 1e-30)
        assert abs(lam1 * lam2 - xi ** 2) <= 1e-11 * xi ** 2
        assert lam1.real <= 1e-15 and lam2.real <= 1e-15

    def test_vieta_bulk(self, rng):
        xi = rng.uniform(1e-6, 100.0, 10 ** 6)
        delta = rng.uniform(0.0, 0.5, 10 ** 6)
        s = xi ** (2 * delta)
        d = s * s - 4 * xi * xi
        root = np.sqrt(np.abs(d))
        lam1 = np.where(d >= 0, 0.5 * (-s + root), -0.5 * s) + 1j * np.where(d >= 0, 0.0, 0.5 * root)
        lam2 = np.where(d >= 0, 0.5 * (-s - root), -0.5 * s) - 1j * np.where(d >= 0, 0.0, 0.5 * root)
        assert np.max(np.abs(lam1 + lam2 + s) / np.maximum(s, 1e-30)) <= 1e-11
        assert np.max(np.abs(lam1 * lam2 - xi ** 2) / xi ** 2) <= 1e-11


class TestKernelValues:
    def test_initial_conditions(self):
        for xi, delta in ((0.0, 0.2), (0.7, 0.0), (3.0, 0.5), (0.25, 0.25)):
            kv = kernel_values(0.0, xi, delta)
            assert (kv.k0, kv.k1, kv.dk0, kv.dk1) == (1.0, 0.0, 0.0, 1.0)

    def test_zero_frequency_free_drift(self):
        kv = kernel_values(2.5, 0.0, 0.4)
        assert kv.branch is Branch.ZERO_FREQUENCY
        assert (kv.k0, kv.k1, kv.dk0, kv.dk1) == (1.0, 2.5, 0.0, 1.0)

    def test_oscillatory_closed_form(self):
        kv = kernel_values(1.0, 1.0, 0.5)
        want = math.exp(-0.5) * math.sin(math.sqrt(3) / 2) / (math.sqrt(3) / 2)
        assert kv.k1 == pytest.approx(want, rel=1e-13)
        assert kv.branch is Branch.COMPLEX_PAIR
        # independent adaptive integration of the same oscillator
        w, _ = rk4_kernel_adaptive(1.0, 1.0, 0.5, 0.0, 1.0)
        assert kv.k1 == pytest.approx(w, rel=1e-9)

    def test_branch_tagging(self):
        rho_star = discriminant_zero_radius(0.25)
        assert rho_star == pytest.approx(0.25)
        assert kernel_values(1.0, rho_star, 0.25).branch is Branch.DEGENERATE
        assert kernel_values(1.0, 0.2, 0.25).branch is Branch.REAL_DISTINCT
        assert kernel_values(1.0, 0.3, 0.25).branch is Branch.COMPLEX_PAIR
        assert discriminant_zero_radius(0.5) is None

    def test_oracle_lattice(self):
        xi_values = np.array([0.0, 0.01, 0.25, 1.0, 10.0])
        worst = 0.0
        for delta in (0.0, 0.1, 0.25, 0.4, 0.5):
            for t in (0.1, 1.0, 10.0):
                steps = max(2000, int(200 * t * (1.0 + xi_values.max())))
                ref_k0, ref_dk0 = rk4_kernel_grid(t, xi_values, delta, steps, 1.0, 0.0)
                ref_k1, ref_dk1 = rk4_kernel_grid(t, xi_values, delta, steps, 0.0, 1.0)
                k0, k1, dk0, dk1 = kernel_arrays(t, xi_values, delta)
                for num, ref in ((k0, ref_k0), (k1, ref_k1), (dk0, ref_dk0), (dk1, ref_dk1)):
                    worst = max(worst, np.max(np.abs(num - ref) / np.maximum(np.abs(ref), 1e-10)))
        assert worst <= 1e-6

    def test_degenerate_crossing_continuity(self):
        # sweep across the root collision: formula values stay on the smooth
        # oracle curve and show no branch-switch jump
        xi = np.linspace(0.2499, 0.2501, 200)
        for t in (0.1, 1.0, 10.0):
            k0, k1, dk0, dk1 = kernel_arrays(t, xi, 0.25)
            ref_k1 = rk4_kernel_grid(t, xi, 0.25, max(2000, int(1000 * t)), 0.0, 1.0)[0]
            assert np.max(np.abs(k1 - ref_k1)) <= 1e-8 * np.max(np.abs(ref_k1))
            second_diff = np.abs(k1[2:] - 2 * k1[1:-1] + k1[:-2])
            assert np.max(second_diff) <= 1e-8 * np.max(np.abs(k1))

    def test_collar_paths_agree(self):
        # both evaluation paths within the switching collar (|discriminant|
        # up to ~100x the activation threshold)
        rho_star = discriminant_zero_radius(0.25)
        xi = rho_star * (1.0 + np.linspace(-1e-6, 1e-6, 41))
        for t in (0.5, 2.0):
            exact = kernel_arrays(t, xi, 0.25, degenerate_override=False)
            limit = kernel_arrays(t, xi, 0.25, degenerate_override=True)
            for a, b in zip(exact, limit):
                assert np.max(np.abs(a - b)) <= 1e-7 * max(np.max(np.abs(a)), 1e-30)

    def test_degenerate_activation_threshold(self):
        rho_star = discriminant_zero_radius(0.25)
        inside = kernel_values(1.0, rho_star * (1 + 1e-10), 0.25)
        outside = kernel_values(1.0, rho_star * (1 + 1e-3), 0.25)
        assert inside.branch is Branch.DEGENERATE
        assert outside.branch is not Branch.DEGENERATE

    def test_stability_bounds(self, rng):
        # |k0| and |xi * k1| stay O(1) for t >= 0
        xi = rng.uniform(0.0, 30.0, 2000)
        for t in (0.5, 5.0, 50.0):
            k0, k1, _, _ = kernel_arrays(t, xi, 0.3)
            assert np.max(np.abs(k0)) <= 1.0 + 1e-9
            assert np.max(np.abs(xi * k1)) <= 2.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            kernel_values(-1.0, 1.0, 0.3)
        with pytest.raises(ValueError):
            kernel_values(1.0, 1.0, 0.7)
        with pytest.raises(ValueError):
            kernel_values(1.0, -2.0, 0.3)


class TestEvolveLinear:
    def _random_state(self, rng, delta):
        g = Grid(1, 64, 10.0)
        w = forward(RealField(g, rng.standard_normal(g.shape)))
        wt = forward(RealField(g, rng.standard_normal(g.shape)))
        return LinearState(w, wt, 0.0, delta)

    def test_identity_at_current_time(self, rng):
        st0 = self._random_state(rng, 0.3)
        st1 = evolve_linear(st0, 0.0)
        assert np.array_equal(st1.w.values, st0.w.values)

    def test_single_mode_matches_scalar_formula(self):
        g = Grid(1, 64, 10.0)
        x = g.axis_coords()
        st0 = LinearState(forward(RealField(g, np.cos(np.pi * x / g.half_width))),
                          forward(RealField(g, np.zeros(g.shape))), 0.0, 0.0)
        st1 = evolve_linear(st0, 2.0)
        kv = kernel_values(2.0, np.pi / g.half_width, 0.0)
        expected = kv.k0 * np.cos(np.pi * x / g.half_width)
        assert np.max(np.abs(inverse(st1.w).values - expected)) <= 1e-10

    def test_semigroup_property(self, rng):
        st0 = self._random_state(rng, 0.25)
        one = evolve_linear(st0, 1.0)
        two = evolve_linear(evolve_linear(st0, 0.7), 1.0)
        scale = np.max(np.abs(one.w.values))
        assert np.max(np.abs(one.w.values - two.w.values)) <= 1e-10 * scale
        assert np.max(np.abs(one.wt.values - two.wt.values)) <= 1e-10 * scale

    def test_energy_dissipation(self, rng):
        g = Grid(1, 64, 10.0)
        st0 = LinearState(forward(RealField(g, rng.standard_normal(g.shape))),
                          forward(RealField(g, np.zeros(g.shape))), 0.0, 0.25)
        mags = g.freq_magnitudes()
        energies = []
        for t in np.linspace(0.0, 5.0, 100):
            stt = evolve_linear(st0, float(t))
            grad = np.sum(mags ** 2 * np.abs(stt.w.values) ** 2)
            kin = np.sum(np.abs(stt.wt.values) ** 2)
            energies.append((grad + kin) * g.freq_cell_volume)
        energies = np.array(energies)
        assert np.all(np.diff(energies) <= 1e-10 * energies[0])

    def test_rejects_backwards_evolution(self, rng):
        st0 = self._random_state(rng, 0.1)
        with pytest.raises(ValueError):
            evolve_linear(st0, -0.5)


def gaussian_w0(rho):
    return np.exp(-rho * rho / 2.0), np.zeros_like(rho)


def gaussian_w1(rho):
    return np.zeros_like(rho), np.exp(-rho * rho)


class TestRadialNorm:
    def test_zero_data(self):
        val = radial_norm(3.0, 0.25, lambda r: (np.zeros_like(r), np.zeros_like(r)), 2)
        assert val == 0.0

    def test_gaussian_initial_l2(self):
        # closed form: sqrt(c_1 * int_0^inf e^{-rho^2} drho) = pi^(1/4)
        val = radial_norm(0.0, 0.5, gaussian_w0, 1, (0, 0))
        assert val == pytest.approx(np.pi ** 0.25, rel=1e-10)

    def test_matches_grid_parseval(self):
        # same evolution measured on a grid via the multiplier path
        g = Grid(1, 512, 40.0)
        x = g.axis_coords()
        w0 = RealField(g, np.sqrt(2 * np.pi) * np.exp(-x ** 2 / 2.0) / np.sqrt(2 * np.pi))
        # data whose transform is exp(-xi^2/2): the unit-width gaussian
        st0 = LinearState(forward(w0), forward(RealField(g, np.zeros(g.shape))), 0.0, 0.25)
        st1 = evolve_linear(st0, 4.0)
        grid_norm = np.sqrt(np.sum(np.abs(st1.w.values) ** 2) * g.freq_cell_volume)
        exact = radial_norm(4.0, 0.25, gaussian_w0, 1, (0, 0))
        assert grid_norm == pytest.approx(exact, rel=1e-6)

    def test_velocity_data_three_d_effective_rate(self):
        from strucdamp.rates import fit_rate
        times = np.geomspace(1e2, 1e4, 12)
        vals = [radial_norm(t, 0.5, gaussian_w1, 3, (0, 0)) for t in times]
        slope, _ = fit_rate(times, vals, (1e2, 1e4))
        assert slope == pytest.approx(-0.5, abs=0.02)

    def test_rejects_bad_derivative_index(self):
        with pytest.raises(ValueError):
            radial_norm(1.0, 0.2, gaussian_w0, 1, (2, 0))
