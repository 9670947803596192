"""Shared oracles, independent of the library code paths they check."""

import numpy as np
import pytest


def kernel_ode_rhs(s, b2):
    def rhs(y):
        return np.array([y[1], -s * y[1] - b2 * y[0]])
    return rhs


def rk4_kernel_adaptive(t, xi_abs, delta, w0, w1, rel_tol=1e-10):
    """Classic RK4 with step doubling on the frequency-side oscillator.

    Integrates what'' + s what' + b^2 what = 0 from (w0, w1); the error is
    controlled per step by Richardson comparison of one h-step against two
    h/2-steps.
    """
    s = xi_abs ** (2.0 * delta) if xi_abs > 0 else 0.0
    b2 = xi_abs * xi_abs

    def f(y0, y1):
        return y1, -s * y1 - b2 * y0

    def rk4(y0, y1, h):
        k10, k11 = f(y0, y1)
        k20, k21 = f(y0 + 0.5 * h * k10, y1 + 0.5 * h * k11)
        k30, k31 = f(y0 + 0.5 * h * k20, y1 + 0.5 * h * k21)
        k40, k41 = f(y0 + h * k30, y1 + h * k31)
        return (y0 + h / 6.0 * (k10 + 2 * k20 + 2 * k30 + k40),
                y1 + h / 6.0 * (k11 + 2 * k21 + 2 * k31 + k41))

    y = (float(w0), float(w1))
    time = 0.0
    h = min(0.1, t if t > 0 else 0.1, 1.0 / (1.0 + max(s, xi_abs)))
    while time < t:
        h = min(h, t - time)
        big = rk4(*y, h)
        half = rk4(*rk4(*y, 0.5 * h), 0.5 * h)
        err = max(abs(big[0] - half[0]), abs(big[1] - half[1]))
        scale = max(abs(half[0]), abs(half[1]), 1e-3)
        if err <= rel_tol * scale or h < 1e-12:
            time += h
            y = half
            if err < 0.1 * rel_tol * scale:
                h *= 2.0
        else:
            h *= 0.5
    return y


def rk4_kernel_grid(t, xi_values, delta, n_steps, w0, w1):
    """Fixed-step classic RK4, vectorized over frequencies."""
    xi = np.asarray(xi_values, dtype=float)
    s = np.where(xi > 0, xi ** (2.0 * delta), 0.0)
    b2 = xi * xi
    y0 = np.full_like(xi, float(w0))
    y1 = np.full_like(xi, float(w1))
    h = t / n_steps

    def f(a, b):
        return b, -s * b - b2 * a

    for _ in range(n_steps):
        k10, k11 = f(y0, y1)
        k20, k21 = f(y0 + 0.5 * h * k10, y1 + 0.5 * h * k11)
        k30, k31 = f(y0 + 0.5 * h * k20, y1 + 0.5 * h * k21)
        k40, k41 = f(y0 + h * k30, y1 + h * k31)
        y0 = y0 + h / 6.0 * (k10 + 2 * k20 + 2 * k30 + k40)
        y1 = y1 + h / 6.0 * (k11 + 2 * k21 + 2 * k31 + k41)
    return y0, y1


def direct_dft(grid, values):
    """O(N^2)-per-axis discrete transform with the package's normalization,
    built from explicit exponential matrices rather than an FFT."""
    N = grid.points_per_axis
    x = grid.axis_coords()
    xi = grid.freq_spacing * grid.axis_wavenumbers()
    M = np.exp(-1j * np.outer(xi, x))
    scale = (grid.spacing / np.sqrt(2.0 * np.pi)) ** grid.n
    out = np.asarray(values, dtype=complex)
    for axis in range(grid.n):
        out = np.moveaxis(np.tensordot(M, np.moveaxis(out, axis, 0), axes=(1, 0)),
                          0, axis)
    return scale * out


def riemann_lp(values, p, cell_volume):
    return (np.sum(np.abs(values) ** p) * cell_volume) ** (1.0 / p)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)
