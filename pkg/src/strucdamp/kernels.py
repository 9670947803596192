"""Characteristic roots and propagator symbols of the damped linear flow.

The scalar frequency-side problem behind everything here is

    what_tt + |xi|^(2*delta) * what_t + |xi|^2 * what = 0

whose roots are lam_{1,2} = (-s +- sqrt(s^2 - 4 b^2)) / 2 with s = |xi|^(2*delta)
and b = |xi|.  The position/velocity propagators are evaluated in a stable
form built from sinhc/sinc of the half root gap, which avoids the catastrophic
cancellation of exp(lam1 t) - exp(lam2 t) near the double-root frequency.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .spectral import Grid, SpectralField

__all__ = [
    "Branch",
    "KernelValues",
    "LinearState",
    "characteristic_roots",
    "discriminant_zero_radius",
    "kernel_arrays",
    "kernel_values",
    "evolve_linear",
    "radial_norm",
    "QuadratureError",
]

# Relative discriminant size below which the double-root limit formulas are used.
DEGENERATE_THRESHOLD = 1e-8

# Arguments below this go through the series for sinh(z)/z and sin(z)/z.
SERIES_THRESHOLD = 1e-4


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


class Branch(enum.Enum):
    REAL_DISTINCT = "real_distinct"
    COMPLEX_PAIR = "complex_pair"
    DEGENERATE = "degenerate"
    ZERO_FREQUENCY = "zero_frequency"


@dataclass(frozen=True)
class KernelValues:
    """Propagator symbol values at one (t, |xi|, delta).

    All four values are real: the roots are either both real or a conjugate
    pair, so the symbols carry no imaginary part.
    """

    k0: float
    k1: float
    dk0: float
    dk1: float
    branch: Branch


def characteristic_roots(xi_abs: float, delta: float) -> tuple:
    """Both roots as complex numbers; the first takes the + branch."""
    if not (math.isfinite(xi_abs) and math.isfinite(delta)):
        raise ValueError("characteristic_roots: inputs must be finite")
    if xi_abs == 0.0:
        return 0.0 + 0.0j, 0.0 + 0.0j
    s = xi_abs ** (2.0 * delta)
    d = s * s - 4.0 * xi_abs * xi_abs
    if d >= 0.0:
        # big root first; the small one through the product identity, which
        # avoids the cancellation in -s + sqrt(s^2 - 4 b^2) for b << s
        lam2 = complex(-0.5 * (s + math.sqrt(d)), 0.0)
        lam1 = complex(xi_abs * xi_abs / lam2.real, 0.0)
    else:
        root = math.sqrt(-d)
        lam1 = complex(-0.5 * s, 0.5 * root)
        lam2 = complex(-0.5 * s, -0.5 * root)
    return lam1, lam2


def discriminant_zero_radius(delta: float) -> float | None:
    """Frequency magnitude where the two roots collide, if any.

    Solves |xi|^(4*delta) = 4 |xi|^2; for delta = 1/2 the discriminant is
    negative at every nonzero frequency and there is no collision.
    """
    if delta >= 0.5:
        return None
    return 4.0 ** (1.0 / (4.0 * delta - 2.0))


def _sinhc(z: np.ndarray) -> np.ndarray:
    """sinh(z)/z, series below SERIES_THRESHOLD."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_THRESHOLD
    zs = z[small]
    out[small] = 1.0 + zs * zs / 6.0 + zs ** 4 / 120.0
    zb = z[~small]
    out[~small] = np.sinh(zb) / zb
    return out


def _sinc(z: np.ndarray) -> np.ndarray:
    """sin(z)/z, series below SERIES_THRESHOLD."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = np.abs(z) < SERIES_THRESHOLD
    zs = z[small]
    out[small] = 1.0 - zs * zs / 6.0 + zs ** 4 / 120.0
    zb = z[~small]
    out[~small] = np.sin(zb) / zb
    return out


def kernel_arrays(t: float, xi_abs, delta: float, degenerate_override=None):
    """Vectorized symbol evaluation; returns (k0, k1, dk0, dk1) arrays.

    `degenerate_override` forces (True) or forbids (False) the double-root
    limit path; it exists so the agreement of the two evaluation paths in a
    collar around the branch switch can be measured directly.
    """
    if not math.isfinite(t) or t < 0.0:
        raise ValueError(f"kernel_arrays: time must be finite and >= 0, got {t}")
    if not (0.0 <= delta <= 0.5):
        raise ValueError(f"kernel_arrays: delta must lie in [0, 0.5], got {delta}")
    xi = np.asarray(xi_abs, dtype=np.float64)
    scalar_input = xi.ndim == 0
    xi = np.atleast_1d(xi)

    k0 = np.empty_like(xi)
    k1 = np.empty_like(xi)

    zero = xi == 0.0
    nz = ~zero
    s = np.zeros_like(xi)
    b2 = xi * xi
    s[nz] = xi[nz] ** (2.0 * delta)
    d = s * s - 4.0 * b2

    scale = np.maximum(s * s, 4.0 * b2)
    if degenerate_override is None:
        degen = nz & (np.abs(d) < DEGENERATE_THRESHOLD * scale)
    elif degenerate_override:
        degen = nz.copy()
    else:
        degen = np.zeros_like(nz)
    real = nz & ~degen & (d > 0.0)
    cplx = nz & ~degen & (d <= 0.0)

    # zero frequency: what_tt = 0
    k0[zero] = 1.0
    k1[zero] = t

    E = np.exp(-0.5 * s * t)

    if np.any(degen):
        sd = s[degen]
        Ed = E[degen]
        k1[degen] = t * Ed
        k0[degen] = Ed * (1.0 + 0.5 * sd * t)

    if np.any(real):
        sr = s[real]
        mu = 0.5 * np.sqrt(d[real])
        z = mu * t
        # mu <= s/2 here, so both exponents below are <= 0: no overflow.
        big = z >= 0.5
        k1r = np.empty_like(sr)
        k0r = np.empty_like(sr)
        if np.any(big):
            ep = np.exp((mu[big] - 0.5 * sr[big]) * t)
            em = np.exp(-(mu[big] + 0.5 * sr[big]) * t)
            k1r[big] = (ep - em) / (2.0 * mu[big])
            k0r[big] = 0.5 * (ep + em) + 0.5 * sr[big] * k1r[big]
        small = ~big
        if np.any(small):
            Er = E[real][small]
            k1r[small] = Er * t * _sinhc(z[small])
            k0r[small] = Er * np.cosh(z[small]) + 0.5 * sr[small] * k1r[small]
        k1[real] = k1r
        k0[real] = k0r

    if np.any(cplx):
        sc = s[cplx]
        nu = 0.5 * np.sqrt(-d[cplx])
        z = nu * t
        Ec = E[cplx]
        k1c = Ec * t * _sinc(z)
        k1[cplx] = k1c
        k0[cplx] = Ec * np.cos(z) + 0.5 * sc * k1c

    dk0 = -b2 * k1
    dk1 = k0 - s * k1

    if scalar_input:
        return k0[0], k1[0], dk0[0], dk1[0]
    return k0, k1, dk0, dk1


def _branch_tag(xi_abs: float, delta: float) -> Branch:
    if xi_abs == 0.0:
        return Branch.ZERO_FREQUENCY
    s = xi_abs ** (2.0 * delta)
    d = s * s - 4.0 * xi_abs * xi_abs
    if abs(d) < DEGENERATE_THRESHOLD * max(s * s, 4.0 * xi_abs * xi_abs):
        return Branch.DEGENERATE
    return Branch.REAL_DISTINCT if d > 0.0 else Branch.COMPLEX_PAIR


def kernel_values(t: float, xi_abs: float, delta: float) -> KernelValues:
    """Symbol values at one point, with the evaluation branch tagged."""
    if xi_abs < 0.0:
        raise ValueError(f"kernel_values: |xi| must be >= 0, got {xi_abs}")
    k0, k1, dk0, dk1 = kernel_arrays(t, float(xi_abs), delta)
    return KernelValues(float(k0), float(k1), float(dk0), float(dk1),
                        _branch_tag(float(xi_abs), delta))


@dataclass(frozen=True)
class LinearState:
    """Frequency-space state (w, w_t) of the single damped wave."""

    w: SpectralField
    wt: SpectralField
    t: float
    delta: float

    def __post_init__(self):
        if self.w.grid != self.wt.grid:
            raise ValueError("LinearState: w and wt live on different grids")
        if not (0.0 <= self.delta <= 0.5):
            raise ValueError(f"LinearState: delta must lie in [0, 0.5], got {self.delta}")


def evolve_linear(state: LinearState, t_target: float) -> LinearState:
    """Exact linear evolution by multiplier action at the elapsed time."""
    if t_target < state.t:
        raise ValueError(
            f"evolve_linear: t_target {t_target} is before current time {state.t}"
        )
    dt = t_target - state.t
    grid = state.w.grid
    k0, k1, dk0, dk1 = kernel_arrays(dt, grid.freq_magnitudes(), state.delta)
    w_new = k0 * state.w.values + k1 * state.wt.values
    wt_new = dk0 * state.w.values + dk1 * state.wt.values
    return LinearState(SpectralField(grid, w_new), SpectralField(grid, wt_new),
                       t_target, state.delta)


def sphere_surface_measure(n: int) -> float:
    """Surface measure of the unit sphere in R^n: 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * np.pi ** (n / 2.0) / math.gamma(n / 2.0)


def radial_norm(t: float, delta: float, data_symbol, n: int, deriv=(0, 0),
                rel_tol: float = 1e-8) -> float:
    """L2 norm of d_t^j grad^k of the linear solution for radial frequency data.

    `data_symbol` maps an array of frequency magnitudes to the pair
    (what0, what1) of initial coefficients.  The norm is computed grid-free as

        sqrt( c_n * int_0^inf  rho^(2k) |d_t^j what(t, rho)|^2 rho^(n-1) drho )

    so arbitrarily large times are admissible.  Raises QuadratureError when
    the adaptive quadrature cannot certify the requested relative tolerance.
    """
    j, k = deriv
    if j not in (0, 1):
        raise ValueError(f"radial_norm: time-derivative index must be 0 or 1, got {j}")
    if k < 0:
        raise ValueError(f"radial_norm: gradient index must be >= 0, got {k}")
    if n < 1 or int(n) != n:
        raise ValueError(f"radial_norm: dimension must be a positive integer, got {n}")

    def integrand(rho: float) -> float:
        arr = np.atleast_1d(np.float64(rho))
        k0, k1, dk0, dk1 = kernel_arrays(t, arr, delta)
        w0, w1 = data_symbol(arr)
        if j == 0:
            amp = k0 * np.asarray(w0) + k1 * np.asarray(w1)
        else:
            amp = dk0 * np.asarray(w0) + dk1 * np.asarray(w1)
        val = rho ** (2 * k) * np.abs(amp) ** 2 * rho ** (n - 1)
        return float(val[0])

    # Panel boundaries: split at the root-collision radius (kinked integrand)
    # and at the diffusion concentration scale for large times.
    points = [0.0]
    rho_star = discriminant_zero_radius(delta)
    if rho_star is not None and rho_star < 1e3:
        points.append(rho_star)
    if t > 1.0:
        rho_conc = (1.0 / t) ** (1.0 / (2.0 - 2.0 * delta))
        points.append(rho_conc)
    points = sorted(set(points))

    total = 0.0
    err = 0.0
    for a, b in zip(points[:-1], points[1:]):
        v, e = quad(integrand, a, b, epsabs=1e-300, epsrel=rel_tol * 0.1, limit=400)
        total += v
        err += e

    # Extend outward by doubling panels until the added mass is negligible.
    lo = points[-1]
    hi = max(2.0 * lo, 1.0)
    for _ in range(60):
        v, e = quad(integrand, lo, hi, epsabs=1e-300, epsrel=rel_tol * 0.1, limit=400)
        total += v
        err += e
        if abs(v) <= 1e-12 * abs(total) and hi > 10.0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise QuadratureError("radial_norm: tail did not converge", abs(v))

    if total > 0.0 and err > rel_tol * total:
        raise QuadratureError("radial_norm: requested tolerance not certified", err / total)
    return math.sqrt(sphere_surface_measure(n) * total)
