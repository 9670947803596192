"""Bracket-weight test functions and the machinery built on them.

The nonlocal operator (-Delta)^s makes compactly supported test functions
unusable, so everything here is built on algebraically decaying weights
<x>^(-r) = (1+|x|^2)^(-r/2).  The module provides:

* a principal-value quadrature for (-Delta)^s of a smooth function at a point,
* verified decay bounds and the exact rescaling identity for those weights,
* an admissible temporal cutoff whose derivative quotient stays bounded,
* the space-time functionals of the nonexistence argument together with the
  scaling exponents and critical-case constants that drive it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .kernels import QuadratureError, sphere_surface_measure
from .params import SystemParams
from .spectral import RealField

__all__ = [
    "BracketWeight",
    "TemporalCutoff",
    "build_cutoff",
    "pv_fractional_laplacian",
    "DecayBoundReport",
    "check_bracket_decay_bound",
    "check_scaling_identity",
    "Functionals",
    "space_time_functionals",
    "BlowupScalings",
    "blowup_scalings",
    "CriticalConstants",
    "critical_constants",
    "bracket_integral",
]


@dataclass(frozen=True)
class BracketWeight:
    """Radially non-increasing weight <x>^(-r) on R^n."""

    r: float
    n: int = 1

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"bracket weight needs r > 0, got {self.r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.n == 1:
            sq = x * x
        else:
            sq = np.sum(x * x, axis=-1)
        return (1.0 + sq) ** (-self.r / 2.0)


# ---------------------------------------------------------------------------
# Temporal cutoff
# ---------------------------------------------------------------------------

def _ramp_down(y: np.ndarray) -> np.ndarray:
    """Quintic 1 -> 0 ramp (1 - smoothstep) in its cancellation-free factored
    form (1-y)^3 (6y^2 + 3y + 1); first and second derivatives vanish at ends."""
    return (1.0 - y) ** 3 * (6.0 * y * y + 3.0 * y + 1.0)


def _smoothstep_d1(y: np.ndarray) -> np.ndarray:
    return 30.0 * y ** 2 * (1.0 - y) ** 2


def _smoothstep_d2(y: np.ndarray) -> np.ndarray:
    return 60.0 * y * (1.0 - y) * (1.0 - 2.0 * y)


@dataclass(frozen=True)
class TemporalCutoff:
    """C^2 cutoff: 1 on [0, 1/2], a quintic ramp to the `power` on [1/2, 1], 0 after.

    Raising the base ramp to an integer power >= 2 is what keeps the quotient
    phi^(-kappa'/kappa) (|phi'|^kappa' + |phi''|^kappa') bounded near the
    right endpoint for every kappa > 1; the plain quintic alone only manages
    kappa >= 3.
    """

    kappa: float
    power: int
    quotient_bound: float = math.nan

    def _base(self, t):
        t = np.asarray(t, dtype=float)
        y = np.clip(2.0 * t - 1.0, 0.0, 1.0)
        return np.where(t <= 0.5, 1.0, _ramp_down(y))

    def __call__(self, t):
        return self._base(t) ** self.power

    def d1(self, t):
        t = np.asarray(t, dtype=float)
        y = np.clip(2.0 * t - 1.0, 0.0, 1.0)
        inside = (t > 0.5) & (t < 1.0)
        B = _ramp_down(y)
        Bp = -2.0 * _smoothstep_d1(y)
        out = np.zeros_like(t)
        g = self.power
        np.copyto(out, g * B ** (g - 1) * Bp, where=inside)
        return out

    def d2(self, t):
        t = np.asarray(t, dtype=float)
        y = np.clip(2.0 * t - 1.0, 0.0, 1.0)
        inside = (t > 0.5) & (t < 1.0)
        B = _ramp_down(y)
        Bp = -2.0 * _smoothstep_d1(y)
        Bpp = -4.0 * _smoothstep_d2(y)
        g = self.power
        term = g * (g - 1) * B ** (max(g - 2, 0)) * Bp ** 2 + g * B ** (g - 1) * Bpp
        out = np.zeros_like(t)
        np.copyto(out, term, where=inside)
        return out

    def quotient(self, t):
        """phi^(-kappa'/kappa) (|phi'|^kappa' + |phi''|^kappa') on the ramp."""
        kp = self.kappa / (self.kappa - 1.0)
        phi = self(t)
        return phi ** (-kp / self.kappa) * (np.abs(self.d1(t)) ** kp
                                            + np.abs(self.d2(t)) ** kp)


def build_cutoff(kappa: float, samples: int = 10000) -> TemporalCutoff:
    """Admissible cutoff for the exponent kappa, with its measured quotient bound."""
    if kappa <= 1.0:
        raise ValueError(f"cutoff needs kappa > 1 (conjugate undefined otherwise), got {kappa}")
    kp = kappa / (kappa - 1.0)
    # boundedness near t=1 needs 3*power*(1 - 1/kappa) > 2
    power = max(2, math.ceil(2.0 * kp / 3.0) + 1)
    cutoff = TemporalCutoff(kappa, power)
    ts = np.linspace(0.5, 1.0 - 1e-6, samples)
    bound = float(np.max(cutoff.quotient(ts)))
    return TemporalCutoff(kappa, power, bound)


# ---------------------------------------------------------------------------
# Principal-value fractional Laplacian
# ---------------------------------------------------------------------------

def _pv_constant(n: int, s: float) -> float:
    """Normalization making (-Delta)^s cos(w x) = w^(2s) cos(w x)."""
    return 4.0 ** s * s * gamma_fn(n / 2.0 + s) / (np.pi ** (n / 2.0) * gamma_fn(1.0 - s))


def _longman_tail(f, a: float, scan_step: float = 0.2, max_crossings: int = 400,
                  scan_limit: float = 2000.0):
    """Integrate an oscillatory decaying f on [a, inf).

    Panels run between numerically detected sign changes; the alternating
    partial sums are accelerated by iterated pairwise averaging.  Returns
    (value, error_estimate) or None when f does not oscillate enough for the
    scheme to apply.
    """
    boundaries = [a]
    zprev = a
    fprev = f(a)
    z = a + scan_step
    while len(boundaries) < max_crossings and z < scan_limit:
        fz = f(z)
        if fz == 0.0 or np.sign(fz) != np.sign(fprev):
            lo, hi = zprev, z
            flo = fprev
            for _ in range(48):
                mid = 0.5 * (lo + hi)
                fm = f(mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if np.sign(fm) == np.sign(flo):
                    lo, flo = mid, fm
                else:
                    hi = mid
            boundaries.append(0.5 * (lo + hi))
            # re-anchor at the pre-bisection scan point: its value is solidly
            # signed, whereas f at the converged boundary is roundoff noise
            zprev, fprev = z, fz
            z += scan_step
        else:
            zprev, fprev = z, fz
            z += scan_step
    if len(boundaries) < 9:
        return None
    terms = []
    for lo, hi in zip(boundaries[:-1], boundaries[1:]):
        v, _ = quad(f, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=100)
        terms.append(v)
    partial = np.cumsum(terms)
    for _ in range(min(40, partial.size - 1)):
        prev_stage_last = partial[-1]
        partial = 0.5 * (partial[:-1] + partial[1:])
    est_err = abs(float(partial[-1]) - float(prev_stage_last)) + 1e-15
    return float(partial[-1]), est_err


def _outer_integral_1d(phi, x: float, s: float, rel_tol: float):
    """J = int_1^inf (phi(x+z) + phi(x-z)) z^(-1-2s) dz with decay detection."""

    def h(z):
        return phi(x + z) + phi(x - z)

    def f(z):
        return h(z) * z ** (-1.0 - 2.0 * s)

    probe = np.array([10.0, 100.0, 1000.0, 10000.0])
    hvals = np.abs([h(z) for z in probe])
    scale = max(abs(float(np.asarray(phi(x)))), float(hvals[0]), 1e-30)
    decaying = hvals[-1] < 1e-6 * scale and hvals[-2] < 1e-3 * scale

    if not decaying:
        result = _longman_tail(f, 1.0)
        if result is not None:
            return result
        # no detectable oscillation: fall through to direct quadrature

    points = [1.0]
    ax = abs(x)
    if ax > 3.5:
        points.extend([ax - 2.0, ax + 2.0])
    total, err = 0.0, 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        v, e = quad(f, lo, hi, epsabs=1e-14, epsrel=rel_tol * 0.1, limit=300)
        total += v
        err += e
    v, e = quad(f, points[-1], np.inf, epsabs=1e-14, epsrel=rel_tol * 0.1, limit=300)
    return total + v, err + e


def pv_fractional_laplacian(phi, x, s: float, n: int = 1,
                            rel_tol: float = 1e-8) -> float:
    """(-Delta)^s phi at the point x by principal-value quadrature.

    The singular region |z| < 1 uses the symmetrized second difference
    phi(x+z) + phi(x-z) - 2 phi(x), which removes the principal value; the
    outer region is integrated directly, with an oscillation-aware tail for
    bounded non-decaying inputs (n = 1 only).  The sign convention makes the
    operator act as the |xi|^(2s) multiplier: positive at the peak of a
    positive bump.

    For n = 2 `phi` must accept arrays of shape (..., 2).
    """
    if not (0.0 < s < 1.0):
        raise ValueError(f"pv_fractional_laplacian: s must lie in (0, 1), got {s}")
    if n not in (1, 2):
        raise ValueError(f"pv_fractional_laplacian: n must be 1 or 2, got {n}")
    c = _pv_constant(n, s)

    if n == 1:
        x = float(x)
        phi_x = float(np.asarray(phi(x)))

        def second_diff(z):
            return float(np.asarray(phi(x + z)) + np.asarray(phi(x - z))) - 2.0 * phi_x

        inner, inner_err = quad(lambda z: second_diff(z) * z ** (-1.0 - 2.0 * s),
                                0.0, 1.0, epsabs=1e-14, epsrel=rel_tol * 0.1,
                                limit=300)
        J, outer_err = _outer_integral_1d(phi, x, s, rel_tol)
        value = -c * (inner + J - phi_x / s)
        achieved = c * (inner_err + outer_err)
        if achieved > max(rel_tol * abs(value), 1e-9):
            raise QuadratureError("pv_fractional_laplacian did not converge", achieved)
        return value

    # n == 2: polar coordinates, spectrally accurate trapezoid in the angle.
    x = np.asarray(x, dtype=float).reshape(2)
    phi_x = float(np.asarray(phi(x)))
    M = 128
    theta = 2.0 * np.pi * np.arange(M) / M
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def angular_mean_second_diff(rho):
        pts_p = x + rho * dirs
        pts_m = x - rho * dirs
        vals = np.asarray(phi(pts_p)) + np.asarray(phi(pts_m)) - 2.0 * phi_x
        return float(np.mean(vals)) * 2.0 * np.pi

    def angular_mean(rho):
        return float(np.mean(np.asarray(phi(x + rho * dirs)))) * 2.0 * np.pi

    inner, inner_err = quad(lambda r: angular_mean_second_diff(r) * r ** (-1.0 - 2.0 * s),
                            0.0, 1.0, epsabs=1e-14, epsrel=rel_tol * 0.1, limit=200)
    probe = np.abs([angular_mean(z) for z in (10.0, 100.0, 1000.0)])
    if probe[-1] > 1e-5 * max(abs(phi_x), probe[0], 1e-30):
        raise ValueError(
            "pv_fractional_laplacian: non-decaying inputs are only supported in n = 1"
        )
    ax = float(np.linalg.norm(x))
    points = [1.0]
    if ax > 3.5:
        points.extend([ax - 2.0, ax + 2.0])
    T, outer_err = 0.0, 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        v, e = quad(lambda r: angular_mean(r) * r ** (-1.0 - 2.0 * s), lo, hi,
                    epsabs=1e-14, epsrel=rel_tol * 0.1, limit=200)
        T += v
        outer_err += e
    v, e = quad(lambda r: angular_mean(r) * r ** (-1.0 - 2.0 * s), points[-1],
                np.inf, epsabs=1e-14, epsrel=rel_tol * 0.1, limit=200)
    T += v
    outer_err += e
    surface = 2.0 * np.pi
    value = -0.5 * c * inner - c * (T - phi_x * surface / (2.0 * s))
    achieved = c * (0.5 * inner_err + outer_err)
    if achieved > max(rel_tol * abs(value), 1e-9):
        raise QuadratureError("pv_fractional_laplacian did not converge", achieved)
    return value


# ---------------------------------------------------------------------------
# Decay bound and rescaling checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayBoundReport:
    r: float
    s: float
    n: int
    branch: str
    radii: np.ndarray
    ratios: np.ndarray
    max_ratio: float
    last_decade_slope: float

    @property
    def passed(self) -> bool:
        """Bound verified: finite ratios with no diverging trend."""
        return bool(np.all(np.isfinite(self.ratios))
                    and self.last_decade_slope <= 0.1)


def check_bracket_decay_bound(r: float, s: float, n: int, radius_max: float,
                              num_radii: int = 20,
                              with_log_factor: bool | None = None) -> DecayBoundReport:
    """Ratio of |(-Delta)^s <x>^(-r)| to its decay bound over log-spaced radii.

    Branches: r < n compares against <x>^(-r-2s); r = n against
    <x>^(-n-2s) log(e+|x|); r > n against <x>^(-n-2s).  `with_log_factor`
    overrides the default bound choice so the necessity of the logarithmic
    enhancement at r = n can be demonstrated.
    """
    w = BracketWeight(r, n)
    radii = np.geomspace(max(0.05 * radius_max, 0.2), radius_max, num_radii)
    if n == 1:
        vals = np.array([pv_fractional_laplacian(w, x, s, 1) for x in radii])
    else:
        vals = np.array([pv_fractional_laplacian(w, np.array([x, 0.0]), s, 2)
                         for x in radii])
    br = np.sqrt(1.0 + radii ** 2)
    if with_log_factor is None:
        with_log_factor = (r == n)
    if r < n:
        bound = br ** (-r - 2.0 * s)
        branch = "r_below_n"
    else:
        bound = br ** (-n - 2.0 * s)
        branch = "r_equal_n" if r == n else "r_above_n"
    if with_log_factor:
        bound = bound * np.log(np.e + radii)
    ratios = np.abs(vals) / bound
    sel = radii >= radii[-1] / 10.0
    slope = float(np.polyfit(np.log(br[sel]), np.log(np.maximum(ratios[sel], 1e-300)), 1)[0])
    return DecayBoundReport(r, s, n, branch, radii, ratios,
                            float(np.max(ratios)), slope)


def check_scaling_identity(phi, R: float, kappa_scale: float, s: float, n: int,
                           points) -> float:
    """Max deviation of the exact rescaling identity for (-Delta)^s.

    Compares (-Delta)^s of x -> phi(R^(-kappa) x) at each sample point with
    R^(-2 kappa s) times (-Delta)^s phi at the rescaled point.
    """
    scale = R ** (-kappa_scale)

    def phi_R(y):
        return phi(np.asarray(y) * scale)

    worst = 0.0
    for x in points:
        lhs = pv_fractional_laplacian(phi_R, x, s, n)
        rhs = R ** (-2.0 * kappa_scale * s) * pv_fractional_laplacian(
            phi, np.asarray(x) * scale if n > 1 else float(x) * scale, s, n)
        worst = max(worst, abs(lhs - rhs) / (abs(rhs) + 1e-14))
    return worst


# ---------------------------------------------------------------------------
# Space-time functionals and the scalings that drive the nonexistence argument
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Functionals:
    i_r: float
    j_r: float
    i_rt: float
    j_rt: float
    warnings: tuple = ()


def space_time_functionals(snapshots, params: SystemParams, R: float,
                           alpha: float, beta: float, delta0: float | None = None,
                           cutoff: TemporalCutoff | None = None) -> Functionals:
    """Weighted space-time integrals of |v|^p and |u|^q against the test function.

    `snapshots` is a sequence of (t, u: RealField, v: RealField) covering
    [0, R^alpha] densely enough for trapezoidal time integration (at least 8
    inside, final time reaching R^alpha).  The x-factor has unbounded support,
    so a warning is attached when the grid box cuts it off above 1e-3 of its
    peak.  The *_rt variants integrate over the upper half [R^alpha/2, R^alpha].
    """
    if delta0 is None:
        delta0 = min(params.delta1, params.delta2)
    if cutoff is None:
        cutoff = build_cutoff(float(min(params.p, params.q)))
    t_end = R ** alpha
    times = np.array([snap[0] for snap in snapshots], dtype=float)
    if times.size and times[-1] < t_end * (1.0 - 1e-12):
        raise ValueError(
            f"space_time_functionals: snapshots end at t={times[-1]:.6g}, "
            f"need coverage up to R^alpha = {t_end:.6g}"
        )
    inside = times <= t_end * (1.0 + 1e-12)
    if np.count_nonzero(inside) < 8:
        raise ValueError(
            "space_time_functionals: need at least 8 snapshots inside "
            f"[0, {t_end:.6g}], got {np.count_nonzero(inside)}"
        )
    grid = snapshots[0][1].grid
    r = grid.radius_mesh()
    psi = (1.0 + (r / R ** beta) ** 2) ** (-(grid.n + 2.0 * delta0) / 2.0)
    warnings = []
    edge = (1.0 + (grid.half_width / R ** beta) ** 2) ** (-(grid.n + 2.0 * delta0) / 2.0)
    if edge > 1e-3:
        warnings.append(
            f"x-weight not negligible at the box edge (psi_R(L)/psi_R(0) = {edge:.3g}); "
            "enlarge the box or reduce the spatial scale"
        )
    cv = grid.cell_volume

    t_sel = times[inside]
    su = np.empty(t_sel.size)
    sv = np.empty(t_sel.size)
    p, q = float(params.p), float(params.q)
    for i, (t, u, v) in enumerate(snap for snap, keep in zip(snapshots, inside) if keep):
        sv[i] = float(np.sum(np.abs(v.values) ** p * psi) * cv)
        su[i] = float(np.sum(np.abs(u.values) ** q * psi) * cv)
    phi_t = cutoff(t_sel / t_end)
    i_r = float(np.trapezoid(phi_t * sv, t_sel))
    j_r = float(np.trapezoid(phi_t * su, t_sel))
    upper = t_sel >= 0.5 * t_end * (1.0 - 1e-12)
    if np.count_nonzero(upper) >= 2:
        i_rt = float(np.trapezoid((phi_t * sv)[upper], t_sel[upper]))
        j_rt = float(np.trapezoid((phi_t * su)[upper], t_sel[upper]))
    else:
        i_rt = j_rt = 0.0
    return Functionals(i_r, j_r, i_rt, j_rt, tuple(warnings))


@dataclass(frozen=True)
class BlowupScalings:
    alpha: Fraction
    beta: Fraction
    gamma1: Fraction
    gamma2: Fraction
    chain_ok: bool
    swapped: bool = False


def blowup_scalings(params: SystemParams) -> BlowupScalings:
    """Scaling exponents (alpha, beta) of the rescaled test function and the
    resulting powers (gamma1, gamma2) bounding the two functionals.

    Computed in the delta1 >= delta2 frame; parameters with the opposite
    ordering are evaluated on the swapped system and the gammas swapped back.
    Flags violation of the comparison chain -2a <= -2b, -a-2*d*b <= -2b that
    lets the three boundary terms collapse onto one power of R.
    """
    if params.delta2 > params.delta1:
        rep = blowup_scalings(params.swapped())
        return BlowupScalings(rep.alpha, rep.beta, rep.gamma2, rep.gamma1,
                              rep.chain_ok, swapped=True)
    n = Fraction(params.n)
    d1 = Fraction(params.delta1)
    d2 = Fraction(params.delta2)
    p = Fraction(params.p)
    q = Fraction(params.q)
    shift = (d1 - d2) / (2 * (1 - d2))
    alpha = 2 - 2 * d1 + shift * (n * q - n - 2 * q) * (n - 2) / (1 + q)
    beta = 1 - shift * (n * q + 2 - n) / (1 + q)
    pp = p / (p - 1)
    qp = q / (q - 1)
    lead = alpha + n * beta
    gamma1 = -2 * beta + lead / qp + (-2 * beta + lead / pp) / q
    gamma2 = -2 * beta + lead / pp + (-2 * beta + lead / qp) / p
    chain_ok = (-2 * alpha <= -2 * beta
                and -alpha - 2 * d1 * beta <= -2 * beta
                and -alpha - 2 * d2 * beta <= -2 * beta)
    return BlowupScalings(alpha, beta, gamma1, gamma2, bool(chain_ok))


# ---------------------------------------------------------------------------
# Critical-case constants
# ---------------------------------------------------------------------------

def bracket_integral(n: int, exponent: float, rel_tol: float = 1e-10) -> float:
    """Integral of <x>^(-exponent) over R^n by radial quadrature."""
    if exponent <= n:
        raise ValueError(
            f"bracket integral diverges for exponent {exponent} <= n = {n}"
        )

    def integrand(rho):
        return (1.0 + rho * rho) ** (-exponent / 2.0) * rho ** (n - 1)

    head, e1 = quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=rel_tol, limit=200)
    tail, e2 = quad(integrand, 1.0, np.inf, epsabs=1e-14, epsrel=rel_tol, limit=200)
    total = head + tail
    if e1 + e2 > max(rel_tol * total, 1e-12):
        raise QuadratureError("bracket_integral did not converge", e1 + e2)
    return sphere_surface_measure(n) * total


@dataclass(frozen=True)
class CriticalConstants:
    bracket_mass: float   # integral of the weight, also the mass threshold
    d_p: float            # bracket_mass ** (1/p')
    d_q: float            # bracket_mass ** (1/q')
    mass_threshold: float


def critical_constants(params: SystemParams, delta0: float | None = None) -> CriticalConstants:
    """Constants of the critical-case iteration, from the weight's total mass.

    Requires delta0 = min(delta1, delta2) > 0: at delta0 = 0 the weight
    exponent degenerates to n and its integral diverges logarithmically, so
    the computation is refused rather than silently regularized.
    """
    if params.n not in (1, 2, 3):
        raise ValueError(f"critical_constants: n must be 1, 2 or 3, got {params.n}")
    if delta0 is None:
        delta0 = min(params.delta1, params.delta2)
    if delta0 <= 0.0:
        raise ValueError(
            "critical_constants: needs min(delta1, delta2) > 0; at delta0 = 0 the "
            "weight <x>^(-n) is not integrable and the critical-case constants "
            "are undefined"
        )
    B = bracket_integral(params.n, params.n + 2.0 * delta0)
    pp = float(params.p) / (float(params.p) - 1.0)
    qp = float(params.q) / (float(params.q) - 1.0)
    return CriticalConstants(B, B ** (1.0 / pp), B ** (1.0 / qp), B)
