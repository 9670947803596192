"""Closed-form decay-rate predictions, loss-of-decay, rate fitting and the
fractional interpolation exponent.

All closed-form exponents are computed in exact rational arithmetic
(binary-exact floats such as 1/2 or 1/4 stay exact), so threshold identities
can be asserted with == rather than a tolerance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .params import SystemParams
from .spectral import RealField, forward

__all__ = [
    "RateSource",
    "RatePrediction",
    "LossOfDecay",
    "predicted_exponents",
    "loss_of_decay",
    "WeightExponents",
    "solution_space_weights",
    "fit_rate",
    "gn_theta",
    "gn_check",
    "lp_norm",
    "homogeneous_sobolev_norm",
]

DEFAULT_SLACK = 1e-3


def _frac(x) -> Fraction:
    """Exact rational image of the input (floats map to their binary value)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    return Fraction(float(x))


class RateSource(enum.Enum):
    """Which estimate family a prediction comes from.

    BASELINE  - linear mixed-norm estimate valid in every dimension n >= 1;
                its m = 2 instance is the pure L2 -> L2 estimate.
    SHARP     - linear estimate with improved velocity-data bookkeeping,
                valid only for n > 2*m0*delta.
    COMBINED  - the SHARP exponents instantiated per component of the coupled
                system; validity uses the larger of the two damping orders.
    SYSTEM_LOSS_ON_U - decay rates of the coupled system when the u-component
                carries the loss-of-decay correction (delta1 >= delta2 regime).
    SYSTEM_LOSS_ON_V - mirrored regime (delta2 >= delta1).
    """

    BASELINE = "baseline"
    SHARP = "sharp"
    COMBINED = "combined"
    SYSTEM_LOSS_ON_U = "system_loss_on_u"
    SYSTEM_LOSS_ON_V = "system_loss_on_v"


@dataclass(frozen=True)
class RatePrediction:
    source: RateSource
    j: int
    k: int
    exponent_w0: Fraction
    exponent_w1: Fraction
    validity: tuple = ()

    @property
    def valid(self) -> bool:
        return all(ok for _, ok in self.validity)


def _linear_exponents(n: Fraction, m: Fraction, d: Fraction, j: int, k: int,
                      sharp: bool) -> tuple:
    """(w0-term, w1-term) powers of (1+t) for the linear flow."""
    amp = -n / (2 * (1 - d)) * (Fraction(1) / m - Fraction(1, 2))
    if sharp:
        w0 = amp - Fraction(k) / (2 * (1 - d)) - j
        w1 = amp - (Fraction(k) - 2 * d) / (2 * (1 - d)) - j
    else:
        w0 = amp - (Fraction(k) + 2 * j * d) / (2 * (1 - d))
        w1 = amp - Fraction(k) / (2 * (1 - d)) - j + 1
    return w0, w1


def predicted_exponents(params: SystemParams, delta, j: int, k: int,
                        source: RateSource = RateSource.SHARP,
                        slack: float = DEFAULT_SLACK) -> RatePrediction:
    """Decay exponents for d_t^j grad^k of one component.

    `delta` selects which damping order the linear estimates are instantiated
    at (pass params.delta1 or params.delta2, or any value in [0, 1/2]).
    Predictions whose validity constraints fail are still returned, flagged
    invalid; callers must not assert measured rates against those.
    """
    if j not in (0, 1):
        raise ValueError(f"predicted_exponents: j must be 0 or 1, got {j}")
    if k < 0:
        raise ValueError(f"predicted_exponents: k must be >= 0, got {k}")
    n = Fraction(params.n)
    m = _frac(params.m)
    d = _frac(delta)
    checks = []
    if source in (RateSource.BASELINE, RateSource.SHARP, RateSource.COMBINED):
        if source is RateSource.BASELINE:
            w0, w1 = _linear_exponents(n, m, d, j, k, sharp=False)
        else:
            w0, w1 = _linear_exponents(n, m, d, j, k, sharp=True)
            if m == 2:
                raise ValueError("sharp estimates need m < 2 (m0 is unbounded at m = 2)")
            m0 = 2 * m / (2 - m)
            gate_delta = d if source is RateSource.SHARP else _frac(
                max(params.delta1, params.delta2))
            checks.append((f"n > 2*m0*delta (= {2 * m0 * gate_delta})",
                           n > 2 * m0 * gate_delta))
        return RatePrediction(source, j, k, w0, w1, tuple(checks))

    # Coupled-system rates: single exponent per (component, j, k); stored in
    # both fields since the data norm on the right-hand side does not split.
    weights = solution_space_weights(
        params,
        variant="loss_on_u" if source is RateSource.SYSTEM_LOSS_ON_U else "loss_on_v",
        slack=slack,
    )
    table = {
        (0, 0): (weights.f1, weights.g1),
        (0, 1): (weights.f2, weights.g2),
        (1, 0): (weights.f3, weights.g3),
    }
    if (j, k) not in table:
        raise ValueError(f"system rates cover (j,k) in {{(0,0),(0,1),(1,0)}}, got {(j, k)}")
    fu, gv = table[(j, k)]
    chosen = fu if math.isclose(float(delta), float(params.delta1)) else gv
    e = _frac(chosen)
    return RatePrediction(source, j, k, e, e, ())


@dataclass(frozen=True)
class LossOfDecay:
    """Loss-of-decay correction with the unquantified positive slack kept apart."""

    value: Fraction
    slack: float

    @property
    def total(self) -> float:
        return float(self.value) + self.slack


def loss_of_decay(params: SystemParams, which: str = "p",
                  slack: float = DEFAULT_SLACK) -> LossOfDecay:
    """Correction by which one coupled component decays worse than the linear flow.

    which="p": the u-side correction, driven by (p, delta2);
    which="q": the v-side correction, driven by (q, delta1).
    """
    n = Fraction(params.n)
    m = _frac(params.m)
    if which == "p":
        kappa, d = _frac(params.p), _frac(params.delta2)
    elif which == "q":
        kappa, d = _frac(params.q), _frac(params.delta1)
    else:
        raise ValueError(f"loss_of_decay: which must be 'p' or 'q', got {which!r}")
    value = 1 - n / (2 * m * (1 - d)) * (kappa - 1) + kappa * d / (1 - d)
    return LossOfDecay(value, slack)


@dataclass(frozen=True)
class WeightExponents:
    """Exponents of the six (1+t)-power weights of the solution-space norm."""

    f1: float
    f2: float
    f3: float
    g1: float
    g2: float
    g3: float
    variant: str = "loss_on_u"
    slack: float = DEFAULT_SLACK

    def for_component(self, component: str) -> tuple:
        if component == "u":
            return (self.f1, self.f2, self.f3)
        if component == "v":
            return (self.g1, self.g2, self.g3)
        raise ValueError(f"component must be 'u' or 'v', got {component!r}")

    def weight(self, name: str):
        """The weight itself as a function of t: (1+t)**exponent."""
        e = getattr(self, name)
        return lambda t: (1.0 + np.asarray(t, dtype=float)) ** e


def solution_space_weights(params: SystemParams, variant: str = "loss_on_u",
                           slack: float = DEFAULT_SLACK) -> WeightExponents:
    """Weights defining the norm the coupled solution is measured in.

    variant="loss_on_u" is the delta1 >= delta2 regime (u picks up the
    loss-of-decay correction); variant="loss_on_v" the mirrored one.  The
    weights are formal: no hypothesis checking happens here.
    """
    n = Fraction(params.n)
    m = _frac(params.m)
    d1 = _frac(params.delta1)
    d2 = _frac(params.delta2)
    amp1 = -n / (2 * (1 - d1)) * (Fraction(1) / m - Fraction(1, 2))
    amp2 = -n / (2 * (1 - d2)) * (Fraction(1) / m - Fraction(1, 2))
    f1 = amp1 + d1 / (1 - d1)
    f2 = amp1 - (1 - 2 * d1) / (2 * (1 - d1))
    f3 = amp1 - (1 - 2 * d1) / (1 - d1)
    g1 = amp2 + d2 / (1 - d2)
    g2 = amp2 - (1 - 2 * d2) / (2 * (1 - d2))
    g3 = amp2 - (1 - 2 * d2) / (1 - d2)
    if variant == "loss_on_u":
        eps = float(loss_of_decay(params, "p", slack).value) + slack
        f1, f2, f3 = (float(f1) + eps, float(f2) + eps, float(f3) + eps)
        g1, g2, g3 = (float(g1), float(g2), float(g3))
    elif variant == "loss_on_v":
        eps = float(loss_of_decay(params, "q", slack).value) + slack
        g1, g2, g3 = (float(g1) + eps, float(g2) + eps, float(g3) + eps)
        f1, f2, f3 = (float(f1), float(f2), float(f3))
    else:
        raise ValueError(f"variant must be 'loss_on_u' or 'loss_on_v', got {variant!r}")
    return WeightExponents(f1, f2, f3, g1, g2, g3, variant, slack)


def fit_rate(times, values, window) -> tuple:
    """Least-squares slope of log(value) against log(1+t) inside the window.

    Returns (slope, stderr).  Nonpositive values inside the window are
    rejected: they signal blow-up or underflow, not power-law decay.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape:
        raise ValueError("fit_rate: times and values must have matching shapes")
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if np.count_nonzero(sel) < 8:
        raise ValueError(
            f"fit_rate: need at least 8 samples in [{lo}, {hi}], "
            f"got {np.count_nonzero(sel)}"
        )
    vs = v[sel]
    if np.any(vs <= 0.0) or not np.all(np.isfinite(vs)):
        raise ValueError("fit_rate: nonpositive or non-finite values in window")
    x = np.log1p(t[sel])
    y = np.log(vs)
    npts = x.size
    xbar = x.mean()
    sxx = np.sum((x - xbar) ** 2)
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    icept = float(y.mean() - slope * xbar)
    resid = y - (icept + slope * x)
    dof = max(npts - 2, 1)
    stderr = float(np.sqrt(np.sum(resid ** 2) / dof / sxx))
    return slope, stderr


def gn_theta(s, sigma, p, p0, p1, n) -> tuple:
    """Interpolation exponent theta and its applicability flag.

    theta = (1/p0 - 1/p + s/n) / (1/p0 - 1/p1 + sigma/n); applicable when
    s/sigma <= theta <= 1 (the s = sigma endpoint is admitted as a limit).
    """
    s, sigma, p, p0, p1 = map(_frac, (s, sigma, p, p0, p1))
    n = Fraction(n)
    if not (p > 1 and p0 > 1 and p1 > 1):
        raise ValueError("gn_theta: integrability exponents must exceed 1")
    if sigma <= 0 or s < 0 or s > sigma:
        raise ValueError("gn_theta: need 0 <= s <= sigma with sigma > 0")
    denom = 1 / p0 - 1 / p1 + sigma / n
    if denom == 0:
        return Fraction(0), False
    theta = (1 / p0 - 1 / p + s / n) / denom
    applicable = (s / sigma) <= theta <= 1
    return theta, applicable


def lp_norm(u: RealField, p: float) -> float:
    """Riemann-sum L^p norm on the field's grid."""
    if p == math.inf:
        return float(np.max(np.abs(u.values)))
    return float((np.sum(np.abs(u.values) ** p) * u.grid.cell_volume) ** (1.0 / p))


def homogeneous_sobolev_norm(u: RealField, s: float) -> float:
    """Homogeneous L2-scale Sobolev norm via the |xi|^s multiplier."""
    F = forward(u)
    mags = u.grid.freq_magnitudes()
    weighted = np.abs(F.values) ** 2 * mags ** (2.0 * s)
    return float(np.sqrt(np.sum(weighted) * u.grid.freq_cell_volume))


def gn_check(u: RealField, s, sigma, p, p0, p1) -> float:
    """Ratio LHS/RHS of the interpolation inequality on a grid sample.

    Restricted to p = p1 = 2: the fractional norms are evaluated spectrally
    on the L2 scale only.  The L^{p0} norm is a plain Riemann sum.
    """
    if float(p) != 2.0 or float(p1) != 2.0:
        raise ValueError("gn_check: grid evaluation supports p = p1 = 2 only")
    theta, applicable = gn_theta(s, sigma, p, p0, p1, u.grid.n)
    if not applicable:
        raise ValueError(f"gn_check: theta = {theta} is outside [s/sigma, 1]")
    th = float(theta)
    lhs = homogeneous_sobolev_norm(u, float(s))
    rhs = lp_norm(u, float(p0)) ** (1.0 - th) * homogeneous_sobolev_norm(u, float(sigma)) ** th
    return lhs / rhs
