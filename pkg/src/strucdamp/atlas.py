"""Exact encoding of the global-existence and nonexistence hypotheses, and
classification of (p, q) parameter points.

Every inequality is evaluated twice when it matters: a fast floating path for
sweeps, and an exact rational path used to re-resolve verdicts whose floating
margin is within 1e-9 of a constraint boundary.  The strict/non-strict
distinctions are load-bearing: the existence conditions are strict exactly
where the blow-up conditions are their closed complement.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .params import SystemParams

__all__ = [
    "Verdict",
    "ConditionCheck",
    "RegionVerdict",
    "check_existence_delta1_ge",
    "check_existence_delta2_ge",
    "check_blowup",
    "classify",
    "coupling_fraction",
    "reduction_identities",
    "ReductionReport",
    "sweep",
    "SweepResult",
]

BOUNDARY_EPS = 1e-9


class Verdict(enum.Enum):
    EXISTENCE_DELTA1_GE = "existence_delta1_ge"
    EXISTENCE_DELTA2_GE = "existence_delta2_ge"
    BLOWUP_L1_DATA = "blowup_l1_data"
    BLOWUP_LM_DATA = "blowup_lm_data"
    UNDETERMINED = "undetermined"

    @property
    def is_existence(self) -> bool:
        return self in (Verdict.EXISTENCE_DELTA1_GE, Verdict.EXISTENCE_DELTA2_GE)

    @property
    def is_blowup(self) -> bool:
        return self in (Verdict.BLOWUP_L1_DATA, Verdict.BLOWUP_LM_DATA)


@dataclass(frozen=True)
class ConditionCheck:
    cond_id: str
    holds: bool
    margin: float


@dataclass(frozen=True)
class RegionVerdict:
    verdict: Verdict
    checks: tuple
    notes: tuple = ()

    def check(self, cond_id: str) -> ConditionCheck:
        for c in self.checks:
            if c.cond_id == cond_id:
                return c
        raise KeyError(cond_id)

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)


def _vals(params: SystemParams, exact: bool) -> dict:
    conv = (lambda x: Fraction(x)) if exact else float
    return {
        "n": conv(params.n),
        "m": conv(params.m),
        "d1": conv(params.delta1),
        "d2": conv(params.delta2),
        "p": conv(params.p),
        "q": conv(params.q),
    }


def coupling_fraction(n, m, d_hi, d_lo, kappa_hi, kappa_lo):
    """The balance fraction compared against n/(2m).

    `d_hi` is the larger damping order, `kappa_hi` the exponent paired with
    it under that ordering (q when delta1 >= delta2, p otherwise).
    """
    pq = kappa_hi * kappa_lo
    num = 1 + kappa_hi * (1 - d_lo) / (1 - d_hi) + (pq - 1) * d_lo
    den = (kappa_hi - 1) * (d_hi - d_lo) / (1 - d_lo) + pq - 1
    return num / den


def _existence_checks(v: dict, ordering: str) -> list:
    """Checks of one global-existence regime on generic (float/Fraction) values."""
    n, m, p, q = v["n"], v["m"], v["p"], v["q"]
    if ordering == "d1_ge_d2":
        d_hi, d_lo = v["d1"], v["d2"]
        kappa_hi, kappa_lo = q, p
    else:
        d_hi, d_lo = v["d2"], v["d1"]
        kappa_hi, kappa_lo = p, q
    checks = []

    checks.append(ConditionCheck("delta_order", d_hi >= d_lo, float(d_hi - d_lo)))

    if m == 2:
        raise ValueError("existence checks require m < 2")
    m0 = 2 * m / (2 - m)
    gate = n - 2 * m0 * d_hi
    checks.append(ConditionCheck("dim_gate", gate > 0, float(gate)))

    two_over_m = 2 / m
    if n <= 2:
        margin = min(p - two_over_m, q - two_over_m)
        holds = margin >= 0
    elif n <= 4 / (2 - m):
        upper = n / (n - 2)
        margin = min(p - two_over_m, q - two_over_m, upper - p, upper - q)
        holds = margin >= 0
    else:
        margin = 4 / (2 - m) - n
        holds = False
    checks.append(ConditionCheck("gn_range", bool(holds), float(margin)))

    frac = coupling_fraction(n, m, d_hi, d_lo, kappa_hi, kappa_lo)
    margin = n / (2 * m) - frac
    checks.append(ConditionCheck("coupling_balance", margin > 0, float(margin)))

    den_lo = n - 2 * m * d_lo
    den_hi = n - 2 * m * d_hi
    if den_hi <= 0 or den_lo <= 0:
        checks.append(ConditionCheck("exponent_split", False, -math.inf))
    else:
        thr_lo = 1 + 2 * m / den_lo   # bound on the smaller exponent
        thr_hi = 1 + 2 * m / den_hi   # bound the larger exponent must exceed
        holds = (kappa_lo <= thr_lo) and (thr_lo <= thr_hi) and (thr_hi < kappa_hi)
        margin = min(thr_lo - kappa_lo, kappa_hi - thr_hi)
        checks.append(ConditionCheck("exponent_split", bool(holds), float(margin)))
    return checks


def _blowup_l1_checks(v: dict) -> list:
    """Nonexistence condition for positive-mean integrable data."""
    n, p, q = v["n"], v["p"], v["q"]
    d1, d2 = v["d1"], v["d2"]
    candidates = []
    if d1 >= d2:
        candidates.append(coupling_fraction(n, 1, d1, d2, q, p))
    if d2 >= d1:
        candidates.append(coupling_fraction(n, 1, d2, d1, p, q))
    frac = max(candidates)
    margin = frac - n / 2
    return [ConditionCheck("blowup_threshold", margin >= 0, float(margin))]


def _blowup_lm_checks(v: dict) -> list:
    """Nonexistence condition for slowly decaying non-integrable data."""
    n, m, p, q = v["n"], v["m"], v["p"], v["q"]
    d1, d2 = v["d1"], v["d2"]
    checks = [ConditionCheck("equal_deltas", d1 == d2, -abs(float(d1 - d2)))]
    m_margin = min(m - 1, 2 - m)
    checks.append(ConditionCheck("m_range", m_margin > 0, float(m_margin)))
    delta = d1
    lhs = (n - 2 * m * delta) / (2 * m)
    rhs = (1 + max(p, q)) / (p * q - 1)
    margin = rhs - lhs
    checks.append(ConditionCheck("slow_decay_threshold", margin > 0, float(margin)))
    return checks


def _resolve_near_boundary(params: SystemParams, checks: list, builder) -> list:
    """Re-derive boundary-tight verdict bits in exact rational arithmetic."""
    if all(abs(c.margin) > BOUNDARY_EPS or not math.isfinite(c.margin) for c in checks):
        return checks
    exact = builder(_vals(params, exact=True))
    out = []
    for c_f, c_e in zip(checks, exact):
        if abs(c_f.margin) <= BOUNDARY_EPS and math.isfinite(c_f.margin):
            out.append(ConditionCheck(c_f.cond_id, c_e.holds, c_f.margin))
        else:
            out.append(c_f)
    return out


def check_existence_delta1_ge(params: SystemParams) -> RegionVerdict:
    """Global-existence hypotheses in the delta1 >= delta2 regime."""
    builder = lambda v: _existence_checks(v, "d1_ge_d2")
    checks = _resolve_near_boundary(params, builder(_vals(params, False)), builder)
    ok = all(c.holds for c in checks)
    verdict = Verdict.EXISTENCE_DELTA1_GE if ok else Verdict.UNDETERMINED
    return RegionVerdict(verdict, tuple(checks))


def check_existence_delta2_ge(params: SystemParams) -> RegionVerdict:
    """Global-existence hypotheses in the delta2 >= delta1 regime."""
    builder = lambda v: _existence_checks(v, "d2_ge_d1")
    checks = _resolve_near_boundary(params, builder(_vals(params, False)), builder)
    ok = all(c.holds for c in checks)
    verdict = Verdict.EXISTENCE_DELTA2_GE if ok else Verdict.UNDETERMINED
    return RegionVerdict(verdict, tuple(checks))


def check_blowup(params: SystemParams) -> RegionVerdict:
    """Nonexistence classification.

    The slow-decay-data result is reported when its gates hold (equal damping
    orders, m strictly inside (1, 2)) and its threshold is strictly satisfied;
    it reaches below the integrable-data threshold for m > 1, which is why it
    takes precedence.  Its critical boundary is reported as undetermined,
    never as blow-up, because sharpness there is open.  Otherwise the
    integrable-data condition decides (non-strict: its boundary still blows
    up, for positive-mean data).
    """
    notes = []
    lm = _resolve_near_boundary(params, _blowup_lm_checks(_vals(params, False)),
                                _blowup_lm_checks)
    l1 = _resolve_near_boundary(params, _blowup_l1_checks(_vals(params, False)),
                                _blowup_l1_checks)
    gates_ok = lm[0].holds and lm[1].holds
    if gates_ok and lm[2].holds and abs(lm[2].margin) > BOUNDARY_EPS:
        return RegionVerdict(Verdict.BLOWUP_LM_DATA, tuple(lm + l1), tuple(notes))
    if all(c.holds for c in l1):
        if abs(l1[0].margin) <= BOUNDARY_EPS:
            notes.append("on the critical boundary of the integrable-data condition")
        return RegionVerdict(Verdict.BLOWUP_L1_DATA, tuple(lm + l1), tuple(notes))
    if gates_ok and abs(lm[2].margin) <= BOUNDARY_EPS:
        notes.append("slow-decay critical boundary: sharpness open, left undetermined")
    return RegionVerdict(Verdict.UNDETERMINED, tuple(lm + l1), tuple(notes))


def classify(params: SystemParams) -> RegionVerdict:
    """Single-point classification combining both existence regimes and blow-up."""
    ex1 = check_existence_delta1_ge(params)
    if ex1.verdict.is_existence:
        return ex1
    ex2 = check_existence_delta2_ge(params)
    if ex2.verdict.is_existence:
        return ex2
    bl = check_blowup(params)
    if bl.verdict.is_blowup:
        return bl
    # Surface the most informative margins for undetermined points.
    checks = (ex1.checks if params.delta1 >= params.delta2 else ex2.checks) + bl.checks
    return RegionVerdict(Verdict.UNDETERMINED, checks, bl.notes)


@dataclass(frozen=True)
class ReductionReport:
    delta: float
    coupling_margin: Fraction
    reference_margin: Fraction
    equivalent: bool
    partition_ok: bool


def reduction_identities(params: SystemParams) -> ReductionReport:
    """Equal-damping reductions of the coupling condition, in exact arithmetic.

    With delta1 = delta2 = delta and m = 1 the strict coupling condition is
    algebraically identical to

        (1 + max(p, q)) / (pq - 1)  <  (n - 2*delta) / 2,

    which at delta = 1/2 and delta = 0 is the known single-family threshold
    in its two classical forms.  Also verifies that the blow-up condition is
    the exact closed complement (margins are negatives of each other).
    """
    if params.delta1 != params.delta2:
        raise ValueError("reduction_identities: requires delta1 == delta2")
    if params.m != 1:
        raise ValueError("reduction_identities: the reductions are stated at m = 1")
    v = _vals(params, exact=True)
    n, p, q, d = v["n"], v["p"], v["q"], v["d1"]
    frac = max(coupling_fraction(n, 1, d, d, q, p),
               coupling_fraction(n, 1, d, d, p, q))
    coupling_margin = n / Fraction(2) - frac
    reference_margin = (n - 2 * d) / Fraction(2) - (1 + max(p, q)) / (p * q - 1)
    blowup_margin = frac - n / Fraction(2)
    return ReductionReport(
        delta=float(d),
        coupling_margin=coupling_margin,
        reference_margin=reference_margin,
        equivalent=(coupling_margin == reference_margin),
        partition_ok=(blowup_margin == -coupling_margin),
    )


@dataclass(frozen=True)
class SweepResult:
    params: SystemParams
    p_values: np.ndarray
    q_values: np.ndarray
    rows: list  # row-major (p outer, q inner) tuples


def sweep(params: SystemParams, p_range, q_range, resolution) -> SweepResult:
    """Classify a rectangular (p, q) lattice; rows suit direct CSV emission.

    Each row is (p, q, verdict, margins) with margins for the coupling
    condition, the exponent-split condition and the blow-up threshold taken
    from the applicable regime.
    """
    if isinstance(resolution, int):
        res_p = res_q = resolution
    else:
        res_p, res_q = resolution
    for r in (res_p, res_q):
        if not (1 <= r <= 2000):
            raise ValueError(f"sweep: resolution per axis must be in [1, 2000], got {r}")
    for name, (lo, hi) in (("p_range", p_range), ("q_range", q_range)):
        if not (lo > 1.0 and hi >= lo):
            raise ValueError(f"sweep: {name} must lie within (1, inf), got ({lo}, {hi})")

    p_values = np.linspace(p_range[0], p_range[1], res_p)
    q_values = np.linspace(q_range[0], q_range[1], res_q)
    ordering = "d1_ge_d2" if params.delta1 >= params.delta2 else "d2_ge_d1"
    rows = []
    for p in p_values:
        for q in q_values:
            pt = SystemParams(params.n, params.m, params.delta1, params.delta2,
                              float(p), float(q))
            rv = classify(pt)
            v = _vals(pt, False)
            by_id = {c.cond_id: c.margin for c in _existence_checks(v, ordering)}
            by_id.update({c.cond_id: c.margin for c in _blowup_l1_checks(v)})
            margins = {key: by_id[key] for key in
                       ("coupling_balance", "exponent_split", "blowup_threshold")}
            rows.append((float(p), float(q), rv.verdict, margins))
    return SweepResult(params, p_values, q_values, rows)
