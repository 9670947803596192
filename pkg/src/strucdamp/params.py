"""The parameter tuple every hypothesis check and rate formula reads."""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["SystemParams"]


@dataclass(frozen=True)
class SystemParams:
    """Full parameter set (n, m, delta1, delta2, p, q) of the coupled system.

    Fields accept any real number type and are stored as given; passing
    `fractions.Fraction` values keeps downstream threshold identities exact.
    m = 2 is admitted so that the rate calculators can express pure L2 -> L2
    estimates as the m -> 2 instance of the mixed-norm formulas; the theorem
    classifiers and the data generators require m < 2.
    """

    n: int
    m: float
    delta1: float
    delta2: float
    p: float
    q: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not (1 <= self.m <= 2):
            raise ValueError(f"m must lie in [1, 2], got {self.m}")
        for name in ("delta1", "delta2"):
            d = getattr(self, name)
            if not (0 <= d <= 0.5):
                raise ValueError(f"{name} must lie in [0, 0.5], got {d}")
        if not (self.p > 1 and self.q > 1):
            raise ValueError(f"p and q must exceed 1, got p={self.p}, q={self.q}")

    @property
    def m0(self):
        """Conjugated data exponent 2m/(2-m); unbounded at m = 2."""
        if self.m == 2:
            return math.inf
        return 2 * self.m / (2 - self.m)

    def swapped(self) -> "SystemParams":
        """Roles of the two components exchanged: (u, p, delta1) <-> (v, q, delta2)."""
        return SystemParams(self.n, self.m, self.delta2, self.delta1, self.q, self.p)
