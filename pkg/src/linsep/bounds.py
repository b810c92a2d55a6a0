"""Achievable rate and converse bounds.

Finite-field bounds are floats (logarithms of exact binomials); the
degrees-of-freedom bound is an exact ``Fraction``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .scheme import ProblemInstance, rate_formula

# slack used when comparing float bounds against integer rates
BOUND_TOL = 1e-9

THEOREM_GAP = 3
NONDIVISIBLE_GAP_FINITE = 8
NONDIVISIBLE_GAP_REAL = 4


class BoundViolation(AssertionError):
    pass


def rate_achievable(instance: ProblemInstance) -> int:
    return rate_formula(instance)


def _log(n: int, q: int) -> float:
    # math.log handles arbitrarily large ints without overflow
    return math.log(n) / math.log(q) if n > 1 else 0.0


def counting_bound(K: int, L: int, M: int, delta: int, q: int) -> float:
    """The counting term ``LK / (delta + M + log C(L,delta) + log C(K,M) - log(q-1))``, logs base q."""
    if q < 2:
        raise ValueError(f"field size must be >= 2, got {q}")
    denom = delta + M + _log(math.comb(L, delta), q) + _log(math.comb(K, M), q) - _log(q - 1, q)
    return L * K / denom


def lower_bound_fq(instance: ProblemInstance, q: int | None = None) -> float:
    q = instance.field.q if q is None else q
    if q is None:
        raise ValueError("finite-field bound needs a field size")
    return max(float(instance.L), counting_bound(instance.K, instance.L, instance.M, instance.delta, q))


def lower_bound_large_q(instance: ProblemInstance) -> Fraction:
    return max(Fraction(instance.L), Fraction(instance.L * instance.K, instance.block_width))


def lower_bound_real(instance: ProblemInstance) -> Fraction:
    """Degrees-of-freedom bound; same closed form as the large-q limit."""
    return max(Fraction(instance.L), Fraction(instance.L * instance.K, instance.block_width))


def divisibility(instance: ProblemInstance) -> tuple[bool, bool]:
    return instance.L % instance.delta == 0, instance.K % instance.block_width == 0


@dataclass
class BoundsReport:
    K: int
    L: int
    M: int
    delta: int
    q: int | None
    rate_formula: int
    lb_finite_q: float | None
    lb_finite_q_ceil: int | None
    lb_large_q: Fraction
    lb_real: Fraction
    lb_real_ceil: int
    gap_finite_q: float | None
    gap_real: Fraction
    delta_divides_L: bool
    width_divides_K: bool
    q_ge_K: bool
    findings: list[str] = field(default_factory=list)

    @property
    def gap_claim_holds(self) -> bool:
        return not self.findings

    @property
    def divisible(self) -> bool:
        return self.delta_divides_L and self.width_divides_K

    def to_json(self) -> dict:
        return {
            "K": self.K, "L": self.L, "M": self.M, "delta": self.delta, "q": self.q,
            "rate_formula": self.rate_formula,
            "lb_finite_q": self.lb_finite_q,
            "lb_finite_q_ceil": self.lb_finite_q_ceil,
            "lb_large_q": _frac_str(self.lb_large_q),
            "lb_real": _frac_str(self.lb_real),
            "lb_real_ceil": self.lb_real_ceil,
            "gap_finite_q": self.gap_finite_q,
            "gap_real": _frac_str(self.gap_real),
            "delta_divides_L": self.delta_divides_L,
            "width_divides_K": self.width_divides_K,
            "q_ge_K": self.q_ge_K,
            "gap_claim_holds": self.gap_claim_holds,
            "findings": list(self.findings),
        }


def _frac_str(x: Fraction) -> str | int:
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def gap_report(instance: ProblemInstance, q: int | None = None) -> BoundsReport:
    """All bounds for one instance.

    ``gap_claim_holds`` tells whether the claimed worst-case ratio applies
    and is met: at most 3 for divisible parameters with ``q >= K``, at most 8
    (finite field) and 4 (rationals) otherwise.  Failures are also described
    in ``findings``.  Known counterexamples to the factor-3 claim exist for
    small ``q`` and ``M = delta = 1``, e.g. ``(K, L, M, delta, q) = (5, 5, 1, 1, 5)``.
    """
    q = instance.field.q if q is None else q
    rate = rate_achievable(instance)
    dL, wK = divisibility(instance)
    large = lower_bound_large_q(instance)
    real = lower_bound_real(instance)
    gap_real = Fraction(rate) / real
    lb_q = gap_q = None
    q_ge_K = q is not None and q >= instance.K
    if q is not None:
        lb_q = lower_bound_fq(instance, q)
        gap_q = rate / lb_q
    report = BoundsReport(
        instance.K, instance.L, instance.M, instance.delta, q, rate,
        lb_q, None if lb_q is None else math.ceil(lb_q - BOUND_TOL),
        large, real, math.ceil(real), gap_q, gap_real, dL, wK, q_ge_K,
    )

    if dL and wK:
        if gap_real != 1:
            raise BoundViolation(f"divisible instance with rate/lb_real = {gap_real}")
        if q_ge_K and not 1 - BOUND_TOL <= gap_q <= THEOREM_GAP + BOUND_TOL:
            report.findings.append(f"rate/lb_finite_q = {gap_q:.6f} outside [1, {THEOREM_GAP}]")
    else:
        if gap_real > NONDIVISIBLE_GAP_REAL:
            report.findings.append(f"rate/lb_real = {gap_real} exceeds {NONDIVISIBLE_GAP_REAL}")
        if q_ge_K and gap_q > NONDIVISIBLE_GAP_FINITE + BOUND_TOL:
            report.findings.append(f"rate/lb_finite_q = {gap_q:.6f} exceeds {NONDIVISIBLE_GAP_FINITE}")
    return report


CSV_COLUMNS = [
    "K", "L", "M", "delta", "q", "rate_formula", "rate_achieved",
    "lb_finite_q", "lb_finite_q_ceil", "lb_large_q", "lb_real", "lb_real_ceil",
    "gap_finite_q", "gap_real", "delta_divides_L", "width_divides_K", "q_ge_K", "gap_claim_holds", "findings",
]
