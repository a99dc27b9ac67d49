"""Numeric termination-time bounds derived from a checked certificate.

Rational bounds (expected-time bounds, the inverse-linear tail bound) are
exact; only the exponential and square-root tail formulas go through
floating point, evaluated at 40 significant digits before rounding to a
double.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

import mpmath

from .certificates import Certificate
from .cfg import Cfg
from .extreal import ExtReal
from .semantics import StackElement

_DPS = 40


class BoundError(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    """One computed bound with the data needed to audit it."""

    rule: str
    entry: str
    params: Dict[str, str]
    value: Union[str, float]
    validity: str = ""

    def to_json_dict(self) -> Dict:
        return {
            "rule": self.rule,
            "entry": self.entry,
            "params": dict(self.params),
            "value": self.value,
            "validity": self.validity,
        }

    def render(self) -> str:
        params = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        text = f"{self.rule}: {self.value}   [{params}]"
        if self.validity:
            text += f"   valid: {self.validity}"
        return text


def cert_value_at(cert: Certificate, cfg: Cfg, entry: StackElement) -> ExtReal:
    fn = cfg.function(entry.fname)
    return cert.value(entry.fname, entry.label, entry.valuation,
                      is_terminal=entry.label == fn.exit)


def upper_expected(cert: Certificate, eps: Fraction, entry_value: ExtReal) -> ExtReal:
    """Expected-time upper bound value/eps (infinite when the value is)."""
    if Fraction(eps) <= 0:
        raise BoundError("eps must be positive")
    return entry_value / Fraction(eps)


def lower_expected(cert: Certificate, delta: Fraction, entry_value: ExtReal) -> ExtReal:
    """Expected-time lower bound value/delta; needs a finite value."""
    if Fraction(delta) <= 0:
        raise BoundError("delta must be positive")
    if entry_value.is_infinite:
        raise BoundError("lower bound requires a finite certificate value at the entry")
    return entry_value / Fraction(delta)


def markov_tail(eps: Fraction, entry_value: ExtReal, k: int) -> Fraction:
    """P(T >= k) <= value/(eps*k), clamped to [0, 1]; exact rational."""
    if k < 1:
        raise BoundError("k must be at least 1")
    if Fraction(eps) <= 0:
        raise BoundError("eps must be positive")
    if entry_value.is_infinite:
        return Fraction(1)
    bound = entry_value.fraction / (Fraction(eps) * k)
    return min(Fraction(1), bound)


def concentration_tail(eps: Fraction, zeta: Fraction, entry_value: ExtReal,
                       n: int) -> Tuple[float, float]:
    """Exponential bound on P(T > n) for per-outcome-bounded certificates.

    Returns (exact form, looser factored form):

        exp(-(eps*n - value)^2 / (2*n*(eps+zeta)^2))
        exp(eps*value/(eps+zeta)^2) * exp(-eps^2*n / (2*(eps+zeta)^2))

    Only valid for n strictly above value/eps.
    """
    eps = Fraction(eps)
    zeta = Fraction(zeta)
    if eps <= 0 or zeta <= 0:
        raise BoundError("eps and zeta must be positive")
    if entry_value.is_infinite:
        raise BoundError("concentration bound requires a finite certificate value")
    h0 = entry_value.fraction
    if Fraction(n) * eps <= h0:
        raise BoundError(
            f"n={n} is outside the validity domain n > {h0}/{eps} = {h0/eps}")
    with mpmath.workdps(_DPS):
        denom = 2 * n * (eps + zeta) ** 2
        exact = mpmath.e ** (-_mpf((eps * n - h0) ** 2 / denom))
        factored = (mpmath.e ** _mpf(eps * h0 / (eps + zeta) ** 2)
                    * mpmath.e ** (-_mpf(eps * eps * n / (2 * (eps + zeta) ** 2))))
        return float(min(exact, mpmath.mpf(1))), float(factored)


@dataclass(frozen=True)
class SqrtTailResult:
    ok: bool
    bound: Optional[float]
    k: int
    min_valid_k: Optional[int] = None

    def render(self) -> str:
        if self.ok:
            return f"P(T >= {self.k}) <= {self.bound:.6g}"
        return (f"k={self.k} too small for this bound; "
                f"smallest usable k is {self.min_valid_k}")


def _mpf(q: Fraction) -> mpmath.mpf:
    q = Fraction(q)
    return mpmath.mpf(q.numerator) / mpmath.mpf(q.denominator)


def _smallness_holds(zeta: Fraction, delta: Fraction, k: int) -> bool:
    """exp(c*t) - (1 + c*t + c^2 t^2/2) <= (delta^2/4) t^2 at t = 1/sqrt(k),
    with c the per-outcome difference bound."""
    with mpmath.workdps(_DPS):
        t = 1 / mpmath.sqrt(k)
        c = _mpf(zeta)
        lhs = mpmath.e ** (c * t) - (1 + c * t + c * c * t * t / 2)
        rhs = _mpf(Fraction(delta) ** 2 / 4) * t * t
        return lhs <= rhs


def sqrt_tail(entry_value: ExtReal, delta: Fraction, zeta: Fraction,
              K: int, k: int) -> SqrtTailResult:
    """Inverse-square-root tail bound for never-increasing certificates.

    With t = 1/sqrt(k):

        P(T >= k) <= (1 - exp(-value*t)) / (1 - (1 + (delta^2/4) t^2)^(-floor(k/K)))

    valid once t is small enough that the cubic-and-higher terms of
    exp(zeta*t) are dominated by (delta^2/4) t^2; below that threshold the
    result reports the smallest usable k (found by doubling then bisection).
    The bound is clamped to [0, 1] and degenerates to 1 when k < K.
    """
    delta = Fraction(delta)
    zeta = Fraction(zeta)
    if delta <= 0 or zeta <= 0:
        raise BoundError("delta and zeta must be positive")
    if K < 1 or k < 1:
        raise BoundError("K and k must be at least 1")
    if entry_value.is_infinite or entry_value == ExtReal(0):
        raise BoundError(
            "sqrt tail bound requires a finite, positive certificate value at the entry")

    if not _smallness_holds(zeta, delta, k):
        lo = k
        hi = k
        while not _smallness_holds(zeta, delta, hi):
            hi *= 2
            if hi > 2 ** 80:
                raise BoundError("no usable k found for the smallness condition")
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if _smallness_holds(zeta, delta, mid):
                hi = mid
            else:
                lo = mid
        return SqrtTailResult(ok=False, bound=None, k=k, min_valid_k=hi)

    periods = k // K
    if periods == 0:
        return SqrtTailResult(ok=True, bound=1.0, k=k)
    with mpmath.workdps(_DPS):
        t = 1 / mpmath.sqrt(k)
        numerator = 1 - mpmath.e ** (-_mpf(entry_value.fraction) * t)
        base = 1 + _mpf(delta ** 2 / 4) * t * t
        denominator = 1 - base ** (-periods)
        bound = numerator / denominator
        return SqrtTailResult(ok=True, bound=float(min(bound, mpmath.mpf(1))), k=k)
