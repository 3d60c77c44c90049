"""Monomial intervals, dyadic annuli and exponent arithmetic.

All exponent helpers work in exact rational arithmetic (``fractions.Fraction``)
when their inputs are ints, Fractions or rational strings such as ``"4/3"``;
float inputs are handled in floating point with a 1e-12 relative tolerance.
Infinite exponents are represented by ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from .hypersurface import RadialPhase

Number = Union[int, float, Fraction]
INF = math.inf

__all__ = [
    "MonomialInterval",
    "DyadicAnnulus",
    "AdmissibilityReport",
    "UnweightedRange",
    "OffScaling",
    "monomial_intervals",
    "owner",
    "dyadic_annuli",
    "as_exact",
    "conjugate",
    "admissible_pair",
    "unweighted_range",
    "off_scaling_exponents",
]


# ---------------------------------------------------------------------------
# monomial intervals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonomialInterval:
    """The set ``J_j`` where the term with index ``j`` dominates ``P``.

    ``lo``/``hi`` are the endpoints (``hi`` may be ``inf``; ``lo == 0`` means the
    interval is open at 0).  Empty intervals carry ``empty=True`` and
    ``lo = hi = nan`` so that list positions still match term indices.
    """

    index: int
    lo: float
    hi: float
    exponent: float
    coefficient: float
    empty: bool = False

    def contains(self, t: float) -> bool:
        if self.empty or not t > 0:
            return False
        return self.lo <= t <= self.hi

    def __str__(self) -> str:
        if self.empty:
            return f"J_{self.index} = {{}}"
        left = "(" if self.lo == 0 else "["
        right = ")" if math.isinf(self.hi) else "]"
        return f"J_{self.index} = {left}{self.lo:.17g}, {self.hi:.17g}{right}"


def _log_gap(a_i, e_i, a_j, e_j, t):
    """log(a_j t^e_j) - log(a_i t^e_i), overflow-free."""
    lt = math.log(t)
    return (math.log(a_j) + e_j * lt) - (math.log(a_i) + e_i * lt)


def _crossing(a_i: float, e_i: float, a_j: float, e_j: float) -> float:
    """Point where ``a_j t^e_j`` overtakes ``a_i t^e_i`` (``e_j > e_i``).

    Closed form ``(a_i/a_j)^{1/(e_j-e_i)}`` followed by bisection down to
    adjacent floats, returning the smallest float at which the higher term is
    at least as large.
    """
    t0 = math.exp((math.log(a_i) - math.log(a_j)) / (e_j - e_i))
    lo, hi = t0, t0
    step = 0
    while _log_gap(a_i, e_i, a_j, e_j, lo) >= 0 and step < 64:
        lo = lo * (1 - 2.0 ** (-50 + step))
        step += 1
    step = 0
    while _log_gap(a_i, e_i, a_j, e_j, hi) < 0 and step < 64:
        hi = hi * (1 + 2.0 ** (-50 + step))
        step += 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _log_gap(a_i, e_i, a_j, e_j, mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def monomial_intervals(P: RadialPhase) -> list[MonomialInterval]:
    """Decompose ``(0, inf)`` into the intervals ``J_j`` where term ``j`` is maximal.

    Works on the upper envelope of the lines ``log a_i + e_i s`` (``s = log t``).
    A boundary point belongs to the lower-index interval; terms that never
    strictly dominate on an open set (including zero coefficients) come back
    as empty intervals.  In polynomial mode the returned list has one entry per
    index ``1..N``.
    """
    terms = [(idx, e, a) for idx, e, a in zip(P.indices, P.exponents, P.coefficients)]
    active = [t for t in terms if t[2] > 0]
    # upper envelope; slopes (exponents) already strictly increasing
    hull: list[tuple[int, float, float]] = []
    for line in active:
        while len(hull) >= 2:
            (_, e1, a1), (_, e2, a2) = hull[-2], hull[-1]
            _, e3, a3 = line
            s12 = (math.log(a1) - math.log(a2)) / (e2 - e1)
            s13 = (math.log(a1) - math.log(a3)) / (e3 - e1)
            if s13 <= s12:
                hull.pop()
            else:
                break
        hull.append(line)
    bounds = {}
    for pos, (idx, e, a) in enumerate(hull):
        lo = 0.0 if pos == 0 else _crossing(hull[pos - 1][2], hull[pos - 1][1], a, e)
        hi = INF if pos == len(hull) - 1 else _crossing(a, e, hull[pos + 1][2], hull[pos + 1][1])
        bounds[idx] = (lo, hi)
    all_indices = list(range(1, P.degree_bound + 1)) if P.is_polynomial else list(P.indices)
    out = []
    for idx in all_indices:
        e, a = P.term(idx)
        if idx in bounds and bounds[idx][0] < bounds[idx][1]:
            lo, hi = bounds[idx]
            out.append(MonomialInterval(idx, lo, hi, e, a))
        else:
            out.append(MonomialInterval(idx, math.nan, math.nan, e, a, empty=True))
    return out


def owner(intervals: Iterable[MonomialInterval], t: float) -> int:
    """Index of the interval owning ``t`` (ties go to the lower index)."""
    for J in intervals:
        if J.contains(t):
            return J.index
    raise ValueError(f"t={t!r} not covered")


# ---------------------------------------------------------------------------
# dyadic annuli
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DyadicAnnulus:
    """``I_k = J_j cap [2^{-k-1}, 2^{-k}]``; the annulus is ``{|xi| in I_k}``."""

    j: int
    k: int
    lo: float
    hi: float
    truncated: bool

    @property
    def full(self) -> tuple[float, float]:
        return 2.0 ** (-self.k - 1), 2.0 ** (-self.k)

    def contains(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return (r >= self.lo) & (r <= self.hi)


def dyadic_annuli(J: MonomialInterval, k_range: tuple[int, int]) -> list[DyadicAnnulus]:
    """Nonempty intersections of ``J`` with ``[2^{-k-1}, 2^{-k}]`` for ``k`` in ``k_range``.

    ``k_range = (k_min, k_max)`` is inclusive.  Annuli that do not fill their
    dyadic shell (at most the two end ones) are flagged ``truncated``;
    single-point intersections are kept and flagged.
    """
    k_min, k_max = int(k_range[0]), int(k_range[1])
    if k_max < k_min:
        raise ValueError("empty k_range")
    out = []
    if J.empty:
        return out
    for k in range(k_min, k_max + 1):
        a, b = 2.0 ** (-k - 1), 2.0 ** (-k)
        lo, hi = max(a, J.lo), min(b, J.hi)
        if lo > hi:
            continue
        out.append(DyadicAnnulus(J.index, k, lo, hi, truncated=(lo > a or hi < b)))
    return out


# ---------------------------------------------------------------------------
# exponent arithmetic
# ---------------------------------------------------------------------------

def as_exact(x) -> Number:
    """Convert ints, Fractions and rational strings to Fraction; leave floats alone."""
    if isinstance(x, bool):
        raise TypeError("bool is not an exponent")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return INF
        return Fraction(s)
    x = float(x)
    return x


def conjugate(p) -> Number:
    """Hölder conjugate ``p' = p/(p-1)`` with ``1' = inf`` and ``inf' = 1``."""
    p = as_exact(p)
    if p == INF:
        return Fraction(1)
    if p == 1:
        return INF
    if p < 1:
        raise ValueError("conjugate exponent requires p >= 1")
    return p / (p - 1)


def _eq(a, b) -> bool:
    if a == INF or b == INF:
        return a == b
    if isinstance(a, float) or isinstance(b, float):
        return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-15)
    return a == b


def _sub(a, b):
    if a == INF and b == INF:
        return Fraction(0)
    if a == INF:
        return INF
    if b == INF:
        return -INF
    return a - b


def _mul_inf(c, x):
    """``c * x`` for positive rational ``c`` allowing ``x = inf``."""
    return INF if x == INF else c * x


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    side: str
    q_line: Number
    residual: Number
    threshold: Number
    margin: Number

    def __bool__(self) -> bool:
        return self.admissible


def admissible_pair(p, q, d: int, side: str = "restriction") -> AdmissibilityReport:
    """Is ``(p, q)`` on the scaling line and above the threshold?

    restriction: ``q = d p'/(d+2)`` and ``q > 2(d+1)/(d+2)``;
    extension:   ``q = (d+2) p'/d`` and ``q > 2(d+1)/d``.
    ``residual = q - q_line`` and ``margin = q - threshold``.
    """
    p, q = as_exact(p), as_exact(q)
    if not (p >= 1):
        raise ValueError("need 1 <= p <= inf")
    d = int(d)
    pp = conjugate(p)
    if side == "restriction":
        q_line = _mul_inf(Fraction(d, d + 2), pp)
        threshold = Fraction(2 * (d + 1), d + 2)
    elif side == "extension":
        q_line = _mul_inf(Fraction(d + 2, d), pp)
        threshold = Fraction(2 * (d + 1), d)
    else:
        raise ValueError("side must be 'restriction' or 'extension'")
    residual = _sub(q, q_line)
    margin = _sub(q, threshold)
    ok = _eq(q, q_line) and margin > 0
    return AdmissibilityReport(bool(ok), side, q_line, residual, threshold, margin)


@dataclass(frozen=True)
class UnweightedRange:
    r_lo: Number
    r_hi: Number
    lo_included: bool
    hi_included: bool
    collapsed: bool

    def contains(self, r) -> bool:
        r = as_exact(r)
        lo_ok = r > self.r_lo or (self.lo_included and _eq(r, self.r_lo))
        hi_ok = r < self.r_hi or (self.hi_included and _eq(r, self.r_hi))
        return bool(lo_ok and hi_ok)


def _exact_exponent(k: float) -> Number:
    return Fraction(int(k)) if float(k).is_integer() else float(k)


def unweighted_range(P: RadialPhase, p, d: int, allow_infinite: bool = False) -> UnweightedRange:
    """Range ``dp'/(n_max + d) <= r <= dp'/(n_min + d)`` of unweighted target exponents.

    An endpoint ``r`` is marked included when ``r >= p`` and excluded when
    ``r < p`` (both flags are reported, not collapsed).  ``p = 1`` needs
    ``p' = inf`` and is rejected unless ``allow_infinite``.
    """
    p = as_exact(p)
    if p == 1 and not allow_infinite:
        raise ValueError("p = 1 gives p' = inf; pass allow_infinite=True to accept r = inf")
    pp = conjugate(p)
    n_min, n_max = _exact_exponent(P.n_min), _exact_exponent(P.n_max)
    r_lo = _mul_inf(1, pp) if pp == INF else d * pp / (n_max + d)
    r_hi = _mul_inf(1, pp) if pp == INF else d * pp / (n_min + d)
    return UnweightedRange(r_lo, r_hi, bool(r_lo >= p), bool(r_hi >= p), bool(_eq(r_lo, r_hi)))


@dataclass(frozen=True)
class OffScaling:
    p_tilde: Number
    p_tilde_conj: Number
    alpha_sup: Number


def off_scaling_exponents(p, q, d: int) -> OffScaling:
    """Off-scaling-line exponents: ``p~' = dq/(d+2)`` and ``alpha < d/p~ - d/p``.

    Requires ``q > max((d+2)p'/d, 2(d+1)/d)``; raises ``ValueError`` naming the
    bound that fails.
    """
    p, q = as_exact(p), as_exact(q)
    d = int(d)
    pp = conjugate(p)
    line = _mul_inf(Fraction(d + 2, d), pp)
    thresh = Fraction(2 * (d + 1), d)
    if not q > line:
        raise ValueError(f"precondition q > (d+2)p'/d = {line} fails for q = {q}")
    if not q > thresh:
        raise ValueError(f"precondition q > 2(d+1)/d = {thresh} fails for q = {q}")
    if q == INF:
        raise ValueError("q = inf gives p~ = 1; off-scaling bound undefined")
    pt_conj = Fraction(d, d + 2) * q
    pt = pt_conj / (pt_conj - 1)
    if p == INF:
        d_over_p = Fraction(0)
    elif isinstance(p, Fraction):
        d_over_p = Fraction(d) / p
    else:
        d_over_p = d / p
    alpha = Fraction(d) / pt - d_over_p
    return OffScaling(pt, pt_conj, alpha)
