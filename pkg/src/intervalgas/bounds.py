"""Convergence radii and rigorous truncation tails for the two expansions.

Oscillator kernel: the order-n majorant is

    g^n/n! * 4^{n-1} 2^n Lambda^{2n-2} n^{n-2},        g = lambda^2/4,

(order 1 instead uses 2 g M(-2)); bounding n^{n-2} <= n! e^{n-2} turns it
into a geometric series with ratio (lambda/lambda0)^2, lambda0 =
(2 e Lambda^2)^{-1/2}.

Translation-invariant kernel: the order-n majorant is

    g^n * 2^{4n-2}/(n(n-1)) * (1-|P|)^{-3n+2} * M(-2)^n      (n >= 2),

with order 1 equal to lambda^2 M(-2) / (2 (1-|P|)); its geometric ratio is
4 lambda^2 M(-2) / (1-|P|)^3.  Reported totals are +inf whenever the
geometric ratio reaches 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DivergentIntegralError
from .model import RadialCutoff, capital_lambda, moment

TERMS_STORED = 32
_REL_CUTOFF = 1e-18
_MAX_TERMS = 20000


@dataclass(frozen=True)
class TailBound:
    """Per-order bound terms from `start_order` on, and their total.

    `total` is +inf when the geometric ratio is >= 1.  `majorant_terms`
    (oscillator only) holds the geometric majorant alongside the exact
    combinatorial terms; the majorant dominates termwise for n >= 2.
    """

    start_order: int
    terms: tuple[float, ...]
    total: float
    radius: float
    ratio: float
    majorant_terms: tuple[float, ...] = ()

    def __post_init__(self):
        if any(t < 0 for t in self.terms):
            raise ValueError("tail terms must be nonnegative")


def lambda0_ho(cutoff: RadialCutoff, d: int, n_cap: int = 200) -> float:
    """Oscillator radius (2 e Lambda^2)^{-1/2}."""
    lam_cap = capital_lambda(cutoff, d, n_cap)
    return (2.0 * math.e * lam_cap.value ** 2) ** -0.5


def lambda0_translation(cutoff: RadialCutoff, d: int, p_abs: float) -> float:
    """Translation-invariant radius (1/2) (1-|P|)^{3/2} M(-2)^{-1/2}.

    This is the coupling at which the geometric ratio of the order-n
    majorants reaches 1, so the reported tail diverges exactly there; the
    radius shrinks as |P| -> 1.
    """
    if not 0.0 <= p_abs < 1.0:
        raise ValueError("need |P| < 1")
    m2 = moment(cutoff, -2.0, d)
    return 0.5 * (1.0 - p_abs) ** 1.5 / math.sqrt(m2)


def lambda0_translation_theorem(cutoff: RadialCutoff, d: int,
                                p_abs: float) -> float:
    """The analyticity-theorem statement as printed: (1/2) (1-|P|)^{-3/2}
    M(-2)^{-1/2}.

    The printed exponent makes this grow as |P| -> 1 while the termwise
    majorant forces the radius to shrink; both forms are exposed so the
    discrepancy is visible instead of silently resolved.  They agree at
    P = 0.
    """
    if not 0.0 <= p_abs < 1.0:
        raise ValueError("need |P| < 1")
    m2 = moment(cutoff, -2.0, d)
    return 0.5 * (1.0 - p_abs) ** -1.5 / math.sqrt(m2)


def _sum_terms(term_fn, from_order: int, ratio: float) -> float:
    """Sum term_fn(n) from `from_order`; +inf when the ratio is >= 1,
    otherwise a numeric sum plus a geometric remainder bound.

    The >= 1 test carries a 1e-12 slack so that evaluating exactly at the
    radius reports a divergent tail despite rounding in the ratio.
    """
    if ratio >= 1.0 - 1e-12:
        return math.inf
    total = 0.0
    n = from_order
    last = 0.0
    while n < from_order + _MAX_TERMS:
        last = term_fn(n)
        total += last
        if last <= _REL_CUTOFF * total:
            break
        n += 1
    return total + last * ratio / (1.0 - ratio)


def gamma_tail_translation(lam: float, p_abs: float, cutoff: RadialCutoff,
                           d: int, from_order: int = 1) -> TailBound:
    """Rigorous tail of the translation-invariant energy series."""
    if not 0.0 <= p_abs < 1.0:
        raise ValueError("need |P| < 1")
    if from_order < 1:
        raise ValueError("from_order must be >= 1")
    m2 = moment(cutoff, -2.0, d)
    g = 0.25 * lam * lam
    one_m = 1.0 - p_abs
    ratio = 4.0 * lam * lam * m2 / one_m ** 3

    def term(n: int) -> float:
        if lam == 0.0:
            return 0.0
        if n == 1:
            return lam * lam * m2 / (2.0 * one_m)
        logt = n * math.log(g * m2) + (4 * n - 2) * math.log(2.0) \
            + (-3 * n + 2) * math.log(one_m) - math.log(n * (n - 1))
        return math.exp(logt)

    terms = tuple(term(n) for n in range(from_order,
                                         from_order + TERMS_STORED))
    total = 0.0 if lam == 0.0 else _sum_terms(term, from_order, ratio)
    return TailBound(start_order=from_order, terms=terms, total=total,
                     radius=lambda0_translation(cutoff, d, p_abs),
                     ratio=ratio)


def gamma_tail_oscillator(lam: float, cutoff: RadialCutoff, d: int,
                          from_order: int = 1, n_cap: int = 200) -> TailBound:
    """Rigorous tail of the oscillator energy series.

    `terms` are the exact combinatorial bounds (Cayley-counted trees);
    `majorant_terms` apply n^{n-2} <= n! e^{n-2}, which holds from n = 2,
    so the order-1 majorant is kept equal to the exact order-1 term.
    """
    if from_order < 1:
        raise ValueError("from_order must be >= 1")
    lam_cap = capital_lambda(cutoff, d, n_cap)
    big = lam_cap.value
    m2 = moment(cutoff, -2.0, d)
    radius = (2.0 * math.e * big * big) ** -0.5
    g = 0.25 * lam * lam
    ratio = (lam / radius) ** 2

    def term(n: int) -> float:
        if lam == 0.0:
            return 0.0
        if n == 1:
            return 2.0 * g * m2
        logt = n * math.log(g) + (n - 1) * math.log(4.0) \
            + n * math.log(2.0) + (2 * n - 2) * math.log(big) \
            + (n - 2) * math.log(n) - math.lgamma(n + 1)
        return math.exp(logt)

    def majorant(n: int) -> float:
        if lam == 0.0:
            return 0.0
        if n == 1:
            return term(1)
        logt = n * math.log(g) + (n - 1) * math.log(4.0) \
            + n * math.log(2.0) + (2 * n - 2) * math.log(big) + (n - 2)
        return math.exp(logt)

    orders = range(from_order, from_order + TERMS_STORED)
    terms = tuple(term(n) for n in orders)
    majorants = tuple(majorant(n) for n in orders)
    total = 0.0 if lam == 0.0 else _sum_terms(term, from_order, ratio)
    return TailBound(start_order=from_order, terms=terms, total=total,
                     radius=radius, ratio=ratio, majorant_terms=majorants)
