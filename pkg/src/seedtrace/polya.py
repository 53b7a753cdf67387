"""Beta-binomial laws as Pólya urns, with exact rational arithmetic.

``B_{alpha,beta,n}`` is the number of white balls after ``n`` draws from an
urn started with ``alpha`` white and ``beta`` black balls, where each drawn
ball is returned together with one more of its colour. Its support is
``alpha, ..., alpha + n``.

Exact quantities are computed from integer pmf numerators over a common
denominator::

    P(B = alpha + k) = C(k+alpha-1, k) C(n-k+beta-1, n-k) / C(n+alpha+beta-1, n)

which is the factorial formula rearranged into binomial coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable

import numpy as np

from seedtrace.tree_model import as_generator


@dataclass(frozen=True)
class BetaBinomialParams:
    alpha: int
    beta: int
    n: int

    def __post_init__(self):
        for name in ("alpha", "beta", "n"):
            if not isinstance(getattr(self, name), (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
        if self.alpha < 1 or self.beta < 1:
            raise ValueError("alpha and beta must be >= 1")
        if self.n < 0:
            raise ValueError("n must be >= 0")

    @property
    def total(self) -> int:
        """Balls in the urn after all draws."""
        return self.alpha + self.beta + self.n

    @property
    def support(self) -> range:
        return range(self.alpha, self.alpha + self.n + 1)


@dataclass(frozen=True)
class UrnState:
    white: int
    black: int
    draws_made: int = 0

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.white, self.white + self.black)


@lru_cache(maxsize=4096)
def _numerators(alpha: int, beta: int, n: int) -> tuple[tuple[int, ...], int]:
    nums = tuple(comb(k + alpha - 1, k) * comb(n - k + beta - 1, n - k) for k in range(n + 1))
    return nums, comb(n + alpha + beta - 1, n)


def pmf(p: BetaBinomialParams, k: int) -> Fraction:
    """Exact ``P(B = alpha + k)`` for ``0 <= k <= n``."""
    if not 0 <= k <= p.n:
        raise ValueError(f"k={k} outside [0, {p.n}]")
    nums, den = _numerators(p.alpha, p.beta, p.n)
    return Fraction(nums[k], den)


def pmf_vector(p: BetaBinomialParams) -> list[Fraction]:
    nums, den = _numerators(p.alpha, p.beta, p.n)
    return [Fraction(c, den) for c in nums]


def pmf_float(p: BetaBinomialParams) -> np.ndarray:
    """pmf over the support as floats (for goodness-of-fit tests)."""
    nums, den = _numerators(p.alpha, p.beta, p.n)
    return np.array([float(Fraction(c, den)) for c in nums])


def expect(p: BetaBinomialParams, h: Callable[[int], int | Fraction]) -> Fraction:
    """Exact ``E[h(B)]`` by summation over the support."""
    nums, den = _numerators(p.alpha, p.beta, p.n)
    acc = 0
    for k, c in enumerate(nums):
        acc += c * h(p.alpha + k)
    return Fraction(acc) / den


def raw_moment(p: BetaBinomialParams, order: int) -> Fraction:
    """Exact ``E[B^order]``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    return expect(p, lambda b: b**order)


def factorial_moment(p: BetaBinomialParams, r: int) -> Fraction:
    """Closed form ``E[(B - alpha)_r]`` via rising factorials.

    Independent of the pmf summation; used to cross-check it.
    """
    out = Fraction(1)
    for j in range(r):
        out *= Fraction((p.n - j) * (p.alpha + j), p.alpha + p.beta + j)
    return out


def limit_moment(alpha: int, beta: int, order: int) -> Fraction:
    """``E[M_inf^order]`` for the Beta(alpha, beta) limit of the urn fraction."""
    out = Fraction(1)
    for j in range(order):
        out *= Fraction(alpha + j, alpha + beta + j)
    return out


def sample(p: BetaBinomialParams, rng, size: int | None = None):
    """Run the urn ``n`` times and return the final white count.

    Each draw is an exact integer comparison ``U < white`` with ``U``
    uniform on ``0..total-1``; with ``size`` set, that many independent urns
    are run in parallel.
    """
    gen = as_generator(rng)
    count = 1 if size is None else int(size)
    white = np.full(count, p.alpha, dtype=np.int64)
    total = p.alpha + p.beta
    for _ in range(p.n):
        white += gen.integers(0, total, size=count) < white
        total += 1
    return int(white[0]) if size is None else white


def urn_step(state: UrnState) -> list[tuple[Fraction, UrnState]]:
    """Exact one-step transition law of the urn."""
    tot = state.white + state.black
    return [
        (Fraction(state.white, tot), UrnState(state.white + 1, state.black, state.draws_made + 1)),
        (Fraction(state.black, tot), UrnState(state.white, state.black + 1, state.draws_made + 1)),
    ]


def tail_small_check(p: BetaBinomialParams, t) -> Fraction:
    """Exact ``P(B < t * total * alpha / (alpha + beta))``; compare against ``8 t``."""
    t = Fraction(t)
    if t < 0:
        raise ValueError("t must be >= 0")
    thr = t * p.total * Fraction(p.alpha, p.alpha + p.beta)
    return expect(p, lambda b: 1 if b < thr else 0)


def tail_bound_holds(p: BetaBinomialParams, constant: int = 8) -> bool:
    """Whether ``P(B < t m) <= constant * t`` for *every* ``t >= 0``.

    ``m = total * alpha / (alpha + beta)``. The left side is a step function
    of ``t`` that jumps just after ``t_k = (alpha+k)/m``, so the bound holds
    for all ``t`` iff ``P(B <= alpha+k) <= constant * (alpha+k) / m`` for
    every ``k``.
    """
    nums, den = _numerators(p.alpha, p.beta, p.n)
    m = Fraction(p.total * p.alpha, p.alpha + p.beta)
    cdf = 0
    for k, c in enumerate(nums):
        cdf += c
        if Fraction(cdf, den) * m > constant * (p.alpha + k):
            return False
    return True


def moment_bound_check(p: BetaBinomialParams, order: int) -> bool:
    """Whether ``E[B^order]^(1/order) <= (order+1) * total * alpha/(alpha+beta)``.

    Both sides are raised to ``order`` so the comparison is exact.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    rhs = Fraction((order + 1) * p.total * p.alpha, p.alpha + p.beta)
    return raw_moment(p, order) <= rhs**order
