"""Concentration bound for the empirical risk of a fixed set classifier.

For a classifier held fixed (tuned on a different sample), the empirical
class risk over n_k certain predictions is a Bernoulli mean, so its upward
deviation obeys the Chernoff-Hoeffding bound
``P{rhat >= r + eps} <= exp(-D(r + eps || r) * n_k)`` with ``D`` the
Bernoulli Kullback-Leibler divergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


def bernoulli_kl(p: float, q: float) -> float:
    """D(p || q) between Bernoulli(p) and Bernoulli(q).

    ``q`` must lie strictly inside (0, 1); ``p`` may touch the endpoints,
    handled by the limit conventions 0*ln(0) = 0 and D(1||q) = -ln(q).
    """
    if not 0.0 < q < 1.0:
        raise DomainError("q must lie strictly inside (0, 1)")
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    if p == 0.0:
        return -math.log1p(-q)
    if p == 1.0:
        return -math.log(q)
    return p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q))


@dataclass(frozen=True)
class TailBoundQuery:
    """Deviation query: true risk ``r``, deviation ``epsilon`` and the count
    ``n_k`` of certain predictions of the class."""

    r: float
    epsilon: float
    n_k: int

    def __post_init__(self):
        if self.epsilon < 0:
            raise DomainError("epsilon must be non-negative")
        if self.r + self.epsilon > 1.0 + 1e-15:
            raise DomainError("r + epsilon must not exceed 1")
        if self.n_k < 0:
            raise DomainError("n_k must be non-negative")


def risk_tail_bound(q: TailBoundQuery) -> float:
    """Upper bound on P{empirical risk >= r + epsilon}.

    Returns 1 exactly when ``epsilon`` is 0 or ``n_k`` is 0 (vacuous but
    safe for report tables).  ``r`` in {0, 1} makes the bound degenerate
    and raises a domain error.
    """
    if not 0.0 < q.r < 1.0:
        raise DomainError("r must lie strictly inside (0, 1)")
    if q.epsilon == 0.0 or q.n_k == 0:
        return 1.0
    return math.exp(-bernoulli_kl(min(q.r + q.epsilon, 1.0), q.r) * q.n_k)


def invert_epsilon(r: float, n_k: int, delta: float, tol: float = 1e-12) -> float:
    """Smallest deviation whose tail bound is <= ``delta`` (bisection).

    Plumbing for report tables; relies only on the bound's monotonicity in
    epsilon.  Returns the full range ``1 - r`` when even that deviation
    keeps the bound above ``delta``.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    hi = 1.0 - r
    if risk_tail_bound(TailBoundQuery(r, hi, n_k)) > delta:
        return hi
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if risk_tail_bound(TailBoundQuery(r, mid, n_k)) <= delta:
            hi = mid
        else:
            lo = mid
    return hi
