"""Closed forms, bounds, and limits for special cases of the auction.

Everything here is exact algebra (up to float rounding), independent of the
numerical solver, so these functions double as oracles for it.  Logarithms
are natural throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .mechanism import PaymentRule


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha < 1.0:
        raise DomainError(f"alpha must be finite and >= 1, got {alpha!r}")
    return alpha


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (math.isfinite(gamma) and 0.0 < gamma <= 1.0):
        raise DomainError(f"gamma must lie in (0, 1], got {gamma!r}")
    return gamma


@dataclass(frozen=True)
class TwoBidderAllPayEq:
    """Two-bidder all-pay equilibrium for values (alpha, 1), weight x**gamma."""

    low_bid: float
    high_bid: float
    revenue: float
    efficiency: float


def allpay_two_bidder_power(alpha: float, gamma: float) -> TwoBidderAllPayEq:
    """Unique equilibrium of the all-pay game with values (alpha, 1), w(x) = x**gamma.

    Both first-order conditions collapse to the same equation, giving
    low bid x = gamma * alpha**gamma / (1 + alpha**gamma)**2 and high bid
    alpha * x.  Revenue is their sum, (1+alpha) * x; expected efficiency is
    (1 + alpha**(gamma+1)) / (1 + alpha**gamma).  For large alpha the
    revenue behaves like gamma * alpha**(1-gamma).
    """
    alpha = _check_alpha(alpha)
    gamma = _check_gamma(gamma)
    ag = alpha**gamma
    x = gamma * ag / (1.0 + ag) ** 2
    y = alpha * x
    efficiency = (1.0 + alpha ** (gamma + 1.0)) / (1.0 + ag)
    return TwoBidderAllPayEq(low_bid=x, high_bid=y, revenue=x + y, efficiency=efficiency)


def winnerpay_proportional_best_response(s_others: float, v: float) -> float:
    """Exact best response under winners-pay with the proportional weight w(x) = x.

    Maximizing (b / (b + s)) * (v - b) over b gives
    b = sqrt(s * (s + v)) - s, evaluated here in the cancellation-free form
    s * expm1(log1p(v / s) / 2).  Returns 0 when the others carry no weight
    (the supremum is at the boundary).  Increasing in both arguments, with
    limit v / 2 as s_others grows.
    """
    s = float(s_others)
    v = float(v)
    if not math.isfinite(s) or s < 0.0:
        raise DomainError(f"s_others must be finite and >= 0, got {s!r}")
    if not math.isfinite(v) or v <= 0.0:
        raise DomainError(f"v must be finite and > 0, got {v!r}")
    if s == 0.0:
        return 0.0
    if s <= v * 1e-30:
        # v/s may overflow here; sqrt(s*v) is exact to ~sqrt(s/v) relative
        return math.sqrt(s * v) - s
    return s * math.expm1(0.5 * math.log1p(v / s))


@dataclass(frozen=True)
class TwoBidderWinnersPayEq:
    """Two-bidder winners-pay fixed point for values (alpha, 1), proportional weight."""

    low_bid: float
    high_bid: float
    revenue: float
    efficiency: float


def winnerpay_proportional_two_bidder(alpha: float) -> TwoBidderWinnersPayEq:
    """Mutual-best-response fixed point for winners-pay, w(x) = x, values (alpha, 1).

    Eliminating the high bid from the two best-response equations leaves one
    scalar equation for the low bid b2, written here in t = 1 - 2*b2:

        alpha = (1 - t)**2 * (1 + 3*t) / (8 * t**2),   t in (0, 1/3],

    which is strictly decreasing in t, so bisection pins t to full relative
    precision even when alpha is huge and b2 crowds 1/2.  The high bid is
    then b2**2 / t.  The low bid always lies in [1/3, 1/2).
    """
    alpha = _check_alpha(alpha)

    def alpha_of(t: float) -> float:
        return (1.0 - t) ** 2 * (1.0 + 3.0 * t) / (8.0 * t * t)

    lo, hi = 1e-12, 1.0 / 3.0
    if alpha_of(lo) < alpha:
        raise DomainError(f"alpha {alpha!r} too large for the fixed-point bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if alpha_of(mid) > alpha:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    b2 = 0.5 * (1.0 - t)
    b1 = b2 * b2 / t
    revenue = (b1 * b1 + b2 * b2) / (b1 + b2)
    efficiency = (alpha * b1 + b2) / (b1 + b2)
    return TwoBidderWinnersPayEq(
        low_bid=b2, high_bid=b1, revenue=revenue, efficiency=efficiency
    )


@dataclass(frozen=True)
class UniformEq:
    """Symmetric equilibrium when every bidder has the same value."""

    bid: float
    revenue: float
    n: int
    value: float
    gamma: float
    rule: PaymentRule


def uniform_equilibrium(
    n: int, value: float, gamma: float, rule: PaymentRule | str
) -> UniformEq:
    """Symmetric equilibrium of the n-bidder game with common value V, w(x) = x**gamma.

    All-pay: bid = gamma*(n-1)*V / n**2, revenue = n * bid = (n-1)*gamma*V / n.
    Winners-pay: bid = V*(n-1)*gamma / ((n-1)*gamma + n); with identical bids the
    winner's payment equals that bid, so revenue = bid.  Both come from setting
    the first-order condition to zero at the symmetric point.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise DomainError(f"value must be finite and > 0, got {value!r}")
    gamma = _check_gamma(gamma)
    rule = PaymentRule.parse(rule)
    if rule is PaymentRule.ALL_PAY:
        bid = gamma * (n - 1) * value / (n * n)
        revenue = n * bid
    else:
        bid = value * (n - 1) * gamma / ((n - 1) * gamma + n)
        revenue = bid
    return UniformEq(bid=bid, revenue=revenue, n=n, value=value, gamma=gamma, rule=rule)


def logweight_bid_bound(alpha: float) -> float:
    """Scale of the high bid under the w(x) = log(1+x) weight: alpha / log(alpha)**2.

    The true bid is at most a constant multiple of this; the constant is the
    caller's concern.  Only meaningful once log(alpha) is comfortably
    positive, so alpha <= 1 is rejected.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha) or alpha <= 1.0:
        raise DomainError(f"alpha must be finite and > 1, got {alpha!r}")
    return alpha / math.log(alpha) ** 2


@dataclass(frozen=True)
class ManyBuyerLimit:
    """Limits as the number of unit-value bidders grows without bound.

    For winners-pay, ``low_bid`` is the limiting bid of a unit-value bidder.
    For all-pay the bid itself vanishes like coefficient/n, so ``low_bid``
    holds that coefficient instead.  ``revenue`` is the limit of total
    revenue in both cases.
    """

    low_bid: float
    revenue: float


def manybuyer_limits(alpha: float, gamma: float, rule: PaymentRule | str) -> ManyBuyerLimit:
    """n -> infinity limits for the profile (alpha, 1, ..., 1) with w(x) = x**gamma.

    The top bidder's influence washes out, so the limits do not depend on
    alpha (it is validated but unused).  Winners-pay: the low bid and the
    revenue both tend to gamma/(1+gamma).  All-pay: each low bid shrinks
    like gamma/n (the returned ``low_bid`` is that coefficient gamma) and
    total revenue tends to gamma.
    """
    _check_alpha(alpha)
    gamma = _check_gamma(gamma)
    rule = PaymentRule.parse(rule)
    if rule is PaymentRule.WINNERS_PAY:
        limit = gamma / (1.0 + gamma)
        return ManyBuyerLimit(low_bid=limit, revenue=limit)
    return ManyBuyerLimit(low_bid=gamma, revenue=gamma)
