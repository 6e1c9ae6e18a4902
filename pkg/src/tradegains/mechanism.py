"""Random proposer mechanism: first best, posted-price best responses, equilibrium.

A fair coin picks the buyer or the seller to quote a take-it-or-leave-it
price against the opponent's prior; the responder accepts whenever the
trade is weakly beneficial. This module computes the canonical
best-response equilibrium of that game exactly:

* best-response prices are optimized in closed form per linear segment of
  the opponent's CDF (no grid search), and
* outer expectations over a piecewise-linear prior are taken with
  Gauss-Legendre quadrature after splitting the quantile domain at every
  point where the best-response formula can switch.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

from .distributions import (
    DiscreteDistribution,
    Distribution,
    PiecewiseLinearDistribution,
    distribution_from_json,
    expect,
)
from .errors import ValidationError


@dataclass(frozen=True)
class TradeInstance:
    """Independent buyer-value and seller-cost priors (product data model)."""

    buyer: Distribution
    seller: Distribution


@dataclass(frozen=True)
class BestResponse:
    """Optimal posted price for one proposer type against the opponent prior."""

    price: float
    utility: float
    trade_prob: float


@dataclass(frozen=True)
class EquilibriumReport:
    """Expected utilities and gains from trade of the best-response equilibrium."""

    u_buyer: float
    u_seller: float
    gft_buyer_proposes: float
    gft_seller_proposes: float
    gft: float
    fb: float

    def to_json(self) -> dict:
        return {
            "u_buyer": self.u_buyer,
            "u_seller": self.u_seller,
            "gft_buyer_proposes": self.gft_buyer_proposes,
            "gft_seller_proposes": self.gft_seller_proposes,
            "gft": self.gft,
            "fb": self.fb,
        }


def acceptance_prob(seller: Distribution, p: float) -> float:
    """Probability that the seller accepts an offer of ``p``.

    The seller accepts iff her cost is at most ``p``, accepting at
    indifference, so this is the right-continuous CDF.
    """
    return seller.cdf(p)


# --------------------------------------------------------------------------
# candidate prices
#
# Against a discrete opponent the only undominated prices are the opponent's
# atom values (on the profitable side). Against a piecewise-linear opponent
# the objective is quadratic on each strictly increasing CDF segment, so the
# candidates are the segment endpoints plus the interior stationary point.


def _buyer_candidate_prices(seller: Distribution, v: float) -> list[float]:
    prices: list[float] = []
    if isinstance(seller, DiscreteDistribution):
        i = bisect.bisect_right(seller.values, v)
        prices.extend(seller.values[:i])
        return prices
    qs, vals = seller.qs, seller.vals
    for k in range(len(qs) - 1):
        ya, yb = vals[k], vals[k + 1]
        if ya > v:
            break
        prices.append(ya)
        if ya == yb:
            continue
        if yb <= v:
            prices.append(yb)
        slope = (qs[k + 1] - qs[k]) / (yb - ya)
        r = qs[k] / slope - ya
        # stationary point of (v - p) * (slope * (p + r)); valid while it
        # stays inside the segment (which also keeps it at or below v)
        if 2.0 * ya + r <= v <= 2.0 * yb + r:
            prices.append(0.5 * (v - r))
    return prices


def _seller_candidate_prices(buyer: Distribution, c: float) -> list[float]:
    prices: list[float] = []
    if isinstance(buyer, DiscreteDistribution):
        i = bisect.bisect_left(buyer.values, c)
        prices.extend(buyer.values[i:])
        return prices
    qs, vals = buyer.qs, buyer.vals
    for k in range(len(qs) - 1):
        ya, yb = vals[k], vals[k + 1]
        if yb < c:
            continue
        if ya >= c:
            prices.append(ya)
        if ya == yb:
            continue
        prices.append(yb)
        slope = (qs[k + 1] - qs[k]) / (yb - ya)
        r = (1.0 - (qs[k] - slope * ya)) / slope
        if 2.0 * ya - r <= c <= 2.0 * yb - r:
            prices.append(0.5 * (c + r))
    return prices


def buyer_best_response(v: float, seller: Distribution) -> BestResponse:
    """Price maximizing ``(v - p) * Pr[cost <= p]`` for a buyer of value ``v``.

    Ties are broken toward the larger trade probability, then the smaller
    price. When no offer can trade (``v`` below the seller's support) the
    buyer quotes his own value and keeps utility zero.
    """
    v = float(v)
    best_key = None
    best = None
    for p in _buyer_candidate_prices(seller, v):
        x = seller.cdf(p)
        u = (v - p) * x
        key = (u, x, -p)
        if best_key is None or key > best_key:
            best_key = key
            best = BestResponse(price=p, utility=u, trade_prob=x)
    if best is None:
        return BestResponse(price=v, utility=0.0, trade_prob=0.0)
    return best


def seller_best_response(c: float, buyer: Distribution) -> BestResponse:
    """Price maximizing ``(p - c) * Pr[value >= p]`` for a seller of cost ``c``.

    The survival probability is evaluated left-continuously, so a buyer
    atom exactly at the price accepts. Ties are broken toward the larger
    trade probability, then the larger price.
    """
    c = float(c)
    best_key = None
    best = None
    for p in _seller_candidate_prices(buyer, c):
        s = buyer.survival(p)
        u = (p - c) * s
        key = (u, s, p)
        if best_key is None or key > best_key:
            best_key = key
            best = BestResponse(price=p, utility=u, trade_prob=s)
    if best is None:
        return BestResponse(price=c, utility=0.0, trade_prob=0.0)
    return best


# --------------------------------------------------------------------------
# breakpoints of the best-response map
#
# As the proposer's type w varies, each candidate's utility is linear
# (fixed price) or quadratic (per-segment stationary point) in w. The best
# response can only switch where two candidate curves cross or where a
# stationary point enters/leaves its segment; collecting all those w values
# makes every quantity integrated over the type prior piecewise-polynomial.


def _quad_roots(a: float, b: float, c: float) -> tuple[float, ...]:
    if a == 0.0:
        if b == 0.0:
            return ()
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return ()
    s = math.sqrt(disc)
    return ((-b - s) / (2.0 * a), (-b + s) / (2.0 * a))


def _crossings(curves: list[tuple[float, float, float]]) -> list[float]:
    roots: list[float] = []
    for i in range(len(curves)):
        a1, b1, c1 = curves[i]
        for j in range(i + 1, len(curves)):
            a2, b2, c2 = curves[j]
            for w in _quad_roots(a1 - a2, b1 - b2, c1 - c2):
                if math.isfinite(w):
                    roots.append(w)
    return roots


def buyer_response_breakpoints(seller: Distribution) -> list[float]:
    """Buyer values where the buyer's best-response formula may switch."""
    curves: list[tuple[float, float, float]] = [(0.0, 0.0, 0.0)]
    bounds: set[float] = set()
    for p0 in seller.knot_values():
        x0 = seller.cdf(p0)
        curves.append((0.0, x0, -p0 * x0))
        bounds.add(p0)
    if isinstance(seller, PiecewiseLinearDistribution):
        qs, vals = seller.qs, seller.vals
        for k in range(len(qs) - 1):
            ya, yb = vals[k], vals[k + 1]
            if ya == yb:
                continue
            slope = (qs[k + 1] - qs[k]) / (yb - ya)
            icpt = qs[k] - slope * ya
            r = icpt / slope
            curves.append((0.25 * slope, 0.5 * icpt, 0.25 * icpt * icpt / slope))
            bounds.add(2.0 * ya + r)
            bounds.add(2.0 * yb + r)
    bounds.update(_crossings(curves))
    return sorted(b for b in bounds if math.isfinite(b))


def seller_response_breakpoints(buyer: Distribution) -> list[float]:
    """Seller costs where the seller's best-response formula may switch."""
    curves: list[tuple[float, float, float]] = [(0.0, 0.0, 0.0)]
    bounds: set[float] = set()
    for p0 in buyer.knot_values():
        s0 = buyer.survival(p0)
        curves.append((0.0, -s0, p0 * s0))
        bounds.add(p0)
    if isinstance(buyer, PiecewiseLinearDistribution):
        qs, vals = buyer.qs, buyer.vals
        for k in range(len(qs) - 1):
            ya, yb = vals[k], vals[k + 1]
            if ya == yb:
                continue
            slope = (qs[k + 1] - qs[k]) / (yb - ya)
            icpt = qs[k] - slope * ya
            r = (1.0 - icpt) / slope
            curves.append((0.25 * slope, -0.5 * (1.0 - icpt), 0.25 * (1.0 - icpt) ** 2 / slope))
            bounds.add(2.0 * ya - r)
            bounds.add(2.0 * yb - r)
    bounds.update(_crossings(curves))
    return sorted(b for b in bounds if math.isfinite(b))


# --------------------------------------------------------------------------
# headline quantities


def first_best(instance: TradeInstance) -> float:
    """Expected surplus of the omniscient benchmark, ``E[(v - c)^+]``.

    Conditioned on ``v`` this is ``v * x(v) - integral of cost quantile up
    to x(v)``; the outer expectation over the buyer prior is exact.
    """
    seller = instance.seller

    def conditional(v: float) -> float:
        x = seller.cdf(v)
        if x <= 0.0:
            return 0.0
        return v * x - seller.integrate_quantile(0.0, x)

    return expect(instance.buyer, conditional, breakpoints=seller.knot_values())


def _buyer_proposer_side(buyer: Distribution, seller: Distribution) -> tuple[float, float]:
    """(expected proposer utility, expected GFT) when the buyer proposes."""
    cache: dict[float, BestResponse] = {}

    def br(v: float) -> BestResponse:
        r = cache.get(v)
        if r is None:
            r = cache[v] = buyer_best_response(v, seller)
        return r

    def gft_cond(v: float) -> float:
        x = seller.cdf(br(v).price)
        if x <= 0.0:
            return 0.0
        return v * x - seller.integrate_quantile(0.0, x)

    breaks = buyer_response_breakpoints(seller)
    u = expect(buyer, lambda v: br(v).utility, breaks)
    gft = expect(buyer, gft_cond, breaks)
    return u, gft


def _seller_proposer_side(buyer: Distribution, seller: Distribution) -> tuple[float, float]:
    """(expected proposer utility, expected GFT) when the seller proposes."""
    cache: dict[float, BestResponse] = {}

    def br(c: float) -> BestResponse:
        r = cache.get(c)
        if r is None:
            r = cache[c] = seller_best_response(c, buyer)
        return r

    def gft_cond(c: float) -> float:
        p = br(c).price
        cl = buyer.cdf_left(p)
        if cl >= 1.0:
            return 0.0
        return buyer.integrate_quantile(cl, 1.0) - c * (1.0 - cl)

    breaks = seller_response_breakpoints(buyer)
    u = expect(seller, lambda c: br(c).utility, breaks)
    gft = expect(seller, gft_cond, breaks)
    return u, gft


def equilibrium(instance: TradeInstance) -> EquilibriumReport:
    """Canonical best-response equilibrium of the random proposer mechanism.

    Each side proposes its exact best-response price and the responder
    accepts at indifference; the two proposer roles are averaged with equal
    weight.
    """
    u_b, gft_b = _buyer_proposer_side(instance.buyer, instance.seller)
    u_s, gft_s = _seller_proposer_side(instance.buyer, instance.seller)
    return EquilibriumReport(
        u_buyer=u_b,
        u_seller=u_s,
        gft_buyer_proposes=gft_b,
        gft_seller_proposes=gft_s,
        gft=0.5 * (gft_b + gft_s),
        fb=first_best(instance),
    )


def role_swap(instance: TradeInstance) -> TradeInstance:
    """Swap the two roles by negating values: surplus ``v - c`` is preserved."""
    return TradeInstance(buyer=instance.seller.negate(), seller=instance.buyer.negate())


# --------------------------------------------------------------------------
# serialization


def trade_instance_from_json(obj) -> TradeInstance:
    if not isinstance(obj, dict) or "buyer" not in obj or "seller" not in obj:
        raise ValidationError(["instance must be an object with 'buyer' and 'seller'"])
    problems: list[str] = []
    dists = {}
    for side in ("buyer", "seller"):
        try:
            dists[side] = distribution_from_json(obj[side])
        except ValidationError as err:
            problems.extend(f"{side}: {msg}" for msg in err.problems)
    if problems:
        raise ValidationError(problems)
    return TradeInstance(buyer=dists["buyer"], seller=dists["seller"])


def trade_instance_to_json(instance: TradeInstance) -> dict:
    return {"buyer": instance.buyer.to_json(), "seller": instance.seller.to_json()}
