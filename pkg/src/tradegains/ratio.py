"""Approximation-ratio curve, its optimal scaling parameter, and guarantees.

Averaging the two proposer-side bounds shows the mechanism retains at
least a ``(1 - lambda) / (1 + ln(1/lambda))`` fraction of the first best
for every ``lambda`` in (0, 1). The best constant solves the stationarity
condition ``2 - 1/lambda - ln(lambda) = 0``, at which point the ratio
equals ``1 / lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError, InvariantViolation
from .mechanism import TradeInstance, equilibrium

#: Tolerance for the guarantee margins, relative to max(1, fb).
MARGIN_TOL = 1e-9


def ratio_bound(lam: float) -> float:
    """Proven worst-case ratio ``(1 + ln(1/lambda)) / (1 - lambda)``.

    Diverges at both endpoints, so the domain is the open interval (0, 1).
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0 or math.isnan(lam):
        raise DomainError(f"lambda must lie in (0, 1), got {lam!r}")
    return (1.0 + math.log(1.0 / lam)) / (1.0 - lam)


@dataclass(frozen=True)
class LambdaOptimum:
    """Optimal scaling parameter and the ratio it certifies."""

    lambda_star: float
    ratio_star: float
    stationarity_residual: float

    def to_json(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "ratio_star": self.ratio_star,
            "stationarity_residual": self.stationarity_residual,
        }


def optimize_lambda(tol: float = 1e-12) -> LambdaOptimum:
    """Minimize :func:`ratio_bound` by solving its stationarity condition.

    ``g(lambda) = 2 - 1/lambda - ln(lambda)`` is strictly increasing on
    (0, 1), so a safeguarded Newton iteration inside a sign-changing
    bracket converges quadratically to the unique root. ``tol`` is the
    relative tolerance on ``lambda_star``.
    """
    tol = float(tol)
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")

    def g(x: float) -> float:
        return 2.0 - 1.0 / x - math.log(x)

    def g_prime(x: float) -> float:
        return 1.0 / (x * x) - 1.0 / x

    lo, hi = 0.05, 0.95
    x = 0.3
    for _ in range(200):
        gx = g(x)
        if gx < 0.0:
            lo = x
        else:
            hi = x
        if hi - lo <= tol * x or gx == 0.0:
            break
        step = gx / g_prime(x)
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        x = nxt
    else:
        raise ArithmeticError("lambda optimization did not converge")

    residual = abs(g(x))
    ratio_star = ratio_bound(x)
    delta = 10.0 * tol
    for probe in (x - delta, x + delta):
        if 0.0 < probe < 1.0 and ratio_bound(probe) < ratio_star - 1e-12:
            raise ArithmeticError("stationary point is not a local minimum")
    return LambdaOptimum(lambda_star=x, ratio_star=ratio_star, stationarity_residual=residual)


@lru_cache(maxsize=1)
def default_optimum() -> LambdaOptimum:
    """The optimum at default tolerance, cached for guarantee checks."""
    return optimize_lambda()


@dataclass(frozen=True)
class GuaranteeMargins:
    """Non-negative margins of the two end-to-end guarantees."""

    margin_315: float
    margin_4: float

    def to_json(self) -> dict:
        return {"margin_315": self.margin_315, "margin_4": self.margin_4}


def guarantee_check(instance: TradeInstance) -> GuaranteeMargins:
    """Margins of ``gft >= fb / ratio_star`` and ``gft >= fb / 4``.

    Uses the computed optimal ratio (about 3.1462) rather than its rounded
    3.15 form, since the analysis certifies the sharper constant. A margin
    below ``-MARGIN_TOL * max(1, fb)`` raises :class:`InvariantViolation`.
    """
    eq = equilibrium(instance)
    ratio_star = default_optimum().ratio_star
    margin_315 = eq.gft - eq.fb / ratio_star
    margin_4 = eq.gft - eq.fb / 4.0
    tol = MARGIN_TOL * max(1.0, abs(eq.fb))
    if margin_315 < -tol or margin_4 < -tol:
        raise InvariantViolation(
            f"guarantee margins ({margin_315!r}, {margin_4!r}) below -{tol!r}"
        )
    return GuaranteeMargins(margin_315=margin_315, margin_4=margin_4)
