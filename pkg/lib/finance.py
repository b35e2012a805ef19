"""Double-precision pricing references the fixed-point contract circuits are checked against."""
import math
from typing import Literal

from scipy.stats import norm

from utils.exceptions import DomainError

DAO_QUARTERLY_RATE = 0.04 / 4
DAO_PERIODS = 4 * 5
DAO_FACTOR = (1 + DAO_QUARTERLY_RATE) ** DAO_PERIODS
CROWDFUND_MINIMUM = 1000

OptionKind = Literal["call", "put"]


def _require(condition: bool, message: str):
    if not condition:
        raise DomainError(message)


def combined_volatility(sigma1: float, sigma2: float, rho: float) -> float:
    _require(sigma1 >= 0 and sigma2 >= 0, "volatilities must be nonnegative")
    _require(-1 <= rho <= 1, f"correlation {rho} is outside [-1, 1]")
    return math.sqrt(max(0.0, sigma1**2 + sigma2**2 - 2 * rho * sigma1 * sigma2))


def margrabe(s1: float, s2: float, q1: float, q2: float, sigma1: float, sigma2: float, rho: float, t: float) -> float:
    """Value of the right to exchange asset 2 for asset 1 at t."""
    _require(s1 > 0 and s2 > 0, "asset prices must be positive")
    _require(t > 0, "maturity must be positive")
    sigma = combined_volatility(sigma1, sigma2, rho)
    forward1, forward2 = s1 * math.exp(-q1 * t), s2 * math.exp(-q2 * t)
    v = sigma * math.sqrt(t)
    if v == 0:
        return max(0.0, forward1 - forward2)
    d1 = (math.log(s1 / s2) + (q2 - q1 + sigma**2 / 2) * t) / v
    d2 = d1 - v
    return forward1 * norm.cdf(d1) - forward2 * norm.cdf(d2)


def garman_kohlhagen(s0: float, strike: float, r: float, rho: float, sigma: float, t: float, kind: OptionKind = "call") -> float:
    """Currency option; r is the domestic rate and rho the foreign one."""
    _require(s0 > 0 and strike > 0, "spot and strike must be positive")
    _require(t > 0, "maturity must be positive")
    _require(sigma >= 0, "volatility must be nonnegative")
    if kind not in ("call", "put"):
        raise DomainError(f"option kind must be call or put, got {kind!r}")
    spot_forward, strike_forward = s0 * math.exp(-rho * t), strike * math.exp(-r * t)
    v = sigma * math.sqrt(t)
    if v == 0:
        intrinsic = spot_forward - strike_forward
        return max(0.0, intrinsic if kind == "call" else -intrinsic)
    d1 = (math.log(s0 / strike) + (r - rho + sigma**2 / 2) * t) / v
    d2 = d1 - v
    if kind == "call":
        return spot_forward * norm.cdf(d1) - strike_forward * norm.cdf(d2)
    return strike_forward * norm.cdf(-d2) - spot_forward * norm.cdf(-d1)


def secrecy_discount(y: float, sigma: float, t: float) -> float:
    """Haircut on the value of data withheld for t years: e^(-yt) (2 Phi(sigma sqrt(t) / 2) - 1)."""
    _require(t >= 0, "horizon must be nonnegative")
    _require(sigma >= 0, "volatility must be nonnegative")
    return math.exp(-y * t) * (2 * norm.cdf(sigma * math.sqrt(t) / 2) - 1)


def crowdfund_payout(total: int, minimum: int = CROWDFUND_MINIMUM) -> int:
    return total if total >= minimum else 0


def dao_fund_value(total: int, minimum: int = CROWDFUND_MINIMUM) -> float:
    return total * DAO_FACTOR if total >= minimum else 0.0
