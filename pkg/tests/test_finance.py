import math

import pytest

from lib.finance import (
    DAO_FACTOR,
    combined_volatility,
    crowdfund_payout,
    dao_fund_value,
    garman_kohlhagen,
    margrabe,
    secrecy_discount,
)
from utils.exceptions import DomainError


def test_margrabe_reference_value():
    assert margrabe(100, 100, 0, 0, 0.2, 0, 0, 1) == pytest.approx(7.9656, abs=1e-4)


def test_garman_kohlhagen_reference_value():
    assert garman_kohlhagen(1, 1, 0, 0, 0.2, 1) == pytest.approx(0.0797, abs=1e-4)


def test_put_call_parity(py_rng):
    for _ in range(100):
        s0, strike = py_rng.uniform(0.5, 2), py_rng.uniform(0.5, 2)
        r, rho = py_rng.uniform(-0.02, 0.1), py_rng.uniform(-0.02, 0.1)
        sigma, t = py_rng.uniform(0.01, 0.6), py_rng.uniform(0.1, 3)
        call = garman_kohlhagen(s0, strike, r, rho, sigma, t, "call")
        put = garman_kohlhagen(s0, strike, r, rho, sigma, t, "put")
        assert call - put == pytest.approx(s0 * math.exp(-rho * t) - strike * math.exp(-r * t), abs=1e-9)


def test_secrecy_discount_is_an_exchange_option(py_rng):
    for _ in range(100):
        y, sigma, t = py_rng.uniform(0, 0.1), py_rng.uniform(0.01, 0.8), py_rng.uniform(0.1, 5)
        assert secrecy_discount(y, sigma, t) == pytest.approx(margrabe(1, 1, y, y, sigma, 0, 0, t), abs=1e-9)
    assert secrecy_discount(0, 0.2, 1) == pytest.approx(0.0797, abs=1e-4)
    assert secrecy_discount(0.05, 0.3, 0) == 0


def test_zero_volatility_is_intrinsic():
    assert margrabe(110, 100, 0, 0, 0, 0, 0, 1) == pytest.approx(10)
    assert garman_kohlhagen(1, 1.2, 0, 0, 0, 1, "put") == pytest.approx(0.2)


def test_perfectly_correlated_assets():
    assert combined_volatility(0.3, 0.3, 1) == pytest.approx(0, abs=1e-6)


@pytest.mark.parametrize(
    "call",
    [
        lambda: margrabe(-1, 100, 0, 0, 0.2, 0.2, 0, 1),
        lambda: margrabe(100, 100, 0, 0, 0.2, 0.2, 1.5, 1),
        lambda: margrabe(100, 100, 0, 0, 0.2, 0.2, 0, 0),
        lambda: garman_kohlhagen(1, 1, 0, 0, -0.1, 1),
        lambda: garman_kohlhagen(1, 1, 0, 0, 0.1, 1, "straddle"),
        lambda: secrecy_discount(0, 0.2, -1),
    ],
)
def test_domain_errors(call):
    with pytest.raises(DomainError):
        call()


def test_threshold_payouts():
    assert crowdfund_payout(1100) == 1100
    assert crowdfund_payout(900) == 0
    assert dao_fund_value(1100) == pytest.approx(1342.21, abs=0.01)
    assert dao_fund_value(1000) == pytest.approx(1000 * DAO_FACTOR)
    assert dao_fund_value(999) == 0.0
