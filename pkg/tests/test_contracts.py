import math

import pytest

from lib.circuit import eval_plaintext_batch
from lib.contracts import (
    CONTRACTS,
    circuit_oracle_gap,
    double_auction,
    double_auction_clear,
    double_auction_spec,
    exchange_option_price,
    fx_option_price,
    get_contract,
)
from lib.finance import garman_kohlhagen, margrabe
from utils.exceptions import DomainError, InputArityError, UsageError

INTEGER_CONTRACTS = ["millionaire", "second_price_auction", "crowdfund", "dao_invest_fund"]


def batch(spec, samples):
    outputs = eval_plaintext_batch(spec.circuit, [spec.encode_inputs(values) for values in samples])
    return [spec.decode_outputs(bits) for bits in outputs]


@pytest.mark.parametrize("x, y, richer", [(3, 5, 1), (5, 3, 0), (4, 4, 0), (-7, -2, 1)])
def test_millionaire(x, y, richer):
    spec = CONTRACTS["millionaire"]
    assert spec.evaluate([[x], [y]]) == spec.reference([[x], [y]]) == (richer,)


def test_second_price_auction():
    assert get_contract("second_price_auction").evaluate([[5], [9], [7]]) == (1, 7)
    assert get_contract("second_price_auction", parties=2).evaluate([[4], [4]]) == (0, 4)


@pytest.mark.parametrize("contributions, raised", [((600, 500), 1100), ((400, 500), 0), ((1000, 0), 1000)])
def test_crowdfund(contributions, raised):
    assert CONTRACTS["crowdfund"].evaluate([[c] for c in contributions]) == (raised,)


@pytest.mark.parametrize("investments, value", [((600, 500), 1342.21), ((1000, 0), 1220.19), ((300, 200), 0.0)])
def test_dao_invest_fund(investments, value):
    spec = CONTRACTS["dao_invest_fund"]
    (got,) = spec.evaluate([[i] for i in investments])
    assert got == pytest.approx(value, abs=0.01)
    assert (got,) == spec.reference([[i] for i in investments])


def test_double_auction():
    assert double_auction_spec(1, 1).evaluate([[10, 1], [8, 1]]) == (9, 1)
    assert CONTRACTS["double_auction"].evaluate([[10, 1], [0, 0], [8, 1], [0, 0]]) == (9, 1)
    assert CONTRACTS["double_auction"].evaluate([[5, 3], [4, 1], [6, 2], [9, 9]]) == (0, 0)


@pytest.mark.parametrize("name", INTEGER_CONTRACTS)
def test_integer_circuits_match_their_oracles(name, py_rng):
    spec = CONTRACTS[name]
    samples = [[[py_rng.randrange(-(1 << 20), 1 << 20)] for _ in spec.inputs] for _ in range(1000)]
    samples += [[[py_rng.randrange(0, 1500)] for _ in spec.inputs] for _ in range(200)]
    assert batch(spec, samples) == [spec.reference(values) for values in samples]


def test_double_auction_matches_its_oracle(py_rng):
    spec = double_auction_spec(3, 2)
    samples = [[[py_rng.randrange(0, 100), py_rng.randrange(0, 20)] for _ in spec.inputs] for _ in range(300)]
    assert batch(spec, samples) == [spec.reference(values) for values in samples]


@pytest.mark.parametrize("name, reference", [("millionaire", 96), ("second_price_auction", 192), ("crowdfund", 128), ("dao_invest_fund", 2144)])
def test_and_counts_near_reference_counts(name, reference):
    spec = CONTRACTS[name]
    assert spec.reference_and_count == reference
    assert reference / 4 <= spec.gate_counts.and_count <= reference * 4


@pytest.mark.slow
@pytest.mark.parametrize(
    "name, values",
    [
        ("exchange_option", [[1, 0, 0.2, 0, 1], [1, 0, 0]]),
        ("exchange_option", [[1.2, 0.01, 0.3, 0.4, 0.5], [1.0, 0.02, 0.2]]),
        ("fx_option", [[1, 0.2, 0], [1, 0, 1]]),
        ("fx_option", [[1.3, 0.15, 0.01], [1.25, 0.03, 2]]),
    ],
)
def test_fixed_point_circuits_track_their_oracles(name, values):
    spec = CONTRACTS[name]
    assert spec.is_fixed_point
    assert circuit_oracle_gap(spec, values) <= spec.tolerance


def test_registry_lookups():
    assert set(CONTRACTS) == {
        "millionaire",
        "second_price_auction",
        "exchange_option",
        "fx_option",
        "crowdfund",
        "dao_invest_fund",
        "double_auction",
    }
    assert len(get_contract("crowdfund", parties=5).inputs) == 5
    with pytest.raises(UsageError):
        get_contract("lottery")
    with pytest.raises(UsageError):
        get_contract("millionaire", parties=3)


def test_input_shape_errors():
    spec = CONTRACTS["fx_option"]
    assert spec.split_inputs([1, 0.2, 0, 1, 0, 1]) == [[1, 0.2, 0], [1, 0, 1]]
    with pytest.raises(InputArityError):
        spec.split_inputs([1, 2])
    with pytest.raises(InputArityError):
        spec.encode_inputs([[1, 0.2], [1, 0, 1]])


def test_double_auction_clear():
    assert double_auction_clear([(10, 1)], [(8, 1)]) == (9, 1)
    assert double_auction_clear([(5, 1)], [(8, 1)]) == (0, 0)
    assert double_auction_clear([], [(8, 1)]) == (0, 0)
    with pytest.raises(DomainError):
        double_auction_clear([(10, -1)], [(8, 1)])


def test_double_auction_clear_random_books(py_rng):
    for _ in range(20):
        buys = [(py_rng.randrange(50), py_rng.randrange(10)) for _ in range(2)]
        sells = [(py_rng.randrange(50), py_rng.randrange(10)) for _ in range(3)]
        assert double_auction_clear(buys, sells) == double_auction(*buys, *sells, buys=2)


@pytest.mark.parametrize(
    "call",
    [
        lambda: exchange_option_price(0, 1, 0, 0, 0.2, 0, 0, 1),
        lambda: exchange_option_price(1, 1, 0, 0, 0.2, 0.1, 1.5, 1),
        lambda: fx_option_price(1, 1, 0, 0, 0.2, 0),
        lambda: fx_option_price(1, 1, 0, 0, -0.2, 1),
        lambda: fx_option_price(1, 1, 0, 0, 0.2, 1, "straddle"),
    ],
)
def test_option_domains(call):
    with pytest.raises(DomainError):
        call()


@pytest.mark.slow
def test_option_prices_through_the_circuits():
    assert exchange_option_price(1, 1, 0, 0, 0.2, 0, 0, 1) == pytest.approx(margrabe(1, 1, 0, 0, 0.2, 0, 0, 1), abs=1e-2)
    assert fx_option_price(1, 1, 0, 0, 0.2, 1) == pytest.approx(0.0797, abs=1e-2)
    call = fx_option_price(1.3, 1.25, 0.03, 0.01, 0.15, 2)
    put = fx_option_price(1.3, 1.25, 0.03, 0.01, 0.15, 2, "put")
    assert put == pytest.approx(garman_kohlhagen(1.3, 1.25, 0.03, 0.01, 0.15, 2, "put"), abs=1e-2)
    assert call - put == pytest.approx(1.3 * math.exp(-0.01 * 2) - 1.25 * math.exp(-0.03 * 2), abs=2e-2)
