"""The contract catalogue: circuit, plaintext oracle and annotated source for each registered contract."""
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, NamedTuple, Sequence

from lib.circuit import Circuit, GateCounts, eval_plaintext, gate_counts
from lib.finance import CROWDFUND_MINIMUM, DAO_FACTOR, OptionKind, combined_volatility, garman_kohlhagen, margrabe
from lib.gadgets import ZERO, CircuitBuilder, Word
from utils.constants import FIXED_FRACTION_BITS, INT_WIDTH, REFERENCE_AND_COUNTS, CONTRACT_LABELS
from utils.exceptions import DomainError, InputArityError, UsageError
from utils.fixed_point import encode_fixed
from utils.logger_config import configure_logger
from utils.utils import bits_to_int, int_to_bits

logger = configure_logger(__name__)

FIXED_TOLERANCE = 1e-2
INT_MIN = -(1 << (INT_WIDTH - 1))
DAO_OUTPUT_WIDTH = 64
DAO_CONSTANT_FRACTION_BITS = 32
DAO_GROWTH = round(DAO_FACTOR * (1 << DAO_CONSTANT_FRACTION_BITS))


class ValueField(NamedTuple):
    name: str
    kind: str  # "int", "uint" or "fixed"
    width: int = INT_WIDTH
    fraction_bits: int = FIXED_FRACTION_BITS

    def encode(self, value: float) -> list[int]:
        if self.kind == "fixed":
            return int_to_bits(encode_fixed(value), self.width)
        return int_to_bits(int(value), self.width)

    def decode(self, bits: Sequence[int]) -> float | int:
        raw = bits_to_int(bits, signed=self.kind != "uint")
        if self.kind == "fixed":
            return raw / (1 << self.fraction_bits)
        return raw


def _int(name: str) -> ValueField:
    return ValueField(name, "int")


def _fixed(name: str) -> ValueField:
    return ValueField(name, "fixed")


@dataclass(frozen=True)
class ContractSpec:
    name: str
    label: str
    inputs: tuple[tuple[ValueField, ...], ...]
    outputs: tuple[ValueField, ...]
    build: Callable[[], Circuit] = field(repr=False)
    oracle: Callable[..., tuple] = field(repr=False)
    source: str = field(repr=False)
    tolerance: float | None = None

    @cached_property
    def circuit(self) -> Circuit:
        circuit = self.build()
        logger.info(f"compiled {self.name}: {gate_counts(circuit).and_count} AND gates")
        return circuit

    @property
    def gate_counts(self) -> GateCounts:
        return gate_counts(self.circuit)

    @property
    def reference_and_count(self) -> int:
        return REFERENCE_AND_COUNTS[self.name]

    @property
    def is_fixed_point(self) -> bool:
        return self.tolerance is not None

    def split_inputs(self, flat: Sequence[float]) -> list[list[float]]:
        """Chunks a flat value list into per-party records."""
        expected = sum(len(party) for party in self.inputs)
        if len(flat) != expected:
            raise InputArityError(f"{self.name} takes {expected} values, got {len(flat)}")
        values, start = [], 0
        for party in self.inputs:
            values.append(list(flat[start : start + len(party)]))
            start += len(party)
        return values

    def encode_inputs(self, values: Sequence[Sequence[float]]) -> list[list[int]]:
        if len(values) != len(self.inputs):
            raise InputArityError(f"{self.name} has {len(self.inputs)} parties, got {len(values)} input records")
        bits = []
        for party, (record, schema) in enumerate(zip(values, self.inputs)):
            if len(record) != len(schema):
                raise InputArityError(f"party {party + 1} of {self.name} supplies {len(schema)} values, got {len(record)}")
            bits.append([bit for value, value_field in zip(record, schema) for bit in value_field.encode(value)])
        return bits

    def decode_outputs(self, bits: Sequence[int]) -> tuple:
        values, start = [], 0
        for value_field in self.outputs:
            values.append(value_field.decode(bits[start : start + value_field.width]))
            start += value_field.width
        return tuple(values)

    def evaluate(self, values: Sequence[Sequence[float]]) -> tuple:
        return self.decode_outputs(eval_plaintext(self.circuit, self.encode_inputs(values)))

    def reference(self, values: Sequence[Sequence[float]]) -> tuple:
        return tuple(self.oracle(*values))

    def matches(self, got: Sequence[float], expected: Sequence[float]) -> bool:
        if self.tolerance is None:
            return tuple(got) == tuple(expected)
        return all(abs(g - e) / max(1.0, abs(e)) <= self.tolerance for g, e in zip(got, expected))


# ---- shared circuit pieces -------------------------------------------------


def _wrap_int(value: int, width: int = INT_WIDTH) -> int:
    return bits_to_int(int_to_bits(value, width), signed=True)


def _fields(word: Word) -> list[Word]:
    """Splits one party's input segment into its 32-bit fields."""
    return [word[i : i + INT_WIDTH] for i in range(0, len(word), INT_WIDTH)]


def _sum_words(cb: CircuitBuilder, words: Sequence[Word]) -> Word:
    total = words[0]
    for word in words[1:]:
        total = cb.add(total, word)
    return total


def _mask(cb: CircuitBuilder, word: Word, keep: int) -> Word:
    return [cb.and_(bit, keep) for bit in word]


def _umax(cb: CircuitBuilder, a: Word, b: Word) -> Word:
    return cb.mux(cb.gt(b, a), b, a)


def _umin(cb: CircuitBuilder, a: Word, b: Word) -> Word:
    return cb.mux(cb.gt(a, b), b, a)


def _discounted(cb: CircuitBuilder, spot: Word, rate: Word, t: Word) -> Word:
    return cb.fixed_mul(spot, cb.fixed_exp(cb.neg(cb.fixed_mul(rate, t))))


def _lognormal_price(cb: CircuitBuilder, a: Word, b: Word, yield_a: Word, yield_b: Word, sigma: Word, t: Word, put: bool) -> Word:
    """Value of receiving a and paying b at t, both lognormal with total volatility sigma."""
    v = cb.fixed_mul(sigma, cb.fixed_sqrt(t))
    variance = cb.fixed_mul(v, v)
    half_variance = variance[1:] + [variance[-1]]
    drift = cb.fixed_mul(cb.sub(yield_b, yield_a), t)
    numerator = cb.add(cb.sub(cb.fixed_ln(a), cb.fixed_ln(b)), cb.add(drift, half_variance))
    d1 = cb.fixed_div(numerator, v)
    d2 = cb.sub(d1, v)
    forward_a, forward_b = _discounted(cb, a, yield_a, t), _discounted(cb, b, yield_b, t)
    if put:
        return cb.sub(cb.fixed_mul(forward_b, cb.fixed_phi(cb.neg(d2))), cb.fixed_mul(forward_a, cb.fixed_phi(cb.neg(d1))))
    return cb.sub(cb.fixed_mul(forward_a, cb.fixed_phi(d1)), cb.fixed_mul(forward_b, cb.fixed_phi(d2)))


# ---- millionaire -----------------------------------------------------------

MILLIONAIRE_SOURCE = """\
contract Millionaire {
  // ensures (\\result == 1 && y > x)
  //   || (\\result == 0 && y <= x)
  int richer(int x, int y) {
    if (y > x) {
      return 1;
    }
    return 0;
  }
}
"""


def build_millionaire() -> Circuit:
    cb = CircuitBuilder("millionaire")
    x, y = cb.input(INT_WIDTH), cb.input(INT_WIDTH)
    return cb.build([[cb.gt_signed(y, x)]])


def millionaire(x: Sequence[int], y: Sequence[int]) -> tuple[int]:
    """1 when the second party is strictly richer."""
    return (int(_wrap_int(y[0]) > _wrap_int(x[0])),)


# ---- second-price auction --------------------------------------------------

SECOND_PRICE_SOURCE = """\
contract SecondPriceAuction {
  // requires 2 <= n
  // ensures 0 <= \\result && \\result < n
  int winner(int n, int[] bids) {
    int best = 0;
    // invariant 1 <= i && i <= n
    //   && 0 <= best && best < i
    for (int i = 1; i < n; i++) {
      if (bids[i] > bids[best]) {
        best = i;
      }
    }
    return best;
  }
}
"""


def _index_width(count: int) -> int:
    return max(1, (count - 1).bit_length())


def build_second_price_auction(bidders: int) -> Circuit:
    cb = CircuitBuilder(f"second_price_auction{bidders}")
    bids = [cb.input(INT_WIDTH) for _ in range(bidders)]
    width = _index_width(bidders)
    best, second, index = bids[0], cb.const(INT_MIN, INT_WIDTH), cb.const(0, width)
    for i, bid in enumerate(bids[1:], start=1):
        higher = cb.gt_signed(bid, best)
        second = cb.mux(higher, best, cb.max_signed(second, bid))
        best = cb.mux(higher, bid, best)
        index = cb.mux(higher, cb.const(i, width), index)
    return cb.build([index, second])


def second_price_auction(*bids: Sequence[int]) -> tuple[int, int]:
    """Winner is the highest bid, lowest index on ties; the price is the best of the others."""
    values = [_wrap_int(bid[0]) for bid in bids]
    ranked = sorted(range(len(values)), key=lambda i: (-values[i], i))
    return ranked[0], values[ranked[1]]


# ---- crowdfunding ----------------------------------------------------------

CROWDFUND_SOURCE = f"""\
contract Crowdfunding {{
  int minimum = {CROWDFUND_MINIMUM};
  // requires 0 < n
  // ensures \\result == 0 || \\result >= minimum
  int crowdfund(int n, int[] inputs) {{
    int sum = 0;
    // invariant 0 <= i && i <= n
    for (int i = 0; i < n; i++) {{
      sum += inputs[i];
    }}
    if (sum >= minimum) {{
      return sum;
    }}
    return 0;
  }}
}}
"""

# case-study variant: the body returns the raw sum, so the postcondition cannot hold
CROWDFUNDING_CASE_STUDY_SOURCE = f"""\
contract Crowdfunding {{
  int minimum = {CROWDFUND_MINIMUM};
  // requires 0 < n
  // ensures \\result >= minimum
  int crowdfund(int n, int[] inputs) {{
    int sum = 0;
    // invariant 0 <= i && i <= n
    for (int i = 0; i < n; i++) {{
      sum += inputs[i];
    }}
    return sum;
  }}
}}
"""

CROWDFUNDING_THRESHOLD_SOURCE = f"""\
contract Crowdfunding {{
  int minimum = {CROWDFUND_MINIMUM};
  // requires 0 < n
  // ensures \\result >= minimum
  int crowdfund(int n, int[] inputs) {{
    int sum = 0;
    int ret = 0;
    // invariant 0 <= i && i <= n
    for (int i = 0; i < n; i++) {{
      sum += inputs[i];
    }}
    if (sum >= minimum) {{
      ret = sum;
    }} else {{
      ret = 0;
    }}
    return ret;
  }}
}}
"""

ACCOUNT_SOURCE = """\
contract Account {
  int balance;
  // invariant balance >= 0

  // ensures balance == 0
  void init() {
    balance = 0;
  }

  // requires amount >= 0
  // ensures balance == \\old(balance) + amount
  void deposit(int amount) {
    balance += amount;
  }

  // requires amount >= 0 && amount <= balance
  // ensures balance == \\old(balance) - amount
  void withdraw(int amount) {
    balance -= amount;
  }

  // ensures \\result == balance
  int current() {
    return balance;
  }
}
"""


def build_crowdfund(parties: int) -> Circuit:
    cb = CircuitBuilder(f"crowdfund{parties}")
    total = _sum_words(cb, [cb.input(INT_WIDTH) for _ in range(parties)])
    reached = cb.ge_signed(total, cb.const(CROWDFUND_MINIMUM, INT_WIDTH))
    return cb.build([_mask(cb, total, reached)])


def crowdfund(*inputs: Sequence[int]) -> tuple[int]:
    total = _wrap_int(sum(record[0] for record in inputs))
    return (total if total >= CROWDFUND_MINIMUM else 0,)


# ---- DAO-like investment fund ----------------------------------------------

DAO_SOURCE = f"""\
contract InvestmentFund {{
  int minimum = {CROWDFUND_MINIMUM};
  int growth = {DAO_GROWTH};
  // requires 0 < n
  // ensures \\result == 0 || \\result >= minimum * growth
  int invest(int n, int[] inputs) {{
    int sum = 0;
    // invariant 0 <= i && i <= n
    for (int i = 0; i < n; i++) {{
      sum += inputs[i];
    }}
    if (sum >= minimum) {{
      return sum * growth;
    }}
    return 0;
  }}
}}
"""


def build_dao_invest_fund(parties: int) -> Circuit:
    cb = CircuitBuilder(f"dao_invest_fund{parties}")
    total = _sum_words(cb, [cb.input(INT_WIDTH) for _ in range(parties)])
    reached = cb.ge_signed(total, cb.const(CROWDFUND_MINIMUM, INT_WIDTH))
    # above the threshold the sum is positive, so an unsigned product is exact
    growth = cb.const(DAO_GROWTH, DAO_GROWTH.bit_length())
    shift = DAO_CONSTANT_FRACTION_BITS - FIXED_FRACTION_BITS
    value = cb.resize(cb.umul_full(total, growth)[shift:], DAO_OUTPUT_WIDTH)
    return cb.build([_mask(cb, value, reached)])


def dao_invest_fund(*inputs: Sequence[int]) -> tuple[float]:
    total = _wrap_int(sum(record[0] for record in inputs))
    if total < CROWDFUND_MINIMUM:
        return (0.0,)
    raw = (total * DAO_GROWTH) >> (DAO_CONSTANT_FRACTION_BITS - FIXED_FRACTION_BITS)
    return (raw / (1 << FIXED_FRACTION_BITS),)


# ---- options ---------------------------------------------------------------

EXCHANGE_OPTION_SOURCE = """\
contract ExchangeOption {
  // requires s1 > 0 && s2 > 0 && t > 0
  // ensures \\result == 1
  int admissible(int s1, int s2, int t) {
    if (s1 > 0 && s2 > 0 && t > 0) {
      return 1;
    }
    return 0;
  }
}
"""

FX_OPTION_SOURCE = """\
contract CurrencyOption {
  // requires spot > 0 && strike > 0 && t > 0 && sigma >= 0
  // ensures \\result == 1
  int admissible(int spot, int strike, int t, int sigma) {
    if (spot > 0 && strike > 0 && t > 0 && sigma >= 0) {
      return 1;
    }
    return 0;
  }
}
"""


def build_exchange_option() -> Circuit:
    cb = CircuitBuilder("exchange_option")
    s1, q1, sigma1, rho, t = _fields(cb.input(5 * INT_WIDTH))
    s2, q2, sigma2 = _fields(cb.input(3 * INT_WIDTH))
    cross = cb.fixed_mul(cb.fixed_mul(rho, sigma1), sigma2)
    variance = cb.sub(cb.add(cb.fixed_mul(sigma1, sigma1), cb.fixed_mul(sigma2, sigma2)), cb.shift_left(cross, 1))
    return cb.build([_lognormal_price(cb, s1, s2, q1, q2, cb.fixed_sqrt(variance), t, put=False)])


def exchange_option(first: Sequence[float], second: Sequence[float]) -> tuple[float]:
    s1, q1, sigma1, rho, t = first
    s2, q2, sigma2 = second
    return (margrabe(s1, s2, q1, q2, sigma1, sigma2, rho, t),)


def build_fx_option(put: bool = False) -> Circuit:
    cb = CircuitBuilder("fx_put" if put else "fx_option")
    spot, sigma, foreign = _fields(cb.input(3 * INT_WIDTH))
    strike, domestic, t = _fields(cb.input(3 * INT_WIDTH))
    return cb.build([_lognormal_price(cb, spot, strike, foreign, domestic, sigma, t, put=put)])


def fx_option(first: Sequence[float], second: Sequence[float], put: bool = False) -> tuple[float]:
    spot, sigma, foreign = first
    strike, domestic, t = second
    return (garman_kohlhagen(spot, strike, domestic, foreign, sigma, t, "put" if put else "call"),)


# ---- double auction --------------------------------------------------------

DOUBLE_AUCTION_SOURCE = """\
contract DoubleAuction {
  // requires 0 <= bq && 0 <= sq
  // ensures \\result <= bq && \\result <= sq
  //   && (\\result == bq || \\result == sq)
  int matched(int bq, int sq) {
    if (bq < sq) {
      return bq;
    }
    return sq;
  }
}
"""


def _sorted_book(cb: CircuitBuilder, orders: list[tuple[Word, Word]], descending: bool) -> list[tuple[Word, Word]]:
    """Odd-even transposition sort on price; equal prices keep their order."""
    orders = list(orders)
    for round_index in range(len(orders)):
        for k in range(round_index % 2, len(orders) - 1, 2):
            (p, q), (p_next, q_next) = orders[k], orders[k + 1]
            swap = cb.gt_signed(p_next, p) if descending else cb.gt_signed(p, p_next)
            orders[k] = (cb.mux(swap, p_next, p), cb.mux(swap, q_next, q))
            orders[k + 1] = (cb.mux(swap, p, p_next), cb.mux(swap, q, q_next))
    return orders


def _cumulative(cb: CircuitBuilder, orders: list[tuple[Word, Word]]) -> list[Word]:
    totals, running = [], None
    for _, qty in orders:
        running = qty if running is None else cb.add(running, qty)
        totals.append(running)
    return totals


def _first_reaching(cb: CircuitBuilder, totals: list[Word], orders: list[tuple[Word, Word]], target: Word) -> Word:
    seen, price = ZERO, cb.const(0, INT_WIDTH)
    for total, (order_price, _) in zip(totals, orders):
        hit = cb.ge(total, target)
        first = cb.and_(hit, cb.inv(seen))
        price = cb.mux(first, order_price, price)
        seen = cb.or_(seen, hit)
    return price


def build_double_auction(buys: int, sells: int) -> Circuit:
    cb = CircuitBuilder(f"double_auction{buys}x{sells}")
    book = [tuple(_fields(cb.input(2 * INT_WIDTH))) for _ in range(buys + sells)]
    bids = _sorted_book(cb, book[:buys], descending=True)
    asks = _sorted_book(cb, book[buys:], descending=False)
    demand, supply = _cumulative(cb, bids), _cumulative(cb, asks)

    volume = cb.const(0, INT_WIDTH)
    for (bid, _), wanted in zip(bids, demand):
        for (ask, _), offered in zip(asks, supply):
            crossing = cb.ge_signed(bid, ask)
            volume = _umax(cb, volume, _mask(cb, _umin(cb, wanted, offered), crossing))

    bid_price = _first_reaching(cb, demand, bids, volume)
    ask_price = _first_reaching(cb, supply, asks, volume)
    total = cb.add(cb.resize(bid_price, INT_WIDTH + 1), cb.resize(ask_price, INT_WIDTH + 1))
    price = _mask(cb, total[1:], cb.or_reduce(volume))
    return cb.build([price, volume])


def double_auction(*orders: Sequence[int], buys: int = 2) -> tuple[int, int]:
    """Uniform-price clearing by walking the sorted books; the price is the midpoint of the last matched pair."""
    bids = sorted(((p, q) for p, q in orders[:buys] if q > 0), key=lambda order: -order[0])
    asks = sorted(((p, q) for p, q in orders[buys:] if q > 0), key=lambda order: order[0])
    i = j = matched = 0
    left_bid = bids[0][1] if bids else 0
    left_ask = asks[0][1] if asks else 0
    last = None
    while i < len(bids) and j < len(asks) and bids[i][0] >= asks[j][0]:
        step = min(left_bid, left_ask)
        matched += step
        last = (bids[i][0], asks[j][0])
        left_bid -= step
        left_ask -= step
        if left_bid == 0:
            i += 1
            left_bid = bids[i][1] if i < len(bids) else 0
        if left_ask == 0:
            j += 1
            left_ask = asks[j][1] if j < len(asks) else 0
    if last is None:
        return 0, 0
    return (last[0] + last[1]) // 2, matched


# ---- registry --------------------------------------------------------------


def second_price_auction_spec(bidders: int = 3) -> ContractSpec:
    if bidders < 2:
        raise UsageError("a second-price auction needs at least two bids")
    return ContractSpec(
        "second_price_auction",
        CONTRACT_LABELS["second_price_auction"],
        tuple((_int("bid"),) for _ in range(bidders)),
        (ValueField("winner", "uint", _index_width(bidders)), _int("price")),
        lambda: build_second_price_auction(bidders),
        second_price_auction,
        SECOND_PRICE_SOURCE,
    )


def crowdfund_spec(parties: int = 2) -> ContractSpec:
    if parties < 1:
        raise UsageError("crowdfunding needs at least one contributor")
    return ContractSpec(
        "crowdfund",
        CONTRACT_LABELS["crowdfund"],
        tuple((_int("contribution"),) for _ in range(parties)),
        (_int("raised"),),
        lambda: build_crowdfund(parties),
        crowdfund,
        CROWDFUND_SOURCE,
    )


def dao_invest_fund_spec(parties: int = 2) -> ContractSpec:
    if parties < 1:
        raise UsageError("the fund needs at least one investor")
    return ContractSpec(
        "dao_invest_fund",
        CONTRACT_LABELS["dao_invest_fund"],
        tuple((_int("investment"),) for _ in range(parties)),
        (ValueField("value", "fixed", DAO_OUTPUT_WIDTH),),
        lambda: build_dao_invest_fund(parties),
        dao_invest_fund,
        DAO_SOURCE,
    )


def fx_option_spec(put: bool = False) -> ContractSpec:
    return ContractSpec(
        "fx_option",
        CONTRACT_LABELS["fx_option"],
        ((_fixed("spot"), _fixed("sigma"), _fixed("foreign_rate")), (_fixed("strike"), _fixed("domestic_rate"), _fixed("t"))),
        (_fixed("price"),),
        lambda: build_fx_option(put),
        lambda first, second: fx_option(first, second, put),
        FX_OPTION_SOURCE,
        FIXED_TOLERANCE,
    )


def double_auction_spec(buys: int = 2, sells: int = 2) -> ContractSpec:
    if buys < 1 or sells < 1:
        raise UsageError("a double auction needs at least one buy and one sell order")
    order = (_int("price"), ValueField("quantity", "uint"))
    return ContractSpec(
        "double_auction",
        CONTRACT_LABELS["double_auction"],
        tuple(order for _ in range(buys + sells)),
        (_int("price"), ValueField("quantity", "uint")),
        lambda: build_double_auction(buys, sells),
        lambda *orders: double_auction(*orders, buys=buys),
        DOUBLE_AUCTION_SOURCE,
    )


CONTRACTS: dict[str, ContractSpec] = {
    "millionaire": ContractSpec(
        "millionaire",
        CONTRACT_LABELS["millionaire"],
        ((_int("x"),), (_int("y"),)),
        (ValueField("richer", "uint", 1),),
        build_millionaire,
        millionaire,
        MILLIONAIRE_SOURCE,
    ),
    "second_price_auction": second_price_auction_spec(),
    "exchange_option": ContractSpec(
        "exchange_option",
        CONTRACT_LABELS["exchange_option"],
        (
            (_fixed("s1"), _fixed("q1"), _fixed("sigma1"), _fixed("rho"), _fixed("t")),
            (_fixed("s2"), _fixed("q2"), _fixed("sigma2")),
        ),
        (_fixed("price"),),
        build_exchange_option,
        exchange_option,
        EXCHANGE_OPTION_SOURCE,
        FIXED_TOLERANCE,
    ),
    "fx_option": fx_option_spec(),
    "crowdfund": crowdfund_spec(),
    "dao_invest_fund": dao_invest_fund_spec(),
    "double_auction": double_auction_spec(),
}

_SIZED: dict[str, Callable[[int], ContractSpec]] = {
    "second_price_auction": second_price_auction_spec,
    "crowdfund": crowdfund_spec,
    "dao_invest_fund": dao_invest_fund_spec,
}


def get_contract(name: str, parties: int | None = None) -> ContractSpec:
    if name not in CONTRACTS:
        raise UsageError(f"unknown contract {name!r}; registered: {', '.join(CONTRACTS)}")
    if parties is None or parties == len(CONTRACTS[name].inputs):
        return CONTRACTS[name]
    if name not in _SIZED:
        raise UsageError(f"{name} has a fixed party count of {len(CONTRACTS[name].inputs)}")
    return _SIZED[name](parties)


def circuit_oracle_gap(spec: ContractSpec, values: Sequence[Sequence[float]]) -> float:
    """Largest relative difference between circuit and oracle outputs on one input."""
    got, expected = spec.evaluate(values), spec.reference(values)
    return max((abs(g - e) / max(1.0, abs(e)) for g, e in zip(got, expected)), default=0.0)


# ---- priced and cleared through the circuits ---------------------------------


@lru_cache(maxsize=None)
def _fx_spec(put: bool) -> ContractSpec:
    return CONTRACTS["fx_option"] if not put else fx_option_spec(put=True)


@lru_cache(maxsize=None)
def _auction_spec(buys: int, sells: int) -> ContractSpec:
    return double_auction_spec(buys, sells)


def exchange_option_price(s1: float, s2: float, q1: float, q2: float, sigma1: float, sigma2: float, rho: float, t: float) -> float:
    """Margrabe price as the fixed-point circuit computes it."""
    if s1 <= 0 or s2 <= 0 or t <= 0:
        raise DomainError("asset prices and maturity must be positive")
    combined_volatility(sigma1, sigma2, rho)
    (price,) = CONTRACTS["exchange_option"].evaluate([[s1, q1, sigma1, rho, t], [s2, q2, sigma2]])
    return price


def fx_option_price(s0: float, strike: float, r: float, rho: float, sigma: float, t: float, kind: OptionKind = "call") -> float:
    """Garman-Kohlhagen price as the fixed-point circuit computes it; r is domestic, rho foreign."""
    if s0 <= 0 or strike <= 0 or t <= 0:
        raise DomainError("spot, strike and maturity must be positive")
    if sigma < 0:
        raise DomainError("volatility must be nonnegative")
    if kind not in ("call", "put"):
        raise DomainError(f"option kind must be call or put, got {kind!r}")
    (price,) = _fx_spec(kind == "put").evaluate([[s0, sigma, rho], [strike, r, t]])
    return price


def double_auction_clear(buys: Sequence[tuple[int, int]], sells: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Clearing price and matched quantity of two order books, evaluated on the auction circuit."""
    if any(price < 0 or quantity < 0 for price, quantity in (*buys, *sells)):
        raise DomainError("order prices and quantities must be nonnegative")
    if not buys or not sells:
        return 0, 0
    return _auction_spec(len(buys), len(sells)).evaluate([list(order) for order in (*buys, *sells)])
