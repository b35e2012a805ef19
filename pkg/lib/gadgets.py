"""Gadget compiler: a circuit builder with constant folding, integer and Q16.16 arithmetic."""
import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from lib.circuit import Circuit, Gate, GateKind
from utils.constants import FIXED_FRACTION_BITS, FIXED_WIDTH
from utils.exceptions import CircuitError, UnknownGadgetError, UnsupportedWidthError
from utils.fixed_point import ONE_RAW, encode_fixed
from utils.logger_config import configure_logger
from utils.utils import int_to_bits

logger = configure_logger(__name__)

# constant bits; real wires are nonnegative
ZERO = -1
ONE = -2

Word = list[int]

F = FIXED_FRACTION_BITS
W = FIXED_WIDTH
HORNER_WIDTH = 24
EXP_DOMAIN = (-10.5, 10.3)
PHI_CLAMP = 4.0
POLY_DEGREE = 6

# Abramowitz-Stegun 26.2.17
PHI_P = 0.2316419
PHI_B = (0.319381530, -0.356563782, 1.781477937, -1.821255978, 1.330274429)


@lru_cache(maxsize=None)
def minimax_coefficients(name: str) -> tuple[float, ...]:
    """Power-basis coefficients of a degree-6 Chebyshev interpolant, lowest order first."""
    funcs: dict[str, Callable[[np.ndarray], np.ndarray]] = {
        "exp2": lambda x: np.exp2(x),
        "log1p": lambda x: np.log1p(x),
    }
    fit = Chebyshev.interpolate(funcs[name], POLY_DEGREE, domain=[0.0, 1.0])
    coefficients = fit.convert(kind=Polynomial).coef
    return tuple(float(c) for c in coefficients)


class CircuitBuilder:
    def __init__(self, name: str = ""):
        self.name = name
        self._input_widths: list[int] = []
        self._gates: list[Gate] = []
        self._next_wire = 0
        self._inverse: dict[int, int] = {}

    # ---- wires and gates -------------------------------------------------

    def input(self, width: int) -> Word:
        if self._gates:
            raise CircuitError("all inputs must be declared before the first gate")
        word = list(range(self._next_wire, self._next_wire + width))
        self._next_wire += width
        self._input_widths.append(width)
        return word

    def _gate(self, kind: GateKind, ins: tuple[int, ...]) -> int:
        out = self._next_wire
        self._next_wire += 1
        self._gates.append(Gate(kind, ins, out))
        return out

    def _complementary(self, a: int, b: int) -> bool:
        return self._inverse.get(a) == b

    def inv(self, a: int) -> int:
        if a == ZERO:
            return ONE
        if a == ONE:
            return ZERO
        if a in self._inverse:
            return self._inverse[a]
        out = self._gate(GateKind.INV, (a,))
        self._inverse[a] = out
        self._inverse[out] = a
        return out

    def xor(self, a: int, b: int) -> int:
        if a == ZERO:
            return b
        if b == ZERO:
            return a
        if a == ONE:
            return self.inv(b)
        if b == ONE:
            return self.inv(a)
        if a == b:
            return ZERO
        if self._complementary(a, b):
            return ONE
        return self._gate(GateKind.XOR, (a, b))

    def and_(self, a: int, b: int) -> int:
        if a == ZERO or b == ZERO:
            return ZERO
        if a == ONE:
            return b
        if b == ONE:
            return a
        if a == b:
            return a
        if self._complementary(a, b):
            return ZERO
        return self._gate(GateKind.AND, (a, b))

    def or_(self, a: int, b: int) -> int:
        return self.xor(self.xor(a, b), self.and_(a, b))

    def mux_bit(self, s: int, a: int, b: int) -> int:
        """s ? a : b"""
        return self.xor(b, self.and_(s, self.xor(a, b)))

    # ---- words -----------------------------------------------------------

    @staticmethod
    def const(value: int, width: int) -> Word:
        return [ONE if bit else ZERO for bit in int_to_bits(value, width)]

    def const_fixed(self, value: float) -> Word:
        return self.const(encode_fixed(value), W)

    def xor_word(self, a: Word, b: Word) -> Word:
        return [self.xor(x, y) for x, y in zip(a, b)]

    def inv_word(self, a: Word) -> Word:
        return [self.inv(x) for x in a]

    def mux(self, s: int, a: Word, b: Word) -> Word:
        return [self.mux_bit(s, x, y) for x, y in zip(a, b)]

    def or_reduce(self, bits: Sequence[int]) -> int:
        acc = ZERO
        for bit in bits:
            acc = self.or_(acc, bit)
        return acc

    def and_reduce(self, bits: Sequence[int]) -> int:
        layer = list(bits)
        if not layer:
            return ONE
        while len(layer) > 1:
            paired = [self.and_(layer[i], layer[i + 1]) for i in range(0, len(layer) - 1, 2)]
            if len(layer) % 2:
                paired.append(layer[-1])
            layer = paired
        return layer[0]

    def _add(self, a: Word, b: Word, carry: int) -> tuple[Word, int]:
        total = []
        for x, y in zip(a, b):
            total.append(self.xor(self.xor(x, y), carry))
            carry = self.xor(carry, self.and_(self.xor(x, carry), self.xor(y, carry)))
        return total, carry

    def _carry(self, a: Word, b: Word, carry: int) -> int:
        for x, y in zip(a, b):
            carry = self.xor(carry, self.and_(self.xor(x, carry), self.xor(y, carry)))
        return carry

    def add(self, a: Word, b: Word) -> Word:
        return self._add(a, b, ZERO)[0]

    def sub(self, a: Word, b: Word) -> Word:
        return self._add(a, self.inv_word(b), ONE)[0]

    def neg(self, a: Word) -> Word:
        return self.sub([ZERO] * len(a), a)

    def cond_neg(self, a: Word, s: int) -> Word:
        """-a when s is set, a otherwise."""
        return self._add([self.xor(x, s) for x in a], [ZERO] * len(a), s)[0]

    def ge(self, a: Word, b: Word) -> int:
        """Unsigned a >= b: the carry out of a + ~b + 1."""
        return self._carry(a, self.inv_word(b), ONE)

    def gt(self, a: Word, b: Word) -> int:
        return self.inv(self.ge(b, a))

    def eq(self, a: Word, b: Word) -> int:
        return self.and_reduce([self.inv(self.xor(x, y)) for x, y in zip(a, b)])

    def _signed_view(self, a: Word) -> Word:
        return a[:-1] + [self.inv(a[-1])]

    def gt_signed(self, a: Word, b: Word) -> int:
        return self.gt(self._signed_view(a), self._signed_view(b))

    def ge_signed(self, a: Word, b: Word) -> int:
        return self.ge(self._signed_view(a), self._signed_view(b))

    def max_signed(self, a: Word, b: Word) -> Word:
        return self.mux(self.gt_signed(b, a), b, a)

    def min_signed(self, a: Word, b: Word) -> Word:
        return self.mux(self.gt_signed(a, b), b, a)

    def umul_full(self, a: Word, b: Word) -> Word:
        """Unsigned product of width len(a) + len(b)."""
        acc = [ZERO] * (len(a) + len(b))
        for i, bit in enumerate(b):
            row = [self.and_(x, bit) for x in a]
            total, carry = self._add(acc[i : i + len(a)], row, ZERO)
            acc[i : i + len(a)] = total
            acc[i + len(a)] = carry
        return acc

    def mul(self, a: Word, b: Word) -> Word:
        """Product modulo 2^width."""
        width = len(a)
        acc = [ZERO] * width
        for i, bit in enumerate(b[:width]):
            row = [self.and_(x, bit) for x in a[: width - i]]
            acc[i:] = self._add(acc[i:], row, ZERO)[0]
        return acc

    def shift_left(self, a: Word, amount: int) -> Word:
        return ([ZERO] * amount + a)[: len(a)]

    def barrel_left(self, a: Word, amount: Word) -> Word:
        for stage, bit in enumerate(amount):
            a = self.mux(bit, self.shift_left(a, 1 << stage), a)
        return a

    def udivmod(self, n: Word, d: Word) -> Word:
        """Restoring division; the quotient has len(n) bits and is all ones when d = 0."""
        remainder = [ZERO] * (len(d) + 1)
        divisor = d + [ZERO]
        inverted = self.inv_word(divisor)
        quotient = [ZERO] * len(n)
        for i in reversed(range(len(n))):
            shifted = [n[i]] + remainder[:-1]
            difference, fits = self._add(shifted, inverted, ONE)
            quotient[i] = fits
            remainder = self.mux(fits, difference, shifted)
        return quotient

    # ---- fixed point -----------------------------------------------------

    def magnitude(self, a: Word) -> tuple[Word, int]:
        sign = a[-1]
        return self.cond_neg(a, sign), sign

    def saturate_signed(self, magnitude: Word, sign: int) -> Word:
        overflow = self.or_reduce(magnitude[W - 1 :])
        clamped = [self.or_(bit, overflow) for bit in magnitude[: W - 1]] + [ZERO]
        return self.cond_neg(clamped, sign)

    def fixed_mul(self, a: Word, b: Word) -> Word:
        ma, sa = self.magnitude(a)
        mb, sb = self.magnitude(b)
        product = self.umul_full(ma, mb)
        return self.saturate_signed(product[F:], self.xor(sa, sb))

    def fixed_div(self, a: Word, b: Word) -> Word:
        ma, sa = self.magnitude(a)
        mb, sb = self.magnitude(b)
        quotient = self.udivmod([ZERO] * F + ma, mb)
        return self.saturate_signed(quotient, self.xor(sa, sb))

    def fixed_sqrt(self, x: Word) -> Word:
        keep = self.inv(x[-1])
        value = [self.and_(bit, keep) for bit in x[:-1]] + [ZERO]
        radicand = [ZERO] * F + value
        half = len(radicand) // 2
        width = half + 3
        remainder = [ZERO] * width
        root = [ZERO] * half
        for i in reversed(range(half)):
            remainder = [radicand[2 * i], radicand[2 * i + 1]] + remainder[:-2]
            trial = self.resize([ONE, ZERO] + root, width)
            difference, fits = self._add(remainder, self.inv_word(trial), ONE)
            remainder = self.mux(fits, difference, remainder)
            root = [fits] + root[:-1]
        return (root + [ZERO] * W)[:W]

    def clamp_signed(self, x: Word, lo: float, hi: float) -> Word:
        low, high = self.const_fixed(lo), self.const_fixed(hi)
        x = self.mux(self.gt_signed(x, high), high, x)
        return self.mux(self.gt_signed(low, x), low, x)

    def horner(self, x: Word, coefficients: Sequence[float]) -> Word:
        """Signed Q16.16 polynomial in HORNER_WIDTH bits; x must be nonnegative."""
        acc = self.const(encode_fixed(coefficients[-1]), HORNER_WIDTH)
        for c in reversed(coefficients[:-1]):
            m, s = self.magnitude(acc)
            product = self.umul_full(m, x)[F : F + HORNER_WIDTH]
            acc = self.add(self.cond_neg(product, s), self.const(encode_fixed(c), HORNER_WIDTH))
        return acc

    @staticmethod
    def resize(a: Word, width: int) -> Word:
        return (a + [ZERO] * width)[:width]

    def sign_extend(self, a: Word, width: int) -> Word:
        return (a + [a[-1]] * width)[:width]

    def fixed_exp(self, x: Word, clamp: bool = True) -> Word:
        if clamp:
            x = self.clamp_signed(x, *EXP_DOMAIN)
        y = self.fixed_mul(x, self.const_fixed(1 / math.log(2)))
        fraction = y[:F]
        # 2^k with k = y >> 16 in [-16, 14]; the shift k + 16 flips bit 4 of k
        shift = y[F : F + 4] + [self.inv(y[F + 4])]
        poly = self.horner(fraction, minimax_coefficients("exp2"))[: F + 2]
        scaled = self.barrel_left(poly + [ZERO] * (48 - len(poly)), shift)
        return scaled[F : F + W]

    def fixed_ln(self, x: Word) -> Word:
        value = x[: W - 1]
        zeros = []
        for stage in (16, 8, 4, 2, 1):
            empty = self.and_reduce(self.inv_word(value[len(value) - stage :]))
            value = self.mux(empty, self.shift_left(value, stage), value)
            zeros.append((stage, empty))
        # value now has its leading one at bit 30; u = value / 2^30 - 1
        u = value[W - 2 - F : W - 2]
        poly = self.sign_extend(self.horner(u, minimax_coefficients("log1p")), W)
        count = [ZERO] * 5
        for stage, empty in zeros:
            count[stage.bit_length() - 1] = empty
        ln2 = self.const(round(math.log(2) * ONE_RAW), 17)
        shift_term = self.umul_full(count, ln2) + [ZERO] * (W - 22)
        base = self.const(round(14 * math.log(2) * ONE_RAW), W)
        return self.sub(self.add(poly, base), shift_term)

    def fixed_phi(self, x: Word) -> Word:
        magnitude, negative = self.magnitude(x)
        limit = self.const_fixed(PHI_CLAMP)
        outside = self.gt(magnitude, limit)
        a = self.mux(outside, limit, magnitude)[: F + 3]
        denominator = self.add(self.const(ONE_RAW, F + 2), self.resize(self.fixed_mul_const_unsigned(a, PHI_P), F + 2))
        t = self.udivmod(self.const(1 << (2 * F), 2 * F + 1), denominator)[: F + 1]
        poly = self.sign_extend(self.horner(t, (0.0, *PHI_B)), W)
        square = self.umul_full(a, a)[F : F + 21]
        exponent = self.neg(self.sign_extend(square[1:] + [ZERO], W))
        density = self.fixed_mul_const_unsigned(self.fixed_exp(exponent, clamp=False)[: F + 1], 1 / math.sqrt(2 * math.pi))
        tail = self.fixed_mul(self.sign_extend(density, W), poly)
        one = self.const(ONE_RAW, W)
        inside = self.mux(negative, tail, self.sub(one, tail))
        return self.mux(outside, self.mux(negative, [ZERO] * W, one), inside)

    def fixed_mul_const_unsigned(self, a: Word, c: float) -> Word:
        """Nonnegative a times a nonnegative constant; width grows with the constant."""
        raw = round(c * ONE_RAW)
        product = self.umul_full(a, self.const(raw, max(raw.bit_length(), 1)))
        return product[F:]

    # ---- finishing -------------------------------------------------------

    def build(self, outputs: Sequence[Word]) -> Circuit:
        """Moves outputs onto the final wires and drops gates nothing reads."""
        input_count = sum(self._input_widths)
        gates = list(self._gates)
        next_wire = self._next_wire
        zero = None

        def raw(kind: GateKind, ins: tuple[int, ...]) -> int:
            nonlocal next_wire
            gates.append(Gate(kind, ins, next_wire))
            next_wire += 1
            return next_wire - 1

        def zero_wire() -> int:
            nonlocal zero
            if zero is None:
                if input_count == 0:
                    raise CircuitError("constant outputs need at least one input wire")
                zero = raw(GateKind.XOR, (0, 0))
            return zero

        final: list[int] = []
        seen: set[int] = set()
        for bit in (bit for word in outputs for bit in word):
            if bit == ZERO:
                wire = raw(GateKind.XOR, (zero_wire(), zero_wire()))
            elif bit == ONE:
                wire = raw(GateKind.INV, (zero_wire(),))
            elif bit < input_count or bit in seen:
                wire = raw(GateKind.XOR, (bit, zero_wire()))
            else:
                wire = bit
            seen.add(wire)
            final.append(wire)

        live = set(final)
        kept = []
        for gate in reversed(gates):
            if gate.output in live:
                live.update(gate.inputs)
                kept.append(gate)
        kept.reverse()

        wire_count = input_count + len(kept)
        output_base = wire_count - len(final)
        mapping = {wire: wire for wire in range(input_count)}
        mapping.update({wire: output_base + i for i, wire in enumerate(final)})
        next_internal = input_count
        for gate in kept:
            if gate.output not in mapping:
                mapping[gate.output] = next_internal
                next_internal += 1
        renumbered = tuple(Gate(g.kind, tuple(mapping[w] for w in g.inputs), mapping[g.output]) for g in kept)
        circuit = Circuit(
            wire_count=wire_count,
            input_widths=tuple(self._input_widths),
            gates=renumbered,
            output_wires=tuple(range(output_base, wire_count)),
            output_widths=tuple(len(word) for word in outputs),
            name=self.name,
        )
        logger.debug(f"built {self.name or 'circuit'}: {len(renumbered)} gates, {wire_count} wires")
        return circuit


INTEGER_GADGETS = ("gt", "ge", "eq", "add", "sub", "mul", "mux")
FIXED_GADGETS = ("fixed_mul", "fixed_div", "fixed_exp", "fixed_ln", "fixed_sqrt", "fixed_phi")
GADGETS = INTEGER_GADGETS + FIXED_GADGETS
MAX_INTEGER_WIDTH = 64


@lru_cache(maxsize=None)
def build_gadget(kind: str, width: int) -> Circuit:
    if kind not in GADGETS:
        raise UnknownGadgetError(f"unknown gadget {kind!r}; known: {', '.join(GADGETS)}")
    if kind in FIXED_GADGETS and width != W:
        raise UnsupportedWidthError(f"{kind} works on Q16.16 words, width must be {W}")
    if not 1 <= width <= MAX_INTEGER_WIDTH:
        raise UnsupportedWidthError(f"{kind} supports widths 1..{MAX_INTEGER_WIDTH}, got {width}")

    cb = CircuitBuilder(f"{kind}{width}")
    if kind == "mux":
        s, a, b = cb.input(1), cb.input(width), cb.input(width)
        return cb.build([cb.mux(s[0], a, b)])
    if kind in ("fixed_exp", "fixed_ln", "fixed_sqrt", "fixed_phi"):
        x = cb.input(width)
        return cb.build([getattr(cb, kind)(x)])

    a, b = cb.input(width), cb.input(width)
    binary = {
        "gt": lambda: [cb.gt(a, b)],
        "ge": lambda: [cb.ge(a, b)],
        "eq": lambda: [cb.eq(a, b)],
        "add": lambda: cb.add(a, b),
        "sub": lambda: cb.sub(a, b),
        "mul": lambda: cb.mul(a, b),
        "fixed_mul": lambda: cb.fixed_mul(a, b),
        "fixed_div": lambda: cb.fixed_div(a, b),
    }
    return cb.build([binary[kind]()])
