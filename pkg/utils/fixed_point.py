"""Q16.16 fixed point: the value type plus the host-integer reference arithmetic the gadgets must match bit for bit."""
import math
from dataclasses import dataclass

from utils.constants import FIXED_FRACTION_BITS, FIXED_WIDTH
from utils.utils import bits_to_int, int_to_bits

ONE_RAW = 1 << FIXED_FRACTION_BITS
MAX_RAW = (1 << (FIXED_WIDTH - 1)) - 1
MIN_RAW = -(1 << (FIXED_WIDTH - 1))


@dataclass(frozen=True)
class FixedPoint:
    raw: int
    integer_bits: int = FIXED_WIDTH - FIXED_FRACTION_BITS
    fraction_bits: int = FIXED_FRACTION_BITS

    @property
    def width(self) -> int:
        return self.integer_bits + self.fraction_bits

    @property
    def value(self) -> float:
        return self.raw / (1 << self.fraction_bits)

    @classmethod
    def from_float(cls, value: float) -> "FixedPoint":
        return cls(encode_fixed(value))

    @classmethod
    def from_bits(cls, bits: list[int]) -> "FixedPoint":
        return cls(bits_to_int(bits, signed=True))

    def to_bits(self) -> list[int]:
        return int_to_bits(self.raw, self.width)


def saturate(raw: int) -> int:
    return max(MIN_RAW, min(MAX_RAW, raw))


def encode_fixed(value: float) -> int:
    return saturate(round(value * ONE_RAW))


def decode_fixed(raw: int) -> float:
    return raw / ONE_RAW


def _signed_result(magnitude: int, negative: bool) -> int:
    # symmetric saturation: the circuits clamp the magnitude before applying the sign
    magnitude = min(magnitude, MAX_RAW)
    return -magnitude if negative else magnitude


def fixed_mul_ref(a: int, b: int) -> int:
    return _signed_result((abs(a) * abs(b)) >> FIXED_FRACTION_BITS, (a < 0) != (b < 0))


def fixed_div_ref(a: int, b: int) -> int:
    if b == 0:
        return _signed_result(MAX_RAW, a < 0)
    return _signed_result((abs(a) << FIXED_FRACTION_BITS) // abs(b), (a < 0) != (b < 0))


def fixed_sqrt_ref(x: int) -> int:
    return math.isqrt(max(x, 0) << FIXED_FRACTION_BITS)
