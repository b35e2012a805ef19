"""Prime-order group arithmetic shared by the base OT and the Diffie-Hellman NIKE."""
import hashlib
import random
from dataclasses import dataclass

from utils.constants import GROUP_EXPONENT_BITS, MODP_2048_GENERATOR, MODP_2048_PRIME


@dataclass(frozen=True)
class PrimeOrderGroup:
    """Quadratic residues modulo a safe prime p = 2q + 1."""

    p: int
    g: int

    @property
    def q(self) -> int:
        return (self.p - 1) // 2

    @property
    def element_bytes(self) -> int:
        return (self.p.bit_length() + 7) // 8

    def random_exponent(self, rng: random.Random) -> int:
        return rng.getrandbits(GROUP_EXPONENT_BITS) % self.q or 1

    def exp(self, base: int, exponent: int) -> int:
        return pow(base, exponent, self.p)

    def base_exp(self, exponent: int) -> int:
        return pow(self.g, exponent, self.p)

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def div(self, a: int, b: int) -> int:
        return a * pow(b, -1, self.p) % self.p

    def is_element(self, x: int) -> bool:
        return 1 < x < self.p and pow(x, self.q, self.p) == 1

    def encode(self, x: int) -> bytes:
        return x.to_bytes(self.element_bytes, "big")

    def decode(self, data: bytes) -> int:
        return int.from_bytes(data, "big")

    def hash(self, *parts: int | bytes) -> bytes:
        digest = hashlib.sha256()
        for part in parts:
            digest.update(self.encode(part) if isinstance(part, int) else part)
        return digest.digest()


MODP_2048 = PrimeOrderGroup(MODP_2048_PRIME, MODP_2048_GENERATOR)
