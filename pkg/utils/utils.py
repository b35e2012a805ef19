import hashlib
import json
import time
from contextlib import contextmanager
from typing import Iterable, Iterator

from utils.logger_config import configure_logger

logger = configure_logger(__name__)


def int_to_bits(value: int, width: int) -> list[int]:
    """Two's-complement bits of value, least significant first."""
    value &= (1 << width) - 1
    return [(value >> i) & 1 for i in range(width)]


def bits_to_int(bits: Iterable[int], signed: bool = False) -> int:
    bits = list(bits)
    value = 0
    for i, bit in enumerate(bits):
        value |= (bit & 1) << i
    if signed and bits and bits[-1]:
        value -= 1 << len(bits)
    return value


def bits_to_bytes(bits: Iterable[int]) -> bytes:
    bits = list(bits)
    out = bytearray((len(bits) + 7) // 8)
    for i, bit in enumerate(bits):
        if bit:
            out[i // 8] |= 1 << (i % 8)
    return bytes(out)


def bytes_to_bits(data: bytes, count: int) -> list[int]:
    return [(data[i // 8] >> (i % 8)) & 1 for i in range(count)]


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def derive_seed(seed: bytes, label: str) -> bytes:
    """Domain-separated 256-bit subseed."""
    return hashlib.sha256(seed + b"/" + label.encode()).digest()


def seed_from_int(seed: int) -> bytes:
    return hashlib.sha256(b"veil-seed" + seed.to_bytes(16, "big", signed=True)).digest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@contextmanager
def phase_timer(timings: dict[str, float], phase: str) -> Iterator[None]:
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[phase] = timings.get(phase, 0.0) + time.perf_counter() - start
        logger.debug(f"phase {phase} took {timings[phase]:.4f}s")
