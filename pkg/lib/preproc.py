"""Authenticated shares from the preprocessing market: BDOZ bits, SPDZ field elements, and O-to-E resharing."""
import json
from dataclasses import dataclass, replace
from functools import reduce
from operator import xor
from typing import Mapping, Sequence

import numpy as np

from lib.cover import Cover
from utils.constants import KAPPA, SPDZ_PRIME
from utils.exceptions import IncompleteCoverError, MacCheckError, PreprocError, UsageError
from utils.logger_config import configure_logger

logger = configure_logger(__name__)

SHARE_FORMAT = "veil-shares/1"


def _kappa_bits(rng: np.random.Generator, nonzero: bool = False) -> int:
    while True:
        value = int.from_bytes(rng.bytes(KAPPA // 8), "big")
        if value or not nonzero:
            return value


def _field_element(rng: np.random.Generator, p: int) -> int:
    return int(rng.integers(0, p, dtype=np.int64)) if p <= 2**63 else int.from_bytes(rng.bytes(32), "big") % p


def _check_parties(n: int):
    if n < 2:
        raise UsageError(f"authenticated sharing needs at least two parties, got {n}")


# ---- BDOZ ------------------------------------------------------------------


@dataclass(frozen=True)
class BdozBit:
    """A bit held by one party and MACed towards every other party.

    ``macs[j]`` stays with the holder; ``keys[j]`` is held by verifier j.
    """

    holder: int
    bit: int
    macs: Mapping[int, int]
    keys: Mapping[int, int]

    def authentic(self, deltas: Mapping[int, int]) -> bool:
        return all(self.macs[j] == self.keys[j] ^ (self.bit * deltas[j]) for j in self.keys)


@dataclass(frozen=True)
class BdozSharing:
    bits: tuple[BdozBit, ...]
    deltas: Mapping[int, int]

    @property
    def value(self) -> int:
        return reduce(xor, (b.bit for b in self.bits), 0)


def bdoz_deltas(parties: int, rng: np.random.Generator) -> dict[int, int]:
    _check_parties(parties)
    return {j: _kappa_bits(rng, nonzero=True) for j in range(parties)}


def _authenticate(bit: int, holder: int, deltas: Mapping[int, int], rng: np.random.Generator) -> BdozBit:
    keys = {j: _kappa_bits(rng) for j in deltas if j != holder}
    macs = {j: key ^ (bit * deltas[j]) for j, key in keys.items()}
    return BdozBit(holder, bit, macs, keys)


def bdoz_authenticate(x: int, parties: int, rng: np.random.Generator, holder: int = 0) -> BdozSharing:
    """Party ``holder`` authenticates its bit x to each of the other parties."""
    if x not in (0, 1):
        raise UsageError(f"BDOZ authenticates bits, got {x}")
    deltas = bdoz_deltas(parties, rng)
    return BdozSharing((_authenticate(x, holder, deltas, rng),), deltas)


def bdoz_share(x: int, parties: int, rng: np.random.Generator, deltas: Mapping[int, int] | None = None) -> BdozSharing:
    """XOR-shares x and authenticates every share to every other party."""
    deltas = dict(deltas) if deltas is not None else bdoz_deltas(parties, rng)
    shares = [int(b) for b in rng.integers(0, 2, size=parties - 1)]
    shares.append(reduce(xor, shares, x & 1))
    return BdozSharing(tuple(_authenticate(s, i, deltas, rng) for i, s in enumerate(shares)), deltas)


def bdoz_check(sharing: BdozSharing) -> bool:
    return all(b.authentic(sharing.deltas) for b in sharing.bits)


def bdoz_xor(a: BdozSharing, b: BdozSharing) -> BdozSharing:
    """Componentwise XOR of two sharings under the same global keys."""
    if dict(a.deltas) != dict(b.deltas) or [x.holder for x in a.bits] != [y.holder for y in b.bits]:
        raise PreprocError("BDOZ sharings must use the same parties and global keys")
    bits = tuple(
        BdozBit(
            x.holder,
            x.bit ^ y.bit,
            {j: x.macs[j] ^ y.macs[j] for j in x.macs},
            {j: x.keys[j] ^ y.keys[j] for j in x.keys},
        )
        for x, y in zip(a.bits, b.bits)
    )
    return BdozSharing(bits, a.deltas)


# ---- SPDZ ------------------------------------------------------------------


@dataclass(frozen=True)
class SpdzShare:
    prime: int
    shares: tuple[int, ...]
    macs: tuple[int, ...]
    key_shares: tuple[int, ...]

    @property
    def parties(self) -> int:
        return len(self.shares)

    @property
    def alpha(self) -> int:
        return sum(self.key_shares) % self.prime


def _additive(value: int, parties: int, p: int, rng: np.random.Generator) -> tuple[int, ...]:
    parts = [_field_element(rng, p) for _ in range(parties - 1)]
    return (*parts, (value - sum(parts)) % p)


def spdz_key_shares(parties: int, rng: np.random.Generator, p: int = SPDZ_PRIME) -> tuple[int, ...]:
    _check_parties(parties)
    return tuple(_field_element(rng, p) for _ in range(parties))


def spdz_share(x: int, parties: int, rng: np.random.Generator, key_shares: Sequence[int] | None = None, p: int = SPDZ_PRIME) -> SpdzShare:
    _check_parties(parties)
    if not 0 <= x < p:
        raise UsageError(f"{x} is not an element of F_{p}")
    keys = tuple(key_shares) if key_shares is not None else spdz_key_shares(parties, rng, p)
    if len(keys) != parties:
        raise UsageError(f"{len(keys)} key shares for {parties} parties")
    alpha = sum(keys) % p
    return SpdzShare(p, _additive(x, parties, p, rng), _additive(alpha * x % p, parties, p, rng), keys)


def spdz_open_check(s: SpdzShare) -> int:
    """Opens the value, then checks that the MAC commitments sigma_i = gamma_i - alpha_i * x sum to zero."""
    p = s.prime
    x = sum(s.shares) % p
    sigma = sum((gamma - key * x) for gamma, key in zip(s.macs, s.key_shares)) % p
    if sigma:
        logger.error("SPDZ MAC check failed on open")
        raise MacCheckError("mac-failure: opened value does not match its MAC shares")
    return x


def _same_key(a: SpdzShare, b: SpdzShare):
    if a.prime != b.prime or a.key_shares != b.key_shares:
        raise PreprocError("SPDZ shares must live in the same field under the same MAC key")


def spdz_add(a: SpdzShare, b: SpdzShare) -> SpdzShare:
    _same_key(a, b)
    p = a.prime
    return replace(
        a,
        shares=tuple((x + y) % p for x, y in zip(a.shares, b.shares)),
        macs=tuple((x + y) % p for x, y in zip(a.macs, b.macs)),
    )


def spdz_scale(a: SpdzShare, c: int) -> SpdzShare:
    p = a.prime
    return replace(a, shares=tuple(x * c % p for x in a.shares), macs=tuple(m * c % p for m in a.macs))


def spdz_add_public(a: SpdzShare, c: int) -> SpdzShare:
    """Adds a public constant: party 0 adjusts its share, everyone adjusts the MAC by alpha_i * c."""
    p = a.prime
    shares = ((a.shares[0] + c) % p, *a.shares[1:])
    macs = tuple((m + key * c) % p for m, key in zip(a.macs, a.key_shares))
    return replace(a, shares=shares, macs=macs)


# ---- resharing -------------------------------------------------------------


def reshare(held: SpdzShare, cover: Cover, rng: np.random.Generator) -> SpdzShare:
    """Moves a sharing held by the O-parties onto the E-parties along the cover.

    Each O-party splits its value share, MAC share and key share additively
    among the E-parties it serves, so the E-set ends up with fresh shares of
    the same value and its own shares of the same global key.
    """
    if held.parties != cover.n_o:
        raise UsageError(f"sharing has {held.parties} holders, cover has {cover.n_o} O-parties")
    unserved = cover.unserved()
    if unserved:
        logger.error(f"cover leaves E-parties {unserved} unserved")
        raise IncompleteCoverError(f"E-parties {unserved} receive no shares")

    p = held.prime
    shares, macs, keys = [0] * cover.n_e, [0] * cover.n_e, [0] * cover.n_e
    for o, served in enumerate(cover.assignment):
        targets = sorted(served)
        for column, split in ((shares, held.shares[o]), (macs, held.macs[o]), (keys, held.key_shares[o])):
            for e, part in zip(targets, _additive(split, len(targets), p, rng)):
                column[e] = (column[e] + part) % p
    logger.debug(f"reshared across {cover.n_o} O-parties onto {cover.n_e} E-parties")
    return SpdzShare(p, tuple(shares), tuple(macs), tuple(keys))


# ---- share bundles ---------------------------------------------------------


def dump_shares(s: SpdzShare) -> str:
    return json.dumps(
        {
            "format": SHARE_FORMAT,
            "modulus": s.prime,
            "parties": s.parties,
            "shares": [format(x, "x") for x in s.shares],
            "macs": [format(x, "x") for x in s.macs],
            "keys": [format(x, "x") for x in s.key_shares],
        },
        indent=2,
    )


def load_shares(text: str) -> SpdzShare:
    try:
        raw = json.loads(text)
        if raw.get("format") != SHARE_FORMAT:
            raise PreprocError(f"not a {SHARE_FORMAT} bundle")
        columns = [tuple(int(x, 16) for x in raw[name]) for name in ("shares", "macs", "keys")]
        share = SpdzShare(int(raw["modulus"]), *columns)
    except (ValueError, KeyError, TypeError) as error:
        raise PreprocError(f"malformed share bundle: {error}") from error
    if any(len(column) != raw["parties"] for column in columns):
        raise PreprocError("share bundle columns disagree with its party count")
    return share
