"""Non-interactive key exchange for the outsourcing protocol.

Two instantiations share one interface:

- ``dealer``: a trusted dealer hands every party the keys of all sets it can
  belong to (up to the maximum set size). Any set size works; the dealer
  knows every key.
- ``dh``: static Diffie-Hellman over the 2048-bit MODP group. Sets hold at
  most two members, so multi-party sets use a star of pairs around one hub.
"""
import random
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Literal, Mapping

from cryptography.hazmat.primitives import hashes, hmac

from lib.group import MODP_2048, PrimeOrderGroup
from utils.constants import KAPPA, NIKE_MAX_SET_SIZE
from utils.exceptions import IndexOutOfSetError, UsageError
from utils.logger_config import configure_logger
from utils.utils import derive_seed

logger = configure_logger(__name__)

NikeMode = Literal["dealer", "dh"]
KEY_BYTES = KAPPA // 8
DH_MAX_SET_SIZE = 2


def _hmac(key: bytes, message: bytes) -> bytes:
    mac = hmac.HMAC(key, hashes.SHA256())
    mac.update(message)
    return mac.finalize()[:KEY_BYTES]


def _set_label(members: Iterable[int]) -> bytes:
    return ",".join(str(i) for i in sorted(members)).encode()


@dataclass(frozen=True)
class NikeParams:
    max_set_size: int
    parties: int
    mode: NikeMode = "dealer"
    group: PrimeOrderGroup = MODP_2048
    seed: bytes = field(default=b"", repr=False)

    def check_index(self, i: int):
        if not 1 <= i <= self.parties:
            raise IndexOutOfSetError(f"party {i} is outside 1..{self.parties}")


@dataclass(frozen=True)
class DealerSecret:
    index: int
    keys: Mapping[bytes, bytes] = field(repr=False)


@dataclass(frozen=True)
class DhSecret:
    index: int
    exponent: int = field(repr=False)


def nike_setup(max_set_size: int, parties: int, security: int = KAPPA, mode: NikeMode = "dealer", seed: bytes = b"") -> NikeParams:
    if security != KAPPA:
        raise UsageError(f"only {KAPPA}-bit keys are supported")
    if mode not in ("dealer", "dh"):
        raise UsageError(f"unknown NIKE mode {mode!r}")
    limit = DH_MAX_SET_SIZE if mode == "dh" else NIKE_MAX_SET_SIZE
    if mode == "dh" and max_set_size > limit:
        raise UsageError(f"dh NIKE derives pairwise keys only (sets of 1..{limit}); use dealer mode for sets of up to {NIKE_MAX_SET_SIZE}")
    if not 1 <= max_set_size <= limit:
        raise UsageError(f"{mode} NIKE supports sets of 1..{limit} members")
    if parties < 1:
        raise UsageError("NIKE needs at least one party")
    logger.debug(f"NIKE setup: mode={mode}, M={max_set_size}, N={parties}")
    return NikeParams(max_set_size, parties, mode, seed=seed)


def _dealer_key(params: NikeParams, members: Iterable[int]) -> bytes:
    return _hmac(derive_seed(params.seed, "nike/dealer"), _set_label(members))


def nike_publish(params: NikeParams, i: int) -> tuple[bytes, DealerSecret | DhSecret]:
    """Returns the public key and the secret of party i."""
    params.check_index(i)
    if params.mode == "dealer":
        others = [j for j in range(1, params.parties + 1) if j != i]
        keys = {}
        for size in range(params.max_set_size):
            for rest in combinations(others, size):
                members = (i, *rest)
                keys[_set_label(members)] = _dealer_key(params, members)
        return str(i).encode(), DealerSecret(i, keys)
    rng = random.Random(derive_seed(params.seed, f"nike/dh/{i}"))
    exponent = params.group.random_exponent(rng)
    return params.group.encode(params.group.base_exp(exponent)), DhSecret(i, exponent)


def nike_keygen(params: NikeParams, i: int, secret: DealerSecret | DhSecret, members: Iterable[int], public_keys: Mapping[int, bytes]) -> bytes:
    members = sorted(set(members))
    params.check_index(i)
    if i not in members:
        raise IndexOutOfSetError(f"party {i} is not a member of {members}")
    if len(members) > params.max_set_size:
        raise IndexOutOfSetError(f"set of {len(members)} exceeds the maximum size {params.max_set_size}")
    for j in members:
        params.check_index(j)

    label = _set_label(members)
    if isinstance(secret, DealerSecret):
        if label not in secret.keys:
            raise IndexOutOfSetError(f"the dealer issued party {secret.index} no key for {members}")
        return secret.keys[label]

    group = params.group
    (peer,) = [j for j in members if j != i] or [i]
    if peer not in public_keys:
        raise IndexOutOfSetError(f"no public key for party {peer}")
    element = group.decode(public_keys[peer])
    if not group.is_element(element):
        raise IndexOutOfSetError(f"public key of party {peer} is not a group element")
    shared = group.exp(element, secret.exponent)
    return _hmac(group.hash(shared), b"nike/" + label)


def star_keys(params: NikeParams, hub: int, hub_secret: DealerSecret | DhSecret, spokes: Iterable[int], public_keys: Mapping[int, bytes]) -> dict[int, bytes]:
    """The hub's pairwise key with every spoke."""
    return {j: nike_keygen(params, hub, hub_secret, {hub, j}, public_keys) for j in spokes}
