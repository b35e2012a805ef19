"""Simulated blockchain: hash-linked ledger, byte-equality quorum consensus, oracle calls, gas and deposits."""
import json
import os
import threading
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, NamedTuple, Sequence

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from utils.constants import (
    DEFAULT_QUORUM,
    GENESIS_DIGEST,
    INLINE_RESULT_LIMIT,
    OFFCHAIN_REFERENCE_USD,
    ORACLE_RETURN_GAS,
)
from utils.exceptions import (
    ConsensusFailureError,
    InsufficientGasError,
    InvalidTransitionError,
    LedgerIntegrityError,
    OracleDecryptionError,
    UsageError,
)
from utils.logger_config import configure_logger
from utils.utils import canonical_json, sha256_hex

logger = configure_logger(__name__)

Record = dict[str, Any]


def block_digest(height: int, payload: Sequence[Record], prev_digest: str) -> str:
    return sha256_hex(canonical_json({"height": height, "payload": list(payload), "prev": prev_digest}).encode())


@dataclass(frozen=True)
class Block:
    height: int
    payload: tuple[Record, ...]
    prev_digest: str
    digest: str


@dataclass
class Ledger:
    """Append-only block list plus a content-addressed blob store standing in for IPFS."""

    blocks: list[Block] = field(default_factory=list)
    blob_store: dict[str, bytes] = field(default_factory=dict)
    _writer: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    @property
    def head_digest(self) -> str:
        return self.blocks[-1].digest if self.blocks else GENESIS_DIGEST

    @property
    def height(self) -> int:
        return len(self.blocks)

    def put_blob(self, data: bytes) -> str:
        digest = sha256_hex(data)
        self.blob_store[digest] = bytes(data)
        return digest

    def get_blob(self, digest: str) -> bytes:
        return self.blob_store[digest]

    def append(self, payload: Sequence[Record]) -> Block:
        for record in payload:
            blob = record.get("blob")
            if blob is not None and blob not in self.blob_store:
                raise LedgerIntegrityError(f"record references missing blob {blob}")
        with self._writer:
            height = len(self.blocks)
            prev = self.head_digest
            block = Block(height, tuple(payload), prev, block_digest(height, payload, prev))
            self.blocks.append(block)
        logger.info(f"block {block.height} appended ({block.digest[:12]})")
        return block

    def records(self, kind: str) -> list[Record]:
        return [record for block in self.blocks for record in block.payload if record.get("kind") == kind]


def verify_integrity(ledger: Ledger) -> bool:
    prev = GENESIS_DIGEST
    for height, block in enumerate(ledger.blocks):
        if block.height != height or block.prev_digest != prev:
            raise LedgerIntegrityError(f"block {height} breaks the chain linkage")
        if block_digest(block.height, block.payload, block.prev_digest) != block.digest:
            raise LedgerIntegrityError(f"block {height} payload does not match its digest")
        for record in block.payload:
            blob = record.get("blob")
            if blob is not None and sha256_hex(ledger.blob_store.get(blob, b"")) != blob:
                raise LedgerIntegrityError(f"block {height} references a missing or altered blob")
        prev = block.digest
    return True


def export_ledger(ledger: Ledger) -> str:
    lines = []
    for block in ledger.blocks:
        lines.append(canonical_json({"height": block.height, "prev": block.prev_digest, "digest": block.digest, "payload": list(block.payload)}))
    return "\n".join(lines) + ("\n" if lines else "")


def import_ledger(text: str, blobs: dict[str, bytes] | None = None) -> Ledger:
    ledger = Ledger(blob_store=dict(blobs or {}))
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
            ledger.blocks.append(Block(raw["height"], tuple(raw["payload"]), raw["prev"], raw["digest"]))
        except (ValueError, KeyError) as error:
            raise LedgerIntegrityError(f"line {number}: malformed block record") from error
    verify_integrity(ledger)
    return ledger


def export_blobs(ledger: Ledger, directory: str | os.PathLike):
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    for digest, data in ledger.blob_store.items():
        (path / digest).write_bytes(data)


def import_blobs(directory: str | os.PathLike) -> dict[str, bytes]:
    return {entry.name: entry.read_bytes() for entry in Path(directory).iterdir() if entry.is_file()}


# ---- consensus -------------------------------------------------------------


def _result_record(result: bytes, nodes: Sequence[str], ledger: Ledger, **extra) -> Record:
    record: Record = {"kind": "result", "digest": sha256_hex(result), "nodes": list(nodes), **extra}
    if len(result) <= INLINE_RESULT_LIMIT:
        record["value"] = result.hex()
    else:
        record["blob"] = ledger.put_blob(result)
    return record


def append_with_consensus(
    ledger: Ledger,
    results: Sequence[tuple[str, bytes]],
    quorum: int | None = DEFAULT_QUORUM,
    **extra,
) -> Block:
    """Commits the result at least quorum distinct nodes produced byte for byte.

    Each node votes once. When two different results both reach a quorum of
    at most n/2 nothing is committed.
    """
    by_node = dict(results)
    if len(by_node) != len(results):
        duplicated = sorted({node for node, _ in results if sum(other == node for other, _ in results) > 1})
        raise UsageError(f"nodes {duplicated} reported more than once")
    k = len(by_node) if quorum is None else quorum
    if k < 1:
        raise UsageError(f"quorum must be at least 1, got {k}")
    if len(by_node) < k:
        logger.error(f"consensus needs {k} nodes, {len(by_node)} reported")
        raise ConsensusFailureError(f"only {len(by_node)} of the required {k} nodes reported", [])

    tally = Counter(by_node.values())
    winner, votes = tally.most_common(1)[0]
    dissenting = [node for node, result in by_node.items() if result != winner]
    if votes < k:
        logger.error(f"consensus failed: best result has {votes} of {k} votes")
        raise ConsensusFailureError(f"no result reached the quorum of {k}", dissenting)
    if sum(count >= k for count in tally.values()) > 1:
        logger.error(f"consensus failed: several results reached the quorum of {k}")
        raise ConsensusFailureError(f"conflicting results each reached the quorum of {k}", sorted(by_node))
    agreeing = [node for node, result in by_node.items() if result == winner]
    return ledger.append([_result_record(winner, agreeing, ledger, **extra)])


# ---- oracle calls ----------------------------------------------------------

_HKDF_INFO = b"veil oracle parameters"


class OracleCall(NamedTuple):
    ephemeral_public: bytes
    nonce: bytes
    ciphertext: bytes
    gas: int


class OracleResult(NamedTuple):
    inline: bytes | None
    blob: str | None
    block: Block

    def resolve(self, ledger: Ledger) -> bytes:
        return self.inline if self.inline is not None else ledger.get_blob(self.blob)


def _oracle_key(private: X25519PrivateKey, peer: X25519PublicKey) -> bytes:
    shared = private.exchange(peer)
    return HKDF(algorithm=hashes.SHA256(), length=32, salt=None, info=_HKDF_INFO).derive(shared)


def public_bytes(key: X25519PublicKey) -> bytes:
    return key.public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)


def encrypt_call(executor_public: X25519PublicKey, parameters: bytes, gas: int) -> OracleCall:
    ephemeral = X25519PrivateKey.generate()
    nonce = os.urandom(12)
    ciphertext = AESGCM(_oracle_key(ephemeral, executor_public)).encrypt(nonce, parameters, None)
    return OracleCall(public_bytes(ephemeral.public_key()), nonce, ciphertext, gas)


@dataclass
class OracleExecutor:
    """An off-chain executor holding the key the call parameters are encrypted to."""

    callback: Callable[[bytes], bytes]
    private_key: X25519PrivateKey = field(default_factory=X25519PrivateKey.generate)

    @property
    def public_key(self) -> X25519PublicKey:
        return self.private_key.public_key()

    def decrypt(self, call: OracleCall) -> bytes:
        key = _oracle_key(self.private_key, X25519PublicKey.from_public_bytes(call.ephemeral_public))
        try:
            return AESGCM(key).decrypt(call.nonce, call.ciphertext, None)
        except InvalidTag:
            logger.error("oracle call parameters do not decrypt under the executor key")
            raise OracleDecryptionError("parameters were not encrypted for this executor") from None


def oracle_roundtrip(ledger: Ledger, call: OracleCall, executor: OracleExecutor) -> OracleResult:
    if call.gas < ORACLE_RETURN_GAS:
        logger.error(f"oracle call carries {call.gas} gas, returning a result costs {ORACLE_RETURN_GAS}")
        raise InsufficientGasError(f"gas budget {call.gas} is below the return cost {ORACLE_RETURN_GAS}")
    parameters = executor.decrypt(call)
    result = executor.callback(parameters)
    request = {"kind": "oracle-request", "call": sha256_hex(call.ciphertext), "gas": call.gas}
    if len(result) <= INLINE_RESULT_LIMIT:
        block = ledger.append([request, {"kind": "oracle-result", "value": result.hex()}])
        return OracleResult(result, None, block)
    digest = ledger.put_blob(result)
    block = ledger.append([request, {"kind": "oracle-result", "blob": digest}])
    return OracleResult(None, digest, block)


# ---- costs -----------------------------------------------------------------


def gas_cost(ops: int, gas_per_op: float, gwei_per_gas: float, usd_per_eth: float) -> float:
    return ops * gas_per_op * gwei_per_gas * 1e-9 * usd_per_eth


def offchain_cost(seconds: float, usd_per_hour: float) -> float:
    return seconds * usd_per_hour / 3600


def cost_ratio(onchain_usd: float, offchain_usd: float = OFFCHAIN_REFERENCE_USD) -> float:
    return onchain_usd / offchain_usd


# ---- deposits --------------------------------------------------------------


class DepositStatus(str, Enum):
    HELD = "held"
    CONFISCATED = "confiscated"
    RETURNED = "returned"


class DepositEvent(str, Enum):
    MISBEHAVIOR = "misbehavior"
    COMPLETION = "completion"


_TRANSITIONS = {DepositEvent.MISBEHAVIOR: DepositStatus.CONFISCATED, DepositEvent.COMPLETION: DepositStatus.RETURNED}


@dataclass(frozen=True)
class DepositRecord:
    party: str
    amount: int
    status: DepositStatus = DepositStatus.HELD

    def __post_init__(self):
        if self.amount < 0:
            raise ValueError("deposit amount must be nonnegative")


def _deposit_entry(record: DepositRecord) -> Record:
    return {"kind": "deposit", "party": record.party, "amount": record.amount, "status": record.status.value}


def open_deposit(ledger: Ledger, party: str, amount: int) -> DepositRecord:
    record = DepositRecord(str(party), amount)
    ledger.append([_deposit_entry(record)])
    return record


def manage_deposit(ledger: Ledger, record: DepositRecord, event: DepositEvent | str) -> DepositRecord:
    event = DepositEvent(event)
    if record.status is not DepositStatus.HELD:
        logger.error(f"deposit of {record.party} is already {record.status.value}")
        raise InvalidTransitionError(f"{record.status.value} + {event.value} is not a valid transition")
    updated = replace(record, status=_TRANSITIONS[event])
    ledger.append([_deposit_entry(updated)])
    return updated
