"""Outsourced computation for parties that go offline after uploading their inputs.

Each contract party shares a NIKE key with the garbling node N_G. It uploads
PRF encodings of its input bits to the evaluating node N_E once, and is then
free to leave. For every later computation N_G garbles the contract and
builds a pivot table per input wire: the two wire labels, each sealed under
the PRF encoding of the matching bit. N_E can open exactly the entry its
stored encoding fits, evaluates, and hands the output labels back to N_G.
"""
import json
import struct
from dataclasses import dataclass, field
from typing import Sequence

from cryptography.hazmat.primitives import hashes, hmac

from lib.circuit import Circuit
from lib.garble import (
    ROW_BYTES,
    decode,
    deserialize_garbled,
    eval_garbled,
    garble,
    pack_labels,
    seal,
    serialize_garbled,
    unpack_labels,
    unseal,
)
from lib.nike import NikeMode, NikeParams, nike_keygen, nike_publish, nike_setup, star_keys
from lib.transport import PartyContext, PartyId, Role, Transcript, run_session
from utils.constants import CHANNEL_LATENCY_MS, LABEL_BYTES, PIVOT_MAGIC
from utils.exceptions import InputArityError, MissingPartyError, PivotDecryptionError, SessionAbortedError, UsageError
from utils.logger_config import configure_logger
from utils.utils import bits_to_bytes, bytes_to_bits, derive_seed, phase_timer

logger = configure_logger(__name__)

NONCE_BYTES = 16
STORE_FORMAT = "veil-encodings/1"
STORED_ACK = b"stored"
GARBLING_NODE = PartyId(Role.GARBLER, 0)
EVALUATING_NODE = PartyId(Role.EVALUATOR, 0)

_PRF_INPUT = struct.Struct(f">BI{NONCE_BYTES}sI")
_PIVOT_HEADER = struct.Struct(">4sI")


def prf(key: bytes, bit: int, index: int, nonce: bytes, party: int) -> bytes:
    """PRF_k(bit, index, nonce, party) truncated to one label."""
    mac = hmac.HMAC(key, hashes.SHA256())
    mac.update(_PRF_INPUT.pack(bit, index, nonce, party))
    return mac.finalize()[:LABEL_BYTES]


def outsourcing_party(i: int) -> PartyId:
    return PartyId(Role.CONTRACT_PARTY, i)


# ---- keys --------------------------------------------------------------------


@dataclass(frozen=True)
class OutsourceKeys:
    """Pairwise keys between every contract party and N_G, derived from both ends."""

    params: NikeParams
    party_keys: dict[int, bytes] = field(repr=False)
    garbler_keys: dict[int, bytes] = field(repr=False)

    @property
    def hub(self) -> int:
        return self.params.parties


def establish_keys(parties: int, mode: NikeMode = "dealer", seed: bytes = b"") -> OutsourceKeys:
    """Runs NIKE for parties 1..n with N_G as party n + 1; each side derives its own copy."""
    if parties < 1:
        raise UsageError("outsourcing needs at least one contract party")
    params = nike_setup(2, parties + 1, mode=mode, seed=derive_seed(seed, "nike"))
    hub = parties + 1
    published = {i: nike_publish(params, i) for i in range(1, hub + 1)}
    public_keys = {i: pk for i, (pk, _) in published.items()}
    party_keys = {i: nike_keygen(params, i, published[i][1], {i, hub}, public_keys) for i in range(1, hub)}
    garbler_keys = star_keys(params, hub, published[hub][1], range(1, hub), public_keys)
    return OutsourceKeys(params, party_keys, garbler_keys)


# ---- upload ------------------------------------------------------------------


@dataclass(frozen=True)
class EncodedInput:
    party: int
    nonce: bytes
    encodings: tuple[bytes, ...] = field(repr=False)

    @property
    def width(self) -> int:
        return len(self.encodings)


@dataclass
class EncodingStore:
    """What N_E keeps: the encodings and nonce of every uploaded input, never the bits."""

    records: dict[int, EncodedInput] = field(default_factory=dict)
    uploads: int = 0
    transcripts: list[Transcript] = field(default_factory=list, repr=False)

    def get(self, party: int) -> EncodedInput:
        if party not in self.records:
            logger.error(f"no stored encodings for party {party}")
            raise MissingPartyError(f"party {party} has not uploaded its private parameters")
        return self.records[party]

    def nonces(self, parties: Sequence[int]) -> bytes:
        return b"".join(self.get(j).nonce for j in parties)


def encode_input(key: bytes, party: int, bits: Sequence[int], nonce: bytes) -> EncodedInput:
    return EncodedInput(party, nonce, tuple(prf(key, bit, l, nonce, party) for l, bit in enumerate(bits, start=1)))


def send_private_parameters(
    party: int,
    bits: Sequence[int],
    key: bytes,
    store: EncodingStore,
    seed: bytes = b"",
    nonce: bytes | None = None,
    latency_ms: float = CHANNEL_LATENCY_MS,
) -> EncodedInput:
    """Party ``party`` encodes its bits under a fresh nonce and uploads them to N_E."""
    if nonce is not None and len(nonce) != NONCE_BYTES:
        raise UsageError(f"nonce must be {NONCE_BYTES} bytes")
    sender = outsourcing_party(party)
    width = len(bits)

    def upload(ctx: PartyContext):
        fresh = nonce if nonce is not None else ctx.random_bytes(NONCE_BYTES)
        record = encode_input(key, party, bits, fresh)
        ctx.send(EVALUATING_NODE, fresh + b"".join(record.encodings))
        if (yield ctx.recv(EVALUATING_NODE)) != STORED_ACK:
            raise SessionAbortedError(f"N_E did not confirm the upload of party {party}")
        return record

    def keep(ctx: PartyContext):
        data = yield ctx.recv(sender)
        encodings = tuple(data[i : i + LABEL_BYTES] for i in range(NONCE_BYTES, len(data), LABEL_BYTES))
        if len(encodings) != width:
            raise InputArityError(f"party {party} uploaded {len(encodings)} encodings for {width} bits")
        ctx.send(sender, STORED_ACK)
        return EncodedInput(party, data[:NONCE_BYTES], encodings)

    outcome = run_session(
        [sender, EVALUATING_NODE],
        {sender: upload, EVALUATING_NODE: keep},
        derive_seed(seed, f"upload/{party}"),
        latency_ms,
        phase="upload",
    )
    stored = outcome.outputs[EVALUATING_NODE]
    store.records[party] = stored
    store.uploads += 1
    store.transcripts.append(outcome.transcript)
    logger.info(f"party {party} uploaded {width} encoded bits to N_E")
    return outcome.outputs[sender]


def dump_store(store: EncodingStore) -> str:
    return json.dumps(
        {
            "format": STORE_FORMAT,
            "parties": {
                str(j): {"nonce": record.nonce.hex(), "encodings": [e.hex() for e in record.encodings]}
                for j, record in sorted(store.records.items())
            },
        },
        indent=2,
    )


def load_store(text: str) -> EncodingStore:
    try:
        raw = json.loads(text)
        if raw.get("format") != STORE_FORMAT:
            raise UsageError(f"not a {STORE_FORMAT} file")
        records = {
            int(j): EncodedInput(int(j), bytes.fromhex(entry["nonce"]), tuple(bytes.fromhex(e) for e in entry["encodings"]))
            for j, entry in raw["parties"].items()
        }
    except (ValueError, KeyError, TypeError, AttributeError) as error:
        raise UsageError(f"malformed encoding store: {error}") from error
    return EncodingStore(records)


# ---- pivot tables --------------------------------------------------------------

PivotTable = tuple[tuple[tuple[bytes, bytes], ...], ...]


def serialize_pivots(table: PivotTable) -> bytes:
    parts = [_PIVOT_HEADER.pack(PIVOT_MAGIC, len(table))]
    parts.append(struct.pack(f">{len(table)}I", *(len(rows) for rows in table)))
    for rows in table:
        parts.extend(first + second for first, second in rows)
    return b"".join(parts)


def deserialize_pivots(data: bytes) -> PivotTable:
    try:
        magic, count = _PIVOT_HEADER.unpack_from(data)
        widths = struct.unpack_from(f">{count}I", data, _PIVOT_HEADER.size)
    except struct.error as error:
        raise PivotDecryptionError(f"truncated pivot table: {error}") from error
    if magic != PIVOT_MAGIC:
        raise PivotDecryptionError("not a pivot table of this version")
    offset = _PIVOT_HEADER.size + 4 * count
    if offset + 2 * ROW_BYTES * sum(widths) != len(data):
        raise PivotDecryptionError("pivot table has the wrong length")
    table = []
    for width in widths:
        rows = []
        for _ in range(width):
            rows.append((data[offset : offset + ROW_BYTES], data[offset + ROW_BYTES : offset + 2 * ROW_BYTES]))
            offset += 2 * ROW_BYTES
        table.append(tuple(rows))
    return tuple(table)


def build_pivots(encoding, circuit: Circuit, keys: dict[int, bytes], nonces: dict[int, bytes], parties: Sequence[int], rng) -> PivotTable:
    table = []
    for j, segment in zip(parties, circuit.input_segments):
        rows = []
        for l, wire in enumerate(segment, start=1):
            zero, one = encoding.pair(wire)
            entries = [seal(prf(keys[j], 0, l, nonces[j], j), zero), seal(prf(keys[j], 1, l, nonces[j], j), one)]
            rng.shuffle(entries)
            rows.append(tuple(entries))
        table.append(tuple(rows))
    return tuple(table)


def open_pivot(entries: tuple[bytes, bytes], encoding: bytes, where: str) -> int:
    """Exactly one of the two entries must open under the stored encoding."""
    opened = [label for label in (unseal(encoding, row) for row in entries) if label is not None]
    if len(opened) != 1:
        logger.error(f"pivot entry {where}: {len(opened)} of 2 entries opened")
        raise PivotDecryptionError(f"pivot entry {where} did not open to exactly one label")
    return opened[0]


# ---- secure computation ----------------------------------------------------------


@dataclass
class OutsourceResult:
    contract: str
    output: list[int]
    requester: int
    transcript: Transcript
    timings: dict[str, float] = field(default_factory=dict)

    def sent_by_parties(self) -> int:
        return len(self.transcript.sent_by(Role.CONTRACT_PARTY))


def seccomp(
    contract: Circuit,
    store: EncodingStore,
    keys: OutsourceKeys,
    requester: int = 1,
    parties: Sequence[int] | None = None,
    seed: bytes = b"",
    latency_ms: float = CHANNEL_LATENCY_MS,
) -> OutsourceResult:
    """Evaluates contract on the stored inputs of ``parties`` (1..n by default) and delivers the result to ``requester``."""
    parties = list(parties) if parties is not None else list(range(1, len(contract.input_widths) + 1))
    if len(parties) != len(contract.input_widths):
        raise InputArityError(f"{contract.name or 'contract'} takes {len(contract.input_widths)} inputs, got {len(parties)} parties")
    if requester not in parties:
        raise UsageError(f"requesting party {requester} supplies no input to {contract.name or 'the contract'}")
    for j, width in zip(parties, contract.input_widths):
        if store.get(j).width != width:
            raise InputArityError(f"party {j} stored {store.get(j).width} encodings, its segment holds {width}")
        if j not in keys.garbler_keys:
            raise MissingPartyError(f"N_G shares no key with party {j}")

    client = outsourcing_party(requester)
    output_width = len(contract.output_wires)
    timings: dict[str, float] = {}

    def garbler(ctx: PartyContext):
        ctx.send(EVALUATING_NODE, struct.pack(f">{len(parties)}I", *parties))
        data = yield ctx.recv(EVALUATING_NODE)
        nonces = {j: data[k * NONCE_BYTES : (k + 1) * NONCE_BYTES] for k, j in enumerate(parties)}
        ctx.mark("garble")
        gc, encoding, decoding = garble(contract, derive_seed(ctx.seed, "garble"))
        pivots = build_pivots(encoding, contract, keys.garbler_keys, nonces, parties, ctx.rng)
        ctx.send(EVALUATING_NODE, serialize_garbled(gc))
        ctx.send(EVALUATING_NODE, serialize_pivots(pivots))
        ctx.mark("evaluate")
        output = decode(decoding, unpack_labels((yield ctx.recv(EVALUATING_NODE))))
        ctx.mark("return")
        ctx.send(client, bits_to_bytes(output))
        return output

    def evaluator(ctx: PartyContext):
        requested = yield ctx.recv(GARBLING_NODE)
        wanted = struct.unpack(f">{len(requested) // 4}I", requested)
        ctx.send(GARBLING_NODE, store.nonces(wanted))
        gc = deserialize_garbled((yield ctx.recv(GARBLING_NODE)))
        pivots = deserialize_pivots((yield ctx.recv(GARBLING_NODE)))
        labels = []
        for j, rows in zip(wanted, pivots):
            stored = store.get(j)
            for l, entries in enumerate(rows, start=1):
                labels.append(open_pivot(entries, stored.encodings[l - 1], f"({j}, {l})"))
        ctx.send(GARBLING_NODE, pack_labels(eval_garbled(gc, labels)))
        return None

    def receive(ctx: PartyContext):
        return bytes_to_bits((yield ctx.recv(GARBLING_NODE)), output_width)

    name = contract.name or contract.digest[:12]
    logger.info(f"seccomp start: {name} on stored inputs of parties {parties}, requested by {requester}")
    with phase_timer(timings, "seccomp"):
        outcome = run_session(
            [GARBLING_NODE, EVALUATING_NODE, client],
            {GARBLING_NODE: garbler, EVALUATING_NODE: evaluator, client: receive},
            derive_seed(seed, f"seccomp/{contract.digest}"),
            latency_ms,
            phase="seccomp",
        )
    logger.info(f"seccomp finished: {name}, {len(outcome.transcript)} messages")
    return OutsourceResult(name, outcome.outputs[client], requester, outcome.transcript, timings)


def outsource_contract(
    contract: Circuit,
    inputs: Sequence[Sequence[int]],
    requester: int = 1,
    seed: bytes = b"",
    mode: NikeMode = "dealer",
    latency_ms: float = CHANNEL_LATENCY_MS,
) -> tuple[OutsourceResult, EncodingStore]:
    """Key setup, one upload per party, then a single seccomp."""
    keys = establish_keys(len(inputs), mode, seed)
    store = EncodingStore()
    for j, bits in enumerate(inputs, start=1):
        send_private_parameters(j, bits, keys.party_keys[j], store, seed, latency_ms=latency_ms)
    return seccomp(contract, store, keys, requester, seed=seed, latency_ms=latency_ms), store
