"""Yao garbling with free-XOR and four-row point-and-permute tables.

Labels are 128-bit integers; the least significant bit is the permute bit.
Each AND row is an authenticated encryption of the output label under a key
hashed from both input labels and the gate position, so a wrong label is
detected instead of silently producing garbage.
"""
import hashlib
import struct
from dataclasses import dataclass, field
from typing import Sequence

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from lib.circuit import Circuit, Gate, GateKind, gate_counts
from utils.constants import GARBLED_MAGIC, KAPPA, LABEL_BYTES, TAG_BYTES
from utils.exceptions import DecryptionFailureError, GarbledFormatError, InputArityError, UnknownLabelError
from utils.logger_config import configure_logger

logger = configure_logger(__name__)

ROW_BYTES = LABEL_BYTES + TAG_BYTES
TABLE_BYTES = 4 * ROW_BYTES
LABEL_MASK = (1 << KAPPA) - 1
DECODING_TAG_BYTES = 8

WireLabel = int


def permute_bit(label: WireLabel) -> int:
    return label & 1


def label_bytes(label: WireLabel) -> bytes:
    return label.to_bytes(LABEL_BYTES, "big")


class LabelPrg:
    """AES-CTR keystream cut into labels."""

    def __init__(self, seed: bytes):
        if len(seed) != 32:
            raise ValueError("garbling seed must be 256 bits")
        self._encryptor = Cipher(algorithms.AES(seed), modes.CTR(bytes(16))).encryptor()

    def labels(self, count: int) -> list[WireLabel]:
        stream = self._encryptor.update(bytes(LABEL_BYTES * count))
        return [int.from_bytes(stream[i : i + LABEL_BYTES], "big") for i in range(0, len(stream), LABEL_BYTES)]


def row_key(*parts: bytes) -> bytes:
    return hashlib.sha256(b"".join(parts)).digest()


def seal(key: bytes, label: WireLabel) -> bytes:
    body = label ^ int.from_bytes(key[:LABEL_BYTES], "big")
    tag = hashlib.sha256(key + label_bytes(label)).digest()[:TAG_BYTES]
    return label_bytes(body) + tag


def unseal(key: bytes, row: bytes) -> WireLabel | None:
    label = int.from_bytes(row[:LABEL_BYTES], "big") ^ int.from_bytes(key[:LABEL_BYTES], "big")
    if hashlib.sha256(key + label_bytes(label)).digest()[:TAG_BYTES] != row[LABEL_BYTES:ROW_BYTES]:
        return None
    return label


def _gate_key(a: WireLabel, b: WireLabel, index: int) -> bytes:
    return row_key(label_bytes(a), label_bytes(b), index.to_bytes(8, "big"))


@dataclass(frozen=True)
class GarbledCircuit:
    """Public topology plus one 4-row table per AND gate, in gate order."""

    circuit: Circuit
    tables: tuple[bytes, ...]
    circuit_digest: str
    free_xor: bool = True

    @property
    def row_count(self) -> int:
        return 4 * len(self.tables)


@dataclass(frozen=True)
class InputEncoding:
    zero_labels: tuple[WireLabel, ...]
    offset: WireLabel = field(repr=False)

    def pair(self, wire: int) -> tuple[WireLabel, WireLabel]:
        zero = self.zero_labels[wire]
        return zero, zero ^ self.offset

    def segment(self, wires: range) -> "InputEncoding":
        return InputEncoding(self.zero_labels[wires.start : wires.stop], self.offset)

    def __len__(self) -> int:
        return len(self.zero_labels)


@dataclass(frozen=True)
class OutputDecoding:
    permute_bits: tuple[int, ...]
    zero_tags: tuple[bytes, ...]
    one_tags: tuple[bytes, ...]


def _decoding_tag(label: WireLabel) -> bytes:
    return hashlib.sha256(b"out" + label_bytes(label)).digest()[:DECODING_TAG_BYTES]


def garble(circuit: Circuit, seed: bytes) -> tuple[GarbledCircuit, InputEncoding, OutputDecoding]:
    counts = gate_counts(circuit)
    prg = LabelPrg(seed)
    randomness = iter(prg.labels(1 + circuit.input_count + counts.and_count))
    offset = next(randomness) | 1

    zero = [0] * circuit.wire_count
    for wire in range(circuit.input_count):
        zero[wire] = next(randomness)

    tables = []
    for index, (kind, ins, out) in enumerate(circuit.gates):
        if kind is GateKind.XOR:
            zero[out] = zero[ins[0]] ^ zero[ins[1]]
        elif kind is GateKind.INV:
            zero[out] = zero[ins[0]] ^ offset
        else:
            a0, b0 = zero[ins[0]], zero[ins[1]]
            c0 = next(randomness)
            zero[out] = c0
            rows: list[bytes] = [b""] * 4
            for va in (0, 1):
                a = a0 ^ offset if va else a0
                for vb in (0, 1):
                    b = b0 ^ offset if vb else b0
                    c = c0 ^ offset if va & vb else c0
                    rows[((a & 1) << 1) | (b & 1)] = seal(_gate_key(a, b, index), c)
            tables.append(b"".join(rows))

    encoding = InputEncoding(tuple(zero[: circuit.input_count]), offset)
    outputs = [zero[wire] for wire in circuit.output_wires]
    decoding = OutputDecoding(
        permute_bits=tuple(permute_bit(label) for label in outputs),
        zero_tags=tuple(_decoding_tag(label) for label in outputs),
        one_tags=tuple(_decoding_tag(label ^ offset) for label in outputs),
    )
    logger.debug(f"garbled {circuit.name or circuit.digest[:12]}: {counts.and_count} tables")
    return GarbledCircuit(circuit, tuple(tables), circuit.digest), encoding, decoding


def encode(encoding: InputEncoding, inputs: Sequence[int]) -> list[WireLabel]:
    if len(inputs) != len(encoding):
        raise InputArityError(f"encoding covers {len(encoding)} wires, got {len(inputs)} bits")
    return [zero ^ encoding.offset if bit else zero for zero, bit in zip(encoding.zero_labels, inputs)]


@dataclass
class EvaluationAudit:
    """Instrumentation for tests: what the evaluator could decrypt and which labels it held."""

    decryptable_rows: list[int] = field(default_factory=list)
    labels_seen: dict[int, set[WireLabel]] = field(default_factory=dict)

    def hold(self, wire: int, label: WireLabel):
        self.labels_seen.setdefault(wire, set()).add(label)


def eval_garbled(gc: GarbledCircuit, labels: Sequence[WireLabel], audit: EvaluationAudit | None = None) -> list[WireLabel]:
    circuit = gc.circuit
    if len(labels) != circuit.input_count:
        raise InputArityError(f"circuit has {circuit.input_count} input wires, got {len(labels)} labels")
    values = [0] * circuit.wire_count
    values[: circuit.input_count] = labels
    tables = iter(gc.tables)
    for index, (kind, ins, out) in enumerate(circuit.gates):
        if kind is GateKind.XOR:
            values[out] = values[ins[0]] ^ values[ins[1]]
        elif kind is GateKind.INV:
            values[out] = values[ins[0]]
        else:
            a, b = values[ins[0]], values[ins[1]]
            table = next(tables)
            key = _gate_key(a, b, index)
            position = (((a & 1) << 1) | (b & 1)) * ROW_BYTES
            label = unseal(key, table[position : position + ROW_BYTES])
            if label is None:
                logger.error(f"row authentication failed at gate {index}")
                raise DecryptionFailureError(f"gate {index}: no row authenticates under the held labels")
            values[out] = label
            if audit is not None:
                audit.decryptable_rows.append(
                    sum(unseal(key, table[i : i + ROW_BYTES]) is not None for i in range(0, TABLE_BYTES, ROW_BYTES))
                )
    if audit is not None:
        for wire, label in enumerate(values):
            audit.hold(wire, label)
    return [values[wire] for wire in circuit.output_wires]


def decode(decoding: OutputDecoding, labels: Sequence[WireLabel]) -> list[int]:
    if len(labels) != len(decoding.permute_bits):
        raise InputArityError(f"decoding covers {len(decoding.permute_bits)} outputs, got {len(labels)} labels")
    bits = []
    for i, label in enumerate(labels):
        bit = permute_bit(label) ^ decoding.permute_bits[i]
        expected = decoding.one_tags[i] if bit else decoding.zero_tags[i]
        if _decoding_tag(label) != expected:
            raise UnknownLabelError(f"output {i}: label matches neither output label")
        bits.append(bit)
    return bits


# ---- binary formats ------------------------------------------------------

_HEADER = struct.Struct(">4sHIIIII32s?")
_GATE = struct.Struct(">BIII")
_KIND_CODES = {GateKind.AND: 0, GateKind.XOR: 1, GateKind.INV: 2}
_CODE_KINDS = {code: kind for kind, code in _KIND_CODES.items()}


def serialize_garbled(gc: GarbledCircuit) -> bytes:
    circuit = gc.circuit
    parts = [
        _HEADER.pack(
            GARBLED_MAGIC,
            KAPPA,
            circuit.wire_count,
            len(circuit.input_widths),
            len(circuit.output_widths),
            len(circuit.gates),
            len(gc.tables),
            bytes.fromhex(gc.circuit_digest),
            gc.free_xor,
        ),
        struct.pack(f">{len(circuit.input_widths)}I", *circuit.input_widths),
        struct.pack(f">{len(circuit.output_widths)}I", *circuit.output_widths),
    ]
    for kind, ins, out in circuit.gates:
        parts.append(_GATE.pack(_KIND_CODES[kind], ins[0], ins[-1], out))
    parts.extend(gc.tables)
    return b"".join(parts)


def deserialize_garbled(data: bytes) -> GarbledCircuit:
    try:
        magic, kappa, wire_count, parties, outputs, gate_total, table_total, digest, free_xor = _HEADER.unpack_from(data)
        if magic != GARBLED_MAGIC or kappa != KAPPA:
            raise GarbledFormatError("not a garbled circuit of this version")
        offset = _HEADER.size
        input_widths = struct.unpack_from(f">{parties}I", data, offset)
        offset += 4 * parties
        output_widths = struct.unpack_from(f">{outputs}I", data, offset)
        offset += 4 * outputs
        gates = []
        for _ in range(gate_total):
            code, first, second, out = _GATE.unpack_from(data, offset)
            offset += _GATE.size
            kind = _CODE_KINDS[code]
            gates.append(Gate(kind, (first,) if kind is GateKind.INV else (first, second), out))
        tables = tuple(data[offset + i * TABLE_BYTES : offset + (i + 1) * TABLE_BYTES] for i in range(table_total))
        if offset + table_total * TABLE_BYTES != len(data):
            raise GarbledFormatError("table section has the wrong length")
    except (struct.error, KeyError) as error:
        raise GarbledFormatError(f"truncated or corrupt garbled circuit: {error}") from error
    output_count = sum(output_widths)
    circuit = Circuit(
        wire_count=wire_count,
        input_widths=tuple(input_widths),
        gates=tuple(gates),
        output_wires=tuple(range(wire_count - output_count, wire_count)),
        output_widths=tuple(output_widths),
    )
    if circuit.digest != digest.hex():
        raise GarbledFormatError("circuit digest does not match the topology")
    return GarbledCircuit(circuit, tables, digest.hex(), free_xor)


def pack_labels(labels: Sequence[WireLabel]) -> bytes:
    return b"".join(label_bytes(label) for label in labels)


def unpack_labels(data: bytes) -> list[WireLabel]:
    if len(data) % LABEL_BYTES:
        raise GarbledFormatError("label block is not a whole number of labels")
    return [int.from_bytes(data[i : i + LABEL_BYTES], "big") for i in range(0, len(data), LABEL_BYTES)]


def serialize_decoding(decoding: OutputDecoding) -> bytes:
    parts = [struct.pack(">I", len(decoding.permute_bits)), bytes(decoding.permute_bits)]
    parts.extend(decoding.zero_tags)
    parts.extend(decoding.one_tags)
    return b"".join(parts)


def deserialize_decoding(data: bytes) -> OutputDecoding:
    (count,) = struct.unpack_from(">I", data)
    bits = tuple(data[4 : 4 + count])
    start = 4 + count
    tags = [data[start + i * DECODING_TAG_BYTES : start + (i + 1) * DECODING_TAG_BYTES] for i in range(2 * count)]
    return OutputDecoding(bits, tuple(tags[:count]), tuple(tags[count:]))
