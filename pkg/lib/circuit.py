"""Boolean circuits over {AND, XOR, INV}: representation, evaluation and the Bristol-fashion text format."""
import hashlib
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import NamedTuple, Sequence

from utils.exceptions import CircuitError, CircuitParseError, InputArityError
from utils.logger_config import configure_logger

logger = configure_logger(__name__)


class GateKind(str, Enum):
    AND = "AND"
    XOR = "XOR"
    INV = "INV"


GATE_ARITY = {GateKind.AND: 2, GateKind.XOR: 2, GateKind.INV: 1}


class Gate(NamedTuple):
    kind: GateKind
    inputs: tuple[int, ...]
    output: int


class GateCounts(NamedTuple):
    and_count: int
    xor_count: int
    inv_count: int


@dataclass(frozen=True)
class Circuit:
    """An immutable gate list.

    Wires 0..sum(input_widths)-1 are the primary inputs, laid out party by
    party. Multi-bit values are little-endian: the first wire of a value is
    its least significant bit.
    """

    wire_count: int
    input_widths: tuple[int, ...]
    gates: tuple[Gate, ...]
    output_wires: tuple[int, ...]
    output_widths: tuple[int, ...] = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.output_widths and self.output_wires:
            object.__setattr__(self, "output_widths", (len(self.output_wires),))
        if sum(self.output_widths) != len(self.output_wires):
            raise CircuitError("output widths do not cover the output wires")
        if any(width < 0 for width in self.input_widths):
            raise CircuitError("negative input width")
        input_count = self.input_count
        if input_count > self.wire_count:
            raise CircuitError("more primary inputs than wires")
        driven = bytearray(self.wire_count)
        for wire in range(input_count):
            driven[wire] = 1
        for position, gate in enumerate(self.gates):
            if len(gate.inputs) != GATE_ARITY[gate.kind]:
                raise CircuitError(f"gate {position}: {gate.kind.value} takes {GATE_ARITY[gate.kind]} inputs")
            for wire in gate.inputs:
                if not 0 <= wire < self.wire_count or not driven[wire]:
                    raise CircuitError(f"gate {position}: input wire {wire} is not driven by an earlier gate")
            if not input_count <= gate.output < self.wire_count or driven[gate.output]:
                raise CircuitError(f"gate {position}: output wire {gate.output} is already driven")
            driven[gate.output] = 1
        for wire in self.output_wires:
            if not 0 <= wire < self.wire_count or not driven[wire]:
                raise CircuitError(f"output wire {wire} is never driven")

    @property
    def input_count(self) -> int:
        return sum(self.input_widths)

    @property
    def input_segments(self) -> list[range]:
        segments, start = [], 0
        for width in self.input_widths:
            segments.append(range(start, start + width))
            start += width
        return segments

    @cached_property
    def digest(self) -> str:
        return hashlib.sha256(emit_circuit(self).encode()).hexdigest()


def gate_counts(circuit: Circuit) -> GateCounts:
    and_count = xor_count = inv_count = 0
    for gate in circuit.gates:
        if gate.kind is GateKind.AND:
            and_count += 1
        elif gate.kind is GateKind.XOR:
            xor_count += 1
        else:
            inv_count += 1
    return GateCounts(and_count, xor_count, inv_count)


def _check_arity(circuit: Circuit, inputs: Sequence[Sequence[int]]):
    if len(inputs) != len(circuit.input_widths):
        raise InputArityError(f"{circuit.name or 'circuit'} expects {len(circuit.input_widths)} parties, got {len(inputs)}")
    for party, (bits, width) in enumerate(zip(inputs, circuit.input_widths)):
        if len(bits) != width:
            raise InputArityError(f"party {party} supplied {len(bits)} bits, segment holds {width}")


def eval_plaintext(circuit: Circuit, inputs: Sequence[Sequence[int]]) -> list[int]:
    _check_arity(circuit, inputs)
    values = [0] * circuit.wire_count
    position = 0
    for bits in inputs:
        for bit in bits:
            values[position] = bit & 1
            position += 1
    for kind, ins, out in circuit.gates:
        if kind is GateKind.XOR:
            values[out] = values[ins[0]] ^ values[ins[1]]
        elif kind is GateKind.AND:
            values[out] = values[ins[0]] & values[ins[1]]
        else:
            values[out] = values[ins[0]] ^ 1
    return [values[wire] for wire in circuit.output_wires]


def eval_plaintext_batch(circuit: Circuit, samples: Sequence[Sequence[Sequence[int]]]) -> list[list[int]]:
    """Evaluates many input vectors at once, one bit lane per sample."""
    if not samples:
        return []
    for sample in samples:
        _check_arity(circuit, sample)
    lanes = len(samples)
    mask = (1 << lanes) - 1
    values = [0] * circuit.wire_count
    position = 0
    for party, width in enumerate(circuit.input_widths):
        for bit_index in range(width):
            lane_value = 0
            for lane, sample in enumerate(samples):
                if sample[party][bit_index] & 1:
                    lane_value |= 1 << lane
            values[position] = lane_value
            position += 1
    for kind, ins, out in circuit.gates:
        if kind is GateKind.XOR:
            values[out] = values[ins[0]] ^ values[ins[1]]
        elif kind is GateKind.AND:
            values[out] = values[ins[0]] & values[ins[1]]
        else:
            values[out] = values[ins[0]] ^ mask
    outputs = [values[wire] for wire in circuit.output_wires]
    return [[(word >> lane) & 1 for word in outputs] for lane in range(lanes)]


def emit_circuit(circuit: Circuit) -> str:
    """Bristol-fashion text; the outputs must occupy the final wires."""
    output_count = len(circuit.output_wires)
    if circuit.output_wires != tuple(range(circuit.wire_count - output_count, circuit.wire_count)):
        raise CircuitError("Bristol fashion needs the outputs on the final wires")
    lines = [
        f"{len(circuit.gates)} {circuit.wire_count}",
        " ".join(str(n) for n in (len(circuit.input_widths), *circuit.input_widths)),
        " ".join(str(n) for n in (len(circuit.output_widths), *circuit.output_widths)),
        "",
    ]
    for kind, ins, out in circuit.gates:
        lines.append(f"{len(ins)} 1 {' '.join(map(str, ins))} {out} {kind.value}")
    return "\n".join(lines) + "\n"


def _ints(tokens: list[str], line: int) -> list[int]:
    try:
        return [int(token) for token in tokens]
    except ValueError:
        raise CircuitParseError(f"expected integers, got {' '.join(tokens)!r}", line) from None


def parse_circuit(text: str, name: str = "") -> Circuit:
    numbered = [(number, raw.split()) for number, raw in enumerate(text.splitlines(), start=1)]
    numbered = [(number, tokens) for number, tokens in numbered if tokens]
    if len(numbered) < 3:
        raise CircuitParseError("missing header", numbered[-1][0] if numbered else 1)

    (header_line, header), (inputs_line, input_tokens), (outputs_line, output_tokens) = numbered[:3]
    if len(header) != 2:
        raise CircuitParseError("header must be '<gates> <wires>'", header_line)
    gate_total, wire_count = _ints(header, header_line)
    input_spec = _ints(input_tokens, inputs_line)
    output_spec = _ints(output_tokens, outputs_line)
    if input_spec[0] != len(input_spec) - 1:
        raise CircuitParseError("input value count does not match the listed widths", inputs_line)
    if output_spec[0] != len(output_spec) - 1:
        raise CircuitParseError("output value count does not match the listed widths", outputs_line)

    gates = []
    for number, tokens in numbered[3:]:
        if len(tokens) < 4:
            raise CircuitParseError("truncated gate line", number)
        *numbers, verb = tokens
        try:
            kind = GateKind(verb)
        except ValueError:
            raise CircuitParseError(f"unknown gate {verb!r}", number) from None
        values = _ints(numbers, number)
        arity, fan_out = values[0], values[1]
        if fan_out != 1 or arity != GATE_ARITY[kind] or len(values) != arity + 3:
            raise CircuitParseError(f"malformed {verb} gate", number)
        gates.append(Gate(kind, tuple(values[2 : 2 + arity]), values[-1]))
    if len(gates) != gate_total:
        raise CircuitParseError(f"header announces {gate_total} gates, found {len(gates)}", header_line)

    output_widths = tuple(output_spec[1:])
    output_count = sum(output_widths)
    try:
        return Circuit(
            wire_count=wire_count,
            input_widths=tuple(input_spec[1:]),
            gates=tuple(gates),
            output_wires=tuple(range(wire_count - output_count, wire_count)),
            output_widths=output_widths,
            name=name,
        )
    except CircuitError as error:
        raise CircuitParseError(str(error), header_line) from error


def xor_shared(circuit: Circuit) -> Circuit:
    """Same function, but every input arrives as two XOR shares, one per input segment."""
    n = circuit.input_count
    joined = tuple(Gate(GateKind.XOR, (i, n + i), 2 * n + i) for i in range(n))
    shifted = tuple(Gate(kind, tuple(w + 2 * n for w in ins), out + 2 * n) for kind, ins, out in circuit.gates)
    return Circuit(
        wire_count=circuit.wire_count + 2 * n,
        input_widths=(n, n),
        gates=joined + shifted,
        output_wires=tuple(w + 2 * n for w in circuit.output_wires),
        output_widths=circuit.output_widths,
        name=f"{circuit.name}-shared" if circuit.name else "shared",
    )
