"""Secure execution of a contract by executing nodes, with the result committed through consensus.

Contract parties XOR-share their inputs between the two nodes of every
garbler/evaluator pair. The garbler garbles the share-recombining version of
the circuit, the evaluator obtains labels for its shares by oblivious
transfer, and both decode the output. Each pair is an independent run of the
same computation, so its result is one consensus vote.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from lib.chain import Block, Ledger, append_with_consensus
from lib.circuit import Circuit, GateCounts, gate_counts, xor_shared
from lib.garble import (
    decode,
    deserialize_decoding,
    deserialize_garbled,
    encode,
    eval_garbled,
    garble,
    pack_labels,
    serialize_decoding,
    serialize_garbled,
    unpack_labels,
)
from lib.ot import OtDealer, OtMessagePair, OtMode, ot_receive, ot_send
from lib.transport import PartyContext, PartyId, Role, Transcript, run_session
from lib.verify import ContractPackage, SecurityProfile, Verdict, verify_extended, verify_standard
from utils.constants import CHANNEL_LATENCY_MS, COMMIT_RESULTS, DEFAULT_QUORUM, OT_MODE, RETURN_RESULTS
from utils.exceptions import (
    EngineDisagreementError,
    InputArityError,
    ProtocolError,
    SessionAbortedError,
    UsageError,
    VerificationFailedError,
)
from utils.logger_config import configure_logger
from utils.utils import bits_to_bytes, bytes_to_bits, derive_seed, phase_timer

logger = configure_logger(__name__)

CIRCUIT_MISMATCH = "circuit-mismatch"
UNVERIFIED = "unverified"


class Engine(str, Enum):
    YAO_SEMI_HONEST = "yao_semi_honest"


@dataclass(frozen=True)
class EngineChoice:
    """The engine each contract party asked for; None stands for no selection."""

    selections: tuple[str | None, ...]

    @classmethod
    def unanimous(cls, parties: int, engine: Engine = Engine.YAO_SEMI_HONEST) -> "EngineChoice":
        return cls(tuple(engine.value for _ in range(parties)))

    @property
    def agreed(self) -> Engine | None:
        chosen = set(self.selections)
        if len(chosen) != 1:
            return None
        (engine,) = chosen
        return Engine(engine) if engine in {e.value for e in Engine} else None


def contract_party(i: int) -> PartyId:
    return PartyId(Role.CONTRACT_PARTY, i + 1)


def node_pair(j: int) -> tuple[PartyId, PartyId]:
    return PartyId(Role.GARBLER, j), PartyId(Role.EVALUATOR, j)


@dataclass
class SessionResult:
    contract: str
    results: dict[PartyId, list[int]]
    output: list[int]
    node_results: dict[str, list[int]]
    block: Block | None
    transcript: Transcript
    counts: GateCounts
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def messages(self) -> int:
        return len(self.transcript)


def _check_inputs(circuit: Circuit, inputs: Sequence[Sequence[int]]):
    if len(inputs) != len(circuit.input_widths):
        raise InputArityError(f"{circuit.name or 'contract'} has {len(circuit.input_widths)} parties, got {len(inputs)} inputs")
    for i, (bits, width) in enumerate(zip(inputs, circuit.input_widths)):
        if len(bits) != width:
            raise InputArityError(f"party {i + 1} supplied {len(bits)} bits, its segment holds {width}")


def run_private_contract(
    contract: Circuit,
    inputs: Sequence[Sequence[int]],
    engines: EngineChoice | None = None,
    nodes: int = 2,
    ledger: Ledger | None = None,
    seed: bytes = b"",
    quorum: int | None = DEFAULT_QUORUM,
    ot_mode: OtMode | str = OT_MODE,
    return_results: bool = RETURN_RESULTS,
    commit_results: bool = COMMIT_RESULTS,
    verdict: Verdict | None = None,
    waive_verification: bool = False,
    latency_ms: float = CHANNEL_LATENCY_MS,
) -> SessionResult:
    if not waive_verification and not verdict:
        reasons = verdict.reasons if verdict is not None else [UNVERIFIED]
        logger.error(f"refusing to run {contract.name or 'contract'}: {', '.join(reasons)}")
        raise VerificationFailedError(reasons)
    engines = engines or EngineChoice.unanimous(len(contract.input_widths))
    if engines.agreed is None:
        logger.error(f"engine selections disagree: {engines.selections}")
        raise EngineDisagreementError(f"parties selected {list(engines.selections)}; no computation performed")
    if nodes < 2 or nodes % 2:
        raise UsageError(f"executing nodes come in garbler/evaluator pairs, got {nodes}")
    _check_inputs(contract, inputs)

    mode = OtMode(ot_mode)
    shared = xor_shared(contract)
    n = contract.input_count
    output_width = len(contract.output_wires)
    pairs = [node_pair(j) for j in range(nodes // 2)]
    parties = [contract_party(i) for i in range(len(inputs))]
    segments = contract.input_segments
    timings: dict[str, float] = {}

    def party_program(i: int):
        def program(ctx: PartyContext):
            for garbler, evaluator in pairs:
                share = [ctx.rng.getrandbits(1) for _ in inputs[i]]
                ctx.send(evaluator, bits_to_bytes(share))
                ctx.send(garbler, bits_to_bytes([b ^ s for b, s in zip(inputs[i], share)]))
            if not return_results:
                return None
            results = []
            for garbler, _ in pairs:
                results.append(bytes_to_bits((yield ctx.recv(garbler)), output_width))
            if any(r != results[0] for r in results):
                raise ProtocolError(f"{ctx.party} received different results from the node pairs")
            return results[0]

        return program

    def collect_shares(ctx: PartyContext):
        bits = []
        for party, segment in zip(parties, segments):
            bits += bytes_to_bits((yield ctx.recv(party)), len(segment))
        return bits

    def garbler_program(j: int, pads):
        _, evaluator = pairs[j]

        def program(ctx: PartyContext):
            ctx.mark("input")
            masked = yield from collect_shares(ctx)
            ctx.mark("garble")
            gc, encoding, decoding = garble(shared, derive_seed(ctx.seed, "garble"))
            ctx.send(evaluator, serialize_garbled(gc))
            ctx.send(evaluator, pack_labels(encode(encoding.segment(range(0, n)), masked)))
            ctx.mark("ot")
            transfers = [OtMessagePair(*encoding.pair(w)) for w in range(n, 2 * n)]
            yield from ot_send(ctx, evaluator, transfers, mode, pads)
            ctx.mark("evaluate")
            output = decode(decoding, unpack_labels((yield ctx.recv(evaluator))))
            ctx.send(evaluator, serialize_decoding(decoding))
            if return_results:
                ctx.mark("return")
                for party in parties:
                    ctx.send(party, bits_to_bytes(output))
            return output

        return program

    def evaluator_program(j: int, pads):
        garbler, _ = pairs[j]

        def program(ctx: PartyContext):
            shares = yield from collect_shares(ctx)
            gc = deserialize_garbled((yield ctx.recv(garbler)))
            if gc.circuit_digest != shared.digest:
                logger.error(f"{ctx.party} received a garbling of a different circuit")
                raise SessionAbortedError("garbled circuit digest does not match the agreed contract")
            garbler_labels = unpack_labels((yield ctx.recv(garbler)))
            own_labels = yield from ot_receive(ctx, garbler, shares, mode, pads)
            labels = eval_garbled(gc, garbler_labels + own_labels)
            ctx.send(garbler, pack_labels(labels))
            return decode(deserialize_decoding((yield ctx.recv(garbler))), labels)

        return program

    programs = {party: party_program(i) for i, party in enumerate(parties)}
    for j, (garbler, evaluator) in enumerate(pairs):
        sender_pads, receiver_pads = OtDealer(derive_seed(seed, f"dealer/{j}")).deal(n) if mode is OtMode.DEALER else (None, None)
        programs[garbler] = garbler_program(j, sender_pads)
        programs[evaluator] = evaluator_program(j, receiver_pads)

    name = contract.name or contract.digest[:12]
    logger.info(f"session start: {name}, {len(parties)} parties, {len(pairs)} node pairs, {mode.value} OT")
    with phase_timer(timings, "session"):
        outcome = run_session([*parties, *(node for pair in pairs for node in pair)], programs, seed, latency_ms, phase="input")

    node_results = {str(node): outcome.outputs[node] for pair in pairs for node in pair}
    output = outcome.outputs[pairs[0][0]]
    results = {party: outcome.outputs[party] for party in parties} if return_results else {}
    if any(result != output for result in results.values()):
        raise ProtocolError("contract parties decoded different results")

    block = None
    if commit_results:
        ledger = ledger if ledger is not None else Ledger()
        votes = [(node, bits_to_bytes(bits)) for node, bits in node_results.items()]
        with phase_timer(timings, "commit"):
            block = append_with_consensus(ledger, votes, quorum, contract=name, circuit=contract.digest)

    logger.info(f"session finished: {name}, {len(outcome.transcript)} messages")
    return SessionResult(name, results, output, node_results, block, outcome.transcript, gate_counts(contract), timings)


def verify_package(
    package: ContractPackage,
    contract: Circuit,
    policy: SecurityProfile = SecurityProfile(),
    trusted: Mapping | None = None,
    extended: bool = False,
    seed: bytes = b"",
) -> Verdict:
    """Checks the package against the policy and the circuit about to run; raises on rejection."""
    if extended or trusted is not None or policy.mandatory_signers or policy.required_spec_ids:
        verdict = verify_extended(package, policy, trusted, seed)
    else:
        verdict = verify_standard(package, policy, seed)
    if package.circuit_digest != contract.digest:
        verdict.reject(CIRCUIT_MISMATCH)
    if not verdict:
        logger.error(f"verification failed before execution: {', '.join(verdict.reasons)}")
        raise VerificationFailedError(verdict.reasons)
    return verdict


def verify_then_compute(
    package: ContractPackage,
    contract: Circuit,
    inputs: Sequence[Sequence[int]],
    policy: SecurityProfile = SecurityProfile(),
    trusted: Mapping | None = None,
    extended: bool = False,
    seed: bytes = b"",
    **options,
) -> SessionResult:
    verdict = verify_package(package, contract, policy, trusted, extended, seed)
    return run_private_contract(contract, inputs, seed=seed, verdict=verdict, **options)
