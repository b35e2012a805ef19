from typing import Sequence

from flows.outsource_flow import outsource_contract
from flows.private_contract_flow import EngineChoice, run_private_contract, verify_package
from handlers.run_config import RunConfig
from lib.contracts import ContractSpec, ValueField, get_contract
from lib.transport import estimate_latency
from lib.verify import SecurityProfile, TrustedSigner, build_package, load_policy
from utils.constants import LATENCY_PROFILES_MS
from utils.exceptions import UsageError
from utils.logger_config import configure_logger
from utils.report import render_report
from utils.utils import derive_seed, seed_from_int

logger = configure_logger(__name__)

PUBLISHER = "publisher"
NO_ENGINE = "none"


def _parse_value(value_field: ValueField, text: str) -> float | int:
    try:
        return float(text) if value_field.kind == "fixed" else int(text, 0)
    except ValueError as error:
        raise UsageError(f"{value_field.name}: {text!r} is not a valid {value_field.kind} value") from error


def parse_inputs(spec: ContractSpec, records: Sequence[str]) -> list[list[float | int]]:
    """One record per party; a party with several fields separates them with commas."""
    values = []
    for party, (record, schema) in enumerate(zip(records, spec.inputs), start=1):
        tokens = [token.strip() for token in record.split(",")]
        if len(tokens) != len(schema):
            names = ", ".join(f.name for f in schema)
            raise UsageError(f"party {party} of {spec.name} supplies ({names}), got {record!r}")
        values.append([_parse_value(f, token) for f, token in zip(schema, tokens)])
    return values


def parse_engines(engine: str, parties: int) -> EngineChoice:
    selections = [None if token.strip() == NO_ENGINE else token.strip() for token in engine.split(",")]
    if len(selections) == 1:
        selections *= parties
    if len(selections) != parties:
        raise UsageError(f"--engine names {len(selections)} selections for {parties} parties")
    return EngineChoice(tuple(selections))


def cmd_run(config: RunConfig) -> tuple[str, dict]:
    if not config.contract:
        raise UsageError("run needs --contract")
    if not config.inputs:
        raise UsageError("run needs --inputs, one record per party")
    spec = get_contract(config.contract, parties=len(config.inputs))
    if len(config.inputs) != len(spec.inputs):
        raise UsageError(f"{spec.name} has {len(spec.inputs)} parties, got {len(config.inputs)} input records")
    values = parse_inputs(spec, config.inputs)
    bits = spec.encode_inputs(values)
    seed = seed_from_int(config.seed)

    publisher = TrustedSigner.from_seed(PUBLISHER, derive_seed(seed, PUBLISHER))
    package = build_package(spec.source, spec.circuit.digest, level=config.level, signer=publisher, name=spec.name)
    policy = load_policy(config.policy) if config.policy else SecurityProfile()
    verdict = verify_package(package, spec.circuit, policy, {PUBLISHER: publisher.public_key}, seed=seed)

    report: dict = {
        "contract": spec.name,
        "label": spec.label,
        "mode": "outsourced" if config.outsourced else "private",
        "seed": config.seed,
        "inputs": values,
        "verification": {"accepted": verdict.accepted, "level": package.level, "discharges": len(verdict.discharges)},
        "gates": spec.gate_counts._asdict(),
        "reference_and_count": spec.reference_and_count,
    }
    if config.outsourced:
        outcome, store = outsource_contract(spec.circuit, bits, requester=1, seed=seed)
        output, transcript, timings = outcome.output, outcome.transcript, outcome.timings
        report["uploads"] = store.uploads
        report["party_messages_during_seccomp"] = outcome.sent_by_parties()
        report["block"] = None
    else:
        engines = parse_engines(config.engine, len(spec.inputs))
        session = run_private_contract(
            spec.circuit,
            bits,
            engines=engines,
            nodes=config.nodes,
            seed=seed,
            quorum=config.quorum,
            verdict=verdict,
        )
        output, transcript, timings = session.output, session.transcript, session.timings
        report["block"] = {"height": session.block.height, "digest": session.block.digest} if session.block else None

    result = spec.decode_outputs(output)
    expected = spec.reference(values)
    report |= {
        "result": list(result),
        "reference": list(expected),
        "matches_reference": spec.matches(result, expected),
        "messages": len(transcript),
        "bytes": transcript.total_bytes,
        "rounds": transcript.rounds,
        "network_ms": {profile: estimate_latency(transcript, profile).network_ms for profile in LATENCY_PROFILES_MS},
        "timings": timings,
    }
    logger.info(f"run {spec.name}: result {list(result)}")
    return render_report(f"{spec.label} ({report['mode']})", report), report
