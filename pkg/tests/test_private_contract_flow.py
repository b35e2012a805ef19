import pytest

from flows.private_contract_flow import (
    CIRCUIT_MISMATCH,
    EngineChoice,
    contract_party,
    node_pair,
    run_private_contract,
    verify_package,
    verify_then_compute,
)
from lib.contracts import CONTRACTS, get_contract
from lib.transport import Role
from lib.verify import TrustedSigner, Verdict, build_package
from utils.exceptions import (
    ConsensusFailureError,
    EngineDisagreementError,
    InputArityError,
    UsageError,
    VerificationFailedError,
)
from utils.utils import bits_to_bytes, bits_to_int, int_to_bits, seed_from_int

CROWDFUND = CONTRACTS["crowdfund"]
MILLIONAIRE = CONTRACTS["millionaire"]


def crowdfund_bits(*amounts):
    return CROWDFUND.encode_inputs([[a] for a in amounts])


@pytest.fixture
def publisher(seed):
    return TrustedSigner.from_seed("publisher", seed)


@pytest.fixture
def certified(publisher):
    return build_package(CROWDFUND.source, CROWDFUND.circuit.digest, 4, publisher, name="crowdfund")


def test_crowdfund_result_is_committed(ledger, seed):
    session = run_private_contract(CROWDFUND.circuit, crowdfund_bits(600, 500), ledger=ledger, seed=seed, waive_verification=True)
    assert CROWDFUND.decode_outputs(session.output) == (1100,)
    assert all(result == session.output for result in session.results.values())
    assert set(session.results) == {contract_party(0), contract_party(1)}
    assert session.block is ledger.blocks[-1]
    (record,) = ledger.records("result")
    assert record["contract"] == CROWDFUND.circuit.name == "crowdfund2"
    assert record["circuit"] == CROWDFUND.circuit.digest
    assert sorted(record["nodes"]) == ["NE0", "NG0"]


@pytest.mark.parametrize("x, y", [(3, 5), (5, 3), (-7, -7), (2**31 - 1, -(2**31))])
def test_millionaire_matches_oracle(x, y, seed):
    session = run_private_contract(
        MILLIONAIRE.circuit,
        MILLIONAIRE.encode_inputs([[x], [y]]),
        seed=seed,
        waive_verification=True,
        commit_results=False,
    )
    assert MILLIONAIRE.decode_outputs(session.output) == MILLIONAIRE.reference([[x], [y]])
    assert session.block is None


def test_garbled_adder(adder8, seed):
    session = run_private_contract(
        adder8,
        [int_to_bits(200, 8), int_to_bits(100, 8)],
        seed=seed,
        waive_verification=True,
        ot_mode="group",
    )
    assert bits_to_int(session.output) == 44
    assert session.counts.and_count > 0


def test_disagreeing_engines_run_nothing(ledger, seed):
    engines = EngineChoice(("yao_semi_honest", None))
    with pytest.raises(EngineDisagreementError):
        run_private_contract(CROWDFUND.circuit, crowdfund_bits(1, 2), engines, ledger=ledger, seed=seed, waive_verification=True)
    assert ledger.height == 0


def test_unknown_engine_is_no_agreement():
    assert EngineChoice(("quantum", "quantum")).agreed is None
    assert EngineChoice.unanimous(3).agreed is not None


def test_unverified_run_is_refused(ledger, seed):
    with pytest.raises(VerificationFailedError):
        run_private_contract(CROWDFUND.circuit, crowdfund_bits(1, 2), ledger=ledger, seed=seed)
    with pytest.raises(VerificationFailedError) as info:
        run_private_contract(CROWDFUND.circuit, crowdfund_bits(1, 2), ledger=ledger, seed=seed, verdict=Verdict(False, ["unsigned"]))
    assert info.value.reasons == ["unsigned"]
    assert ledger.height == 0


def test_evaluator_never_sees_inputs_in_clear(seed):
    canary = 0x13579BDF
    session = run_private_contract(
        CROWDFUND.circuit,
        crowdfund_bits(canary, 0x2468ACE0),
        seed=seed,
        waive_verification=True,
        commit_results=False,
    )
    view = session.transcript.view_of(node_pair(0)[1])
    assert bits_to_bytes(int_to_bits(canary, 32)) not in view
    assert bits_to_bytes(int_to_bits(0x2468ACE0, 32)) not in view


def test_two_node_pairs_vote(ledger, seed):
    session = run_private_contract(CROWDFUND.circuit, crowdfund_bits(400, 700), nodes=4, ledger=ledger, seed=seed, waive_verification=True)
    assert len(session.node_results) == 4
    assert len(set(map(tuple, session.node_results.values()))) == 1
    assert sorted(ledger.records("result")[0]["nodes"]) == ["NE0", "NE1", "NG0", "NG1"]


@pytest.mark.parametrize("nodes", [0, 3])
def test_nodes_come_in_pairs(nodes, seed):
    with pytest.raises(UsageError):
        run_private_contract(CROWDFUND.circuit, crowdfund_bits(1, 2), nodes=nodes, seed=seed, waive_verification=True)


def test_quorum_larger_than_nodes(ledger, seed):
    with pytest.raises(ConsensusFailureError):
        run_private_contract(CROWDFUND.circuit, crowdfund_bits(1, 2), ledger=ledger, seed=seed, quorum=3, waive_verification=True)
    assert ledger.height == 0


def test_wrong_input_width(seed):
    with pytest.raises(InputArityError):
        run_private_contract(CROWDFUND.circuit, [[1] * 32, [1] * 31], seed=seed, waive_verification=True)


def test_results_withheld(seed):
    session = run_private_contract(
        CROWDFUND.circuit,
        crowdfund_bits(600, 500),
        seed=seed,
        waive_verification=True,
        return_results=False,
        commit_results=False,
    )
    assert session.results == {}
    assert CROWDFUND.decode_outputs(session.output) == (1100,)
    assert not session.transcript.sent_by(Role.GARBLER, phase="return")


def test_same_seed_same_transcript(adder8):
    inputs = [int_to_bits(9, 8), int_to_bits(30, 8)]
    first = run_private_contract(adder8, inputs, seed=seed_from_int(5), waive_verification=True, commit_results=False)
    second = run_private_contract(adder8, inputs, seed=seed_from_int(5), waive_verification=True, commit_results=False)
    assert first.transcript.export() == second.transcript.export()
    assert first.messages == second.messages


def test_verify_then_compute(certified, publisher, ledger, seed):
    session = verify_then_compute(
        certified,
        CROWDFUND.circuit,
        crowdfund_bits(800, 300),
        trusted={"publisher": publisher.public_key},
        seed=seed,
        ledger=ledger,
    )
    assert CROWDFUND.decode_outputs(session.output) == (1100,)
    assert ledger.height == 1


def test_package_for_another_circuit(certified, seed):
    other = get_contract("crowdfund", parties=3)
    with pytest.raises(VerificationFailedError) as info:
        verify_package(certified, other.circuit, seed=seed)
    assert CIRCUIT_MISMATCH in info.value.reasons


@pytest.mark.slow
@pytest.mark.parametrize(
    "name, values",
    [
        ("millionaire", [[-4], [11]]),
        ("second_price_auction", [[5], [9], [7]]),
        ("crowdfund", [[600], [500]]),
        ("dao_invest_fund", [[600], [500]]),
        ("double_auction", [[10, 1], [0, 0], [8, 1], [0, 0]]),
        ("exchange_option", [[1.2, 0.01, 0.3, 0.4, 0.5], [1.0, 0.02, 0.2]]),
        ("fx_option", [[1.3, 0.15, 0.01], [1.25, 0.03, 2]]),
    ],
)
def test_every_contract_runs_securely(name, values, seed):
    spec = CONTRACTS[name]
    session = run_private_contract(spec.circuit, spec.encode_inputs(values), seed=seed, waive_verification=True, commit_results=False)
    assert spec.decode_outputs(session.output) == spec.evaluate(values)
    assert spec.matches(spec.decode_outputs(session.output), spec.reference(values))
