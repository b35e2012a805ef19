import random

import pytest

from flows.outsource_flow import (
    EVALUATING_NODE,
    EncodedInput,
    EncodingStore,
    build_pivots,
    deserialize_pivots,
    dump_store,
    establish_keys,
    load_store,
    open_pivot,
    outsource_contract,
    prf,
    seccomp,
    send_private_parameters,
    serialize_pivots,
)
from lib.contracts import CONTRACTS
from lib.garble import garble
from lib.transport import Role
from utils.exceptions import InputArityError, MissingPartyError, PivotDecryptionError, UsageError
from utils.utils import derive_seed

CROWDFUND = CONTRACTS["crowdfund"]
MILLIONAIRE = CONTRACTS["millionaire"]


def bits_of(spec, *values):
    return spec.encode_inputs([[v] for v in values])


@pytest.fixture
def keys(seed):
    return establish_keys(2, seed=seed)


@pytest.fixture
def uploaded(keys, seed):
    store = EncodingStore()
    for j, bits in enumerate(bits_of(CROWDFUND, 600, 500), start=1):
        send_private_parameters(j, bits, keys.party_keys[j], store, seed)
    return store


def test_both_ends_derive_the_same_key(keys):
    assert keys.hub == 3
    assert keys.party_keys == keys.garbler_keys


def test_crowdfund_outsourced(seed):
    result, store = outsource_contract(CROWDFUND.circuit, bits_of(CROWDFUND, 600, 500), seed=seed)
    assert CROWDFUND.decode_outputs(result.output) == (1100,)
    assert store.uploads == 2
    assert result.requester == 1


def test_diffie_hellman_keys(seed):
    result, _ = outsource_contract(MILLIONAIRE.circuit, bits_of(MILLIONAIRE, 3, 5), requester=2, seed=seed, mode="dh")
    assert MILLIONAIRE.decode_outputs(result.output) == (1,)


def test_parties_stay_silent_during_seccomp(keys, uploaded, seed):
    result = seccomp(CROWDFUND.circuit, uploaded, keys, seed=seed)
    assert result.sent_by_parties() == 0
    assert not result.transcript.sent_by(Role.CONTRACT_PARTY, phase="seccomp")
    assert result.transcript.sent_by(Role.GARBLER)


def test_uploads_are_reused(keys, uploaded, seed):
    before = dump_store(uploaded)
    first = seccomp(CROWDFUND.circuit, uploaded, keys, seed=seed)
    second = seccomp(MILLIONAIRE.circuit, uploaded, keys, requester=2, seed=seed)
    assert CROWDFUND.decode_outputs(first.output) == (1100,)
    assert MILLIONAIRE.decode_outputs(second.output) == MILLIONAIRE.reference([[600], [500]])
    assert uploaded.uploads == 2
    assert dump_store(uploaded) == before


def test_upload_is_what_the_party_computed(keys, seed):
    store = EncodingStore()
    sent = send_private_parameters(1, [1, 0, 1], keys.party_keys[1], store, seed, nonce=b"n" * 16)
    assert store.get(1) == sent
    assert sent.encodings[0] == prf(keys.party_keys[1], 1, 1, b"n" * 16, 1)
    assert sent.encodings[1] != prf(keys.party_keys[1], 1, 2, b"n" * 16, 1)
    assert len(store.transcripts[0]) == 2


def test_short_nonce(keys):
    with pytest.raises(UsageError):
        send_private_parameters(1, [1], keys.party_keys[1], EncodingStore(), nonce=b"short")


def test_exactly_one_pivot_entry_opens(keys, uploaded):
    circuit = CROWDFUND.circuit
    _, encoding, _ = garble(circuit, derive_seed(b"pivot", "garble"))
    nonces = {j: uploaded.get(j).nonce for j in (1, 2)}
    table = build_pivots(encoding, circuit, keys.garbler_keys, nonces, [1, 2], random.Random(3))
    assert deserialize_pivots(serialize_pivots(table)) == table
    for j, bits, rows, segment in zip((1, 2), bits_of(CROWDFUND, 600, 500), table, circuit.input_segments):
        for l, (entries, wire) in enumerate(zip(rows, segment)):
            assert open_pivot(entries, uploaded.get(j).encodings[l], f"({j}, {l + 1})") == encoding.pair(wire)[bits[l]]


def test_pivot_entry_under_a_foreign_encoding(keys, uploaded):
    _, encoding, _ = garble(CROWDFUND.circuit, derive_seed(b"pivot", "garble"))
    nonces = {j: uploaded.get(j).nonce for j in (1, 2)}
    table = build_pivots(encoding, CROWDFUND.circuit, keys.garbler_keys, nonces, [1, 2], random.Random(3))
    with pytest.raises(PivotDecryptionError):
        open_pivot(table[0][0], bytes(16), "(1, 1)")


def test_corrupted_store(keys, uploaded, seed):
    stored = uploaded.get(1)
    uploaded.records[1] = EncodedInput(1, stored.nonce, (bytes(16),) + stored.encodings[1:])
    with pytest.raises(PivotDecryptionError):
        seccomp(CROWDFUND.circuit, uploaded, keys, seed=seed)


@pytest.mark.parametrize("data", [b"", b"VPT0" + bytes(4), b"XXXX" + bytes(8)])
def test_broken_pivot_tables(data):
    with pytest.raises(PivotDecryptionError):
        deserialize_pivots(data)


def test_missing_upload(keys, seed):
    store = EncodingStore()
    send_private_parameters(1, bits_of(CROWDFUND, 600, 500)[0], keys.party_keys[1], store, seed)
    with pytest.raises(MissingPartyError):
        seccomp(CROWDFUND.circuit, store, keys, seed=seed)


def test_party_without_a_key(seed, uploaded):
    lonely = establish_keys(1, seed=seed)
    with pytest.raises(MissingPartyError):
        seccomp(CROWDFUND.circuit, uploaded, lonely, seed=seed)


def test_requester_must_supply_input(keys, uploaded, seed):
    with pytest.raises(UsageError):
        seccomp(CROWDFUND.circuit, uploaded, keys, requester=3, seed=seed)


def test_stored_width_must_fit_the_contract(keys, uploaded, seed, adder8):
    with pytest.raises(InputArityError):
        seccomp(adder8, uploaded, keys, seed=seed)


def test_no_contract_parties(seed):
    with pytest.raises(UsageError):
        establish_keys(0, seed=seed)


def test_store_file(keys, uploaded, seed, tmp_path):
    path = tmp_path / "store.json"
    path.write_text(dump_store(uploaded))
    loaded = load_store(path.read_text())
    assert loaded.records == uploaded.records
    result = seccomp(CROWDFUND.circuit, loaded, keys, seed=seed)
    assert CROWDFUND.decode_outputs(result.output) == (1100,)


@pytest.mark.parametrize("text", ["not json", "{}", '{"format": "veil-encodings/1", "parties": {"1": {"nonce": "zz"}}}'])
def test_broken_store_file(text):
    with pytest.raises(UsageError):
        load_store(text)


def test_evaluator_keeps_no_bits(uploaded):
    assert EVALUATING_NODE.role is Role.EVALUATOR
    assert all(len(e) == 16 for record in uploaded.records.values() for e in record.encodings)
