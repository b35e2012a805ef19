import pytest

from lib.ot import OtDealer, OtMessagePair, OtMode, SenderPad, ot_batch, ot_session, ot_transfer, receiver_pad
from lib.transport import EVALUATOR, GARBLER
from utils.exceptions import InputArityError, ProtocolError

PAIRS = [OtMessagePair(11, 22), OtMessagePair(33, 44), OtMessagePair(1 << 100, 5), OtMessagePair(7, 7 << 64)]


@pytest.mark.parametrize("mode", [OtMode.DEALER, OtMode.GROUP])
def test_receiver_gets_chosen_messages(mode, seed):
    choices = [0, 1, 1, 0]
    received = ot_batch(PAIRS, choices, seed, mode)
    assert received == [pair[c] for pair, c in zip(PAIRS, choices)]


@pytest.mark.parametrize("mode", ["dealer", "group"])
@pytest.mark.parametrize("choice", [0, 1])
def test_single_transfer(mode, choice, seed):
    assert ot_transfer(OtMessagePair(123, 456), choice, seed, mode) == (123, 456)[choice]


def test_dealer_pads_are_consistent(seed):
    senders, receivers = OtDealer(seed).deal(20)
    for sender, receiver in zip(senders, receivers):
        assert receiver.r == (sender.r1 if receiver.d else sender.r0)
    assert {receiver.d for receiver in receivers} == {0, 1}


@pytest.mark.parametrize("mode, rounds, messages", [("dealer", 2, 2), ("group", 3, 3)])
def test_message_pattern(mode, rounds, messages, seed):
    outcome = ot_session(PAIRS, [1, 0, 1, 0], seed, mode)
    assert outcome.transcript.rounds == rounds
    assert len(outcome.transcript) == messages
    assert outcome.outputs[EVALUATOR] == [22, 33, 5, 7]


def test_unchosen_messages_never_travel_in_clear(seed):
    outcome = ot_session(PAIRS, [0, 0, 0, 0], seed, "dealer")
    unchosen = b"".join(pair.m1.to_bytes(16, "big") for pair in PAIRS)
    assert unchosen not in outcome.transcript.view_of(EVALUATOR)


def test_mismatched_lengths(seed):
    with pytest.raises(InputArityError):
        ot_batch(PAIRS, [0, 1], seed)


def test_nothing_to_transfer(seed):
    assert ot_batch([], [], seed) == []


def test_dealer_mode_needs_a_pad_per_transfer(seed):
    with pytest.raises(ProtocolError):
        ot_session(PAIRS, [0, 0, 0, 0], seed, "dealer", dealt=OtDealer(seed).deal(2))


def random_transfers(rng, count):
    pairs = [OtMessagePair(rng.getrandbits(128), rng.getrandbits(128)) for _ in range(count)]
    return pairs, [rng.randrange(2) for _ in range(count)]


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["dealer", "group"])
def test_receiver_always_gets_the_chosen_message(mode, seed, py_rng):
    pairs, choices = random_transfers(py_rng, 10_000)
    assert ot_batch(pairs, choices, seed, mode) == [pair[c] for pair, c in zip(pairs, choices)]


def test_sender_view_does_not_depend_on_the_choice(seed):
    pads = [SenderPad(101, 202), SenderPad(303, 404)]
    pairs = PAIRS[:2]
    views = []
    for c in (0, 1):
        # d = c xor 1 pins the announced bit e = c xor d to 1
        dealt = (pads, [receiver_pad(pads[0], c ^ 1), receiver_pad(pads[1], 0)])
        outcome = ot_session(pairs, [c, 0], seed, "dealer", dealt=dealt)
        assert outcome.outputs[EVALUATOR] == [pairs[0][c], pairs[1].m0]
        views.append(outcome.transcript.view_of(GARBLER))
    assert views[0] == views[1]


@pytest.mark.parametrize("mode", ["dealer", "group"])
def test_sender_view_shape_is_the_same_for_both_choices(mode, seed):
    shapes = []
    for c in (0, 1):
        outcome = ot_session(PAIRS, [c] * len(PAIRS), seed, mode)
        shapes.append([(e.sender, e.receiver, e.length) for e in outcome.transcript])
    assert shapes[0] == shapes[1]


@pytest.mark.slow
@pytest.mark.parametrize("mode", ["dealer", "group"])
def test_batch_matches_sequential_transfers(mode, seed, py_rng):
    pairs, choices = random_transfers(py_rng, 1000)
    sequential = [ot_transfer(pair, c, seed, mode) for pair, c in zip(pairs, choices)]
    assert ot_batch(pairs, choices, seed, mode) == sequential
