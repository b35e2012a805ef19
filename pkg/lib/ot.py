"""1-out-of-2 oblivious transfer of wire labels.

Two instantiations share one interface:

* ``dealer``: a trusted dealer hands the sender random pads (r0, r1) and the
  receiver (d, r_d). The receiver announces e = c xor d, the sender answers
  with (m0 xor r_e, m1 xor r_(1-e)). Two messages, no public-key operations.
* ``group``: the three-message protocol over a prime-order group. The sender
  publishes A = g^a, the receiver answers B = g^b or A * g^b depending on the
  choice bit, and the sender encrypts m0 under H(B^a) and m1 under H((B/A)^a).
  The receiver can derive only H(A^b).

Inside a session both sides are generator programs (``ot_send`` /
``ot_receive``); ``ot_transfer`` and ``ot_batch`` wrap a standalone
two-party session.
"""
from enum import Enum
from typing import Generator, NamedTuple, Sequence

from lib.garble import ROW_BYTES, LabelPrg, WireLabel, pack_labels, row_key, seal, unpack_labels, unseal
from lib.group import MODP_2048, PrimeOrderGroup
from lib.transport import EVALUATOR, GARBLER, PartyContext, PartyId, SessionOutcome, run_session
from utils.constants import OT_MODE
from utils.exceptions import DecryptionFailureError, InputArityError, ProtocolError, SessionAbortedError
from utils.logger_config import configure_logger
from utils.utils import bits_to_bytes, bytes_to_bits, derive_seed

logger = configure_logger(__name__)


class OtMode(str, Enum):
    DEALER = "dealer"
    GROUP = "group"


class OtMessagePair(NamedTuple):
    m0: WireLabel
    m1: WireLabel


class SenderPad(NamedTuple):
    r0: WireLabel
    r1: WireLabel


class ReceiverPad(NamedTuple):
    d: int
    r: WireLabel


def receiver_pad(pad: SenderPad, d: int) -> ReceiverPad:
    return ReceiverPad(d, pad.r1 if d else pad.r0)


class OtDealer:
    """Seeded source of dealer correlations; the sender and the receiver each get only their half."""

    def __init__(self, seed: bytes):
        self._prg = LabelPrg(derive_seed(seed, "ot-dealer"))

    def deal(self, count: int) -> tuple[list[SenderPad], list[ReceiverPad]]:
        labels = self._prg.labels(3 * count)
        senders, receivers = [], []
        for i in range(count):
            pad = SenderPad(labels[3 * i], labels[3 * i + 1])
            senders.append(pad)
            receivers.append(receiver_pad(pad, labels[3 * i + 2] & 1))
        return senders, receivers


def _transfer_key(group: PrimeOrderGroup, element: int, index: int) -> bytes:
    return row_key(group.encode(element), index.to_bytes(4, "big"))


def ot_send(
    ctx: PartyContext,
    receiver: PartyId,
    pairs: Sequence[OtMessagePair],
    mode: OtMode | str = OT_MODE,
    pads: Sequence[SenderPad] | None = None,
    group: PrimeOrderGroup = MODP_2048,
) -> Generator:
    mode = OtMode(mode)
    if not pairs:
        return None
    if mode is OtMode.DEALER:
        if pads is None or len(pads) != len(pairs):
            raise ProtocolError("dealer OT needs one sender pad per transfer")
        flips = bytes_to_bits((yield ctx.recv(receiver)), len(pairs))
        answer = []
        for (m0, m1), (r0, r1), e in zip(pairs, pads, flips):
            answer += [m0 ^ (r1 if e else r0), m1 ^ (r0 if e else r1)]
        ctx.send(receiver, pack_labels(answer))
        return None

    a = group.random_exponent(ctx.rng)
    big_a = group.base_exp(a)
    ctx.send(receiver, group.encode(big_a))
    data = yield ctx.recv(receiver)
    size = group.element_bytes
    if len(data) != size * len(pairs):
        raise SessionAbortedError(f"expected {len(pairs)} group elements, got {len(data)} bytes")
    a_inverse = pow(big_a, -1, group.p)
    rows = []
    for i, (m0, m1) in enumerate(pairs):
        big_b = group.decode(data[i * size : (i + 1) * size])
        rows.append(seal(_transfer_key(group, group.exp(big_b, a), i), m0))
        rows.append(seal(_transfer_key(group, group.exp(group.mul(big_b, a_inverse), a), i), m1))
    ctx.send(receiver, b"".join(rows))
    return None


def ot_receive(
    ctx: PartyContext,
    sender: PartyId,
    choices: Sequence[int],
    mode: OtMode | str = OT_MODE,
    pads: Sequence[ReceiverPad] | None = None,
    group: PrimeOrderGroup = MODP_2048,
) -> Generator:
    mode = OtMode(mode)
    if not choices:
        return []
    if mode is OtMode.DEALER:
        if pads is None or len(pads) != len(choices):
            raise ProtocolError("dealer OT needs one receiver pad per transfer")
        ctx.send(sender, bits_to_bytes([c ^ pad.d for c, pad in zip(choices, pads)]))
        answer = unpack_labels((yield ctx.recv(sender)))
        return [answer[2 * i + c] ^ pad.r for i, (c, pad) in enumerate(zip(choices, pads))]

    big_a = group.decode((yield ctx.recv(sender)))
    if not group.is_element(big_a):
        raise SessionAbortedError("sender's first message is not a group element")
    exponents = [group.random_exponent(ctx.rng) for _ in choices]
    elements = []
    for c, b in zip(choices, exponents):
        big_b = group.base_exp(b)
        elements.append(group.encode(group.mul(big_a, big_b) if c else big_b))
    ctx.send(sender, b"".join(elements))
    rows = yield ctx.recv(sender)
    if len(rows) != 2 * ROW_BYTES * len(choices):
        raise SessionAbortedError(f"expected {2 * len(choices)} ciphertexts, got {len(rows)} bytes")
    received = []
    for i, (c, b) in enumerate(zip(choices, exponents)):
        start = (2 * i + c) * ROW_BYTES
        message = unseal(_transfer_key(group, group.exp(big_a, b), i), rows[start : start + ROW_BYTES])
        if message is None:
            logger.error(f"transfer {i}: the chosen ciphertext did not authenticate")
            raise DecryptionFailureError(f"oblivious transfer {i} failed to decrypt")
        received.append(message)
    return received


def ot_session(
    pairs: Sequence[OtMessagePair],
    choices: Sequence[int],
    seed: bytes,
    mode: OtMode | str = OT_MODE,
    dealt: tuple[Sequence[SenderPad], Sequence[ReceiverPad]] | None = None,
) -> SessionOutcome:
    if len(pairs) != len(choices):
        raise InputArityError(f"{len(pairs)} message pairs but {len(choices)} choice bits")
    mode = OtMode(mode)
    if mode is OtMode.DEALER and dealt is None:
        dealt = OtDealer(seed).deal(len(pairs))
    sender_pads, receiver_pads = dealt if dealt is not None else (None, None)

    def sender(ctx: PartyContext):
        return (yield from ot_send(ctx, EVALUATOR, pairs, mode, sender_pads))

    def receiver(ctx: PartyContext):
        return (yield from ot_receive(ctx, GARBLER, choices, mode, receiver_pads))

    return run_session([GARBLER, EVALUATOR], {GARBLER: sender, EVALUATOR: receiver}, seed, phase="ot")


def ot_batch(pairs: Sequence[OtMessagePair], choices: Sequence[int], seed: bytes, mode: OtMode | str = OT_MODE) -> list[WireLabel]:
    if not pairs and not choices:
        return []
    outcome = ot_session(pairs, choices, seed, mode)
    return outcome.outputs[EVALUATOR]


def ot_transfer(pair: OtMessagePair, choice: int, seed: bytes, mode: OtMode | str = OT_MODE) -> WireLabel:
    return ot_batch([pair], [choice], seed, mode)[0]

