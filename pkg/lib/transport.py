"""In-memory network: party identities, FIFO channels and a deterministic session scheduler.

Party programs are generator functions. A program sends with ``ctx.send``
(never blocks) and receives with ``payload = yield ctx.recv(peer)``; the
scheduler resumes parties round-robin in the order they were listed, so a
session is a pure function of its parties, program and seed.
"""
import hashlib
import random
import struct
import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Generator, Iterable, NamedTuple, Sequence

from utils.constants import CHANNEL_TIMEOUT_SECONDS, DEADLOCK_BUDGET, LATENCY_PROFILES_MS
from utils.exceptions import (
    ChannelTimeoutError,
    ClosedChannelError,
    DeadlockError,
    SessionAbortedError,
    TransportError,
)
from utils.logger_config import configure_logger
from utils.utils import derive_seed

logger = configure_logger(__name__)


class Role(str, Enum):
    CONTRACT_PARTY = "E"
    NODE = "N"
    GARBLER = "NG"
    EVALUATOR = "NE"
    TRUSTED_SIGNER = "T"
    OUTSOURCER = "O"


class PartyId(NamedTuple):
    role: Role
    index: int

    def __str__(self) -> str:
        return f"{self.role.value}{self.index}"


GARBLER = PartyId(Role.GARBLER, 0)
EVALUATOR = PartyId(Role.EVALUATOR, 0)


class Channel:
    """One direction of a link. Safe to share between threads; the scheduler only uses it from one."""

    def __init__(self, sender: PartyId, receiver: PartyId, latency_ms: float = 0.0):
        self.endpoints = (sender, receiver)
        self.latency_ms = latency_ms
        self.sent_count = 0
        self.delivered_count = 0
        self.closed = False
        self._queue: deque[bytes] = deque()
        self._ready = threading.Condition()

    def send(self, payload: bytes):
        with self._ready:
            if self.closed:
                raise ClosedChannelError(f"channel {self.endpoints[0]} -> {self.endpoints[1]} is closed")
            self._queue.append(bytes(payload))
            self.sent_count += 1
            self._ready.notify()

    def recv(self, timeout: float | None = CHANNEL_TIMEOUT_SECONDS) -> bytes:
        with self._ready:
            if not self._ready.wait_for(lambda: self._queue or self.closed, timeout=timeout):
                raise ChannelTimeoutError(f"nothing arrived on {self.endpoints[0]} -> {self.endpoints[1]} within {timeout}s")
            if not self._queue:
                raise ClosedChannelError(f"channel {self.endpoints[0]} -> {self.endpoints[1]} closed while waiting")
            self.delivered_count += 1
            return self._queue.popleft()

    def close(self):
        with self._ready:
            self.closed = True
            self._ready.notify_all()

    @property
    def pending(self) -> int:
        return len(self._queue)


# ---- transcript ------------------------------------------------------------


@dataclass(frozen=True)
class TranscriptEntry:
    step: int
    sender: PartyId
    receiver: PartyId
    tag: int
    length: int
    round: int
    phase: str
    payload: bytes = field(repr=False)


@dataclass
class Transcript:
    entries: list[TranscriptEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def sent_by(self, role: Role, phase: str | None = None) -> list[TranscriptEntry]:
        return [e for e in self.entries if e.sender.role is role and (phase is None or e.phase == phase)]

    def received_by(self, party: PartyId) -> list[TranscriptEntry]:
        return [e for e in self.entries if e.receiver == party]

    def view_of(self, party: PartyId) -> bytes:
        """Everything the party received, concatenated in delivery order."""
        return b"".join(e.payload for e in self.received_by(party))

    @property
    def rounds(self) -> int:
        return max((e.round for e in self.entries), default=0)

    @property
    def total_bytes(self) -> int:
        return sum(e.length for e in self.entries)

    def export(self) -> str:
        return "".join(f"{e.step} {e.sender} {e.receiver} {e.length}\n" for e in self.entries)


class LatencyEstimate(NamedTuple):
    profile: str
    rounds: int
    messages: int
    total_bytes: int
    network_ms: float


def estimate_latency(transcript: Transcript, profile: str = "lan") -> LatencyEstimate:
    if profile not in LATENCY_PROFILES_MS:
        raise TransportError(f"unknown latency profile {profile!r}; known: {', '.join(LATENCY_PROFILES_MS)}")
    rounds = transcript.rounds
    return LatencyEstimate(profile, rounds, len(transcript), transcript.total_bytes, rounds * LATENCY_PROFILES_MS[profile])


# ---- framing ---------------------------------------------------------------

_FRAME = struct.Struct(">8sHI")


def frame(session_id: bytes, step: int, payload: bytes) -> bytes:
    return _FRAME.pack(session_id, step & 0xFFFF, len(payload)) + payload


def unframe(session_id: bytes, data: bytes) -> tuple[int, bytes]:
    sid, step, length = _FRAME.unpack_from(data)
    if sid != session_id:
        raise TransportError("frame belongs to another session")
    payload = data[_FRAME.size :]
    if len(payload) != length:
        raise TransportError(f"frame announces {length} bytes, carries {len(payload)}")
    return step, payload


# ---- sessions --------------------------------------------------------------


class Recv(NamedTuple):
    peer: PartyId


Program = Callable[["PartyContext"], Generator[Recv, bytes, Any]]


class PartyContext:
    def __init__(self, session: "Session", party: PartyId):
        self.session = session
        self.party = party
        self.seed = derive_seed(session.seed, str(party))
        self.rng = random.Random(self.seed)
        self.round = 0
        self._step = 0

    def send(self, peer: PartyId, payload: bytes):
        self._step += 1
        self.session.deliver(self, peer, payload, self._step)

    def recv(self, peer: PartyId) -> Recv:
        return Recv(peer)

    def close(self, peer: PartyId):
        self.session.channel(self.party, peer).close()

    def random_bytes(self, count: int) -> bytes:
        return self.rng.randbytes(count)

    def mark(self, phase: str):
        """Labels every later message of the session with phase."""
        self.session.phase = phase


class SessionOutcome(NamedTuple):
    outputs: dict[PartyId, Any]
    transcript: Transcript
    steps: int


class Session:
    def __init__(
        self,
        parties: Sequence[PartyId],
        seed: bytes,
        latency_ms: float = 0.0,
        phase: str = "",
        idle_budget: int = DEADLOCK_BUDGET,
    ):
        if len(set(parties)) != len(parties):
            raise TransportError("party identities must be unique within a session")
        self.parties = list(parties)
        self.seed = seed
        self.session_id = hashlib.sha256(b"session" + seed).digest()[:8]
        self.latency_ms = latency_ms
        self.phase = phase
        self.idle_budget = idle_budget
        self.transcript = Transcript()
        self._channels: dict[tuple[PartyId, PartyId], Channel] = {}
        self._rounds: dict[tuple[PartyId, PartyId], deque[int]] = {}
        self._step = 0

    def channel(self, sender: PartyId, receiver: PartyId) -> Channel:
        if sender not in self.parties or receiver not in self.parties:
            raise TransportError(f"{sender} -> {receiver}: endpoint is not part of this session")
        key = (sender, receiver)
        if key not in self._channels:
            self._channels[key] = Channel(sender, receiver, self.latency_ms)
        return self._channels[key]

    def deliver(self, ctx: PartyContext, peer: PartyId, payload: bytes, step: int):
        data = frame(self.session_id, step, payload)
        self.channel(ctx.party, peer).send(data)
        self._step += 1
        self._rounds.setdefault((ctx.party, peer), deque()).append(ctx.round + 1)
        self.transcript.entries.append(
            TranscriptEntry(self._step, ctx.party, peer, step, len(payload), ctx.round + 1, self.phase, bytes(payload))
        )
        logger.debug(f"{ctx.party} -> {peer}: {len(payload)} bytes")

    def run(self, program: Program | dict[PartyId, Program]) -> SessionOutcome:
        contexts = {party: PartyContext(self, party) for party in self.parties}
        programs = {party: program[party] if isinstance(program, dict) else program for party in self.parties}
        running = {party: programs[party](contexts[party]) for party in self.parties}
        waiting: dict[PartyId, Recv | None] = {party: None for party in self.parties}
        outputs: dict[PartyId, Any] = {}
        started: set[PartyId] = set()
        idle = steps = 0

        def advance(party: PartyId, value: bytes | None):
            try:
                request = running[party].send(value)
            except StopIteration as stop:
                outputs[party] = stop.value
                del running[party]
                return
            except Exception:
                self._abort()
                raise
            if not isinstance(request, Recv):
                self._abort()
                raise TransportError(f"{party} yielded {request!r}; programs may only yield ctx.recv(peer)")
            waiting[party] = request

        while running:
            progressed = False
            for party in self.parties:
                if party not in running:
                    continue
                steps += 1
                if party not in started:
                    started.add(party)
                    advance(party, None)
                    progressed = True
                    continue
                request = waiting[party]
                channel = self.channel(request.peer, party)
                if channel.pending:
                    _, payload = unframe(self.session_id, channel.recv(timeout=0))
                    sender_round = self._rounds[(request.peer, party)].popleft()
                    contexts[party].round = max(contexts[party].round, sender_round)
                    advance(party, payload)
                    progressed = True
                elif channel.closed:
                    self._abort()
                    raise SessionAbortedError(f"{party} waits on {request.peer}, whose channel closed mid-protocol")
            if progressed:
                idle = 0
                continue
            idle += len(running)
            if idle >= self.idle_budget:
                blocked = sorted(str(party) for party in running)
                logger.error(f"deadlock: {', '.join(blocked)} blocked after {idle} idle steps")
                self._abort()
                raise DeadlockError(blocked)

        logger.debug(f"session finished: {len(self.transcript)} messages in {steps} scheduler steps")
        return SessionOutcome(outputs, self.transcript, steps)

    def _abort(self):
        for channel in self._channels.values():
            channel.close()


def run_session(
    parties: Iterable[PartyId],
    program: Program | dict[PartyId, Program],
    seed: bytes,
    latency_ms: float = 0.0,
    phase: str = "",
    idle_budget: int = DEADLOCK_BUDGET,
) -> SessionOutcome:
    return Session(list(parties), seed, latency_ms, phase, idle_budget).run(program)
