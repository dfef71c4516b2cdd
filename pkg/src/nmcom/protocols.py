"""Message-driven committer/receiver state machines for the three commitment protocols.

Each protocol is a fixed script of rounds; both parties walk the same script
and every round is one message from its sender. Labels are unique per round
("w1a.2.e" is the challenge of the second WIPoK-1-A repetition).
"""
import copy
import os
from dataclasses import dataclass, field
from functools import lru_cache

from . import sigma
from .algebra import immutable
from .commitments import (
    DEFAULT_PAIRS,
    Commitment,
    ExtComCommitter,
    ExtComReceiver,
    NaorTranscript,
    Opening,
    ReceiverBasis,
    basis_gen,
    commit,
    verify_open,
    well_formed,
)

ONE_SIDED = "one-sided"
SYNC = "sync"
ASYNC = "async"
KINDS = (ONE_SIDED, SYNC, ASYNC)

ACK = "ACK"


class ProtocolViolation(Exception):
    pass


class MissingContext(Exception):
    pass


@immutable
@dataclass(frozen=True)
class Tag:
    t: int
    n: int

    def __post_init__(self):
        if not 1 <= self.t <= self.n:
            raise ValueError(f"tag {self.t} outside [1, {self.n}]")

    @property
    def slot_b(self):
        return self.n - self.t


@immutable
@dataclass(frozen=True)
class RepetitionConstants:
    n5: int
    n6: int
    n7: int
    n8: int
    n9: int
    faithful: bool = True

    def as_tuple(self):
        return (self.n5, self.n6, self.n7, self.n8, self.n9)


def _step_rounds(wipok_rounds, extcom_rounds):
    """Round counts of steps 1-4 (step 3 is TrapGen plus WIPoK-Trap)."""
    return [1, 1, 1 + wipok_rounds, 1]


def compute_constants(wipok_rounds=3, extcom_rounds=3, lab=False) -> RepetitionConstants:
    if wipok_rounds < 1 or extcom_rounds < 1:
        raise ValueError("round counts must be positive")
    if lab:
        return RepetitionConstants(2, 2, 2, 2, 2, faithful=False)
    total = sum(_step_rounds(wipok_rounds, extcom_rounds))
    n5 = max(total, wipok_rounds, extcom_rounds) + 1
    total += n5 * extcom_rounds
    n6 = total + 1
    total += n6 * wipok_rounds
    n7 = total + 1
    total += n7 * extcom_rounds
    n8 = total + 1
    total += n8 * wipok_rounds
    n9 = total + 1
    return RepetitionConstants(n5, n6, n7, n8, n9)


def constants_inequalities(c: RepetitionConstants, wipok_rounds=3, extcom_rounds=3):
    """Each n_i against the round total of everything before its step."""
    totals = {}
    total = sum(_step_rounds(wipok_rounds, extcom_rounds))
    checks = {"n5>wipok": c.n5 > wipok_rounds, "n5>extcom": c.n5 > extcom_rounds}
    for name, count, per in (("n5", c.n5, extcom_rounds), ("n6", c.n6, wipok_rounds), ("n7", c.n7, extcom_rounds),
                             ("n8", c.n8, wipok_rounds), ("n9", c.n9, extcom_rounds)):
        totals[name] = total
        checks[f"{name}>{total}"] = count > total
        total += count * per
    return checks, totals


def lab_profile_default() -> bool:
    return os.environ.get("NMCOM_LAB_PROFILE", "").strip().lower() in ("1", "true", "yes", "lab")


def default_constants() -> RepetitionConstants:
    return compute_constants(lab=lab_profile_default())


@immutable
@dataclass(frozen=True)
class Round:
    label: str
    sender: str
    step: int
    phase: str
    instance: int = 0
    part: str = ""

    @property
    def family(self):
        return self.label.rsplit(".", 1)[0] if self.part else self.label


SIGMA_PHASES = ("trap", "w1", "w1a", "w1b", "w2")
EXTCOM_PHASES = ("ext1", "ext2", "ext3")
PROVER = {"trap": "R", "w1": "R", "w1a": "R", "w1b": "R", "w2": "C"}


def _other(role):
    return "C" if role == "R" else "R"


def _sigma_rounds(phase, step, instance=0):
    prover = PROVER[phase]
    name = f"{phase}.{instance}" if instance else phase
    return [
        Round(f"{name}.a", prover, step, phase, instance, "a"),
        Round(f"{name}.e", _other(prover), step, phase, instance, "e"),
        Round(f"{name}.z", prover, step, phase, instance, "z"),
    ]


def _extcom_rounds(phase, step, instance):
    name = f"{phase}.{instance}"
    return [
        Round(f"{name}.c", "C", step, phase, instance, "c"),
        Round(f"{name}.e", "R", step, phase, instance, "e"),
        Round(f"{name}.z", "C", step, phase, instance, "z"),
    ]


@lru_cache(maxsize=32)
def build_script(kind, constants=None):
    if kind == ONE_SIDED:
        rounds = [
            Round("1", "R", 1, "basis"),
            Round("2", "C", 2, "commit"),
            Round("3", "R", 3, "puzzle"),
            Round("ack", "C", 3, "ack"),
            *_sigma_rounds("w1", 4),
            *_sigma_rounds("w2", 5),
        ]
    elif kind == SYNC:
        rounds = [
            Round("1", "R", 1, "basis"),
            Round("2", "C", 2, "commit"),
            Round("3", "R", 3, "puzzle"),
            Round("ack", "C", 3, "ack"),
            *_sigma_rounds("w1a", 4),
            *_sigma_rounds("w1b", 5),
            *_sigma_rounds("w2", 6),
        ]
    elif kind == ASYNC:
        c = constants
        rounds = [
            Round("1", "R", 1, "basis"),
            Round("2", "C", 2, "commit"),
            Round("3a", "R", 3, "trapgen"),
            *_sigma_rounds("trap", 3),
            Round("4", "R", 4, "puzzle"),
        ]
        for phase, step, count, maker in (
            ("ext1", 5, c.n5, _extcom_rounds),
            ("w1a", 6, c.n6, _sigma_rounds),
            ("ext2", 7, c.n7, _extcom_rounds),
            ("w1b", 8, c.n8, _sigma_rounds),
            ("ext3", 9, c.n9, _extcom_rounds),
        ):
            for k in range(1, count + 1):
                rounds.extend(maker(phase, step, k))
        rounds.extend(_sigma_rounds("w2", 10))
    else:
        raise ValueError(f"unknown protocol {kind!r}")
    return tuple(rounds)


@immutable
@dataclass(frozen=True)
class Protocol:
    kind: str
    n: int = 4
    constants: RepetitionConstants | None = None
    n_pairs: int = DEFAULT_PAIRS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown protocol {self.kind!r}; choose from {KINDS}")
        if self.kind == ASYNC and self.constants is None:
            object.__setattr__(self, "constants", default_constants())

    def script(self):
        return build_script(self.kind, self.constants if self.kind == ASYNC else None)

    def round_index(self):
        return _round_index(self.script())

    def tag(self, t):
        tag = Tag(t, self.n)
        if self.kind != ONE_SIDED and tag.slot_b < 1:
            raise ValueError("two-slot protocols need t < n so slot B has a puzzle")
        return tag

    def extcom_count(self):
        c = self.constants
        return c.n5 + c.n7 + c.n9 if self.kind == ASYNC else 0


@lru_cache(maxsize=32)
def _round_index(script):
    return {r.label: i for i, r in enumerate(script)}


# Wire payloads


@immutable
@dataclass(frozen=True)
class ProtocolMessage:
    label: str
    payload: object


@immutable
@dataclass(frozen=True)
class PuzzleSet:
    Y: tuple
    preimages: tuple | None = field(default=None, compare=False, repr=False)
    commitments: tuple | None = None
    openings: tuple | None = field(default=None, compare=False, repr=False)

    def public(self):
        return PuzzleSet(self.Y, commitments=self.commitments)


@immutable
@dataclass(frozen=True)
class TrapdoorPair:
    V0: int
    V1: int
    v0: int | None = field(default=None, compare=False, repr=False)
    v1: int | None = field(default=None, compare=False, repr=False)

    def public(self):
        return TrapdoorPair(self.V0, self.V1)


@dataclass
class SessionContext:
    basis: ReceiverBasis | None = None
    com: Commitment | None = None
    basis2: ReceiverBasis | None = None
    puzzles: PuzzleSet | None = None
    puzzles_a: PuzzleSet | None = None
    puzzles_b: PuzzleSet | None = None
    trap: TrapdoorPair | None = None
    extcoms: list = field(default_factory=list)


def _need(ctx, *names):
    missing = [n for n in names if getattr(ctx, n) is None]
    if missing:
        raise MissingContext(f"context lacks {', '.join(missing)}")


def build_language(protocol: Protocol, ctx: SessionContext) -> sigma.OrList:
    """Statement proven in WIPoK-2: opening branch first, then puzzle and trapdoor disjuncts."""
    _need(ctx, "basis", "com")
    if protocol.kind == ONE_SIDED:
        _need(ctx, "puzzles")
        return sigma.OrList((sigma.OpeningOf(ctx.basis.h, ctx.com), sigma.OneOfT(ctx.puzzles.Y)))
    _need(ctx, "puzzles_a", "puzzles_b")
    if protocol.kind == SYNC:
        return sigma.OrList((
            sigma.OpeningOf(ctx.basis.h, ctx.com),
            sigma.OneOfT(ctx.puzzles_a.Y),
            sigma.OneOfT(ctx.puzzles_b.Y),
        ))
    _need(ctx, "trap")
    if len(ctx.extcoms) != protocol.extcom_count():
        raise MissingContext("not every extractable commitment has been recorded")
    return sigma.OrList((
        sigma.ConsistentOpening(ctx.basis.h, ctx.com, tuple(ctx.extcoms)),
        sigma.OneOfT(ctx.puzzles_a.Y),
        sigma.OneOfT(ctx.puzzles_b.Y),
        sigma.TrapOR(ctx.trap.V0, ctx.trap.V1),
    ))


def puzzle_statement(protocol: Protocol, ctx: SessionContext, phase):
    """Statement the receiver proves in a WIPoK-1 (or the trapdoor proof)."""
    if phase == "trap":
        _need(ctx, "trap")
        return sigma.TrapOR(ctx.trap.V0, ctx.trap.V1)
    if phase == "w1":
        _need(ctx, "puzzles")
        return sigma.OneOfT(ctx.puzzles.Y)
    _need(ctx, "basis2")
    ps = ctx.puzzles_a if phase == "w1a" else ctx.puzzles_b
    if ps is None:
        raise MissingContext("puzzles not announced")
    return sigma.ConsistentPuzzle(ps.Y, ps.commitments, ctx.basis2.h)


def wipok2_branch_kind(protocol: Protocol, tag: Tag, branch: int):
    """Map a flattened WIPoK-2 branch index to ('opening'|'puzzle_a'|'puzzle_b'|'trap', 1-based index)."""
    if branch == 0:
        return "opening", 0
    if protocol.kind == ONE_SIDED:
        return ("puzzle", branch) if branch <= tag.t else ("invalid", branch)
    if branch <= tag.t:
        return "puzzle_a", branch
    if branch <= tag.n:
        return "puzzle_b", branch - tag.t
    return "trap", branch - tag.n


# Parties


class Party:
    role = None

    def __init__(self, params, protocol: Protocol, tag: Tag, rng):
        self.params = params
        self.protocol = protocol
        self.tag = tag
        self.rng = rng
        self.pos = 0
        self.halted = False
        self.decision = None
        self.ctx = SessionContext()
        self.proofs = {}
        self.log = []

    @property
    def script(self):
        return self.protocol.script()

    def next_round(self):
        script = self.script
        return script[self.pos] if self.pos < len(script) else None

    @property
    def done(self):
        return self.pos >= len(self.script) or self.halted

    def _halt(self):
        self.halted = True
        self.decision = False

    def _finish_if_done(self):
        if self.pos >= len(self.script) and not self.halted:
            self.decision = True

    def send(self):
        rnd = self.next_round()
        if self.halted or rnd is None:
            return None
        if rnd.sender != self.role:
            raise ProtocolViolation(f"{self.role} asked to send {rnd.label} owned by {rnd.sender}")
        payload = self._produce(rnd)
        self.pos += 1
        if payload is None:
            self._halt()
            return None
        msg = ProtocolMessage(rnd.label, payload)
        self.log.append(("out", msg))
        self._finish_if_done()
        return msg

    def receive(self, msg):
        if self.halted:
            return
        rnd = self.next_round()
        if rnd is None or rnd.sender == self.role or not isinstance(msg, ProtocolMessage) or msg.label != rnd.label:
            self._halt()
            return
        self.log.append(("in", msg))
        self.pos += 1
        try:
            ok = self._consume(rnd, msg.payload)
        except (TypeError, ValueError, AttributeError, IndexError, MissingContext):
            ok = False
        if not ok:
            self._halt()
        else:
            self._finish_if_done()

    # sigma rounds shared by both roles

    def _sigma_produce(self, rnd):
        rec = self.proofs.setdefault(rnd.family, {})
        if rnd.part == "a":
            stmt = self._prover_statement(rnd.phase)
            wit = self._prover_witness(rnd.phase, stmt)
            if wit is None:
                return None
            prover = sigma.Prover(self.params, stmt, wit, self.rng, check=False)
            rec["prover"] = prover
            rec["first"] = prover.first_message()
            return rec["first"]
        if rnd.part == "e":
            rec["e"] = self.rng.scalar(self.params.q)
            return rec["e"]
        rec["response"] = rec["prover"].respond(rec["e"])
        del rec["prover"]
        return rec["response"]

    def _sigma_consume(self, rnd, payload):
        rec = self.proofs.setdefault(rnd.family, {})
        if rnd.part == "a":
            rec["first"] = payload
            return isinstance(payload, tuple)
        if rnd.part == "e":
            rec["e"] = payload
            return self.params.is_scalar(payload)
        rec["response"] = payload
        stmt = self._verifier_statement(rnd.phase)
        rec["ok"] = sigma.statement_ok(self.params, stmt) and sigma.check_response(
            self.params, stmt, rec["first"], rec["e"], payload
        )
        return rec["ok"]

    def proof_transcript(self, family):
        rec = self.proofs.get(family, {})
        if not all(k in rec for k in ("first", "e", "response")):
            return None
        return sigma.ORTranscript.assemble(rec["first"], rec["e"], rec["response"])

    def snapshot(self):
        return copy.deepcopy(self)


class Committer(Party):
    role = "C"

    def __init__(self, params, protocol, tag, m, rng):
        super().__init__(params, protocol, tag, rng)
        if m is not None and not params.is_scalar(m):
            raise ValueError("message must be a scalar mod q")
        self.m = m
        self.r = None
        self.basis2 = None
        self.extcom_parties = {}
        self.extcom_challenges = {}
        self.wipok2_witness = None

    def _produce(self, rnd):
        params = self.params
        if rnd.phase == "commit":
            self.r = self.rng.scalar(params.q)
            com = commit(params, self.ctx.basis, self.m, self.r)
            self.ctx.com = com
            if self.protocol.kind == ONE_SIDED:
                return com
            self.basis2 = basis_gen(params, self.rng)
            self.ctx.basis2 = self.basis2.public()
            return (com, self.basis2.public())
        if rnd.phase == "ack":
            return ACK
        if rnd.phase in SIGMA_PHASES:
            return self._sigma_produce(rnd)
        if rnd.phase in EXTCOM_PHASES:
            if rnd.part == "c":
                party = ExtComCommitter(params, self.ctx.basis, self.m, self.rng, self.protocol.n_pairs)
                self.extcom_parties[rnd.family] = party
                self.ctx.extcoms.append((self.ctx.basis.h, party.commitments))
                return party.commitments
            return self.extcom_parties[rnd.family].respond(self.extcom_challenges[rnd.family])
        raise ProtocolViolation(f"committer cannot send {rnd.label}")

    def _consume(self, rnd, payload):
        params = self.params
        if rnd.phase == "basis":
            if not (isinstance(payload, ReceiverBasis) and params.is_element(payload.h)):
                return False
            self.ctx.basis = payload.public()
            return True
        if rnd.phase == "trapgen":
            if not (isinstance(payload, TrapdoorPair) and params.is_element(payload.V0) and params.is_element(payload.V1)):
                return False
            self.ctx.trap = payload.public()
            return True
        if rnd.phase == "puzzle":
            return self._consume_puzzles(payload)
        if rnd.phase in SIGMA_PHASES:
            return self._sigma_consume(rnd, payload)
        if rnd.phase in EXTCOM_PHASES:
            party = self.extcom_parties[rnd.family]
            self.extcom_challenges[rnd.family] = payload
            return isinstance(payload, tuple) and len(payload) == party.n_pairs and all(b in (0, 1) for b in payload)
        return False

    def _consume_puzzles(self, payload):
        params = self.params
        if self.protocol.kind == ONE_SIDED:
            if not isinstance(payload, PuzzleSet) or len(payload.Y) != self.tag.t:
                return False
            if not all(params.is_element(y) for y in payload.Y):
                return False
            self.ctx.puzzles = payload.public()
            return True
        a, b = payload
        for ps, count in ((a, self.tag.t), (b, self.tag.slot_b)):
            if not isinstance(ps, PuzzleSet) or len(ps.Y) != count or ps.commitments is None:
                return False
            if len(ps.commitments) != count:
                return False
            if not all(params.is_element(y) for y in ps.Y):
                return False
            if not all(well_formed(params, self.ctx.basis2, c) for c in ps.commitments):
                return False
        self.ctx.puzzles_a, self.ctx.puzzles_b = a.public(), b.public()
        return True

    def _prover_statement(self, phase):
        return build_language(self.protocol, self.ctx)

    def _verifier_statement(self, phase):
        return puzzle_statement(self.protocol, self.ctx, phase)

    def honest_witness(self):
        values = [self.m, self.r]
        if self.protocol.kind == ASYNC:
            for party in self.extcom_parties.values():
                for triple in party.sigma_values():
                    values.extend(triple)
        return sigma.Witness(0, tuple(values))

    def _prover_witness(self, phase, stmt):
        if self.wipok2_witness is not None:
            return self.wipok2_witness
        if self.m is None:
            return None
        return self.honest_witness()

    def decommit(self):
        if self.m is None or self.r is None:
            return None
        return Opening(self.m, self.r)

    def extcom_decommits(self):
        return [(fam, p.decommit_info()) for fam, p in self.extcom_parties.items()]


class Receiver(Party):
    role = "R"

    def __init__(self, params, protocol, tag, rng):
        super().__init__(params, protocol, tag, rng)
        self.basis = None
        self.puzzle_secrets = None
        self.puzzle_secrets_b = None
        self.trapdoor = None
        self.extcom_parties = {}
        self.wipok1_index = 1

    def transcript(self):
        if self.ctx.basis is None or self.ctx.com is None:
            return None
        return NaorTranscript(self.basis, self.ctx.com)

    def preimage(self, i):
        """The i-th (1-based) preimage of the receiver's slot-A puzzles."""
        ps = self.puzzle_secrets
        return None if ps is None else ps.preimages[i - 1]

    def _sample_puzzles(self, count, basis2=None):
        params = self.params
        xs = tuple(self.rng.scalar(params.q) for _ in range(count))
        Y = tuple(pow(params.g, x, params.p) for x in xs)
        if basis2 is None:
            return PuzzleSet(Y, xs)
        rs = tuple(self.rng.scalar(params.q) for _ in range(count))
        coms = tuple(commit(params, basis2, x, r) for x, r in zip(xs, rs))
        return PuzzleSet(Y, xs, coms, tuple(Opening(x, r) for x, r in zip(xs, rs)))

    def _produce(self, rnd):
        params = self.params
        if rnd.phase == "basis":
            self.basis = basis_gen(params, self.rng)
            self.ctx.basis = self.basis.public()
            return self.basis.public()
        if rnd.phase == "trapgen":
            v0, v1 = self.rng.scalar(params.q), self.rng.scalar(params.q)
            self.trapdoor = TrapdoorPair(pow(params.g, v0, params.p), pow(params.g, v1, params.p), v0, v1)
            self.ctx.trap = self.trapdoor.public()
            return self.trapdoor.public()
        if rnd.phase == "puzzle":
            if self.protocol.kind == ONE_SIDED:
                self.puzzle_secrets = self._sample_puzzles(self.tag.t)
                self.ctx.puzzles = self.puzzle_secrets.public()
                return self.ctx.puzzles
            self.puzzle_secrets = self._sample_puzzles(self.tag.t, self.ctx.basis2)
            self.puzzle_secrets_b = self._sample_puzzles(self.tag.slot_b, self.ctx.basis2)
            self.ctx.puzzles_a = self.puzzle_secrets.public()
            self.ctx.puzzles_b = self.puzzle_secrets_b.public()
            return (self.ctx.puzzles_a, self.ctx.puzzles_b)
        if rnd.phase in SIGMA_PHASES:
            return self._sigma_produce(rnd)
        if rnd.phase in EXTCOM_PHASES:
            return self.extcom_parties[rnd.family].make_challenge()
        raise ProtocolViolation(f"receiver cannot send {rnd.label}")

    def _consume(self, rnd, payload):
        params = self.params
        if rnd.phase == "commit":
            if self.protocol.kind == ONE_SIDED:
                com, basis2 = payload, None
            else:
                com, basis2 = payload
                if not (isinstance(basis2, ReceiverBasis) and params.is_element(basis2.h)):
                    return False
                self.ctx.basis2 = basis2.public()
            if not well_formed(params, self.ctx.basis, com):
                return False
            self.ctx.com = com
            return True
        if rnd.phase == "ack":
            return payload == ACK
        if rnd.phase in SIGMA_PHASES:
            return self._sigma_consume(rnd, payload)
        if rnd.phase in EXTCOM_PHASES:
            if rnd.part == "c":
                party = ExtComReceiver(params, self.ctx.basis, self.rng, self.protocol.n_pairs)
                self.extcom_parties[rnd.family] = party
                if not party.receive_commitments(payload):
                    return False
                self.ctx.extcoms.append((self.ctx.basis.h, payload))
                return True
            return self.extcom_parties[rnd.family].receive_openings(payload)
        return False

    def _prover_statement(self, phase):
        return puzzle_statement(self.protocol, self.ctx, phase)

    def _verifier_statement(self, phase):
        return build_language(self.protocol, self.ctx)

    def _prover_witness(self, phase, stmt):
        if phase == "trap":
            return sigma.Witness(0, (self.trapdoor.v0,))
        ps = self.puzzle_secrets_b if phase == "w1b" else self.puzzle_secrets
        i = self.wipok1_index if phase in ("w1", "w1a") and self.wipok1_index <= len(ps.Y) else 1
        if phase == "w1":
            return sigma.Witness(i - 1, (ps.preimages[i - 1],))
        o = ps.openings[i - 1]
        return sigma.Witness(i - 1, (o.m, o.r))


def make_parties(params, protocol, tag, m, rng):
    return (
        Committer(params, protocol, tag, m, rng.split("committer")),
        Receiver(params, protocol, tag, rng.split("receiver")),
    )


def advance(state: Party, incoming=None):
    """Pure step: deliver `incoming` (if any), then emit the party's next message if it owns the next round.

    Returns (new state, outgoing message or None, decision) where decision is
    None while pending, True for accept and False for reject.
    """
    s = copy.deepcopy(state)
    if incoming is not None:
        s.receive(incoming)
    out = None
    rnd = s.next_round()
    if not s.halted and rnd is not None and rnd.sender == s.role:
        out = s.send()
    return s, out, s.decision


@immutable
@dataclass(frozen=True)
class TraceEntry:
    session: str
    round: int
    sender: str
    label: str
    message: ProtocolMessage | None

    def to_json(self):
        from .wire import to_jsonable

        return {
            "session": self.session,
            "round": self.round,
            "from": self.sender,
            "step": self.label,
            "payload": None if self.message is None else to_jsonable(self.message.payload),
        }


@dataclass
class SessionResult:
    transcript: NaorTranscript | None
    trace: list
    decision: bool
    opening: Opening | None
    decommit_decision: bool
    committer: Committer
    receiver: Receiver


def run_commit_stage(committer, receiver, session="standalone"):
    trace = []
    for k, rnd in enumerate(committer.script):
        sender, other = (committer, receiver) if rnd.sender == "C" else (receiver, committer)
        msg = sender.send()
        trace.append(TraceEntry(session, k + 1, rnd.sender, rnd.label, msg))
        if msg is None:
            other.receive(None)
            break
        other.receive(msg)
        if other.halted:
            break
    return trace


def run_honest_session(params, protocol: Protocol, tag, m, rng) -> SessionResult:
    if isinstance(tag, int):
        tag = protocol.tag(tag)
    committer, receiver = make_parties(params, protocol, tag, m, rng)
    trace = run_commit_stage(committer, receiver)
    decision = bool(receiver.decision)
    transcript = receiver.transcript()
    opening = committer.decommit()
    dec = opening is not None and decommit_verify(params, transcript, opening.m, opening.r, decision)
    return SessionResult(transcript, trace, decision, opening, dec, committer, receiver)


def decommit_verify(params, transcript, m, r, commit_decision=True) -> bool:
    if not commit_decision or transcript is None:
        return False
    return verify_open(params, transcript.basis, transcript.com, Opening(m, r))
