"""Receiver-basis commitment (u, v) = (g^r, h^r g^m) and the share-pair extractable commitment."""
import copy
from dataclasses import dataclass, field

from .algebra import GroupParams, GroupTooLarge, dlog_bruteforce, immutable


@immutable
@dataclass(frozen=True)
class ReceiverBasis:
    h: int
    s_secret: int | None = field(default=None, compare=False, repr=False)

    def public(self):
        return ReceiverBasis(self.h)


@immutable
@dataclass(frozen=True)
class Commitment:
    u: int
    v: int


@immutable
@dataclass(frozen=True)
class Opening:
    m: int
    r: int


@immutable
@dataclass(frozen=True)
class NaorTranscript:
    basis: ReceiverBasis
    com: Commitment

    def to_json(self):
        return {"basis": hex(self.basis.h), "u": hex(self.com.u), "v": hex(self.com.v)}

    @classmethod
    def from_json(cls, d):
        return cls(ReceiverBasis(int(d["basis"], 16)), Commitment(int(d["u"], 16), int(d["v"], 16)))


def basis_gen(params: GroupParams, rng, s=None) -> ReceiverBasis:
    if s is None:
        s = rng.scalar(params.q)
    return ReceiverBasis(pow(params.g, s, params.p), s)


def commit(params: GroupParams, basis: ReceiverBasis, m: int, r: int) -> Commitment:
    if not (params.is_scalar(m) and params.is_scalar(r)):
        raise ValueError("message and randomness must be scalars mod q")
    u = pow(params.g, r, params.p)
    v = pow(basis.h, r, params.p) * pow(params.g, m, params.p) % params.p
    return Commitment(u, v)


def well_formed(params, basis, com) -> bool:
    return (
        isinstance(com, Commitment)
        and params.is_element(basis.h)
        and params.is_element(com.u)
        and params.is_element(com.v)
    )


def verify_open(params: GroupParams, basis: ReceiverBasis, com: Commitment, opening: Opening) -> bool:
    if not well_formed(params, basis, com):
        return False
    if not (params.is_scalar(opening.m) and params.is_scalar(opening.r)):
        return False
    return commit(params, basis, opening.m, opening.r) == com


def val_oracle(params: GroupParams, transcript: NaorTranscript, s=None):
    """The unique committed message, or None when nothing opens the transcript.

    Uses the basis trapdoor when the harness holds it; otherwise recovers r
    and then m by exhaustive discrete logs, which needs a small group.
    """
    basis, com = transcript.basis, transcript.com
    if not well_formed(params, basis, com):
        return None
    if s is None:
        s = basis.s_secret
    if s is not None:
        if pow(params.g, s, params.p) != basis.h:
            raise ValueError("instrumented trapdoor does not match the basis")
        gm = com.v * pow(com.u, -s, params.p) % params.p
        if params.brute_forceable:
            return dlog_bruteforce(params, gm)
        raise GroupTooLarge("message recovery needs a brute-forceable group")
    if not params.brute_forceable:
        raise GroupTooLarge("val(tau) unavailable without instrumentation in large groups")
    r = dlog_bruteforce(params, com.u)
    return dlog_bruteforce(params, com.v * pow(basis.h, -r, params.p) % params.p)


# Extractable commitment: n pairs of additive shares of m, each share committed
# under the session basis; the receiver picks one share per pair to open.

DEFAULT_PAIRS = 20


@immutable
@dataclass(frozen=True)
class ExtComTranscript:
    n_pairs: int
    basis: ReceiverBasis
    pair_commitments: tuple
    challenge: tuple | None = None
    opened: tuple | None = None

    def to_json(self):
        return {
            "basis": hex(self.basis.h),
            "pairs": [[{"u": hex(c.u), "v": hex(c.v)} for c in pair] for pair in self.pair_commitments],
            "challenge": None if self.challenge is None else "".join(str(b) for b in self.challenge),
            "opened": None if self.opened is None else [[hex(o.m), hex(o.r)] for o in self.opened],
        }


class ExtComCommitter:
    def __init__(self, params, basis, m, rng, n_pairs=DEFAULT_PAIRS, shares=None):
        self.params = params
        self.basis = basis.public()
        self.m = m
        q = params.q
        if shares is None:
            firsts = [rng.scalar(q) for _ in range(n_pairs)]
            shares = [(a, (m - a) % q) for a in firsts]
        self.shares = [tuple(s) for s in shares]
        self.n_pairs = len(self.shares)
        self.openings = [
            tuple(Opening(s, rng.scalar(q)) for s in pair) for pair in self.shares
        ]
        self.commitments = tuple(
            tuple(commit(params, self.basis, o.m, o.r) for o in pair) for pair in self.openings
        )
        self.challenge = None

    def commit_message(self):
        return self.commitments

    def respond(self, challenge):
        if challenge is None or len(challenge) != self.n_pairs or any(b not in (0, 1) for b in challenge):
            return None
        self.challenge = tuple(challenge)
        return tuple(pair[b] for pair, b in zip(self.openings, challenge))

    def decommit_info(self):
        if self.challenge is None:
            return None
        return tuple(pair[1 - b] for pair, b in zip(self.openings, self.challenge))

    def sigma_values(self):
        """Per pair (first share, its randomness, second share randomness)."""
        return [(pair[0].m, pair[0].r, pair[1].r) for pair in self.openings]


class ExtComReceiver:
    def __init__(self, params, basis, rng, n_pairs=DEFAULT_PAIRS):
        self.params = params
        self.basis = basis.public()
        self.rng = rng
        self.n_pairs = n_pairs
        self.commitments = None
        self.challenge = None
        self.opened = None
        self.ok = None

    def receive_commitments(self, commitments):
        ok = (
            isinstance(commitments, tuple)
            and len(commitments) == self.n_pairs
            and all(
                isinstance(pair, tuple) and len(pair) == 2 and all(well_formed(self.params, self.basis, c) for c in pair)
                for pair in commitments
            )
        )
        if ok:
            self.commitments = commitments
        else:
            self.ok = False
        return ok

    def make_challenge(self):
        self.challenge = self.rng.bits(self.n_pairs)
        return self.challenge

    def receive_openings(self, opened):
        self.ok = check_openings(self.params, self.basis, self.commitments, self.challenge, opened)
        if self.ok:
            self.opened = tuple(opened)
        return self.ok

    def transcript(self):
        return ExtComTranscript(self.n_pairs, self.basis, self.commitments, self.challenge, self.opened)


def check_openings(params, basis, commitments, challenge, opened) -> bool:
    if commitments is None or challenge is None or opened is None or len(opened) != len(commitments):
        return False
    return all(
        isinstance(o, Opening) and verify_open(params, basis, pair[b], o)
        for pair, b, o in zip(commitments, challenge, opened)
    )


def extcom_run(params, basis, m, rng, n_pairs=DEFAULT_PAIRS, committer=None):
    """One honest-receiver run; returns (transcript, decommit info, decision)."""
    if committer is None:
        committer = ExtComCommitter(params, basis, m, rng.split("committer"), n_pairs)
    receiver = ExtComReceiver(params, basis, rng.split("receiver"), n_pairs)
    if not receiver.receive_commitments(committer.commit_message()):
        return receiver.transcript(), None, False
    opened = committer.respond(receiver.make_challenge())
    ok = receiver.receive_openings(opened)
    return receiver.transcript(), committer.decommit_info() if ok else None, ok


def extcom_verify_decommit(params, transcript: ExtComTranscript, m, decommit) -> bool:
    if transcript.opened is None or decommit is None or len(decommit) != transcript.n_pairs:
        return False
    for pair, b, o, other in zip(transcript.pair_commitments, transcript.challenge, transcript.opened, decommit):
        if not (verify_open(params, transcript.basis, pair[b], o) and verify_open(params, transcript.basis, pair[1 - b], other)):
            return False
        if (o.m + other.m) % params.q != m % params.q:
            return False
    return True


@dataclass
class ExtComExtraction:
    view: ExtComTranscript | None
    accepted: bool
    value: int | None
    budget_exhausted: bool = False
    rewinds: int = 0
    main_state: object = None


def _default_respond(committer, challenge):
    return committer.respond(challenge)


def extcom_extract(params, basis, snapshot, rng, n_pairs=DEFAULT_PAIRS, budget=64, respond=_default_respond):
    """Rewinding extractor over a committer frozen right after its commit message.

    `respond(clone, challenge)` drives a clone of the snapshot to its opening
    message. The main thread is an ordinary receiver run, so its view is the
    real view; rewinds use independent challenge streams.
    """
    commitments = snapshot.commit_message() if hasattr(snapshot, "commit_message") else snapshot.commitments
    receiver = ExtComReceiver(params, basis, rng.split("main"), n_pairs)
    if not receiver.receive_commitments(commitments):
        return ExtComExtraction(receiver.transcript(), False, None)
    main = copy.deepcopy(snapshot)
    challenge = receiver.make_challenge()
    if not receiver.receive_openings(respond(main, challenge)):
        return ExtComExtraction(receiver.transcript(), False, None, main_state=main)
    rewind_rng = rng.split("rewind")
    for k in range(budget):
        other = rewind_rng.bits(n_pairs)
        if other == challenge:
            continue
        opened = respond(copy.deepcopy(snapshot), other)
        if not check_openings(params, basis, commitments, other, opened):
            continue
        i = next(j for j in range(n_pairs) if other[j] != challenge[j])
        value = (receiver.opened[i].m + opened[i].m) % params.q
        return ExtComExtraction(receiver.transcript(), True, value, rewinds=k + 1, main_state=main)
    return ExtComExtraction(receiver.transcript(), True, None, budget_exhausted=True, rewinds=budget, main_state=main)
