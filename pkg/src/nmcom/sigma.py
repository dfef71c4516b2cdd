"""Sigma protocols over linear exponent relations, CDS OR-composition, extraction.

Every atomic language used by the protocols is a set of equations
target_k = prod_j base_kj ^ w[var_kj] over a vector w of secret exponents,
so one Maurer-style engine proves, simulates and extracts all of them.
Composite statements flatten to a list of atomic branches and are always
proven as an OR (a single branch is the plain protocol with e_0 = e).
"""
import copy
import math
from dataclasses import dataclass

from .algebra import immutable
from .commitments import Commitment


class RelationViolated(Exception):
    pass


class MalformedTranscripts(Exception):
    pass


@immutable
@dataclass(frozen=True)
class Relation:
    n_vars: int
    rows: tuple  # ((target, ((base, var), ...)), ...)

    def holds(self, params, values) -> bool:
        if len(values) != self.n_vars:
            return False
        return all(_evaluate(params, terms, values) == target for target, terms in self.rows)


def _evaluate(params, terms, values):
    acc = 1
    for base, var in terms:
        acc = acc * pow(base, values[var] % params.q, params.p) % params.p
    return acc


# Atomic statements


@immutable
@dataclass(frozen=True)
class DLog:
    y: int

    def relation(self, params):
        return Relation(1, ((self.y, ((params.g, 0),)),))


@immutable
@dataclass(frozen=True)
class OpeningOf:
    """Knowledge of (m, r) with u = g^r and v = h^r g^m."""

    h: int
    com: Commitment

    def relation(self, params):
        g = params.g
        return Relation(2, ((self.com.u, ((g, 1),)), (self.com.v, ((self.h, 1), (g, 0)))))


@immutable
@dataclass(frozen=True)
class PuzzleWithCommitment:
    """Knowledge of (x, r) with y = g^x and com = Com_h(x; r)."""

    y: int
    h: int
    com: Commitment

    def relation(self, params):
        g = params.g
        return Relation(
            2,
            ((self.y, ((g, 0),)), (self.com.u, ((g, 1),)), (self.com.v, ((self.h, 1), (g, 0)))),
        )


@immutable
@dataclass(frozen=True)
class ConsistentOpening:
    """Opening of com plus share openings of every extractable commitment summing to the same m.

    Variables: m, r, then per pair (first share, its randomness, second share randomness);
    the second share is m minus the first, so consistency is enforced by the relation itself.
    """

    h: int
    com: Commitment
    extcoms: tuple  # ((basis_h, pair_commitments), ...)

    def relation(self, params):
        g, p = params.g, params.p
        g_inv = pow(g, -1, p)
        rows = [(self.com.u, ((g, 1),)), (self.com.v, ((self.h, 1), (g, 0)))]
        var = 2
        for h_e, pairs in self.extcoms:
            for c0, c1 in pairs:
                s0, r0, r1 = var, var + 1, var + 2
                rows.append((c0.u, ((g, r0),)))
                rows.append((c0.v, ((h_e, r0), (g, s0))))
                rows.append((c1.u, ((g, r1),)))
                rows.append((c1.v, ((h_e, r1), (g, 0), (g_inv, s0))))
                var += 3
        return Relation(var, tuple(rows))


ATOMIC = (DLog, OpeningOf, PuzzleWithCommitment, ConsistentOpening)


# Composite statements; each flattens to atomic branches.


@immutable
@dataclass(frozen=True)
class OneOfT:
    Y: tuple

    def branches(self):
        return tuple(DLog(y) for y in self.Y)


@immutable
@dataclass(frozen=True)
class ConsistentPuzzle:
    Y: tuple
    coms: tuple
    h: int

    def branches(self):
        if len(self.Y) != len(self.coms):
            raise ValueError("puzzle and commitment lists differ in length")
        return tuple(PuzzleWithCommitment(y, self.h, c) for y, c in zip(self.Y, self.coms))


@immutable
@dataclass(frozen=True)
class TrapOR:
    V0: int
    V1: int

    def branches(self):
        return (DLog(self.V0), DLog(self.V1))


@immutable
@dataclass(frozen=True)
class OrList:
    stmts: tuple

    def branches(self):
        return tuple(b for s in self.stmts for b in flatten(s))

    def offsets(self):
        """Index of the first flattened branch of each disjunct."""
        out, k = [], 0
        for s in self.stmts:
            out.append(k)
            k += len(flatten(s))
        return out


def flatten(stmt):
    if isinstance(stmt, ATOMIC):
        return (stmt,)
    return stmt.branches()


def statement_ok(params, stmt) -> bool:
    """Subgroup membership of every element the statement embeds."""
    try:
        branches = flatten(stmt)
    except ValueError:
        return False
    for b in branches:
        for target, terms in b.relation(params).rows:
            if not params.is_element(target):
                return False
            if not all(params.is_element(base) for base, _ in terms):
                return False
    return len(branches) > 0


@immutable
@dataclass(frozen=True)
class Witness:
    branch: int
    values: tuple


def witness_ok(params, stmt, wit) -> bool:
    branches = flatten(stmt)
    if not isinstance(wit, Witness) or not 0 <= wit.branch < len(branches):
        return False
    return branches[wit.branch].relation(params).holds(params, wit.values)


# Transcripts


@immutable
@dataclass(frozen=True)
class SigmaTranscript:
    a: tuple
    e: int
    z: tuple


@immutable
@dataclass(frozen=True)
class ORTranscript:
    e: int
    branches: tuple  # SigmaTranscript per flattened branch

    @property
    def first(self):
        return tuple(b.a for b in self.branches)

    @property
    def response(self):
        return tuple((b.e, b.z) for b in self.branches)

    @classmethod
    def assemble(cls, first, e, response):
        return cls(e, tuple(SigmaTranscript(a, eb, z) for a, (eb, z) in zip(first, response)))

    def to_json(self):
        return {
            "e": hex(self.e),
            "branches": [
                {"a": [hex(x) for x in b.a], "e": hex(b.e), "z": [hex(x) for x in b.z]} for b in self.branches
            ],
        }


def _atomic_check(params, rel, t: SigmaTranscript) -> bool:
    if len(t.a) != len(rel.rows) or len(t.z) != rel.n_vars:
        return False
    if not all(params.is_scalar(z) for z in t.z) or not params.is_scalar(t.e):
        return False
    for a, (target, terms) in zip(t.a, rel.rows):
        if not params.is_element(a):
            return False
        if _evaluate(params, terms, t.z) != a * pow(target, t.e, params.p) % params.p:
            return False
    return True


def verify(params, stmt, transcript) -> bool:
    if isinstance(transcript, SigmaTranscript):
        transcript = ORTranscript(transcript.e, (transcript,))
    if not isinstance(transcript, ORTranscript):
        return False
    branches = flatten(stmt)
    if len(transcript.branches) != len(branches):
        return False
    if sum(b.e for b in transcript.branches) % params.q != transcript.e % params.q:
        return False
    return all(_atomic_check(params, br.relation(params), t) for br, t in zip(branches, transcript.branches))


def check_response(params, stmt, first, e, response) -> bool:
    try:
        return verify(params, stmt, ORTranscript.assemble(first, e, response))
    except (TypeError, ValueError):
        return False


def _simulate_atomic(params, rel, e, rng, z=None):
    if z is None:
        z = tuple(rng.scalar(params.q) for _ in range(rel.n_vars))
    p = params.p
    a = tuple(
        _evaluate(params, terms, z) * pow(target, (-e) % params.q, p) % p for target, terms in rel.rows
    )
    return SigmaTranscript(a, e % params.q, tuple(z))


def simulate(params, stmt, e, rng) -> ORTranscript:
    """Accepting transcript for challenge e without a witness."""
    branches = flatten(stmt)
    shares = [rng.scalar(params.q) for _ in branches[1:]]
    shares.insert(0, (e - sum(shares)) % params.q)
    return ORTranscript(
        e % params.q,
        tuple(_simulate_atomic(params, b.relation(params), es, rng) for b, es in zip(branches, shares)),
    )


class Prover:
    """Interactive CDS prover: dead branches simulated, live branch answered honestly."""

    def __init__(self, params, stmt, witness, rng, check=True):
        self.params = params
        self.stmt = stmt
        self.witness = witness
        self.rng = rng
        if check and not witness_ok(params, stmt, witness):
            raise RelationViolated("witness does not satisfy its branch")
        self.branches = flatten(stmt)
        self._first = None

    def first_message(self):
        if self._first is not None:
            return self._first
        params, q = self.params, self.params.q
        live = self.witness.branch
        self._sim = {}
        first = []
        for j, br in enumerate(self.branches):
            rel = br.relation(params)
            if j == live:
                self._k = tuple(self.rng.scalar(q) for _ in range(rel.n_vars))
                first.append(tuple(_evaluate(params, terms, self._k) for _, terms in rel.rows))
            else:
                t = _simulate_atomic(params, rel, self.rng.scalar(q), self.rng)
                self._sim[j] = t
                first.append(t.a)
        self._first = tuple(first)
        return self._first

    def respond(self, e):
        q = self.params.q
        if not self.params.is_scalar(e):
            return None
        live = self.witness.branch
        e_live = (e - sum(t.e for t in self._sim.values())) % q
        out = []
        for j in range(len(self.branches)):
            if j == live:
                z = tuple((k + e_live * w) % q for k, w in zip(self._k, self.witness.values))
                out.append((e_live, z))
            else:
                out.append((self._sim[j].e, self._sim[j].z))
        return tuple(out)


def or_prove(params, stmt, witness, e, rng) -> ORTranscript:
    prover = Prover(params, stmt, witness, rng)
    first = prover.first_message()
    return ORTranscript.assemble(first, e, prover.respond(e))


def atomic_prove_verify(params, stmt, witness, prover_rng, verifier_rng):
    if not isinstance(stmt, (DLog, OpeningOf)):
        raise TypeError("atomic runs cover DLog and OpeningOf statements")
    if not isinstance(witness, Witness):
        witness = Witness(0, tuple(witness))
    prover = Prover(params, stmt, witness, prover_rng)
    (a,) = prover.first_message()
    e = verifier_rng.scalar(params.q)
    ((_, z),) = prover.respond(e)
    t = SigmaTranscript(a, e, z)
    return t, verify(params, stmt, t)


def special_sound_extract(params, stmt, t1, t2) -> Witness:
    if isinstance(t1, SigmaTranscript):
        t1 = ORTranscript(t1.e, (t1,))
    if isinstance(t2, SigmaTranscript):
        t2 = ORTranscript(t2.e, (t2,))
    if t1.first != t2.first:
        raise MalformedTranscripts("first messages differ")
    if t1.e % params.q == t2.e % params.q:
        raise MalformedTranscripts("identical challenges")
    if not (verify(params, stmt, t1) and verify(params, stmt, t2)):
        raise MalformedTranscripts("a transcript does not verify")
    q = params.q
    for j, (b1, b2) in enumerate(zip(t1.branches, t2.branches)):
        if b1.e != b2.e:
            inv = pow((b1.e - b2.e) % q, -1, q)
            values = tuple((z1 - z2) * inv % q for z1, z2 in zip(b1.z, b2.z))
            return Witness(j, values)
    raise MalformedTranscripts("no branch with divergent challenge shares")


# Witness-extended emulation


@dataclass
class WeeResult:
    simulated_state: object
    decision: bool
    witness: Witness | None
    budget_exhausted: bool = False
    rewinds: int = 0
    transcript: ORTranscript | None = None


def wee_budget(p_hat, cap=64):
    """cap * ceil(1 / p_hat); zero when the prover never accepts."""
    if p_hat <= 0:
        return 0
    return cap * math.ceil(1 / p_hat)


def wee_run(params, prover, stmt, verifier_rng, budget) -> WeeResult:
    """Run the prover once for real, then rewind its pre-challenge snapshot.

    `prover` exposes first_message() and respond(e) (respond may return None
    to abort). The state and decision returned are the main thread's.
    """
    first = prover.first_message()
    snapshot = copy.deepcopy(prover)
    e = verifier_rng.scalar(params.q)
    response = prover.respond(e)
    accepted = response is not None and check_response(params, stmt, first, e, response)
    if not accepted:
        return WeeResult(prover, False, None)
    main = ORTranscript.assemble(first, e, response)
    rewind_rng = verifier_rng.split("wee-rewind")
    for k in range(budget):
        e2 = rewind_rng.scalar(params.q)
        if e2 == e:
            continue
        r2 = copy.deepcopy(snapshot).respond(e2)
        if r2 is not None and check_response(params, stmt, first, e2, r2):
            wit = special_sound_extract(params, stmt, main, ORTranscript.assemble(first, e2, r2))
            return WeeResult(prover, True, wit, rewinds=k + 1, transcript=main)
    return WeeResult(prover, True, None, budget_exhausted=True, rewinds=budget, transcript=main)
