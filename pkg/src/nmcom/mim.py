"""Man-in-the-middle game: honest left committer, honest right receiver, adversary in between."""
import copy
import hashlib
from dataclasses import dataclass, field

from . import schedules
from .algebra import immutable
from .commitments import val_oracle
from .protocols import Committer, ProtocolMessage, Receiver, TraceEntry
from .schedules import LEFT, RIGHT, Schedule

BOT_TAG = "bot_tag"


class ScheduleInfeasible(Exception):
    pass


class IdentityViolation(AssertionError):
    pass


@immutable
@dataclass(frozen=True)
class Turn:
    """Prompt asking the adversary for its message of `label` in a session."""

    label: str


def other_session(session):
    return RIGHT if session == LEFT else LEFT


# Adversaries


class Adversary:
    """Base adversary: sees every message delivered to it, answers Turn prompts.

    on_message returns a list of (session, ProtocolMessage) emissions; the game
    buffers them per session and consumes them when the schedule reaches the
    matching slot.
    """

    wants_leak = False

    def init(self, params, protocol, advice, left_tag, right_tag, rng):
        self.params = params
        self.protocol = protocol
        self.advice = advice
        self.left_tag = left_tag
        self.right_tag = right_tag
        self.rng = rng

    def on_message(self, session, msg):
        return []

    def finalize(self, log):
        return b""

    def snapshot(self):
        return copy.deepcopy(self)


class HonestIndependent(Adversary):
    """Honest receiver on the left, independent honest commitment to its own message on the right."""

    def __init__(self, m_tilde=9):
        self.m_tilde = m_tilde

    def init(self, params, protocol, advice, left_tag, right_tag, rng):
        super().init(params, protocol, advice, left_tag, right_tag, rng)
        self.left = Receiver(params, protocol, left_tag, rng.split("left-receiver"))
        self.right = Committer(params, protocol, right_tag, self.m_tilde % params.q, rng.split("right-committer"))

    def _party(self, session):
        return self.left if session == LEFT else self.right

    def on_message(self, session, msg):
        party = self._party(session)
        if isinstance(msg, Turn):
            rnd = party.next_round()
            if rnd is None or rnd.label != msg.label or party.halted:
                return []
            out = party.send()
            return [] if out is None else [(session, out)]
        party.receive(msg)
        return []

    def finalize(self, log):
        left = {True: "accept", False: "reject", None: "pending"}[self.left.decision]
        return f"left={left};right_m={self.m_tilde % self.params.q}".encode()


class PlantedTrapdoor(HonestIndependent):
    """Uses a leaked right-session puzzle preimage for the puzzle branch of its right WIPoK-2."""

    wants_leak = True

    def __init__(self, m_tilde=9, leak_index=1):
        super().__init__(m_tilde)
        self.leak_index = leak_index
        self.leaked = None

    def receive_leak(self, index, x):
        from .sigma import Witness

        self.leaked = (index, x)
        self.right.wipok2_witness = Witness(index, (x,))


class Copier(Adversary):
    """Relays every message to the other session under the same label."""

    def init(self, params, protocol, advice, left_tag, right_tag, rng):
        super().init(params, protocol, advice, left_tag, right_tag, rng)
        self.seen = {LEFT: {}, RIGHT: {}}

    def on_message(self, session, msg):
        if isinstance(msg, Turn):
            src = self.seen[other_session(session)].get(msg.label)
            return [] if src is None else [(session, src)]
        self.seen[session][msg.label] = msg
        return []

    def finalize(self, log):
        return b"copier"


class AbortAdversary(Adversary):
    def finalize(self, log):
        return b"abort"


class ScheduleAdversary(HonestIndependent):
    """Honest-independent behaviour on a schedule it picks uniformly from k fixed classes."""

    POOL = ("sync", "left-first", "right-first", "random")

    def __init__(self, k=3, m_tilde=9):
        super().__init__(m_tilde)
        if not 1 <= k <= len(self.POOL):
            raise ValueError(f"k must lie in [1, {len(self.POOL)}]")
        self.k = k

    def propose_schedule(self, script, rng):
        return make_schedule(self.POOL[rng.below(self.k)], script, rng)


class ScheduleFilter(Adversary):
    """Runs the inner adversary; outputs None unless the realized schedule is in the target class."""

    def __init__(self, inner, target_class):
        self.inner = inner
        self.target_class = target_class
        self.wants_leak = inner.wants_leak

    def init(self, *args):
        super().init(*args)
        self.inner.init(*args)

    def on_message(self, session, msg):
        return self.inner.on_message(session, msg)

    def receive_leak(self, index, x):
        self.inner.receive_leak(index, x)

    def propose_schedule(self, script, rng):
        return self.inner.propose_schedule(script, rng)

    def finalize(self, log):
        out = self.inner.finalize(log)
        actions = [(e.session, e.label) for e in log if e.message is not None]
        return out if self.target_class in schedule_classes(actions, self.protocol) else None


def schedule_filter_wrapper(adversary, target_class):
    return ScheduleFilter(adversary, target_class)


def schedule_classes(actions, protocol):
    script = protocol.script()
    classes = set()
    if schedules.is_synchronous(actions, script):
        classes.add("Synchronous")
    if protocol.kind == "async":
        classes |= schedules.classify_schedule(actions, protocol.constants)
    return classes


def make_schedule(spec, script, rng=None):
    if isinstance(spec, Schedule):
        return spec
    if spec == "sync":
        return schedules.synchronous(script)
    if spec in ("left-first", "right-first"):
        return schedules.sequential(script, spec.split("-")[0])
    if spec == "random":
        return schedules.random_merge(script, rng)
    if isinstance(spec, str) and spec.startswith("file:"):
        return schedules.load_schedule(spec[5:])
    raise ValueError(f"unknown schedule {spec!r}")


ADVERSARIES = {
    "honest": HonestIndependent,
    "copier": Copier,
    "abort": AbortAdversary,
    "planted": PlantedTrapdoor,
}


def make_adversary(name, m_tilde=9):
    if name.startswith("schedule:"):
        return ScheduleAdversary(int(name.split(":", 1)[1]), m_tilde)
    if name not in ADVERSARIES:
        raise ValueError(f"unknown adversary {name!r}; choose from {sorted(ADVERSARIES)} or schedule:K")
    cls = ADVERSARIES[name]
    return cls(m_tilde) if cls in (HonestIndependent, PlantedTrapdoor) else cls()


# The game


@dataclass
class MimOutcome:
    out: bytes | None
    tau_tilde: object
    b: bool
    val_b: object
    trace: list = field(repr=False, default_factory=list)
    schedule: Schedule | None = None
    identity_checked: bool = False
    tau: object = None


class MimGame:
    def __init__(self, params, protocol, adversary, m, tags, schedule="sync", rng=None, advice=b""):
        t, t_tilde = tags
        self.params = params
        self.protocol = protocol
        self.tags = (t, t_tilde)
        self.left = Committer(params, protocol, protocol.tag(t), m, rng.split("left-committer"))
        self.right = Receiver(params, protocol, protocol.tag(t_tilde), rng.split("right-receiver"))
        self.adversary = adversary
        adversary.init(params, protocol, advice, protocol.tag(t), protocol.tag(t_tilde), rng.split("adversary"))
        script = protocol.script()
        if schedule == "adversary":
            schedule = adversary.propose_schedule(script, rng.split("schedule"))
        self.schedule = make_schedule(schedule, script, rng.split("schedule"))
        schedules.validate_schedule(self.schedule, script)
        self.cursor = 0
        self.trace = []
        self.buffers = {LEFT: [], RIGHT: []}
        self.leaked = False

    @property
    def index(self):
        return self.protocol.round_index()

    def honest(self, session):
        return self.left if session == LEFT else self.right

    @property
    def finished(self):
        return self.cursor >= len(self.schedule.actions)

    def next_slot(self):
        return None if self.finished else self.schedule.actions[self.cursor]

    def _deliver_to_adversary(self, session, msg):
        for s, out in self.adversary.on_message(session, msg) or []:
            self.buffers[s].append(out)

    def step(self):
        session, label = self.schedule.actions[self.cursor]
        self.cursor += 1
        rnd = self.protocol.script()[self.index[label]]
        party = self.honest(session)
        if rnd.sender == party.role:
            msg = party.send() if not party.halted and party.next_round() == rnd else None
            self.trace.append(TraceEntry(session, self.index[label] + 1, rnd.sender, label, msg))
            if msg is not None:
                self._deliver_to_adversary(session, msg)
                if session == RIGHT and rnd.phase == "puzzle" and self.adversary.wants_leak and not self.leaked:
                    i = self.adversary.leak_index
                    self.adversary.receive_leak(i, self.right.preimage(i))
                    self.leaked = True
            return
        buf = self.buffers[session]
        if not buf:
            self._deliver_to_adversary(session, Turn(label))
        msg = None
        if buf:
            if not isinstance(buf[0], ProtocolMessage) or buf[0].label != label:
                raise ScheduleInfeasible(f"adversary emitted {getattr(buf[0], 'label', buf[0])!r} at slot {session}:{label}")
            msg = buf.pop(0)
        self.trace.append(TraceEntry(session, self.index[label] + 1, rnd.sender, label, msg))
        if not party.halted:
            party.receive(msg)

    def run(self, stop=None):
        """Advance until finished or until stop(next_slot) is true."""
        while not self.finished:
            if stop is not None and stop(self.next_slot()):
                return
            self.step()

    def run_through(self, session, label):
        """Advance until the slot (session, label) has executed."""
        while not self.finished:
            slot = self.next_slot()
            self.step()
            if slot == (session, label):
                return

    def outcome(self, check_identity=True):
        out = self.adversary.finalize(self.trace)
        tau_tilde = self.right.transcript()
        b = bool(self.right.decision) and self.right.done
        val_b = compute_val_b(self.params, self.tags, tau_tilde, b, instrumented=True)
        checked = False
        if check_identity and self.tags[0] != self.tags[1] and b and self.params.brute_forceable:
            recomputed = compute_val_b(self.params, self.tags, tau_tilde, b, instrumented=False)
            if recomputed != val_b:
                raise IdentityViolation(f"game value {val_b} differs from oracle value {recomputed}")
            checked = True
        tau = None
        if self.left.ctx.basis is not None and self.left.ctx.com is not None:
            from .commitments import NaorTranscript

            tau = NaorTranscript(self.left.ctx.basis, self.left.ctx.com)
        return MimOutcome(out, tau_tilde, b, val_b, self.trace, self.schedule, checked, tau)


def compute_val_b(params, tags, tau_tilde, b, instrumented=True):
    if tags[0] == tags[1]:
        return BOT_TAG
    if not b or tau_tilde is None:
        return None
    if instrumented:
        return val_oracle(params, tau_tilde)
    from .commitments import NaorTranscript

    return val_oracle(params, NaorTranscript(tau_tilde.basis.public(), tau_tilde.com))


def run_mim(params, protocol, adversary, m, tags, schedule="sync", rng=None, advice=b"") -> MimOutcome:
    game = MimGame(params, protocol, adversary, m, tags, schedule, rng, advice)
    game.run()
    return game.outcome()


# Prefix: state after steps 1-2 of both sessions


@dataclass
class SimInput:
    """Everything the simulation-extractor may read: no left committer state."""

    game: MimGame
    tau: object
    tau_tilde: object
    left_public: object


class Prefix:
    def __init__(self, game: MimGame):
        self.game = copy.deepcopy(game)

    @property
    def st_M(self):
        return self.game.adversary

    @property
    def st_C(self):
        return self.game.left

    @property
    def st_R(self):
        return self.game.right

    @property
    def tau(self):
        from .commitments import NaorTranscript

        ctx = self.game.left.ctx
        return None if ctx.com is None else NaorTranscript(ctx.basis, ctx.com)

    @property
    def tau_tilde(self):
        return self.game.right.transcript()

    def resume(self, check_identity=True) -> MimOutcome:
        game = copy.deepcopy(self.game)
        game.run()
        return game.outcome(check_identity)

    def public_view(self) -> SimInput:
        shell = copy.copy(self.game)
        shell.left = None
        shell = copy.deepcopy(shell)
        sent = {e.label: e.message for e in shell.trace if e.session == LEFT and e.message is not None}
        public = {
            "tag": self.game.protocol.tag(self.game.tags[0]),
            "rounds_done": sum(1 for e in shell.trace if e.session == LEFT),
            "halted": any(e.message is None for e in shell.trace if e.session == LEFT),
            "messages": sent,
        }
        return SimInput(shell, self.tau, self.tau_tilde, public)

    def digest(self):
        import pickle

        return hashlib.sha256(pickle.dumps(self.game)).hexdigest()


def _prefix_done(game):
    need = {(LEFT, "2"), (RIGHT, "2")}
    done = {(e.session, e.label) for e in game.trace}
    return need <= done


def prefix_gen(params, protocol, adversary, m, tags, schedule="sync", rng=None, advice=b"") -> Prefix:
    game = MimGame(params, protocol, adversary, m, tags, schedule, rng, advice)
    while not game.finished and not _prefix_done(game):
        game.step()
    return Prefix(game)
