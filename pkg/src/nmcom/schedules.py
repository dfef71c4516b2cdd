"""Two-session interleavings: construction, the Bad 1-5 taxonomy, and good-index selection."""
import json
from dataclasses import dataclass
from pathlib import Path

from .algebra import immutable

LEFT, RIGHT = "left", "right"
SESSIONS = (LEFT, RIGHT)

# Step numbers of the asynchronous protocol by round phase.
ASYNC_STEP = {
    "basis": 1, "commit": 2, "trapgen": 3, "trap": 3, "puzzle": 4,
    "ext1": 5, "w1a": 6, "ext2": 7, "w1b": 8, "ext3": 9, "w2": 10,
}
BAD_LABELS = ("Bad1", "Bad2", "Bad3", "Bad4", "Bad5")


class MalformedTrace(Exception):
    pass


@immutable
@dataclass(frozen=True)
class Schedule:
    actions: tuple  # ((session, label), ...)
    name: str = "custom"

    def to_json(self):
        return [{"session": s, "step": lab} for s, lab in self.actions]

    def __len__(self):
        return len(self.actions)


def validate_schedule(schedule: Schedule, script):
    labels = [r.label for r in script]
    for session in SESSIONS:
        seq = [lab for s, lab in schedule.actions if s == session]
        if seq != labels:
            raise MalformedTrace(f"{session} session does not follow the protocol order")


def synchronous(script) -> Schedule:
    """Round k of both sessions back to back, relay order.

    Receiver-sent rounds go right then left (the honest right receiver speaks
    first and the adversary forwards); committer-sent rounds go left then right.
    """
    actions = []
    for r in script:
        order = (RIGHT, LEFT) if r.sender == "R" else (LEFT, RIGHT)
        actions.extend((s, r.label) for s in order)
    return Schedule(tuple(actions), "sync")


def sequential(script, first=LEFT) -> Schedule:
    second = RIGHT if first == LEFT else LEFT
    actions = [(first, r.label) for r in script] + [(second, r.label) for r in script]
    return Schedule(tuple(actions), f"{first}-first")


def random_merge(script, rng) -> Schedule:
    """Uniformly random interleaving of the two sessions."""
    n = len(script)
    slots = [LEFT] * n + [RIGHT] * n
    rng.shuffle(slots)
    pos = {LEFT: 0, RIGHT: 0}
    actions = []
    for s in slots:
        actions.append((s, script[pos[s]].label))
        pos[s] += 1
    return Schedule(tuple(actions), "random")


def load_schedule(path) -> Schedule:
    data = json.loads(Path(path).read_text())
    return Schedule(tuple((d["session"], d["step"]) for d in data), f"file:{path}")


def is_synchronous(actions, script) -> bool:
    return tuple(actions) == synchronous(script).actions


def parse_label(label):
    """(phase, instance, part) of a round label of the asynchronous protocol."""
    head = {"1": "basis", "2": "commit", "3a": "trapgen", "4": "puzzle"}
    if label in head:
        return head[label], 0, ""
    parts = label.split(".")
    if parts[0] == "trap" or parts[0] == "w2":
        if len(parts) != 2:
            raise MalformedTrace(label)
        return parts[0], 0, parts[1]
    if parts[0] in ("ext1", "ext2", "ext3", "w1a", "w1b") and len(parts) == 3:
        return parts[0], int(parts[1]), parts[2]
    raise MalformedTrace(f"not a round of the asynchronous protocol: {label}")


def _positions(actions):
    """Per (session, phase): list of (position, instance, part)."""
    out = {}
    for i, (session, label) in enumerate(actions):
        if session not in SESSIONS:
            raise MalformedTrace(f"unknown session {session!r}")
        phase, inst, part = parse_label(label)
        out.setdefault((session, phase), []).append((i, inst, part))
    return out


INF = float("inf")


def _first(pos, session, phases):
    idx = [i for ph in phases for i, _, _ in pos.get((session, ph), [])]
    return min(idx) if idx else INF


def _finish(pos, session, phase, final_instance, final_part):
    for i, inst, part in pos.get((session, phase), []):
        if inst == final_instance and part == final_part:
            return i
    return INF


def _final_instance(pos, phase, constants):
    if constants is not None:
        return {"w1a": constants.n6, "w1b": constants.n8}[phase]
    insts = [inst for (s, ph), lst in pos.items() if ph == phase for _, inst, _ in lst]
    return max(insts) if insts else 0


def classify_schedule(actions, constants=None):
    """Set of Bad labels holding for an asynchronous-protocol trace; {'Good'} when none hold.

    "Starts" is the first message of the first repetition; "finishes" is the
    last message of the final repetition (never, if it was not sent).
    """
    actions = [(a["session"], a["step"]) if isinstance(a, dict) else tuple(a) for a in actions]
    pos = _positions(actions)
    fin_a = _final_instance(pos, "w1a", constants)
    fin_b = _final_instance(pos, "w1b", constants)
    bad = set()
    if _first(pos, RIGHT, ["puzzle"]) < _first(pos, LEFT, ["commit"]):
        bad.add("Bad1")
    if _first(pos, LEFT, ["puzzle"]) < _first(pos, RIGHT, ["commit"]):
        bad.add("Bad2")
    if _first(pos, RIGHT, ["w1a"]) < _first(pos, LEFT, ["puzzle"]):
        bad.add("Bad3")
    if _first(pos, RIGHT, ["w1b"]) < _finish(pos, LEFT, "w1a", fin_a, "z"):
        bad.add("Bad4")
    if _first(pos, RIGHT, ["w2"]) < _finish(pos, LEFT, "w1b", fin_b, "z"):
        bad.add("Bad5")
    return bad or {"Good"}


def good_index(actions, family, window):
    """Smallest repetition of `family` with no `window` message strictly inside it.

    family: (session, phase) of a repeated slot; window: (session, set of step
    numbers or phases). Returns a 1-based index, or None when every repetition
    is interleaved.
    """
    actions = [(a["session"], a["step"]) if isinstance(a, dict) else tuple(a) for a in actions]
    fam_session, fam_phase = family
    win_session, win_members = window
    spans = {}
    window_pos = []
    for i, (session, label) in enumerate(actions):
        phase, inst, _ = parse_label(label)
        if session == fam_session and phase == fam_phase:
            lo, hi = spans.get(inst, (i, i))
            spans[inst] = (min(lo, i), max(hi, i))
        if session == win_session and (phase in win_members or ASYNC_STEP[phase] in win_members):
            window_pos.append(i)
    for inst in sorted(spans):
        lo, hi = spans[inst]
        if not any(lo < w < hi for w in window_pos):
            return inst
    return None


def window_rounds(script, steps):
    return sum(1 for r in script if r.step in steps)
