import pytest
from hypothesis import given, settings, strategies as st

from nmcom.algebra import Rng
from nmcom.protocols import ASYNC, Protocol, compute_constants
from nmcom.schedules import (
    LEFT, RIGHT, MalformedTrace, Schedule, classify_schedule, good_index, random_merge, sequential, synchronous,
    validate_schedule,
)

LAB = compute_constants(lab=True)
SCRIPT = Protocol(ASYNC, 4, LAB).script()


def brute_force_classes(actions, n6, n8):
    """Independent evaluator: walk the trace once, tracking what each session has sent so far."""
    sent = {LEFT: [], RIGHT: []}
    bad = set()
    for session, label in actions:
        mine = sent[session]
        if session == RIGHT and label == "4" and "2" not in sent[LEFT]:
            bad.add("Bad1")
        if session == LEFT and label == "4" and "2" not in sent[RIGHT]:
            bad.add("Bad2")
        if session == RIGHT and label == "w1a.1.a" and "4" not in sent[LEFT]:
            bad.add("Bad3")
        if session == RIGHT and label == "w1b.1.a" and f"w1a.{n6}.z" not in sent[LEFT]:
            bad.add("Bad4")
        if session == RIGHT and label == "w2.a" and f"w1b.{n8}.z" not in sent[LEFT]:
            bad.add("Bad5")
        mine.append(label)
    return bad or {"Good"}


def test_synchronous_is_good():
    assert classify_schedule(synchronous(SCRIPT).actions, LAB) == {"Good"}


def test_bad1_crafted():
    right_first = sequential(SCRIPT, RIGHT)
    assert "Bad1" in classify_schedule(right_first.actions, LAB)


def test_bad4_and_bad5_crafted():
    # Right session paused after its WIPoK-1-A; the left runs to the end; then the
    # right proceeds, except that right w1b and w2 are moved before the left's final proofs.
    sync = list(synchronous(SCRIPT).actions)
    left_w1a_last = sync.index((LEFT, "w1a.2.z"))
    right_rest = [a for a in sync[left_w1a_last:] if a[0] == RIGHT]
    left_rest = [a for a in sync[left_w1a_last:] if a[0] == LEFT]
    actions = sync[:left_w1a_last] + right_rest + left_rest
    assert classify_schedule(actions, LAB) == {"Bad4", "Bad5"}
    assert brute_force_classes(actions, 2, 2) == {"Bad4", "Bad5"}


def test_malformed_label():
    with pytest.raises(MalformedTrace):
        classify_schedule([(LEFT, "nonsense")], LAB)
    with pytest.raises(MalformedTrace):
        classify_schedule([("middle", "1")], LAB)


def test_validate_schedule_order():
    s = synchronous(SCRIPT)
    validate_schedule(s, SCRIPT)
    swapped = (s.actions[1], s.actions[0]) + s.actions[2:]
    validate_schedule(Schedule(swapped), SCRIPT)
    broken = (s.actions[2],) + s.actions[:2] + s.actions[3:]
    with pytest.raises(MalformedTrace):
        validate_schedule(Schedule(broken), SCRIPT)


@settings(max_examples=300)
@given(st.integers(0, 2**40))
def test_classifier_matches_brute_force(seed):
    actions = random_merge(SCRIPT, Rng(seed)).actions
    assert classify_schedule(actions, LAB) == brute_force_classes(actions, 2, 2)


def window_labels():
    return ["1", "2", "3a", "trap.a", "trap.e", "trap.z", "4"]


def test_good_index_pigeonhole():
    actions = []
    window = window_labels()
    for k in range(1, 9):
        actions.append((RIGHT, f"ext1.{k}.c"))
        if k <= 7:
            actions.append((LEFT, window[k - 1]))
        actions += [(RIGHT, f"ext1.{k}.e"), (RIGHT, f"ext1.{k}.z")]
    assert good_index(actions, (RIGHT, "ext1"), (LEFT, {1, 2, 3, 4})) == 8


def test_good_index_empty_window():
    actions = [(RIGHT, f"ext1.{k}.{p}") for k in (1, 2) for p in "cez"]
    assert good_index(actions, (RIGHT, "ext1"), (LEFT, {1, 2, 3, 4})) == 1


def test_good_index_none_when_repetitions_too_few():
    actions = [(RIGHT, "ext1.1.c"), (LEFT, "1"), (RIGHT, "ext1.1.e"), (LEFT, "2"), (RIGHT, "ext1.1.z"),
               (RIGHT, "ext1.2.c"), (LEFT, "3a"), (RIGHT, "ext1.2.e"), (RIGHT, "ext1.2.z")]
    assert good_index(actions, (RIGHT, "ext1"), (LEFT, {1, 2, 3})) is None


def slot_is_clean(actions, family, window, idx):
    fam_s, fam_p = family
    win_s, win_steps = window
    pos = [i for i, (s, l) in enumerate(actions) if s == fam_s and l.startswith(f"{fam_p}.{idx}.")]
    return not any(
        s == win_s and any(l == w or l.startswith(w + ".") for w in win_steps)
        for s, l in actions[min(pos) + 1:max(pos)]
    )


@settings(max_examples=100)
@given(st.integers(0, 2**40))
def test_good_index_under_faithful_rule(seed):
    # n5=8 ExtCom repetitions against the 7 rounds of left steps 1-4
    consts = compute_constants(3, 3)
    script = Protocol(ASYNC, 4, consts).script()
    rng = Rng(seed)
    right = [r.label for r in script if r.step <= 5][:7 + 3 * consts.n5]
    left = [r.label for r in script if r.step <= 4]
    slots = [RIGHT] * len(right) + [LEFT] * len(left)
    rng.shuffle(slots)
    it = {RIGHT: iter(right), LEFT: iter(left)}
    actions = [(s, next(it[s])) for s in slots]
    family, window = (RIGHT, "ext1"), (LEFT, {1, 2, 3, 4})
    idx = good_index(actions, family, window)
    assert idx is not None
    assert slot_is_clean(actions, family, (LEFT, window_labels() + ["trap"]), idx)
