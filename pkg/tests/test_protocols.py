import pytest
from hypothesis import given, settings, strategies as st

from nmcom import sigma
from nmcom.algebra import Rng, group_profile
from nmcom.commitments import val_oracle
from nmcom.protocols import (
    ACK, ASYNC, ONE_SIDED, SYNC, MissingContext, Protocol, ProtocolMessage, SessionContext, Tag, advance,
    build_language, compute_constants, constants_inequalities, decommit_verify, default_constants, make_parties,
    run_honest_session, wipok2_branch_kind,
)

LAB = compute_constants(lab=True)


def p3_lab(n=4):
    return Protocol(ASYNC, n, LAB)


def test_faithful_constants():
    c = compute_constants(3, 3)
    assert c.as_tuple() == (8, 32, 128, 512, 2048) and c.faithful
    checks, totals = constants_inequalities(c)
    assert all(checks.values())
    assert totals == {"n5": 7, "n6": 31, "n7": 127, "n8": 511, "n9": 2047}


def test_constants_one_round_blocks():
    # recursion oracle: steps 1-4 total 5 rounds when every sub-protocol has one round
    assert compute_constants(1, 1).as_tuple() == (6, 12, 24, 48, 96)


def test_lab_constants():
    c = compute_constants(3, 3, lab=True)
    assert c.as_tuple() == (2, 2, 2, 2, 2) and not c.faithful


@pytest.mark.parametrize("value,lab", [("1", True), ("lab", True), ("", False), ("0", False)])
def test_lab_env(monkeypatch, value, lab):
    monkeypatch.setenv("NMCOM_LAB_PROFILE", value)
    assert default_constants().faithful is not lab


@given(st.integers(1, 6), st.integers(1, 6))
def test_constants_inequalities_hold(w, e):
    checks, _ = constants_inequalities(compute_constants(w, e), w, e)
    assert all(checks.values())


def test_faithful_script_length_matches_closed_form():
    c = compute_constants(3, 3)
    script = Protocol(ASYNC, 4, c).script()
    assert len(script) == 7 + 3 * sum(c.as_tuple()) + 3


def test_tag_bounds():
    with pytest.raises(ValueError):
        Tag(0, 4)
    with pytest.raises(ValueError):
        Tag(5, 4)
    assert Tag(3, 4).slot_b == 1
    with pytest.raises(ValueError):
        Protocol(SYNC, 4).tag(4)


def test_protocol1_honest_test23(g23):
    res = run_honest_session(g23, Protocol(ONE_SIDED, 4), 3, 5, Rng(1))
    assert res.decision and res.decommit_decision
    assert val_oracle(g23, res.transcript) == 5
    assert [e.label for e in res.trace] == ["1", "2", "3", "ack", "w1.a", "w1.e", "w1.z", "w2.a", "w2.e", "w2.z"]


def test_protocol1_q20(gq20):
    res = run_honest_session(gq20, Protocol(ONE_SIDED, 4), 2, 7, Rng(2))
    assert res.decision and val_oracle(gq20, res.transcript) == 7


def test_ack_separates_step3_from_wipok1(g23):
    for kind in (ONE_SIDED, SYNC):
        labels = [e.label for e in run_honest_session(g23, Protocol(kind, 4), 1, 5, Rng(3)).trace]
        i = labels.index("ack")
        assert labels[i - 1] == "3" and labels[i + 1].endswith(".a")


def test_protocol2_slots(g23):
    res = run_honest_session(g23, Protocol(SYNC, 4), 3, 5, Rng(4))
    assert res.decision and res.decommit_decision
    ctx = res.committer.ctx
    assert len(ctx.puzzles_a.Y) == 3 and len(ctx.puzzles_b.Y) == 1
    stmt = res.committer._verifier_statement("w1a")
    assert isinstance(stmt, sigma.ConsistentPuzzle) and len(sigma.flatten(stmt)) == 3


def test_protocol3_lab_structure(g23):
    res = run_honest_session(g23, p3_lab(), 1, 5, Rng(5))
    assert res.decision and res.decommit_decision
    labels = [e.label for e in res.trace]
    ext = {l.rsplit(".", 1)[0] for l in labels if l.startswith("ext")}
    w1 = {l.rsplit(".", 1)[0] for l in labels if l.startswith("w1")}
    assert sorted(ext) == ["ext1.1", "ext1.2", "ext2.1", "ext2.2", "ext3.1", "ext3.2"]
    assert sorted(w1) == ["w1a.1", "w1a.2", "w1b.1", "w1b.2"]
    assert len(build_language(res.committer.protocol, res.committer.ctx).branches()) == 1 + 1 + 3 + 2


def test_protocol1_language_branches(g23):
    res = run_honest_session(g23, Protocol(ONE_SIDED, 4), 3, 5, Rng(1))
    stmt = build_language(res.committer.protocol, res.committer.ctx)
    kinds = [type(b).__name__ for b in stmt.branches()]
    assert kinds == ["OpeningOf", "DLog", "DLog", "DLog"]


def test_missing_context():
    with pytest.raises(MissingContext):
        build_language(Protocol(ONE_SIDED), SessionContext())


def test_branch_kinds():
    p = Protocol(ASYNC, 4, LAB)
    tag = p.tag(1)
    assert [wipok2_branch_kind(p, tag, b)[0] for b in range(7)] == [
        "opening", "puzzle_a", "puzzle_b", "puzzle_b", "puzzle_b", "trap", "trap"]


def test_replayed_message_rejected(g23):
    c, r = make_parties(g23, Protocol(ONE_SIDED, 4), Tag(2, 4), 5, Rng(6))
    r, m1, _ = advance(r)
    c, m2, _ = advance(c, m1)
    r, m3, _ = advance(r, m2)
    c, ack, _ = advance(c, m3)
    r, w1a, _ = advance(r, ack)
    # committer replays its step-2 message where WIPoK-1 traffic is expected
    r, out, decision = advance(r, ProtocolMessage("2", m2.payload))
    assert out is None and decision is False


def test_advance_is_pure(g23):
    c, _ = make_parties(g23, Protocol(ONE_SIDED, 4), Tag(2, 4), 5, Rng(6))
    before = c.pos
    advance(c, None)
    assert c.pos == before


def test_decommit_verify(g23):
    res = run_honest_session(g23, Protocol(ONE_SIDED, 4), 2, 5, Rng(7))
    assert decommit_verify(g23, res.transcript, 5, res.opening.r)
    assert not decommit_verify(g23, res.transcript, 6, res.opening.r)
    assert not decommit_verify(g23, res.transcript, 5, res.opening.r, commit_decision=False)


def test_trace_json_shape(g23):
    res = run_honest_session(g23, Protocol(ONE_SIDED, 4), 2, 5, Rng(7))
    j = res.trace[0].to_json()
    assert set(j) == {"session", "round", "from", "step", "payload"}
    assert j["session"] == "standalone" and j["from"] == "R" and j["step"] == "1"
    assert res.trace[3].to_json()["payload"] == ACK


@settings(max_examples=25)
@given(st.integers(0, 2**32), st.sampled_from([ONE_SIDED, SYNC, ASYNC]), st.integers(1, 3), st.integers(0, 10))
def test_completeness_property(seed, kind, t, m):
    g23 = group_profile("test23")
    proto = p3_lab() if kind == ASYNC else Protocol(kind, 4)
    res = run_honest_session(g23, proto, t, m, Rng(seed))
    assert res.decision and res.decommit_decision and val_oracle(g23, res.transcript) == m
