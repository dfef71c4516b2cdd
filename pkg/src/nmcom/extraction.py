"""Executable extraction machines of the one-sided protocol's security argument.

All machines resume a man-in-the-middle game from a prefix (steps 1-2 of
both sessions done) and differ only in four switches:

  left WIPoK-1   run honestly, or through witness-extended emulation (WEE)
  left WIPoK-2   committer witness: original (m, r), WEE-extracted (j, x_j),
                 or a brute-forced guess (s, x_s)
  right WIPoK-1  receiver uses (i, x~_i)
  right WIPoK-2  verified honestly, or through WEE with classification

Machines that never read the left committer's secrets build a simulated
committer from the public prefix view instead.
"""
import copy
import math
from dataclasses import dataclass, field
from fractions import Fraction

from scipy.stats import binomtest

from . import sigma
from .algebra import GroupTooLarge, dlog_bruteforce
from .commitments import val_oracle
from .mim import BOT_TAG, LEFT, RIGHT, Prefix, SimInput, prefix_gen
from .protocols import ONE_SIDED, Committer, wipok2_branch_kind

MESSAGE, BOT_Y, BOT_INVALID = "message", "bot_y", "bot_invalid"


@dataclass(frozen=True)
class ExtractionParams:
    epsilon: float
    t: int
    t_tilde: int
    lam: int
    rewind_cap: int | None = None
    wee_budget: int = 256

    @property
    def epsilon_prime(self):
        return self._eps_prime_exact()

    def _eps_prime_exact(self):
        return Fraction(str(self.epsilon)) / (10 * self.t * self.t)

    @property
    def loop_count(self):
        return math.ceil(Fraction(self.t_tilde) / self._eps_prime_exact() * self.lam)

    @property
    def capped(self):
        return self.rewind_cap is not None and self.rewind_cap < self.loop_count

    @property
    def loops(self):
        return min(self.loop_count, self.rewind_cap) if self.rewind_cap is not None else self.loop_count

    def k_bound(self):
        """Lower bound on Pr[K outputs the committed message] when acceptance is at least epsilon."""
        return self._eps_prime_exact() / self.t_tilde


@dataclass(frozen=True)
class ExtractionResult:
    kind: str
    value: int | None = None
    budget_exhausted: bool = False
    branch: int | None = None

    @property
    def is_message(self):
        return self.kind == MESSAGE


@dataclass
class SeOutcome:
    out: bytes | None
    val: object
    b: bool
    k_calls: int = 0
    capped: bool = False
    budget_exhausted: bool = False


@dataclass(frozen=True)
class MachineConfig:
    left_w1: str = "wee"
    left_w2: str = "extracted"
    right_w2: str = "honest"


MACHINES = {
    "G": MachineConfig("wee", "extracted", "honest"),
    "G'": MachineConfig("wee", "original", "honest"),
    "G''": MachineConfig("honest", "original", "honest"),
    "K": MachineConfig("wee", "extracted", "wee"),
    "Kp": MachineConfig("wee", "guess", "wee"),
    "Kpp": MachineConfig("honest", "guess", "wee"),
    "Kstar1": MachineConfig("wee", "guess", "honest"),
    "Kstarstar1": MachineConfig("honest", "guess", "honest"),
}


@dataclass
class MachineRun:
    out: bytes | None
    b: bool
    val: ExtractionResult | None = None
    left_witness: sigma.Witness | None = None
    guess: tuple | None = None
    left_accepted: bool | None = None
    aborted: bool = False
    budget_exhausted: bool = False
    tau_tilde: object = None
    meta: dict = field(default_factory=dict)


def simulated_committer(sim: SimInput, rng) -> Committer:
    """Left committer rebuilt from public messages only; it holds no message or randomness."""
    game = sim.game
    pub = sim.left_public
    if game.protocol.kind != ONE_SIDED:
        raise ValueError("extraction machines are defined for the one-sided protocol")
    c = Committer(game.params, game.protocol, pub["tag"], None, rng)
    if pub["halted"]:
        c.pos = pub["rounds_done"]
        c._halt()
        return c
    if pub["rounds_done"] != 2:
        raise ValueError("prefix must end right after the left commitment")
    c.ctx.basis = pub["messages"]["1"].payload.public()
    c.ctx.com = pub["messages"]["2"].payload
    c.pos = 2
    return c


def _install_left(game, source, config, rng):
    if config.left_w2 == "original":
        if not isinstance(source, Prefix):
            raise TypeError("machines using the original left witness need the full prefix")
        game.left = copy.deepcopy(source.st_C)
        game.left.rng = rng.split("left")
    else:
        sim = source.public_view() if isinstance(source, Prefix) else source
        game.left = simulated_committer(sim, rng.split("left"))


def _fresh_game(source, config, i, rng):
    game = copy.deepcopy(source.game)
    _install_left(game, source, config, rng)
    game.right.rng = rng.split("right")
    game.right.wipok1_index = i
    return game


def _run_until_slot(game, slot):
    game.run(stop=lambda s: s == slot)
    return not game.finished


def _rewind_sigma(game_snapshot, session, family, first, e, budget, rng, stmt):
    """Rewind a game to the challenge slot of a sigma instance until a second accepting transcript."""
    main = sigma.ORTranscript.assemble(first, e, game_snapshot["main_response"])
    snap = game_snapshot["game"]
    for k in range(budget):
        g2 = copy.deepcopy(snap)
        party = g2.left if session == LEFT else g2.right
        party.rng = rng.split("rewind", k)
        g2.run_through(session, f"{family}.z")
        rec = party.proofs.get(family, {})
        if rec.get("ok") and rec["e"] != e and rec["first"] == first:
            t2 = sigma.ORTranscript.assemble(first, rec["e"], rec["response"])
            try:
                return sigma.special_sound_extract(g2.params, stmt, main, t2), k + 1
            except sigma.MalformedTranscripts:
                continue
    return None, budget


def _wee_on_game(game, session, family, budget, rng):
    """Main thread to the end of the proof; on accept, rewind for a witness.

    Returns (accepted, witness or None, budget_exhausted); `game` advances in place.
    """
    snap = copy.deepcopy(game)
    party = game.left if session == LEFT else game.right
    game.run_through(session, f"{family}.z")
    rec = party.proofs.get(family, {})
    if not rec.get("ok"):
        return False, None, False
    stmt = party._verifier_statement(family)
    witness, _ = _rewind_sigma(
        {"game": snap, "main_response": rec["response"]}, session, family, rec["first"], rec["e"], budget, rng, stmt
    )
    if witness is None:
        return True, None, True
    return True, witness, False


def brute_force_guess(game, rng, forced=None):
    """Recover every left puzzle preimage by exhaustive search and pick one uniformly."""
    params = game.params
    if not params.brute_forceable:
        raise GroupTooLarge("hybrid-lab machines need a brute-forceable group")
    Y = game.left.ctx.puzzles.Y
    good = []
    for s, y in enumerate(Y, start=1):
        x = dlog_bruteforce(params, y)
        if x is not None:
            good.append((s, x))
    if forced is not None:
        return forced
    return good[rng.below(len(good))] if good else None


def run_machine(name, i, source, rng, budget=256, forced_guess=None) -> MachineRun:
    config = MACHINES[name]
    game = _fresh_game(source, config, i, rng)
    run = MachineRun(None, False, meta={"machine": name, "i": i})

    # Advance to the left WIPoK-1 challenge (sent by the left committer).
    if not _run_until_slot(game, (LEFT, "w1.e")) or game.left.halted:
        game.run()
        return _finish(game, run, config)

    if config.left_w2 == "guess":
        run.guess = brute_force_guess(game, rng.split("guess"), forced_guess)

    if config.left_w1 == "wee":
        accepted, witness, exhausted = _wee_on_game(game, LEFT, "w1", budget, rng.split("left-wee"))
        run.left_accepted = accepted
        if accepted:
            valid = witness is not None and sigma.witness_ok(
                game.params, game.left._verifier_statement("w1"), witness
            )
            if not valid:
                run.aborted = True
                run.budget_exhausted = exhausted
                run.val = ExtractionResult(BOT_INVALID, budget_exhausted=exhausted) if config.right_w2 == "wee" else None
                return run
            run.left_witness = witness
    else:
        game.run_through(LEFT, "w1.z")
        run.left_accepted = bool(game.left.proofs.get("w1", {}).get("ok"))

    if run.left_accepted and not game.left.halted:
        if config.left_w2 == "extracted":
            w = run.left_witness
            game.left.wipok2_witness = sigma.Witness(w.branch + 1, w.values)
        elif config.left_w2 == "guess":
            if run.guess is None:
                game.left.halted = True
            else:
                s, x = run.guess
                game.left.wipok2_witness = sigma.Witness(s, (x,))

    if config.right_w2 == "wee":
        if not _run_until_slot(game, (RIGHT, "w2.e")) or game.right.halted:
            game.run()
            run.val = ExtractionResult(BOT_INVALID)
            return _finish(game, run, config)
        accepted, witness, exhausted = _wee_on_game(game, RIGHT, "w2", budget, rng.split("right-wee"))
        run.val = classify(game, witness, accepted, exhausted)
        run.budget_exhausted = run.budget_exhausted or exhausted
    game.run()
    return _finish(game, run, config)


def classify(game, witness, accepted, exhausted=False) -> ExtractionResult:
    if not accepted or witness is None:
        return ExtractionResult(BOT_INVALID, budget_exhausted=exhausted)
    stmt = game.right._verifier_statement("w2")
    if not sigma.witness_ok(game.params, stmt, witness):
        return ExtractionResult(BOT_INVALID, branch=witness.branch)
    kind, _ = wipok2_branch_kind(game.protocol, game.right.tag, witness.branch)
    if kind == "opening":
        return ExtractionResult(MESSAGE, witness.values[0], branch=0)
    if kind.startswith("puzzle"):
        return ExtractionResult(BOT_Y, branch=witness.branch)
    return ExtractionResult(BOT_INVALID, branch=witness.branch)


def _finish(game, run, config):
    if config.right_w2 == "wee" and run.val is None:
        run.val = ExtractionResult(BOT_INVALID)
    o = game.outcome(check_identity=False)
    run.out = o.out
    run.b = o.b
    run.tau_tilde = o.tau_tilde
    return run


def run_G(i, source, rng, budget=256):
    r = run_machine("G", i, source, rng, budget)
    return (None, False) if r.aborted else (r.out, r.b)


def run_K_i(i, source, rng, params: ExtractionParams | None = None) -> ExtractionResult:
    budget = params.wee_budget if params else 256
    r = run_machine("K", i, source, rng, budget)
    return r.val or ExtractionResult(BOT_INVALID)


def run_K(source, rng, params: ExtractionParams) -> ExtractionResult:
    i = 1 + rng.split("index").below(params.t_tilde)
    return run_K_i(i, source, rng.split("K", i), params)


def run_SE(source, params: ExtractionParams, rng) -> SeOutcome:
    out, b = run_G(1, source, rng.split("G1"), params.wee_budget)
    if not b:
        return SeOutcome(out, None, False, capped=params.capped)
    exhausted = False
    for k in range(params.loops):
        res = run_K(source, rng.split("rewind", k), params)
        exhausted = exhausted or res.budget_exhausted
        if res.is_message:
            return SeOutcome(out, res.value, True, k + 1, params.capped, exhausted)
    return SeOutcome(out, None, True, params.loops, params.capped, exhausted)


def run_hybrid_G(params, protocol, adversary, m, tags, ext_params: ExtractionParams, rng, schedule="sync"):
    """Real prefix, then the simulation-extractor on the public view only."""
    prefix = prefix_gen(params, protocol, adversary, m, tags, schedule, rng.split("prefix"))
    se = run_SE(prefix.public_view(), ext_params, rng.split("SE"))
    if tags[0] == tags[1]:
        return se.out, BOT_TAG
    return se.out, (se.val if se.b else None)


def run_hybrid_lab(machine, i, source, rng, budget=256, forced_guess=None):
    """K'_i and K''_i return an ExtractionResult; K*_1 and K**_1 return the right decision."""
    names = {"Kp_i": "Kp", "Kpp_i": "Kpp", "Kstar1": "Kstar1", "Kstarstar1": "Kstarstar1"}
    name = names.get(machine, machine)
    if name in ("Kstar1", "Kstarstar1"):
        i = 1
    r = run_machine(name, i, source, rng, budget, forced_guess)
    if name in ("Kp", "Kpp"):
        return r.val or ExtractionResult(BOT_INVALID), r
    return (False if r.aborted else r.b), r


def wilson(successes, trials, confidence=0.95):
    if trials == 0:
        return (0.0, 1.0)
    ci = binomtest(successes, trials).proportion_ci(confidence, method="wilson")
    return (ci.low, ci.high)


@dataclass
class ExtractionReport:
    trials: int
    accept_rate: float
    accept_ci: tuple
    extraction_rate: float | None
    histogram: dict
    soundness_violations: int = 0
    budget_exhausted: int = 0


def estimate_p(source, machine, trials, rng, i=1, params: ExtractionParams | None = None) -> ExtractionReport:
    """Monte-Carlo acceptance of a machine from one prefix, with classification counts for K-type machines."""
    accepts = 0
    hist = {MESSAGE: 0, BOT_Y: 0, BOT_INVALID: 0}
    violations = 0
    exhausted = 0
    budget = params.wee_budget if params else 256
    extracting = MACHINES[machine].right_w2 == "wee"
    for k in range(trials):
        r = run_machine(machine, i, source, rng.split("trial", k), budget)
        accepts += int(r.b and not r.aborted)
        exhausted += int(r.budget_exhausted)
        if extracting:
            val = r.val or ExtractionResult(BOT_INVALID)
            hist[val.kind] += 1
            if val.is_message and val.value != true_value(source):
                violations += 1
    rate = accepts / trials
    return ExtractionReport(
        trials, rate, wilson(accepts, trials), hist[MESSAGE] / trials if extracting else None,
        hist if extracting else {}, violations, exhausted,
    )


def true_value(source):
    """Value of the right commitment, decrypted with the right receiver's trapdoor."""
    tau_tilde = source.tau_tilde
    return None if tau_tilde is None else val_oracle(source.game.params, tau_tilde)
