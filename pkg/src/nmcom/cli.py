"""Seeded experiment runner. Every subcommand prints one JSON report and exits 0 iff its invariants held."""
import argparse
import copy
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import extraction, schedules, sigma
from .algebra import GroupTooLarge, Rng, group_profile
from .commitments import Commitment, Opening, basis_gen, commit, verify_open, well_formed
from .mim import BOT_TAG, IdentityViolation, ScheduleInfeasible, make_adversary, prefix_gen, run_mim
from .protocols import (
    ASYNC, KINDS, ONE_SIDED, Protocol, compute_constants, constants_inequalities, lab_profile_default,
    run_honest_session,
)
from .wire import dumps, to_jsonable

PROTOCOL_ALIASES = {"1": ONE_SIDED, "2": "sync", "3": ASYNC}


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    seed: int
    kind: str = "mim"  # mim | completeness | extract
    group: str = "test-q20"
    protocol: str = ONE_SIDED
    n: int = 4
    tags: tuple = (1, 2)
    adversary: str = "honest"
    advice: str = ""
    schedule: str = "sync"
    m: int = 5
    m_tilde: int = 9
    machine: str = "SE"
    i: int = 1
    epsilon: float = 0.1
    lam: int = 8
    rewind_cap: int | None = None
    wee_budget: int = 256
    trials: int = 10
    lab: bool | None = None
    output: str | None = None

    def resolve(self):
        try:
            params = group_profile(self.group)
        except KeyError:
            raise ConfigError("group", f"unknown group profile {self.group!r}") from None
        kind = PROTOCOL_ALIASES.get(str(self.protocol), self.protocol)
        if kind not in KINDS:
            raise ConfigError("protocol", f"unknown protocol {self.protocol!r}")
        lab = lab_profile_default() if self.lab is None else self.lab
        constants = compute_constants(lab=lab) if kind == ASYNC else None
        try:
            protocol = Protocol(kind, self.n, constants)
            for t in self.tags:
                protocol.tag(t)
        except ValueError as exc:
            raise ConfigError("tags", str(exc)) from None
        try:
            make_adversary(self.adversary, self.m_tilde)
        except ValueError as exc:
            raise ConfigError("adversary", str(exc)) from None
        if self.trials < 1:
            raise ConfigError("trials", "must be at least 1")
        return params, protocol


def _record_outcome(o):
    return {
        "out": o.out.hex() if isinstance(o.out, bytes) else o.out,
        "b": o.b,
        "val_b": o.val_b if o.val_b in (None, BOT_TAG) else int(o.val_b),
        "identity_checked": o.identity_checked,
    }


def _mim_trials(config, params, protocol, rng):
    records, violations = [], []
    equal_tags = config.tags[0] == config.tags[1]
    for k in range(config.trials):
        adv = make_adversary(config.adversary, config.m_tilde)
        try:
            o = run_mim(params, protocol, adv, config.m, tuple(config.tags), config.schedule, rng.split("trial", k),
                        config.advice.encode())
        except IdentityViolation as exc:
            violations.append({"trial": k, "identity": str(exc)})
            continue
        except ScheduleInfeasible as exc:
            records.append({"trial": k, "infeasible": str(exc)})
            continue
        rec = {"trial": k, **_record_outcome(o)}
        if (o.val_b == BOT_TAG) != equal_tags:
            violations.append({"trial": k, "tag_guard": rec["val_b"]})
        records.append(rec)
    done = [r for r in records if "b" in r]
    agg = {
        "accept_rate": sum(r["b"] for r in done) / max(len(done), 1),
        "bot_tag_rate": sum(r["val_b"] == BOT_TAG for r in done) / max(len(done), 1),
        "infeasible": len(records) - len(done),
    }
    return records, agg, violations


def _completeness_trials(config, params, protocol, rng):
    records, violations = [], []
    for k in range(config.trials):
        res = run_honest_session(params, protocol, config.tags[0], config.m, rng.split("trial", k))
        ok = bool(res.decision) and bool(res.decommit_decision)
        records.append({"trial": k, "commit": bool(res.decision), "decommit": bool(res.decommit_decision)})
        if not ok:
            violations.append({"trial": k, "completeness": False})
    agg = {"accept_rate": sum(r["commit"] and r["decommit"] for r in records) / len(records)}
    return records, agg, violations


def _extract_trials(config, params, protocol, rng):
    if protocol.kind != ONE_SIDED:
        raise ConfigError("protocol", "extraction machines are defined for the one-sided protocol")
    t, t_tilde = config.tags
    ep = extraction.ExtractionParams(config.epsilon, t, t_tilde, config.lam, config.rewind_cap, config.wee_budget)
    records, violations = [], []
    for k in range(config.trials):
        trng = rng.split("trial", k)
        adv = make_adversary(config.adversary, config.m_tilde)
        pre = prefix_gen(params, protocol, adv, config.m, tuple(config.tags), config.schedule, trng.split("prefix"),
                         config.advice.encode())
        sim = pre.public_view()
        truth = extraction.true_value(pre)
        rec = {"trial": k}
        machine = config.machine
        if machine == "G":
            out, b = extraction.run_G(config.i, sim, trng.split("G"), ep.wee_budget)
            rec.update(out=out.hex() if out else None, b=b)
        elif machine in ("K", "K_i"):
            res = (extraction.run_K(sim, trng.split("K"), ep) if machine == "K"
                   else extraction.run_K_i(config.i, sim, trng.split("K"), ep))
            rec.update(result=res.kind, value=res.value, budget_exhausted=res.budget_exhausted)
            if res.is_message and res.value != truth:
                violations.append({"trial": k, "classification": res.value, "truth": truth})
        elif machine == "SE":
            se = extraction.run_SE(sim, ep, trng.split("SE"))
            wrong = se.b and se.val != truth
            rec.update(b=se.b, val=se.val, truth=truth, k_calls=se.k_calls, wrong=wrong,
                       budget_exhausted=se.budget_exhausted)
        elif machine.startswith("hybrid:"):
            name = machine.split(":", 1)[1]
            out, r = extraction.run_hybrid_lab(name, config.i, pre, trng.split("lab"))
            rec.update(machine=name, guess=list(r.guess) if r.guess else None)
            rec.update(result=out.kind if isinstance(out, extraction.ExtractionResult) else bool(out))
        else:
            raise ConfigError("machine", f"unknown machine {machine!r}")
        records.append(rec)
    agg = {"loop_count": ep.loop_count, "epsilon_prime": str(ep.epsilon_prime), "capped": ep.capped}
    if config.machine == "SE":
        agg["failure_rate"] = sum(r["wrong"] for r in records) / len(records)
        agg["accept_rate"] = sum(r["b"] for r in records) / len(records)
        if agg["failure_rate"] > config.epsilon + 0.05 and not ep.capped:
            violations.append({"failure_rate": agg["failure_rate"], "bound": config.epsilon + 0.05})
    elif "result" in records[0]:
        hist = {}
        for r in records:
            hist[str(r["result"])] = hist.get(str(r["result"]), 0) + 1
        agg["histogram"] = hist
    else:
        n_acc = sum(r["b"] for r in records)
        agg["accept_rate"] = n_acc / len(records)
        agg["accept_ci"] = list(extraction.wilson(n_acc, len(records)))
    return records, agg, violations


RUNNERS = {"mim": _mim_trials, "completeness": _completeness_trials, "extract": _extract_trials}


def run_experiment(config: ExperimentConfig) -> dict:
    params, protocol = config.resolve()
    if config.kind not in RUNNERS:
        raise ConfigError("kind", f"unknown experiment kind {config.kind!r}")
    start = time.perf_counter()
    records, agg, violations = RUNNERS[config.kind](config, params, protocol, Rng(config.seed, (config.kind,)))
    report = {
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(config).items()},
        "trials": sorted(records, key=lambda r: r.get("trial", 0)),
        "aggregate": agg,
        "violations": violations,
        "ok": not violations,
        "wall_clock": time.perf_counter() - start,
    }
    if config.output:
        Path(config.output).write_text(dumps(report, indent=2))
    return report


# bind-audit


def bind_audit(group="test23"):
    """Every (s, m, r) in a brute-forceable group: no commitment under one basis opens to two messages."""
    params = group_profile(group)
    if not params.brute_forceable:
        raise GroupTooLarge(f"{group} is too large for an exhaustive scan")
    q = params.q
    violations = []
    mismatches = 0
    for s in range(1, q):
        basis = basis_gen(params, None, s=s)
        seen = {}
        for m in range(q):
            for r in range(q):
                com = commit(params, basis, m, r)
                prev = seen.setdefault((com.u, com.v), m)
                if prev != m:
                    violations.append({"s": s, "com": [com.u, com.v], "m0": prev, "m1": m})
        if len(seen) != q * q:
            mismatches += 1
    # Element of order 2: outside the subgroup, so no opening can produce it.
    tampered = Commitment(params.p - 1, params.g)
    basis = basis_gen(params, None, s=1)
    openable = any(verify_open(params, basis, tampered, Opening(m, r)) for m in range(q) for r in range(q))
    return {
        "group": group,
        "message_space": q,
        "bases": q - 1,
        "scanned": (q - 1) * q * q,
        "violations": violations,
        "non_injective_bases": mismatches,
        "tampered_well_formed": well_formed(params, basis, tampered),
        "tampered_openable": openable,
        "ok": not violations and not openable,
    }


# sigma-test


def sigma_test(group="test23", trials=200, seed=0):
    params = group_profile(group)
    rng = Rng(seed, ("sigma-test",))
    counts = {"completeness": 0, "or_completeness": 0, "extraction": 0}
    for k in range(trials):
        r = rng.split(k)
        x = r.nonzero_scalar(params.q)
        y = params.exp(params.g, x)
        _, ok = sigma.atomic_prove_verify(params, sigma.DLog(y), sigma.Witness(0, (x,)), r.split("p"), r.split("v"))
        counts["completeness"] += ok
        Y = tuple(params.exp(params.g, r.nonzero_scalar(params.q)) for _ in range(2)) + (y,)
        stmt = sigma.OneOfT(Y)
        e1 = r.scalar(params.q)
        e2 = (e1 + 1 + r.below(params.q - 1)) % params.q
        prover = sigma.Prover(params, stmt, sigma.Witness(2, (x,)), r.split("or"))
        first = prover.first_message()
        fork = copy.deepcopy(prover)
        t1 = sigma.ORTranscript.assemble(first, e1, prover.respond(e1))
        t2 = sigma.ORTranscript.assemble(first, e2, fork.respond(e2))
        counts["or_completeness"] += sigma.verify(params, stmt, t1) and sigma.verify(params, stmt, t2)
        w = sigma.special_sound_extract(params, stmt, t1, t2)
        counts["extraction"] += sigma.witness_ok(params, stmt, w)
    rates = {k: v / trials for k, v in counts.items()}
    return {"group": group, "trials": trials, "rates": rates, "ok": all(v == 1.0 for v in rates.values())}


# schedule-classify


def schedule_classify(trace_path=None, random_count=0, seed=0, lab=True):
    protocol = Protocol(ASYNC, constants=compute_constants(lab=lab))
    script = protocol.script()
    results = []
    if trace_path:
        data = json.loads(Path(trace_path).read_text())
        actions = [(a["session"], a["step"]) for a in data]
        results.append({"source": str(trace_path), "classes": sorted(schedules.classify_schedule(actions, protocol.constants))})
    rng = Rng(seed, ("schedule-classify",))
    for k in range(random_count):
        sched = schedules.random_merge(script, rng.split(k))
        results.append({"source": f"random:{k}", "classes": sorted(schedules.classify_schedule(sched.actions, protocol.constants))})
    hist = {}
    for r in results:
        for c in r["classes"]:
            hist[c] = hist.get(c, 0) + 1
    return {"results": results, "histogram": hist, "ok": True}


def constants_report(wipok_rounds=3, extcom_rounds=3, lab=None):
    lab = lab_profile_default() if lab is None else lab
    faithful = compute_constants(wipok_rounds, extcom_rounds)
    checks, totals = constants_inequalities(faithful, wipok_rounds, extcom_rounds)
    report = {
        "wipok_rounds": wipok_rounds,
        "extcom_rounds": extcom_rounds,
        "faithful": list(faithful.as_tuple()),
        "inequalities": checks,
        "prior_round_totals": totals,
        "ok": all(checks.values()),
    }
    if lab:
        report["active"] = list(compute_constants(wipok_rounds, extcom_rounds, lab=True).as_tuple())
        report["warning"] = "lab profile: repetition counts are below the pigeonhole requirement"
    else:
        report["active"] = report["faithful"]
    return report


def _tags(s):
    parts = s.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("tags must be 't,t_tilde'")
    return tuple(int(x) for x in parts)


def build_parser():
    ap = argparse.ArgumentParser(prog="nmcom", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--group", default="test-q20")
        p.add_argument("--protocol", default="1", help="1, 2, 3 or one-sided/sync/async")
        p.add_argument("--tags", type=_tags, default=(1, 2), help="t,t_tilde")
        p.add_argument("--left-tag", type=int)
        p.add_argument("--right-tag", type=int)
        p.add_argument("--adversary", default="honest")
        p.add_argument("--advice", default="")
        p.add_argument("--schedule", default="sync")
        p.add_argument("--m", type=int, default=5)
        p.add_argument("--m-tilde", type=int, default=9)
        p.add_argument("--trials", type=int, default=10)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--lab", action=argparse.BooleanOptionalAction, default=None)
        p.add_argument("--json-out")

    p = sub.add_parser("mim-run", help="man-in-the-middle game trials")
    common(p)
    p.add_argument("--completeness", action="store_true", help="run honest standalone sessions instead")

    p = sub.add_parser("extract", help="extraction machines on fresh prefixes")
    common(p)
    p.add_argument("--machine", default="SE", help="G, K, K_i, SE or hybrid:{Kp_i,Kpp_i,Kstar1,Kstarstar1}")
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--lambda", dest="lam", type=int, default=8)
    p.add_argument("--rewind-cap", type=int)
    p.add_argument("--wee-budget", type=int, default=256)

    p = sub.add_parser("sigma-test", help="sigma-layer completeness and extraction")
    p.add_argument("--group", default="test23")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json-out")

    p = sub.add_parser("bind-audit", help="exhaustive binding scan")
    p.add_argument("--group", default="test23")
    p.add_argument("--json-out")

    p = sub.add_parser("schedule-classify", help="Bad 1-5 classes of asynchronous traces")
    p.add_argument("--trace", help="JSON list of {session, step}")
    p.add_argument("--random", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--faithful", action="store_true", help="classify against faithful constants")
    p.add_argument("--json-out")

    p = sub.add_parser("constants", help="repetition constants and their inequalities")
    p.add_argument("--wipok-rounds", type=int, default=3)
    p.add_argument("--extcom-rounds", type=int, default=3)
    p.add_argument("--lab", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--json-out")
    return ap


def _config_from(args, kind):
    tags = (args.left_tag or args.tags[0], args.right_tag or args.tags[1])
    fields = dict(seed=args.seed, kind=kind, group=args.group, protocol=args.protocol, tags=tags,
                  adversary=args.adversary, advice=args.advice, schedule=args.schedule, m=args.m,
                  m_tilde=args.m_tilde, trials=args.trials, lab=args.lab, output=args.json_out)
    if kind == "extract":
        fields.update(machine=args.machine, i=args.i, epsilon=args.epsilon, lam=args.lam,
                      rewind_cap=args.rewind_cap, wee_budget=args.wee_budget)
    return ExperimentConfig(**fields)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "mim-run":
            report = run_experiment(_config_from(args, "completeness" if args.completeness else "mim"))
        elif args.command == "extract":
            report = run_experiment(_config_from(args, "extract"))
        elif args.command == "sigma-test":
            report = sigma_test(args.group, args.trials, args.seed)
        elif args.command == "bind-audit":
            report = bind_audit(args.group)
        elif args.command == "schedule-classify":
            report = schedule_classify(args.trace, args.random, args.seed, lab=not args.faithful)
        else:
            report = constants_report(args.wipok_rounds, args.extcom_rounds, args.lab)
    except (ConfigError, GroupTooLarge) as exc:
        print(dumps({"error": str(exc), "field": getattr(exc, "field", None), "ok": False}))
        return 2
    text = dumps(report, indent=2, default=to_jsonable)
    if getattr(args, "json_out", None) and args.command not in ("mim-run", "extract"):
        Path(args.json_out).write_text(text)
    print(text)
    return 0 if report.get("ok") else 1


if __name__ == "__main__":
    sys.exit(main())
