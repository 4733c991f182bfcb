"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import math
import random
import time
from pathlib import Path

import pytest

from casegen import case_instances, case_transactions, mutate, swap_variant
from omap import fieldhash as fh
from omap.cases import CaseId, relation_holds
from omap.exchange import State
from omap.harness.fuzz import run_random_schedules
from omap.harness.scenario import EXIT_OK, load_scenario, run_scenario
from omap.harness.world import World
from omap.merkle import CombinedTree, LeafKind
from omap.r1cs import gadgets as g
from omap.r1cs.backend import ProofRefused, setup
from omap.r1cs.circuit import is_satisfiable
from omap.r1cs.cs import ConstraintSystem
from omap.transactions import TX_FIELDS, TX_LEN, OutputSpec, SiblingEvidence, SpendInput, build_joinsplit, prepare_joinsplit

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
FUZZ_COUNT, FUZZ_SEED, FUZZ_BUDGET = 1000, 2024, 60.0


def report(capsys, n, name, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def fuzz():
    t0 = time.perf_counter()
    rep = run_random_schedules(FUZZ_COUNT, FUZZ_SEED, depth=16)
    return rep, time.perf_counter() - t0


@pytest.fixture(scope="module")
def scripted():
    return {p.stem: run_scenario(load_scenario(p)) for p in sorted(SCENARIOS.glob("*.omap"))}


def test_c01_fairness(fuzz, capsys):
    rep, secs = fuzz
    ok = (rep.sessions == FUZZ_COUNT and rep.both_accepted == 0 and rep.neither_reachable == 0
          and rep.unfair == 0 and secs <= FUZZ_BUDGET)
    report(capsys, 1, "fairness/atomicity", ok,
           f"{rep.sessions} sessions, both_accepted={rep.both_accepted}, neither_reachable={rep.neither_reachable}, "
           f"unfair={rep.unfair}, completed={rep.completed}, cancelled={rep.cancelled}, {secs:.1f}s")


def test_c02_balance(fuzz, scripted, capsys):
    rep, _ = fuzz
    script_bad = {k: r.violations for k, r in scripted.items() if r.violations}
    ok = rep.invariant_violations == 0 and not script_bad
    report(capsys, 2, "per-colour conservation", ok,
           f"fuzz violations={rep.invariant_violations}, scripted violations={script_bad or 0} "
           f"({len(scripted)} scripts, checked after every step)")


def test_c03_double_spend(fuzz, capsys):
    rng = random.Random(3)
    w = World(setup(rng, 8), rng)
    w.party("B")
    outcomes = []
    for i in range(30):
        w.mint("A", 3, 10 + i)
        assert w.pay("A", "B", 3, 4) == "accept"
        outcomes.append(("replay", w.attempt_replay()))
        outcomes.append(("reuse", w.attempt_double_spend("A")))
        outcomes.append(("self-collision", w.attempt_self_collision("B")))
    bad = [o for o in outcomes if o[1] != "reject duplicate-nullifier"]
    rep, _ = fuzz
    fuzz_dups = sum(rep.attacks[k] for k in ("replay", "double-spend", "self-collision"))
    ok = not bad and not w.breaches and rep.wrong_reason == 0 and rep.adversarial_accepted == 0
    report(capsys, 3, "double-spend", ok,
           f"{len(outcomes)} scripted attempts + {fuzz_dups} fuzzed, all duplicate-nullifier; mismatches={bad[:3]}")


def _sibling_attempts(rounds=25):
    """Yield (label, refused_at_prover, ledger_verdict_of_forgery)."""
    rng = random.Random(4)
    params = setup(rng, 8)
    for r in range(rounds):
        w = World(params, rng)
        w.mint("A", 3, 5)
        w.mint("A", 2, 4)
        w.mint("C", 4, 6)
        assert w.offer("S", "A", "B", (3, 5), (2, 7), 2, rng.randbytes(32)) == "accept"
        assert w.offer("T", "C", "A", (4, 6), (2, 1), 9, rng.randbytes(32)) == "accept"
        si, other = w.exchange("S").initiator, w.exchange("T").counterparty
        assert other.discover(w.ledger)
        a = w.wallet("A")
        sib = SpendInput(si.sibling_note, a.a_sk, si.sibling_pos)
        plain = next(x for x in a.notes(w.ledger) if x.note.color1 == 2 and x.note.s == 0)
        foreign = SpendInput(other.primary_note, other.primary_key, other.primary_pos)
        if r % 2:
            w.advance(3)
        # evidence that names a spent nullifier which is not this sibling's primary
        spent = next(x for x in w.ledger.scan_receive(a.address.enc_sk, a.a_sk) if not x.spendable)
        fake = SiblingEvidence(spent.note, a.a_sk, spent.position, spent.nf, w.ledger.nf_positions[spent.nf])
        attempts = [
            ("alone", [sib], [OutputSpec(a.public, 2, 7)], None),
            ("with-plain-note", [sib, a.spend(plain)], [OutputSpec(a.public, 2, 11)], None),
            ("with-foreign-primary", [sib, foreign], [OutputSpec(a.public, 2, 6), OutputSpec(a.public, 4, 6)], None),
            ("fake-evidence", [sib], [OutputSpec(a.public, 2, 7)], fake),
            ("alone-split", [sib], [OutputSpec(a.public, 2, 3), OutputSpec(a.public, 2, 4)], None),
        ]
        for label, ins, outs, ev in attempts:
            try:
                build_joinsplit(params, w.ledger, ins, outs, rng, evidence=ev)
                refused = False
            except ProofRefused:
                refused = True
            prep, _ = prepare_joinsplit(w.ledger, ins, outs, rng, evidence=ev)
            verdict = w.ledger.verify_and_append(prep.finalize(rng.randbytes(32)))
            yield label, refused, verdict


def test_c04_sibling_alone(fuzz, capsys):
    results = list(_sibling_attempts())
    not_refused = [lab for lab, refused, _ in results if not refused]
    accepted = [lab for lab, _, v in results if v]
    rep, _ = fuzz
    fuzz_n = rep.attacks["sibling-alone"]
    ok = len(results) >= 100 and not not_refused and not accepted and rep.adversarial_accepted == 0
    report(capsys, 4, "sibling-alone unspendability", ok,
           f"{len(results)} generated attempts + {fuzz_n} fuzzed; prover accepted {len(not_refused)}, "
           f"ledger accepted {len(accepted)}")


def test_c05_equivalence(capsys):
    total = agree = sat = 0
    rng = random.Random(5)
    for seed in (0, 1):
        inst = case_instances(seed, 6)
        items = sorted(inst.items())
        pairs = []
        for _, (_, chi, omega) in items:
            pairs.append((chi, omega))
            pairs.append(swap_variant(chi, omega, True))
            pairs.append(swap_variant(chi, omega, False))
        for _ in range(600):
            _, (_, chi, omega) = rng.choice(items)
            pairs.append(mutate(rng, chi, omega)[1:])
        for chi, omega in pairs:
            c, p = is_satisfiable(chi, omega, 6), relation_holds(chi, omega, 6)
            total += 1
            agree += c == p
            sat += c
    ok = total >= 1000 and agree == total
    report(capsys, 5, "circuit <=> predicate", ok, f"{agree}/{total} agree ({sat} satisfiable, all 6 cases covered)")


def test_c06_obliviousness(capsys):
    txs = case_transactions(6, 6)
    cases = {c for c, _ in txs.values()}
    lengths = {len(tx.serialize()) for _, tx in txs.values()}
    proofs = {len(tx.proof) for _, tx in txs.values()}
    no_tag = not any(k in name for name in TX_FIELDS for k in ("case", "kind", "type"))
    ok = cases == set(CaseId) - {CaseId.Disallowed} and lengths == {TX_LEN} and proofs == {32} and no_tag
    report(capsys, 6, "encoding-level obliviousness", ok,
           f"{len(txs)} transactions over {len(cases)} cases, lengths={sorted(lengths)}, proof sizes={sorted(proofs)}, "
           f"no discriminator field={no_tag}")


def test_c07_leq_grid(capsys):
    cs = ConstraintSystem()
    x, y = cs.private("x"), cs.private("y")
    g.assert_leq_bits(cs, x, y, 8)
    comp = cs.compile()
    agree = 0
    for a in range(256):
        for b in range(256):
            agree += (comp.first_unsatisfied(comp.solve({"x": a, "y": b})) is None) == (a <= b)
    report(capsys, 7, "assert_leq_bits 8-bit grid", agree == 65536, f"{agree}/65536 agree")


def _brute_root(leaves, depth):
    row = [fh.hc(k.tag, fh.to_field(v)) for v, k in leaves]
    row += [fh.hc(fh.TAG_EMPTY, 0)] * (2**depth - len(row))
    for _ in range(depth):
        row = [fh.hc(fh.TAG_NODE, row[i], row[i + 1]) for i in range(0, len(row), 2)]
    return fh.from_field(row[0])


def test_c08_merkle(fuzz, scripted, capsys):
    rng = random.Random(8)
    mismatches = checks = 0
    for i in range(100):
        n = 1024 if i < 2 else max(1, int(2 ** rng.uniform(0, 10)))
        depth = max(1, math.ceil(math.log2(n)))
        t = CombinedTree(depth)
        leaves = []
        marks = set(range(1, min(n, 16) + 1)) | {rng.randint(1, n) for _ in range(3)} | {n}
        for j in range(1, n + 1):
            leaves.append((fh.reduce_digest(rng.randbytes(32)), rng.choice(list(LeafKind))))
            t.append(*leaves[-1])
            if j in marks:
                checks += 1
                mismatches += t.root != _brute_root(leaves, depth)
    rep, _ = fuzz
    scripted_adj = [abs(s.sibling_pos - s.primary_pos) for r in scripted.values()
                    for e in r.world.exchanges.values() for s in (e.initiator,) if s.primary_pos is not None]
    ok = mismatches == 0 and rep.adjacency_violations == 0 and set(scripted_adj) <= {1}
    report(capsys, 8, "merkle correctness + adjacency", ok,
           f"100 sequences, {checks} root checks, {mismatches} mismatches; adjacency violations "
           f"fuzz={rep.adjacency_violations} over {rep.sessions} inits, scripted={len(scripted_adj)} inits ok")


def test_c09_worked_examples(scripted, capsys):
    y = scripted["yellow_for_green"]
    r = scripted["red_for_green"]
    GREEN, RED, YELLOW = 3, 2, 4
    yw, rw = y.world, r.world
    got_y = (yw.balance("Alice", GREEN), yw.balance("Alice", YELLOW), yw.balance("Bob", GREEN), yw.balance("Bob", YELLOW))
    got_r = (rw.balance("Alice", GREEN), rw.balance("Alice", RED), rw.balance("Bob", GREEN), rw.balance("Bob", RED))
    split = sorted(x.note.v1 for x in rw.wallet("Alice").notes(rw.ledger) if x.note.color1 == RED)
    ok = (y.exit_code == r.exit_code == EXIT_OK and got_y == (0, 3, 5, 1) and got_r == (0, 7, 5, 2)
          and split == [3, 4]
          and yw.exchange("S1").initiator.state is State.COMPLETED
          and rw.exchange("S1").initiator.state is State.COMPLETED)
    report(capsys, 9, "worked examples end-to-end", ok,
           f"yellow/green (A g,y B g,y)={got_y}, red/green (A g,r B g,r)={got_r}, Alice red notes={split}")


def test_c10_determinism(scripted, capsys):
    golden = SCENARIOS / "golden"
    diffs = []
    for name, first in scripted.items():
        again = run_scenario(load_scenario(SCENARIOS / f"{name}.omap"))
        if again.trace_text() != first.trace_text() or again.world.ledger.dump() != first.world.ledger.dump():
            diffs.append(f"{name}: rerun differs")
        if first.trace_text() != (golden / f"{name}.trace").read_text():
            diffs.append(f"{name}: trace differs from golden")
        if first.world.ledger.dump() != (golden / f"{name}.ledger").read_text():
            diffs.append(f"{name}: ledger differs from golden")
    f1 = run_random_schedules(10, "det", depth=8).text()
    f2 = run_random_schedules(10, "det", depth=8).text()
    if f1 != f2:
        diffs.append("fuzz report differs")
    report(capsys, 10, "determinism", not diffs,
           f"{len(scripted)} scripts rerun + golden compared, fuzz rerun; differences={diffs or 0}")
