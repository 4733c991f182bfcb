"""Randomized exchange schedules with adversarial interleavings.

Each session runs on its own ledger with an RNG seeded from ``(seed, i)``,
so any single session can be replayed in isolation.  Honest steps
(respond, cancel, complete) are scattered around the threshold height and
mixed with attacks.  At the end the honest initiator always tries to close
the session: a session where neither cancel nor complete goes through is
counted as stuck.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from ..exchange import State
from ..r1cs.backend import SetupParams, setup
from ..transactions import JoinSplitTransaction
from .world import PROOF_REFUSED, HarnessError, World

DUP = "reject duplicate-nullifier"

# attack -> the only acceptable outcome
EXPECTED_REJECT = {
    "replay": DUP,
    "double-spend": DUP,
    "self-collision": DUP,
    "forged-proof": "reject invalid-proof",
    "sibling-alone": PROOF_REFUSED,
    "cancel-early": PROOF_REFUSED,
    "respond-late": PROOF_REFUSED,
}


@dataclass
class FuzzReport:
    sessions: int = 0
    completed: int = 0
    cancelled: int = 0
    both_accepted: int = 0
    neither_reachable: int = 0
    invariant_violations: int = 0
    unfair: int = 0
    adjacency_violations: int = 0
    adversarial_attempts: int = 0
    adversarial_accepted: int = 0
    wrong_reason: int = 0
    attacks: Counter = field(default_factory=Counter)
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.both_accepted or self.neither_reachable or self.invariant_violations
                    or self.unfair or self.adjacency_violations or self.adversarial_accepted
                    or self.wrong_reason)

    def lines(self) -> list[str]:
        out = [f"{k} {getattr(self, k)}" for k in (
            "sessions", "completed", "cancelled", "both_accepted", "neither_reachable",
            "invariant_violations", "unfair", "adjacency_violations", "adversarial_attempts",
            "adversarial_accepted", "wrong_reason")]
        out += [f"attack {k} {v}" for k, v in sorted(self.attacks.items())]
        out += [f"problem {p}" for p in self.problems[:20]]
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _primary_spends(world: World, nf: bytes) -> int:
    return sum(1 for tx in world.ledger.transactions
               if isinstance(tx, JoinSplitTransaction) and nf in (tx.nf_old_1, tx.nf_old_2))


def _holdings(world: World, *names: str) -> dict[str, dict[int, int]]:
    return {n: dict(world.wallet(n).balance(world.ledger)) for n in names}


def _delta(before: dict[int, int], after: dict[int, int]) -> dict[int, int]:
    keys = set(before) | set(after)
    return {c: after.get(c, 0) - before.get(c, 0) for c in keys if after.get(c, 0) != before.get(c, 0)}


def run_session(params: SetupParams, seed: int | str, i: int, report: FuzzReport) -> None:
    rng = random.Random(f"{seed}:{i}")
    world = World(params, rng)
    tag = f"session {i}"

    gc = rng.randint(1, 6)
    ac = rng.choice([c for c in range(1, 7) if c != gc])
    gv, av = rng.randint(1, 40), rng.randint(1, 40)
    bt = rng.randint(1, 4)

    def check(where: str) -> None:
        bad = world.violations()
        if bad:
            report.invariant_violations += len(bad)
            report.problems.extend(f"{tag} {where}: {v}" for v in bad)
            world.breaches.clear()

    # funding: one exact note, or two parts, or an oversized note needing a split
    shape = rng.randrange(3)
    if shape == 0 or gv == 1:
        world.mint("A", gc, gv)
    elif shape == 1:
        k = rng.randint(1, gv - 1)
        world.mint("A", gc, k)
        world.mint("A", gc, gv - k)
    else:
        world.mint("A", gc, gv + rng.randint(1, 10))
    world.mint("B", ac, av + rng.randint(0, 10))
    if rng.random() < 0.3:
        world.mint("B", ac, rng.randint(1, av))
    if rng.random() < 0.3:
        world.mint("A", ac, rng.randint(1, 10))
    check("mint")

    before = _holdings(world, "A", "B")
    if world.offer("S", "A", "B", (gc, gv), (ac, av), bt, rng.randbytes(32)) != "accept":
        report.problems.append(f"{tag}: offer failed")
        report.neither_reachable += 1
        return
    si = world.exchange("S").initiator
    if abs(si.sibling_pos - si.primary_pos) != 1:
        report.adjacency_violations += 1
    check("offer")

    # honest schedule around bt, plus attacks
    last = bt + 2
    plan: list[tuple[int, str]] = []
    if rng.random() < 0.75:
        plan.append((rng.randint(0, last), "respond"))
    if rng.random() < 0.25:
        plan.append((rng.randint(0, bt), "withhold"))
        plan.append((rng.randint(bt + 1, last), "release"))
    if rng.random() < 0.6:
        plan.append((rng.randint(0, last), "cancel"))
    if rng.random() < 0.4:
        plan.append((rng.randint(0, last), "complete"))
    for attack in EXPECTED_REJECT:
        if rng.random() < 0.35:
            plan.append((rng.randint(0, last), attack))
    # one sibling-alone attempt per session keeps criterion coverage dense
    plan.append((rng.randint(0, last), "sibling-alone"))

    rng.shuffle(plan)
    plan.sort(key=lambda e: e[0])
    respond_ok = cancel_ok = False
    for h, action in plan:
        if world.ledger.block_n < h:
            world.advance(h - world.ledger.block_n)
        if action == "respond":
            out = world.respond("S")
            respond_ok |= out == "accept"
        elif action == "cancel":
            out = world.cancel("S")
            cancel_ok |= out == "accept"
        elif action == "complete":
            out = world.complete("S")
        elif action == "withhold":
            out = world.withhold_response("S")
        elif action == "release":
            try:
                out = world.release_response("S")
            except HarnessError:
                continue
            respond_ok |= out == "accept"
        else:
            try:
                out = _attack(world, action)
            except HarnessError:
                continue
            report.adversarial_attempts += 1
            report.attacks[action] += 1
            if out == "accept":
                report.adversarial_accepted += 1
                report.problems.append(f"{tag}: {action} accepted")
            elif out != EXPECTED_REJECT[action]:
                report.wrong_reason += 1
                report.problems.append(f"{tag}: {action} gave {out!r}")
        check(action)

    # the honest initiator closes the session after the threshold
    if world.ledger.block_n <= bt:
        world.advance(bt + 1 - world.ledger.block_n)
    if si.state is State.OFFERED:
        cancel_ok |= world.cancel("S") == "accept"
    if si.state in (State.OFFERED, State.RESPONDED):
        world.complete("S")
    check("close")

    if _primary_spends(world, si.primary_nf_expected) > 1 or (respond_ok and cancel_ok):
        report.both_accepted += 1
        report.problems.append(f"{tag}: primary spent twice")
    if si.state is State.COMPLETED:
        report.completed += 1
        want_a = {c: v for c, v in ((gc, -gv), (ac, av)) if v}
        want_b = {c: v for c, v in ((gc, gv), (ac, -av)) if v}
        after = _holdings(world, "A", "B")
        if _delta(before["A"], after["A"]) != want_a or _delta(before["B"], after["B"]) != want_b:
            report.unfair += 1
            report.problems.append(f"{tag}: completed with unfair deltas")
    elif si.state is State.CANCELLED:
        report.cancelled += 1
        after = _holdings(world, "A", "B")
        if after != before:
            report.unfair += 1
            report.problems.append(f"{tag}: cancelled but holdings moved")
    else:
        report.neither_reachable += 1
        report.problems.append(f"{tag}: stuck in {si.state.value}")


def _attack(world: World, action: str) -> str:
    if action == "replay":
        return world.attempt_replay()
    if action == "double-spend":
        return world.attempt_double_spend(world.rng.choice(["A", "B"]))
    if action == "self-collision":
        return world.attempt_self_collision(world.rng.choice(["A", "B"]))
    if action == "forged-proof":
        return world.attempt_forged_proof(world.rng.choice(["A", "B"]))
    if action == "sibling-alone":
        return world.attempt_sibling_alone("S")
    if action == "cancel-early":
        if world.ledger.block_n > world.exchange("S").initiator.bt:
            raise HarnessError("past the threshold")
        return world.attempt_cancel_early("S")
    if action == "respond-late":
        if world.ledger.block_n <= world.exchange("S").initiator.bt:
            raise HarnessError("still before the threshold")
        return world.attempt_respond_late("S")
    raise ValueError(action)


def run_random_schedules(count: int, seed: int | str = 0, depth: int = 16,
                         params: SetupParams | None = None) -> FuzzReport:
    if count < 1:
        raise ValueError("count must be at least 1")
    if params is None:
        params = setup(random.Random(f"{seed}:setup"), depth)
    report = FuzzReport()
    for i in range(count):
        run_session(params, seed, i, report)
        report.sessions += 1
    return report
