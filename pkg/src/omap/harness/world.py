"""Shared state and actions for scripted scenarios and random schedules.

Every action returns an outcome string: ``accept``, ``reject <reason>``
or, for polls, the poll status.  Ledger-facing events are reported through
``emit`` so callers can build a trace.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable

from ..cases import CaseId
from ..exchange import ExchangeSession, LedgerRejected, Role, SessionError, State, Wallet
from ..ledger import Ledger, Received, Verdict
from ..primitives import new_spending_key
from ..r1cs.backend import ProofRefused, SetupParams
from ..transactions import (
    BuildError,
    JoinSplitTransaction,
    OutputSpec,
    build_joinsplit,
    build_mint,
    prepare_joinsplit,
)
from .auditor import Auditor

PROOF_REFUSED = "reject proof-refused"


class HarnessError(Exception):
    """A scenario asked for something that cannot be set up (not a protocol outcome)."""


@dataclass
class Exchange:
    initiator: ExchangeSession
    counterparty: ExchangeSession
    initiator_name: str
    counterparty_name: str


def pick_notes(notes: list[Received], color: int, amount: int, exact: bool) -> list[Received] | None:
    """Deterministically choose one or two plain notes of ``color``.

    Prefers a single note, then the pair with the smallest sufficient sum.
    """
    cands = sorted((r for r in notes if r.note.color1 == color and r.note.s == 0 and r.note.v2 == 0),
                   key=lambda r: (r.note.v1, r.position))
    ok = (lambda v: v == amount) if exact else (lambda v: v >= amount)
    for r in cands:
        if ok(r.note.v1):
            return [r]
    best = None
    for i, a in enumerate(cands):
        for b in cands[i + 1:]:
            v = a.note.v1 + b.note.v1
            if ok(v) and (best is None or v < best[0]):
                best = (v, [a, b])
    return None if best is None else best[1]


@dataclass
class World:
    params: SetupParams
    rng: random.Random
    emit: Callable[[str], None] = lambda line: None
    ledger: Ledger = field(init=False)
    auditor: Auditor = field(init=False)
    wallets: dict[str, Wallet] = field(default_factory=dict)
    exchanges: dict[str, Exchange] = field(default_factory=dict)
    last_tx: JoinSplitTransaction | None = None
    # forged transactions the ledger wrongly accepted
    breaches: list[str] = field(default_factory=list)
    # proven responses held back by the counterparty
    withheld: dict[str, JoinSplitTransaction] = field(default_factory=dict)

    def __post_init__(self):
        self.ledger = Ledger(self.params)
        self.auditor = Auditor(self.ledger)

    # -- bookkeeping --------------------------------------------------------------

    def party(self, name: str) -> Wallet:
        if name not in self.wallets:
            w = Wallet(name, new_spending_key(self.rng))
            self.wallets[name] = w
            self.auditor.register_key(w.a_sk)
        return self.wallets[name]

    def wallet(self, name: str) -> Wallet:
        try:
            return self.wallets[name]
        except KeyError:
            raise HarnessError(f"unknown party {name!r}") from None

    def exchange(self, sid: str) -> Exchange:
        try:
            return self.exchanges[sid]
        except KeyError:
            raise HarnessError(f"unknown session {sid!r}") from None

    def sessions(self) -> list[ExchangeSession]:
        return [s for e in self.exchanges.values() for s in (e.initiator, e.counterparty)]

    def violations(self) -> list[str]:
        return self.auditor.violations(self.sessions()) + self.breaches

    def _record(self, verdict: Verdict, tx: JoinSplitTransaction | None = None) -> str:
        if verdict and tx is not None:
            self.last_tx = tx
        return str(verdict)

    def _submit(self, tx: JoinSplitTransaction) -> str:
        return self._record(self.ledger.verify_and_append(tx), tx)

    def _forge(self, prep, label: str) -> str:
        """Submit ``prep`` with a random proof; the ledger must refuse it."""
        tx = prep.finalize(self.rng.randbytes(32))
        verdict = self.ledger.verify_and_append(tx)
        if verdict:
            self.breaches.append(f"forged {label} accepted")
        return str(verdict)

    # -- honest actions -------------------------------------------------------------

    def mint(self, name: str, color: int, amount: int) -> str:
        tx, _ = build_mint(self.party(name).public, color, amount, self.rng)
        return str(self.ledger.apply_mint(tx))

    def advance(self, n: int) -> int:
        return self.ledger.advance_block(n)

    def pay(self, sender: str, recipient: str, color: int, amount: int) -> str:
        src, dst = self.wallet(sender), self.wallet(recipient)
        chosen = pick_notes(src.notes(self.ledger), color, amount, exact=False)
        if chosen is None:
            return "reject insufficient-funds"
        change = sum(r.note.v1 for r in chosen) - amount
        outputs = [OutputSpec(dst.public, color, amount)]
        if change:
            outputs.append(OutputSpec(src.public, color, change))
        res = build_joinsplit(self.params, self.ledger, [src.spend(r) for r in chosen], outputs, self.rng,
                              intent=CaseId.DefaultPayment)
        return self._submit(res.tx)

    def offer(self, sid: str, initiator: str, counterparty: str, give: tuple[int, int], ask: tuple[int, int],
              bt: int, secret: bytes) -> str:
        if sid in self.exchanges:
            raise HarnessError(f"session {sid!r} already exists")
        a, b = self.party(initiator), self.party(counterparty)
        si = ExchangeSession(Role.INITIATOR, a, give, ask, bt, secret)
        sc = ExchangeSession(Role.COUNTERPARTY, b, give, ask, bt, secret)
        self.exchanges[sid] = Exchange(si, sc, initiator, counterparty)
        funding = pick_notes(a.notes(self.ledger), give[0], give[1], exact=True)
        if funding is None:
            # no exact combination: split off the offered amount first
            out = self.pay(initiator, initiator, give[0], give[1])
            self.emit(f"split {initiator} {give[0]} {give[1]} -> {out}")
            if out != "accept":
                return "reject insufficient-funding"
            funding = pick_notes(a.notes(self.ledger), give[0], give[1], exact=True)
        try:
            tx = si.initiate(self.params, self.ledger, funding, self.rng)
        except SessionError as e:
            return f"reject {e.code}"
        self.last_tx = tx
        self.auditor.register_key(si.primary_key)
        return "accept"

    def respond(self, sid: str, note_value: int | None = None) -> str:
        ex = self.exchange(sid)
        sc = ex.counterparty
        if sc.state is State.CREATED and not sc.discover(self.ledger):
            return "reject offer-not-found"
        ac, av = sc.ask
        w = sc.wallet
        cands = [r for r in w.notes(self.ledger) if r.note.color1 == ac and r.note.s == 0 and r.note.v2 == 0]
        if note_value is not None:
            cands = [r for r in cands if r.note.v1 == note_value]
        else:
            cands = [r for r in cands if r.note.v1 >= av] or cands
        if not cands:
            return "reject insufficient-payment"
        payment = min(cands, key=lambda r: (r.note.v1, r.position))
        try:
            tx = sc.respond(self.params, self.ledger, payment, self.rng)
        except SessionError as e:
            return f"reject {e.code}"
        except ProofRefused:
            return PROOF_REFUSED
        self.last_tx = tx
        return "accept"

    def cancel(self, sid: str) -> str:
        si = self.exchange(sid).initiator
        try:
            tx = si.cancel(self.params, self.ledger, self.rng)
        except SessionError as e:
            return f"reject {e.code}"
        except ProofRefused:
            return PROOF_REFUSED
        self.last_tx = tx
        return "accept"

    def poll(self, sid: str) -> str:
        try:
            return self.exchange(sid).initiator.poll_counterparty(self.ledger)
        except SessionError as e:
            return f"reject {e.code}"

    def complete(self, sid: str, split: int | None = None) -> str:
        si = self.exchange(sid).initiator
        try:
            tx = si.complete(self.params, self.ledger, self.rng, split)
        except SessionError as e:
            return f"reject {e.code}"
        except ProofRefused:
            return PROOF_REFUSED
        self.last_tx = tx
        return "accept"

    # -- adversarial actions -------------------------------------------------------

    def attempt_replay(self) -> str:
        if self.last_tx is None:
            raise HarnessError("nothing to replay")
        return self._submit(self.last_tx)

    def attempt_double_spend(self, name: str) -> str:
        """Spend a note whose nullifier is already on the ledger."""
        w = self.wallet(name)
        spent = [r for r in self.ledger.scan_receive(w.address.enc_sk, w.a_sk)
                 if not r.spendable and r.note.s == 0 and r.note.v2 == 0]
        if not spent:
            raise HarnessError(f"{name} has no spent note to reuse")
        r = spent[-1]
        res = build_joinsplit(self.params, self.ledger, [w.spend(r)],
                              [OutputSpec(w.public, r.note.color1, r.note.v1)], self.rng)
        return self._submit(res.tx)

    def attempt_self_collision(self, name: str) -> str:
        """A transaction whose two nullifiers are equal."""
        w = self.wallet(name)
        notes = [r for r in w.notes(self.ledger) if r.note.s == 0 and r.note.v2 == 0]
        if not notes:
            raise HarnessError(f"{name} has no spendable note")
        r = notes[0]
        prep, _ = prepare_joinsplit(self.ledger, [w.spend(r)], [OutputSpec(w.public, r.note.color1, r.note.v1)],
                                    self.rng)
        tx = prep.finalize(self.rng.randbytes(32))
        tx = replace(tx, nf_old_2=tx.nf_old_1)
        verdict = self.ledger.verify_and_append(tx)
        if verdict:
            self.breaches.append("self-colliding transaction accepted")
        return str(verdict)

    def attempt_forged_proof(self, name: str) -> str:
        w = self.wallet(name)
        notes = [r for r in w.notes(self.ledger) if r.note.s == 0 and r.note.v2 == 0]
        if not notes:
            raise HarnessError(f"{name} has no spendable note")
        r = notes[0]
        prep, _ = prepare_joinsplit(self.ledger, [w.spend(r)],
                                    [OutputSpec(w.public, r.note.color1, r.note.v1 + 1000)], self.rng)
        return self._forge(prep, "proof")

    def _refused_then_forged(self, inputs, outputs, label: str, **kw) -> str:
        """Try to prove; on refusal also push a forged copy at the ledger."""
        try:
            res = build_joinsplit(self.params, self.ledger, inputs, outputs, self.rng, **kw)
        except ProofRefused:
            prep, _ = prepare_joinsplit(self.ledger, inputs, outputs, self.rng,
                                        evidence=kw.get("evidence"))
            ledger_says = self._forge(prep, label)
            self.emit(f"  forged {label} -> {ledger_says}")
            return PROOF_REFUSED
        except BuildError as e:
            return f"reject build-error ({e})"
        # the prover agreed; let the ledger decide
        return self._submit(res.tx)

    def attempt_sibling_alone(self, sid: str) -> str:
        si = self.exchange(sid).initiator
        if si.sibling_note is None:
            raise HarnessError(f"session {sid!r} has no sibling note yet")
        inputs = [si.wallet.spend(Received(si.sibling_note, True, si.sibling_pos, b""))]
        ac, av = si.ask
        return self._refused_then_forged(inputs, [OutputSpec(si.wallet.public, ac, av)], "sibling-alone")

    def attempt_cancel_early(self, sid: str) -> str:
        """Cancel while block_n <= bt, bypassing the session's own guard."""
        si = self.exchange(sid).initiator
        if si.primary_note is None:
            raise HarnessError(f"session {sid!r} has no offer yet")
        from ..transactions import SpendInput

        inputs = [SpendInput(si.primary_note, si.primary_key, si.primary_pos),
                  SpendInput(si.sibling_note, si.wallet.a_sk, si.sibling_pos)]
        gc, gv = si.give
        return self._refused_then_forged(inputs, [OutputSpec(si.wallet.public, gc, gv)], "cancel",
                                         intent=CaseId.CancelByInitiator)

    def attempt_respond_late(self, sid: str) -> str:
        """Respond after the threshold, bypassing the session's own guard."""
        ex = self.exchange(sid)
        sc = ex.counterparty
        if sc.state is State.CREATED and not sc.discover(self.ledger):
            raise HarnessError(f"session {sid!r} has no offer on the ledger")
        from ..transactions import SpendInput

        ac, av = sc.ask
        cands = [r for r in sc.wallet.notes(self.ledger) if r.note.color1 == ac and r.note.v1 >= av and r.note.s == 0]
        if not cands:
            raise HarnessError("counterparty has no note covering the debt")
        pay = cands[0]
        inputs = [SpendInput(sc.primary_note, sc.primary_key, sc.primary_pos), sc.wallet.spend(pay)]
        gc, gv = sc.give
        outputs = [OutputSpec(sc.wallet.public, gc, gv), OutputSpec(sc.wallet.public, ac, pay.note.v1 - av)]
        return self._refused_then_forged(inputs, outputs, "respond", intent=CaseId.CounterpartyResponse)

    def withhold_response(self, sid: str) -> str:
        """Prove a valid response now but keep it off the ledger."""
        sc = self.exchange(sid).counterparty
        if sc.state is State.CREATED and not sc.discover(self.ledger):
            return "reject offer-not-found"
        if sc.state is not State.OFFERED or self.ledger.block_n > sc.bt:
            return "reject bad-state"
        from ..transactions import SpendInput

        ac, av = sc.ask
        cands = [r for r in sc.wallet.notes(self.ledger) if r.note.color1 == ac and r.note.v1 >= av and r.note.s == 0]
        if not cands:
            return "reject insufficient-payment"
        pay = min(cands, key=lambda r: (r.note.v1, r.position))
        gc, gv = sc.give
        res = build_joinsplit(
            self.params, self.ledger,
            [SpendInput(sc.primary_note, sc.primary_key, sc.primary_pos), sc.wallet.spend(pay)],
            [OutputSpec(sc.wallet.public, gc, gv), OutputSpec(sc.wallet.public, ac, pay.note.v1 - av)],
            self.rng, intent=CaseId.CounterpartyResponse)
        self.withheld[sid] = res.tx
        return "accept"

    def release_response(self, sid: str) -> str:
        """Submit a withheld response, typically after the chain has moved on."""
        tx = self.withheld.pop(sid, None)
        if tx is None:
            raise HarnessError(f"no withheld response for {sid!r}")
        verdict = self.ledger.verify_and_append(tx)
        if verdict:
            self.last_tx = tx
            sc = self.exchange(sid).counterparty
            if sc.state is State.OFFERED and sc.bt >= self.ledger.block_n:
                sc._move(State.RESPONDED)
            else:
                self.breaches.append(f"stale response for {sid} accepted")
        return str(verdict)

    def balance(self, name: str, color: int) -> int:
        return self.wallet(name).balance(self.ledger).get(color, 0)


__all__ = ["World", "Exchange", "HarnessError", "LedgerRejected", "PROOF_REFUSED", "pick_notes"]
