"""Two-party fair exchange sessions on top of the ledger.

The initiator locks ``give`` into a primary note that both parties can
spend (its key is derived from a shared secret and the offer's h_sig) and
keeps a sibling note mirroring the ``ask`` debt.  The counterparty either
pays the debt before the threshold height, or the initiator takes the
offer back after it.  Give and ask are always stated from the initiator's
point of view.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .cases import CaseId
from .ledger import Ledger, Received, Verdict
from .notes import Note, nullifier_of
from .primitives import PaymentAddress, derive_address, derive_shared_spending_key
from .r1cs.backend import SetupParams
from .statement import Asset
from .transactions import (
    BuildResult,
    JoinSplitTransaction,
    OutputSpec,
    SharedRecipient,
    SiblingEvidence,
    SpendInput,
    build_joinsplit,
)


class Role(Enum):
    INITIATOR = "initiator"
    COUNTERPARTY = "counterparty"


class State(Enum):
    CREATED = "Created"
    OFFERED = "Offered"
    RESPONDED = "Responded"
    CANCELLED = "Cancelled"
    COMPLETED = "Completed"
    ABORTED = "Aborted"


# legal (from, to) pairs
TRANSITIONS = {
    (State.CREATED, State.OFFERED),
    (State.OFFERED, State.RESPONDED),
    (State.OFFERED, State.CANCELLED),
    (State.RESPONDED, State.COMPLETED),
    (State.CREATED, State.ABORTED),
    (State.OFFERED, State.ABORTED),
}


class SessionError(Exception):
    def __init__(self, message: str, code: str = "bad-state"):
        super().__init__(message)
        self.code = code


class LedgerRejected(SessionError):
    def __init__(self, verdict: Verdict):
        super().__init__(f"ledger rejected transaction: {verdict.reason.value}", verdict.reason.value)
        self.verdict = verdict


@dataclass
class Wallet:
    """A party's spending key and address."""

    name: str
    a_sk: bytes = field(repr=False)
    address: PaymentAddress = field(init=False, repr=False)

    def __post_init__(self):
        self.address = derive_address(self.a_sk)

    @property
    def public(self) -> PaymentAddress:
        return self.address.public()

    def notes(self, ledger: Ledger) -> list[Received]:
        return [r for r in ledger.scan_receive(self.address.enc_sk, self.a_sk) if r.spendable]

    def balance(self, ledger: Ledger) -> dict[int, int]:
        """Spendable primary value per colour, ignoring locked siblings."""
        out: dict[int, int] = {}
        for r in self.notes(ledger):
            if r.note.s == 0 and r.note.v1:
                out[r.note.color1] = out.get(r.note.color1, 0) + r.note.v1
        return out

    def spend(self, r: Received) -> SpendInput:
        return SpendInput(r.note, self.a_sk, r.position)


def submit(ledger: Ledger, res: BuildResult) -> Verdict:
    verdict = ledger.verify_and_append(res.tx)
    if not verdict:
        raise LedgerRejected(verdict)
    return verdict


@dataclass
class ExchangeSession:
    role: Role
    wallet: Wallet
    give: Asset
    ask: Asset
    bt: int
    shared_secret: bytes = field(repr=False)
    state: State = State.CREATED
    primary_note: Note | None = None
    primary_pos: int | None = None
    primary_key: bytes | None = field(default=None, repr=False)
    sibling_note: Note | None = None
    sibling_pos: int | None = None
    primary_nf_expected: bytes | None = None
    evidence: SiblingEvidence | None = None
    history: list[State] = field(default_factory=list)

    def _move(self, to: State) -> None:
        if (self.state, to) not in TRANSITIONS:
            raise SessionError(f"illegal transition {self.state.value} -> {to.value}")
        self.history.append(self.state)
        self.state = to

    def _require(self, role: Role, *states: State) -> None:
        if self.role is not role:
            raise SessionError(f"only the {role.value} can do this")
        if self.state not in states:
            raise SessionError(f"session is {self.state.value}")

    # -- initiator ------------------------------------------------------------------

    def initiate(
        self, params: SetupParams, ledger: Ledger, funding: Sequence[Received], rng: random.Random
    ) -> JoinSplitTransaction:
        self._require(Role.INITIATOR, State.CREATED)
        gc, gv = self.give
        if not 1 <= len(funding) <= 2:
            raise SessionError("fund an offer with one or two notes", "funding-shape")
        if any(r.note.color1 != gc or r.note.s or r.note.v2 for r in funding):
            raise SessionError("funding notes must be plain notes of the offered colour", "wrong-asset")
        total = sum(r.note.v1 for r in funding)
        if total < gv:
            raise SessionError(f"insufficient funding: {total} < {gv}", "insufficient-funding")
        if total > gv:
            raise SessionError("funding must match the offered amount exactly (an offer has no change output)", "funding-shape")
        ac, av = self.ask
        outputs = [
            OutputSpec(SharedRecipient(self.shared_secret), gc, gv, ac, av, self.bt, s=0),
            OutputSpec(self.wallet.public, ac, av, 0, 0, self.bt, s=1),
        ]
        res = build_joinsplit(params, ledger, [self.wallet.spend(r) for r in funding], outputs, rng,
                              intent=CaseId.ExchangeInit)
        verdict = submit(ledger, res)
        self.primary_note, self.sibling_note = res.notes
        self.primary_pos, self.sibling_pos = verdict.positions[0], verdict.positions[1]
        self.primary_key = res.shared_keys[0]
        self.primary_nf_expected = nullifier_of(self.primary_note, self.primary_key)
        self._move(State.OFFERED)
        return res.tx

    def poll_counterparty(self, ledger: Ledger) -> str:
        """'pending', 'responded' or 'expired'; on 'responded' records evidence."""
        if self.state not in (State.OFFERED, State.RESPONDED):
            raise SessionError(f"session is {self.state.value}")
        hit = ledger.scan_nullifier(self.primary_nf_expected)
        if hit is not None:
            if self.state is State.OFFERED:
                self._move(State.RESPONDED)
            if self.role is Role.INITIATOR:
                self.evidence = SiblingEvidence(self.primary_note, self.primary_key, self.primary_pos,
                                                self.primary_nf_expected, hit[0])
            return "responded"
        return "expired" if ledger.block_n > self.bt else "pending"

    def cancel(self, params: SetupParams, ledger: Ledger, rng: random.Random) -> JoinSplitTransaction:
        self._require(Role.INITIATOR, State.OFFERED)
        if ledger.block_n <= self.bt:
            raise SessionError(f"cannot cancel before the threshold height {self.bt}", "before-threshold")
        if ledger.is_spent(self.primary_nf_expected):
            self.poll_counterparty(ledger)
            raise SessionError("counterparty already responded", "already-responded")
        gc, gv = self.give
        inputs = [
            SpendInput(self.primary_note, self.primary_key, self.primary_pos),
            SpendInput(self.sibling_note, self.wallet.a_sk, self.sibling_pos),
        ]
        res = build_joinsplit(params, ledger, inputs, [OutputSpec(self.wallet.public, gc, gv)], rng,
                              intent=CaseId.CancelByInitiator)
        submit(ledger, res)
        self._move(State.CANCELLED)
        return res.tx

    def complete(self, params: SetupParams, ledger: Ledger, rng: random.Random,
                 split: int | None = None) -> JoinSplitTransaction:
        """Claim the asked asset; ``split`` moves that much into a second note."""
        self._require(Role.INITIATOR, State.OFFERED, State.RESPONDED)
        if self.state is State.OFFERED:
            self.poll_counterparty(ledger)
        if self.state is not State.RESPONDED or self.evidence is None:
            raise SessionError("no evidence that the counterparty responded", "no-evidence")
        if ledger.block_n <= self.bt:
            raise SessionError(f"cannot complete before the threshold height {self.bt}", "before-threshold")
        ac, av = self.ask
        k = 0 if split is None else split
        if not 0 <= k <= av:
            raise SessionError("split out of range", "bad-split")
        outputs = [OutputSpec(self.wallet.public, ac, av - k)]
        if split is not None:
            outputs.append(OutputSpec(self.wallet.public, ac, k))
        res = build_joinsplit(params, ledger, [SpendInput(self.sibling_note, self.wallet.a_sk, self.sibling_pos)],
                              outputs, rng, intent=CaseId.CompleteByInitiator, evidence=self.evidence)
        submit(ledger, res)
        self._move(State.COMPLETED)
        return res.tx

    # -- counterparty -------------------------------------------------------------------

    def discover(self, ledger: Ledger, since: int = 0) -> bool:
        """Look for the offer among transactions from index ``since`` on."""
        self._require(Role.COUNTERPARTY, State.CREATED)
        for i in range(since, len(ledger.transactions)):
            tx = ledger.transactions[i]
            if not isinstance(tx, JoinSplitTransaction):
                continue
            key = derive_shared_spending_key(self.shared_secret, tx.h_sig)
            addr = derive_address(key)
            for r in ledger.scan_transaction(i, addr.enc_sk, key):
                n = r.note
                if (n.s, n.color1, n.v1, n.color2, n.v2, n.bt) != (0, *self.give, *self.ask, self.bt):
                    continue
                self.primary_note, self.primary_pos, self.primary_key = n, r.position, key
                self.primary_nf_expected = r.nf
                self._move(State.OFFERED)
                return True
        return False

    def respond(self, params: SetupParams, ledger: Ledger, payment: Received,
                rng: random.Random) -> JoinSplitTransaction:
        self._require(Role.COUNTERPARTY, State.OFFERED)
        if ledger.block_n > self.bt:
            raise SessionError(f"offer expired at height {self.bt}", "expired")
        ac, av = self.ask
        if payment.note.color1 != ac or payment.note.s or payment.note.v2:
            raise SessionError("payment note must be a plain note of the asked colour", "wrong-asset")
        if payment.note.v1 < av:
            raise SessionError(f"payment {payment.note.v1} does not cover the debt {av}", "insufficient-payment")
        gc, gv = self.give
        inputs = [SpendInput(self.primary_note, self.primary_key, self.primary_pos), self.wallet.spend(payment)]
        outputs = [OutputSpec(self.wallet.public, gc, gv), OutputSpec(self.wallet.public, ac, payment.note.v1 - av)]
        res = build_joinsplit(params, ledger, inputs, outputs, rng, intent=CaseId.CounterpartyResponse)
        try:
            submit(ledger, res)
        except LedgerRejected:
            if ledger.is_spent(self.primary_nf_expected):
                # the initiator took the offer back first
                self._move(State.ABORTED)
            raise
        self._move(State.RESPONDED)
        return res.tx
