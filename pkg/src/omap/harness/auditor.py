"""Omniscient auditor: knows every key, so it can decrypt every note on the
ledger and check global invariants against ledger reality."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..exchange import TRANSITIONS, ExchangeSession
from ..ledger import Ledger
from ..merkle import LeafKind
from ..notes import Note, deserialize_note, nullifier_of
from ..primitives import decrypt_note, derive_address


@dataclass
class Auditor:
    ledger: Ledger
    # a_pk -> (a_sk, enc_sk)
    keys: dict[bytes, tuple[bytes, bytes]] = field(default_factory=dict)
    # notes seen on the ledger with their nullifiers
    notes: list[tuple[Note, bytes]] = field(default_factory=list)
    _seen: int = 0
    _unresolved: list[tuple[bytes, int]] = field(default_factory=list)

    def register_key(self, a_sk: bytes) -> None:
        addr = derive_address(a_sk)
        if addr.a_pk not in self.keys:
            self.keys[addr.a_pk] = (a_sk, addr.enc_sk)
            # a late key can unlock earlier ciphertexts
            pending, self._unresolved = self._unresolved, []
            for ct, pos in pending:
                self._absorb(ct, pos)

    def _absorb(self, ct: bytes, pos: int) -> None:
        for a_sk, enc_sk in self.keys.values():
            pt = decrypt_note(enc_sk, ct)
            if pt is None:
                continue
            note = deserialize_note(pt)
            if note.cm != self.ledger.tree.leaves[pos][0]:
                continue
            self.notes.append((note, nullifier_of(note, a_sk)))
            return
        self._unresolved.append((ct, pos))

    def refresh(self) -> None:
        outbox = self.ledger._outbox
        for ct, pos, _ in outbox[self._seen:]:
            self._absorb(ct, pos)
        self._seen = len(outbox)

    def shielded(self) -> dict[int, int]:
        """Net unspent value per colour: primary values minus outstanding debts."""
        out: dict[int, int] = {}
        for note, nf in self.notes:
            if nf in self.ledger.nullifier_set:
                continue
            for c, v in note.net_values().items():
                out[c] = out.get(c, 0) + v
        return out

    def violations(self, sessions: list[ExchangeSession] = ()) -> list[str]:
        self.refresh()
        errs = []
        shielded = self.shielded()
        pub = self.ledger.v_pub_balances
        colours = set(shielded) | set(pub) | set(self.ledger.minted)
        for c in sorted(colours):
            minted = self.ledger.minted.get(c, 0)
            held = shielded.get(c, 0) + pub.get(c, 0)
            if minted != held:
                errs.append(f"conservation colour {c}: minted {minted} != held {held}")
        nf_leaves = [leaf for leaf, kind in self.ledger.tree.leaves if kind is LeafKind.NULLIFIER]
        if len(nf_leaves) != len(set(nf_leaves)) or set(nf_leaves) != self.ledger.nullifier_set:
            errs.append("nullifier set does not match nullifier leaves")
        for s in sessions:
            states = [*s.history, s.state]
            for a, b in zip(states, states[1:]):
                if (a, b) not in TRANSITIONS:
                    errs.append(f"illegal session transition {a.value} -> {b.value}")
        return errs
