"""Append-only single-node ledger."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

from .merkle import CombinedTree, LeafKind, MerklePath
from .notes import COLOR_MAX, VALUE_MAX, Note, NoteError, deserialize_note, nullifier_of
from .primitives import decrypt_note, derive_address, verify_sig
from .r1cs.backend import SetupParams, verify
from .transactions import (
    JoinSplitTransaction,
    MintTransaction,
    compute_h_sig,
    mint_commitment_ok,
    signed_message,
)


class RejectReason(str, Enum):
    INVALID_PROOF = "invalid-proof"
    INVALID_SIGNATURE = "invalid-signature"
    DUPLICATE_NULLIFIER = "duplicate-nullifier"
    UNKNOWN_ROOT = "unknown-root"
    H_SIG_MISMATCH = "h-sig-mismatch"
    INSUFFICIENT_PUBLIC_VALUE = "insufficient-public-value"
    MALFORMED = "malformed"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: RejectReason | None = None
    positions: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.accepted

    def __str__(self) -> str:
        return "accept" if self.accepted else f"reject {self.reason.value}"


ACCEPT = Verdict(True)


def _reject(reason: RejectReason) -> Verdict:
    return Verdict(False, reason)


@dataclass(frozen=True)
class Received:
    note: Note
    spendable: bool
    position: int
    nf: bytes


@dataclass
class Ledger:
    params: SetupParams
    block_n: int = 0
    tree: CombinedTree = field(init=False)
    nullifier_set: set[bytes] = field(default_factory=set)
    nf_positions: dict[bytes, int] = field(default_factory=dict)
    transactions: list[JoinSplitTransaction | MintTransaction] = field(default_factory=list)
    v_pub_balances: dict[int, int] = field(default_factory=dict)
    minted: dict[int, int] = field(default_factory=dict)
    # (ciphertext, commitment position, transaction index) for every published note
    _outbox: list[tuple[bytes, int, int]] = field(default_factory=list, repr=False)
    _by_tx: dict[int, list[tuple[bytes, int]]] = field(default_factory=dict, repr=False)
    # per key pair: how far the outbox has been scanned and what was found
    _scans: dict[tuple[bytes, bytes], tuple[int, list[Received]]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.tree = CombinedTree(self.params.depth)

    @property
    def depth(self) -> int:
        return self.tree.depth

    @property
    def root(self) -> bytes:
        return self.tree.root

    def path(self, pos: int) -> MerklePath:
        return self.tree.path(pos)

    def _publish(self, ct: bytes, pos: int) -> None:
        i = len(self.transactions)
        self._outbox.append((ct, pos, i))
        self._by_tx.setdefault(i, []).append((ct, pos))

    def advance_block(self, n: int = 1) -> int:
        if n < 1:
            raise ValueError("can only advance by a positive number of blocks")
        self.block_n += n
        return self.block_n

    # -- verification ------------------------------------------------------------

    def check(self, tx: JoinSplitTransaction) -> Verdict:
        """Verdict for ``tx`` against the current state, without applying it."""
        try:
            tx.serialize()
        except (ValueError, TypeError, OverflowError):
            return _reject(RejectReason.MALFORMED)
        if tx.nf_old_1 == tx.nf_old_2:
            return _reject(RejectReason.DUPLICATE_NULLIFIER)
        if tx.nf_old_1 in self.nullifier_set or tx.nf_old_2 in self.nullifier_set:
            return _reject(RejectReason.DUPLICATE_NULLIFIER)
        if not self.tree.is_known_root(tx.rt):
            return _reject(RejectReason.UNKNOWN_ROOT)
        if tx.h_sig != compute_h_sig(tx.nf_old_1, tx.nf_old_2, tx.pk_sig):
            return _reject(RejectReason.H_SIG_MISMATCH)
        chi = tx.chi(self.block_n)
        if not verify(self.params.vk_joinsplit, chi, tx.proof):
            return _reject(RejectReason.INVALID_PROOF)
        m = signed_message(chi, tx.proof, tx.memo, tx.enc_note_1, tx.enc_note_2)
        if not verify_sig(tx.pk_sig, m, tx.delta):
            return _reject(RejectReason.INVALID_SIGNATURE)
        c, v = tx.v_pub_old
        if v and self.v_pub_balances.get(c, 0) < v:
            return _reject(RejectReason.INSUFFICIENT_PUBLIC_VALUE)
        return ACCEPT

    def verify_and_append(self, tx: JoinSplitTransaction) -> Verdict:
        verdict = self.check(tx)
        if not verdict:
            return verdict
        p1 = self.tree.append(tx.cm_new_1, LeafKind.COMMITMENT)
        p2 = self.tree.append(tx.cm_new_2, LeafKind.COMMITMENT)
        p3 = self.tree.append(tx.nf_old_1, LeafKind.NULLIFIER)
        p4 = self.tree.append(tx.nf_old_2, LeafKind.NULLIFIER)
        for nf, p in ((tx.nf_old_1, p3), (tx.nf_old_2, p4)):
            self.nullifier_set.add(nf)
            self.nf_positions[nf] = p
        self._publish(tx.enc_note_1, p1)
        self._publish(tx.enc_note_2, p2)
        c, v = tx.v_pub_old
        if v:
            self.v_pub_balances[c] -= v
        c, v = tx.v_pub_new
        if v:
            self.v_pub_balances[c] = self.v_pub_balances.get(c, 0) + v
        self.transactions.append(tx)
        return Verdict(True, None, (p1, p2, p3, p4))

    def apply_mint(self, tx: MintTransaction) -> Verdict:
        if not (1 <= tx.color <= COLOR_MAX and 0 <= tx.v <= VALUE_MAX):
            return _reject(RejectReason.MALFORMED)
        if not mint_commitment_ok(tx):
            return _reject(RejectReason.MALFORMED)
        pos = self.tree.append(tx.cm, LeafKind.COMMITMENT)
        self._publish(tx.enc_note, pos)
        self.minted[tx.color] = self.minted.get(tx.color, 0) + tx.v
        self.transactions.append(tx)
        return Verdict(True, None, (pos,))

    # -- wallet-facing queries ------------------------------------------------------

    def _try_receive(self, ct: bytes, pos: int, enc_sk: bytes, a_sk: bytes, a_pk: bytes) -> Received | None:
        pt = decrypt_note(enc_sk, ct)
        if pt is None:
            return None
        try:
            note = deserialize_note(pt)
            if note.a_pk != a_pk or note.cm != self.tree.leaves[pos][0]:
                return None
            nf = nullifier_of(note, a_sk)
        except NoteError:
            return None
        return Received(note, nf not in self.nullifier_set, pos, nf)

    def scan_receive(self, enc_sk: bytes, a_sk: bytes) -> list[Received]:
        """Notes addressed to this key pair, in ledger order.

        Decryption results are cached; spent status is always live.
        """
        done, found = self._scans.get((enc_sk, a_sk), (0, []))
        if done < len(self._outbox):
            a_pk = derive_address(a_sk).a_pk
            found = list(found)
            for ct, pos, _ in self._outbox[done:]:
                r = self._try_receive(ct, pos, enc_sk, a_sk, a_pk)
                if r is not None:
                    found.append(r)
            self._scans[(enc_sk, a_sk)] = (len(self._outbox), found)
        return [r if (r.nf not in self.nullifier_set) == r.spendable else replace(r, spendable=not r.spendable)
                for r in found]

    def scan_transaction(self, index: int, enc_sk: bytes, a_sk: bytes) -> list[Received]:
        """Like :meth:`scan_receive` but limited to one transaction's outputs."""
        a_pk = derive_address(a_sk).a_pk
        out = []
        for ct, pos in self._by_tx.get(index, ()):
            r = self._try_receive(ct, pos, enc_sk, a_sk, a_pk)
            if r is not None:
                out.append(r)
        return out

    def scan_nullifier(self, nf: bytes) -> tuple[int, MerklePath] | None:
        pos = self.nf_positions.get(nf)
        if pos is None:
            return None
        return pos, self.tree.path(pos)

    def is_spent(self, nf: bytes) -> bool:
        return nf in self.nullifier_set

    def dump(self) -> str:
        lines = [f"# block_n {self.block_n} root {self.root.hex()}"]
        for pos, (leaf, kind) in enumerate(self.tree.leaves):
            lines.append(f"{kind.value} {pos} {leaf.hex()}")
        return "\n".join(lines) + "\n"

