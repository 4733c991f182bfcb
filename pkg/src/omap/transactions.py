"""JoinSplit and Mint transactions: wire format and construction."""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from typing import Protocol, Sequence

from . import fieldhash as fh
from .cases import CaseId, classify_case, satisfying_ordering
from .merkle import MerklePath
from .notes import (
    COLOR_MAX,
    NOTE_LEN,
    VALUE_MAX,
    ZERO32,
    Note,
    NoteError,
    commit_note,
    dummy_input,
    finish_commitment,
    inner_commitment,
    nullifier_of,
    serialize_note,
    validate_note,
)
from .primitives import (
    ENC_OVERHEAD,
    SIG_LEN,
    PaymentAddress,
    crh,
    derive_address,
    derive_shared_spending_key,
    encrypt_note,
    new_spending_key,
    prf_spend_auth,
    random_field_bytes,
    sign,
    signature_keypair,
)
from .r1cs.backend import PROOF_LEN, Proof, SetupParams, prove
from .statement import Asset, PublicInput, Witness

MEMO_LEN = 64
ENC_LEN = NOTE_LEN + ENC_OVERHEAD
_ASSET = struct.Struct(">IQ")


class BuildError(Exception):
    pass


def compute_h_sig(nf1: bytes, nf2: bytes, pk_sig: bytes) -> bytes:
    return fh.reduce_digest(crh(nf1 + nf2 + pk_sig))


# -- wire format ----------------------------------------------------------------

# (name, width); None width marks an (color, amount) pair
_TX_LAYOUT: tuple[tuple[str, int | None], ...] = (
    ("rt", 32), ("nf_old_1", 32), ("nf_old_2", 32), ("cm_new_1", 32), ("cm_new_2", 32),
    ("v_pub_old", None), ("v_pub_new", None),
    ("memo", MEMO_LEN), ("pk_sig", 32), ("h_sig", 32), ("h_1", 32), ("h_2", 32),
    ("proof", PROOF_LEN), ("enc_note_1", ENC_LEN), ("enc_note_2", ENC_LEN), ("delta", SIG_LEN),
)
TX_FIELDS = tuple(name for name, _ in _TX_LAYOUT)
TX_LEN = sum(_ASSET.size if w is None else w for _, w in _TX_LAYOUT)


@dataclass(frozen=True)
class JoinSplitTransaction:
    rt: bytes
    nf_old_1: bytes
    nf_old_2: bytes
    cm_new_1: bytes
    cm_new_2: bytes
    v_pub_old: Asset
    v_pub_new: Asset
    memo: bytes
    pk_sig: bytes
    h_sig: bytes
    h_1: bytes
    h_2: bytes
    proof: bytes
    enc_note_1: bytes
    enc_note_2: bytes
    delta: bytes

    def chi(self, block_n: int) -> PublicInput:
        """The statement this transaction claims, at ledger height ``block_n``."""
        return PublicInput(
            self.rt, self.nf_old_1, self.nf_old_2, self.cm_new_1, self.cm_new_2,
            self.v_pub_old, self.v_pub_new, block_n, self.h_sig, self.h_1, self.h_2,
        )

    def serialize(self) -> bytes:
        out = []
        for name, width in _TX_LAYOUT:
            v = getattr(self, name)
            if width is None:
                out.append(_ASSET.pack(*v))
            else:
                if len(v) != width:
                    raise ValueError(f"{name} must be {width} bytes")
                out.append(v)
        return b"".join(out)

    @classmethod
    def deserialize(cls, b: bytes) -> "JoinSplitTransaction":
        if len(b) != TX_LEN:
            raise ValueError(f"transaction must be {TX_LEN} bytes, got {len(b)}")
        vals = {}
        off = 0
        for name, width in _TX_LAYOUT:
            if width is None:
                vals[name] = _ASSET.unpack_from(b, off)
                off += _ASSET.size
            else:
                vals[name] = b[off:off + width]
                off += width
        return cls(**vals)

    @property
    def txid(self) -> bytes:
        return crh(self.serialize())


def signed_message(chi: PublicInput, proof: bytes, memo: bytes, enc1: bytes, enc2: bytes) -> bytes:
    return chi.encode() + proof + memo + enc1 + enc2


@dataclass(frozen=True)
class MintTransaction:
    cm: bytes
    color: int
    v: int
    inner: bytes
    enc_note: bytes

    def serialize(self) -> bytes:
        return self.cm + _ASSET.pack(self.color, self.v) + self.inner + self.enc_note


def mint_commitment_ok(tx: MintTransaction) -> bool:
    if not (fh.is_canonical(tx.inner) and fh.is_canonical(tx.cm)):
        return False
    return finish_commitment(fh.to_field(tx.inner), 0, tx.color, tx.v, 0, 0, 0) == tx.cm


def build_mint(recipient: PaymentAddress, color: int, v: int, rng: random.Random) -> tuple[MintTransaction, Note]:
    if not 1 <= color <= COLOR_MAX:
        raise BuildError("mint colour must be in 1..2^32-1 (0 is the dummy colour)")
    if not 0 <= v <= VALUE_MAX:
        raise BuildError("mint value out of range")
    note = Note(recipient.a_pk, 0, color, v, 0, 0, 0, random_field_bytes(rng), random_field_bytes(rng))
    validate_note(note)
    k = inner_commitment(note.a_pk, note.rho, note.gamma, note.pair_tag)
    enc = encrypt_note(recipient.enc_pk, serialize_note(note), rng)
    return MintTransaction(note.cm, color, v, fh.from_field(k), enc), note


# -- JoinSplit construction --------------------------------------------------------


class LedgerView(Protocol):
    depth: int
    block_n: int

    @property
    def root(self) -> bytes: ...

    def path(self, pos: int) -> MerklePath: ...


@dataclass(frozen=True)
class SpendInput:
    note: Note
    a_sk: bytes = field(repr=False)
    position: int


@dataclass(frozen=True)
class SharedRecipient:
    """Owner is the key derived from a shared secret and this transaction's h_sig."""

    secret: bytes = field(repr=False)


Recipient = PaymentAddress | SharedRecipient


@dataclass(frozen=True)
class OutputSpec:
    recipient: Recipient
    color1: int
    v1: int
    color2: int = 0
    v2: int = 0
    bt: int = 0
    s: int = 0


@dataclass(frozen=True)
class SiblingEvidence:
    """What a sibling spender needs to show its paired primary was spent."""

    primary: Note
    a_sk: bytes = field(repr=False)
    position: int
    nf: bytes
    nf_position: int


@dataclass
class PreparedJoinSplit:
    chi: PublicInput
    omega: Witness
    notes: tuple[Note, Note]
    classified: CaseId
    sk_sig: bytes = field(repr=False)
    pk_sig: bytes
    memo: bytes
    enc: tuple[bytes, bytes]

    def finalize(self, proof: bytes) -> JoinSplitTransaction:
        chi = self.chi
        m = signed_message(chi, proof, self.memo, *self.enc)
        return JoinSplitTransaction(
            chi.rt, chi.nf_old_1, chi.nf_old_2, chi.cm_new_1, chi.cm_new_2,
            chi.v_pub_old, chi.v_pub_new, self.memo, self.pk_sig, chi.h_sig, chi.h_1, chi.h_2,
            proof, self.enc[0], self.enc[1], sign(self.sk_sig, m),
        )


@dataclass
class BuildResult:
    tx: JoinSplitTransaction
    notes: tuple[Note, Note]
    case: CaseId
    chi: PublicInput
    shared_keys: tuple[bytes | None, bytes | None]


def _throwaway_address(rng: random.Random) -> PaymentAddress:
    return derive_address(new_spending_key(rng))


def prepare_joinsplit(
    ledger: LedgerView,
    inputs: Sequence[SpendInput],
    outputs: Sequence[OutputSpec],
    rng: random.Random,
    v_pub_old: Asset = (0, 0),
    v_pub_new: Asset = (0, 0),
    evidence: SiblingEvidence | None = None,
    memo: bytes = b"",
) -> tuple[PreparedJoinSplit, tuple[bytes | None, bytes | None]]:
    """Assemble chi, omega and the encrypted outputs; no proof yet."""
    if len(inputs) > 2 or len(outputs) > 2:
        raise BuildError("at most two inputs and two outputs")
    if len(memo) > MEMO_LEN:
        raise BuildError(f"memo longer than {MEMO_LEN} bytes")
    depth = ledger.depth
    ins: list[tuple[Note, bytes, MerklePath, int]] = []
    for si in inputs:
        ins.append((si.note, si.a_sk, ledger.path(si.position), 0))
    while len(ins) < 2:
        d = dummy_input(rng)
        ins.append((d.note, d.a_sk, MerklePath.zero(depth), 1))
    try:
        nf1, nf2 = (nullifier_of(n, sk) for n, sk, _, _ in ins)
    except NoteError as e:
        raise BuildError(str(e)) from None
    if nf1 == nf2:
        raise BuildError("both inputs have the same nullifier")

    kp = signature_keypair(rng)
    h_sig = compute_h_sig(nf1, nf2, kp.pk_sig)
    phi = random_field_bytes(rng)
    phi_f, h_f = fh.to_field(phi), fh.to_field(h_sig)

    specs = list(outputs)
    while len(specs) < 2:
        specs.append(OutputSpec(_throwaway_address(rng), 0, 0))
    new_notes = []
    encs = []
    shared: list[bytes | None] = []
    for j, spec in enumerate(specs, 1):
        if isinstance(spec.recipient, SharedRecipient):
            key = derive_shared_spending_key(spec.recipient.secret, h_sig)
            addr = derive_address(key)
            shared.append(key)
        else:
            addr = spec.recipient
            shared.append(None)
        rho = fh.from_field(fh.prf_rho_field(phi_f, j, h_f))
        n = Note(addr.a_pk, spec.s, spec.color1, spec.v1, spec.color2, spec.v2, spec.bt, rho,
                 random_field_bytes(rng), h_sig)
        try:
            validate_note(n)
        except NoteError as e:
            raise BuildError(f"output {j}: {e}") from None
        new_notes.append(n)
        encs.append(encrypt_note(addr.enc_pk, serialize_note(n), rng))

    h1 = fh.reduce_digest(prf_spend_auth(ins[0][1], 1, h_sig))
    h2 = fh.reduce_digest(prf_spend_auth(ins[1][1], 2, h_sig))
    chi = PublicInput(
        ledger.root, nf1, nf2, commit_note(new_notes[0]), commit_note(new_notes[1]),
        tuple(v_pub_old), tuple(v_pub_new), ledger.block_n, h_sig, h1, h2,
    )
    if evidence is None:
        ev = dict(path_3=MerklePath.zero(depth), n_old_3=Note(ZERO32, 0, 0, 0, 0, 0, 0, ZERO32, ZERO32),
                  a_sk_3=ZERO32, path_4=MerklePath.zero(depth), nf_old_3=ZERO32)
    else:
        ev = dict(path_3=ledger.path(evidence.position), n_old_3=evidence.primary, a_sk_3=evidence.a_sk,
                  path_4=ledger.path(evidence.nf_position), nf_old_3=evidence.nf)
    omega = Witness(
        path_1=ins[0][2], path_2=ins[1][2], n_old_1=ins[0][0], n_old_2=ins[1][0],
        a_sk_1=ins[0][1], a_sk_2=ins[1][1], phi=phi, dummy_1=ins[0][3], dummy_2=ins[1][3],
        n_new_1=new_notes[0], n_new_2=new_notes[1], **ev,
    )
    case = classify_case(ins[0][0], ins[1][0], new_notes[0], new_notes[1])
    prep = PreparedJoinSplit(chi, omega, (new_notes[0], new_notes[1]), case, kp.sk_sig, kp.pk_sig,
                             memo.ljust(MEMO_LEN, b"\x00"), (encs[0], encs[1]))
    return prep, (shared[0], shared[1])


def build_joinsplit(
    params: SetupParams,
    ledger: LedgerView,
    inputs: Sequence[SpendInput],
    outputs: Sequence[OutputSpec],
    rng: random.Random,
    intent: CaseId | None = None,
    v_pub_old: Asset = (0, 0),
    v_pub_new: Asset = (0, 0),
    evidence: SiblingEvidence | None = None,
    memo: bytes = b"",
) -> BuildResult:
    """Assemble, prove and sign a JoinSplit.

    Raises :class:`omap.r1cs.ProofRefused` when the witness does not
    satisfy the circuit (for instance a sibling spent without evidence).
    """
    if intent is CaseId.Disallowed:
        raise BuildError("intended case is disallowed")
    if intent in (CaseId.CompleteByInitiator, CaseId.CompleteSecondScenario) and evidence is None:
        raise BuildError("completion needs evidence that the paired primary was spent")
    prep, shared = prepare_joinsplit(ledger, inputs, outputs, rng, v_pub_old, v_pub_new, evidence, memo)
    case = intent if intent is not None else prep.classified
    hint = None
    if case is not CaseId.Disallowed:
        p = satisfying_ordering(case, prep.chi, prep.omega, params.depth)
        hint = None if p is None else (int(case), p)
    proof = prove(params.pk_joinsplit, prep.chi, prep.omega, hint)
    return BuildResult(prep.finalize(proof.tag), prep.notes, case, prep.chi, shared)


def assemble_statement(prep: PreparedJoinSplit) -> tuple[PublicInput, Witness]:
    return prep.chi, prep.omega


__all__ = [
    "BuildError", "BuildResult", "JoinSplitTransaction", "MintTransaction", "OutputSpec",
    "PreparedJoinSplit", "SharedRecipient", "SiblingEvidence", "SpendInput", "Proof",
    "MEMO_LEN", "TX_LEN", "TX_FIELDS", "build_joinsplit", "build_mint", "compute_h_sig",
    "mint_commitment_ok", "prepare_joinsplit", "signed_message",
]
