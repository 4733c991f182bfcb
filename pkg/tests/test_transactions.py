import random
from dataclasses import fields, replace

import pytest

from casegen import GREEN, Desk, case_transactions
from omap.cases import CaseId
from omap.r1cs.backend import ProofRefused
from omap.transactions import (
    MEMO_LEN,
    TX_FIELDS,
    TX_LEN,
    BuildError,
    JoinSplitTransaction,
    OutputSpec,
    build_joinsplit,
    build_mint,
    compute_h_sig,
    mint_commitment_ok,
    signed_message,
)
from omap.primitives import verify_sig

DEPTH = 6


@pytest.fixture(scope="module")
def txs():
    return case_transactions(3, DEPTH)


def test_wire_size():
    # 5 digests, 2 public assets, memo, pk_sig, h_sig, h_1, h_2, proof, 2 ciphertexts, signature
    assert TX_LEN == 5 * 32 + 2 * 12 + MEMO_LEN + 4 * 32 + 32 + 2 * 237 + 64 == 946


def test_no_case_field():
    names = {f.name for f in fields(JoinSplitTransaction)}
    assert names == set(TX_FIELDS)
    assert not any("case" in n or "kind" in n or "type" in n for n in names)


def test_same_length_every_case(txs):
    assert {c for c, _ in txs.values()} == set(CaseId) - {CaseId.Disallowed}
    lengths = {label: len(tx.serialize()) for label, (_, tx) in txs.items()}
    assert set(lengths.values()) == {TX_LEN}
    for _, tx in txs.values():
        assert len(tx.proof) == 32


def test_roundtrip_and_offsets(txs):
    widths = {"v_pub_old": 12, "v_pub_new": 12}
    for _, tx in txs.values():
        raw = tx.serialize()
        assert JoinSplitTransaction.deserialize(raw) == tx
        off = 0
        for name in TX_FIELDS:
            v = getattr(tx, name)
            w = widths.get(name, len(v) if isinstance(v, bytes) else 0)
            if isinstance(v, bytes):
                assert raw[off:off + w] == v, name
            off += w
        assert off == TX_LEN


def test_deserialize_rejects_bad_length():
    with pytest.raises(ValueError):
        JoinSplitTransaction.deserialize(b"\x00" * (TX_LEN - 1))


def test_signature_covers_everything(txs):
    _, tx = txs["respond"]
    chi = tx.chi(0)
    m = signed_message(chi, tx.proof, tx.memo, tx.enc_note_1, tx.enc_note_2)
    assert verify_sig(tx.pk_sig, m, tx.delta)
    for name, new in (("memo", b"\x01" * MEMO_LEN), ("proof", bytes(32)), ("cm_new_1", tx.cm_new_2)):
        t2 = replace(tx, **{name: new})
        m2 = signed_message(t2.chi(0), t2.proof, t2.memo, t2.enc_note_1, t2.enc_note_2)
        assert not verify_sig(tx.pk_sig, m2, tx.delta), name


def test_h_sig_binds_nullifiers(txs):
    _, tx = txs["default"]
    assert tx.h_sig == compute_h_sig(tx.nf_old_1, tx.nf_old_2, tx.pk_sig)
    assert tx.h_sig != compute_h_sig(tx.nf_old_2, tx.nf_old_1, tx.pk_sig)


def test_mint_commitment_check():
    rng = random.Random(1)
    d = Desk(1, DEPTH)
    tx, note = build_mint(d.alice.public, GREEN, 5, rng)
    assert mint_commitment_ok(tx) and tx.cm == note.cm
    assert not mint_commitment_ok(replace(tx, v=6))
    assert not mint_commitment_ok(replace(tx, color=2))


def test_builder_limits():
    d = Desk(2, DEPTH)
    g = d.mint(d.alice, GREEN, 5)
    with pytest.raises(BuildError):
        build_joinsplit(d.params, d.ledger, [d.alice.spend(g)] * 3, [], d.rng)
    with pytest.raises(BuildError):
        build_joinsplit(d.params, d.ledger, [d.alice.spend(g)], [OutputSpec(d.bob.public, GREEN, 5)], d.rng,
                        memo=b"x" * (MEMO_LEN + 1))
    with pytest.raises(BuildError):
        build_joinsplit(d.params, d.ledger, [d.alice.spend(g), d.alice.spend(g)],
                        [OutputSpec(d.bob.public, GREEN, 5)], d.rng)
    with pytest.raises(BuildError):
        build_joinsplit(d.params, d.ledger, [d.alice.spend(g)], [OutputSpec(d.bob.public, GREEN, 5)], d.rng,
                        intent=CaseId.CompleteByInitiator)


def test_value_creation_refused():
    d = Desk(3, DEPTH)
    g = d.mint(d.alice, GREEN, 5)
    with pytest.raises(ProofRefused):
        build_joinsplit(d.params, d.ledger, [d.alice.spend(g)], [OutputSpec(d.bob.public, GREEN, 6)], d.rng)
    with pytest.raises(ProofRefused):
        build_joinsplit(d.params, d.ledger, [d.alice.spend(g)], [OutputSpec(d.bob.public, 2, 5)], d.rng)


def test_honest_payment_accepted():
    d = Desk(4, DEPTH)
    g = d.mint(d.alice, GREEN, 5)
    res = build_joinsplit(d.params, d.ledger, [d.alice.spend(g)],
                          [OutputSpec(d.bob.public, GREEN, 3), OutputSpec(d.alice.public, GREEN, 2)], d.rng)
    assert res.case is CaseId.DefaultPayment
    assert d.ledger.verify_and_append(res.tx)
    assert [r.note.v1 for r in d.bob.notes(d.ledger)] == [3]
