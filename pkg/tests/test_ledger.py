from dataclasses import replace

import pytest

from casegen import BLUE, GREEN, RED, Desk
from omap.ledger import RejectReason, Verdict
from omap.merkle import LeafKind, verify_path
from omap.transactions import OutputSpec, build_joinsplit, build_mint

DEPTH = 6

def pay(d, src, note, dst, v, color=GREEN):
    outs = [OutputSpec(dst.public, color, v)]
    if note.note.v1 > v:
        outs.append(OutputSpec(src.public, color, note.note.v1 - v))
    return build_joinsplit(d.params, d.ledger, [src.spend(note)], outs, d.rng).tx

@pytest.fixture
def desk():
    return Desk(10, DEPTH)

def test_mint_appends_and_credits(desk):
    desk.mint(desk.alice, GREEN, 5)
    assert len(desk.ledger.tree) == 1 and desk.ledger.minted == {GREEN: 5}
    desk.mint(desk.alice, GREEN, 5)
    a, b = desk.ledger.tree.leaves
    assert a != b

def test_mint_rejects_bad_ranges(desk):
    tx, _ = build_mint(desk.alice.public, GREEN, 5, desk.rng)
    assert str(desk.ledger.apply_mint(replace(tx, color=0))) == "reject malformed"
    assert str(desk.ledger.apply_mint(replace(tx, v=2**64))) == "reject malformed"
    assert str(desk.ledger.apply_mint(replace(tx, v=6))) == "reject malformed"
    assert len(desk.ledger.tree) == 0

def test_leaf_order_and_positions(desk):
    g = desk.mint(desk.alice, GREEN, 5)
    tx = pay(desk, desk.alice, g, desk.bob, 3)
    v = desk.ledger.verify_and_append(tx)
    assert v.positions == (1, 2, 3, 4)
    kinds = [k for _, k in desk.ledger.tree.leaves]
    assert kinds == [LeafKind.COMMITMENT] * 3 + [LeafKind.NULLIFIER] * 2
    assert desk.ledger.tree.leaves[3][0] == tx.nf_old_1

def test_rejections(desk):
    led = desk.ledger
    g = desk.mint(desk.alice, GREEN, 5)
    tx = pay(desk, desk.alice, g, desk.bob, 3)
    assert str(led.check(replace(tx, nf_old_2=tx.nf_old_1))) == "reject duplicate-nullifier"
    assert str(led.check(replace(tx, rt=bytes(32)))) == "reject unknown-root"
    assert str(led.check(replace(tx, h_sig=bytes(32)))) == "reject h-sig-mismatch"
    assert str(led.check(replace(tx, proof=bytes(32)))) == "reject invalid-proof"
    assert str(led.check(replace(tx, cm_new_1=tx.cm_new_2))) == "reject invalid-proof"
    assert str(led.check(replace(tx, memo=b"\x01" * 64))) == "reject invalid-signature"
    assert str(led.check(replace(tx, memo=b"\x01"))) == "reject malformed"
    assert led.verify_and_append(tx)
    assert str(led.verify_and_append(tx)) == "reject duplicate-nullifier"

def test_proof_bound_to_height(desk):
    g = desk.mint(desk.alice, GREEN, 5)
    tx = pay(desk, desk.alice, g, desk.bob, 3)
    desk.ledger.advance_block()
    assert desk.ledger.check(tx).reason is RejectReason.INVALID_PROOF

def test_stale_root_accepted(desk):
    g1 = desk.mint(desk.alice, GREEN, 5)
    tx = pay(desk, desk.alice, g1, desk.bob, 3)
    desk.mint(desk.carol, RED, 1)
    assert desk.ledger.root != tx.rt
    assert desk.ledger.verify_and_append(tx)

def test_public_value_pool(desk):
    led = desk.ledger
    g = desk.mint(desk.alice, GREEN, 5)
    # withdraw 2 green into the transparent pool, then spend it back in
    tx = build_joinsplit(desk.params, led, [desk.alice.spend(g)], [OutputSpec(desk.alice.public, GREEN, 3)],
                         desk.rng, v_pub_new=(GREEN, 2)).tx
    assert led.verify_and_append(tx)
    assert led.v_pub_balances == {GREEN: 2}
    greedy = build_joinsplit(desk.params, led, [], [OutputSpec(desk.bob.public, GREEN, 3)], desk.rng,
                             v_pub_old=(GREEN, 3)).tx
    assert str(led.verify_and_append(greedy)) == "reject insufficient-public-value"
    ok = build_joinsplit(desk.params, led, [], [OutputSpec(desk.bob.public, GREEN, 2)], desk.rng,
                         v_pub_old=(GREEN, 2)).tx
    assert led.verify_and_append(ok)
    assert led.v_pub_balances == {GREEN: 0}

def test_scans(desk):
    led = desk.ledger
    g = desk.mint(desk.alice, GREEN, 5)
    tx = pay(desk, desk.alice, g, desk.bob, 3)
    led.verify_and_append(tx)
    bob = led.scan_receive(desk.bob.address.enc_sk, desk.bob.a_sk)
    assert [(r.note.v1, r.spendable) for r in bob] == [(3, True)]
    alice = led.scan_receive(desk.alice.address.enc_sk, desk.alice.a_sk)
    assert [(r.note.v1, r.spendable) for r in alice] == [(5, False), (2, True)]
    assert led.scan_transaction(1, desk.bob.address.enc_sk, desk.bob.a_sk)[0].note == bob[0].note
    hit = led.scan_nullifier(tx.nf_old_1)
    assert hit is not None and verify_path(led.root, tx.nf_old_1, hit[1], LeafKind.NULLIFIER)
    assert led.scan_nullifier(bytes(32)) is None

def test_nullifier_set_mirrors_leaves(desk):
    led = desk.ledger
    for color in (GREEN, RED, BLUE):
        n = desk.mint(desk.alice, color, 4)
        assert led.verify_and_append(pay(desk, desk.alice, n, desk.bob, 1, color))
    leaves = [v for v, k in led.tree.leaves if k is LeafKind.NULLIFIER]
    assert len(leaves) == len(set(leaves)) == len(led.nullifier_set) == 6

def test_replay_from_genesis_is_identical():
    def run():
        d = Desk(77, DEPTH)
        g = d.mint(d.alice, GREEN, 5)
        d.ledger.verify_and_append(pay(d, d.alice, g, d.bob, 3))
        d.ledger.advance_block(2)
        return d.ledger.dump()

    a, b = run(), run()
    assert a == b
    assert a.startswith("# block_n 2 root ")
    assert a.splitlines()[1].startswith("cm 0 ")

def test_verdict_text():
    assert str(Verdict(True)) == "accept"
    assert not Verdict(False, RejectReason.MALFORMED)
    with pytest.raises(ValueError):
        Desk(1, DEPTH).ledger.advance_block(0)
