import pytest

from casegen import BLUE, GREEN, RED, Desk
from omap.exchange import TRANSITIONS, ExchangeSession, LedgerRejected, Role, SessionError, State
from omap.notes import nullifier_of

DEPTH = 6


def sessions(d, give=(GREEN, 5), ask=(RED, 7), bt=3):
    secret = d.rng.randbytes(32)
    si = ExchangeSession(Role.INITIATOR, d.alice, give, ask, bt, secret)
    sc = ExchangeSession(Role.COUNTERPARTY, d.bob, give, ask, bt, secret)
    return si, sc


@pytest.fixture
def desk():
    return Desk(20, DEPTH)


def test_initiate_builds_pair(desk):
    si, _ = sessions(desk)
    f = [desk.mint(desk.alice, GREEN, 3), desk.mint(desk.alice, GREEN, 2)]
    si.initiate(desk.params, desk.ledger, f, desk.rng)
    assert si.state is State.OFFERED
    assert si.primary_note.short() == "[0,(3,5),(2,7)]"
    assert si.sibling_note.short() == "[1,(2,7),(0,0)]"
    assert abs(si.sibling_pos - si.primary_pos) == 1
    assert si.primary_nf_expected == nullifier_of(si.primary_note, si.primary_key)
    with pytest.raises(SessionError):
        si.initiate(desk.params, desk.ledger, f, desk.rng)


@pytest.mark.parametrize("values,code", [([4], "insufficient-funding"), ([6], "funding-shape"),
                                         ([1, 1, 3], "funding-shape")])
def test_initiate_funding_errors(desk, values, code):
    si, _ = sessions(desk)
    f = [desk.mint(desk.alice, GREEN, v) for v in values]
    with pytest.raises(SessionError) as e:
        si.initiate(desk.params, desk.ledger, f, desk.rng)
    assert e.value.code == code and si.state is State.CREATED


def test_wrong_asset_funding(desk):
    si, _ = sessions(desk)
    with pytest.raises(SessionError) as e:
        si.initiate(desk.params, desk.ledger, [desk.mint(desk.alice, BLUE, 5)], desk.rng)
    assert e.value.code == "wrong-asset"


def offered(desk, **kw):
    si, sc = sessions(desk, **kw)
    si.initiate(desk.params, desk.ledger, [desk.mint(desk.alice, *si.give)], desk.rng)
    assert sc.discover(desk.ledger)
    return si, sc


def test_full_exchange_with_change_and_split(desk):
    si, sc = offered(desk)
    r9 = desk.mint(desk.bob, RED, 9)
    assert si.poll_counterparty(desk.ledger) == "pending"
    sc.respond(desk.params, desk.ledger, r9, desk.rng)
    assert sc.state is State.RESPONDED
    assert desk.bob.balance(desk.ledger) == {GREEN: 5, RED: 2}
    assert si.poll_counterparty(desk.ledger) == "responded"
    with pytest.raises(SessionError) as e:
        si.complete(desk.params, desk.ledger, desk.rng)
    assert e.value.code == "before-threshold"
    desk.ledger.advance_block(4)
    si.complete(desk.params, desk.ledger, desk.rng, split=3)
    assert si.state is State.COMPLETED
    reds = sorted(r.note.v1 for r in desk.alice.notes(desk.ledger) if r.note.color1 == RED)
    assert reds == [3, 4]
    assert desk.alice.balance(desk.ledger) == {RED: 7}
    with pytest.raises(SessionError):
        si.complete(desk.params, desk.ledger, desk.rng)


def test_respond_guards(desk):
    si, sc = offered(desk)
    with pytest.raises(SessionError) as e:
        sc.respond(desk.params, desk.ledger, desk.mint(desk.bob, RED, 6), desk.rng)
    assert e.value.code == "insufficient-payment"
    with pytest.raises(SessionError) as e:
        sc.respond(desk.params, desk.ledger, desk.mint(desk.bob, BLUE, 9), desk.rng)
    assert e.value.code == "wrong-asset"
    desk.ledger.advance_block(4)
    with pytest.raises(SessionError) as e:
        sc.respond(desk.params, desk.ledger, desk.mint(desk.bob, RED, 9), desk.rng)
    assert e.value.code == "expired"
    assert sc.state is State.OFFERED


def test_cancel_path(desk):
    si, sc = offered(desk)
    with pytest.raises(SessionError) as e:
        si.cancel(desk.params, desk.ledger, desk.rng)
    assert e.value.code == "before-threshold"
    desk.ledger.advance_block(4)
    assert si.poll_counterparty(desk.ledger) == "expired"
    si.cancel(desk.params, desk.ledger, desk.rng)
    assert si.state is State.CANCELLED
    assert desk.alice.balance(desk.ledger) == {GREEN: 5}
    assert desk.ledger.is_spent(si.primary_nf_expected)


def test_cancel_after_response_corrects_state(desk):
    si, sc = offered(desk)
    sc.respond(desk.params, desk.ledger, desk.mint(desk.bob, RED, 7), desk.rng)
    desk.ledger.advance_block(4)
    with pytest.raises(SessionError) as e:
        si.cancel(desk.params, desk.ledger, desk.rng)
    assert e.value.code == "already-responded"
    assert si.state is State.RESPONDED and si.evidence is not None
    si.complete(desk.params, desk.ledger, desk.rng)
    assert si.state is State.COMPLETED


def test_complete_without_evidence(desk):
    si, _ = offered(desk)
    desk.ledger.advance_block(4)
    with pytest.raises(SessionError) as e:
        si.complete(desk.params, desk.ledger, desk.rng)
    assert e.value.code == "no-evidence"


def test_lost_race_aborts_counterparty(desk):
    si, sc = offered(desk)
    # a second device holding the same secret answers first
    twin = ExchangeSession(Role.COUNTERPARTY, desk.bob, sc.give, sc.ask, sc.bt, sc.shared_secret)
    assert twin.discover(desk.ledger)
    r9, r8 = desk.mint(desk.bob, RED, 9), desk.mint(desk.bob, RED, 8)
    twin.respond(desk.params, desk.ledger, r8, desk.rng)
    with pytest.raises(LedgerRejected) as e:
        sc.respond(desk.params, desk.ledger, r9, desk.rng)
    assert e.value.code == "duplicate-nullifier"
    assert sc.state is State.ABORTED and twin.state is State.RESPONDED


def test_transition_table():
    assert (State.RESPONDED, State.CANCELLED) not in TRANSITIONS
    assert (State.CANCELLED, State.COMPLETED) not in TRANSITIONS
    assert (State.OFFERED, State.COMPLETED) not in TRANSITIONS


def test_role_checks(desk):
    si, sc = offered(desk)
    with pytest.raises(SessionError):
        sc.cancel(desk.params, desk.ledger, desk.rng)
    with pytest.raises(SessionError):
        si.respond(desk.params, desk.ledger, desk.mint(desk.alice, RED, 9), desk.rng)
