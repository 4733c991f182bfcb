import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from omap import fieldhash as fh
from omap.notes import (
    NOTE_LEN,
    Note,
    NoteError,
    NotePair,
    commit_note,
    deserialize_note,
    dummy_input,
    finish_commitment,
    inner_commitment,
    make_exchange_pair,
    note_errors,
    nullifier_of,
    serialize_note,
    with_fields,
)
from omap.primitives import derive_address, new_spending_key, random_field_bytes

rng = random.Random(7)
SK = new_spending_key(rng)
PK = derive_address(SK).a_pk


def plain(color=3, v=5, **kw):
    n = Note(PK, 0, color, v, 0, 0, 0, random_field_bytes(rng), random_field_bytes(rng))
    return with_fields(n, **kw)


def test_layout_length():
    assert NOTE_LEN == 157
    assert len(serialize_note(plain())) == 157


@given(st.integers(1, 2**32 - 1), st.integers(0, 2**64 - 1), st.integers(0, 2**32 - 1))
def test_serialize_roundtrip(color, v, bt):
    n = plain(color, v, bt=bt)
    assert deserialize_note(serialize_note(n)) == n


def test_commitment_oracle():
    # absorb order: hiding fields first, then type/value fields
    n = plain(3, 5, bt=9)
    h = fh.TAG_CM
    for x in (n.a_pk, n.rho, n.gamma, n.pair_tag):
        h = fh.compress(h, fh.to_field(x))
    for x in (n.s, n.color1, n.v1, n.color2, n.v2, n.bt):
        h = fh.compress(h, x)
    assert commit_note(n) == fh.from_field(h)
    assert finish_commitment(inner_commitment(n.a_pk, n.rho, n.gamma, n.pair_tag), 0, 3, 5, 0, 0, 9) == n.cm


def test_commitment_binds_every_field():
    n = plain(3, 5)
    base = commit_note(n)
    for kw in ({"v1": 6}, {"color1": 4}, {"bt": 1}, {"gamma": random_field_bytes(rng)},
               {"rho": random_field_bytes(rng)}, {"pair_tag": random_field_bytes(rng)}):
        assert commit_note(with_fields(n, **kw)) != base


def test_hiding_randomness():
    a, b = plain(3, 5), plain(3, 5)
    assert a.cm != b.cm


def test_nullifier_needs_owner():
    n = plain()
    nf = nullifier_of(n, SK)
    assert nf == fh.from_field(fh.hc(fh.TAG_NF, fh.to_field(SK), fh.to_field(n.rho)))
    with pytest.raises(NoteError):
        nullifier_of(n, new_spending_key(rng))


@pytest.mark.parametrize("kw,msg", [
    ({"s": 2}, "s must"),
    ({"color2": 4}, "together"),
    ({"v2": 4}, "together"),
    ({"s": 1, "color2": 4, "v2": 1}, "sibling"),
    ({"color1": 0}, "dummy"),
    ({"v1": 2**64}, "v1 out of range"),
    ({"rho": fh.P.to_bytes(32, "big")}, "rho"),
])
def test_note_validation(kw, msg):
    errs = note_errors(plain(**kw))
    assert any(msg in e for e in errs), errs
    with pytest.raises(NoteError):
        commit_note(plain(**kw))


def test_dummy_is_valid():
    d = dummy_input(rng)
    assert d.note.is_dummy and not note_errors(d.note)
    nullifier_of(d.note, d.a_sk)


def test_exchange_pair_shape():
    h_sig = random_field_bytes(rng)
    pair = make_exchange_pair(PK, PK, (3, 5), (2, 7), 10, h_sig, random_field_bytes(rng), rng)
    assert pair.primary.short() == "[0,(3,5),(2,7)]"
    assert pair.sibling.short() == "[1,(2,7),(0,0)]"
    assert pair.primary.pair_tag == pair.sibling.pair_tag == h_sig
    assert pair.primary.rho != pair.sibling.rho
    with pytest.raises(NoteError):
        NotePair(pair.primary, with_fields(pair.sibling, v1=6))
    with pytest.raises(NoteError):
        make_exchange_pair(PK, PK, (3, 0), (2, 7), 10, h_sig, random_field_bytes(rng), rng)


def test_net_values():
    n = plain(3, 5, color2=2, v2=7)
    assert n.net_values() == {3: 5, 2: -7}
    assert plain(3, 4, color2=3, v2=1).net_values() == {3: 3}
