"""Multi-asset notes: layout, commitment, pairing and nullifiers."""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field, replace
from functools import cached_property

from . import fieldhash as fh
from .primitives import derive_address, new_spending_key, random_field_bytes

COLOR_BITS = 32
VALUE_BITS = 64
HEIGHT_BITS = 32
COLOR_MAX = 2**COLOR_BITS - 1
VALUE_MAX = 2**VALUE_BITS - 1
HEIGHT_MAX = 2**HEIGHT_BITS - 1

_LAYOUT = struct.Struct(">32sBIQIQI32s32s32s")
NOTE_LEN = _LAYOUT.size  # 157
ZERO32 = bytes(32)


class NoteError(ValueError):
    pass


@dataclass(frozen=True)
class Note:
    a_pk: bytes
    s: int
    color1: int
    v1: int
    color2: int
    v2: int
    bt: int
    rho: bytes
    gamma: bytes
    pair_tag: bytes = ZERO32

    @property
    def is_sibling(self) -> bool:
        return self.s == 1

    @property
    def has_debt(self) -> bool:
        return self.v2 > 0

    @property
    def is_dummy(self) -> bool:
        return self.color1 == 0

    @cached_property
    def cm(self) -> bytes:
        return commit_note(self)

    def short(self) -> str:
        """Compact ``[s,(c1,v1),(c2,v2)]`` rendering."""
        return f"[{self.s},({self.color1},{self.v1}),({self.color2},{self.v2})]"

    def net_values(self) -> dict[int, int]:
        out: dict[int, int] = {}
        if self.v1:
            out[self.color1] = out.get(self.color1, 0) + self.v1
        if self.v2:
            out[self.color2] = out.get(self.color2, 0) - self.v2
        return out


def note_errors(n: Note) -> list[str]:
    errs = []
    for name in ("a_pk", "rho", "gamma", "pair_tag"):
        if not fh.is_canonical(getattr(n, name)):
            errs.append(f"{name} is not a 32-byte field element")
    if n.s not in (0, 1):
        errs.append("s must be 0 or 1")
    for name, hi in (("color1", COLOR_MAX), ("color2", COLOR_MAX), ("bt", HEIGHT_MAX), ("v1", VALUE_MAX), ("v2", VALUE_MAX)):
        v = getattr(n, name)
        if not isinstance(v, int) or not 0 <= v <= hi:
            errs.append(f"{name} out of range")
    if errs:
        return errs
    if (n.color2 == 0) != (n.v2 == 0):
        errs.append("debt colour and value must be zero together")
    if n.s == 1 and n.color2:
        errs.append("a sibling note carries no debt")
    if n.color1 == 0 and (n.v1 or n.color2 or n.s):
        errs.append("a dummy-coloured note must be all zero")
    return errs


def validate_note(n: Note) -> Note:
    errs = note_errors(n)
    if errs:
        raise NoteError("; ".join(errs))
    return n


def serialize_note(n: Note) -> bytes:
    return _LAYOUT.pack(n.a_pk, n.s, n.color1, n.v1, n.color2, n.v2, n.bt, n.rho, n.gamma, n.pair_tag)


def deserialize_note(b: bytes) -> Note:
    if len(b) != NOTE_LEN:
        raise NoteError(f"note plaintext must be {NOTE_LEN} bytes, got {len(b)}")
    return Note(*_LAYOUT.unpack(b))


def inner_commitment(a_pk: bytes, rho: bytes, gamma: bytes, pair_tag: bytes) -> int:
    """Chaining value after the hiding fields; published by mints."""
    return fh.hc(fh.TAG_CM, *(fh.to_field(x) for x in (a_pk, rho, gamma, pair_tag)))


def finish_commitment(inner: int, s: int, color1: int, v1: int, color2: int, v2: int, bt: int) -> bytes:
    h = inner
    for x in (s, color1, v1, color2, v2, bt):
        h = fh.compress(h, x)
    return fh.from_field(h)


def commit_note(n: Note) -> bytes:
    validate_note(n)
    inner = inner_commitment(n.a_pk, n.rho, n.gamma, n.pair_tag)
    return finish_commitment(inner, n.s, n.color1, n.v1, n.color2, n.v2, n.bt)


def nullifier_of(n: Note, a_sk: bytes) -> bytes:
    if derive_address(a_sk).a_pk != n.a_pk:
        raise NoteError("spending key does not own this note")
    return fh.from_field(fh.prf_nf_field(fh.to_field(a_sk), fh.to_field(n.rho)))


@dataclass(frozen=True)
class NotePair:
    primary: Note
    sibling: Note

    def __post_init__(self):
        p, q = self.primary, self.sibling
        ok = (
            p.s == 0 and q.s == 1
            and p.pair_tag == q.pair_tag
            and p.bt == q.bt
            and p.color2 == q.color1 and p.v2 == q.v1
            and q.v2 == 0 and p.v2 > 0
        )
        if not ok:
            raise NoteError("primary/sibling pairing invariants violated")


def make_exchange_pair(
    a_pk_shared: bytes,
    a_pk_self: bytes,
    give: tuple[int, int],
    ask: tuple[int, int],
    bt: int,
    h_sig: bytes,
    phi: bytes,
    rng: random.Random,
) -> NotePair:
    (gc, gv), (ac, av) = give, ask
    if gc == 0 or ac == 0:
        raise NoteError("exchange colours must be non-zero")
    if gv <= 0 or av <= 0:
        raise NoteError("exchange amounts must be positive")
    phi_f, h_f = fh.to_field(phi), fh.to_field(h_sig)
    rho1 = fh.from_field(fh.prf_rho_field(phi_f, 1, h_f))
    rho2 = fh.from_field(fh.prf_rho_field(phi_f, 2, h_f))
    primary = Note(a_pk_shared, 0, gc, gv, ac, av, bt, rho1, random_field_bytes(rng), h_sig)
    sibling = Note(a_pk_self, 1, ac, av, 0, 0, bt, rho2, random_field_bytes(rng), h_sig)
    return NotePair(validate_note(primary), validate_note(sibling))


@dataclass(frozen=True)
class DummyInput:
    note: Note
    a_sk: bytes = field(repr=False)


def dummy_input(rng: random.Random) -> DummyInput:
    a_sk = new_spending_key(rng)
    note = Note(derive_address(a_sk).a_pk, 0, 0, 0, 0, 0, 0, random_field_bytes(rng), random_field_bytes(rng))
    return DummyInput(note, a_sk)


ZERO_NOTE = Note(ZERO32, 0, 0, 0, 0, 0, 0, ZERO32, ZERO32, ZERO32)


def with_fields(n: Note, **kw) -> Note:
    return replace(n, **kw)
