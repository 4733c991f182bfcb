"""Spending cases: classification by note shape and the plain-arithmetic
predicate each case's proof attests to.

The predicate is deliberately written without any constraint-system
machinery; it is the oracle the circuit is checked against.
"""

from __future__ import annotations

from enum import IntEnum
from types import SimpleNamespace
from typing import Iterator

from . import fieldhash as fh
from .merkle import LeafKind, MerklePath, verify_path
from .notes import Note, note_errors
from .statement import PublicInput, Witness


class CaseId(IntEnum):
    DefaultPayment = 0
    ExchangeInit = 1
    CancelByInitiator = 2
    CounterpartyResponse = 3
    CompleteByInitiator = 4
    CompleteSecondScenario = 5
    Disallowed = 6


SPENDING_CASES = tuple(c for c in CaseId if c is not CaseId.Disallowed)


def classify_case(n_old_1: Note, n_old_2: Note, n_new_1: Note, n_new_2: Note) -> CaseId:
    """Table-style classification; insensitive to order within inputs or outputs."""
    ins = sorted((n_old_1, n_old_2), key=lambda n: n.s)
    outs = sorted((n_new_1, n_new_2), key=lambda n: n.s)
    in_shape = (ins[0].s, ins[1].s)
    out_shape = (outs[0].s, outs[1].s)
    if in_shape == (1, 1) or out_shape == (1, 1):
        return CaseId.Disallowed
    in_debt = any(n.has_debt for n in ins)
    if out_shape == (0, 1) and not outs[0].has_debt:
        return CaseId.Disallowed
    if out_shape == (0, 0) and any(n.has_debt for n in outs):
        return CaseId.Disallowed
    if in_shape == (0, 0):
        if out_shape == (0, 1):
            return CaseId.ExchangeInit
        return CaseId.CounterpartyResponse if in_debt else CaseId.DefaultPayment
    # one sibling input
    if not in_debt:
        return CaseId.CompleteByInitiator
    if out_shape == (0, 1):
        return CaseId.CancelByInitiator
    primary, sibling = ins
    if primary.pair_tag == sibling.pair_tag:
        return CaseId.CancelByInitiator
    return CaseId.CompleteSecondScenario


# -- predicate ------------------------------------------------------------------


def _digest_ok(*bs: bytes) -> bool:
    return all(isinstance(b, bytes) and fh.is_canonical(b) for b in bs)


def _path_ok(p: MerklePath, depth: int) -> bool:
    return (
        len(p.siblings) == depth
        and _digest_ok(*p.siblings)
        and isinstance(p.pos, int)
        and 0 <= p.pos < 2**depth
    )


def _raw_commit(n: Note) -> int:
    h = fh.TAG_CM
    for x in (fh.to_field(n.a_pk), fh.to_field(n.rho), fh.to_field(n.gamma), fh.to_field(n.pair_tag),
              n.s, n.color1, n.v1, n.color2, n.v2, n.bt):
        h = fh.compress(h, x % fh.P)
    return h


def _well_formed(chi: PublicInput, omega: Witness, depth: int) -> bool:
    if not _digest_ok(chi.rt, chi.nf_old_1, chi.nf_old_2, chi.cm_new_1, chi.cm_new_2, chi.h_sig, chi.h_1, chi.h_2):
        return False
    for c, v in (chi.v_pub_old, chi.v_pub_new):
        if not (0 <= c < 2**32 and 0 <= v < 2**64):
            return False
    if not 0 <= chi.block_n < 2**32:
        return False
    for n in (omega.n_old_1, omega.n_old_2, omega.n_new_1, omega.n_new_2):
        if note_errors(n):
            return False
    n3 = omega.n_old_3
    if not _digest_ok(n3.a_pk, n3.rho, n3.gamma, n3.pair_tag):
        return False
    if not all(isinstance(v, int) and 0 <= v < fh.P for v in (n3.s, n3.color1, n3.v1, n3.color2, n3.v2, n3.bt)):
        return False
    if not _digest_ok(omega.a_sk_1, omega.a_sk_2, omega.a_sk_3, omega.phi, omega.nf_old_3):
        return False
    if omega.dummy_1 not in (0, 1) or omega.dummy_2 not in (0, 1):
        return False
    return all(_path_ok(p, depth) for p in (omega.path_1, omega.path_2, omega.path_3, omega.path_4))


def _view(n: Note, **extra) -> SimpleNamespace:
    return SimpleNamespace(
        s=n.s, c1=n.color1, v1=n.v1, c2=n.color2, v2=n.v2, bt=n.bt, tag=n.pair_tag, **extra
    )


def _common(chi: PublicInput, omega: Witness) -> bool:
    h_sig = fh.to_field(chi.h_sig)
    for n, sk, d, nf, path in (
        (omega.n_old_1, omega.a_sk_1, omega.dummy_1, chi.nf_old_1, omega.path_1),
        (omega.n_old_2, omega.a_sk_2, omega.dummy_2, chi.nf_old_2, omega.path_2),
    ):
        ask = fh.to_field(sk)
        if d and (n.s or n.color1 or n.v1 or n.color2 or n.v2 or n.bt):
            return False
        if fh.prf_nf_field(ask, fh.to_field(n.rho)) != fh.to_field(nf):
            return False
        if fh.prf_addr_field(ask) != fh.to_field(n.a_pk):
            return False
        if not d and not verify_path(chi.rt, fh.from_field(_raw_commit(n)), path):
            return False
    phi = fh.to_field(omega.phi)
    expected = {fh.prf_rho_field(phi, 1, h_sig), fh.prf_rho_field(phi, 2, h_sig)}
    got = {fh.to_field(omega.n_new_1.rho), fh.to_field(omega.n_new_2.rho)}
    if len(expected) != 2 or got != expected:
        return False
    for n, cm in ((omega.n_new_1, chi.cm_new_1), (omega.n_new_2, chi.cm_new_2)):
        if n.pair_tag != chi.h_sig or fh.from_field(_raw_commit(n)) != cm:
            return False
    return True


def _compat(a, b) -> bool:
    return a.c1 == 0 or b.c1 == 0 or a.c1 == b.c1


def _pair(p, q) -> bool:
    return p.v2 > 0 and p.c2 == q.c1 and p.v2 == q.v1 and p.bt == q.bt


def _evidence(chi: PublicInput, omega: Witness, I) -> bool:
    n3 = omega.n_old_3
    ask3 = fh.to_field(omega.a_sk_3)
    return (
        n3.s == 0
        and n3.pair_tag == I.tag
        and verify_path(chi.rt, fh.from_field(_raw_commit(n3)), omega.path_3, LeafKind.COMMITMENT)
        and verify_path(chi.rt, omega.nf_old_3, omega.path_4, LeafKind.NULLIFIER)
        and fh.prf_nf_field(ask3, fh.to_field(n3.rho)) == fh.to_field(omega.nf_old_3)
        and fh.prf_addr_field(ask3) == fh.to_field(n3.a_pk)
        and abs(omega.path_3.pos - I.pos) == 1
    )


def _no_public(chi: PublicInput) -> bool:
    return chi.v_pub_old[1] == 0 and chi.v_pub_new[1] == 0


def _default(chi, omega, I, J, N1, N2) -> bool:
    notes = (I, J, N1, N2)
    if any(n.s or n.v2 for n in notes):
        return False
    if not all(_compat(a, b) for i, a in enumerate(notes) for b in notes[i + 1:]):
        return False
    po, pn = chi.v_pub_old, chi.v_pub_new
    pubs = [c for c, v in (po, pn) if v]
    if any(c != n.c1 for c in pubs for n in notes if n.c1):
        return False
    if len(pubs) == 2 and pubs[0] != pubs[1]:
        return False
    return po[1] + I.v1 + J.v1 == pn[1] + N1.v1 + N2.v1


def _init(chi, omega, I, J, N1, N2) -> bool:
    if not (_no_public(chi) and I.s == J.s == N1.s == 0 and N2.s == 1 and J.v2 == 0):
        return False
    if not (_pair(N1, N2) and N1.c1 == I.c1):
        return False
    if I.v2 == 0:
        return _compat(J, N1) and I.v1 + J.v1 == N1.v1
    # settling an outstanding debt while re-offering the carried asset
    return J.c1 == I.c2 and J.v1 == I.v2 and N1.v1 == I.v1 and chi.block_n <= I.bt


def _cancel(chi, omega, I, J, N1, N2) -> bool:
    if not (_no_public(chi) and I.s == 0 and J.s == 1 and I.tag == J.tag and _pair(I, J)):
        return False
    if not (chi.block_n > I.bt and N1.s == 0 and N1.c1 == I.c1):
        return False
    if N2.s == 0:
        return N1.v2 == 0 and N2.v2 == 0 and _compat(N2, I) and N1.v1 + N2.v1 == I.v1
    return _pair(N1, N2) and N1.v1 == I.v1


def _respond(chi, omega, I, J, N1, N2) -> bool:
    return (
        _no_public(chi)
        and I.s == J.s == N1.s == N2.s == 0
        and I.v2 > 0 and J.v2 == 0 and N1.v2 == 0 and N2.v2 == 0
        and N1.c1 == I.c1 and N1.v1 == I.v1
        and I.c2 == J.c1 == N2.c1
        and J.v1 == I.v2 + N2.v1
        and chi.block_n <= I.bt
    )


def _complete(chi, omega, I, J, N1, N2) -> bool:
    if not (_no_public(chi) and I.s == 1 and J.s == 0 and J.v2 == 0 and chi.block_n > I.bt):
        return False
    if not (N1.s == 0 and N1.c1 == I.c1 and _compat(J, I)):
        return False
    if N2.s == 0:
        ok = N1.v2 == 0 and N2.v2 == 0 and _compat(N2, I) and I.v1 + J.v1 == N1.v1 + N2.v1
    else:
        ok = _pair(N1, N2) and N1.v1 == I.v1 + J.v1
    return ok and _evidence(chi, omega, I)


def _complete2(chi, omega, I, J, N1, N2) -> bool:
    return (
        _no_public(chi)
        and I.s == 1 and J.s == 0 and J.v2 > 0
        and N1.s == N2.s == 0 and N1.v2 == N2.v2 == 0
        and I.c1 == J.c2 and N1.c1 == I.c1 and N2.c1 == J.c1
        and I.v1 == J.v2 + N1.v1 and N2.v1 == J.v1
        and chi.block_n > I.bt and chi.block_n <= J.bt
        and _evidence(chi, omega, I)
    )


_CASE_FNS = {
    CaseId.DefaultPayment: _default,
    CaseId.ExchangeInit: _init,
    CaseId.CancelByInitiator: _cancel,
    CaseId.CounterpartyResponse: _respond,
    CaseId.CompleteByInitiator: _complete,
    CaseId.CompleteSecondScenario: _complete2,
}


def _orderings(omega: Witness) -> Iterator[tuple[int, tuple]]:
    i1 = _view(omega.n_old_1, pos=omega.path_1.pos)
    i2 = _view(omega.n_old_2, pos=omega.path_2.pos)
    o1, o2 = _view(omega.n_new_1), _view(omega.n_new_2)
    for p in range(4):
        I, J = (i2, i1) if p & 2 else (i1, i2)
        N1, N2 = (o2, o1) if p & 1 else (o1, o2)
        yield p, (I, J, N1, N2)


def satisfying_ordering(case: CaseId, chi: PublicInput, omega: Witness, depth: int) -> int | None:
    """Index of the first note ordering under which ``case`` holds, else None."""
    if case is CaseId.Disallowed:
        return None
    if not _well_formed(chi, omega, depth) or not _common(chi, omega):
        return None
    fn = _CASE_FNS[case]
    for p, notes in _orderings(omega):
        if fn(chi, omega, *notes):
            return p
    return None


def case_predicate(case: CaseId, chi: PublicInput, omega: Witness, depth: int | None = None) -> bool:
    if depth is None:
        depth = len(omega.path_1.siblings)
    return satisfying_ordering(case, chi, omega, depth) is not None


def relation_holds(chi: PublicInput, omega: Witness, depth: int | None = None) -> bool:
    return any(case_predicate(c, chi, omega, depth) for c in SPENDING_CASES)


def find_case(chi: PublicInput, omega: Witness, depth: int) -> tuple[CaseId, int] | None:
    if not _well_formed(chi, omega, depth) or not _common(chi, omega):
        return None
    for case in SPENDING_CASES:
        fn = _CASE_FNS[case]
        for p, notes in _orderings(omega):
            if fn(chi, omega, *notes):
                return case, p
    return None
