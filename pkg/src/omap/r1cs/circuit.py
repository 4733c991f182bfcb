"""The combined JoinSplit circuit covering every spending case.

Layout: segment 0 holds everything that does not depend on which case is
active (note decoding, hashes, Merkle paths, range checks and a handful of
per-note flags).  Segment 1 holds the selectors and the selector-gated case
conditions.  Each case has four sub-selectors, one per ordering of the
inputs and of the outputs, so the condition sets are written once for
canonical positions and instantiated for every permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from types import SimpleNamespace
from typing import Mapping

from .. import fieldhash as fh
from ..fieldhash import P
from ..merkle import MerklePath
from ..notes import Note
from ..statement import PublicInput, Witness
from .cs import LC, CompiledSystem, ConstraintSystem
from .gadgets import (
    assert_boolean,
    assert_equal,
    assert_linear_sum,
    assert_range,
    gt_flag,
    hash_gadget,
    is_nonzero,
    merkle_root_gadget,
    mul,
)

PUBLIC_NAMES = (
    "rt", "nf1", "nf2", "cm1", "cm2",
    "vpo_c", "vpo_v", "vpn_c", "vpn_v",
    "block_n", "h_sig", "h1", "h2",
)
NOTE_FIELDS = ("a_pk", "s", "c1", "v1", "c2", "v2", "bt", "rho", "gamma", "tag")
COMMIT_ORDER = ("a_pk", "rho", "gamma", "tag", "s", "c1", "v1", "c2", "v2", "bt")
NUM_CASES = 6
# sub-selector p: inputs swapped if p & 2, outputs swapped if p & 1
NUM_PERMS = 4

CORE, CASES = 0, 1


class EncodingError(ValueError):
    """The statement or witness cannot be written as circuit inputs."""


@dataclass
class JoinSplitCircuit:
    depth: int
    cs: ConstraintSystem
    compiled: CompiledSystem

    @property
    def num_constraints(self) -> int:
        return len(self.cs.constraints)


def _note_vars(cs: ConstraintSystem, prefix: str) -> SimpleNamespace:
    return SimpleNamespace(**{f: cs.private(f"{prefix}.{f}") for f in NOTE_FIELDS}, name=prefix)


def _commit(cs: ConstraintSystem, n: SimpleNamespace) -> LC:
    return hash_gadget(cs, fh.TAG_CM, [getattr(n, f) for f in COMMIT_ORDER], f"{n.name}.cm")


def _note_rules(cs: ConstraintSystem, n: SimpleNamespace) -> None:
    """Width and shape invariants every real or dummy note satisfies."""
    lab = n.name
    assert_boolean(cs, n.s, f"{lab}.s")
    for f, bits in (("c1", 32), ("c2", 32), ("bt", 32), ("v1", 64), ("v2", 64)):
        assert_range(cs, getattr(n, f), bits, f"{lab}.{f}")
    n.nzc1 = is_nonzero(cs, n.c1, f"{lab}.nzc1")
    nzc2 = is_nonzero(cs, n.c2, f"{lab}.nzc2")
    n.nzv2 = is_nonzero(cs, n.v2, f"{lab}.nzv2")
    assert_equal(cs, nzc2, n.nzv2, f"{lab}.debt-shape")
    cs.enforce(n.s, n.c2, 0, f"{lab}.sibling-no-debt")
    for f in ("v1", "c2", "s"):
        cs.enforce(1 - n.nzc1, getattr(n, f), 0, f"{lab}.dummy-colour-{f}")


def _path_vars(cs: ConstraintSystem, k: int, depth: int) -> tuple[list[LC], list[LC]]:
    sibs = [cs.private(f"path{k}.sib{d}") for d in range(depth)]
    bits = [cs.private(f"path{k}.bit{d}") for d in range(depth)]
    return sibs, bits


def _position(bits: list[LC]) -> LC:
    pos = LC()
    for d, b in enumerate(bits):
        pos = pos + b * (1 << d)
    return pos


def _build_core(cs: ConstraintSystem, depth: int) -> SimpleNamespace:
    x = SimpleNamespace()
    pub = SimpleNamespace(**{name: cs.public(name) for name in PUBLIC_NAMES})
    x.pub = pub
    o = [_note_vars(cs, "o1"), _note_vars(cs, "o2")]
    n = [_note_vars(cs, "n1"), _note_vars(cs, "n2")]
    n3 = _note_vars(cs, "n3")
    ask = [cs.private(f"ask{i}") for i in (1, 2, 3)]
    phi = cs.private("phi")
    dummy = [cs.private("dummy1"), cs.private("dummy2")]
    nf3 = cs.private("nf3")
    paths = [_path_vars(cs, k, depth) for k in (1, 2, 3, 4)]

    for note in (*o, *n):
        _note_rules(cs, note)
    assert_range(cs, pub.vpo_c, 32, "vpo_c")
    assert_range(cs, pub.vpn_c, 32, "vpn_c")
    assert_range(cs, pub.vpo_v, 64, "vpo_v")
    assert_range(cs, pub.vpn_v, 64, "vpn_v")
    assert_range(cs, pub.block_n, 32, "block_n")

    # inputs: dummy gating, nullifier and key integrity, membership
    for i, (note, d, sk) in enumerate(zip(o, dummy, ask)):
        lab = note.name
        assert_boolean(cs, d, f"{lab}.dummy")
        for f in ("s", "c1", "v1", "c2", "v2", "bt"):
            cs.enforce(d, getattr(note, f), 0, f"{lab}.dummy-zero-{f}")
        nf = pub.nf1 if i == 0 else pub.nf2
        assert_equal(cs, hash_gadget(cs, fh.TAG_NF, [sk, note.rho], f"{lab}.nf"), nf, f"{lab}.nf")
        assert_equal(cs, hash_gadget(cs, fh.TAG_ADDR, [sk, 0], f"{lab}.addr"), note.a_pk, f"{lab}.addr")
        leaf = hash_gadget(cs, fh.TAG_LEAF_CM, [_commit(cs, note)], f"{lab}.leaf")
        sibs, bits = paths[i]
        root = merkle_root_gadget(cs, leaf, sibs, bits, f"{lab}.path")
        cs.enforce(1 - d, root - pub.rt, 0, f"{lab}.root")
        note.dummy = d
        note.pos = _position(bits)
        note.expired = gt_flag(cs, pub.block_n, note.bt, 32, f"{lab}.expired")

    # outputs: rho uniqueness (either order), pairing tag, commitment
    r1 = hash_gadget(cs, fh.TAG_RHO, [phi, 1, pub.h_sig], "rho1")
    r2 = hash_gadget(cs, fh.TAG_RHO, [phi, 2, pub.h_sig], "rho2")
    cs.enforce(n[0].rho - r1, n[0].rho - r2, 0, "n1.rho")
    assert_linear_sum(cs, [(1, n[0].rho), (1, n[1].rho)], r1 + r2, "n2.rho")
    for note, cm in zip(n, (pub.cm1, pub.cm2)):
        assert_equal(cs, note.tag, pub.h_sig, f"{note.name}.tag")
        assert_equal(cs, _commit(cs, note), cm, f"{note.name}.cm")

    # sibling-spend evidence; only consulted by the completion cases
    cm3 = _commit(cs, n3)
    x.root3 = merkle_root_gadget(cs, hash_gadget(cs, fh.TAG_LEAF_CM, [cm3], "n3.leaf"), *paths[2], "n3.path")
    x.root4 = merkle_root_gadget(cs, hash_gadget(cs, fh.TAG_LEAF_NF, [nf3], "nf3.leaf"), *paths[3], "nf3.path")
    x.nf3chk = hash_gadget(cs, fh.TAG_NF, [ask[2], n3.rho], "n3.nf") - nf3
    x.addr3chk = hash_gadget(cs, fh.TAG_ADDR, [ask[2], 0], "n3.addr") - n3.a_pk
    pos3 = _position(paths[2][1])
    for note in o:
        delta = pos3 - note.pos
        note.adj = mul(cs, delta - 1, delta + 1, f"{note.name}.adj")

    # colour compatibility: either side dummy or same primary colour
    x.ccompat = {}
    for a, b in combinations((*o, *n), 2):
        both = mul(cs, a.nzc1, b.nzc1, "ccompat")
        x.ccompat[frozenset((a.name, b.name))] = mul(cs, both, a.c1 - b.c1, "ccompat")
    nzpo = is_nonzero(cs, pub.vpo_v, "vpo.nz")
    nzpn = is_nonzero(cs, pub.vpn_v, "vpn.nz")
    x.pubcompat = [mul(cs, mul(cs, nzpo, nzpn), pub.vpo_c - pub.vpn_c, "pubcompat")]
    for note in (*o, *n):
        for flag, col in ((nzpo, pub.vpo_c), (nzpn, pub.vpn_c)):
            x.pubcompat.append(mul(cs, mul(cs, flag, note.nzc1), col - note.c1, "pubcompat"))

    x.o, x.n, x.n3 = o, n, n3
    return x


class _Cases:
    """Condition sets for canonical positions I, J (inputs), N1, N2 (outputs)."""

    def __init__(self, cs: ConstraintSystem, x: SimpleNamespace):
        self.cs = cs
        self.x = x

    def z(self, gate: LC, expr: LC | int, label: str) -> None:
        self.cs.enforce(gate, expr, 0, label)

    def cc(self, a, b) -> LC:
        return self.x.ccompat[frozenset((a.name, b.name))]

    def no_public(self, g: LC, lab: str) -> None:
        self.z(g, self.x.pub.vpo_v, f"{lab}:vpo")
        self.z(g, self.x.pub.vpn_v, f"{lab}:vpn")

    def pair(self, g: LC, P1, S, lab: str) -> None:
        """P1 is a primary carrying debt that S (a sibling) mirrors."""
        z = self.z
        z(g, 1 - P1.nzv2, f"{lab}:pair-debt")
        z(g, P1.c2 - S.c1, f"{lab}:pair-c")
        z(g, P1.v2 - S.v1, f"{lab}:pair-v")
        z(g, P1.bt - S.bt, f"{lab}:pair-bt")

    def evidence(self, g: LC, I, lab: str) -> None:
        x, z = self.x, self.z
        z(g, x.n3.s, f"{lab}:ev-primary")
        z(g, x.n3.tag - I.tag, f"{lab}:ev-tag")
        z(g, x.root3 - x.pub.rt, f"{lab}:ev-cm")
        z(g, x.root4 - x.pub.rt, f"{lab}:ev-nf")
        z(g, x.nf3chk, f"{lab}:ev-nf-prf")
        z(g, x.addr3chk, f"{lab}:ev-key")
        z(g, I.adj, f"{lab}:ev-adjacent")

    def default(self, g, I, J, N1, N2, lab):
        x, z = self.x, self.z
        for n in (I, J, N1, N2):
            z(g, n.s, f"{lab}:s")
            z(g, n.v2, f"{lab}:v2")
        for L in x.ccompat.values():
            z(g, L, f"{lab}:colour")
        for L in x.pubcompat:
            z(g, L, f"{lab}:pub-colour")
        z(g, x.pub.vpo_v + I.v1 + J.v1 - x.pub.vpn_v - N1.v1 - N2.v1, f"{lab}:balance")

    def init(self, g, I, J, N1, N2, lab):
        z = self.z
        self.no_public(g, lab)
        for n in (I, J, N1):
            z(g, n.s, f"{lab}:s")
        z(g, 1 - N2.s, f"{lab}:sibling")
        z(g, J.v2, f"{lab}:j-debt")
        self.pair(g, N1, N2, lab)
        z(g, N1.c1 - I.c1, f"{lab}:give-colour")
        gd = mul(self.cs, g, I.nzv2, f"{lab}:debt-gate")
        gn = g - gd
        z(gn, self.cc(J, N1), f"{lab}:fund-colour")
        z(gn, I.v1 + J.v1 - N1.v1, f"{lab}:fund")
        z(gd, J.c1 - I.c2, f"{lab}:settle-colour")
        z(gd, J.v1 - I.v2, f"{lab}:settle")
        z(gd, N1.v1 - I.v1, f"{lab}:carry")
        z(gd, I.expired, f"{lab}:before-bt")

    def cancel(self, g, I, J, N1, N2, lab):
        z = self.z
        self.no_public(g, lab)
        z(g, I.s, f"{lab}:s")
        z(g, 1 - J.s, f"{lab}:sibling")
        z(g, I.tag - J.tag, f"{lab}:tag")
        self.pair(g, I, J, lab)
        z(g, 1 - I.expired, f"{lab}:after-bt")
        z(g, N1.s, f"{lab}:n1-s")
        z(g, N1.c1 - I.c1, f"{lab}:refund-colour")
        gs = mul(self.cs, g, N2.s, f"{lab}:reinit-gate")
        ga = g - gs
        z(ga, N1.v2, f"{lab}:n1-debt")
        z(ga, N2.v2, f"{lab}:n2-debt")
        z(ga, self.cc(N2, I), f"{lab}:n2-colour")
        z(ga, N1.v1 + N2.v1 - I.v1, f"{lab}:refund")
        self.pair(gs, N1, N2, f"{lab}:reinit")
        z(gs, N1.v1 - I.v1, f"{lab}:reinit-carry")

    def respond(self, g, I, J, N1, N2, lab):
        z = self.z
        self.no_public(g, lab)
        for n in (I, J, N1, N2):
            z(g, n.s, f"{lab}:s")
        z(g, 1 - I.nzv2, f"{lab}:i-debt")
        for n in (J, N1, N2):
            z(g, n.v2, f"{lab}:v2")
        z(g, N1.c1 - I.c1, f"{lab}:carry-colour")
        z(g, N1.v1 - I.v1, f"{lab}:carry")
        z(g, I.c2 - J.c1, f"{lab}:pay-colour")
        z(g, J.c1 - N2.c1, f"{lab}:change-colour")
        z(g, I.v2 + N2.v1 - J.v1, f"{lab}:pay")
        z(g, I.expired, f"{lab}:before-bt")

    def complete(self, g, I, J, N1, N2, lab):
        z = self.z
        self.no_public(g, lab)
        z(g, 1 - I.s, f"{lab}:sibling")
        z(g, J.s, f"{lab}:j-s")
        z(g, J.v2, f"{lab}:j-debt")
        z(g, 1 - I.expired, f"{lab}:after-bt")
        self.evidence(g, I, lab)
        z(g, N1.s, f"{lab}:n1-s")
        z(g, N1.c1 - I.c1, f"{lab}:colour")
        z(g, self.cc(J, I), f"{lab}:j-colour")
        gs = mul(self.cs, g, N2.s, f"{lab}:reinit-gate")
        ga = g - gs
        z(ga, N1.v2, f"{lab}:n1-debt")
        z(ga, N2.v2, f"{lab}:n2-debt")
        z(ga, self.cc(N2, I), f"{lab}:n2-colour")
        z(ga, I.v1 + J.v1 - N1.v1 - N2.v1, f"{lab}:balance")
        self.pair(gs, N1, N2, f"{lab}:reinit")
        z(gs, N1.v1 - I.v1 - J.v1, f"{lab}:reinit-carry")

    def complete2(self, g, I, J, N1, N2, lab):
        z = self.z
        self.no_public(g, lab)
        z(g, 1 - I.s, f"{lab}:sibling")
        z(g, J.s, f"{lab}:j-s")
        z(g, 1 - J.nzv2, f"{lab}:j-debt")
        for n in (N1, N2):
            z(g, n.s, f"{lab}:s")
            z(g, n.v2, f"{lab}:v2")
        z(g, I.c1 - J.c2, f"{lab}:settle-colour")
        z(g, N1.c1 - I.c1, f"{lab}:rest-colour")
        z(g, J.c1 - N2.c1, f"{lab}:carry-colour")
        z(g, I.v1 - J.v2 - N1.v1, f"{lab}:settle")
        z(g, J.v1 - N2.v1, f"{lab}:carry")
        z(g, 1 - I.expired, f"{lab}:after-bt")
        z(g, J.expired, f"{lab}:before-bt")
        self.evidence(g, I, lab)


CASE_NAMES = ("default", "init", "cancel", "respond", "complete", "complete2")


def _build_cases(cs: ConstraintSystem, x: SimpleNamespace) -> None:
    builder = _Cases(cs, x)
    case_sels = []
    for k in range(NUM_CASES):
        subs = [cs.private(f"sel{k}.{p}") for p in range(NUM_PERMS)]
        sk = cs.private(f"sel{k}")
        for s in (*subs, sk):
            assert_boolean(cs, s, f"sel{k}")
        assert_linear_sum(cs, [(1, s) for s in subs], sk, f"sel{k}.split")
        case_sels.append((sk, subs))
    assert_linear_sum(cs, [(1, sk) for sk, _ in case_sels], 1, "selectors.one-hot")
    for k, (_, subs) in enumerate(case_sels):
        fn = getattr(builder, CASE_NAMES[k])
        for p, g in enumerate(subs):
            I, J = (x.o[1], x.o[0]) if p & 2 else (x.o[0], x.o[1])
            N1, N2 = (x.n[1], x.n[0]) if p & 1 else (x.n[0], x.n[1])
            fn(g, I, J, N1, N2, f"{CASE_NAMES[k]}.{p}")


@lru_cache(maxsize=None)
def build_joinsplit_circuit(depth: int) -> JoinSplitCircuit:
    """Build (once per depth) the single circuit for all spending cases."""
    cs = ConstraintSystem()
    x = _build_core(cs, depth)
    cs.segment()
    _build_cases(cs, x)
    return JoinSplitCircuit(depth, cs, cs.compile())


# -- witness encoding ---------------------------------------------------------


def _fe(b: bytes, what: str) -> int:
    try:
        return fh.to_field(b)
    except (ValueError, TypeError) as e:
        raise EncodingError(f"{what}: {e}") from None


def _int(v, what: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < P:
        raise EncodingError(f"{what} is not a field element")
    return v


def _put_note(out: dict, prefix: str, n: Note) -> None:
    vals = {
        "a_pk": _fe(n.a_pk, f"{prefix}.a_pk"), "rho": _fe(n.rho, f"{prefix}.rho"),
        "gamma": _fe(n.gamma, f"{prefix}.gamma"), "tag": _fe(n.pair_tag, f"{prefix}.tag"),
        "s": n.s, "c1": n.color1, "v1": n.v1, "c2": n.color2, "v2": n.v2, "bt": n.bt,
    }
    for f, v in vals.items():
        out[f"{prefix}.{f}"] = _int(v, f"{prefix}.{f}")


def _put_path(out: dict, k: int, path: MerklePath, depth: int) -> None:
    if len(path.siblings) != depth:
        raise EncodingError(f"path{k} has {len(path.siblings)} levels, circuit depth is {depth}")
    if not isinstance(path.pos, int) or not 0 <= path.pos < 2**depth:
        raise EncodingError(f"path{k} position out of range")
    for d, s in enumerate(path.siblings):
        out[f"path{k}.sib{d}"] = _fe(s, f"path{k}.sib{d}")
        out[f"path{k}.bit{d}"] = (path.pos >> d) & 1


def circuit_inputs(chi: PublicInput, omega: Witness, depth: int) -> dict[str, int]:
    """Map (chi, omega) onto named circuit inputs; selectors are left out."""
    out: dict[str, int] = {}
    for name, b in (("rt", chi.rt), ("nf1", chi.nf_old_1), ("nf2", chi.nf_old_2), ("cm1", chi.cm_new_1),
                    ("cm2", chi.cm_new_2), ("h_sig", chi.h_sig), ("h1", chi.h_1), ("h2", chi.h_2)):
        out[name] = _fe(b, name)
    out["vpo_c"], out["vpo_v"] = (_int(v, "v_pub_old") for v in chi.v_pub_old)
    out["vpn_c"], out["vpn_v"] = (_int(v, "v_pub_new") for v in chi.v_pub_new)
    out["block_n"] = _int(chi.block_n, "block_n")
    for prefix, n in (("o1", omega.n_old_1), ("o2", omega.n_old_2), ("n1", omega.n_new_1),
                      ("n2", omega.n_new_2), ("n3", omega.n_old_3)):
        _put_note(out, prefix, n)
    for i, sk in enumerate((omega.a_sk_1, omega.a_sk_2, omega.a_sk_3), 1):
        out[f"ask{i}"] = _fe(sk, f"a_sk_{i}")
    out["phi"] = _fe(omega.phi, "phi")
    out["dummy1"] = _int(omega.dummy_1, "dummy_1")
    out["dummy2"] = _int(omega.dummy_2, "dummy_2")
    out["nf3"] = _fe(omega.nf_old_3, "nf_old_3")
    for k, path in enumerate((omega.path_1, omega.path_2, omega.path_3, omega.path_4), 1):
        _put_path(out, k, path, depth)
    return out


def set_selectors(inputs: dict[str, int], case: int | None, perm: int | None) -> dict[str, int]:
    for k in range(NUM_CASES):
        inputs[f"sel{k}"] = int(k == case)
        for p in range(NUM_PERMS):
            inputs[f"sel{k}.{p}"] = int(k == case and p == perm)
    return inputs


@dataclass
class Synthesis:
    assignment: list[int] | None
    case: int | None
    perm: int | None
    first_failure: int | None

    @property
    def satisfied(self) -> bool:
        return self.assignment is not None


def synthesize(
    circuit: JoinSplitCircuit,
    chi: PublicInput,
    omega: Witness,
    hint: tuple[int, int] | None = None,
) -> Synthesis:
    """Search for a satisfying assignment.

    The core is solved and checked once.  Selector choices are then tried,
    starting with ``hint``, re-solving only the case segment each time.
    """
    inputs = circuit_inputs(chi, omega, circuit.depth)
    comp = circuit.compiled
    order = [(k, p) for k in range(NUM_CASES) for p in range(NUM_PERMS)]
    if hint is not None:
        order.remove(hint)
        order.insert(0, hint)
    set_selectors(inputs, *order[0])
    w = comp.solve(inputs)
    bad = comp.first_unsatisfied(w, [CORE], solved=True)
    if bad is not None:
        return Synthesis(None, None, None, bad)
    first_bad = None
    for k, p in order:
        set_selectors(inputs, k, p)
        comp.solve_segment(CASES, w, inputs)
        bad = comp.first_unsatisfied(w, [CASES], solved=True)
        if bad is None:
            return Synthesis(w, k, p, None)
        if first_bad is None:
            first_bad = bad
    return Synthesis(None, None, None, first_bad)


def assignment_for(circuit: JoinSplitCircuit, inputs: Mapping[str, int]) -> list[int]:
    """Fully solve an explicit input map (selectors included)."""
    return circuit.compiled.solve(inputs)


def is_satisfiable(chi: PublicInput, omega: Witness, depth: int) -> bool:
    try:
        return synthesize(build_joinsplit_circuit(depth), chi, omega).satisfied
    except EncodingError:
        return False
