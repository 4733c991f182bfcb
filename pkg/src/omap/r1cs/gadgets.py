"""Reusable constraint gadgets."""

from __future__ import annotations

from typing import Sequence

from .. import fieldhash as fh
from ..fieldhash import P
from .cs import LC, ConstraintSystem, copy_of

Operand = LC | int


def assert_boolean(cs: ConstraintSystem, x: LC, label: str = "boolean") -> None:
    cs.enforce(x, 1 - x, 0, label)


def assert_equal(cs: ConstraintSystem, x: Operand, y: Operand, label: str = "equal") -> None:
    cs.enforce(LC.of(x) - y, 1, 0, label)


def assert_linear_sum(cs: ConstraintSystem, terms: Sequence[tuple[int, LC]], target: Operand, label: str = "sum") -> None:
    total = LC()
    for coeff, x in terms:
        total = total + LC.of(x) * coeff
    cs.enforce(total - target, 1, 0, label)


def mul(cs: ConstraintSystem, x: Operand, y: Operand, label: str = "mul") -> LC:
    x, y = LC.of(x), LC.of(y)
    cx, cy = x.constant(), y.constant()
    if cx is not None:
        return y * cx
    if cy is not None:
        return x * cy
    out = cs.derived(None, x, y)
    cs.enforce(x, y, out, label)
    return out


def gated_zero(cs: ConstraintSystem, gate: LC, expr: Operand, label: str = "gated") -> None:
    """gate * expr = 0: expr must vanish whenever the gate is on."""
    cs.enforce(gate, expr, 0, label)


def select(cs: ConstraintSystem, bit: LC, if_one: Operand, if_zero: Operand, label: str = "mux") -> LC:
    """Two-way multiplexer; ``bit`` must already be boolean-constrained."""
    return LC.of(if_zero) + mul(cs, bit, LC.of(if_one) - if_zero, label)


def _bit(i: int):
    return lambda v: (v >> i) & 1


def to_bits(cs: ConstraintSystem, x: Operand, n: int, label: str = "bits") -> list[LC]:
    """Little-endian decomposition of x into n boolean variables.

    Satisfiable only when x < 2^n, so this doubles as a range check.
    """
    x = LC.of(x)
    bits = []
    acc = LC()
    for i in range(n):
        b = cs.derived(_bit(i), x)
        assert_boolean(cs, b, f"{label}.bit")
        bits.append(b)
        acc = acc + b * (1 << i)
    cs.enforce(acc - x, 1, 0, f"{label}.recompose")
    return bits


def assert_range(cs: ConstraintSystem, x: Operand, n: int, label: str = "range") -> None:
    to_bits(cs, x, n, label)


def assert_leq_bits(cs: ConstraintSystem, x: Operand, y: Operand, bits: int = 32, label: str = "leq") -> None:
    """x <= y for operands already known to fit in ``bits`` bits.

    y - x is decomposed into ``bits`` bits.  When x > y the difference
    wraps to p - (x - y) which is far above 2^bits, so no decomposition
    exists.
    """
    to_bits(cs, LC.of(y) - x, bits, label)


def gt_flag(cs: ConstraintSystem, x: Operand, y: Operand, bits: int = 32, label: str = "gt") -> LC:
    """Boolean [x > y] for operands known to fit in ``bits`` bits.

    2^bits + x - y - 1 lies in [0, 2^(bits+1)) and its top bit is set
    exactly when x > y.
    """
    t = LC.of(x) - y + ((1 << bits) - 1)
    return to_bits(cs, t, bits + 1, label)[bits]


def is_nonzero(cs: ConstraintSystem, x: Operand, label: str = "nz") -> LC:
    """Boolean [x != 0]."""
    x = LC.of(x)
    inv = cs.derived(lambda v: pow(v, P - 2, P) if v else 0, x)
    flag = cs.derived(None, x, inv)
    cs.enforce(x, inv, flag, f"{label}.inv")
    cs.enforce(x, 1 - flag, 0, f"{label}.flag")
    return flag


def compress_gadget(cs: ConstraintSystem, h: Operand, x: Operand, label: str = "hc") -> LC:
    """In-circuit twin of :func:`omap.fieldhash.compress`."""
    h, x = LC.of(h), LC.of(x)
    t = x
    for c in fh.ROUND_CONSTANTS:
        u = t + h + c
        sq = mul(cs, u, u, label)
        t = mul(cs, sq, u, label)
    return materialize(cs, t + h * 2 + x, label)


def materialize(cs: ConstraintSystem, x: LC, label: str = "lc", max_terms: int = 2) -> LC:
    """Replace a long linear combination by a fresh variable equal to it.

    Keeps chained hash expressions short; costs one linear constraint.
    """
    if len(x.terms) <= max_terms:
        return x
    v = cs.derived(copy_of, x)
    cs.enforce(v - x, 1, 0, f"{label}.link")
    return v


def hash_gadget(cs: ConstraintSystem, tag: int, inputs: Sequence[Operand], label: str = "hc") -> LC:
    h: LC = LC.of(tag)
    for x in inputs:
        h = compress_gadget(cs, h, x, label)
    return h


def assert_hash_preimage(cs: ConstraintSystem, output: Operand, inputs: Sequence[Operand], tag: int, label: str = "hc") -> None:
    assert_equal(cs, hash_gadget(cs, tag, inputs, label), output, f"{label}.out")


def merkle_root_gadget(
    cs: ConstraintSystem, leaf_node: Operand, siblings: Sequence[LC], pos_bits: Sequence[LC], label: str = "merkle"
) -> LC:
    if len(siblings) != len(pos_bits):
        raise ValueError("one position bit per level")
    cur = LC.of(leaf_node)
    for sib, bit in zip(siblings, pos_bits):
        assert_boolean(cs, bit, f"{label}.pos")
        # bit = 1 puts the current node on the right
        d = mul(cs, bit, sib - cur, f"{label}.swap")
        cur = hash_gadget(cs, fh.TAG_NODE, [cur + d, sib - d], label)
    return cur


def assert_merkle_path(
    cs: ConstraintSystem,
    root: Operand,
    leaf: Operand,
    siblings: Sequence[LC],
    pos_bits: Sequence[LC],
    leaf_tag: int = fh.TAG_LEAF_CM,
    label: str = "merkle",
) -> None:
    leaf_node = hash_gadget(cs, leaf_tag, [leaf], label)
    assert_equal(cs, merkle_root_gadget(cs, leaf_node, siblings, pos_bits, label), root, f"{label}.root")
