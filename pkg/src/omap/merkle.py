"""Fixed-depth incremental Merkle tree over commitments and nullifiers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import fieldhash as fh

DEFAULT_DEPTH = 16


class LeafKind(Enum):
    COMMITMENT = "cm"
    NULLIFIER = "nf"

    @property
    def tag(self) -> int:
        return fh.TAG_LEAF_CM if self is LeafKind.COMMITMENT else fh.TAG_LEAF_NF


class TreeFullError(Exception):
    pass


@dataclass(frozen=True)
class MerklePath:
    siblings: tuple[bytes, ...]
    pos: int

    @classmethod
    def zero(cls, depth: int) -> "MerklePath":
        return cls(tuple(bytes(32) for _ in range(depth)), 0)


def empty_roots(depth: int) -> list[int]:
    """Default node value per level, level 0 being the empty leaf."""
    out = [fh.EMPTY_LEAF]
    for _ in range(depth):
        out.append(fh.node_hash(out[-1], out[-1]))
    return out


def fold_path(leaf_node: int, siblings: list[int], pos: int) -> int:
    cur = leaf_node
    for level, sib in enumerate(siblings):
        if (pos >> level) & 1:
            cur = fh.node_hash(sib, cur)
        else:
            cur = fh.node_hash(cur, sib)
    return cur


def verify_path(root: bytes, leaf: bytes, path: MerklePath, kind: LeafKind = LeafKind.COMMITMENT) -> bool:
    """True iff folding ``leaf`` through ``path`` reproduces ``root``."""
    try:
        sibs = [fh.to_field(s) for s in path.siblings]
        leaf_node = fh.leaf_hash(kind.tag, fh.to_field(leaf))
        want = fh.to_field(root)
    except ValueError:
        return False
    if not 0 <= path.pos < 2 ** len(sibs):
        return False
    return fold_path(leaf_node, sibs, path.pos) == want


def root_from_leaves(leaves: list[tuple[bytes, LeafKind]], depth: int) -> bytes:
    """Brute-force root; the reference the incremental tree is checked against."""
    defaults = empty_roots(depth)
    level = [fh.leaf_hash(k.tag, fh.to_field(v)) for v, k in leaves]
    for d in range(depth):
        if len(level) % 2:
            level.append(defaults[d])
        level = [fh.node_hash(level[i], level[i + 1]) for i in range(0, len(level), 2)]
    return fh.from_field(level[0] if level else defaults[depth])


class CombinedTree:
    """Append-only tree; keeps every filled node so paths can be issued for any leaf."""

    def __init__(self, depth: int = DEFAULT_DEPTH):
        if depth < 0:
            raise ValueError("depth must be non-negative")
        self.depth = depth
        self.leaves: list[tuple[bytes, LeafKind]] = []
        self._defaults = empty_roots(depth)
        self._levels: list[list[int]] = [[] for _ in range(depth + 1)]
        self._root = self._defaults[depth]
        self.root_history: set[bytes] = {self.root}

    @property
    def root(self) -> bytes:
        return fh.from_field(self._root)

    def __len__(self) -> int:
        return len(self.leaves)

    def append(self, leaf: bytes, kind: LeafKind) -> int:
        pos = len(self.leaves)
        if pos >= 2**self.depth:
            raise TreeFullError(f"tree of depth {self.depth} is full")
        self.leaves.append((leaf, kind))
        cur = fh.leaf_hash(kind.tag, fh.to_field(leaf))
        idx = pos
        for d in range(self.depth):
            nodes = self._levels[d]
            if idx == len(nodes):
                nodes.append(cur)
            else:
                nodes[idx] = cur
            if idx & 1:
                cur = fh.node_hash(nodes[idx - 1], cur)
            else:
                cur = fh.node_hash(cur, self._defaults[d])
            idx >>= 1
        top = self._levels[self.depth]
        if top:
            top[0] = cur
        else:
            top.append(cur)
        self._root = cur
        self.root_history.add(self.root)
        return pos

    def _node(self, level: int, idx: int) -> int:
        nodes = self._levels[level]
        return nodes[idx] if idx < len(nodes) else self._defaults[level]

    def path(self, pos: int) -> MerklePath:
        if not 0 <= pos < len(self.leaves):
            raise IndexError(f"no leaf at position {pos}")
        sibs = []
        idx = pos
        for d in range(self.depth):
            sibs.append(fh.from_field(self._node(d, idx ^ 1)))
            idx >>= 1
        return MerklePath(tuple(sibs), pos)

    def is_known_root(self, rt: bytes) -> bool:
        return rt in self.root_history
