"""Public statement and private witness of a JoinSplit proof."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

from .merkle import MerklePath
from .notes import ZERO32, ZERO_NOTE, Note

_ASSET = struct.Struct(">IQ")
_HEIGHT = struct.Struct(">I")

Asset = tuple[int, int]  # (color id, amount)


@dataclass(frozen=True)
class PublicInput:
    rt: bytes
    nf_old_1: bytes
    nf_old_2: bytes
    cm_new_1: bytes
    cm_new_2: bytes
    v_pub_old: Asset
    v_pub_new: Asset
    block_n: int
    h_sig: bytes
    h_1: bytes
    h_2: bytes

    def encode(self) -> bytes:
        """Fixed-width encoding in declaration order."""
        parts = [self.rt, self.nf_old_1, self.nf_old_2, self.cm_new_1, self.cm_new_2]
        for p in parts:
            if len(p) != 32:
                raise ValueError("digest fields must be 32 bytes")
        try:
            tail = _ASSET.pack(*self.v_pub_old) + _ASSET.pack(*self.v_pub_new) + _HEIGHT.pack(self.block_n)
        except struct.error as e:
            raise ValueError(f"public value out of range: {e}") from None
        for p in (self.h_sig, self.h_1, self.h_2):
            if len(p) != 32:
                raise ValueError("digest fields must be 32 bytes")
        return b"".join(parts) + tail + self.h_sig + self.h_1 + self.h_2

    def swap_inputs(self) -> "PublicInput":
        return replace(self, nf_old_1=self.nf_old_2, nf_old_2=self.nf_old_1, h_1=self.h_2, h_2=self.h_1)

    def swap_outputs(self) -> "PublicInput":
        return replace(self, cm_new_1=self.cm_new_2, cm_new_2=self.cm_new_1)


CHI_LEN = 32 * 5 + _ASSET.size * 2 + _HEIGHT.size + 32 * 3


@dataclass(frozen=True)
class Witness:
    path_1: MerklePath
    path_2: MerklePath
    n_old_1: Note
    n_old_2: Note
    a_sk_1: bytes = field(repr=False)
    a_sk_2: bytes = field(repr=False)
    phi: bytes = field(repr=False)
    dummy_1: int
    dummy_2: int
    n_new_1: Note
    n_new_2: Note
    path_3: MerklePath
    n_old_3: Note
    a_sk_3: bytes = field(repr=False)
    path_4: MerklePath
    nf_old_3: bytes

    @classmethod
    def no_evidence(cls, depth: int, **kw) -> "Witness":
        """Witness with the sibling-spend fields zero-filled."""
        z = MerklePath.zero(depth)
        return cls(path_3=z, n_old_3=ZERO_NOTE, a_sk_3=ZERO32, path_4=z, nf_old_3=ZERO32, **kw)

    def swap_inputs(self) -> "Witness":
        return replace(
            self,
            path_1=self.path_2, path_2=self.path_1,
            n_old_1=self.n_old_2, n_old_2=self.n_old_1,
            a_sk_1=self.a_sk_2, a_sk_2=self.a_sk_1,
            dummy_1=self.dummy_2, dummy_2=self.dummy_1,
        )

    def swap_outputs(self) -> "Witness":
        # output notes carry their index inside rho, so only the pair order moves
        return replace(self, n_new_1=self.n_new_2, n_new_2=self.n_new_1)
