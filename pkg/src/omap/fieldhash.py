"""Field-native hash used for every value that has to be proven in-circuit.

SHA-256 cannot be arithmetized at desk scale, so commitments, nullifiers,
addresses, nullifier seeds and Merkle nodes all use ``hc``: a
Miyaguchi-Preneel chain over a keyed MiMC permutation with the cube map.
The same function has a native implementation (here) and an R1CS gadget
(``omap.r1cs.gadgets.hash_gadget``); the two must agree bit for bit.

The round count is tuned for desk-scale proving speed, not for a vetted
security level.
"""

from __future__ import annotations

import hashlib

# 2**131 - 69; P % 3 == 2 so x -> x**3 is a permutation of the field.
P = 2722258935367507707706996859454145691579
ROUNDS = 12

ROUND_CONSTANTS = [0] + [
    int.from_bytes(hashlib.sha256(b"omap.hc.rc" + r.to_bytes(2, "big")).digest(), "big") % P
    for r in range(1, ROUNDS)
]

# Domain tags double as the chaining IV.
TAG_CM = 1
TAG_NF = 2
TAG_RHO = 3
TAG_ADDR = 4
TAG_LEAF_CM = 5
TAG_LEAF_NF = 6
TAG_NODE = 7
TAG_EMPTY = 8


def mimc(x: int, key: int) -> int:
    for c in ROUND_CONSTANTS:
        y = x + key + c
        x = y * y % P * y % P
    return (x + key) % P


def compress(h: int, x: int) -> int:
    """One Miyaguchi-Preneel step: E_h(x) + h + x."""
    return (mimc(x, h) + h + x) % P


def hc(tag: int, *xs: int) -> int:
    h = tag
    for x in xs:
        h = compress(h, x % P)
    return h


def to_field(b: bytes) -> int:
    """Strict decoding of a 32-byte big-endian field element."""
    if len(b) != 32:
        raise ValueError(f"expected 32 bytes, got {len(b)}")
    x = int.from_bytes(b, "big")
    if x >= P:
        raise ValueError("value is not a canonical field element")
    return x


def is_canonical(b: bytes) -> bool:
    return len(b) == 32 and int.from_bytes(b, "big") < P


def from_field(x: int) -> bytes:
    return (x % P).to_bytes(32, "big")


def reduce_digest(d: bytes) -> bytes:
    """Map an arbitrary 32-byte digest onto a canonical field element."""
    return from_field(int.from_bytes(d, "big") % P)


def prf_nf_field(a_sk: int, rho: int) -> int:
    return hc(TAG_NF, a_sk, rho)


def prf_rho_field(phi: int, index: int, h_sig: int) -> int:
    if index not in (1, 2):
        raise ValueError("note index must be 1 or 2")
    return hc(TAG_RHO, phi, index, h_sig)


def prf_addr_field(a_sk: int) -> int:
    return hc(TAG_ADDR, a_sk, 0)


def leaf_hash(kind_tag: int, value: int) -> int:
    return hc(kind_tag, value)


def node_hash(left: int, right: int) -> int:
    return hc(TAG_NODE, left, right)


EMPTY_LEAF = hc(TAG_EMPTY, 0)
