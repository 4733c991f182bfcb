"""Mock proving backend.

A proof is an HMAC over the canonical encoding of the public statement,
keyed by a secret that never leaves the backend object.  ``prove`` only
releases one after finding a satisfying assignment of the combined
circuit, so a verifying proof implies the prover knew a witness, and since
the tag depends on chi alone it reveals nothing about omega.
"""

from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass, field

from ..statement import PublicInput, Witness
from .circuit import EncodingError, JoinSplitCircuit, build_joinsplit_circuit, synthesize
from .cs import UnsatisfiedError

PROOF_LEN = 32


class ProofRefused(UnsatisfiedError):
    """The witness does not satisfy the circuit for this statement."""


@dataclass(frozen=True)
class Proof:
    tag: bytes

    def __post_init__(self):
        if len(self.tag) != PROOF_LEN:
            raise ValueError(f"proof must be {PROOF_LEN} bytes")


class _Backend:
    def __init__(self, secret: bytes, circuit: JoinSplitCircuit):
        self._secret = secret
        self.circuit = circuit
        # every chi a proof was issued for; read by soundness tests
        self.issued: list[bytes] = []

    def mac(self, chi: PublicInput) -> bytes:
        return hmac.new(self._secret, chi.encode(), hashlib.sha256).digest()


@dataclass(frozen=True)
class ProvingKey:
    backend: _Backend = field(repr=False)

    @property
    def depth(self) -> int:
        return self.backend.circuit.depth


@dataclass(frozen=True)
class VerifyingKey:
    backend: _Backend = field(repr=False)


@dataclass(frozen=True)
class SetupParams:
    pk_joinsplit: ProvingKey
    vk_joinsplit: VerifyingKey
    depth: int

    @property
    def circuit(self) -> JoinSplitCircuit:
        return self.pk_joinsplit.backend.circuit


def setup(rng: random.Random, depth: int) -> SetupParams:
    b = _Backend(rng.randbytes(32), build_joinsplit_circuit(depth))
    return SetupParams(ProvingKey(b), VerifyingKey(b), depth)


def prove(pk: ProvingKey, chi: PublicInput, omega: Witness, hint: tuple[int, int] | None = None) -> Proof:
    """Issue a proof, or raise :class:`ProofRefused`.

    ``hint`` is an optional (case, permutation) guess tried first; it only
    affects speed.
    """
    b = pk.backend
    try:
        syn = synthesize(b.circuit, chi, omega, hint)
    except EncodingError as e:
        # not even expressible as circuit inputs
        raise ProofRefused(-1, f"encoding: {e}") from None
    if not syn.satisfied:
        idx = syn.first_failure
        raise ProofRefused(idx, b.circuit.cs.constraints[idx].label)
    b.issued.append(chi.encode())
    return Proof(b.mac(chi))


def verify(vk: VerifyingKey, chi: PublicInput, proof: Proof | bytes) -> bool:
    tag = proof.tag if isinstance(proof, Proof) else proof
    try:
        want = vk.backend.mac(chi)
    except ValueError:
        return False
    return hmac.compare_digest(want, tag)
