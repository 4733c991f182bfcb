"""Deterministic cryptographic primitives.

SHA-256 based CRH/PRFs, Ed25519 signatures and authenticated note
encryption.  Everything that must be proven in zero knowledge uses the
field-native hash in :mod:`omap.fieldhash` instead; the SHA-256 family here
covers h_sig, spend-authorisation tags, shared-key derivation, encryption
keys and the proof MAC.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from functools import lru_cache

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from .fieldhash import from_field, prf_addr_field, reduce_digest, to_field

TAG_ADDR = b"\x00"
TAG_NF = b"\x01"
TAG_RHO = b"\x02"
TAG_SPEND = b"\x03"
TAG_SHARED = b"\x04"
TAG_ENCKEY = b"\x05"
TAG_KEYCOMMIT = b"\x06"

DIGEST_LEN = 32
SIG_LEN = 64
ENC_OVERHEAD = 32 + 32 + 16  # ephemeral key, key commitment, AEAD tag

_RAW = serialization.Encoding.Raw
_RAW_PUB = serialization.PublicFormat.Raw
_RAW_PRIV = serialization.PrivateFormat.Raw
_NO_ENC = serialization.NoEncryption()


def crh(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def _index_byte(index: int) -> bytes:
    if index not in (1, 2):
        raise ValueError(f"note index must be 1 or 2, got {index}")
    return bytes([index])


def prf_nf(a_sk: bytes, rho: bytes) -> bytes:
    return crh(TAG_NF + a_sk + rho)


def prf_rho(phi: bytes, index: int, h_sig: bytes) -> bytes:
    return crh(TAG_RHO + _index_byte(index) + phi + h_sig)


def prf_spend_auth(a_sk: bytes, index: int, h_sig: bytes) -> bytes:
    return crh(TAG_SPEND + _index_byte(index) + a_sk + h_sig)


def derive_shared_spending_key(shared_secret: bytes, h_sig: bytes) -> bytes:
    """Spending key both exchange parties can derive for the primary note.

    The digest is reduced into the proof field so the key can be used as a
    circuit witness.
    """
    if not shared_secret:
        raise ValueError("shared secret must be non-empty")
    return reduce_digest(crh(TAG_SHARED + shared_secret + h_sig))


def random_field_bytes(rng: random.Random) -> bytes:
    return reduce_digest(rng.randbytes(32))


def new_spending_key(rng: random.Random) -> bytes:
    return random_field_bytes(rng)


@dataclass(frozen=True)
class PaymentAddress:
    a_pk: bytes
    enc_pk: bytes
    enc_sk: bytes = b""

    def public(self) -> "PaymentAddress":
        return PaymentAddress(self.a_pk, self.enc_pk)


@lru_cache(maxsize=4096)
def derive_address(a_sk: bytes) -> PaymentAddress:
    a_pk = from_field(prf_addr_field(to_field(a_sk)))
    sk = X25519PrivateKey.from_private_bytes(crh(TAG_ADDR + a_sk + b"\x01"))
    enc_pk = sk.public_key().public_bytes(_RAW, _RAW_PUB)
    return PaymentAddress(a_pk, enc_pk, sk.private_bytes(_RAW, _RAW_PRIV, _NO_ENC))


def _note_key(shared: bytes, eph_pk: bytes, enc_pk: bytes) -> bytes:
    return crh(TAG_ENCKEY + shared + eph_pk + enc_pk)


def encrypt_note(enc_pk: bytes, plaintext: bytes, rng: random.Random) -> bytes:
    eph = X25519PrivateKey.from_private_bytes(rng.randbytes(32))
    eph_pk = eph.public_key().public_bytes(_RAW, _RAW_PUB)
    key = _note_key(eph.exchange(X25519PublicKey.from_public_bytes(enc_pk)), eph_pk, enc_pk)
    # fresh key per message, so a fixed nonce is safe
    body = ChaCha20Poly1305(key).encrypt(bytes(12), plaintext, eph_pk)
    return eph_pk + crh(TAG_KEYCOMMIT + key) + body


@lru_cache(maxsize=4096)
def _enc_keypair(enc_sk: bytes) -> tuple[X25519PrivateKey, bytes]:
    sk = X25519PrivateKey.from_private_bytes(enc_sk)
    return sk, sk.public_key().public_bytes(_RAW, _RAW_PUB)


def decrypt_note(enc_sk: bytes, ciphertext: bytes) -> bytes | None:
    """Return the plaintext, or None if the ciphertext is not for this key."""
    if len(ciphertext) < ENC_OVERHEAD:
        return None
    eph_pk, commit, body = ciphertext[:32], ciphertext[32:64], ciphertext[64:]
    sk, enc_pk = _enc_keypair(enc_sk)
    try:
        key = _note_key(sk.exchange(X25519PublicKey.from_public_bytes(eph_pk)), eph_pk, enc_pk)
    except ValueError:
        return None
    if crh(TAG_KEYCOMMIT + key) != commit:
        return None
    try:
        return ChaCha20Poly1305(key).decrypt(bytes(12), body, eph_pk)
    except InvalidTag:
        return None


@dataclass(frozen=True)
class SignatureKeypair:
    pk_sig: bytes
    sk_sig: bytes


def signature_keypair(rng: random.Random) -> SignatureKeypair:
    sk = Ed25519PrivateKey.from_private_bytes(rng.randbytes(32))
    return SignatureKeypair(sk.public_key().public_bytes(_RAW, _RAW_PUB), sk.private_bytes(_RAW, _RAW_PRIV, _NO_ENC))


def sign(sk_sig: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(sk_sig).sign(message)


def verify_sig(pk_sig: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(pk_sig).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True
