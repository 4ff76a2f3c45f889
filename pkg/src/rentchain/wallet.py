"""Keys, addresses, and the encrypted wallet file.

Identity is an Ed25519 keypair; there is no account registration anywhere.
The address is the first 20 bytes of SHA-256 over the raw public key,
rendered as 0x-prefixed hex. Private keys live only in wallet files,
encrypted under a passphrase-derived key; they are never serialized into
the chain, API responses, or logs.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import serialization as crypto_serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import BadPassphrase, BadSeedLength, DecodeError

SEED_LEN = 32
PUBLIC_KEY_LEN = 32
SIGNATURE_LEN = 64
ADDRESS_LEN = 20
ADDRESS_PREFIX = "0x"

PBKDF2_ITERATIONS = 600_000


@dataclass(frozen=True)
class KeyPair:
    """An Ed25519 keypair; private_key is the 32-byte seed."""

    public_key: bytes
    private_key: bytes = field(repr=False)

    @property
    def address(self) -> bytes:
        return address_from_public_key(self.public_key)

    def __repr__(self) -> str:  # keep the seed out of logs and tracebacks
        return f"KeyPair(address={render_address(self.address)})"


def generate_keypair(seed: bytes | None = None) -> KeyPair:
    """Create a keypair; a given 32-byte seed makes generation deterministic."""
    if seed is None:
        priv = Ed25519PrivateKey.generate()
    else:
        if len(seed) != SEED_LEN:
            raise BadSeedLength(f"seed must be {SEED_LEN} bytes, got {len(seed)}")
        priv = Ed25519PrivateKey.from_private_bytes(seed)
    seed_bytes = priv.private_bytes(
        crypto_serialization.Encoding.Raw,
        crypto_serialization.PrivateFormat.Raw,
        crypto_serialization.NoEncryption(),
    )
    pub = priv.public_key().public_bytes(
        crypto_serialization.Encoding.Raw, crypto_serialization.PublicFormat.Raw
    )
    return KeyPair(public_key=pub, private_key=seed_bytes)


def address_from_public_key(public_key: bytes) -> bytes:
    return hashlib.sha256(public_key).digest()[:ADDRESS_LEN]


def render_address(address: bytes) -> str:
    if len(address) != ADDRESS_LEN:
        raise DecodeError(f"address must be {ADDRESS_LEN} bytes, got {len(address)}")
    return ADDRESS_PREFIX + address.hex()


def parse_address(text: str) -> bytes:
    if not text.startswith(ADDRESS_PREFIX):
        raise DecodeError(f"address must start with {ADDRESS_PREFIX}: {text!r}")
    try:
        raw = bytes.fromhex(text[len(ADDRESS_PREFIX):])
    except ValueError as exc:
        raise DecodeError(f"address is not hex: {text!r}") from exc
    if len(raw) != ADDRESS_LEN:
        raise DecodeError(f"address must encode {ADDRESS_LEN} bytes: {text!r}")
    return raw


def sign(private_key: bytes, message: bytes) -> bytes:
    """Deterministic Ed25519 signature over the exact message bytes."""
    return Ed25519PrivateKey.from_private_bytes(private_key).sign(message)


def verify(public_key: bytes, message: bytes, signature: bytes) -> bool:
    if len(public_key) != PUBLIC_KEY_LEN or len(signature) != SIGNATURE_LEN:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(public_key).verify(signature, message)
        return True
    except InvalidSignature:
        return False


# -- wallet file ---------------------------------------------------------------
#
# {
#   "address": "0x..",
#   "public_key_hex": "..",
#   "encrypted_private_key": "<hex AES-GCM ciphertext+tag>",
#   "kdf_params": {"name": "pbkdf2-sha256", "iterations": n,
#                  "salt": "<hex>", "cipher": "aes-256-gcm", "nonce": "<hex>"}
# }
#
# PBKDF2-SHA256 and AES-GCM are available both here and in browser WebCrypto,
# so one wallet file serves the CLI and the web client.

def _derive_key(passphrase: str, salt: bytes, iterations: int) -> bytes:
    return hashlib.pbkdf2_hmac("sha256", passphrase.encode("utf-8"), salt, iterations)


def save_wallet(
    keypair: KeyPair,
    path: str,
    passphrase: str,
    iterations: int = PBKDF2_ITERATIONS,
) -> None:
    salt = os.urandom(16)
    nonce = os.urandom(12)
    key = _derive_key(passphrase, salt, iterations)
    ciphertext = AESGCM(key).encrypt(nonce, keypair.private_key, None)
    document = {
        "address": render_address(keypair.address),
        "public_key_hex": keypair.public_key.hex(),
        "encrypted_private_key": ciphertext.hex(),
        "kdf_params": {
            "name": "pbkdf2-sha256",
            "iterations": iterations,
            "salt": salt.hex(),
            "cipher": "aes-256-gcm",
            "nonce": nonce.hex(),
        },
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2)
        f.write("\n")
    os.chmod(path, 0o600)


def load_wallet(path: str, passphrase: str) -> KeyPair:
    with open(path, "r", encoding="utf-8") as f:
        document = json.load(f)
    try:
        kdf = document["kdf_params"]
        if kdf["name"] != "pbkdf2-sha256" or kdf["cipher"] != "aes-256-gcm":
            raise DecodeError(f"unsupported wallet kdf/cipher: {kdf}")
        salt = bytes.fromhex(kdf["salt"])
        nonce = bytes.fromhex(kdf["nonce"])
        iterations = int(kdf["iterations"])
        ciphertext = bytes.fromhex(document["encrypted_private_key"])
        expected_pub = bytes.fromhex(document["public_key_hex"])
    except (KeyError, ValueError) as exc:
        raise DecodeError(f"malformed wallet file {path}: {exc}") from exc
    key = _derive_key(passphrase, salt, iterations)
    try:
        seed = AESGCM(key).decrypt(nonce, ciphertext, None)
    except InvalidTag as exc:
        raise BadPassphrase(f"cannot decrypt wallet {path}") from exc
    keypair = generate_keypair(seed)
    if keypair.public_key != expected_pub:
        raise DecodeError(f"wallet {path} public key does not match its private key")
    return keypair
