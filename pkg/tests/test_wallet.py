import hashlib
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rentchain.errors import BadPassphrase, BadSeedLength, DecodeError
from rentchain import wallet
from rentchain.wallet import (
    generate_keypair,
    load_wallet,
    parse_address,
    render_address,
    save_wallet,
    sign,
    verify,
)


def test_keypair_is_deterministic_in_seed():
    a = generate_keypair(b"\x05" * 32)
    b = generate_keypair(b"\x05" * 32)
    assert a.public_key == b.public_key
    assert a.address == b.address


def test_bad_seed_length():
    with pytest.raises(BadSeedLength):
        generate_keypair(b"short")


def test_address_is_sha256_prefix_of_public_key():
    kp = generate_keypair(b"\x06" * 32)
    assert kp.address == hashlib.sha256(kp.public_key).digest()[:20]


def test_address_rendering_roundtrip():
    kp = generate_keypair(b"\x07" * 32)
    text = render_address(kp.address)
    assert text.startswith("0x") and len(text) == 42
    assert parse_address(text) == kp.address


@pytest.mark.parametrize("bad", ["", "0x", "12ab", "0x12", "0x" + "zz" * 20,
                                 "0x" + "ab" * 21])
def test_parse_address_rejects_malformed(bad):
    with pytest.raises(DecodeError):
        parse_address(bad)


def test_sign_verify_roundtrip():
    kp = generate_keypair(b"\x08" * 32)
    sig = sign(kp.private_key, b"hello")
    assert len(sig) == 64
    assert verify(kp.public_key, b"hello", sig)
    assert not verify(kp.public_key, b"hellO", sig)


def test_signature_is_deterministic():
    kp = generate_keypair(b"\x09" * 32)
    assert sign(kp.private_key, b"msg") == sign(kp.private_key, b"msg")


def test_verify_rejects_foreign_key_and_bad_lengths():
    kp = generate_keypair(b"\x0a" * 32)
    other = generate_keypair(b"\x0b" * 32)
    sig = sign(kp.private_key, b"msg")
    assert not verify(other.public_key, b"msg", sig)
    assert not verify(kp.public_key[:-1], b"msg", sig)
    assert not verify(kp.public_key, b"msg", sig[:-1])


@given(st.binary(min_size=32, max_size=32), st.binary(max_size=100))
def test_sign_verify_property(seed, message):
    kp = generate_keypair(seed)
    assert verify(kp.public_key, message, sign(kp.private_key, message))


def test_wallet_file_roundtrip(tmp_path):
    kp = generate_keypair(b"\x0c" * 32)
    path = tmp_path / "w.json"
    save_wallet(kp, path, "hunter2")
    loaded = load_wallet(path, "hunter2")
    assert loaded.private_key == kp.private_key
    assert loaded.public_key == kp.public_key
    assert loaded.address == kp.address


def test_wallet_file_schema(tmp_path):
    kp = generate_keypair(b"\x0d" * 32)
    path = tmp_path / "w.json"
    save_wallet(kp, path, "pw")
    doc = json.loads(path.read_text())
    assert set(doc) == {"address", "public_key_hex", "encrypted_private_key",
                        "kdf_params"}
    assert doc["address"] == render_address(kp.address)
    assert doc["public_key_hex"] == kp.public_key.hex()
    kdf = doc["kdf_params"]
    assert kdf["name"] == "pbkdf2-sha256"
    assert kdf["iterations"] >= 100_000
    assert kdf["cipher"] == "aes-256-gcm"


def test_wallet_file_never_contains_private_key(tmp_path):
    kp = generate_keypair(b"\x0e" * 32)
    path = tmp_path / "w.json"
    save_wallet(kp, path, "pw")
    raw = path.read_bytes()
    assert kp.private_key not in raw
    assert kp.private_key.hex().encode() not in raw


def test_wrong_passphrase_rejected(tmp_path):
    kp = generate_keypair(b"\x0f" * 32)
    path = tmp_path / "w.json"
    save_wallet(kp, path, "right")
    with pytest.raises(BadPassphrase):
        load_wallet(path, "wrong")


def test_tampered_ciphertext_rejected(tmp_path):
    kp = generate_keypair(b"\x10" * 32)
    path = tmp_path / "w.json"
    save_wallet(kp, path, "pw")
    doc = json.loads(path.read_text())
    blob = bytearray(bytes.fromhex(doc["encrypted_private_key"]))
    blob[0] ^= 0x01
    doc["encrypted_private_key"] = bytes(blob).hex()
    path.write_text(json.dumps(doc))
    with pytest.raises(BadPassphrase):
        load_wallet(path, "pw")


def test_keypair_repr_redacts_secret():
    kp = generate_keypair(b"\x11" * 32)
    shown = repr(kp)
    assert kp.private_key.hex() not in shown


def test_module_constants():
    assert wallet.SEED_LEN == 32
    assert wallet.SIGNATURE_LEN == 64
    assert wallet.ADDRESS_LEN == 20
