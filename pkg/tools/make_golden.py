"""Regenerate the cross-component signing fixtures under frontend/test/golden/.

The web client re-implements canonical serialization, Ed25519 signing, and
the wallet file cipher. Both test suites read the JSON written here, so a
drift on either side shows up as a byte mismatch against the same fixture.

Run from the repository root:

    python3 tools/make_golden.py
"""

import hashlib
import json
import random
from pathlib import Path

from rentchain.transactions import (
    AddFunds,
    AddLicense,
    AddVehicle,
    AdvanceDay,
    RentCar,
    ReturnCar,
    Transfer,
    build_signed,
)
from rentchain.wallet import generate_keypair, render_address, save_wallet

OUT_DIR = Path(__file__).resolve().parent.parent / "frontend" / "test" / "golden"

VECTOR_COUNT = 100
WALLET_PASSPHRASE = "correct horse battery staple"

# A few ids with non-ASCII characters so the UTF-8 length prefixing is
# exercised, not just the happy single-byte case.
VEHICLE_IDS = ["V-1", "sedan-04", "kombi ü2", "VAN*9", "x" * 40]
LICENSE_IDS = ["12345678Z", "D-9912", "licença-7", "00000000A"]


def seed_for(i: int) -> bytes:
    return hashlib.sha256(f"golden-{i}".encode()).digest()


def make_payload(rng: random.Random, i: int):
    kind = i % 7
    if kind == 0:
        other = generate_keypair(seed_for(1000 + i))
        return Transfer(to=other.address, amount=rng.randrange(0, 10_000))
    if kind == 1:
        return AddLicense(license_id=rng.choice(LICENSE_IDS))
    if kind == 2:
        return AddVehicle(vehicle_id=rng.choice(VEHICLE_IDS),
                          daily_price=rng.randrange(1, 500))
    if kind == 3:
        return RentCar(vehicle_id=rng.choice(VEHICLE_IDS),
                       license_id=rng.choice(LICENSE_IDS),
                       deposit=rng.randrange(0, 1_000))
    if kind == 4:
        return AddFunds(vehicle_id=rng.choice(VEHICLE_IDS),
                        amount=rng.randrange(1, 1_000))
    if kind == 5:
        return ReturnCar(vehicle_id=rng.choice(VEHICLE_IDS))
    return AdvanceDay()


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    rng = random.Random("golden-vectors")

    vectors = []
    for i in range(VECTOR_COUNT):
        keypair = generate_keypair(seed_for(i))
        nonce = rng.randrange(1, 2**32)
        tx = build_signed(keypair, nonce, make_payload(rng, i))
        vectors.append({
            "seed": keypair.private_key.hex(),
            "address": render_address(keypair.address),
            "public_key": keypair.public_key.hex(),
            "nonce": nonce,
            "doc": tx.to_json(),
            "signing_bytes": tx.signing_bytes().hex(),
            "signature": tx.signature.hex(),
            "wire": tx.to_bytes().hex(),
            "txid": tx.txid().hex(),
        })
    (OUT_DIR / "transactions.json").write_text(
        json.dumps(vectors, indent=1) + "\n")

    wallet_seed = hashlib.sha256(b"golden-wallet").digest()
    keypair = generate_keypair(wallet_seed)
    wallet_path = OUT_DIR / "wallet.json"
    save_wallet(keypair, str(wallet_path), WALLET_PASSPHRASE)
    meta = {
        "passphrase": WALLET_PASSPHRASE,
        "seed": wallet_seed.hex(),
        "address": render_address(keypair.address),
    }
    (OUT_DIR / "wallet_expected.json").write_text(
        json.dumps(meta, indent=1) + "\n")

    print(f"wrote {len(vectors)} vectors and wallet fixture to {OUT_DIR}")


if __name__ == "__main__":
    main()
