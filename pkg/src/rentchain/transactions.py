"""Signed, nonce-protected transactions and their payload kinds.

A transaction's canonical bytes exclude the signature; the signature is
computed over those bytes and appended to form the wire encoding. The
transaction id is SHA-256 of the wire encoding.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Union

from . import wallet
from .errors import DecodeError
from .serialization import Reader, Writer
from .wallet import ADDRESS_LEN, parse_address, render_address


@dataclass(frozen=True)
class Transfer:
    to: bytes
    amount: int


@dataclass(frozen=True)
class AddLicense:
    license_id: str


@dataclass(frozen=True)
class AddVehicle:
    vehicle_id: str
    daily_price: int


@dataclass(frozen=True)
class RentCar:
    vehicle_id: str
    license_id: str
    deposit: int


@dataclass(frozen=True)
class AddFunds:
    vehicle_id: str
    amount: int


@dataclass(frozen=True)
class ReturnCar:
    vehicle_id: str


@dataclass(frozen=True)
class AdvanceDay:
    pass


Payload = Union[Transfer, AddLicense, AddVehicle, RentCar, AddFunds, ReturnCar, AdvanceDay]

_PAYLOAD_KINDS: list[tuple[int, str, type]] = [
    (0, "transfer", Transfer),
    (1, "add_license", AddLicense),
    (2, "add_vehicle", AddVehicle),
    (3, "rent_car", RentCar),
    (4, "add_funds", AddFunds),
    (5, "return_car", ReturnCar),
    (6, "advance_day", AdvanceDay),
]
_KIND_BY_TYPE = {cls: kind for kind, _, cls in _PAYLOAD_KINDS}
_NAME_BY_TYPE = {cls: name for _, name, cls in _PAYLOAD_KINDS}
_TYPE_BY_KIND = {kind: cls for kind, _, cls in _PAYLOAD_KINDS}
_TYPE_BY_NAME = {name: cls for _, name, cls in _PAYLOAD_KINDS}


def _check_address(value: bytes, what: str) -> bytes:
    if len(value) != ADDRESS_LEN:
        raise DecodeError(f"{what} must be {ADDRESS_LEN} bytes")
    return value


def write_payload(w: Writer, payload: Payload) -> None:
    w.u8(_KIND_BY_TYPE[type(payload)])
    if isinstance(payload, Transfer):
        w.bytes_var(_check_address(payload.to, "transfer recipient"))
        w.u64(payload.amount)
    elif isinstance(payload, AddLicense):
        w.str_var(payload.license_id)
    elif isinstance(payload, AddVehicle):
        w.str_var(payload.vehicle_id)
        w.u64(payload.daily_price)
    elif isinstance(payload, RentCar):
        w.str_var(payload.vehicle_id)
        w.str_var(payload.license_id)
        w.u64(payload.deposit)
    elif isinstance(payload, AddFunds):
        w.str_var(payload.vehicle_id)
        w.u64(payload.amount)
    elif isinstance(payload, ReturnCar):
        w.str_var(payload.vehicle_id)
    elif isinstance(payload, AdvanceDay):
        pass
    else:  # pragma: no cover
        raise DecodeError(f"unknown payload type {type(payload)!r}")


def read_payload(r: Reader) -> Payload:
    kind = r.u8()
    cls = _TYPE_BY_KIND.get(kind)
    if cls is None:
        raise DecodeError(f"unknown payload kind {kind}")
    if cls is Transfer:
        return Transfer(to=_check_address(r.bytes_var(), "transfer recipient"), amount=r.u64())
    if cls is AddLicense:
        return AddLicense(license_id=r.str_var())
    if cls is AddVehicle:
        return AddVehicle(vehicle_id=r.str_var(), daily_price=r.u64())
    if cls is RentCar:
        return RentCar(vehicle_id=r.str_var(), license_id=r.str_var(), deposit=r.u64())
    if cls is AddFunds:
        return AddFunds(vehicle_id=r.str_var(), amount=r.u64())
    if cls is ReturnCar:
        return ReturnCar(vehicle_id=r.str_var())
    return AdvanceDay()


def payload_to_json(payload: Payload) -> dict:
    doc: dict = {"kind": _NAME_BY_TYPE[type(payload)]}
    if isinstance(payload, Transfer):
        doc.update(to=render_address(payload.to), amount=payload.amount)
    elif isinstance(payload, AddLicense):
        doc.update(license_id=payload.license_id)
    elif isinstance(payload, AddVehicle):
        doc.update(vehicle_id=payload.vehicle_id, daily_price=payload.daily_price)
    elif isinstance(payload, RentCar):
        doc.update(vehicle_id=payload.vehicle_id, license_id=payload.license_id,
                   deposit=payload.deposit)
    elif isinstance(payload, AddFunds):
        doc.update(vehicle_id=payload.vehicle_id, amount=payload.amount)
    elif isinstance(payload, ReturnCar):
        doc.update(vehicle_id=payload.vehicle_id)
    return doc


def payload_from_json(doc: dict) -> Payload:
    try:
        cls = _TYPE_BY_NAME.get(doc["kind"])
        if cls is None:
            raise DecodeError(f"unknown payload kind {doc['kind']!r}")
        if cls is Transfer:
            return Transfer(to=parse_address(doc["to"]), amount=int(doc["amount"]))
        if cls is AddLicense:
            return AddLicense(license_id=str(doc["license_id"]))
        if cls is AddVehicle:
            return AddVehicle(vehicle_id=str(doc["vehicle_id"]),
                              daily_price=int(doc["daily_price"]))
        if cls is RentCar:
            return RentCar(vehicle_id=str(doc["vehicle_id"]),
                           license_id=str(doc["license_id"]),
                           deposit=int(doc["deposit"]))
        if cls is AddFunds:
            return AddFunds(vehicle_id=str(doc["vehicle_id"]), amount=int(doc["amount"]))
        if cls is ReturnCar:
            return ReturnCar(vehicle_id=str(doc["vehicle_id"]))
        return AdvanceDay()
    except (KeyError, TypeError, ValueError) as exc:
        raise DecodeError(f"malformed payload: {exc}") from exc


@dataclass(frozen=True)
class Transaction:
    """A signed instruction from `sender` (JSON field name: "from")."""

    sender: bytes
    nonce: int
    payload: Payload
    public_key: bytes
    signature: bytes = b""

    def signing_bytes(self) -> bytes:
        w = Writer()
        w.bytes_var(_check_address(self.sender, "sender"))
        w.u64(self.nonce)
        write_payload(w, self.payload)
        w.bytes_var(self.public_key)
        return w.getvalue()

    def to_bytes(self) -> bytes:
        w = Writer()
        w.raw(self.signing_bytes())
        w.bytes_var(self.signature)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "Transaction":
        sender = _check_address(r.bytes_var(), "sender")
        nonce = r.u64()
        payload = read_payload(r)
        public_key = r.bytes_var()
        signature = r.bytes_var()
        return cls(sender=sender, nonce=nonce, payload=payload,
                   public_key=public_key, signature=signature)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Transaction":
        r = Reader(data)
        tx = cls.read(r)
        r.expect_eof()
        return tx

    def txid(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()

    def to_json(self) -> dict:
        return {
            "from": render_address(self.sender),
            "nonce": self.nonce,
            "payload": payload_to_json(self.payload),
            "public_key": self.public_key.hex(),
            "signature": self.signature.hex(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Transaction":
        try:
            return cls(
                sender=parse_address(doc["from"]),
                nonce=int(doc["nonce"]),
                payload=payload_from_json(doc["payload"]),
                public_key=bytes.fromhex(doc["public_key"]),
                signature=bytes.fromhex(doc["signature"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DecodeError(f"malformed transaction: {exc}") from exc


def sign_transaction(private_key: bytes, tx: Transaction) -> Transaction:
    """Attach a deterministic signature over the transaction's canonical bytes."""
    signature = wallet.sign(private_key, tx.signing_bytes())
    return Transaction(sender=tx.sender, nonce=tx.nonce, payload=tx.payload,
                       public_key=tx.public_key, signature=signature)


def verify_transaction(tx: Transaction) -> bool:
    """True iff the signature verifies and the sender address matches the key."""
    if wallet.address_from_public_key(tx.public_key) != tx.sender:
        return False
    return wallet.verify(tx.public_key, tx.signing_bytes(), tx.signature)


def build_signed(keypair: wallet.KeyPair, nonce: int, payload: Payload) -> Transaction:
    """Convenience: construct and sign a transaction from a keypair."""
    tx = Transaction(sender=keypair.address, nonce=nonce, payload=payload,
                     public_key=keypair.public_key)
    return sign_transaction(keypair.private_key, tx)
