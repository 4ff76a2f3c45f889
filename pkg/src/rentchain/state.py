"""World state: accounts plus the contract layer's storage.

State is deterministically derived by replaying the chain; two replays of the
same blocks must serialize to identical bytes, so every map is written out in
sorted order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum

from .errors import DecodeError
from .serialization import Reader, Writer
from .wallet import ADDRESS_LEN, render_address


@dataclass
class Account:
    balance: int = 0
    nonce: int = 0


class VehicleStatus(str, Enum):
    AVAILABLE = "Available"
    RENTED = "Rented"


@dataclass
class LicenseRecord:
    license_id: str
    added_by: bytes
    added_at_height: int

    def to_json(self) -> dict:
        return {
            "license_id": self.license_id,
            "added_by": render_address(self.added_by),
            "added_at_height": self.added_at_height,
        }


@dataclass
class Vehicle:
    vehicle_id: str
    daily_price: int
    status: VehicleStatus
    owner: bytes

    def to_json(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "daily_price": self.daily_price,
            "status": self.status.value,
            "owner": render_address(self.owner),
        }


@dataclass
class RentalAgreement:
    """One vehicle mapped to one lessee, with escrowed deposit and debt."""

    vehicle_id: str
    client: bytes
    license_id: str
    deposit: int
    accrued_revenue: int
    charges: int
    start_day: int
    days_elapsed: int

    def to_json(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "client": render_address(self.client),
            "license_id": self.license_id,
            "deposit": self.deposit,
            "accrued_revenue": self.accrued_revenue,
            "charges": self.charges,
            "start_day": self.start_day,
            "days_elapsed": self.days_elapsed,
        }


@dataclass
class ContractState:
    admin: bytes
    fleet_owner: bytes
    escrow_address: bytes
    surcharge_fee: int
    current_day: int = 0
    licenses: dict[str, LicenseRecord] = field(default_factory=dict)
    fleet: dict[str, Vehicle] = field(default_factory=dict)
    agreements: dict[str, RentalAgreement] = field(default_factory=dict)

    def clone(self) -> "ContractState":
        return ContractState(
            admin=self.admin,
            fleet_owner=self.fleet_owner,
            escrow_address=self.escrow_address,
            surcharge_fee=self.surcharge_fee,
            current_day=self.current_day,
            licenses={k: LicenseRecord(v.license_id, v.added_by, v.added_at_height)
                      for k, v in self.licenses.items()},
            fleet={k: Vehicle(v.vehicle_id, v.daily_price, v.status, v.owner)
                   for k, v in self.fleet.items()},
            agreements={k: RentalAgreement(a.vehicle_id, a.client, a.license_id,
                                           a.deposit, a.accrued_revenue, a.charges,
                                           a.start_day, a.days_elapsed)
                        for k, a in self.agreements.items()},
        )

    def write(self, w: Writer) -> None:
        w.bytes_var(self.admin)
        w.bytes_var(self.fleet_owner)
        w.bytes_var(self.escrow_address)
        w.u64(self.surcharge_fee)
        w.u64(self.current_day)
        w.u32(len(self.licenses))
        for license_id in sorted(self.licenses):
            record = self.licenses[license_id]
            w.str_var(record.license_id)
            w.bytes_var(record.added_by)
            w.u64(record.added_at_height)
        w.u32(len(self.fleet))
        for vehicle_id in sorted(self.fleet):
            vehicle = self.fleet[vehicle_id]
            w.str_var(vehicle.vehicle_id)
            w.u64(vehicle.daily_price)
            w.u8(0 if vehicle.status is VehicleStatus.AVAILABLE else 1)
            w.bytes_var(vehicle.owner)
        w.u32(len(self.agreements))
        for vehicle_id in sorted(self.agreements):
            a = self.agreements[vehicle_id]
            w.str_var(a.vehicle_id)
            w.bytes_var(a.client)
            w.str_var(a.license_id)
            w.u64(a.deposit)
            w.u64(a.accrued_revenue)
            w.u64(a.charges)
            w.u64(a.start_day)
            w.u64(a.days_elapsed)

    @classmethod
    def read(cls, r: Reader) -> "ContractState":
        state = cls(
            admin=r.bytes_var(),
            fleet_owner=r.bytes_var(),
            escrow_address=r.bytes_var(),
            surcharge_fee=r.u64(),
            current_day=r.u64(),
        )
        for _ in range(r.u32()):
            record = LicenseRecord(r.str_var(), r.bytes_var(), r.u64())
            state.licenses[record.license_id] = record
        for _ in range(r.u32()):
            vehicle = Vehicle(
                vehicle_id=r.str_var(),
                daily_price=r.u64(),
                status=VehicleStatus.AVAILABLE if r.u8() == 0 else VehicleStatus.RENTED,
                owner=r.bytes_var(),
            )
            state.fleet[vehicle.vehicle_id] = vehicle
        for _ in range(r.u32()):
            agreement = RentalAgreement(
                vehicle_id=r.str_var(),
                client=r.bytes_var(),
                license_id=r.str_var(),
                deposit=r.u64(),
                accrued_revenue=r.u64(),
                charges=r.u64(),
                start_day=r.u64(),
                days_elapsed=r.u64(),
            )
            state.agreements[agreement.vehicle_id] = agreement
        return state

    def to_json(self) -> dict:
        return {
            "current_day": self.current_day,
            "licenses": [record.to_json()
                         for _, record in sorted(self.licenses.items())],
            "fleet": [vehicle.to_json()
                      for _, vehicle in sorted(self.fleet.items())],
            "agreements": [a.to_json()
                           for _, a in sorted(self.agreements.items())],
        }


class WorldState:
    """Accounts (balance, nonce) plus contract storage."""

    def __init__(self, accounts: dict[bytes, Account], contracts: ContractState):
        self.accounts = accounts
        self.contracts = contracts

    def clone(self) -> "WorldState":
        return WorldState(
            accounts={addr: Account(acct.balance, acct.nonce)
                      for addr, acct in self.accounts.items()},
            contracts=self.contracts.clone(),
        )

    def account(self, address: bytes) -> Account:
        """Fetch-or-create; touching an address materializes its entry."""
        if len(address) != ADDRESS_LEN:
            raise DecodeError(f"address must be {ADDRESS_LEN} bytes")
        acct = self.accounts.get(address)
        if acct is None:
            acct = Account()
            self.accounts[address] = acct
        return acct

    def balance(self, address: bytes) -> int:
        acct = self.accounts.get(address)
        return acct.balance if acct else 0

    def nonce(self, address: bytes) -> int:
        acct = self.accounts.get(address)
        return acct.nonce if acct else 0

    def total_currency(self) -> int:
        return sum(acct.balance for acct in self.accounts.values())

    def canonical_bytes(self) -> bytes:
        w = Writer()
        w.u32(len(self.accounts))
        for address in sorted(self.accounts):
            acct = self.accounts[address]
            w.bytes_var(address)
            w.u64(acct.balance)
            w.u64(acct.nonce)
        self.contracts.write(w)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "WorldState":
        r = Reader(data)
        accounts: dict[bytes, Account] = {}
        for _ in range(r.u32()):
            address = r.bytes_var()
            accounts[address] = Account(balance=r.u64(), nonce=r.u64())
        contracts = ContractState.read(r)
        r.expect_eof()
        return cls(accounts=accounts, contracts=contracts)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_bytes()).hexdigest()

    def to_json(self) -> dict:
        return {
            "accounts": {
                render_address(address): {"balance": acct.balance, "nonce": acct.nonce}
                for address, acct in sorted(self.accounts.items())
            },
            "contracts": self.contracts.to_json(),
        }
