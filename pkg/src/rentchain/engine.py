"""Deterministic state transitions: dispatch of signed transactions onto
world state, covering plain transfers, the driving-license registry, and the
vehicle-rental escrow state machine.

Every operation either returns a fully applied new state or raises, leaving
the caller's state untouched. All arithmetic is integer-exact; after any
successful transition the escrow account balance equals the sum of deposits
plus accrued revenue over active agreements.
"""

from __future__ import annotations

import re

from .errors import (
    BadNonce,
    BadRecipient,
    BadSignature,
    DuplicateLicense,
    DuplicateVehicle,
    BadPrice,
    InsufficientBalance,
    InsufficientDeposit,
    MalformedLicense,
    NotAdmin,
    NotLessee,
    NotOwner,
    PendingCharges,
    RentChainError,
    UnknownLicense,
    UnknownVehicle,
    VehicleUnavailable,
    ZeroAmount,
)
from .state import LicenseRecord, RentalAgreement, Vehicle, VehicleStatus, WorldState
from .transactions import (
    AddFunds,
    AddLicense,
    AddVehicle,
    AdvanceDay,
    RentCar,
    ReturnCar,
    Transaction,
    Transfer,
    verify_transaction,
)

# Standard control-letter table for 8-digit identity numbers: the letter is
# indexed by the number modulo 23.
CONTROL_LETTERS = "TRWAGMYFPDXBNJZSQVHLCKE"

_LICENSE_RE = re.compile(r"^(\d{8})([A-Z])$")


def license_control_letter(number: int) -> str:
    return CONTROL_LETTERS[number % 23]


def validate_license_id(license_id: str) -> bool:
    """8 decimal digits plus the matching uppercase control letter."""
    m = _LICENSE_RE.match(license_id)
    if not m:
        return False
    return m.group(2) == license_control_letter(int(m.group(1)))


def transfer(world: WorldState, sender: bytes, to: bytes, amount: int) -> None:
    if amount <= 0:
        raise ZeroAmount("transfer amount must be positive")
    if to == world.contracts.escrow_address:
        # Escrow only ever holds deposits and accrued revenue; an unsolicited
        # credit would break that one-to-one backing.
        raise BadRecipient("the escrow account cannot receive plain transfers")
    acct = world.account(sender)
    if acct.balance < amount:
        raise InsufficientBalance(f"balance {acct.balance} < amount {amount}")
    acct.balance -= amount
    world.account(to).balance += amount


def add_license(world: WorldState, sender: bytes, license_id: str, height: int) -> None:
    contracts = world.contracts
    if sender != contracts.admin:
        raise NotAdmin("only the admin may register licenses")
    if not validate_license_id(license_id):
        raise MalformedLicense(f"bad license id {license_id!r}")
    if license_id in contracts.licenses:
        raise DuplicateLicense(f"license {license_id} already registered")
    contracts.licenses[license_id] = LicenseRecord(
        license_id=license_id, added_by=sender, added_at_height=height
    )


def list_licenses(world: WorldState) -> list[str]:
    return sorted(world.contracts.licenses)


def add_vehicle(world: WorldState, sender: bytes, vehicle_id: str, daily_price: int) -> None:
    contracts = world.contracts
    if sender != contracts.fleet_owner:
        raise NotOwner("only the fleet owner may add vehicles")
    if vehicle_id in contracts.fleet:
        raise DuplicateVehicle(f"vehicle {vehicle_id} already in fleet")
    if daily_price <= 0:
        raise BadPrice("daily price must be positive")
    contracts.fleet[vehicle_id] = Vehicle(
        vehicle_id=vehicle_id,
        daily_price=daily_price,
        status=VehicleStatus.AVAILABLE,
        owner=sender,
    )


def rent_car(world: WorldState, sender: bytes, vehicle_id: str,
             license_id: str, deposit: int) -> None:
    contracts = world.contracts
    vehicle = contracts.fleet.get(vehicle_id)
    if vehicle is None:
        raise UnknownVehicle(f"no vehicle {vehicle_id} in fleet")
    if vehicle.status is not VehicleStatus.AVAILABLE:
        raise VehicleUnavailable(f"vehicle {vehicle_id} is already rented")
    if license_id not in contracts.licenses:
        raise UnknownLicense(f"license {license_id} is not registered")
    if deposit < vehicle.daily_price:
        raise InsufficientDeposit(
            f"deposit {deposit} below one day's price {vehicle.daily_price}"
        )
    acct = world.account(sender)
    if acct.balance < deposit:
        raise InsufficientBalance(f"balance {acct.balance} < deposit {deposit}")
    acct.balance -= deposit
    world.account(contracts.escrow_address).balance += deposit
    contracts.agreements[vehicle_id] = RentalAgreement(
        vehicle_id=vehicle_id,
        client=sender,
        license_id=license_id,
        deposit=deposit,
        accrued_revenue=0,
        charges=0,
        start_day=contracts.current_day,
        days_elapsed=0,
    )
    vehicle.status = VehicleStatus.RENTED


def advance_day(world: WorldState, sender: bytes) -> None:
    """Tick the contract clock: deduct each active rental's daily price from
    its deposit, or book the shortfall plus the surcharge as debt."""
    contracts = world.contracts
    if sender != contracts.admin:
        raise NotAdmin("only the admin may advance the day")
    contracts.current_day += 1
    for vehicle_id in sorted(contracts.agreements):
        agreement = contracts.agreements[vehicle_id]
        price = contracts.fleet[vehicle_id].daily_price
        agreement.days_elapsed += 1
        if agreement.deposit >= price:
            agreement.deposit -= price
            agreement.accrued_revenue += price
        else:
            agreement.charges += (price - agreement.deposit) + contracts.surcharge_fee
            agreement.accrued_revenue += agreement.deposit
            agreement.deposit = 0


def add_funds(world: WorldState, sender: bytes, vehicle_id: str, amount: int) -> None:
    contracts = world.contracts
    agreement = contracts.agreements.get(vehicle_id)
    if agreement is None or agreement.client != sender:
        raise NotLessee(f"sender is not the lessee of {vehicle_id}")
    if amount <= 0:
        raise ZeroAmount("amount must be positive")
    acct = world.account(sender)
    if acct.balance < amount:
        raise InsufficientBalance(f"balance {acct.balance} < amount {amount}")
    acct.balance -= amount
    world.account(contracts.escrow_address).balance += amount
    # Debt is settled first; only the remainder extends the deposit.
    paid = min(agreement.charges, amount)
    agreement.charges -= paid
    agreement.accrued_revenue += paid
    agreement.deposit += amount - paid


def return_car(world: WorldState, sender: bytes, vehicle_id: str) -> None:
    contracts = world.contracts
    vehicle = contracts.fleet.get(vehicle_id)
    if vehicle is None:
        raise UnknownVehicle(f"no vehicle {vehicle_id} in fleet")
    agreement = contracts.agreements.get(vehicle_id)
    if agreement is None or agreement.client != sender:
        raise NotLessee(f"sender is not the lessee of {vehicle_id}")
    if agreement.charges > 0:
        raise PendingCharges(agreement.charges)
    escrow = world.account(contracts.escrow_address)
    escrow.balance -= agreement.deposit + agreement.accrued_revenue
    world.account(vehicle.owner).balance += agreement.accrued_revenue
    world.account(sender).balance += agreement.deposit
    del contracts.agreements[vehicle_id]
    vehicle.status = VehicleStatus.AVAILABLE


def check_escrow_backing(world: WorldState) -> bool:
    """Escrow balance must exactly back all deposits plus accrued revenue."""
    expected = sum(a.deposit + a.accrued_revenue
                   for a in world.contracts.agreements.values())
    return world.balance(world.contracts.escrow_address) == expected


def apply_transaction(world: WorldState, tx: Transaction, height: int) -> WorldState:
    """Verify, dispatch, and apply one transaction, returning the new state.

    Raises on any rejection; the input state is never mutated, so a failed
    application is side-effect free.
    """
    if not verify_transaction(tx):
        raise BadSignature("signature or sender address does not verify")
    expected_nonce = world.nonce(tx.sender) + 1
    if tx.nonce != expected_nonce:
        raise BadNonce(f"expected nonce {expected_nonce}, got {tx.nonce}")

    new_world = world.clone()
    new_world.account(tx.sender).nonce = tx.nonce

    payload = tx.payload
    if isinstance(payload, Transfer):
        transfer(new_world, tx.sender, payload.to, payload.amount)
    elif isinstance(payload, AddLicense):
        add_license(new_world, tx.sender, payload.license_id, height)
    elif isinstance(payload, AddVehicle):
        add_vehicle(new_world, tx.sender, payload.vehicle_id, payload.daily_price)
    elif isinstance(payload, RentCar):
        rent_car(new_world, tx.sender, payload.vehicle_id,
                 payload.license_id, payload.deposit)
    elif isinstance(payload, AddFunds):
        add_funds(new_world, tx.sender, payload.vehicle_id, payload.amount)
    elif isinstance(payload, ReturnCar):
        return_car(new_world, tx.sender, payload.vehicle_id)
    elif isinstance(payload, AdvanceDay):
        advance_day(new_world, tx.sender)
    else:  # pragma: no cover
        raise RentChainError(f"unhandled payload {type(payload)!r}")
    return new_world
