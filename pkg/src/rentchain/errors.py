"""Domain error taxonomy.

Every rejection the system can produce is an exception class here; the class
name doubles as the machine-readable error code in API envelopes and CLI
output.
"""

from __future__ import annotations


class RentChainError(Exception):
    """Base class for all domain errors."""

    def __init__(self, detail: str = ""):
        super().__init__(detail)
        self.detail = detail

    @property
    def name(self) -> str:
        return type(self).__name__


# -- serialization / persistence ------------------------------------------

class DecodeError(RentChainError):
    """Bytes or JSON do not parse as the expected structure."""


class ChainDecodeError(RentChainError):
    """A persisted chain file is unreadable or inconsistent at a given height."""

    def __init__(self, height: int, detail: str = ""):
        super().__init__(detail)
        self.height = height


# -- wallet ----------------------------------------------------------------

class BadSeedLength(RentChainError):
    pass


class BadPassphrase(RentChainError):
    pass


# -- transaction admission --------------------------------------------------

class BadSignature(RentChainError):
    pass


class BadNonce(RentChainError):
    pass


class ZeroAmount(RentChainError):
    pass


class InsufficientBalance(RentChainError):
    pass


class BadRecipient(RentChainError):
    """Direct payment to a contract-managed account."""


# -- license registry --------------------------------------------------------

class NotAdmin(RentChainError):
    pass


class MalformedLicense(RentChainError):
    pass


class DuplicateLicense(RentChainError):
    pass


# -- fleet / rental -----------------------------------------------------------

class NotOwner(RentChainError):
    pass


class DuplicateVehicle(RentChainError):
    pass


class BadPrice(RentChainError):
    pass


class UnknownVehicle(RentChainError):
    pass


class VehicleUnavailable(RentChainError):
    pass


class UnknownLicense(RentChainError):
    pass


class InsufficientDeposit(RentChainError):
    pass


class NotLessee(RentChainError):
    pass


class PendingCharges(RentChainError):
    """Return refused: the lessee still owes `amount`."""

    def __init__(self, amount: int):
        super().__init__(f"outstanding charges of {amount} must be paid before return")
        self.amount = amount


# -- chain -------------------------------------------------------------------

class BadPrevHash(RentChainError):
    pass


class BadProof(RentChainError):
    pass


class BadTxRoot(RentChainError):
    pass


class TxInvalid(RentChainError):
    """A transaction inside a block candidate failed to apply."""

    def __init__(self, index: int, reason: str):
        super().__init__(f"transaction {index}: {reason}")
        self.index = index
        self.reason = reason


class ChainInvalid(RentChainError):
    pass


class NoStake(RentChainError):
    pass


# -- node / API ----------------------------------------------------------------

class NotFound(RentChainError):
    pass


class ParseError(RentChainError):
    pass
