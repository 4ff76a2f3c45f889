"""Hash-chained block ledger.

Blocks are admitted by brute-force nonce search against a leading-zero-bit
difficulty target, or by stake-proportional validator selection seeded from
the previous block hash. State is a deterministic fold of all transactions
from genesis; the genesis block's body is the chain's founding configuration
(initial allocations and privileged addresses), so its digest is bound into
the hash chain like any transaction list.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Sequence

from .engine import apply_transaction
from .errors import (
    BadPrevHash,
    BadProof,
    BadTxRoot,
    ChainInvalid,
    NoStake,
    RentChainError,
    TxInvalid,
)
from .serialization import Reader, Writer
from .state import Account, ContractState, WorldState
from .transactions import Transaction
from .wallet import ADDRESS_LEN, parse_address, render_address

HASH_LEN = 32
ZERO_HASH = b"\x00" * HASH_LEN

# Default escrow account: a fixed address nobody holds a key for.
DEFAULT_ESCROW = hashlib.sha256(b"rentchain/escrow/v1").digest()[:ADDRESS_LEN]


class ConsensusMode(str, Enum):
    POW = "pow"
    POS = "pos"


@dataclass(frozen=True)
class ChainConfig:
    """Operational consensus knobs; instant_mine makes the node seal a block
    for every accepted transaction immediately, like a local dev chain."""

    consensus_mode: ConsensusMode = ConsensusMode.POW
    difficulty: int = 0
    block_reward: int = 0
    instant_mine: bool = False

    def __post_init__(self):
        if self.difficulty < 0 or self.difficulty > 255:
            raise ValueError("difficulty must be in 0..=255")
        if self.block_reward < 0:
            raise ValueError("block_reward must be non-negative")

    def to_json(self) -> dict:
        return {
            "consensus_mode": self.consensus_mode.value,
            "difficulty": self.difficulty,
            "block_reward": self.block_reward,
            "instant_mine": self.instant_mine,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ChainConfig":
        return cls(
            consensus_mode=ConsensusMode(doc.get("consensus_mode", "pow")),
            difficulty=int(doc.get("difficulty", 0)),
            block_reward=int(doc.get("block_reward", 0)),
            instant_mine=bool(doc.get("instant_mine", False)),
        )


@dataclass(frozen=True)
class GenesisConfig:
    """Founding chain content: initial balances, privileged addresses, and the
    consensus rules every later block is checked against."""

    allocations: tuple[tuple[bytes, int], ...]
    admin: bytes
    fleet_owner: bytes
    escrow: bytes = DEFAULT_ESCROW
    surcharge_fee: int = 1
    consensus_mode: ConsensusMode = ConsensusMode.POW
    difficulty: int = 0
    block_reward: int = 0

    @staticmethod
    def make(allocations: dict[bytes, int], admin: bytes, fleet_owner: bytes,
             escrow: bytes = DEFAULT_ESCROW, surcharge_fee: int = 1,
             consensus_mode: ConsensusMode = ConsensusMode.POW,
             difficulty: int = 0, block_reward: int = 0) -> "GenesisConfig":
        return GenesisConfig(
            allocations=tuple(sorted(allocations.items())),
            admin=admin,
            fleet_owner=fleet_owner,
            escrow=escrow,
            surcharge_fee=surcharge_fee,
            consensus_mode=consensus_mode,
            difficulty=0 if consensus_mode is ConsensusMode.POS else difficulty,
            block_reward=block_reward,
        )

    def canonical_bytes(self) -> bytes:
        w = Writer()
        w.u32(len(self.allocations))
        for address, amount in sorted(self.allocations):
            w.bytes_var(address)
            w.u64(amount)
        w.bytes_var(self.admin)
        w.bytes_var(self.fleet_owner)
        w.bytes_var(self.escrow)
        w.u64(self.surcharge_fee)
        w.u8(0 if self.consensus_mode is ConsensusMode.POW else 1)
        w.u8(self.difficulty)
        w.u64(self.block_reward)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "GenesisConfig":
        allocations = tuple((r.bytes_var(), r.u64()) for _ in range(r.u32()))
        return cls(
            allocations=allocations,
            admin=r.bytes_var(),
            fleet_owner=r.bytes_var(),
            escrow=r.bytes_var(),
            surcharge_fee=r.u64(),
            consensus_mode=ConsensusMode.POW if r.u8() == 0 else ConsensusMode.POS,
            difficulty=r.u8(),
            block_reward=r.u64(),
        )

    def total_allocated(self) -> int:
        return sum(amount for _, amount in self.allocations)

    def to_json(self) -> dict:
        return {
            "allocations": {render_address(a): amount for a, amount in self.allocations},
            "admin": render_address(self.admin),
            "fleet_owner": render_address(self.fleet_owner),
            "escrow": render_address(self.escrow),
            "surcharge_fee": self.surcharge_fee,
            "consensus_mode": self.consensus_mode.value,
            "difficulty": self.difficulty,
            "block_reward": self.block_reward,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GenesisConfig":
        return cls.make(
            allocations={parse_address(a): int(v)
                         for a, v in doc.get("allocations", {}).items()},
            admin=parse_address(doc["admin"]),
            fleet_owner=parse_address(doc["fleet_owner"]),
            escrow=parse_address(doc["escrow"]) if "escrow" in doc else DEFAULT_ESCROW,
            surcharge_fee=int(doc.get("surcharge_fee", 1)),
            consensus_mode=ConsensusMode(doc.get("consensus_mode", "pow")),
            difficulty=int(doc.get("difficulty", 0)),
            block_reward=int(doc.get("block_reward", 0)),
        )


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_hash: bytes
    tx_root: bytes
    timestamp: int
    difficulty: int
    nonce: int
    validator: bytes | None = None

    def to_bytes(self) -> bytes:
        w = Writer()
        w.u64(self.height)
        w.bytes_var(self.prev_hash)
        w.bytes_var(self.tx_root)
        w.u64(self.timestamp)
        w.u8(self.difficulty)
        w.u64(self.nonce)
        if self.validator is None:
            w.u8(0)
        else:
            w.u8(1)
            w.bytes_var(self.validator)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "BlockHeader":
        height = r.u64()
        prev_hash = r.bytes_var()
        tx_root = r.bytes_var()
        if len(prev_hash) != HASH_LEN or len(tx_root) != HASH_LEN:
            raise ChainInvalid("header digests must be 32 bytes")
        timestamp = r.u64()
        difficulty = r.u8()
        nonce = r.u64()
        validator = r.bytes_var() if r.u8() == 1 else None
        return cls(height=height, prev_hash=prev_hash, tx_root=tx_root,
                   timestamp=timestamp, difficulty=difficulty, nonce=nonce,
                   validator=validator)

    def to_json(self) -> dict:
        return {
            "height": self.height,
            "prev_hash": self.prev_hash.hex(),
            "tx_root": self.tx_root.hex(),
            "timestamp": self.timestamp,
            "difficulty": self.difficulty,
            "nonce": self.nonce,
            "validator": render_address(self.validator) if self.validator else None,
        }


# Byte offset of the nonce within the serialized header: height (8) +
# prev_hash (4+32) + tx_root (4+32) + timestamp (8) + difficulty (1).
# The mining loop patches these 8 bytes in place instead of re-serializing.
_NONCE_OFFSET = 89


def block_hash(header: BlockHeader) -> bytes:
    """SHA-256 of the canonical header bytes."""
    return hashlib.sha256(header.to_bytes()).digest()


def leading_zero_bits(digest: bytes) -> int:
    return 256 - int.from_bytes(digest, "big").bit_length()


def meets_difficulty(digest: bytes, difficulty: int) -> bool:
    return leading_zero_bits(digest) >= difficulty


def tx_list_bytes(transactions: Sequence[Transaction]) -> bytes:
    w = Writer()
    w.u32(len(transactions))
    for tx in transactions:
        w.bytes_var(tx.to_bytes())
    return w.getvalue()


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...] = ()
    genesis: "GenesisConfig | None" = None

    def body_bytes(self) -> bytes:
        if self.header.height == 0:
            if self.genesis is None:
                raise ChainInvalid("genesis block without founding config")
            return self.genesis.canonical_bytes()
        return tx_list_bytes(self.transactions)

    def to_bytes(self) -> bytes:
        return self.header.to_bytes() + self.body_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Block":
        r = Reader(data)
        header = BlockHeader.read(r)
        if header.height == 0:
            genesis = GenesisConfig.read(r)
            block = cls(header=header, transactions=(), genesis=genesis)
        else:
            transactions = tuple(Transaction.from_bytes(r.bytes_var())
                                 for _ in range(r.u32()))
            block = cls(header=header, transactions=transactions)
        r.expect_eof()
        return block

    def hash(self) -> bytes:
        return block_hash(self.header)

    def to_json(self) -> dict:
        doc = {"header": self.header.to_json()}
        if self.genesis is not None:
            doc["genesis"] = self.genesis.to_json()
        doc["transactions"] = [tx.to_json() for tx in self.transactions]
        return doc


def make_genesis(genesis: GenesisConfig) -> Block:
    header = BlockHeader(
        height=0,
        prev_hash=ZERO_HASH,
        tx_root=hashlib.sha256(genesis.canonical_bytes()).digest(),
        timestamp=0,
        difficulty=genesis.difficulty,
        nonce=0,
        validator=None,
    )
    return Block(header=header, transactions=(), genesis=genesis)


def genesis_state(genesis: GenesisConfig) -> WorldState:
    accounts = {address: Account(balance=amount)
                for address, amount in genesis.allocations}
    accounts.setdefault(genesis.escrow, Account())
    contracts = ContractState(
        admin=genesis.admin,
        fleet_owner=genesis.fleet_owner,
        escrow_address=genesis.escrow,
        surcharge_fee=genesis.surcharge_fee,
    )
    return WorldState(accounts=accounts, contracts=contracts)


def selection_stakes(state: WorldState) -> dict[bytes, int]:
    """Stake equals account balance; the escrow account never proposes."""
    escrow = state.contracts.escrow_address
    return {address: acct.balance for address, acct in state.accounts.items()
            if acct.balance > 0 and address != escrow}


def select_validator(stakes: dict[bytes, int], seed: bytes) -> bytes:
    """Pick an address with probability proportional to its stake,
    deterministically in the seed."""
    total = sum(v for v in stakes.values() if v > 0)
    if total <= 0:
        raise NoStake("no address holds positive stake")
    point = int.from_bytes(seed, "big") % total
    acc = 0
    for address in sorted(stakes):
        value = stakes[address]
        if value <= 0:
            continue
        acc += value
        if point < acc:
            return address
    raise AssertionError("unreachable: selection point beyond total stake")


def _apply_block_effects(parent_state: WorldState, validator: bytes | None,
                         reward: int, transactions: Sequence[Transaction],
                         height: int) -> WorldState:
    state = parent_state.clone()
    if reward > 0:
        if validator is None:
            raise TxInvalid(-1, "block reward with no proposer to credit")
        if validator == state.contracts.escrow_address:
            raise TxInvalid(-1, "block reward cannot credit the escrow account")
        state.account(validator).balance += reward
    for index, tx in enumerate(transactions):
        try:
            state = apply_transaction(state, tx, height)
        except RentChainError as exc:
            raise TxInvalid(index, f"{exc.name}: {exc.detail}") from exc
    return state


def mine_block(parent: Block, transactions: Sequence[Transaction],
               config: ChainConfig, miner: bytes, *,
               parent_state: WorldState, timestamp: int) -> Block:
    """Assemble and seal the next block on top of `parent`.

    All candidate transactions must apply cleanly onto the parent state
    (after the proposer's reward is credited); otherwise TxInvalid names the
    offender. In stake mode the proposer is chosen from the parent state and
    no nonce search happens.
    """
    height = parent.header.height + 1
    prev = block_hash(parent.header)
    if config.consensus_mode is ConsensusMode.POS:
        validator = select_validator(selection_stakes(parent_state), prev)
        difficulty = 0
    else:
        if len(miner) != ADDRESS_LEN:
            raise ValueError("miner must be a 20-byte address")
        validator = miner
        difficulty = config.difficulty

    _apply_block_effects(parent_state, validator, config.block_reward,
                         transactions, height)

    body = tx_list_bytes(transactions)
    header = BlockHeader(
        height=height,
        prev_hash=prev,
        tx_root=hashlib.sha256(body).digest(),
        timestamp=timestamp,
        difficulty=difficulty,
        nonce=0,
        validator=validator,
    )
    if config.consensus_mode is ConsensusMode.POW and difficulty > 0:
        header = _search_nonce(header, difficulty)
    return Block(header=header, transactions=tuple(transactions))


def _search_nonce(header: BlockHeader, difficulty: int) -> BlockHeader:
    buf = bytearray(header.to_bytes())
    full, rem = divmod(difficulty, 8)
    prefix = b"\x00" * full
    limit = 1 << (8 - rem) if rem else 256
    nonce = 0
    sha256 = hashlib.sha256
    while True:
        buf[_NONCE_OFFSET:_NONCE_OFFSET + 8] = nonce.to_bytes(8, "big")
        digest = sha256(buf).digest()
        if digest[:full] == prefix and digest[full] < limit:
            return replace(header, nonce=nonce)
        nonce += 1


def check_genesis(block: Block, expected: GenesisConfig | None = None) -> GenesisConfig:
    header = block.header
    if header.height != 0:
        raise ChainInvalid(f"genesis must be height 0, got {header.height}")
    if header.prev_hash != ZERO_HASH:
        raise BadPrevHash("genesis prev_hash must be all-zero")
    if block.genesis is None:
        raise ChainInvalid("genesis block carries no founding config")
    if block.transactions:
        raise ChainInvalid("genesis block must not carry transactions")
    if header.tx_root != hashlib.sha256(block.body_bytes()).digest():
        raise BadTxRoot("genesis content does not match its digest")
    if header.difficulty != block.genesis.difficulty:
        raise BadProof("genesis difficulty field disagrees with founding config")
    # Genesis is a pure function of the founding config, so the remaining
    # header fields are pinned too; without this a flipped genesis timestamp
    # would only surface one block later as a linkage failure.
    if header.timestamp != 0 or header.nonce != 0 or header.validator is not None:
        raise ChainInvalid("genesis header fields do not match the founding config")
    if expected is not None and block.genesis != expected:
        raise ChainInvalid("chain was founded with a different configuration")
    return block.genesis


def check_and_apply(prev: Block, state: WorldState, block: Block,
                    genesis: GenesisConfig) -> WorldState:
    """Validate `block` against the tip (prev, state); return the new state.

    Raises BadPrevHash / BadProof / BadTxRoot / TxInvalid; on any failure the
    input state is untouched.
    """
    header = block.header
    if header.height != prev.header.height + 1:
        raise BadPrevHash(
            f"height {header.height} does not extend {prev.header.height}")
    if header.prev_hash != block_hash(prev.header):
        raise BadPrevHash(f"prev_hash mismatch at height {header.height}")
    if block.header.height != 0 and block.genesis is not None:
        raise ChainInvalid("only genesis may carry founding config")
    if header.tx_root != hashlib.sha256(block.body_bytes()).digest():
        raise BadTxRoot(f"tx_root mismatch at height {header.height}")
    if header.validator is None:
        raise BadProof(f"block {header.height} names no proposer")
    if genesis.consensus_mode is ConsensusMode.POW:
        if header.difficulty != genesis.difficulty:
            raise BadProof(
                f"difficulty {header.difficulty} != chain difficulty {genesis.difficulty}")
        if not meets_difficulty(block_hash(header), header.difficulty):
            raise BadProof(f"hash misses difficulty target at height {header.height}")
    else:
        if header.difficulty != 0:
            raise BadProof("stake-mode blocks carry no work target")
        expected = select_validator(selection_stakes(state),
                                    block_hash(prev.header))
        if header.validator != expected:
            raise BadProof(
                f"block {header.height} proposer is not the selected validator")
    return _apply_block_effects(state, header.validator, genesis.block_reward,
                                block.transactions, header.height)


def replay_states(blocks: Sequence[Block],
                  expected_genesis: GenesisConfig | None = None
                  ) -> Iterator[tuple[Block, WorldState]]:
    """Fold the chain from genesis, yielding the state after every block.

    Raises the specific admission error, annotated with the failing height
    via ChainInvalid, as soon as a block fails.
    """
    if not blocks:
        raise ChainInvalid("empty chain: no genesis block")
    genesis_config = check_genesis(blocks[0], expected_genesis)
    state = genesis_state(genesis_config)
    yield blocks[0], state
    prev = blocks[0]
    for block in blocks[1:]:
        state = check_and_apply(prev, state, block, genesis_config)
        yield block, state
        prev = block


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    bad_height: int | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        doc: dict = {"ok": self.ok}
        if not self.ok:
            doc["first_bad_height"] = self.bad_height
            doc["reason"] = self.reason
        return doc


def validate_chain(blocks: Sequence[Block],
                   expected_genesis: GenesisConfig | None = None) -> ValidationReport:
    """Replay from genesis; report the lowest offending height, if any."""
    checked = -1
    try:
        for block, _ in replay_states(blocks, expected_genesis):
            checked = block.header.height
    except RentChainError as exc:
        return ValidationReport(ok=False, bad_height=checked + 1,
                                reason=f"{exc.name}: {exc.detail}")
    return ValidationReport(ok=True)


def replay_state(blocks: Sequence[Block],
                 expected_genesis: GenesisConfig | None = None) -> WorldState:
    """Deterministic state fold of a valid chain; ChainInvalid otherwise."""
    state: WorldState | None = None
    height = -1
    try:
        for block, state in replay_states(blocks, expected_genesis):
            height = block.header.height
    except RentChainError as exc:
        raise ChainInvalid(f"height {height + 1}: {exc.name}: {exc.detail}") from exc
    assert state is not None
    return state


class Chain:
    """The single writer's view: blocks plus the incrementally maintained state."""

    def __init__(self, genesis: GenesisConfig, blocks: list[Block], state: WorldState):
        self.genesis = genesis
        self.blocks = blocks
        self.state = state

    @classmethod
    def create(cls, genesis: GenesisConfig) -> "Chain":
        block = make_genesis(genesis)
        return cls(genesis=genesis, blocks=[block], state=genesis_state(genesis))

    @classmethod
    def from_blocks(cls, blocks: Sequence[Block],
                    expected_genesis: GenesisConfig | None = None) -> "Chain":
        state = replay_state(blocks, expected_genesis)
        genesis = blocks[0].genesis
        assert genesis is not None
        return cls(genesis=genesis, blocks=list(blocks), state=state)

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.tip.header.height

    def append_block(self, block: Block) -> WorldState:
        """Validate and append atomically; state is advanced only on success."""
        new_state = check_and_apply(self.tip, self.state, block, self.genesis)
        self.blocks.append(block)
        self.state = new_state
        return new_state

    def chain_config(self, instant_mine: bool = False) -> ChainConfig:
        return ChainConfig(
            consensus_mode=self.genesis.consensus_mode,
            difficulty=self.genesis.difficulty,
            block_reward=self.genesis.block_reward,
            instant_mine=instant_mine,
        )
