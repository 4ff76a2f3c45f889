"""Decentralized vehicle rental on a small account-based blockchain."""

__version__ = "0.1.0"

from .chain import (
    Block,
    BlockHeader,
    Chain,
    ChainConfig,
    ConsensusMode,
    GenesisConfig,
    block_hash,
    make_genesis,
    mine_block,
    replay_state,
    select_validator,
    validate_chain,
)
from .config import NodeConfig
from .errors import RentChainError
from .node import Node, create_app
from .state import WorldState
from .store import ChainStore
from .transactions import (
    AddFunds,
    AddLicense,
    AddVehicle,
    AdvanceDay,
    RentCar,
    ReturnCar,
    Transaction,
    Transfer,
    build_signed,
    sign_transaction,
    verify_transaction,
)
from .wallet import KeyPair, generate_keypair, load_wallet, save_wallet

__all__ = [
    "AddFunds",
    "AddLicense",
    "AddVehicle",
    "AdvanceDay",
    "Block",
    "BlockHeader",
    "Chain",
    "ChainConfig",
    "ChainStore",
    "ConsensusMode",
    "GenesisConfig",
    "KeyPair",
    "Node",
    "NodeConfig",
    "RentCar",
    "RentChainError",
    "ReturnCar",
    "Transaction",
    "Transfer",
    "WorldState",
    "block_hash",
    "build_signed",
    "create_app",
    "generate_keypair",
    "load_wallet",
    "make_genesis",
    "mine_block",
    "replay_state",
    "save_wallet",
    "select_validator",
    "sign_transaction",
    "validate_chain",
    "verify_transaction",
]
