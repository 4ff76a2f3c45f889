"""Node configuration file handling.

A node is configured by a single JSON document naming the listen address,
data directory, consensus settings, the founding allocations, and the
privileged role addresses. The same document deterministically defines the
genesis block, so two nodes started from the same file build identical
chains.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .chain import (
    DEFAULT_ESCROW,
    ChainConfig,
    ConsensusMode,
    GenesisConfig,
)
from .errors import ParseError
from .wallet import parse_address, render_address

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8545


@dataclass
class NodeConfig:
    admin: bytes
    fleet_owner: bytes
    chain: ChainConfig = field(default_factory=ChainConfig)
    allocations: dict[bytes, int] = field(default_factory=dict)
    escrow: bytes = DEFAULT_ESCROW
    surcharge_fee: int = 1
    host: str = DEFAULT_HOST
    port: int = DEFAULT_PORT
    data_dir: str | None = None
    # Blocks per automatic day tick; every block whose height is a multiple
    # of this gets an admin-signed AdvanceDay appended. 0 means manual days.
    auto_mine_interval: int = 0
    # Wallet file the node signs auto ticks with; must hold the admin key.
    admin_wallet: str | None = None

    def genesis_config(self) -> GenesisConfig:
        return GenesisConfig.make(
            allocations=dict(self.allocations),
            admin=self.admin,
            fleet_owner=self.fleet_owner,
            escrow=self.escrow,
            surcharge_fee=self.surcharge_fee,
            consensus_mode=self.chain.consensus_mode,
            difficulty=self.chain.difficulty,
            block_reward=self.chain.block_reward,
        )

    def to_json(self) -> dict:
        return {
            "host": self.host,
            "port": self.port,
            "chain": self.chain.to_json(),
            "data_dir": self.data_dir,
            "auto_mine_interval": self.auto_mine_interval,
            "admin": render_address(self.admin),
            "fleet_owner": render_address(self.fleet_owner),
            "escrow": render_address(self.escrow),
            "surcharge_fee": self.surcharge_fee,
            "allocations": {render_address(a): v
                            for a, v in sorted(self.allocations.items())},
            "admin_wallet": self.admin_wallet,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def from_json(cls, doc: dict) -> "NodeConfig":
        try:
            admin = parse_address(doc["admin"])
            fleet_owner = parse_address(doc["fleet_owner"])
        except KeyError as exc:
            raise ParseError(f"config is missing required key {exc}") from exc
        try:
            chain = ChainConfig.from_json(doc.get("chain", {}))
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
        allocations = {parse_address(a): int(v)
                       for a, v in doc.get("allocations", {}).items()}
        cfg = cls(admin=admin, fleet_owner=fleet_owner, chain=chain,
                  allocations=allocations)
        if doc.get("escrow") is not None:
            cfg.escrow = parse_address(doc["escrow"])
        cfg.surcharge_fee = int(doc.get("surcharge_fee", cfg.surcharge_fee))
        cfg.host = str(doc.get("host", DEFAULT_HOST))
        cfg.port = int(doc.get("port", DEFAULT_PORT))
        cfg.data_dir = doc.get("data_dir")
        cfg.auto_mine_interval = int(doc.get("auto_mine_interval", 0))
        cfg.admin_wallet = doc.get("admin_wallet")
        if cfg.surcharge_fee < 0:
            raise ParseError("surcharge_fee must be non-negative")
        if cfg.auto_mine_interval < 0:
            raise ParseError("auto_mine_interval must be non-negative")
        if cfg.auto_mine_interval > 0 and not cfg.admin_wallet:
            raise ParseError("auto_mine_interval needs admin_wallet to sign ticks")
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "NodeConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ParseError("config root must be a JSON object")
        cfg = cls.from_json(doc)
        cfg.apply_env_overrides()
        return cfg

    def apply_env_overrides(self) -> None:
        port = os.environ.get("RENTCHAIN_PORT")
        if port:
            self.port = int(port)
        data_dir = os.environ.get("RENTCHAIN_DATA_DIR")
        if data_dir:
            self.data_dir = data_dir
