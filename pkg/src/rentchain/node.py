"""Node runtime: mempool, block production, and the HTTP API.

One lock serializes every mutation of mempool + chain + state, so the final
state always equals some serial order of the accepted transactions. Read
endpoints never take that lock: they grab the current snapshot reference (an
immutable view swapped in atomically after each block) and answer from it,
so every response is consistent at a single height.
"""

from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass
from typing import Mapping, Sequence

from .chain import Block, Chain, block_hash, mine_block
from .config import NodeConfig
from .engine import apply_transaction
from .errors import BadSignature, NotFound, ParseError, RentChainError
from .state import WorldState
from .store import ChainStore
from .transactions import AdvanceDay, Transaction, build_signed, verify_transaction
from .wallet import KeyPair, load_wallet, parse_address, render_address

log = logging.getLogger("rentchain.node")

ADMIN_PASSPHRASE_ENV = "RENTCHAIN_ADMIN_PASSPHRASE"


@dataclass(frozen=True)
class Snapshot:
    """Immutable read view: all blocks, the state they fold to, and a hash
    index. Handed out without locking; must never be mutated."""

    blocks: tuple[Block, ...]
    state: WorldState
    by_hash: Mapping[bytes, Block]

    @property
    def height(self) -> int:
        return self.blocks[-1].header.height


class Mempool:
    """Pending verified transactions, keyed by (sender, nonce).

    Insertion order is the drain order; because admission checks each
    transaction against the projection of everything already pending, a
    sender's transactions always sit in contiguous ascending nonce order.
    """

    def __init__(self):
        self._txs: dict[tuple[bytes, int], Transaction] = {}

    def __len__(self) -> int:
        return len(self._txs)

    def add(self, tx: Transaction) -> None:
        self._txs[(tx.sender, tx.nonce)] = tx

    def pending(self) -> list[Transaction]:
        return list(self._txs.values())

    def drain(self) -> list[Transaction]:
        txs = list(self._txs.values())
        self._txs.clear()
        return txs


class Node:
    def __init__(self, config: NodeConfig, store: ChainStore | None = None):
        self.config = config
        self.genesis = config.genesis_config()
        self.chain_config = config.chain
        self.store = store
        self.mempool = Mempool()
        self._lock = threading.Lock()
        self._admin_keypair: KeyPair | None = None

        if store is not None and store.exists():
            blocks = store.load()
            self.chain = Chain.from_blocks(blocks, self.genesis)
            store.ensure_clean(self.chain.blocks)
        else:
            self.chain = Chain.create(self.genesis)
            if store is not None:
                store.append(self.chain.blocks[0])

        if config.auto_mine_interval > 0:
            self._admin_keypair = self._load_admin_wallet()

        index = {block_hash(b.header): b for b in self.chain.blocks}
        self._snapshot = Snapshot(blocks=tuple(self.chain.blocks),
                                  state=self.chain.state, by_hash=index)

    def _load_admin_wallet(self) -> KeyPair:
        path = self.config.admin_wallet
        assert path is not None
        passphrase = os.environ.get(ADMIN_PASSPHRASE_ENV, "")
        keypair = load_wallet(path, passphrase)
        if keypair.address != self.config.admin:
            raise ParseError(
                f"admin_wallet holds {render_address(keypair.address)}, "
                f"config admin is {render_address(self.config.admin)}")
        return keypair

    # -- reads ------------------------------------------------------------

    def snapshot(self) -> Snapshot:
        return self._snapshot

    # -- writes (always under the lock) -----------------------------------

    def submit_transaction(self, tx: Transaction) -> str:
        """Admit a transaction: verify, check against the pending projection,
        then either mine immediately (instant mode) or queue it."""
        with self._lock:
            if not verify_transaction(tx):
                raise BadSignature("signature does not verify for the sender")
            next_height = self.chain.height + 1
            projected = self.chain.state
            for pending in self.mempool.pending():
                projected = apply_transaction(projected, pending, next_height)
            apply_transaction(projected, tx, next_height)
            if self.chain_config.instant_mine:
                self._seal(self.mempool.drain() + [tx], miner=None)
            else:
                self.mempool.add(tx)
            return tx.txid().hex()

    def mine_pending(self, miner: bytes | None = None) -> dict:
        """Drain the mempool into one block; empty blocks are fine."""
        with self._lock:
            drained = self.mempool.drain()
            kept: list[Transaction] = []
            state = self.chain.state
            next_height = self.chain.height + 1
            for tx in drained:
                try:
                    state = apply_transaction(state, tx, next_height)
                except RentChainError as exc:
                    log.warning("dropping tx %s: %s: %s",
                                tx.txid().hex(), exc.name, exc.detail)
                    continue
                kept.append(tx)
            block = self._seal(kept, miner=miner)
        return {
            "height": block.header.height,
            "hash": block_hash(block.header).hex(),
            "transactions": len(block.transactions),
            "validator": render_address(block.header.validator)
            if block.header.validator else None,
        }

    def _seal(self, txs: list[Transaction], miner: bytes | None) -> Block:
        """Build, validate, append, and persist the next block. Caller holds
        the lock. Auto day ticks ride blocks at the configured interval."""
        height = self.chain.height + 1
        interval = self.config.auto_mine_interval
        if interval > 0 and height % interval == 0:
            txs = txs + [self._make_day_tick(txs, height)]
        block = mine_block(
            self.chain.tip, txs, self.chain_config,
            miner if miner is not None else self.config.admin,
            parent_state=self.chain.state, timestamp=height,
        )
        self.chain.append_block(block)
        if self.store is not None:
            self.store.append(block)
        index = dict(self._snapshot.by_hash)
        index[block_hash(block.header)] = block
        self._snapshot = Snapshot(blocks=tuple(self.chain.blocks),
                                  state=self.chain.state, by_hash=index)
        return block

    def _make_day_tick(self, preceding: Sequence[Transaction], height: int) -> Transaction:
        assert self._admin_keypair is not None
        state = self.chain.state
        for tx in preceding:
            state = apply_transaction(state, tx, height)
        nonce = state.nonce(self._admin_keypair.address) + 1
        return build_signed(self._admin_keypair, nonce, AdvanceDay())


def create_app(node: Node):
    from fastapi import Body, FastAPI, Query
    from fastapi.exceptions import RequestValidationError
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    app = FastAPI(title="rentchain node", docs_url=None, redoc_url=None,
                  openapi_url=None)
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    def envelope(exc: RentChainError) -> JSONResponse:
        body: dict = {
            "error": exc.name,
            "detail": exc.detail,
            "height": node.snapshot().height,
        }
        amount = getattr(exc, "amount", None)
        if amount is not None:
            body["amount"] = amount
        status = 404 if isinstance(exc, NotFound) else 400
        return JSONResponse(status_code=status, content=body)

    @app.exception_handler(RentChainError)
    async def _domain_error(_request, exc: RentChainError):
        return envelope(exc)

    @app.exception_handler(RequestValidationError)
    async def _body_error(_request, exc: RequestValidationError):
        return envelope(ParseError(f"malformed request body: {exc.errors()[:1]}"))

    @app.post("/tx")
    def submit_tx(doc: dict = Body(...)):
        try:
            tx = Transaction.from_json(doc)
        except RentChainError:
            raise
        except Exception as exc:
            raise ParseError(f"bad transaction document: {exc}") from exc
        txid = node.submit_transaction(tx)
        return {"txid": txid}

    @app.post("/mine")
    def mine(doc: dict | None = Body(None)):
        miner = None
        if doc and doc.get("miner"):
            miner = parse_address(doc["miner"])
        return node.mine_pending(miner)

    @app.get("/chain")
    def get_chain(from_height: int = Query(0, alias="from", ge=0)):
        snap = node.snapshot()
        headers = []
        for block in snap.blocks[from_height:]:
            doc = block.header.to_json()
            doc["hash"] = block_hash(block.header).hex()
            headers.append(doc)
        return {"height": snap.height, "headers": headers}

    @app.get("/block/{hash_hex}")
    def get_block(hash_hex: str):
        snap = node.snapshot()
        try:
            key = bytes.fromhex(hash_hex)
        except ValueError as exc:
            raise ParseError("block hash must be hex") from exc
        block = snap.by_hash.get(key)
        if block is None:
            raise NotFound(f"no block with hash {hash_hex}")
        doc = block.to_json()
        doc["hash"] = hash_hex
        return {"height": snap.height, "block": doc}

    @app.get("/state/accounts/{address}")
    def get_account(address: str):
        snap = node.snapshot()
        account = snap.state.accounts.get(parse_address(address))
        if account is None:
            raise NotFound(f"no account {address}")
        return {"height": snap.height, "balance": account.balance,
                "nonce": account.nonce}

    @app.get("/state/vehicles")
    def get_vehicles():
        snap = node.snapshot()
        fleet = snap.state.contracts.fleet
        return {"height": snap.height,
                "vehicles": [fleet[k].to_json() for k in sorted(fleet)]}

    @app.get("/state/vehicles/{vehicle_id}")
    def get_vehicle(vehicle_id: str):
        snap = node.snapshot()
        vehicle = snap.state.contracts.fleet.get(vehicle_id)
        if vehicle is None:
            raise NotFound(f"no vehicle {vehicle_id}")
        return {"height": snap.height, "vehicle": vehicle.to_json()}

    @app.get("/state/licenses")
    def get_licenses():
        snap = node.snapshot()
        licenses = snap.state.contracts.licenses
        return {"height": snap.height,
                "licenses": [licenses[k].to_json() for k in sorted(licenses)]}

    @app.get("/state/agreements/{vehicle_id}")
    def get_agreement(vehicle_id: str):
        snap = node.snapshot()
        agreement = snap.state.contracts.agreements.get(vehicle_id)
        if agreement is None:
            raise NotFound(f"no active agreement for vehicle {vehicle_id}")
        return {"height": snap.height, "agreement": agreement.to_json()}

    @app.get("/state/day")
    def get_day():
        snap = node.snapshot()
        return {"height": snap.height,
                "current_day": snap.state.contracts.current_day}

    return app


def run_node(config: NodeConfig) -> None:
    """Blocking entry point: build the node and serve HTTP until killed."""
    import uvicorn

    store = ChainStore(config.data_dir) if config.data_dir else None
    node = Node(config, store=store)
    app = create_app(node)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
