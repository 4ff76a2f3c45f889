"""Operator and demo command line.

Every invocation prints exactly one JSON document to stdout and exits 0 on
success, 1 on failure (the failure document is the node's error envelope, or
a locally built one). Prompts and logs go to stderr so output stays
scriptable. Passphrases come from RENTCHAIN_PASSPHRASE or an interactive
prompt, never from argv.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click
import httpx

from .config import NodeConfig
from .chain import validate_chain
from .errors import ChainDecodeError, RentChainError
from .node import Node, create_app
from .store import ChainStore, export_jsonl
from .transactions import (
    AddFunds,
    AddLicense,
    AddVehicle,
    AdvanceDay,
    Payload,
    RentCar,
    ReturnCar,
    build_signed,
)
from .wallet import (
    KeyPair,
    generate_keypair,
    load_wallet,
    render_address,
    save_wallet,
)

PASSPHRASE_ENV = "RENTCHAIN_PASSPHRASE"
NODE_ENV = "RENTCHAIN_NODE"
DEFAULT_NODE = "http://127.0.0.1:8545"
HTTP_TIMEOUT = 30.0


class ApiError(Exception):
    """An error envelope returned by the node, passed through verbatim."""

    def __init__(self, body: dict):
        super().__init__(body.get("detail", ""))
        self.body = body


class Api:
    def __init__(self, base_url: str):
        self.base = base_url.rstrip("/")

    def _check(self, response: httpx.Response) -> dict:
        try:
            body = response.json()
        except ValueError:
            body = {"error": "HttpError",
                    "detail": f"non-JSON response (status {response.status_code})",
                    "height": None}
        if response.status_code >= 400:
            raise ApiError(body)
        return body

    def get(self, path: str) -> dict:
        return self._check(httpx.get(self.base + path, timeout=HTTP_TIMEOUT))

    def post(self, path: str, doc: dict | None = None) -> dict:
        return self._check(httpx.post(self.base + path, json=doc,
                                      timeout=HTTP_TIMEOUT))

    def account_nonce(self, address: bytes) -> int:
        try:
            doc = self.get(f"/state/accounts/{render_address(address)}")
        except ApiError as exc:
            if exc.body.get("error") == "NotFound":
                return 0
            raise
        return int(doc["nonce"])


def _emit(doc: dict) -> None:
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


def _guarded(fn):
    """Turn raised errors into a single envelope document and exit code 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            doc = fn(*args, **kwargs)
        except ApiError as exc:
            _emit(exc.body)
            sys.exit(1)
        except RentChainError as exc:
            body = {"error": exc.name, "detail": exc.detail, "height": None}
            amount = getattr(exc, "amount", None)
            if amount is not None:
                body["amount"] = amount
            _emit(body)
            sys.exit(1)
        except httpx.HTTPError as exc:
            _emit({"error": "ConnectionError", "detail": str(exc), "height": None})
            sys.exit(1)
        if doc is not None:
            _emit(doc)

    return wrapper


def _passphrase(confirm: bool = False) -> str:
    env = os.environ.get(PASSPHRASE_ENV)
    if env is not None:
        return env
    return click.prompt("Passphrase", hide_input=True,
                        confirmation_prompt=confirm, err=True)


def _keypair(wallet_path: str) -> KeyPair:
    return load_wallet(wallet_path, _passphrase())


def _submit_signed(node_url: str, wallet_path: str, payload: Payload) -> dict:
    keypair = _keypair(wallet_path)
    api = Api(node_url)
    nonce = api.account_nonce(keypair.address)
    tx = build_signed(keypair, nonce + 1, payload)
    return api.post("/tx", tx.to_json())


@click.group()
@click.option("--node", "node_url", metavar="URL",
              default=lambda: os.environ.get(NODE_ENV, DEFAULT_NODE),
              help=f"Node base URL (default {DEFAULT_NODE}, env {NODE_ENV}).")
@click.pass_context
def main(ctx: click.Context, node_url: str):
    """Vehicle-rental chain client."""
    ctx.obj = node_url


@main.group()
def node():
    """Run a node."""


@node.command("start")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Node configuration JSON.")
@_guarded
def node_start(config_path: str):
    import uvicorn

    cfg = NodeConfig.load(config_path)
    store = ChainStore(cfg.data_dir) if cfg.data_dir else None
    running = Node(cfg, store=store)
    _emit({"listening": f"http://{cfg.host}:{cfg.port}",
           "height": running.chain.height})
    sys.stdout.flush()
    uvicorn.run(create_app(running), host=cfg.host, port=cfg.port,
                log_level="warning", access_log=False)
    return None


@main.group()
def wallet():
    """Create and inspect wallets."""


@wallet.command("new")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Where to write the encrypted wallet file.")
@_guarded
def wallet_new(out_path: str):
    keypair = generate_keypair()
    save_wallet(keypair, out_path, _passphrase(confirm=True))
    return {"address": render_address(keypair.address), "path": out_path}


@wallet.command("show")
@click.option("--wallet", "wallet_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@_guarded
def wallet_show(wallet_path: str):
    with open(wallet_path) as fh:
        doc = json.load(fh)
    return {"address": doc["address"], "public_key": doc["public_key_hex"]}


@main.group()
def license():
    """Driving-license registry."""


@license.command("add")
@click.option("--wallet", "wallet_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Admin wallet file.")
@click.option("--license", "license_id", required=True, metavar="ID")
@click.pass_obj
@_guarded
def license_add(node_url: str, wallet_path: str, license_id: str):
    return _submit_signed(node_url, wallet_path, AddLicense(license_id=license_id))


@license.command("list")
@click.pass_obj
@_guarded
def license_list(node_url: str):
    return Api(node_url).get("/state/licenses")


@main.group()
def fleet():
    """Vehicle fleet."""


@fleet.command("add")
@click.option("--wallet", "wallet_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Fleet owner wallet file.")
@click.option("--vehicle", "vehicle_id", required=True, metavar="ID")
@click.option("--price", required=True, type=int, help="Daily price.")
@click.pass_obj
@_guarded
def fleet_add(node_url: str, wallet_path: str, vehicle_id: str, price: int):
    return _submit_signed(node_url, wallet_path,
                          AddVehicle(vehicle_id=vehicle_id, daily_price=price))


@fleet.command("list")
@click.pass_obj
@_guarded
def fleet_list(node_url: str):
    return Api(node_url).get("/state/vehicles")


@main.command("rent")
@click.option("--wallet", "wallet_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--vehicle", "vehicle_id", required=True, metavar="ID")
@click.option("--license", "license_id", required=True, metavar="ID")
@click.option("--deposit", required=True, type=int)
@click.pass_obj
@_guarded
def rent(node_url: str, wallet_path: str, vehicle_id: str, license_id: str,
         deposit: int):
    return _submit_signed(node_url, wallet_path,
                          RentCar(vehicle_id=vehicle_id, license_id=license_id,
                                  deposit=deposit))


@main.command("fund")
@click.option("--wallet", "wallet_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--vehicle", "vehicle_id", required=True, metavar="ID")
@click.option("--amount", required=True, type=int)
@click.pass_obj
@_guarded
def fund(node_url: str, wallet_path: str, vehicle_id: str, amount: int):
    return _submit_signed(node_url, wallet_path,
                          AddFunds(vehicle_id=vehicle_id, amount=amount))


@main.command("return")
@click.option("--wallet", "wallet_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--vehicle", "vehicle_id", required=True, metavar="ID")
@click.pass_obj
@_guarded
def return_(node_url: str, wallet_path: str, vehicle_id: str):
    return _submit_signed(node_url, wallet_path,
                          ReturnCar(vehicle_id=vehicle_id))


@main.group()
def day():
    """Simulated rental clock."""


@day.command("advance")
@click.option("--wallet", "wallet_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Admin wallet file.")
@click.pass_obj
@_guarded
def day_advance(node_url: str, wallet_path: str):
    return _submit_signed(node_url, wallet_path, AdvanceDay())


@main.group()
def chain():
    """Inspect stored chains."""


@chain.command("verify")
@click.option("--data-dir", "data_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
def chain_verify(data_dir: str):
    try:
        blocks = ChainStore(data_dir).load()
    except ChainDecodeError as exc:
        _emit({"ok": False, "first_bad_height": exc.height,
               "reason": f"{exc.name}: {exc.detail}"})
        sys.exit(1)
    report = validate_chain(blocks)
    _emit(report.to_json())
    sys.exit(0 if report.ok else 1)


@chain.command("export")
@click.option("--data-dir", "data_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True,
              type=click.Path(dir_okay=False))
@_guarded
def chain_export(data_dir: str, out_path: str):
    blocks = ChainStore(data_dir).load()
    count = export_jsonl(blocks, out_path)
    return {"exported": count, "out": out_path}


if __name__ == "__main__":
    main()
