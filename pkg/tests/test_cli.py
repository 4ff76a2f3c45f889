import json
import os
import signal
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from conftest import build_genesis, seal
from rentchain.chain import Block, Chain
from rentchain.store import ChainStore
from rentchain.transactions import Transfer, build_signed
from rentchain.wallet import generate_keypair

CLI = [sys.executable, "-m", "rentchain"]

ADMIN = generate_keypair(b"\x71" * 32)
OWNER = generate_keypair(b"\x72" * 32)
CARLA = generate_keypair(b"\x73" * 32)


def run_cli(*args, env=None, input=None):
    full_env = dict(os.environ)
    full_env.pop("RENTCHAIN_PASSPHRASE", None)
    if env:
        full_env.update(env)
    return subprocess.run(CLI + list(args), capture_output=True, text=True,
                          input=input, env=full_env, timeout=60)


def single_json(proc):
    """The scriptability contract: stdout is exactly one JSON document."""
    return json.loads(proc.stdout)


def test_wallet_new_and_show(tmp_path):
    path = tmp_path / "w.json"
    proc = run_cli("wallet", "new", "--out", str(path),
                   env={"RENTCHAIN_PASSPHRASE": "pw"})
    assert proc.returncode == 0, proc.stderr
    doc = single_json(proc)
    assert set(doc) == {"address", "path"}
    assert len(doc["address"]) == 42 and doc["address"].startswith("0x")
    assert os.stat(path).st_mode & 0o777 == 0o600

    shown = run_cli("wallet", "show", "--wallet", str(path))
    assert shown.returncode == 0
    assert single_json(shown)["address"] == doc["address"]


def test_wallet_new_prompts_without_env(tmp_path):
    path = tmp_path / "w.json"
    proc = run_cli("wallet", "new", "--out", str(path), input="pw\npw\n")
    assert proc.returncode == 0, proc.stderr
    single_json(proc)  # prompt noise must not reach stdout
    assert "Passphrase" in proc.stderr


def test_wrong_passphrase_is_a_local_envelope(tmp_path):
    path = tmp_path / "w.json"
    run_cli("wallet", "new", "--out", str(path),
            env={"RENTCHAIN_PASSPHRASE": "pw"})
    proc = run_cli("license", "add", "--wallet", str(path), "--license",
                   "12345678Z", env={"RENTCHAIN_PASSPHRASE": "nope"})
    assert proc.returncode == 1
    doc = single_json(proc)
    assert doc["error"] == "BadPassphrase"
    assert set(doc) >= {"error", "detail", "height"}


def test_unreachable_node_is_a_connection_envelope(tmp_path):
    path = tmp_path / "w.json"
    run_cli("wallet", "new", "--out", str(path),
            env={"RENTCHAIN_PASSPHRASE": "pw"})
    proc = run_cli("--node", "http://127.0.0.1:9", "license", "add",
                   "--wallet", str(path), "--license", "12345678Z",
                   env={"RENTCHAIN_PASSPHRASE": "pw"})
    assert proc.returncode == 1
    assert single_json(proc)["error"] == "ConnectionError"


def test_usage_errors_keep_stdout_empty():
    proc = run_cli("fleet", "add")
    assert proc.returncode == 2
    assert proc.stdout == ""
    assert "Usage" in proc.stderr or "Error" in proc.stderr


def stored_chain(tmp_path, n_transfers=3):
    chain = Chain.create(build_genesis(ADMIN, OWNER, clients=(CARLA,)))
    for n in range(n_transfers):
        seal(chain, [build_signed(CARLA, n + 1,
                                  Transfer(to=OWNER.address, amount=1))])
    store = ChainStore(tmp_path / "data")
    for block in chain.blocks:
        store.append(block)
    return chain, store


def test_chain_verify_ok_and_export(tmp_path):
    chain, store = stored_chain(tmp_path)
    proc = run_cli("chain", "verify", "--data-dir", str(store.directory))
    assert proc.returncode == 0
    assert single_json(proc) == {"ok": True}

    out = tmp_path / "dump.jsonl"
    proc = run_cli("chain", "export", "--data-dir", str(store.directory),
                   "--out", str(out))
    assert proc.returncode == 0
    assert single_json(proc) == {"exported": 4, "out": str(out)}
    assert len(out.read_text().splitlines()) == 4


def test_chain_verify_flags_substituted_transaction(tmp_path):
    chain, store = stored_chain(tmp_path)
    blocks = list(chain.blocks)
    forged = build_signed(CARLA, 1, Transfer(to=OWNER.address, amount=99))
    blocks[1] = Block(header=blocks[1].header, transactions=(forged,))
    store.rewrite(blocks)
    proc = run_cli("chain", "verify", "--data-dir", str(store.directory))
    assert proc.returncode == 1
    doc = single_json(proc)
    assert doc["ok"] is False
    assert doc["first_bad_height"] == 1
    assert "BadTxRoot" in doc["reason"]


def test_chain_verify_flags_unreadable_log(tmp_path):
    chain, store = stored_chain(tmp_path)
    raw = bytearray(store.blocks_path.read_bytes())
    raw[len(raw) // 3] ^= 0xFF
    store.blocks_path.write_bytes(bytes(raw))
    proc = run_cli("chain", "verify", "--data-dir", str(store.directory))
    assert proc.returncode == 1
    doc = single_json(proc)
    assert doc["ok"] is False
    assert isinstance(doc["first_bad_height"], int)


def free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def cli_wallet(tmp_path, name):
    path = tmp_path / f"{name}.json"
    proc = run_cli("wallet", "new", "--out", str(path),
                   env={"RENTCHAIN_PASSPHRASE": "pw"})
    assert proc.returncode == 0, proc.stderr
    return single_json(proc)["address"], str(path)


def wait_for_node(url, proc, deadline=20.0):
    start = time.monotonic()
    while time.monotonic() - start < deadline:
        if proc.poll() is not None:
            raise AssertionError(f"node exited early:\n{proc.stderr.read()}")
        try:
            if httpx.get(url + "/state/day", timeout=1.0).status_code == 200:
                return
        except httpx.HTTPError:
            time.sleep(0.2)
    raise AssertionError("node did not come up")


def account(url, address):
    return httpx.get(f"{url}/state/accounts/{address}", timeout=5).json()


def test_end_to_end_rental_over_subprocess_node(tmp_path):
    admin_addr, admin_wallet = cli_wallet(tmp_path, "admin")
    owner_addr, owner_wallet = cli_wallet(tmp_path, "owner")
    alice_addr, alice_wallet = cli_wallet(tmp_path, "alice")
    port = free_port()
    url = f"http://127.0.0.1:{port}"
    data_dir = tmp_path / "data"
    config = {
        "host": "127.0.0.1",
        "port": port,
        "chain": {"consensus_mode": "pow", "difficulty": 0,
                  "block_reward": 0, "instant_mine": True},
        "data_dir": str(data_dir),
        "admin": admin_addr,
        "fleet_owner": owner_addr,
        "surcharge_fee": 1,
        "allocations": {admin_addr: 50, owner_addr: 50, alice_addr: 100},
    }
    config_path = tmp_path / "node.json"
    config_path.write_text(json.dumps(config))

    env = dict(os.environ)
    env["RENTCHAIN_PASSPHRASE"] = "pw"
    env["RENTCHAIN_NODE"] = url
    node_proc = subprocess.Popen(
        CLI + ["node", "start", "--config", str(config_path)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, env=env)

    def cli(*args, expect=0):
        proc = subprocess.run(CLI + list(args), capture_output=True,
                              text=True, env=env, timeout=60)
        assert proc.returncode == expect, (args, proc.stdout, proc.stderr)
        return json.loads(proc.stdout)

    try:
        wait_for_node(url, node_proc)

        doc = cli("license", "add", "--wallet", admin_wallet,
                  "--license", "12345678Z")
        assert set(doc) == {"txid"}
        listing = cli("--node", url, "license", "list")
        assert [l["license_id"] for l in listing["licenses"]] == ["12345678Z"]

        cli("fleet", "add", "--wallet", owner_wallet,
            "--vehicle", "V-1", "--price", "2")
        fleet = cli("fleet", "list")
        assert fleet["vehicles"][0]["status"] == "Available"

        cli("rent", "--wallet", alice_wallet, "--vehicle", "V-1",
            "--license", "12345678Z", "--deposit", "10")
        assert cli("fleet", "list")["vehicles"][0]["status"] == "Rented"
        assert account(url, alice_addr)["balance"] == 90

        for _ in range(3):
            cli("day", "advance", "--wallet", admin_wallet)

        cli("return", "--wallet", alice_wallet, "--vehicle", "V-1")
        assert account(url, alice_addr)["balance"] == 94
        assert account(url, owner_addr)["balance"] == 56

        # Second rental runs the deposit dry so the return is blocked.
        cli("rent", "--wallet", alice_wallet, "--vehicle", "V-1",
            "--license", "12345678Z", "--deposit", "2")
        for _ in range(2):
            cli("day", "advance", "--wallet", admin_wallet)
        blocked = cli("return", "--wallet", alice_wallet,
                      "--vehicle", "V-1", expect=1)
        assert blocked["error"] == "PendingCharges"
        assert blocked["amount"] == 3
        assert isinstance(blocked["height"], int)

        cli("fund", "--wallet", alice_wallet, "--vehicle", "V-1",
            "--amount", "3")
        cli("return", "--wallet", alice_wallet, "--vehicle", "V-1")
        assert account(url, alice_addr)["balance"] == 89
        # Paid charges belong to the owner: 50 + 6 + 2 accrued + 3 charges.
        assert account(url, owner_addr)["balance"] == 61

        refused = cli("day", "advance", "--wallet", alice_wallet, expect=1)
        assert refused["error"] == "NotAdmin"
    finally:
        node_proc.send_signal(signal.SIGTERM)
        try:
            node_proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            node_proc.kill()
            node_proc.wait(timeout=10)

    proc = run_cli("chain", "verify", "--data-dir", str(data_dir))
    assert proc.returncode == 0, proc.stdout
    assert single_json(proc) == {"ok": True}

    out = tmp_path / "chain.jsonl"
    doc = single_json(run_cli("chain", "export", "--data-dir", str(data_dir),
                              "--out", str(out)))
    assert doc["exported"] == len(out.read_text().splitlines()) > 10
