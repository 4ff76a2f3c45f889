"""Acceptance gate: one test per primary acceptance criterion.

Each passing criterion records one line that the terminal summary echoes
after the run, so a verbose session ends with a readable checklist. All
randomness is seeded; every figure below reproduces exactly.
"""

import hashlib
import json
import random
import struct
import subprocess
import sys
from collections import Counter
from dataclasses import replace

import pytest
from scipy.stats import chisquare

import conftest
from conftest import build_genesis, seal
from oracles import OracleRental
from test_cli import cli_wallet, free_port, run_cli, single_json, wait_for_node
from rentchain.chain import (
    Block,
    Chain,
    ChainConfig,
    ConsensusMode,
    GenesisConfig,
    block_hash,
    genesis_state,
    meets_difficulty,
    mine_block,
    replay_states,
    select_validator,
    validate_chain,
)
from rentchain.config import NodeConfig
from rentchain.engine import (
    add_funds,
    add_license,
    add_vehicle,
    advance_day,
    apply_transaction,
    check_escrow_backing,
    rent_car,
    return_car,
)
from rentchain.errors import RentChainError
from rentchain.node import Node
from rentchain.state import VehicleStatus
from rentchain.store import ChainStore
from rentchain.transactions import (
    AddFunds,
    AddLicense,
    AddVehicle,
    AdvanceDay,
    RentCar,
    ReturnCar,
    Transfer,
    build_signed,
)
from rentchain.wallet import generate_keypair

ADMIN = generate_keypair(b"\xa1" * 32)
OWNER = generate_keypair(b"\xa2" * 32)
ALICE = generate_keypair(b"\xa3" * 32)
BOB = generate_keypair(b"\xa4" * 32)

LICENSE = "12345678Z"

# Published SHA-256 test vectors (FIPS 180 examples).
SHA256_EMPTY = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
SHA256_ABC = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


def record(name, detail):
    conftest.ACCEPTANCE_LINES.append(f"PASS {name}: {detail}")


@pytest.fixture(scope="module")
def mined_chain():
    """20 transfer blocks mined at difficulty 16, shared by two criteria."""
    genesis = build_genesis(ADMIN, OWNER, clients=(ALICE,), difficulty=16)
    chain = Chain.create(genesis)
    for n in range(20):
        seal(chain, [build_signed(ALICE, n + 1,
                                  Transfer(to=OWNER.address, amount=1))])
    return chain


def test_tamper_evidence(mined_chain):
    blocks = list(mined_chain.blocks)
    raws = [block.to_bytes() for block in blocks]
    rng = random.Random("tamper-acceptance")
    flagged = undecodable = remined = 0
    for trial in range(200):
        k = rng.randrange(len(blocks))
        raw = bytearray(raws[k])
        raw[rng.randrange(len(raw))] ^= rng.randrange(1, 256)
        try:
            mutated = Block.from_bytes(bytes(raw))
        except Exception:
            undecodable += 1
            continue
        candidate = blocks[:k] + [mutated] + blocks[k + 1:]
        rep = validate_chain(candidate, expected_genesis=mined_chain.genesis)
        if rep.ok:
            # The only escape the contract allows: a flipped nonce that still
            # happens to meet the work target is a legitimate re-mining.
            assert mutated.header == replace(blocks[k].header,
                                             nonce=mutated.header.nonce)
            assert mutated.transactions == blocks[k].transactions
            assert meets_difficulty(block_hash(mutated.header), 16)
            remined += 1
            continue
        assert rep.bad_height <= k, (trial, k, rep.to_json())
        flagged += 1
    assert flagged + undecodable + remined == 200
    assert remined == 0  # chance is about 2**-16 per nonce hit
    record("tamper evidence",
           f"200/200 single-byte mutations caught at or before their height "
           f"({flagged} validation failures, {undecodable} undecodable)")


def test_hash_contract(mined_chain):
    assert hashlib.sha256(b"").hexdigest() == SHA256_EMPTY
    assert hashlib.sha256(b"abc").hexdigest() == SHA256_ABC
    renders = [block_hash(block.header).hex() for block in mined_chain.blocks]
    for rendered in renders:
        assert len(rendered) == 64
        assert set(rendered) <= set("0123456789abcdef")
    assert len(set(renders)) == len(renders)
    record("hash contract",
           f"both reference vectors match; {len(renders)} block hashes "
           f"render as 64 hex characters")


def test_pow_statistics():
    genesis = GenesisConfig.make(
        allocations={ADMIN.address: 10}, admin=ADMIN.address,
        fleet_owner=OWNER.address, consensus_mode=ConsensusMode.POW,
        difficulty=12, block_reward=0)
    chain = Chain.create(genesis)
    attempts = []
    for height in range(1, 1001):
        block = mine_block(chain.tip, [], chain.chain_config(), ADMIN.address,
                           parent_state=chain.state, timestamp=height)
        chain.append_block(block)
        attempts.append(block.header.nonce + 1)
    p = 2.0 ** -12
    expected = 1 / p
    stderr = ((1 - p) ** 0.5 / p) / (len(attempts) ** 0.5)
    mean = sum(attempts) / len(attempts)
    assert abs(mean - expected) <= 3 * stderr
    record("pow statistics",
           f"mean {mean:.1f} attempts over 1000 blocks at difficulty 12 "
           f"(target 4096, tolerance {3 * stderr:.1f})")


def test_pos_proportionality():
    one, three, six = (bytes([tag]) * 20 for tag in (1, 2, 3))
    stakes = {one: 1, three: 3, six: 6}
    counts = Counter()
    for i in range(10_000):
        seed = hashlib.sha256(f"pos-seed-{i}".encode()).digest()
        counts[select_validator(stakes, seed)] += 1
    observed = [counts[one], counts[three], counts[six]]
    result = chisquare(observed, f_exp=[1_000, 3_000, 6_000])
    assert result.pvalue > 0.01
    record("pos proportionality",
           f"counts {observed} for stakes 1:3:6, chi-squared p="
           f"{result.pvalue:.3f}")


CONSERVATION_LICENSES = ["12345678Z", "87654321X", "11111111H", "12345678A"]
CONSERVATION_PLATES = ["V-1", "V-2"]


def _conservation_step(rng, genesis):
    """One randomized (sender, payload) pair: usually the right actor for the
    operation, sometimes a wrong one, and argument ranges that straddle the
    validity boundaries."""
    everyone = [ADMIN, OWNER, ALICE, BOB]

    def actor(preferred):
        return preferred if rng.random() < 0.75 else rng.choice(everyone)

    kind = rng.randrange(7)
    if kind == 0:
        recipients = [kp.address for kp in everyone] + [genesis.escrow]
        return (rng.choice(everyone),
                Transfer(to=rng.choice(recipients), amount=rng.randrange(0, 25)))
    if kind == 1:
        return (actor(ADMIN),
                AddLicense(license_id=rng.choice(CONSERVATION_LICENSES)))
    if kind == 2:
        return (actor(OWNER),
                AddVehicle(vehicle_id=rng.choice(CONSERVATION_PLATES),
                           daily_price=rng.randrange(0, 4)))
    if kind == 3:
        return (actor(rng.choice([ALICE, BOB])),
                RentCar(vehicle_id=rng.choice(CONSERVATION_PLATES),
                        license_id=rng.choice(CONSERVATION_LICENSES),
                        deposit=rng.randrange(0, 16)))
    if kind == 4:
        return (actor(rng.choice([ALICE, BOB])),
                AddFunds(vehicle_id=rng.choice(CONSERVATION_PLATES),
                         amount=rng.randrange(0, 9)))
    if kind == 5:
        return (actor(rng.choice([ALICE, BOB])),
                ReturnCar(vehicle_id=rng.choice(CONSERVATION_PLATES)))
    return actor(ADMIN), AdvanceDay()


def test_conservation():
    actors = [ADMIN, OWNER, ALICE, BOB]
    applied = rejected = 0
    for workload in range(1000):
        rng = random.Random(f"conservation-{workload}")
        genesis = GenesisConfig.make(
            allocations={ADMIN.address: 40, OWNER.address: 40,
                         ALICE.address: 60, BOB.address: 60},
            admin=ADMIN.address, fleet_owner=OWNER.address, surcharge_fee=1,
            consensus_mode=ConsensusMode.POW, difficulty=0, block_reward=0)
        world = genesis_state(genesis)
        nonces = {kp.address: 0 for kp in actors}
        for step in range(12):
            keypair, payload = _conservation_step(rng, genesis)
            tx = build_signed(keypair, nonces[keypair.address] + 1, payload)
            try:
                world = apply_transaction(world, tx, height=step + 1)
                nonces[keypair.address] += 1
                applied += 1
            except RentChainError:
                rejected += 1
            assert world.total_currency() == 200
            assert check_escrow_backing(world)
    assert applied > 4000  # the workloads must actually exercise the engine
    record("conservation",
           f"1000 workloads, {applied} applied / {rejected} rejected "
           f"transactions, supply constant and escrow backed at every step")


def test_oracle_equivalence():
    checks = 0
    for schedule in range(100):
        rng = random.Random(f"oracle-{schedule}")
        fee = rng.randrange(0, 3)
        genesis = build_genesis(ADMIN, OWNER, clients=(ALICE,),
                                client_balance=10_000, surcharge_fee=fee)
        world = genesis_state(genesis)
        add_license(world, ADMIN.address, LICENSE, height=1)
        oracles = {}
        for v in range(rng.randrange(1, 6)):
            vid = f"V-{v}"
            price = rng.randrange(1, 5)
            add_vehicle(world, OWNER.address, vid, price)
            deposit = rng.randrange(price, price + 13)
            rent_car(world, ALICE.address, vid, LICENSE, deposit)
            oracles[vid] = OracleRental(price, fee, deposit)
        for day in range(rng.randrange(1, 51)):
            for vid, oracle in oracles.items():
                if rng.random() < 0.3:
                    amount = rng.randrange(1, 7)
                    add_funds(world, ALICE.address, vid, amount)
                    oracle.fund(amount)
            advance_day(world, ADMIN.address)
            for vid, oracle in oracles.items():
                oracle.tick()
                agreement = world.contracts.agreements[vid]
                assert (agreement.deposit, agreement.accrued_revenue,
                        agreement.charges,
                        agreement.days_elapsed) == oracle.snapshot()
                checks += 1
            assert check_escrow_backing(world)
    record("oracle equivalence",
           f"{checks} day-by-day snapshots matched the independent "
           f"accrual oracle exactly")


def test_guard_exhaustion():
    client_one = generate_keypair(b"\xa5" * 32)
    client_two = generate_keypair(b"\xa6" * 32)
    genesis = GenesisConfig.make(
        allocations={client_one.address: 10, client_two.address: 10},
        admin=ADMIN.address, fleet_owner=OWNER.address, surcharge_fee=1,
        consensus_mode=ConsensusMode.POW, difficulty=0, block_reward=0)
    root = genesis_state(genesis)
    add_license(root, ADMIN.address, LICENSE, height=1)
    add_vehicle(root, OWNER.address, "V", 2)
    total = root.total_currency()

    def moves(world):
        for client in (client_one, client_two):
            yield "rent", lambda w, c=client: rent_car(w, c.address, "V",
                                                       LICENSE, 2)
            yield "rent", lambda w, c=client: rent_car(w, c.address, "V",
                                                       LICENSE, 5)
            yield "fund", lambda w, c=client: add_funds(w, c.address, "V", 3)
            yield "return", lambda w, c=client: return_car(w, c.address, "V")
        if world.contracts.current_day < 4:
            yield "tick", lambda w: advance_day(w, ADMIN.address)

    frontier = [root]
    seen = {root.canonical_bytes()}
    states = transitions = 0
    while frontier:
        world = frontier.pop()
        states += 1
        assert states < 200_000, "state space blew up"
        vehicle = world.contracts.fleet["V"]
        agreement = world.contracts.agreements.get("V")
        assert (vehicle.status is VehicleStatus.RENTED) == \
            (agreement is not None)
        assert check_escrow_backing(world)
        assert world.total_currency() == total
        if agreement is not None:
            assert agreement.deposit >= 0 and agreement.charges >= 0
        for name, op in moves(world):
            successor = world.clone()
            try:
                op(successor)
            except RentChainError:
                continue
            transitions += 1
            if name == "return":
                # A return may only ever go through with a clean slate.
                assert agreement is not None and agreement.charges == 0
            key = successor.canonical_bytes()
            if key not in seen:
                seen.add(key)
                frontier.append(successor)
    assert states > 100
    record("guard exhaustion",
           f"{states} reachable states / {transitions} transitions, "
           f"rented-iff-agreement and the charge guard held everywhere")


def _crash_config():
    return NodeConfig(
        admin=ADMIN.address, fleet_owner=OWNER.address,
        chain=ChainConfig(instant_mine=True),
        allocations={ADMIN.address: 100, OWNER.address: 100,
                     ALICE.address: 100})


def test_crash_consistency(tmp_path):
    node = Node(_crash_config(), store=ChainStore(tmp_path / "reference"))
    nonces = Counter()

    def send(keypair, payload):
        tx = build_signed(keypair, nonces[keypair.address] + 1, payload)
        node.submit_transaction(tx)
        nonces[keypair.address] += 1

    send(ADMIN, AddLicense(license_id=LICENSE))
    send(OWNER, AddVehicle(vehicle_id="V", daily_price=2))
    send(ALICE, RentCar(vehicle_id="V", license_id=LICENSE, deposit=10))
    send(ADMIN, AdvanceDay())
    send(ADMIN, AdvanceDay())
    send(ALICE, AddFunds(vehicle_id="V", amount=4))
    send(ADMIN, AdvanceDay())
    send(ALICE, ReturnCar(vehicle_id="V"))
    send(ALICE, Transfer(to=OWNER.address, amount=3))
    send(OWNER, Transfer(to=ALICE.address, amount=1))
    send(ADMIN, AdvanceDay())
    send(ALICE, RentCar(vehicle_id="V", license_id=LICENSE, deposit=2))

    blocks = list(node.chain.blocks)
    digests = [state.digest() for _, state in replay_states(blocks)]
    raw = (tmp_path / "reference" / "blocks.dat").read_bytes()
    ends = []
    offset = 0
    while offset < len(raw):
        (length,) = struct.unpack_from(">I", raw, offset)
        offset += 4 + length
        ends.append(offset)
    assert len(ends) == len(blocks)

    # Every record boundary gets tried with both legal tip values (record
    # flushed but tip not yet rewritten, and the fully settled state); the
    # remaining kill-points land mid-record at seeded random offsets.
    scenarios = []
    for end, height in zip(ends[1:-1], range(1, len(ends) - 1)):
        scenarios.append((end, height, height))
        scenarios.append((end, height, height - 1))
    rng = random.Random("crash-consistency")
    while len(scenarios) < 50:
        cut = rng.randrange(ends[0], len(raw))
        if cut in ends:
            continue
        height = sum(1 for end in ends if end <= cut) - 1
        scenarios.append((cut, height, height))

    stale_tips = sum(1 for _, h, t in scenarios if t != h)
    for trial, (cut, height, tip_height) in enumerate(scenarios):
        work = tmp_path / f"crash-{trial}"
        work.mkdir()
        (work / "blocks.dat").write_bytes(raw[:cut])
        (work / "tip.json").write_text(json.dumps({
            "height": tip_height,
            "hash": block_hash(blocks[tip_height].header).hex()}))
        revived = Node(_crash_config(), store=ChainStore(work))
        assert revived.chain.height == height
        assert revived.chain.state.digest() == digests[height]
        again = Node(_crash_config(), store=ChainStore(work))
        assert again.chain.state.digest() == digests[height]
    record("crash consistency",
           f"{len(scenarios)} kill-points (including {stale_tips} stale-tip "
           f"boundaries) all replayed to the reference digest")


def test_end_to_end_cli_scenario(tmp_path):
    admin_addr, admin_wallet = cli_wallet(tmp_path, "admin")
    owner_addr, owner_wallet = cli_wallet(tmp_path, "owner")
    alice_addr, alice_wallet = cli_wallet(tmp_path, "alice")
    port = free_port()
    url = f"http://127.0.0.1:{port}"
    config_path = tmp_path / "node.json"
    config_path.write_text(json.dumps({
        "host": "127.0.0.1",
        "port": port,
        "chain": {"consensus_mode": "pow", "difficulty": 0,
                  "block_reward": 0, "instant_mine": True},
        "data_dir": str(tmp_path / "data"),
        "admin": admin_addr,
        "fleet_owner": owner_addr,
        "surcharge_fee": 1,
        "allocations": {admin_addr: 50, owner_addr: 50, alice_addr: 100},
    }))

    import os
    import signal

    import httpx

    env = dict(os.environ)
    env["RENTCHAIN_PASSPHRASE"] = "pw"
    env["RENTCHAIN_NODE"] = url
    node_proc = subprocess.Popen(
        [sys.executable, "-m", "rentchain", "node", "start",
         "--config", str(config_path)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, env=env)

    def cli(*args, expect=0):
        proc = subprocess.run([sys.executable, "-m", "rentchain"] + list(args),
                              capture_output=True, text=True, env=env,
                              timeout=60)
        assert proc.returncode == expect, (args, proc.stdout, proc.stderr)
        return json.loads(proc.stdout)

    def balance(address):
        return httpx.get(f"{url}/state/accounts/{address}",
                         timeout=5).json()["balance"]

    days, price, deposit = 3, 2, 10
    try:
        wait_for_node(url, node_proc)
        cli("license", "add", "--wallet", admin_wallet, "--license", LICENSE)
        cli("fleet", "add", "--wallet", owner_wallet,
            "--vehicle", "V-1", "--price", str(price))
        cli("rent", "--wallet", alice_wallet, "--vehicle", "V-1",
            "--license", LICENSE, "--deposit", str(deposit))
        for _ in range(days):
            cli("day", "advance", "--wallet", admin_wallet)
        cli("fund", "--wallet", alice_wallet, "--vehicle", "V-1",
            "--amount", "5")
        cli("return", "--wallet", alice_wallet, "--vehicle", "V-1")

        owner_final = balance(owner_addr)
        alice_final = balance(alice_addr)
        assert owner_final == 50 + days * price
        assert alice_final == 100 - days * price
    finally:
        node_proc.send_signal(signal.SIGTERM)
        try:
            node_proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            node_proc.kill()
            node_proc.wait(timeout=10)

    proc = run_cli("chain", "verify", "--data-dir", str(tmp_path / "data"))
    assert proc.returncode == 0
    assert single_json(proc) == {"ok": True}
    record("end-to-end cli",
           f"rent, {days} ticks, fund, return: owner +{days * price}, "
           f"client refunded the remainder, stored chain verifies")
