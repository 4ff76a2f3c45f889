"""Append-only block storage.

blocks.dat holds one u32 big-endian length prefix plus the canonical block
bytes per record. tip.json is rewritten after every successful append and
records the height and hash the file should end at; it is what lets a
half-written final record (a crash) be told apart from a corrupted one
(tampering). Recovery rules on load:

  * every record before the recorded tip must parse and the tip hash must
    match, otherwise the file was altered;
  * one extra complete record after the recorded tip is accepted (the crash
    happened between the data append and the sidecar rewrite);
  * a torn final record is dropped only when the bytes before it already
    reach the recorded tip.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

from .chain import Block, block_hash
from .errors import ChainDecodeError

BLOCKS_FILE = "blocks.dat"
TIP_FILE = "tip.json"

_LEN = struct.Struct(">I")


class ChainStore:
    """Single-writer durable log of blocks under one directory."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.blocks_path = self.directory / BLOCKS_FILE
        self.tip_path = self.directory / TIP_FILE

    def append(self, block: Block) -> None:
        payload = block.to_bytes()
        with open(self.blocks_path, "ab") as fh:
            fh.write(_LEN.pack(len(payload)))
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        self._write_tip(block.header.height, block_hash(block.header).hex())

    def _write_tip(self, height: int, tip_hex: str) -> None:
        doc = {"height": height, "hash": tip_hex}
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tip-")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.tip_path)
        except BaseException:
            try:
                os.unlink(tmp)
            except FileNotFoundError:
                pass
            raise

    def _read_tip(self) -> tuple[int, str] | None:
        try:
            with open(self.tip_path) as fh:
                doc = json.load(fh)
            return int(doc["height"]), str(doc["hash"])
        except FileNotFoundError:
            return None
        except (ValueError, KeyError, TypeError) as exc:
            raise ChainDecodeError(0, f"unreadable tip record: {exc}") from exc

    def exists(self) -> bool:
        return self.blocks_path.exists()

    def load(self) -> list[Block]:
        """Read every block back, applying the crash-recovery rules."""
        raw = self.blocks_path.read_bytes()
        tip = self._read_tip()
        blocks: list[Block] = []
        offset = 0
        torn = False
        while offset < len(raw):
            if offset + _LEN.size > len(raw):
                torn = True
                break
            (length,) = _LEN.unpack_from(raw, offset)
            start = offset + _LEN.size
            if start + length > len(raw):
                torn = True
                break
            try:
                block = Block.from_bytes(raw[start:start + length])
            except Exception as exc:
                raise ChainDecodeError(len(blocks),
                                       f"undecodable block record: {exc}") from exc
            if block.header.height != len(blocks):
                raise ChainDecodeError(
                    len(blocks),
                    f"record {len(blocks)} claims height {block.header.height}")
            blocks.append(block)
            offset = start + length

        if not blocks:
            raise ChainDecodeError(0, "no complete block records on disk")

        if tip is None:
            # No sidecar at all: only trustworthy if the data file is whole.
            if torn:
                raise ChainDecodeError(len(blocks), "torn log without a tip record")
            return blocks

        tip_height, tip_hex = tip
        if torn:
            # A partial final record is forgivable only when everything up to
            # the recorded tip is already present; otherwise bytes are missing
            # from the middle, which no crash produces.
            if len(blocks) - 1 != tip_height:
                raise ChainDecodeError(len(blocks),
                                       "log ends before the recorded tip")
        else:
            if len(blocks) - 1 not in (tip_height, tip_height + 1):
                raise ChainDecodeError(
                    min(len(blocks), tip_height + 1),
                    f"log holds {len(blocks)} blocks but tip records height {tip_height}")
        if block_hash(blocks[tip_height].header).hex() != tip_hex:
            raise ChainDecodeError(tip_height,
                                   "block at recorded tip height has the wrong hash")
        return blocks

    def ensure_clean(self, blocks: list[Block]) -> None:
        """After a successful load, make the on-disk log canonical again:
        truncate a forgiven torn tail and catch the tip record up."""
        expected = sum(_LEN.size + len(b.to_bytes()) for b in blocks)
        if self.blocks_path.stat().st_size != expected:
            self.rewrite(blocks)
            return
        tip = self._read_tip()
        last = blocks[-1]
        if tip is None or tip[0] != last.header.height:
            self._write_tip(last.header.height, block_hash(last.header).hex())

    def rewrite(self, blocks: list[Block]) -> None:
        """Replace the log wholesale (used after recovering a torn tail)."""
        tmp_path = self.blocks_path.with_suffix(".tmp")
        with open(tmp_path, "wb") as fh:
            for block in blocks:
                payload = block.to_bytes()
                fh.write(_LEN.pack(len(payload)))
                fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_path, self.blocks_path)
        last = blocks[-1]
        self._write_tip(last.header.height, block_hash(last.header).hex())


def export_jsonl(blocks: list[Block], path: str | Path) -> int:
    """Write one human-readable JSON document per block; returns the count."""
    path = Path(path)
    with open(path, "w") as fh:
        for block in blocks:
            fh.write(json.dumps(block.to_json(), sort_keys=True))
            fh.write("\n")
    return len(blocks)
