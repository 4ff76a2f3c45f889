"""Canonical byte encoding.

Fixed field order, big-endian fixed-width integers, length-prefixed byte
strings. Every hash, signature, and persisted record in the system is
computed over bytes produced here, so the layout is frozen: changing it
invalidates existing chains and wallets.
"""

from __future__ import annotations

from .errors import DecodeError

U8_MAX = 0xFF
U32_MAX = 0xFFFF_FFFF
U64_MAX = 0xFFFF_FFFF_FFFF_FFFF

# Decode-side cap on any single length-prefixed field; corrupt prefixes must
# not trigger huge allocations.
MAX_FIELD_LEN = 1 << 20


class Writer:
    """Accumulates canonical bytes."""

    def __init__(self):
        self._parts: list[bytes] = []

    def u8(self, value: int) -> "Writer":
        if not 0 <= value <= U8_MAX:
            raise ValueError(f"u8 out of range: {value}")
        self._parts.append(value.to_bytes(1, "big"))
        return self

    def u32(self, value: int) -> "Writer":
        if not 0 <= value <= U32_MAX:
            raise ValueError(f"u32 out of range: {value}")
        self._parts.append(value.to_bytes(4, "big"))
        return self

    def u64(self, value: int) -> "Writer":
        if not 0 <= value <= U64_MAX:
            raise ValueError(f"u64 out of range: {value}")
        self._parts.append(value.to_bytes(8, "big"))
        return self

    def boolean(self, value: bool) -> "Writer":
        return self.u8(1 if value else 0)

    def raw(self, data: bytes) -> "Writer":
        self._parts.append(bytes(data))
        return self

    def bytes_var(self, data: bytes) -> "Writer":
        self.u32(len(data))
        self._parts.append(bytes(data))
        return self

    def str_var(self, text: str) -> "Writer":
        return self.bytes_var(text.encode("utf-8"))

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    """Consumes canonical bytes, raising DecodeError on any shortfall."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodeError(f"unexpected end of input at offset {self._pos}")
        chunk = self._data[self._pos:self._pos + n]
        self._pos += n
        return chunk

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return int.from_bytes(self._take(4), "big")

    def u64(self) -> int:
        return int.from_bytes(self._take(8), "big")

    def boolean(self) -> bool:
        value = self.u8()
        if value not in (0, 1):
            raise DecodeError(f"bad boolean byte: {value}")
        return value == 1

    def bytes_var(self) -> bytes:
        length = self.u32()
        if length > MAX_FIELD_LEN:
            raise DecodeError(f"field length {length} exceeds cap")
        return self._take(length)

    def str_var(self) -> str:
        raw = self.bytes_var()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid utf-8: {exc}") from exc

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def expect_eof(self) -> None:
        if self.remaining:
            raise DecodeError(f"{self.remaining} trailing bytes after record")
