import { describe, expect, it } from 'vitest';

import { Reader, Writer, bytesEqual, bytesToHex, hexToBytes } from '../src/codec.js';

describe('writer', () => {
  it('encodes integers big-endian at fixed width', () => {
    const w = new Writer();
    w.u8(0x0f).u32(0x01020304).u64(0x0506070809n);
    expect(bytesToHex(w.getValue())).toBe('0f' + '01020304' + '0000000506070809');
  });

  it('length-prefixes variable fields with u32', () => {
    const w = new Writer();
    w.bytesVar(hexToBytes('aabb'));
    w.strVar('hi');
    expect(bytesToHex(w.getValue())).toBe('00000002aabb' + '000000026869');
  });

  it('encodes utf-8 for strings', () => {
    const w = new Writer();
    w.strVar('ü'); // 2 bytes in utf-8
    expect(bytesToHex(w.getValue())).toBe('00000002c3bc');
  });

  it('rejects out-of-range integers', () => {
    expect(() => new Writer().u8(256)).toThrow(RangeError);
    expect(() => new Writer().u32(-1)).toThrow(RangeError);
    expect(() => new Writer().u64(-1n)).toThrow(RangeError);
    expect(() => new Writer().u64(1n << 64n)).toThrow(RangeError);
  });
});

describe('reader', () => {
  it('roundtrips what the writer produced', () => {
    const w = new Writer();
    w.u8(7).u64(123456789).strVar('vehículo').bytesVar(hexToBytes('00ff'));
    const r = new Reader(w.getValue());
    expect(r.u8()).toBe(7);
    expect(r.u64()).toBe(123456789);
    expect(r.strVar()).toBe('vehículo');
    expect(bytesToHex(r.bytesVar())).toBe('00ff');
    r.expectEof();
  });

  it('throws on truncated input', () => {
    const w = new Writer();
    w.u64(42);
    const bytes = w.getValue().slice(0, 5);
    expect(() => new Reader(bytes).u64()).toThrow(/end of input/);
  });

  it('throws on trailing bytes', () => {
    const r = new Reader(hexToBytes('0102'));
    r.u8();
    expect(() => r.expectEof()).toThrow(/trailing/);
  });

  it('caps oversized length prefixes', () => {
    const w = new Writer();
    w.u32(1 << 21);
    expect(() => new Reader(w.getValue()).bytesVar()).toThrow(/exceeds cap/);
  });
});

describe('hex helpers', () => {
  it('roundtrips', () => {
    const data = hexToBytes('00010aff');
    expect(bytesToHex(data)).toBe('00010aff');
    expect(bytesEqual(data, hexToBytes('00010aff'))).toBe(true);
    expect(bytesEqual(data, hexToBytes('00010afe'))).toBe(false);
  });

  it('rejects odd length and non-hex input', () => {
    expect(() => hexToBytes('abc')).toThrow();
    expect(() => hexToBytes('zz')).toThrow();
  });
});
