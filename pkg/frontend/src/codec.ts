// Canonical byte encoding, mirrored from the node byte for byte:
// big-endian fixed-width integers, u32 length prefixes on variable fields.
// Signatures are computed over these bytes, so any divergence here makes
// the node reject everything we sign.

const MAX_FIELD_LEN = 1 << 20;

export class Writer {
  private parts: Uint8Array[] = [];

  u8(value: number): this {
    if (!Number.isInteger(value) || value < 0 || value > 0xff) {
      throw new RangeError(`u8 out of range: ${value}`);
    }
    this.parts.push(Uint8Array.of(value));
    return this;
  }

  u32(value: number): this {
    if (!Number.isInteger(value) || value < 0 || value > 0xffff_ffff) {
      throw new RangeError(`u32 out of range: ${value}`);
    }
    const buf = new Uint8Array(4);
    new DataView(buf.buffer).setUint32(0, value, false);
    this.parts.push(buf);
    return this;
  }

  u64(value: number | bigint): this {
    const big = typeof value === 'bigint' ? value : BigInt(value);
    if (big < 0n || big > 0xffff_ffff_ffff_ffffn) {
      throw new RangeError(`u64 out of range: ${value}`);
    }
    const buf = new Uint8Array(8);
    new DataView(buf.buffer).setBigUint64(0, big, false);
    this.parts.push(buf);
    return this;
  }

  raw(data: Uint8Array): this {
    this.parts.push(data.slice());
    return this;
  }

  bytesVar(data: Uint8Array): this {
    this.u32(data.length);
    this.parts.push(data.slice());
    return this;
  }

  strVar(text: string): this {
    return this.bytesVar(new TextEncoder().encode(text));
  }

  getValue(): Uint8Array {
    let total = 0;
    for (const p of this.parts) total += p.length;
    const out = new Uint8Array(total);
    let off = 0;
    for (const p of this.parts) {
      out.set(p, off);
      off += p.length;
    }
    return out;
  }
}

export class Reader {
  private pos = 0;

  constructor(private data: Uint8Array) {}

  private take(n: number): Uint8Array {
    if (n < 0 || this.pos + n > this.data.length) {
      throw new Error(`unexpected end of input at offset ${this.pos}`);
    }
    const chunk = this.data.subarray(this.pos, this.pos + n);
    this.pos += n;
    return chunk;
  }

  u8(): number {
    return this.take(1)[0]!;
  }

  u32(): number {
    const chunk = this.take(4);
    return new DataView(chunk.buffer, chunk.byteOffset, 4).getUint32(0, false);
  }

  u64(): number {
    const chunk = this.take(8);
    const big = new DataView(chunk.buffer, chunk.byteOffset, 8).getBigUint64(0, false);
    if (big > BigInt(Number.MAX_SAFE_INTEGER)) {
      throw new Error(`u64 value ${big} exceeds the safe integer range`);
    }
    return Number(big);
  }

  bytesVar(): Uint8Array {
    const length = this.u32();
    if (length > MAX_FIELD_LEN) {
      throw new Error(`field length ${length} exceeds cap`);
    }
    return this.take(length).slice();
  }

  strVar(): string {
    return new TextDecoder('utf-8', { fatal: true }).decode(this.bytesVar());
  }

  get remaining(): number {
    return this.data.length - this.pos;
  }

  expectEof(): void {
    if (this.remaining > 0) {
      throw new Error(`${this.remaining} trailing bytes after record`);
    }
  }
}

export function bytesToHex(data: Uint8Array): string {
  let out = '';
  for (const b of data) out += b.toString(16).padStart(2, '0');
  return out;
}

export function hexToBytes(hex: string): Uint8Array {
  if (hex.length % 2 !== 0 || /[^0-9a-fA-F]/.test(hex)) {
    throw new Error(`not a hex string: ${hex}`);
  }
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

export function bytesEqual(a: Uint8Array, b: Uint8Array): boolean {
  if (a.length !== b.length) return false;
  for (let i = 0; i < a.length; i++) {
    if (a[i] !== b[i]) return false;
  }
  return true;
}
