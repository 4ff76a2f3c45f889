// Transaction building and signing. The canonical bytes exclude the
// signature; the wire encoding appends it, and the txid is SHA-256 of the
// wire bytes. Field order and kind tags match the node exactly.

import { Writer, bytesToHex, hexToBytes } from './codec.js';
import { sha256, sign } from './crypto.js';
import { KeyPair, parseAddress, renderAddress } from './wallet.js';

export type Payload =
  | { kind: 'transfer'; to: string; amount: number }
  | { kind: 'add_license'; license_id: string }
  | { kind: 'add_vehicle'; vehicle_id: string; daily_price: number }
  | { kind: 'rent_car'; vehicle_id: string; license_id: string; deposit: number }
  | { kind: 'add_funds'; vehicle_id: string; amount: number }
  | { kind: 'return_car'; vehicle_id: string }
  | { kind: 'advance_day' };

const KIND_TAGS: Record<Payload['kind'], number> = {
  transfer: 0,
  add_license: 1,
  add_vehicle: 2,
  rent_car: 3,
  add_funds: 4,
  return_car: 5,
  advance_day: 6,
};

export function writePayload(w: Writer, payload: Payload): void {
  w.u8(KIND_TAGS[payload.kind]);
  switch (payload.kind) {
    case 'transfer':
      w.bytesVar(parseAddress(payload.to));
      w.u64(payload.amount);
      break;
    case 'add_license':
      w.strVar(payload.license_id);
      break;
    case 'add_vehicle':
      w.strVar(payload.vehicle_id);
      w.u64(payload.daily_price);
      break;
    case 'rent_car':
      w.strVar(payload.vehicle_id);
      w.strVar(payload.license_id);
      w.u64(payload.deposit);
      break;
    case 'add_funds':
      w.strVar(payload.vehicle_id);
      w.u64(payload.amount);
      break;
    case 'return_car':
      w.strVar(payload.vehicle_id);
      break;
    case 'advance_day':
      break;
  }
}

export interface TxDoc {
  from: string;
  nonce: number;
  payload: Payload;
  public_key: string;
  signature: string;
}

export function signingBytes(
  sender: Uint8Array,
  nonce: number,
  payload: Payload,
  publicKey: Uint8Array,
): Uint8Array {
  const w = new Writer();
  w.bytesVar(sender);
  w.u64(nonce);
  writePayload(w, payload);
  w.bytesVar(publicKey);
  return w.getValue();
}

export function wireBytes(doc: TxDoc): Uint8Array {
  const body = signingBytes(
    parseAddress(doc.from), doc.nonce, doc.payload, hexToBytes(doc.public_key));
  const w = new Writer();
  w.raw(body);
  w.bytesVar(hexToBytes(doc.signature));
  return w.getValue();
}

export interface SignedTx {
  doc: TxDoc;
  wire: Uint8Array;
  txid: string;
}

export async function buildSigned(
  keyPair: KeyPair,
  nonce: number,
  payload: Payload,
): Promise<SignedTx> {
  const body = signingBytes(keyPair.address, nonce, payload, keyPair.publicKey);
  const signature = await sign(keyPair.seed, body);
  const doc: TxDoc = {
    from: renderAddress(keyPair.address),
    nonce,
    payload,
    public_key: bytesToHex(keyPair.publicKey),
    signature: bytesToHex(signature),
  };
  const wire = wireBytes(doc);
  return { doc, wire, txid: bytesToHex(await sha256(wire)) };
}
