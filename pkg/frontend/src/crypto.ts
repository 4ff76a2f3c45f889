// WebCrypto wrappers: SHA-256, Ed25519 from a raw 32-byte seed, and the
// PBKDF2 + AES-GCM pair used by the wallet file.

import { bytesToHex, hexToBytes } from './codec.js';

export const SEED_LEN = 32;
export const PUBLIC_KEY_LEN = 32;
export const SIGNATURE_LEN = 64;

// PKCS#8 wrapper for a raw Ed25519 seed. WebCrypto only imports private
// keys in pkcs8 form; the DER prefix is constant for this algorithm.
const PKCS8_PREFIX = hexToBytes('302e020100300506032b657004220420');

function subtle(): SubtleCrypto {
  const c = globalThis.crypto;
  if (!c || !c.subtle) {
    throw new Error('WebCrypto is unavailable in this environment');
  }
  return c.subtle;
}

export function randomBytes(n: number): Uint8Array {
  const out = new Uint8Array(n);
  globalThis.crypto.getRandomValues(out);
  return out;
}

export async function sha256(data: Uint8Array): Promise<Uint8Array> {
  return new Uint8Array(await subtle().digest('SHA-256', own(data)));
}

function own(data: Uint8Array): Uint8Array<ArrayBuffer> {
  // Hand WebCrypto a fresh view over its own buffer. Views survive realm
  // boundaries (jsdom test environments); naked ArrayBuffers do not.
  return new Uint8Array(data);
}

function base64UrlToBytes(text: string): Uint8Array {
  const b64 = text.replace(/-/g, '+').replace(/_/g, '/');
  const padded = b64 + '='.repeat((4 - (b64.length % 4)) % 4);
  const raw = atob(padded);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

async function importSeed(seed: Uint8Array): Promise<CryptoKey> {
  if (seed.length !== SEED_LEN) {
    throw new Error(`seed must be ${SEED_LEN} bytes, got ${seed.length}`);
  }
  const pkcs8 = new Uint8Array(PKCS8_PREFIX.length + seed.length);
  pkcs8.set(PKCS8_PREFIX, 0);
  pkcs8.set(seed, PKCS8_PREFIX.length);
  return subtle().importKey('pkcs8', own(pkcs8), { name: 'Ed25519' }, true, ['sign']);
}

export async function publicKeyFromSeed(seed: Uint8Array): Promise<Uint8Array> {
  // WebCrypto has no direct "derive public" call, but the JWK export of a
  // private key carries the public half in its "x" member.
  const key = await importSeed(seed);
  const jwk = await subtle().exportKey('jwk', key);
  if (!jwk.x) {
    throw new Error('private key export did not include the public key');
  }
  return base64UrlToBytes(jwk.x);
}

export async function sign(seed: Uint8Array, message: Uint8Array): Promise<Uint8Array> {
  const key = await importSeed(seed);
  const sig = await subtle().sign({ name: 'Ed25519' }, key, own(message));
  return new Uint8Array(sig);
}

export async function verify(
  publicKey: Uint8Array,
  message: Uint8Array,
  signature: Uint8Array,
): Promise<boolean> {
  if (publicKey.length !== PUBLIC_KEY_LEN || signature.length !== SIGNATURE_LEN) {
    return false;
  }
  try {
    const key = await subtle().importKey(
      'raw', own(publicKey), { name: 'Ed25519' }, false, ['verify']);
    return await subtle().verify(
      { name: 'Ed25519' }, key, own(signature), own(message));
  } catch {
    return false;
  }
}

async function deriveAesKey(
  passphrase: string,
  salt: Uint8Array,
  iterations: number,
  usage: KeyUsage,
): Promise<CryptoKey> {
  const material = await subtle().importKey(
    'raw', own(new TextEncoder().encode(passphrase)),
    'PBKDF2', false, ['deriveKey']);
  return subtle().deriveKey(
    { name: 'PBKDF2', hash: 'SHA-256', salt: own(salt), iterations },
    material,
    { name: 'AES-GCM', length: 256 },
    false,
    [usage]);
}

export async function aesGcmEncrypt(
  passphrase: string,
  salt: Uint8Array,
  iterations: number,
  nonce: Uint8Array,
  plaintext: Uint8Array,
): Promise<Uint8Array> {
  const key = await deriveAesKey(passphrase, salt, iterations, 'encrypt');
  const out = await subtle().encrypt(
    { name: 'AES-GCM', iv: own(nonce) }, key, own(plaintext));
  return new Uint8Array(out);
}

export async function aesGcmDecrypt(
  passphrase: string,
  salt: Uint8Array,
  iterations: number,
  nonce: Uint8Array,
  ciphertext: Uint8Array,
): Promise<Uint8Array | null> {
  const key = await deriveAesKey(passphrase, salt, iterations, 'decrypt');
  try {
    const out = await subtle().decrypt(
      { name: 'AES-GCM', iv: own(nonce) }, key, own(ciphertext));
    return new Uint8Array(out);
  } catch {
    return null; // wrong passphrase or corrupted file
  }
}

export { bytesToHex, hexToBytes };
