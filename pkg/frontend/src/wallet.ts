// Keys, addresses, and the encrypted wallet file. The file format is the
// same one the CLI reads and writes, so a wallet travels freely between
// the two clients. Decrypted seeds live only in memory.

import { bytesEqual, bytesToHex, hexToBytes } from './codec.js';
import {
  SEED_LEN,
  aesGcmDecrypt,
  aesGcmEncrypt,
  publicKeyFromSeed,
  randomBytes,
  sha256,
} from './crypto.js';

export const ADDRESS_LEN = 20;
export const ADDRESS_PREFIX = '0x';
export const PBKDF2_ITERATIONS = 600_000;

export interface KeyPair {
  seed: Uint8Array;
  publicKey: Uint8Array;
  address: Uint8Array;
}

export interface WalletFile {
  address: string;
  public_key_hex: string;
  encrypted_private_key: string;
  kdf_params: {
    name: string;
    iterations: number;
    salt: string;
    cipher: string;
    nonce: string;
  };
}

export async function addressFromPublicKey(publicKey: Uint8Array): Promise<Uint8Array> {
  return (await sha256(publicKey)).slice(0, ADDRESS_LEN);
}

export function renderAddress(address: Uint8Array): string {
  if (address.length !== ADDRESS_LEN) {
    throw new Error(`address must be ${ADDRESS_LEN} bytes, got ${address.length}`);
  }
  return ADDRESS_PREFIX + bytesToHex(address);
}

export function parseAddress(text: string): Uint8Array {
  if (!text.startsWith(ADDRESS_PREFIX)) {
    throw new Error(`address must start with ${ADDRESS_PREFIX}: ${text}`);
  }
  const raw = hexToBytes(text.slice(ADDRESS_PREFIX.length));
  if (raw.length !== ADDRESS_LEN) {
    throw new Error(`address must encode ${ADDRESS_LEN} bytes: ${text}`);
  }
  return raw;
}

export async function keyPairFromSeed(seed: Uint8Array): Promise<KeyPair> {
  const publicKey = await publicKeyFromSeed(seed);
  return { seed, publicKey, address: await addressFromPublicKey(publicKey) };
}

export async function generateKeyPair(): Promise<KeyPair> {
  return keyPairFromSeed(randomBytes(SEED_LEN));
}

export async function encryptWallet(
  keyPair: KeyPair,
  passphrase: string,
  iterations: number = PBKDF2_ITERATIONS,
): Promise<WalletFile> {
  const salt = randomBytes(16);
  const nonce = randomBytes(12);
  const ciphertext = await aesGcmEncrypt(passphrase, salt, iterations, nonce, keyPair.seed);
  return {
    address: renderAddress(keyPair.address),
    public_key_hex: bytesToHex(keyPair.publicKey),
    encrypted_private_key: bytesToHex(ciphertext),
    kdf_params: {
      name: 'pbkdf2-sha256',
      iterations,
      salt: bytesToHex(salt),
      cipher: 'aes-256-gcm',
      nonce: bytesToHex(nonce),
    },
  };
}

export class WalletError extends Error {}
export class BadPassphrase extends WalletError {}

export async function decryptWallet(doc: WalletFile, passphrase: string): Promise<KeyPair> {
  const kdf = doc.kdf_params;
  if (!kdf || kdf.name !== 'pbkdf2-sha256' || kdf.cipher !== 'aes-256-gcm') {
    throw new WalletError(`unsupported wallet kdf/cipher: ${JSON.stringify(kdf)}`);
  }
  const seed = await aesGcmDecrypt(
    passphrase,
    hexToBytes(kdf.salt),
    kdf.iterations,
    hexToBytes(kdf.nonce),
    hexToBytes(doc.encrypted_private_key),
  );
  if (seed === null) {
    throw new BadPassphrase('cannot decrypt wallet');
  }
  const keyPair = await keyPairFromSeed(seed);
  if (!bytesEqual(keyPair.publicKey, hexToBytes(doc.public_key_hex))) {
    throw new WalletError('wallet public key does not match its private key');
  }
  return keyPair;
}
