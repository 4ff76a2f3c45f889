// Thin typed client for the node's HTTP API. Errors arrive as a JSON
// envelope {error, detail, height, amount?}; ApiError carries it through
// untouched so callers can render it verbatim.

import { TxDoc } from './tx.js';

export interface Envelope {
  error: string;
  detail: string;
  height: number;
  amount?: number;
}

export class ApiError extends Error {
  constructor(public readonly envelope: Envelope, public readonly status: number) {
    super(`${envelope.error}: ${envelope.detail}`);
    this.name = 'ApiError';
  }
}

export interface HeaderDoc {
  height: number;
  prev_hash: string;
  tx_root: string;
  timestamp: number;
  difficulty: number;
  nonce: number;
  validator: string | null;
  hash: string;
}

export interface BlockDoc {
  header: Omit<HeaderDoc, 'hash'>;
  genesis?: GenesisDoc;
  transactions: { from: string; nonce: number; payload: { kind: string } & Record<string, unknown> }[];
  hash: string;
}

export interface GenesisDoc {
  allocations: Record<string, number>;
  admin: string;
  fleet_owner: string;
  escrow: string;
  surcharge_fee: number;
  consensus_mode: string;
  difficulty: number;
  block_reward: number;
}

export interface VehicleDoc {
  vehicle_id: string;
  daily_price: number;
  status: 'Available' | 'Rented';
  owner: string;
}

export interface LicenseDoc {
  license_id: string;
  added_by: string;
  added_at_height: number;
}

export interface AgreementDoc {
  vehicle_id: string;
  client: string;
  license_id: string;
  deposit: number;
  accrued_revenue: number;
  charges: number;
  start_day: number;
  days_elapsed: number;
}

type FetchFn = typeof fetch;

export class NodeClient {
  private fetchFn: FetchFn;

  constructor(public readonly baseUrl: string, fetchFn?: FetchFn) {
    this.fetchFn = fetchFn ?? ((...args) => globalThis.fetch(...args));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const doc = await res.json();
    if (!res.ok) {
      throw new ApiError(doc as Envelope, res.status);
    }
    return doc as T;
  }

  submitTx(doc: TxDoc): Promise<{ txid: string }> {
    return this.request('POST', '/tx', doc);
  }

  mine(miner?: string): Promise<{ height: number; hash: string; transactions: number }> {
    return this.request('POST', '/mine', miner ? { miner } : {});
  }

  chain(from = 0): Promise<{ height: number; headers: HeaderDoc[] }> {
    return this.request('GET', `/chain?from=${from}`);
  }

  block(hash: string): Promise<{ height: number; block: BlockDoc }> {
    return this.request('GET', `/block/${hash}`);
  }

  account(address: string): Promise<{ height: number; balance: number; nonce: number }> {
    return this.request('GET', `/state/accounts/${address}`);
  }

  vehicles(): Promise<{ height: number; vehicles: VehicleDoc[] }> {
    return this.request('GET', '/state/vehicles');
  }

  vehicle(id: string): Promise<{ height: number; vehicle: VehicleDoc }> {
    return this.request('GET', `/state/vehicles/${encodeURIComponent(id)}`);
  }

  licenses(): Promise<{ height: number; licenses: LicenseDoc[] }> {
    return this.request('GET', '/state/licenses');
  }

  agreement(vehicleId: string): Promise<{ height: number; agreement: AgreementDoc }> {
    return this.request('GET', `/state/agreements/${encodeURIComponent(vehicleId)}`);
  }

  day(): Promise<{ height: number; current_day: number }> {
    return this.request('GET', '/state/day');
  }
}
