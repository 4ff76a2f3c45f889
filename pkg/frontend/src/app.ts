// Single-page rental client. Every mutating action signs a transaction
// locally, POSTs it, waits for its block, and re-renders from fresh node
// state. The decrypted seed never leaves this module's memory.

import { AgreementDoc, ApiError, Envelope, NodeClient, VehicleDoc } from './api.js';
import { Payload, buildSigned } from './tx.js';
import {
  KeyPair,
  WalletFile,
  decryptWallet,
  encryptWallet,
  generateKeyPair,
  renderAddress,
} from './wallet.js';

export interface AppOptions {
  pollMs?: number; // 0 disables the timer; refresh() stays callable
  txPollMs?: number;
  txTimeoutMs?: number;
  fetchFn?: typeof fetch;
}

interface Roles {
  admin: string;
  fleetOwner: string;
}

interface Rental {
  agreement: AgreementDoc;
  dailyPrice: number;
}

function esc(text: string): string {
  return text.replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

export class App {
  readonly client: NodeClient;
  session: { keyPair: KeyPair; address: string } | null = null;

  private roles: Roles | null = null;
  private busy = false;
  private timer: ReturnType<typeof setInterval> | null = null;
  private prompt: { vehicleId: string; amount: number } | null = null;
  private readonly pollMs: number;
  private readonly txPollMs: number;
  private readonly txTimeoutMs: number;

  constructor(private root: HTMLElement, nodeUrl: string, opts: AppOptions = {}) {
    this.client = new NodeClient(nodeUrl, opts.fetchFn);
    this.pollMs = opts.pollMs ?? 3000;
    this.txPollMs = opts.txPollMs ?? 500;
    this.txTimeoutMs = opts.txTimeoutMs ?? 60_000;
  }

  async start(): Promise<void> {
    this.renderSkeleton();
    this.wireEvents();
    await this.loadRoles();
    await this.refresh();
    if (this.pollMs > 0) {
      this.timer = setInterval(() => {
        this.refresh().catch(() => {});
      }, this.pollMs);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  // -- wallet -----------------------------------------------------------

  async importWalletFile(doc: WalletFile, passphrase: string): Promise<void> {
    const keyPair = await decryptWallet(doc, passphrase);
    this.session = { keyPair, address: renderAddress(keyPair.address) };
    await this.refresh();
  }

  async generateWallet(passphrase: string): Promise<WalletFile> {
    const keyPair = await generateKeyPair();
    const file = await encryptWallet(keyPair, passphrase);
    this.session = { keyPair, address: renderAddress(keyPair.address) };
    await this.refresh();
    return file;
  }

  disconnect(): void {
    this.session = null;
    this.prompt = null;
    this.refresh().catch(() => {});
  }

  // -- actions ----------------------------------------------------------

  async rent(vehicleId: string, licenseId: string, deposit: number): Promise<void> {
    await this.submitAndWait({
      kind: 'rent_car', vehicle_id: vehicleId, license_id: licenseId, deposit,
    });
  }

  async addFunds(vehicleId: string, amount: number): Promise<void> {
    await this.submitAndWait({ kind: 'add_funds', vehicle_id: vehicleId, amount });
    if (this.prompt && this.prompt.vehicleId === vehicleId) {
      this.prompt = null;
      this.renderPrompt();
    }
  }

  /** Returns false when the node refused because charges are pending. */
  async returnVehicle(vehicleId: string): Promise<boolean> {
    try {
      await this.submitAndWait({ kind: 'return_car', vehicle_id: vehicleId });
    } catch (err) {
      if (err instanceof ApiError && err.envelope.error === 'PendingCharges') {
        this.prompt = { vehicleId, amount: err.envelope.amount ?? 0 };
        this.renderPrompt();
        return false;
      }
      throw err;
    }
    if (this.prompt && this.prompt.vehicleId === vehicleId) {
      this.prompt = null;
      this.renderPrompt();
    }
    return true;
  }

  async addLicense(licenseId: string): Promise<void> {
    await this.submitAndWait({ kind: 'add_license', license_id: licenseId });
  }

  async addVehicleListing(vehicleId: string, dailyPrice: number): Promise<void> {
    await this.submitAndWait({
      kind: 'add_vehicle', vehicle_id: vehicleId, daily_price: dailyPrice,
    });
  }

  // -- transaction pipeline ----------------------------------------------

  private async nextNonce(address: string): Promise<number> {
    try {
      const acct = await this.client.account(address);
      return acct.nonce + 1;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        return 1; // the account has no history yet
      }
      throw err;
    }
  }

  private async submitAndWait(payload: Payload): Promise<void> {
    if (!this.session) {
      throw new Error('no wallet loaded');
    }
    if (this.busy) {
      throw new Error('another action is still in flight');
    }
    this.busy = true;
    try {
      const nonce = await this.nextNonce(this.session.address);
      const signed = await buildSigned(this.session.keyPair, nonce, payload);
      const before = await this.client.day();
      await this.client.submitTx(signed.doc);
      await this.waitForInclusion(this.session.address, nonce, before.height);
      this.showError(null);
    } catch (err) {
      this.showError(err);
      throw err;
    } finally {
      this.busy = false;
    }
    await this.refresh();
  }

  private async waitForInclusion(
    sender: string,
    nonce: number,
    fromHeight: number,
  ): Promise<void> {
    // There is no lookup-by-txid endpoint, so scan new blocks for our
    // (sender, nonce) pair; nonces are unique per account by construction.
    const deadline = Date.now() + this.txTimeoutMs;
    let scanned = fromHeight;
    while (Date.now() < deadline) {
      const { headers } = await this.client.chain(scanned + 1);
      for (const header of headers) {
        const { block } = await this.client.block(header.hash);
        for (const tx of block.transactions) {
          if (tx.from === sender && tx.nonce === nonce) {
            return;
          }
        }
        scanned = header.height;
      }
      await new Promise((resolve) => setTimeout(resolve, this.txPollMs));
    }
    throw new Error(`transaction from ${sender} nonce ${nonce} was not included in time`);
  }

  // -- state loading ------------------------------------------------------

  private async loadRoles(): Promise<void> {
    const { headers } = await this.client.chain(0);
    const first = headers[0];
    if (!first) return;
    const { block } = await this.client.block(first.hash);
    if (block.genesis) {
      this.roles = { admin: block.genesis.admin, fleetOwner: block.genesis.fleet_owner };
    }
  }

  async refresh(): Promise<void> {
    const [day, fleet] = await Promise.all([this.client.day(), this.client.vehicles()]);

    let balance: number | null = null;
    if (this.session) {
      try {
        balance = (await this.client.account(this.session.address)).balance;
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
          balance = 0;
        } else {
          throw err;
        }
      }
    }

    const rentals: Rental[] = [];
    if (this.session) {
      for (const vehicle of fleet.vehicles) {
        if (vehicle.status !== 'Rented') continue;
        try {
          const { agreement } = await this.client.agreement(vehicle.vehicle_id);
          if (agreement.client === this.session.address) {
            rentals.push({ agreement, dailyPrice: vehicle.daily_price });
          }
        } catch (err) {
          if (!(err instanceof ApiError && err.status === 404)) throw err;
        }
      }
    }

    const isAdmin = this.session !== null && this.roles !== null
      && this.session.address === this.roles.admin;
    const isOwner = this.session !== null && this.roles !== null
      && this.session.address === this.roles.fleetOwner;

    let licenses: { license_id: string }[] = [];
    if (isAdmin) {
      licenses = (await this.client.licenses()).licenses;
    }

    this.renderStatus(day.height, day.current_day);
    this.renderWallet(balance);
    this.renderFleet(fleet.vehicles);
    this.renderDashboard(rentals);
    this.renderAdmin(isAdmin, isOwner, licenses);
    this.renderPrompt();
  }

  // -- rendering ----------------------------------------------------------

  private el<T extends HTMLElement>(id: string): T {
    const node = this.root.querySelector(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  }

  private renderSkeleton(): void {
    this.root.innerHTML = `
      <header id="status-bar">
        <span id="status-node">${esc(this.client.baseUrl)}</span>
        <span>height <b id="status-height">-</b></span>
        <span>day <b id="status-day">-</b></span>
      </header>
      <div id="error-box" hidden></div>
      <div id="charges-prompt" hidden>
        <p>Return blocked: <b id="prompt-amount">0</b> units owed on
           <span id="prompt-vehicle"></span>.</p>
        <input id="prompt-pay-amount" type="number" min="1">
        <button id="prompt-pay">Add funds</button>
        <button id="prompt-dismiss">Dismiss</button>
      </div>
      <section id="wallet-panel">
        <h2>Wallet</h2>
        <div id="wallet-connected" hidden>
          <p>address <code class="wallet-address"></code></p>
          <p>balance <b class="wallet-balance">-</b></p>
          <button id="wallet-disconnect">Forget wallet</button>
        </div>
        <div id="wallet-forms">
          <textarea id="wallet-file-text" rows="4"
            placeholder="paste a wallet file here"></textarea>
          <input id="wallet-file-input" type="file" accept="application/json">
          <input id="wallet-passphrase" type="password" placeholder="passphrase">
          <button id="wallet-import">Unlock</button>
          <button id="wallet-generate">Generate new</button>
          <textarea id="wallet-export" rows="4" hidden readonly></textarea>
        </div>
      </section>
      <section id="fleet-panel">
        <h2>Fleet</h2>
        <div class="rent-inputs">
          <input id="rent-license" placeholder="license id">
          <input id="rent-deposit" type="number" min="0" placeholder="deposit">
        </div>
        <table>
          <thead><tr><th>vehicle</th><th>daily price</th><th>status</th><th></th></tr></thead>
          <tbody id="fleet-rows"></tbody>
        </table>
      </section>
      <section id="dashboard-panel">
        <h2>My rentals</h2>
        <div id="rental-rows"></div>
      </section>
      <section id="admin-panel" hidden>
        <h2>Administration</h2>
        <div id="admin-license-block" hidden>
          <input id="license-id" placeholder="license id">
          <button id="license-add">Register license</button>
          <ul id="license-list"></ul>
        </div>
        <div id="admin-vehicle-block" hidden>
          <input id="vehicle-id" placeholder="vehicle id">
          <input id="vehicle-price" type="number" min="1" placeholder="daily price">
          <button id="vehicle-add">List vehicle</button>
        </div>
      </section>
    `;
  }

  private wireEvents(): void {
    this.root.addEventListener('click', (event) => {
      const target = event.target as HTMLElement;
      const handler = this.clickHandler(target);
      if (handler) {
        handler().catch(() => {
          // the action already rendered its error envelope
        });
      }
    });
    const fileInput = this.el<HTMLInputElement>('wallet-file-input');
    fileInput.addEventListener('change', () => {
      const file = fileInput.files && fileInput.files[0];
      if (!file) return;
      file.text().then((text) => {
        this.el<HTMLTextAreaElement>('wallet-file-text').value = text;
      });
    });
  }

  private clickHandler(target: HTMLElement): (() => Promise<void>) | null {
    if (target.id === 'wallet-import') {
      return async () => {
        const text = this.el<HTMLTextAreaElement>('wallet-file-text').value;
        const passphrase = this.el<HTMLInputElement>('wallet-passphrase').value;
        try {
          await this.importWalletFile(JSON.parse(text) as WalletFile, passphrase);
        } catch (err) {
          this.showError(err);
          throw err;
        }
      };
    }
    if (target.id === 'wallet-generate') {
      return async () => {
        const passphrase = this.el<HTMLInputElement>('wallet-passphrase').value;
        if (!passphrase) {
          this.showError(new Error('a passphrase is required to encrypt the new wallet'));
          return;
        }
        const file = await this.generateWallet(passphrase);
        const out = this.el<HTMLTextAreaElement>('wallet-export');
        out.value = JSON.stringify(file, null, 2);
        out.hidden = false;
      };
    }
    if (target.id === 'wallet-disconnect') {
      return async () => this.disconnect();
    }
    if (target.classList.contains('rent-button')) {
      const vehicleId = target.dataset.vehicle ?? '';
      return async () => {
        const licenseId = this.el<HTMLInputElement>('rent-license').value;
        const deposit = Number(this.el<HTMLInputElement>('rent-deposit').value || '0');
        await this.rent(vehicleId, licenseId, deposit);
      };
    }
    if (target.classList.contains('fund-button')) {
      const vehicleId = target.dataset.vehicle ?? '';
      return async () => {
        const row = target.closest('.rental-row');
        const input = row && row.querySelector<HTMLInputElement>('.fund-amount');
        await this.addFunds(vehicleId, Number(input ? input.value : '0'));
      };
    }
    if (target.classList.contains('return-button')) {
      const vehicleId = target.dataset.vehicle ?? '';
      return async () => {
        await this.returnVehicle(vehicleId);
      };
    }
    if (target.id === 'prompt-pay') {
      return async () => {
        if (!this.prompt) return;
        const amount = Number(this.el<HTMLInputElement>('prompt-pay-amount').value || '0');
        await this.addFunds(this.prompt.vehicleId, amount);
      };
    }
    if (target.id === 'prompt-dismiss') {
      return async () => {
        this.prompt = null;
        this.renderPrompt();
      };
    }
    if (target.id === 'license-add') {
      return async () => {
        await this.addLicense(this.el<HTMLInputElement>('license-id').value);
      };
    }
    if (target.id === 'vehicle-add') {
      return async () => {
        const id = this.el<HTMLInputElement>('vehicle-id').value;
        const price = Number(this.el<HTMLInputElement>('vehicle-price').value || '0');
        await this.addVehicleListing(id, price);
      };
    }
    return null;
  }

  private renderStatus(height: number, day: number): void {
    this.el('status-height').textContent = String(height);
    this.el('status-day').textContent = String(day);
  }

  private renderWallet(balance: number | null): void {
    const connected = this.el('wallet-connected');
    const forms = this.el('wallet-forms');
    if (this.session) {
      connected.hidden = false;
      forms.hidden = true;
      connected.querySelector('.wallet-address')!.textContent = this.session.address;
      connected.querySelector('.wallet-balance')!.textContent =
        balance === null ? '-' : String(balance);
    } else {
      connected.hidden = true;
      forms.hidden = false;
    }
  }

  private renderFleet(vehicles: VehicleDoc[]): void {
    const rows = this.el('fleet-rows');
    rows.innerHTML = vehicles.map((v) => `
      <tr class="vehicle-row" data-vehicle="${esc(v.vehicle_id)}">
        <td class="vehicle-id">${esc(v.vehicle_id)}</td>
        <td class="vehicle-price">${v.daily_price}</td>
        <td class="vehicle-status">${v.status}</td>
        <td>${v.status === 'Available' && this.session
          ? `<button class="rent-button" data-vehicle="${esc(v.vehicle_id)}">Rent</button>`
          : ''}</td>
      </tr>
    `).join('');
  }

  private renderDashboard(rentals: Rental[]): void {
    const box = this.el('rental-rows');
    if (rentals.length === 0) {
      box.innerHTML = '<p class="no-rentals">No active rentals.</p>';
      return;
    }
    box.innerHTML = rentals.map(({ agreement: a, dailyPrice }) => `
      <div class="rental-row" data-vehicle="${esc(a.vehicle_id)}">
        <h3>${esc(a.vehicle_id)}</h3>
        <dl>
          <dt>daily price</dt><dd class="rental-price">${dailyPrice}</dd>
          <dt>deposit left</dt><dd class="rental-deposit">${a.deposit}</dd>
          <dt>charges</dt><dd class="rental-charges">${a.charges}</dd>
          <dt>days elapsed</dt><dd class="rental-days">${a.days_elapsed}</dd>
        </dl>
        <input class="fund-amount" type="number" min="1" placeholder="amount">
        <button class="fund-button" data-vehicle="${esc(a.vehicle_id)}">Add funds</button>
        <button class="return-button" data-vehicle="${esc(a.vehicle_id)}">Return</button>
      </div>
    `).join('');
  }

  private renderAdmin(isAdmin: boolean, isOwner: boolean, licenses: { license_id: string }[]): void {
    this.el('admin-panel').hidden = !(isAdmin || isOwner);
    this.el('admin-license-block').hidden = !isAdmin;
    this.el('admin-vehicle-block').hidden = !isOwner;
    if (isAdmin) {
      this.el('license-list').innerHTML = licenses
        .map((l) => `<li class="license-row">${esc(l.license_id)}</li>`)
        .join('');
    }
  }

  private renderPrompt(): void {
    const box = this.el('charges-prompt');
    if (this.prompt) {
      box.hidden = false;
      this.el('prompt-amount').textContent = String(this.prompt.amount);
      this.el('prompt-vehicle').textContent = this.prompt.vehicleId;
      this.el<HTMLInputElement>('prompt-pay-amount').value = String(this.prompt.amount);
    } else {
      box.hidden = true;
    }
  }

  private showError(err: unknown): void {
    const box = this.el('error-box');
    if (err === null) {
      box.hidden = true;
      box.textContent = '';
      return;
    }
    box.hidden = false;
    if (err instanceof ApiError) {
      // the node's envelope, verbatim
      box.textContent = JSON.stringify(err.envelope);
    } else {
      box.textContent = String(err instanceof Error ? err.message : err);
    }
  }
}

export type { Envelope, WalletFile };

// Auto-mount when loaded as a page script; tests construct App themselves.
if (typeof document !== 'undefined') {
  const mount = document.getElementById('app');
  if (mount) {
    const params = new URLSearchParams(window.location.search);
    const nodeUrl = params.get('node') ?? 'http://127.0.0.1:8545';
    const app = new App(mount, nodeUrl);
    app.start().catch((err) => {
      mount.textContent = `cannot reach the node at ${nodeUrl}: ${err}`;
    });
  }
}
