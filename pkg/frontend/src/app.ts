// ── Application shell ───────────────────────────────────────────────
// Wires the ask/decide loop to the service. The service is the single
// source of truth: every mutation awaits its response and the view is
// rebuilt from the returned document, never patched locally.

import { ApiClient, ApiError } from './api.js';
import { renderBundle, renderLegend, renderRoute } from './render.js';
import type { AskResponse, SessionDoc } from './types.js';

interface TranscriptLine {
  who: 'user' | 'service';
  text: string;
}

export class App {
  private doc: SessionDoc | null = null;
  private pending: AskResponse | null = null;
  private transcript: TranscriptLine[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly dom: Document,
  ) {
    this.renderShell();
  }

  // ── service round-trips ───────────────────────────────────────────

  async load(sessionId: string): Promise<void> {
    try {
      this.doc = await this.api.getSession(sessionId);
      this.pending = null;
      this.transcript = [{ who: 'service', text: `session ${sessionId} loaded` }];
    } catch (err) {
      this.showError(err);
      return;
    }
    this.render();
  }

  async askStructured(tEx: number, cfTargetNode: number): Promise<void> {
    if (!this.doc) return;
    this.transcript.push({
      who: 'user',
      text: `why not go to node ${cfTargetNode} at step ${tEx}?`,
    });
    try {
      this.pending = await this.api.askStructured(this.doc.id, { tEx, cfTargetNode });
      this.transcript.push({ who: 'service', text: this.pending.bundle.text });
    } catch (err) {
      this.showError(err);
      return;
    }
    this.render();
  }

  async askText(question: string): Promise<void> {
    if (!this.doc) return;
    this.transcript.push({ who: 'user', text: question });
    try {
      this.pending = await this.api.askText(this.doc.id, question);
      this.transcript.push({ who: 'service', text: this.pending.bundle.text });
    } catch (err) {
      // parse failures come back as chat replies, not banners
      if (err instanceof ApiError && err.status === 422) {
        const detail = err.detail as { message?: string };
        this.transcript.push({
          who: 'service',
          text: `${detail?.message ?? 'could not parse that'} — try rephrasing, ` +
            'or use the structured picker below.',
        });
        this.render();
        return;
      }
      this.showError(err);
      return;
    }
    this.render();
  }

  async decide(decision: 'keep' | 'replace'): Promise<void> {
    if (!this.doc || !this.pending) return;
    try {
      this.doc = await this.api.decide(this.doc.id, this.pending.bundle_id, decision);
      this.transcript.push({ who: 'user', text: decision });
      this.pending = null;
    } catch (err) {
      this.showError(err);
      return;
    }
    this.render();
  }

  // ── rendering ─────────────────────────────────────────────────────

  private renderShell(): void {
    this.root.innerHTML = '';
    for (const cls of ['error-banner', 'current-route', 'ask-panel', 'pending-bundle', 'transcript']) {
      const el = this.dom.createElement('div');
      el.className = cls;
      this.root.append(el);
    }
  }

  private panel(cls: string): HTMLElement {
    return this.root.querySelector(`.${cls}`) as HTMLElement;
  }

  private showError(err: unknown): void {
    const banner = this.panel('error-banner');
    banner.textContent =
      err instanceof ApiError
        ? `service error ${err.status}: ${JSON.stringify(err.detail)}`
        : `network error: ${String(err)}`;
    banner.classList.add('visible');
  }

  private render(): void {
    const doc = this.doc;
    if (!doc) return;
    const banner = this.panel('error-banner');
    banner.textContent = '';
    banner.classList.remove('visible');

    const current = this.panel('current-route');
    current.innerHTML = '';
    current.append(
      renderRoute(this.dom, doc.instance, doc.current_route, doc.intentions, 'current route'),
      renderLegend(this.dom, doc.class_names),
    );

    this.renderAskPanel(doc);

    const pendingBox = this.panel('pending-bundle');
    pendingBox.innerHTML = '';
    if (this.pending) {
      pendingBox.append(renderBundle(this.dom, doc.instance, this.pending.bundle));
      for (const decision of ['keep', 'replace'] as const) {
        const btn = this.dom.createElement('button');
        btn.textContent = decision;
        btn.dataset.decision = decision;
        btn.addEventListener('click', () => void this.decide(decision));
        pendingBox.append(btn);
      }
    }

    const log = this.panel('transcript');
    log.innerHTML = '';
    for (const line of this.transcript) {
      const p = this.dom.createElement('p');
      p.className = `line ${line.who}`;
      p.textContent = line.text;
      log.append(p);
    }
  }

  /** Structured picker: choose an edge step, then an alternative head. */
  private renderAskPanel(doc: SessionDoc): void {
    const panel = this.panel('ask-panel');
    panel.innerHTML = '';
    const order = doc.current_route.order;

    const stepSelect = this.dom.createElement('select');
    stepSelect.className = 'pick-step';
    for (let t = 1; t < order.length; t++) {
      const opt = this.dom.createElement('option');
      opt.value = String(t);
      opt.textContent = `step ${t}: ${order[t - 1]} → ${order[t]}`;
      stepSelect.append(opt);
    }

    const nodeSelect = this.dom.createElement('select');
    nodeSelect.className = 'pick-node';
    const fillNodes = () => {
      nodeSelect.innerHTML = '';
      const t = Number(stepSelect.value);
      const seen = new Set(order.slice(0, t));
      for (let i = 1; i < doc.instance.nodes.length; i++) {
        if (i === order[t] || seen.has(i)) continue;
        const opt = this.dom.createElement('option');
        opt.value = String(i);
        opt.textContent = doc.instance.nodes[i].label ?? `node ${i}`;
        nodeSelect.append(opt);
      }
    };
    fillNodes();
    stepSelect.addEventListener('change', fillNodes);

    const askBtn = this.dom.createElement('button');
    askBtn.className = 'ask-structured';
    askBtn.textContent = 'why not?';
    askBtn.addEventListener('click', () =>
      void this.askStructured(Number(stepSelect.value), Number(nodeSelect.value)),
    );

    const textInput = this.dom.createElement('input');
    textInput.className = 'ask-text-input';
    textInput.placeholder = 'or ask in your own words…';
    const textBtn = this.dom.createElement('button');
    textBtn.className = 'ask-text';
    textBtn.textContent = 'ask';
    textBtn.addEventListener('click', () => void this.askText(textInput.value));

    panel.append(stepSelect, nodeSelect, askBtn, textInput, textBtn);
  }
}
