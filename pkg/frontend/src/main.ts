// Rater workflow controller: fetch pending queries, render one at a time,
// collect the verdict, submit, and move on. Controls lock while a
// submission is in flight so double clicks cannot produce duplicates; the
// service rejects replays of answered queries as a second line of defense.

import { ApiError, CampaignApi } from "./api";
import { buildQueryView } from "./model";
import { renderAnalytics } from "./analytics";
import { renderErrorPanel, renderQuery } from "./render";
import { QueriesResponse, QueryJson, Verdict } from "./types";

export class RaterApp {
  private sessionId: string | null = null;
  private current: QueryJson | null = null;
  private payload: QueriesResponse | null = null;
  private submitting = false;

  constructor(
    private doc: Document,
    private root: HTMLElement,
    private api: CampaignApi,
    private rater: string = "human",
  ) {}

  async loadSession(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    try {
      this.payload = await this.api.getQueries(this.sessionId);
    } catch (e) {
      this.renderError(`failed to fetch queries: ${(e as Error).message}`, true);
      return;
    }
    this.current = this.payload.queries[0] ?? null;
    this.render();
  }

  private render(): void {
    this.root.replaceChildren();
    if (!this.payload) return;
    const status = this.doc.createElement("div");
    status.className = "status-bar";
    status.dataset.completed = String(this.payload.completed);
    status.textContent = this.payload.completed
      ? `session ${this.payload.session_id} completed`
      : `session ${this.payload.session_id} - iteration ${this.payload.iteration} - ` +
        `${this.payload.queries.length} pending`;
    this.root.appendChild(status);

    if (this.payload.completed || !this.current) {
      const done = this.doc.createElement("div");
      done.className = "all-done";
      done.textContent = this.payload.completed
        ? "campaign finished - see the analytics view"
        : "no pending queries";
      this.root.appendChild(done);
      return;
    }

    let view;
    try {
      view = buildQueryView(this.current, this.payload.environment);
    } catch (e) {
      this.renderError(`malformed query payload: ${(e as Error).message}`, false);
      return;
    }
    this.root.appendChild(renderQuery(this.doc, view));
    this.root.appendChild(this.renderControls(this.current));
  }

  private renderControls(query: QueryJson): HTMLElement {
    const bar = this.doc.createElement("div");
    bar.className = "controls";
    const options: { verdict: Verdict; label: string; cls: string }[] =
      query.kind === "preference"
        ? [
            { verdict: "left", label: "prefer left", cls: "prefer-left" },
            { verdict: "right", label: "prefer right", cls: "prefer-right" },
            { verdict: "skip", label: "cannot tell", cls: "skip" },
          ]
        : [
            { verdict: "safe", label: "safe", cls: "mark-safe" },
            { verdict: "unsafe", label: "unsafe", cls: "mark-unsafe" },
            { verdict: "skip", label: "skip", cls: "skip" },
          ];
    for (const opt of options) {
      const btn = this.doc.createElement("button");
      btn.className = `verdict ${opt.cls}`;
      btn.dataset.verdict = opt.verdict;
      btn.textContent = opt.label;
      btn.addEventListener("click", () => void this.submit(opt.verdict));
      bar.appendChild(btn);
    }
    return bar;
  }

  async submit(verdict: Verdict): Promise<void> {
    if (!this.sessionId || !this.current || this.submitting) return;
    this.submitting = true;
    this.setControlsDisabled(true);
    const queryId = this.current.query_id;
    try {
      await this.api.submitFeedback(this.sessionId, queryId, verdict, this.rater);
    } catch (e) {
      const err = e as ApiError;
      if (err.status === 409) {
        // already answered (e.g. a retry after a lost ack): just move on
      } else {
        this.submitting = false;
        this.renderError(`submission failed: ${err.message}`, true);
        return;
      }
    }
    this.submitting = false;
    await this.refresh();
  }

  private setControlsDisabled(disabled: boolean): void {
    for (const btn of this.root.querySelectorAll("button.verdict")) {
      (btn as HTMLButtonElement).disabled = disabled;
    }
  }

  private renderError(message: string, retryable: boolean): void {
    this.root.replaceChildren();
    this.root.appendChild(renderErrorPanel(this.doc, message));
    if (retryable) {
      const retry = this.doc.createElement("button");
      retry.className = "retry";
      retry.textContent = "retry";
      retry.addEventListener("click", () => void this.refresh());
      this.root.appendChild(retry);
    }
  }

  async showAnalytics(container: HTMLElement): Promise<void> {
    if (!this.sessionId) return;
    const report = await this.api.getReport(this.sessionId);
    container.replaceChildren();
    container.appendChild(renderAnalytics(this.doc, report));
  }
}

export function bootstrap(): void {
  const doc = document;
  const root = doc.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const api = new CampaignApi(
    (doc.querySelector("meta[name=api-base]") as HTMLMetaElement | null)?.content ?? "",
  );
  const app = new RaterApp(doc, root, api);

  const form = doc.getElementById("session-form") as HTMLFormElement | null;
  const input = doc.getElementById("session-id") as HTMLInputElement | null;
  form?.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (input?.value) void app.loadSession(input.value.trim());
  });
  const analyticsBtn = doc.getElementById("show-analytics");
  const analyticsDiv = doc.getElementById("analytics");
  analyticsBtn?.addEventListener("click", () => {
    if (analyticsDiv) void app.showAnalytics(analyticsDiv);
  });
  const params = new URLSearchParams(window.location.search);
  const sid = params.get("session");
  if (sid) void app.loadSession(sid);
}

declare global {
  interface Window {
    __raterBootstrapped?: boolean;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" && !window.__raterBootstrapped) {
  // guard lets tests import this module without touching the live DOM
  if (document.getElementById("app")) {
    window.__raterBootstrapped = true;
    bootstrap();
  }
}
