// Live round trip against the real campaign service: a scripted rater
// answers one full iteration of queries through the rendered controls. The
// dataset JSONL on disk must gain exactly the submitted records, rendered
// min-h badges must equal the payload values, and a double click must not
// produce a duplicate record.

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { CampaignApi } from "../src/api";
import { RaterApp } from "../src/main";

const PORT = 8900 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

const CONFIG = {
  name: "ui-roundtrip",
  seed: 21,
  learner: { actions_per_iteration: 2, iterations: 2 },
  environment: {
    obstacles: [
      { center: [1.3, 0.6], radius: 0.5 },
      { center: [1.3, -0.6], radius: 0.5 },
    ],
    heading_weight: 0.2,
    measurement_bound: 0.1,
  },
  sim: { horizon: 6.0, measurement_shift: [0.0, -0.1], goal: [3.0, 0.0] },
};

let server: ChildProcess;
let dataDir: string;

async function waitForServer(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/sessions`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not come up");
}

function readDatasetRecords(sessionId: string): Record<string, unknown>[] {
  const path = join(dataDir, "sessions", sessionId, "dataset.jsonl");
  const text = readFileSync(path, "utf-8");
  return text
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "rater-ui-"));
  const launcher =
    "import uvicorn\n" +
    "from safetune.httpapi import create_app\n" +
    "from safetune.service import SessionStore\n" +
    `app = create_app(SessionStore(${JSON.stringify(dataDir)}))\n` +
    `uvicorn.run(app, host='127.0.0.1', port=${PORT}, log_level='error')\n`;
  server = spawn("python3", ["-c", launcher], { stdio: "ignore" });
  await waitForServer();
});

afterAll(() => {
  server?.kill("SIGKILL");
  rmSync(dataDir, { recursive: true, force: true });
});

describe("rater round trip against a live service", () => {
  it("answers one full iteration through the UI and persists exactly those records", async () => {
    const api = new CampaignApi(BASE);
    const { session_id: sid } = await api.createSession(CONFIG);

    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new RaterApp(document, root, api, "ui-test");
    await app.loadSession(sid);

    const first = await api.getQueries(sid);
    expect(first.iteration).toBe(1);
    const expectedQueryIds = first.queries.map((q) => q.query_id);
    expect(expectedQueryIds.length).toBe(3); // one pair plus two ordinals for s = 2

    const submitted: { qid: string; verdict: string }[] = [];
    for (let step = 0; step < expectedQueryIds.length; step++) {
      const payload = await api.getQueries(sid);
      const query = payload.queries[0]!;

      // rendered min-h badges must equal the payload values bit for bit
      const badges = root.querySelectorAll(".badge.min-h");
      expect(badges.length).toBe(query.items.length);
      query.items.forEach((item, i) => {
        const raw = (badges[i] as HTMLElement).dataset.minH!;
        const rollout = item.rollout!;
        if (rollout.min_h === null) {
          expect(raw).toBe("null");
        } else {
          expect(Number(raw)).toBe(rollout.min_h);
        }
      });

      const verdict = query.kind === "preference" ? "left" : "safe";
      const selector = query.kind === "preference"
        ? "button.verdict.prefer-left"
        : "button.verdict.mark-safe";
      const button = root.querySelector(selector) as HTMLButtonElement;
      expect(button).not.toBeNull();
      button.click();
      if (step === 0) {
        button.click(); // duplicate click: in-flight guard must swallow it
      }
      submitted.push({ qid: query.query_id, verdict });
      await new Promise<void>((resolve, reject) => {
        const deadline = Date.now() + 30_000;
        const tick = async () => {
          const now = await api.getQueries(sid);
          const answered = !now.queries.some((q) => q.query_id === query.query_id);
          if (answered) return resolve();
          if (Date.now() > deadline) return reject(new Error("submission never landed"));
          setTimeout(tick, 100);
        };
        void tick();
      });
      await app.refresh();
    }

    const after = await api.getQueries(sid);
    expect(after.iteration).toBe(2); // the drained queue advanced the learner

    const records = readDatasetRecords(sid);
    const iter1 = records.filter((r) => String(r.qid).startsWith("i0001"));
    expect(iter1.length).toBe(expectedQueryIds.length); // no duplicates, no losses
    expect(new Set(iter1.map((r) => r.qid as string))).toEqual(new Set(expectedQueryIds));
    for (const rec of iter1) {
      expect(rec.source).toBe("ui-test");
      const match = submitted.find((s) => s.qid === rec.qid)!;
      if (rec.kind === "preference") {
        expect(rec.verdict).toBe("left");
      } else {
        expect(rec.category).toBe(2); // "safe"
      }
      expect(match).toBeDefined();
    }
    document.body.removeChild(root);
  });

  it("recovers from an injected network fault without a double entry", async () => {
    const api = new CampaignApi(BASE);
    const { session_id: sid } = await api.createSession(CONFIG);
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new RaterApp(document, root, api, "fault-test");
    await app.loadSession(sid);
    const payload = await api.getQueries(sid);
    const query = payload.queries[0]!;

    // drop the response of the first POST after the server has committed it:
    // the client sees a failure although the record landed
    const realFetch = globalThis.fetch;
    let dropped = false;
    globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
      const resp = await realFetch(input, init);
      if (!dropped && init?.method === "POST" && String(input).includes("/feedback")) {
        dropped = true;
        throw new TypeError("socket closed");
      }
      return resp;
    }) as typeof fetch;
    try {
      const selector = query.kind === "preference"
        ? "button.verdict.prefer-left"
        : "button.verdict.mark-safe";
      (root.querySelector(selector) as HTMLButtonElement).click();
      await new Promise((r) => setTimeout(r, 500));
      // the UI surfaces the failure with a retry control
      expect(root.querySelector(".error-panel")).not.toBeNull();
      const retry = root.querySelector("button.retry") as HTMLButtonElement;
      expect(retry).not.toBeNull();
      retry.click();
      await new Promise((r) => setTimeout(r, 500));
    } finally {
      globalThis.fetch = realFetch;
    }
    // exactly one record despite the lost acknowledgment
    const records = readDatasetRecords(sid).filter((r) => r.qid === query.query_id);
    expect(records.length).toBe(1);
    // after the retry refresh the answered query is no longer pending
    const now = await api.getQueries(sid);
    expect(now.queries.some((q) => q.query_id === query.query_id)).toBe(false);
    document.body.removeChild(root);
  });

  it("rejects a stale direct resubmission after the UI already answered", async () => {
    const api = new CampaignApi(BASE);
    const { session_id: sid } = await api.createSession(CONFIG);
    const payload = await api.getQueries(sid);
    const q = payload.queries[0]!;
    const verdict = q.kind === "preference" ? "left" : "safe";
    await api.submitFeedback(sid, q.query_id, verdict);
    await expect(api.submitFeedback(sid, q.query_id, verdict)).rejects.toMatchObject({
      status: 409,
    });
    const records = readDatasetRecords(sid).filter((r) => r.qid === q.query_id);
    expect(records.length).toBe(1);
  });
});
