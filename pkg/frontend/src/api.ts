// Typed client for the campaign service HTTP API.

import { FeedbackAck, QueriesResponse, ReportJson, RolloutJson, Verdict } from "./types";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class CampaignApi {
  constructor(private baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await fetch(this.baseUrl + path, init);
    } catch (e) {
      throw new ApiError(0, `network failure: ${e}`);
    }
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && typeof body.detail === "string") detail = body.detail;
      } catch {
        // keep statusText
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  createSession(config: unknown): Promise<{ session_id: string }> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
  }

  getQueries(sessionId: string): Promise<QueriesResponse> {
    return this.request(`/sessions/${sessionId}/queries`);
  }

  submitFeedback(
    sessionId: string,
    queryId: string,
    verdict: Verdict,
    rater = "human",
    sessionVersion?: number,
  ): Promise<FeedbackAck> {
    const body: Record<string, unknown> = { query_id: queryId, verdict, rater };
    if (sessionVersion !== undefined) body.session_version = sessionVersion;
    return this.request(`/sessions/${sessionId}/feedback`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  getRollout(sessionId: string, rolloutId: string): Promise<RolloutJson> {
    return this.request(`/sessions/${sessionId}/rollouts/${rolloutId}`);
  }

  getReport(sessionId: string): Promise<ReportJson> {
    return this.request(`/sessions/${sessionId}/report`);
  }
}
