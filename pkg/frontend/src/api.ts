import type { ModelStats, SuggestRequest, SuggestResponse, TelemetryEvent } from "./types.js";

/** Thin fetch client over the service endpoints. */
export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`${path} failed with HTTP ${response.status}`);
    }
    return (await response.json()) as T;
  }

  suggest(request: SuggestRequest): Promise<SuggestResponse> {
    return this.postJson<SuggestResponse>("/v1/suggest", request);
  }

  postTelemetry(event: TelemetryEvent): Promise<unknown> {
    return this.postJson("/v1/telemetry", event);
  }

  rebuildModel(): Promise<unknown> {
    return this.postJson("/v1/model/rebuild", {});
  }

  async modelStats(): Promise<ModelStats> {
    const response = await fetch(this.baseUrl + "/v1/model/stats");
    if (!response.ok) {
      throw new Error(`/v1/model/stats failed with HTTP ${response.status}`);
    }
    return (await response.json()) as ModelStats;
  }
}
