import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { PlaygroundState } from "../src/state.js";
import type { SuggestRequest, SuggestResponse, TelemetryEvent } from "../src/types.js";

/** In-memory stand-in for the service, recording every call. */
class FakeApi extends ApiClient {
  suggestCalls: SuggestRequest[] = [];
  telemetry: TelemetryEvent[] = [];
  failSuggest = false;
  failTelemetry = false;
  nextResponse: SuggestResponse = {
    request_id: "r1",
    suggestions: [
      { prompt: "List suspicious activities related to these sign-ins", skill: "GetSecurityAlerts", rank_source: "llm" },
      { prompt: "Show me the audit logs for these users", skill: "GetAuditLogs", rank_source: "llm" },
    ],
    degradation_flags: [],
  };

  override async suggest(request: SuggestRequest): Promise<SuggestResponse> {
    if (this.failSuggest) throw new Error("network down");
    this.suggestCalls.push(structuredClone(request));
    return structuredClone(this.nextResponse);
  }

  override async postTelemetry(event: TelemetryEvent): Promise<unknown> {
    if (this.failTelemetry) throw new Error("telemetry down");
    this.telemetry.push(structuredClone(event));
    return { status: "ok" };
  }
}

describe("PlaygroundState", () => {
  let api: FakeApi;
  let state: PlaygroundState;

  beforeEach(() => {
    api = new FakeApi();
    state = new PlaygroundState(api, undefined, "tab-test");
  });

  it("sends the transcript with every query and renders at most five chips", async () => {
    await state.sendQuery("show me the recent signins");
    expect(api.suggestCalls).toHaveLength(1);
    const call = api.suggestCalls[0]!;
    expect(call.query_text).toBe("show me the recent signins");
    expect(call.turns).toHaveLength(1);
    expect(call.turns[0]).toMatchObject({ index: 0, role: "user", text: "show me the recent signins" });
    expect(state.chips.length).toBeLessThanOrEqual(5);
    expect(state.chips[0]!.skill).toBe("GetSecurityAlerts");
  });

  it("ignores empty queries", async () => {
    await state.sendQuery("   ");
    expect(api.suggestCalls).toHaveLength(0);
    expect(state.transcript).toHaveLength(0);
  });

  it("clicking a chip posts clicked then invoked, grows the transcript, refetches", async () => {
    await state.sendQuery("first question");
    await state.clickChip(0);

    expect(api.telemetry).toHaveLength(2);
    expect(api.telemetry[0]!.kind).toBe("suggestion_clicked");
    expect(api.telemetry[1]!.kind).toBe("skill_invoked");
    expect(api.telemetry[0]!.skill_id).toBe("GetSecurityAlerts");
    expect(api.telemetry[1]!.skill_id).toBe("GetSecurityAlerts");
    expect(api.telemetry[0]!.event_id < api.telemetry[1]!.event_id).toBe(true);
    expect(api.telemetry[0]!.timestamp_ms).toBeLessThan(api.telemetry[1]!.timestamp_ms);

    expect(state.transcript).toHaveLength(2);
    expect(state.transcript[1]).toMatchObject({
      role: "user",
      text: "List suspicious activities related to these sign-ins",
      invoked_skill: "GetSecurityAlerts",
    });
    expect(state.lastInvokedSkill()).toBe("GetSecurityAlerts");
    expect(api.suggestCalls).toHaveLength(2);
    expect(api.suggestCalls[1]!.query_text).toBe("List suspicious activities related to these sign-ins");
  });

  it("guards against double-clicks while a request is pending", async () => {
    await state.sendQuery("first question");
    const first = state.clickChip(0);
    const second = state.clickChip(1); // pending -> no-op
    await Promise.all([first, second]);
    expect(api.telemetry).toHaveLength(2);
    expect(state.transcript).toHaveLength(2);
  });

  it("renders a degradation banner when the service reports flags", async () => {
    api.nextResponse = { ...api.nextResponse, degradation_flags: ["template_fallback"] };
    await state.sendQuery("anything");
    expect(state.banner?.kind).toBe("degraded");
    expect(state.banner?.text).toContain("template_fallback");
  });

  it("keeps the transcript and offers retry when the network fails", async () => {
    api.failSuggest = true;
    await state.sendQuery("important question");
    expect(state.transcript).toHaveLength(1); // never lose the transcript
    expect(state.banner?.kind).toBe("error");
    expect(state.lastFailedQuery).toBe("important question");

    api.failSuggest = false;
    await state.retry();
    expect(state.transcript).toHaveLength(1); // retry does not re-append
    expect(state.chips.length).toBeGreaterThan(0);
    expect(state.banner).toBeNull();
  });

  it("telemetry failure never blocks the chat", async () => {
    await state.sendQuery("first");
    api.failTelemetry = true;
    await state.clickChip(0);
    expect(state.transcript).toHaveLength(2);
    expect(api.suggestCalls).toHaveLength(2);
    expect(state.banner?.kind).toBe("info");
  });

  it("mode selection rides along as a config override", async () => {
    state.setMode("full_llm");
    await state.sendQuery("question");
    expect(api.suggestCalls[0]!.config).toEqual({ mode: "full_llm" });
  });

  it("chip prompts are exactly the service texts, never fabricated", async () => {
    await state.sendQuery("q");
    const served = new Set(api.nextResponse.suggestions.map((s) => s.prompt));
    for (const chip of state.chips) {
      expect(served.has(chip.prompt)).toBe(true);
    }
  });
});
