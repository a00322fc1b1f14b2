import { ApiClient } from "./api.js";
import type { Mode, Profile, SuggestionChip, Turn } from "./types.js";

export interface Banner {
  kind: "degraded" | "error" | "info";
  text: string;
}

/**
 * Playground session state and the transitions between states.
 *
 * The transcript is the single source of truth: every /v1/suggest call
 * sends it whole, and it only ever grows. At most one suggest call is in
 * flight at a time; chip clicks are ignored while one is pending.
 */
export class PlaygroundState {
  readonly sessionId: string;
  transcript: Turn[] = [];
  chips: SuggestionChip[] = [];
  flags: string[] = [];
  banner: Banner | null = null;
  mode: Mode = "markov_hybrid";
  pending = false;
  lastFailedQuery: string | null = null;

  private eventCounter = 0;
  private lastTimestamp = 0;
  private listeners: (() => void)[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly profile: Profile = {
      user_id: "playground",
      role_tag: "analyst",
      org_tag: "demo",
      preferred_plugin_ids: [],
    },
    sessionId?: string,
  ) {
    this.sessionId = sessionId ?? `tab-${Math.random().toString(36).slice(2, 10)}`;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  lastInvokedSkill(): string | null {
    for (let i = this.transcript.length - 1; i >= 0; i--) {
      const skill = this.transcript[i]?.invoked_skill;
      if (skill) return skill;
    }
    return null;
  }

  private nextEventId(): string {
    this.eventCounter += 1;
    return `${this.sessionId}-${String(this.eventCounter).padStart(6, "0")}`;
  }

  private nextTimestamp(): number {
    // strictly increasing even when clicks land in the same millisecond
    this.lastTimestamp = Math.max(Date.now(), this.lastTimestamp + 1);
    return this.lastTimestamp;
  }

  private appendTurn(text: string, invokedSkill?: string): void {
    this.transcript.push({
      index: this.transcript.length,
      role: "user",
      text,
      ...(invokedSkill ? { invoked_skill: invokedSkill } : {}),
    });
  }

  /** Fetch fresh suggestions for the transcript + query. */
  private async fetchSuggestions(queryText: string): Promise<void> {
    this.pending = true;
    this.banner = null;
    this.notify();
    try {
      const response = await this.api.suggest({
        session_id: this.sessionId,
        turns: this.transcript,
        profile: this.profile,
        query_text: queryText,
        config: { mode: this.mode },
      });
      this.chips = response.suggestions;
      this.flags = response.degradation_flags;
      this.lastFailedQuery = null;
      if (this.flags.length > 0) {
        this.banner = { kind: "degraded", text: `degraded: ${this.flags.join(", ")}` };
      }
    } catch (error) {
      // the transcript is untouched; offer a retry for the same query
      this.lastFailedQuery = queryText;
      this.banner = { kind: "error", text: `request failed (${String(error)}) — retry?` };
    } finally {
      this.pending = false;
      this.notify();
    }
  }

  /** User typed a query and pressed send. */
  async sendQuery(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || this.pending) return;
    this.appendTurn(trimmed);
    await this.fetchSuggestions(trimmed);
  }

  /** Retry the last failed fetch without growing the transcript. */
  async retry(): Promise<void> {
    if (this.lastFailedQuery === null || this.pending) return;
    await this.fetchSuggestions(this.lastFailedQuery);
  }

  /**
   * User clicked a suggestion chip: emit (suggestion_clicked,
   * skill_invoked) telemetry in order, make the prompt the next user
   * turn (carrying the invoked skill), and fetch the next suggestions.
   */
  async clickChip(index: number): Promise<void> {
    const chip = this.chips[index];
    if (!chip || this.pending) return; // double-click guard: first click flips pending
    this.pending = true;
    this.notify();
    try {
      await this.api.postTelemetry({
        event_id: this.nextEventId(),
        session_id: this.sessionId,
        timestamp_ms: this.nextTimestamp(),
        kind: "suggestion_clicked",
        skill_id: chip.skill,
        suggestion_text: chip.prompt,
      });
      await this.api.postTelemetry({
        event_id: this.nextEventId(),
        session_id: this.sessionId,
        timestamp_ms: this.nextTimestamp(),
        kind: "skill_invoked",
        skill_id: chip.skill,
      });
    } catch {
      // telemetry must never block the chat
      this.banner = { kind: "info", text: "telemetry unavailable; continuing" };
    }
    this.appendTurn(chip.prompt, chip.skill);
    this.pending = false;
    await this.fetchSuggestions(chip.prompt);
  }

  setMode(mode: Mode): void {
    this.mode = mode;
    this.notify();
  }
}
