/** Wire contracts of the suggestion service (JSON over HTTP). */

export interface Turn {
  index: number;
  role: "user" | "assistant";
  text: string;
  invoked_skill?: string;
}

export interface Profile {
  user_id: string;
  role_tag: string;
  org_tag: string;
  preferred_plugin_ids: string[];
}

export type Mode = "full_llm" | "mini_hybrid" | "markov_hybrid";

export interface SuggestRequest {
  session_id: string;
  turns: Turn[];
  profile: Profile;
  query_text: string;
  config?: { mode: Mode };
}

export interface SuggestionChip {
  prompt: string;
  skill: string;
  rank_source: string;
}

export interface SuggestResponse {
  request_id: string;
  suggestions: SuggestionChip[];
  degradation_flags: string[];
}

export interface TelemetryEvent {
  event_id: string;
  session_id: string;
  timestamp_ms: number;
  kind: "suggestion_clicked" | "skill_invoked";
  skill_id: string;
  suggestion_text?: string;
}

export interface SkillStats {
  skill_id: string;
  row_total: number;
  global_count: number;
  top_transitions: { to: string; count: number; prob: number }[];
}

export interface ModelStats {
  alpha: number;
  min_row_obs: number;
  total_transitions: number;
  skills: SkillStats[];
}
