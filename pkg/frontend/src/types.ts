/** Wire types mirroring the analysis service's /v1/analyze response. */

export type Band = "no_hate" | "low" | "mild" | "extreme";

export interface SpanView {
  start: number; // inclusive token index
  end: number;   // inclusive token index
  text: string;
}

export interface Suggestion {
  text: string;
  intensity: number;
  reward: number;
}

export interface AnalyzeResponse {
  intensity: number;
  band: Band | string;
  spans: SpanView[];
  suggestion: Suggestion | null;
  flag: string;
  latency_ms: number;
}

export interface HealthResponse {
  status: string;
  bundle_version: string;
}
