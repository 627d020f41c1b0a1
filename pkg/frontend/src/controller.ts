/**
 * View-model for the live editor: debounced analysis with at most one
 * in-flight request, stale-response discarding, and the accept/dismiss
 * suggestion loop. All business values (band, spans, suggestion) come
 * verbatim from the service response; this file only sequences requests.
 */

import { AnalyzeResponse } from "./types.js";

export type AnalyzeFn = (text: string) => Promise<AnalyzeResponse>;

export interface ControllerOptions {
  analyze: AnalyzeFn;
  debounceMs?: number;
  onUpdate?: () => void;
}

const DEFAULT_DEBOUNCE_MS = 400;

export class AnalyzeController {
  readonly debounceMs: number;

  private readonly analyzeFn: AnalyzeFn;
  private readonly onUpdate: () => void;

  private currentText = "";
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private rerunAfterFlight = false;

  /** last applied response and the exact input it was computed for */
  response: AnalyzeResponse | null = null;
  responseText: string | null = null;
  /** service unreachable or not ready */
  unavailable = false;
  private dismissedResponse: AnalyzeResponse | null = null;

  constructor(options: ControllerOptions) {
    this.analyzeFn = options.analyze;
    this.debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.onUpdate = options.onUpdate ?? (() => {});
  }

  get text(): string {
    return this.currentText;
  }

  get pending(): boolean {
    return this.inFlight || this.timer !== null;
  }

  /** Suggestion to show: present on the latest response and not dismissed. */
  get suggestion() {
    if (this.response === null || this.response.suggestion === null) {
      return null;
    }
    if (this.response === this.dismissedResponse) {
      return null;
    }
    return this.response.suggestion;
  }

  /** One keystroke (or any programmatic edit): restarts the debounce window. */
  setText(text: string): void {
    this.currentText = text;
    this.schedule();
    this.onUpdate();
  }

  /** Replace the editor with the suggested text; exactly one new cycle. */
  acceptSuggestion(): void {
    const suggestion = this.suggestion;
    if (suggestion === null) {
      return;
    }
    this.setText(suggestion.text);
  }

  /** Hide the card until a distinct response arrives. */
  dismissSuggestion(): void {
    this.dismissedResponse = this.response;
    this.onUpdate();
  }

  private schedule(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.fire();
    }, this.debounceMs);
  }

  private async fire(): Promise<void> {
    if (this.inFlight) {
      // single in-flight request: remember to run again when it settles
      this.rerunAfterFlight = true;
      return;
    }
    const snapshot = this.currentText;
    this.inFlight = true;
    try {
      const response = await this.analyzeFn(snapshot);
      if (snapshot === this.currentText) {
        this.response = response;
        this.responseText = snapshot;
        this.unavailable = false;
      }
      // a response for superseded input is discarded entirely
    } catch {
      this.unavailable = true;
    } finally {
      this.inFlight = false;
      const stale = this.currentText !== snapshot;
      if (this.rerunAfterFlight || stale) {
        this.rerunAfterFlight = false;
        if (this.timer === null) {
          this.schedule();
        }
      }
      this.onUpdate();
    }
  }
}
