/** Debounce, staleness, single-flight, and the accept/dismiss loop. */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { AnalyzeController } from "../src/controller.js";
import { AnalyzeResponse } from "../src/types.js";

function makeResponse(partial: Partial<AnalyzeResponse> = {}): AnalyzeResponse {
  return {
    intensity: 2.0,
    band: "low",
    spans: [],
    suggestion: null,
    flag: "none",
    latency_ms: 5,
    ...partial,
  };
}

describe("AnalyzeController", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });
  afterEach(() => {
    vi.useRealTimers();
  });

  it("emits exactly one request for a 20-keystroke burst inside the window", async () => {
    const calls: string[] = [];
    const controller = new AnalyzeController({
      analyze: async (text) => {
        calls.push(text);
        return makeResponse();
      },
    });
    let text = "";
    for (let i = 0; i < 20; i++) {
      text += "x";
      controller.setText(text);
      vi.advanceTimersByTime(10); // all well inside the 400 ms window
    }
    expect(calls).toHaveLength(0); // still debouncing
    await vi.advanceTimersByTimeAsync(400);
    expect(calls).toEqual(["xxxxxxxxxxxxxxxxxxxx"]);
  });

  it("fires again for a second burst in a later window", async () => {
    const calls: string[] = [];
    const controller = new AnalyzeController({
      analyze: async (text) => {
        calls.push(text);
        return makeResponse();
      },
    });
    controller.setText("first");
    await vi.advanceTimersByTimeAsync(400);
    controller.setText("second");
    await vi.advanceTimersByTimeAsync(400);
    expect(calls).toEqual(["first", "second"]);
  });

  it("discards responses for superseded input", async () => {
    let release: (value: AnalyzeResponse) => void = () => {};
    const slowFirst = new Promise<AnalyzeResponse>((resolve) => {
      release = resolve;
    });
    const responses = [slowFirst, Promise.resolve(makeResponse({ intensity: 9 }))];
    const controller = new AnalyzeController({
      analyze: () => responses.shift()!,
    });
    controller.setText("old text");
    await vi.advanceTimersByTimeAsync(400); // request 1 in flight, unresolved
    controller.setText("new text");
    release(makeResponse({ intensity: 1 })); // stale response arrives
    await vi.advanceTimersByTimeAsync(0);
    expect(controller.response).toBeNull(); // discarded
    await vi.advanceTimersByTimeAsync(400); // debounced rerun for new text
    expect(controller.response?.intensity).toBe(9);
    expect(controller.responseText).toBe("new text");
  });

  it("keeps at most one request in flight", async () => {
    let inFlight = 0;
    let peak = 0;
    const controller = new AnalyzeController({
      analyze: async (text) => {
        inFlight += 1;
        peak = Math.max(peak, inFlight);
        await new Promise((resolve) => setTimeout(resolve, 1000));
        inFlight -= 1;
        return makeResponse();
      },
    });
    controller.setText("a");
    await vi.advanceTimersByTimeAsync(400); // request 1 starts, takes 1 s
    controller.setText("ab");
    await vi.advanceTimersByTimeAsync(400); // window elapses while 1 in flight
    controller.setText("abc");
    await vi.advanceTimersByTimeAsync(2500); // everything settles
    expect(peak).toBe(1);
    expect(controller.responseText).toBe("abc");
  });

  it("flags unavailability on failure and recovers on success", async () => {
    let fail = true;
    const controller = new AnalyzeController({
      analyze: async () => {
        if (fail) {
          throw new Error("503");
        }
        return makeResponse();
      },
    });
    controller.setText("hello");
    await vi.advanceTimersByTimeAsync(400);
    expect(controller.unavailable).toBe(true);
    expect(controller.text).toBe("hello"); // editor state untouched
    fail = false;
    controller.setText("hello again");
    await vi.advanceTimersByTimeAsync(400);
    expect(controller.unavailable).toBe(false);
  });

  it("accept replaces the text and triggers exactly one re-analysis", async () => {
    const calls: string[] = [];
    const suggestion = { text: "softer words", intensity: 2.0, reward: 3.0 };
    const controller = new AnalyzeController({
      analyze: async (text) => {
        calls.push(text);
        return text === "harsh words"
          ? makeResponse({ band: "extreme", intensity: 8, suggestion,
                           spans: [{ start: 0, end: 1, text: "harsh words" }] })
          : makeResponse({ band: "low", intensity: 2 });
      },
    });
    controller.setText("harsh words");
    await vi.advanceTimersByTimeAsync(400);
    expect(controller.suggestion).toEqual(suggestion);

    controller.acceptSuggestion();
    expect(controller.text).toBe("softer words");
    await vi.advanceTimersByTimeAsync(400);
    expect(calls).toEqual(["harsh words", "softer words"]);
    expect(controller.response?.band).toBe("low"); // reduced after accept
    expect(controller.suggestion).toBeNull();
  });

  it("dismiss hides the card until a distinct response arrives", async () => {
    const suggestion = { text: "calmer", intensity: 2.0, reward: 3.0 };
    const controller = new AnalyzeController({
      analyze: async (text) =>
        makeResponse({
          intensity: 8,
          band: "extreme",
          spans: [{ start: 0, end: 0, text }],
          suggestion,
        }),
    });
    controller.setText("grr");
    await vi.advanceTimersByTimeAsync(400);
    expect(controller.suggestion).toEqual(suggestion);
    controller.dismissSuggestion();
    expect(controller.suggestion).toBeNull();
    expect(controller.text).toBe("grr"); // editor unchanged
    controller.setText("grr!");
    await vi.advanceTimersByTimeAsync(400);
    expect(controller.suggestion).toEqual(suggestion); // new response, card back
  });

  it("accept with no suggestion is a no-op", () => {
    const controller = new AnalyzeController({
      analyze: async () => makeResponse(),
    });
    controller.setText("plain");
    controller.acceptSuggestion();
    expect(controller.text).toBe("plain");
  });
});
