/**
 * Pure projection of controller state onto a renderable view, plus the DOM
 * applier. Band style, highlight ranges and the suggestion card are all
 * derived from the last service response; nothing is recomputed locally.
 */

import { bandClass, allBandClasses } from "./bands.js";
import { AnalyzeController } from "./controller.js";
import { projectSpans } from "./tokenizer.js";
import { Suggestion } from "./types.js";

export interface ViewState {
  bandClass: string;
  bandLabel: string;
  intensity: number | null;
  /** character ranges of span highlights in analyzedText */
  highlights: { start: number; end: number }[];
  /** the text the highlights refer to (the analyzed snapshot) */
  analyzedText: string;
  suggestion: Suggestion | null;
  flag: string;
  unavailable: boolean;
  pending: boolean;
}

export function viewStateOf(controller: AnalyzeController): ViewState {
  const response = controller.response;
  const analyzedText = controller.responseText ?? "";
  return {
    bandClass: response === null ? "band-neutral" : bandClass(response.band),
    bandLabel: response === null ? "—" : String(response.band),
    intensity: response === null ? null : response.intensity,
    highlights:
      response === null ? [] : projectSpans(analyzedText, response.spans),
    analyzedText,
    suggestion: controller.suggestion,
    flag: response === null ? "none" : response.flag,
    unavailable: controller.unavailable,
    pending: controller.pending,
  };
}

export interface Elements {
  badge: HTMLElement;
  intensity: HTMLElement;
  mirror: HTMLElement;
  card: HTMLElement;
  suggestionText: HTMLElement;
  suggestionIntensity: HTMLElement;
  banner: HTMLElement;
}

/** Render the analyzed snapshot with <mark> elements over span ranges. */
export function renderHighlights(
  target: HTMLElement,
  text: string,
  highlights: { start: number; end: number }[],
): void {
  target.textContent = "";
  let cursor = 0;
  for (const range of highlights) {
    if (range.start > cursor) {
      target.appendChild(
        document.createTextNode(text.slice(cursor, range.start)),
      );
    }
    const mark = document.createElement("mark");
    mark.className = "span-highlight";
    mark.textContent = text.slice(range.start, range.end);
    target.appendChild(mark);
    cursor = range.end;
  }
  if (cursor < text.length) {
    target.appendChild(document.createTextNode(text.slice(cursor)));
  }
}

export function applyViewState(view: ViewState, el: Elements): void {
  for (const cls of allBandClasses()) {
    el.badge.classList.remove(cls);
  }
  el.badge.classList.add(view.bandClass);
  el.badge.textContent = view.bandLabel.replace("_", " ");
  el.intensity.textContent =
    view.intensity === null ? "" : `intensity ${view.intensity.toFixed(1)}`;

  renderHighlights(el.mirror, view.analyzedText, view.highlights);

  if (view.suggestion === null) {
    el.card.hidden = true;
    el.suggestionText.textContent = "";
    el.suggestionIntensity.textContent = "";
  } else {
    el.card.hidden = false;
    el.suggestionText.textContent = view.suggestion.text;
    el.suggestionIntensity.textContent = `suggested rewrite scores ${view.suggestion.intensity.toFixed(1)}`;
  }

  el.banner.hidden = !view.unavailable;
}
