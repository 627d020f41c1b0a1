/** Page wiring: editor events in, view state out. */

import { analyze, health } from "./client.js";
import { AnalyzeController } from "./controller.js";
import { applyViewState, Elements, viewStateOf } from "./render.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

export function boot(): AnalyzeController {
  const editor = el("editor") as HTMLTextAreaElement;
  const elements: Elements = {
    badge: el("band-badge"),
    intensity: el("intensity"),
    mirror: el("mirror"),
    card: el("suggestion-card"),
    suggestionText: el("suggestion-text"),
    suggestionIntensity: el("suggestion-intensity"),
    banner: el("banner"),
  };

  const controller = new AnalyzeController({
    analyze,
    onUpdate: () => {
      applyViewState(viewStateOf(controller), elements);
      if (editor.value !== controller.text) {
        editor.value = controller.text;
      }
    },
  });

  editor.addEventListener("input", () => controller.setText(editor.value));
  el("accept").addEventListener("click", () => controller.acceptSuggestion());
  el("dismiss").addEventListener("click", () => controller.dismissSuggestion());

  health().catch(() => {
    elements.banner.hidden = false;
  });
  return controller;
}

if (typeof document !== "undefined" && document.getElementById("editor")) {
  boot();
}
