/** Band-to-style mapping. Unknown bands fall back to a neutral style. */

const BAND_CLASSES: Record<string, string> = {
  no_hate: "band-no-hate",
  low: "band-low",
  mild: "band-mild",
  extreme: "band-extreme",
};

export const NEUTRAL_BAND_CLASS = "band-neutral";

export function bandClass(band: string): string {
  const cls = BAND_CLASSES[band];
  if (cls === undefined) {
    console.warn(`unknown band value: ${band}`);
    return NEUTRAL_BAND_CLASS;
  }
  return cls;
}

export function allBandClasses(): string[] {
  return [...Object.values(BAND_CLASSES), NEUTRAL_BAND_CLASS];
}
