/**
 * Whitespace tokenizer identical to the service's corpus tokenizer, so span
 * token indices project onto the displayed text without drift. The
 * character class below is exactly the set Python's str.split() treats as
 * whitespace (note: U+FEFF and U+200B are NOT whitespace there, unlike
 * JavaScript's \\s).
 */

const WHITESPACE =
  /[\t\n\x0b\f\r \x1c-\x1f\x85\xa0\u1680\u2000-\u200a\u2028\u2029\u202f\u205f\u3000]/;

export interface TokenSpan {
  text: string;
  /** character offset of the first code unit */
  start: number;
  /** character offset one past the last code unit */
  end: number;
}

export function tokensWithOffsets(text: string): TokenSpan[] {
  const out: TokenSpan[] = [];
  let i = 0;
  while (i < text.length) {
    if (WHITESPACE.test(text[i])) {
      i += 1;
      continue;
    }
    let j = i;
    while (j < text.length && !WHITESPACE.test(text[j])) {
      j += 1;
    }
    out.push({ text: text.slice(i, j), start: i, end: j });
    i = j;
  }
  return out;
}

export function tokenize(text: string): string[] {
  return tokensWithOffsets(text).map((t) => t.text);
}

/**
 * Project inclusive token-index spans onto character ranges of the text
 * they were computed from. Out-of-range spans are dropped.
 */
export function projectSpans(
  text: string,
  spans: { start: number; end: number }[],
): { start: number; end: number }[] {
  const tokens = tokensWithOffsets(text);
  const ranges: { start: number; end: number }[] = [];
  for (const span of spans) {
    if (span.start < 0 || span.end >= tokens.length || span.start > span.end) {
      continue;
    }
    ranges.push({ start: tokens[span.start].start, end: tokens[span.end].end });
  }
  return ranges;
}
