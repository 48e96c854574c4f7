import type { LanguageName } from "./types.js";

// Display-side early warning only: the service revalidates and is the
// source of truth. Latin covers both cases since input is upper-cased
// server-side.
const RANGES: Record<LanguageName, Array<[number, number]>> = {
  english: [
    [0x41, 0x5a],
    [0x61, 0x7a],
  ],
  hindi: [[0x0900, 0x097f]],
  bengali: [[0x0980, 0x09ff]],
  tamil: [[0x0b80, 0x0bff]],
  kannada: [[0x0c80, 0x0cff]],
};

/** First character of `text` (whitespace aside) outside the language's script. */
export function firstForeignChar(text: string, lang: LanguageName): string | null {
  for (const ch of text) {
    if (/\s/.test(ch)) continue;
    const code = ch.codePointAt(0)!;
    if (!RANGES[lang].some(([lo, hi]) => code >= lo && code <= hi)) {
      return ch;
    }
  }
  return null;
}
