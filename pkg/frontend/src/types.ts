export const LANGUAGES = ["english", "hindi", "bengali", "tamil", "kannada"] as const;
export type LanguageName = (typeof LANGUAGES)[number];

export interface TransliterateResponse {
  output: string;
  words: string[];
  /** One English form per word; present only for Indic-to-Indic requests. */
  intermediate?: string[];
  decode_lengths: number[];
  flags: string[];
}

export interface PhoneticSummary {
  correct_sounding_count: number;
  total_count: number;
  phonetic_accuracy: number | null;
}

export interface HealthResponse {
  status: string;
  model: Record<string, number | string>;
}

export type Verdict = "correct" | "incorrect";

/** One row of a service-exported predictions file, before human judgement. */
export interface PendingPrediction {
  id: string;
  source_lang: LanguageName;
  target_lang: LanguageName;
  input: string;
  prediction: string;
}

export interface AnnotationRecord extends PendingPrediction {
  verdict: Verdict;
  reference: string | null;
  annotator: string | null;
}
