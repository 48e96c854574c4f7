import { ApiClient, ApiError, NetworkError } from "./api.js";
import { firstForeignChar } from "./scripts.js";
import type { LanguageName, TransliterateResponse } from "./types.js";

export type RequestStatus = "idle" | "loading" | "done" | "error";

export interface PlaygroundState {
  text: string;
  sourceLang: LanguageName;
  targetLang: LanguageName;
  status: RequestStatus;
  result: TransliterateResponse | null;
  error: string | null;
  /** Network failures are retryable; service 4xx answers are not. */
  retryable: boolean;
}

/**
 * Playground logic, DOM-free. Submission is blocked while source and
 * target match; changing either language clears the previous result.
 */
export class Playground {
  state: PlaygroundState = {
    text: "",
    sourceLang: "english",
    targetLang: "hindi",
    status: "idle",
    result: null,
    error: null,
    retryable: false,
  };

  constructor(
    private api: ApiClient,
    private onChange: (state: PlaygroundState) => void = () => {},
  ) {}

  private emit() {
    this.onChange(this.state);
  }

  setText(text: string) {
    this.state.text = text;
    this.emit();
  }

  setLanguage(which: "source" | "target", lang: LanguageName) {
    if (which === "source") this.state.sourceLang = lang;
    else this.state.targetLang = lang;
    this.state.result = null;
    this.state.error = null;
    this.state.status = "idle";
    this.emit();
  }

  get canSubmit(): boolean {
    return this.state.sourceLang !== this.state.targetLang && this.state.text.trim().length > 0;
  }

  /** Pre-submission script warning; the service still decides. */
  get scriptWarning(): string | null {
    const bad = firstForeignChar(this.state.text, this.state.sourceLang);
    return bad === null ? null : `"${bad}" is not a ${this.state.sourceLang} character`;
  }

  async submit(): Promise<void> {
    if (!this.canSubmit) return;
    this.state.status = "loading";
    this.state.error = null;
    this.emit();
    try {
      this.state.result = await this.api.transliterate(
        this.state.text.trim(),
        this.state.sourceLang,
        this.state.targetLang,
      );
      this.state.status = "done";
      this.state.retryable = false;
    } catch (err) {
      this.state.result = null;
      this.state.status = "error";
      this.state.retryable = err instanceof NetworkError;
      this.state.error = err instanceof ApiError || err instanceof NetworkError ? err.message : String(err);
    }
    this.emit();
  }

  retry(): Promise<void> {
    return this.submit();
  }
}
