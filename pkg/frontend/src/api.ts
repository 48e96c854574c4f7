import type {
  AnnotationRecord,
  HealthResponse,
  LanguageName,
  PhoneticSummary,
  TransliterateResponse,
} from "./types.js";

/** A 4xx/5xx answer from the service; the detail is rendered inline. */
export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

/** The request never reached the service; callers offer a retry. */
export class NetworkError extends Error {}

async function parseDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return `${response.status} ${response.statusText}`;
  }
}

/** Thin JSON client for the transliteration service; no state, no math. */
export class ApiClient {
  constructor(readonly baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch (cause) {
      throw new NetworkError(`cannot reach ${this.baseUrl}: ${cause}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await parseDetail(response));
    }
    return (await response.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/health");
  }

  transliterate(text: string, sourceLang: LanguageName, targetLang: LanguageName): Promise<TransliterateResponse> {
    return this.request<TransliterateResponse>("/transliterate", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ text, source_lang: sourceLang, target_lang: targetLang }),
    });
  }

  postAnnotations(records: AnnotationRecord[]): Promise<{ accepted: number }> {
    return this.request<{ accepted: number }>("/annotations", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(records),
    });
  }

  phoneticSummary(): Promise<PhoneticSummary> {
    return this.request<PhoneticSummary>("/metrics/phonetic");
  }
}
