import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError, NetworkError } from "../src/api.js";
import { Playground } from "../src/playground.js";
import type { TransliterateResponse } from "../src/types.js";

const RESULT: TransliterateResponse = {
  output: "ಕತ",
  words: ["ಕತ"],
  intermediate: ["KT"],
  decode_lengths: [2],
  flags: [],
};

function apiStub(overrides: Partial<ApiClient> = {}): ApiClient {
  return { transliterate: vi.fn().mockResolvedValue(RESULT), ...overrides } as unknown as ApiClient;
}

describe("Playground", () => {
  it("blocks submission when source and target match", () => {
    const playground = new Playground(apiStub());
    playground.setText("KT");
    playground.setLanguage("target", "english");
    expect(playground.canSubmit).toBe(false);
  });

  it("blocks submission of empty text", () => {
    const playground = new Playground(apiStub());
    playground.setText("   ");
    expect(playground.canSubmit).toBe(false);
  });

  it("clears the previous result when a language changes", async () => {
    const playground = new Playground(apiStub());
    playground.setText("KT");
    await playground.submit();
    expect(playground.state.result).not.toBeNull();
    playground.setLanguage("target", "kannada");
    expect(playground.state.result).toBeNull();
    expect(playground.state.status).toBe("idle");
  });

  it("keeps the intermediate English form in the result", async () => {
    const playground = new Playground(apiStub());
    playground.setText("कत");
    playground.setLanguage("source", "hindi");
    playground.setLanguage("target", "kannada");
    await playground.submit();
    expect(playground.state.result?.intermediate).toEqual(["KT"]);
  });

  it("warns before submission when the script does not match", () => {
    const playground = new Playground(apiStub());
    playground.setText("कत");
    expect(playground.scriptWarning).toContain("english");
    playground.setLanguage("source", "hindi");
    expect(playground.scriptWarning).toBeNull();
  });

  it("renders service 4xx errors without a retry affordance", async () => {
    const api = apiStub({
      transliterate: vi.fn().mockRejectedValue(new ApiError(422, "character '7' is not in the english script")),
    });
    const playground = new Playground(api);
    playground.setText("K7");
    await playground.submit();
    expect(playground.state.status).toBe("error");
    expect(playground.state.error).toContain("'7'");
    expect(playground.state.retryable).toBe(false);
  });

  it("offers a retry after a network failure", async () => {
    const transliterate = vi
      .fn()
      .mockRejectedValueOnce(new NetworkError("down"))
      .mockResolvedValueOnce(RESULT);
    const playground = new Playground(apiStub({ transliterate }));
    playground.setText("KT");
    await playground.submit();
    expect(playground.state.retryable).toBe(true);
    await playground.retry();
    expect(playground.state.status).toBe("done");
    expect(playground.state.result?.output).toBe("ಕತ");
  });

  it("notifies subscribers on every state change", async () => {
    const seen: string[] = [];
    const playground = new Playground(apiStub(), (state) => seen.push(state.status));
    playground.setText("KT");
    await playground.submit();
    expect(seen).toContain("loading");
    expect(seen[seen.length - 1]).toBe("done");
  });
});
