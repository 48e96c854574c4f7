import { ApiClient, NetworkError } from "./api.js";
import type { AnnotationRecord, PendingPrediction, PhoneticSummary, Verdict } from "./types.js";

export type ItemStatus = "pending" | "submitted";

export interface QueueItem extends PendingPrediction {
  status: ItemStatus;
}

/**
 * The annotation workflow: a queue of model predictions loaded from a
 * service-exported JSONL file. Verdicts go straight to the service; when
 * the network is down they buffer locally and flush later. The
 * phonetic-accuracy tile always shows the service's own number, never a
 * locally computed one.
 */
export class AnnotationQueue {
  items: QueueItem[] = [];
  summary: PhoneticSummary | null = null;
  /** Verdicts recorded while offline, waiting for a flush. */
  buffered: AnnotationRecord[] = [];
  annotator: string | null = null;
  onChange: () => void = () => {};

  constructor(private api: ApiClient) {}

  loadFromJsonl(text: string): number {
    const items: QueueItem[] = [];
    for (const line of text.split("\n")) {
      if (!line.trim()) continue;
      const raw = JSON.parse(line);
      for (const field of ["id", "source_lang", "target_lang", "input", "prediction"]) {
        if (!(field in raw)) throw new Error(`prediction row is missing "${field}"`);
      }
      items.push({
        id: raw.id,
        source_lang: raw.source_lang,
        target_lang: raw.target_lang,
        input: raw.input,
        prediction: raw.prediction,
        status: "pending",
      });
    }
    this.items = items;
    this.onChange();
    return items.length;
  }

  get pendingCount(): number {
    return this.items.filter((i) => i.status === "pending").length;
  }

  /** Client-side guard: an incorrect verdict needs a corrected reference. */
  validate(verdict: Verdict, reference: string | null): string | null {
    if (verdict === "incorrect" && !(reference ?? "").trim()) {
      return "an incorrect verdict needs the corrected word";
    }
    return null;
  }

  async annotate(item: QueueItem, verdict: Verdict, reference: string | null = null): Promise<void> {
    const blocked = this.validate(verdict, reference);
    if (blocked) throw new Error(blocked);
    const record: AnnotationRecord = {
      id: item.id,
      source_lang: item.source_lang,
      target_lang: item.target_lang,
      input: item.input,
      prediction: item.prediction,
      verdict,
      reference: verdict === "incorrect" ? reference!.trim() : null,
      annotator: this.annotator,
    };
    try {
      await this.api.postAnnotations([record]);
    } catch (err) {
      if (err instanceof NetworkError) {
        this.buffered.push(record);
        item.status = "submitted";
        this.onChange();
        return;
      }
      throw err;
    }
    item.status = "submitted";
    await this.refreshSummary();
  }

  /** Push verdicts recorded while offline; keeps them on renewed failure. */
  async flushBuffered(): Promise<number> {
    if (this.buffered.length === 0) return 0;
    const batch = this.buffered;
    this.buffered = [];
    try {
      await this.api.postAnnotations(batch);
    } catch (err) {
      this.buffered = batch;
      throw err;
    }
    await this.refreshSummary();
    return batch.length;
  }

  async refreshSummary(): Promise<PhoneticSummary> {
    this.summary = await this.api.phoneticSummary();
    this.onChange();
    return this.summary;
  }
}
