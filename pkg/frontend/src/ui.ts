import { ApiClient } from "./api.js";
import { Playground } from "./playground.js";
import { AnnotationQueue, QueueItem } from "./queue.js";
import { LANGUAGES, LanguageName, Verdict } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

function languageSelect(id: string, selected: LanguageName): HTMLSelectElement {
  const select = el("select", { id });
  for (const lang of LANGUAGES) {
    const option = el("option", { value: lang }, lang);
    if (lang === selected) option.selected = true;
    select.append(option);
  }
  return select;
}

export function mountPlayground(root: HTMLElement, api: ApiClient): Playground {
  const sourceSelect = languageSelect("source-lang", "english");
  const targetSelect = languageSelect("target-lang", "hindi");
  const input = el("input", { id: "playground-text", placeholder: "word or sentence", autocomplete: "off" });
  const submit = el("button", { id: "playground-submit" }, "Transliterate");
  const warning = el("p", { class: "warning", id: "playground-warning" });
  const output = el("div", { class: "result", id: "playground-result" });

  const playground = new Playground(api, (state) => {
    submit.disabled = !playground.canSubmit || state.status === "loading";
    warning.textContent = playground.scriptWarning ?? "";
    output.replaceChildren();
    if (state.status === "loading") {
      output.append(el("p", { class: "muted" }, "transliterating..."));
    } else if (state.status === "error" && state.error) {
      output.append(el("p", { class: "error" }, state.error));
      if (state.retryable) {
        const retry = el("button", {}, "Retry");
        retry.addEventListener("click", () => void playground.retry());
        output.append(retry);
      }
    } else if (state.result) {
      output.append(el("p", { class: "output", id: "playground-output" }, state.result.output));
      if (state.result.intermediate) {
        output.append(
          el(
            "p",
            { class: "intermediate", id: "playground-intermediate" },
            `via English: ${state.result.intermediate.join(" ")}`,
          ),
        );
      }
      for (const flag of state.result.flags) output.append(el("p", { class: "flag" }, flag));
    }
  });

  input.addEventListener("input", () => playground.setText(input.value));
  sourceSelect.addEventListener("change", () => playground.setLanguage("source", sourceSelect.value as LanguageName));
  targetSelect.addEventListener("change", () => playground.setLanguage("target", targetSelect.value as LanguageName));
  submit.addEventListener("click", () => void playground.submit());

  root.append(
    el("h2", {}, "Playground"),
    el("div", { class: "row" }, el("label", {}, "from "), sourceSelect, el("label", {}, " to "), targetSelect),
    el("div", { class: "row" }, input, submit),
    warning,
    output,
  );
  playground.setText("");
  return playground;
}

function renderTile(tile: HTMLElement, queue: AnnotationQueue): void {
  const s = queue.summary;
  const value = s && s.phonetic_accuracy !== null ? s.phonetic_accuracy.toFixed(3) : "—";
  const counts = s ? `${s.correct_sounding_count} / ${s.total_count}` : "no annotations yet";
  tile.replaceChildren(
    el("span", { class: "tile-value", id: "phonetic-value" }, value),
    el("span", { class: "tile-label" }, `phonetic accuracy (${counts})`),
  );
}

export function mountAnnotations(root: HTMLElement, api: ApiClient): AnnotationQueue {
  const queue = new AnnotationQueue(api);
  const tile = el("div", { class: "tile", id: "phonetic-tile" });
  renderTile(tile, queue);
  queue.onChange = () => renderTile(tile, queue);
  const list = el("div", { id: "queue-list" });
  const status = el("p", { class: "muted", id: "queue-status" }, "load a predictions file to start");

  const renderItem = (item: QueueItem): HTMLElement => {
    const reference = el("input", { placeholder: "corrected word (required when incorrect)" });
    const problem = el("span", { class: "error" });
    const row = el(
      "div",
      { class: `queue-item ${item.status}` },
      el("span", { class: "pair" }, `${item.source_lang} -> ${item.target_lang}`),
      el("span", { class: "word" }, item.input),
      el("span", { class: "word prediction" }, item.prediction),
    );
    const act = (verdict: Verdict) => async () => {
      const blocked = queue.validate(verdict, reference.value);
      if (blocked) {
        problem.textContent = blocked;
        return;
      }
      problem.textContent = "";
      try {
        await queue.annotate(item, verdict, reference.value || null);
      } catch (err) {
        problem.textContent = String(err instanceof Error ? err.message : err);
        return;
      }
      render();
    };
    const correct = el("button", { class: "ok" }, "correct");
    correct.addEventListener("click", () => void act("correct")());
    const incorrect = el("button", { class: "bad" }, "incorrect");
    incorrect.addEventListener("click", () => void act("incorrect")());
    if (item.status === "pending") {
      row.append(correct, incorrect, reference, problem);
    } else {
      row.append(el("span", { class: "muted" }, "submitted"));
    }
    return row;
  };

  const render = () => {
    list.replaceChildren(...queue.items.map(renderItem));
    status.textContent = queue.items.length
      ? `${queue.pendingCount} of ${queue.items.length} pending` +
        (queue.buffered.length ? `; ${queue.buffered.length} buffered offline` : "")
      : "load a predictions file to start";
  };

  const file = el("input", { type: "file", accept: ".jsonl,.json", id: "queue-file" });
  file.addEventListener("change", async () => {
    const chosen = file.files?.[0];
    if (!chosen) return;
    try {
      queue.loadFromJsonl(await chosen.text());
      await queue.refreshSummary();
    } catch (err) {
      status.textContent = `cannot load file: ${err instanceof Error ? err.message : err}`;
      return;
    }
    render();
  });

  const flush = el("button", {}, "Flush buffered");
  flush.addEventListener("click", async () => {
    try {
      await queue.flushBuffered();
    } catch {
      // still offline; the counter keeps showing the buffer
    }
    render();
  });

  const annotator = el("input", { placeholder: "annotator name", id: "annotator" });
  annotator.addEventListener("input", () => {
    queue.annotator = annotator.value || null;
  });

  root.append(
    el("h2", {}, "Annotation"),
    tile,
    el("div", { class: "row" }, file, annotator, flush),
    status,
    list,
  );
  void queue.refreshSummary().catch(() => {});
  return queue;
}
