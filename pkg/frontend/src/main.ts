import { ApiClient } from "./api.js";
import { mountAnnotations, mountPlayground } from "./ui.js";

const DEFAULT_BASE = "http://127.0.0.1:8000";

function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? DEFAULT_BASE;
}

function main() {
  const api = new ApiClient(baseUrl());
  const playgroundRoot = document.getElementById("playground");
  const annotationRoot = document.getElementById("annotation");
  const banner = document.getElementById("service-banner");
  if (!playgroundRoot || !annotationRoot || !banner) {
    throw new Error("console markup is missing its mount points");
  }

  banner.textContent = `service: ${api.baseUrl}`;
  api
    .health()
    .then((health) => {
      banner.textContent = `service: ${api.baseUrl} (${health.model.mode}, ${health.model.steps} steps)`;
    })
    .catch(() => {
      banner.textContent = `service unreachable at ${api.baseUrl} — pass ?api=http://host:port`;
    });

  mountPlayground(playgroundRoot, api);
  mountAnnotations(annotationRoot, api);
}

main();
