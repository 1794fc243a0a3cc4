/**
 * Application bootstrap: register the annotator, then loop through tasks.
 *
 * The server is the source of truth; a refresh simply asks for the next
 * unanswered task again, so no submission is ever lost client-side.
 */

import { AnnotationClient, ApiRequestError } from "./api.js";
import { SubmissionPayload, TaskKind } from "./types.js";
import { viewForTask } from "./views.js";

const KIND_FILTERS: (TaskKind | "")[] = [
  "", "punchline-check", "pairwise-explanation", "generation-judgment",
];

function statusBar(): HTMLElement {
  const bar = document.createElement("div");
  bar.className = "status-bar";
  return bar;
}

async function refreshProgress(client: AnnotationClient, bar: HTMLElement): Promise<void> {
  try {
    const progress = await client.progress();
    const parts = Object.entries(progress.kinds).map(
      ([kind, info]) => `${kind}: ${info.complete}/${info.tasks} complete`);
    bar.textContent = parts.join("  |  ");
  } catch {
    bar.textContent = "progress unavailable";
  }
}

export async function runApp(root: HTMLElement, client: AnnotationClient,
                             annotatorId: string, kind?: TaskKind): Promise<void> {
  await client.register(annotatorId);
  const bar = statusBar();
  root.appendChild(bar);
  const host = document.createElement("div");
  host.className = "task-host";
  root.appendChild(host);

  const loadNext = async (): Promise<void> => {
    host.textContent = "";
    await refreshProgress(client, bar);
    const task = await client.nextTask(annotatorId, kind);
    if (task === null) {
      host.appendChild(Object.assign(document.createElement("p"),
                                     { textContent: "All tasks done. Thank you!" }));
      return;
    }
    const view = viewForTask(task);
    host.appendChild(view.element);
    const submit = document.createElement("button");
    submit.textContent = "Submit (Enter)";
    submit.className = "submit";
    const error = document.createElement("p");
    error.className = "submit-error";
    host.appendChild(submit);
    host.appendChild(error);

    const onSubmit = async (): Promise<void> => {
      const payload = view.trySubmit();
      if (payload === null) return; // view shows its own inline message
      try {
        await client.submit(task.task_id, annotatorId, payload as SubmissionPayload);
        window.removeEventListener("keydown", onKey);
        await loadNext();
      } catch (err) {
        // keep the filled form; surface the server error
        error.textContent = err instanceof ApiRequestError
          ? `${err.code}: ${err.message}`
          : "network error; your answers are still here, try again";
      }
    };
    const onKey = (event: KeyboardEvent): void => {
      if (event.key === "Enter") {
        void onSubmit();
        return;
      }
      view.handleKey(event.key);
    };
    submit.addEventListener("click", () => void onSubmit());
    window.addEventListener("keydown", onKey);
  };

  await loadNext();
}

function boot(): void {
  const root = document.getElementById("app");
  if (root === null) return;
  const params = new URLSearchParams(window.location.search);
  const annotator = params.get("annotator")
    ?? window.prompt("Annotator id?")?.trim();
  if (!annotator) {
    root.textContent = "No annotator id given; reload to try again.";
    return;
  }
  const kindParam = params.get("kind") ?? "";
  const kind = KIND_FILTERS.includes(kindParam as TaskKind | "") && kindParam !== ""
    ? (kindParam as TaskKind)
    : undefined;
  const client = new AnnotationClient("");
  void runApp(root, client, annotator, kind);
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
