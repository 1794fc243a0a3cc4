/**
 * DOM rendering for the three annotation views.
 *
 * The views hold no evaluation logic: they collect inputs into the form
 * objects from state.ts and enable submission only once a form is complete.
 * Explanations arrive pre-blinded from the server (no human/model labels).
 */

import {
  GenerationForm,
  PairwiseForm,
  PUNCHLINE_FLAGS,
  PunchlineForm,
} from "./state.js";
import { AnnotationTask, ERROR_LABELS, PairwiseWinner } from "./types.js";

export interface ViewHandle {
  element: HTMLElement;
  /** Returns the payload if the form is complete, otherwise shows the
   * inline message and returns null. */
  trySubmit(): unknown | null;
  handleKey(key: string): void;
}

const FLAG_LABELS: Record<(typeof PUNCHLINE_FLAGS)[number], string> = {
  pun_word: "Pun word mentioned",
  alt_word: "Alternative word mentioned",
  pun_sense: "Pun meaning explained",
  alt_sense: "Alternative meaning explained",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function field(label: string, value: string): HTMLElement {
  const wrap = el("div", "field");
  wrap.appendChild(el("span", "field-label", label));
  wrap.appendChild(el("span", "field-value", value));
  return wrap;
}

function inlineMessage(): HTMLElement {
  return el("p", "inline-message");
}

function yesNoControl(onPick: (value: boolean) => void): HTMLElement {
  const wrap = el("span", "yes-no");
  for (const [label, value] of [["yes", true], ["no", false]] as const) {
    const button = el("button", "choice", label);
    button.type = "button";
    button.addEventListener("click", () => {
      wrap.querySelectorAll("button").forEach((b) => b.classList.remove("picked"));
      button.classList.add("picked");
      onPick(value);
    });
    wrap.appendChild(button);
  }
  return wrap;
}

export function punchlineView(task: AnnotationTask): ViewHandle & { form: PunchlineForm } {
  const form = new PunchlineForm();
  const root = el("section", "view punchline-view");
  const payload = task.payload as Record<string, string>;
  root.appendChild(el("h2", undefined, "Punchline check"));
  root.appendChild(field("Pun text", payload.pun_text));
  root.appendChild(field("Pun word", payload.pun_word));
  root.appendChild(field("Alternative word", payload.alt_word));
  root.appendChild(field("Pun meaning", payload.pun_sense));
  root.appendChild(field("Alternative meaning", payload.alt_sense));
  root.appendChild(field("Explanation under audit", payload.explanation));
  const message = inlineMessage();
  const rows = el("div", "flag-rows");
  PUNCHLINE_FLAGS.forEach((flag, index) => {
    const row = el("div", "flag-row");
    row.appendChild(el("span", "flag-label", `${index + 1}. ${FLAG_LABELS[flag]}`));
    row.appendChild(yesNoControl((value) => form.setFlag(flag, value)));
    rows.appendChild(row);
  });
  root.appendChild(rows);
  root.appendChild(message);
  return {
    element: root,
    form,
    trySubmit() {
      if (!form.isComplete()) {
        message.textContent =
          `Set every flag before submitting (missing: ${form.missingFlags().join(", ")}).`;
        return null;
      }
      message.textContent = "";
      return form.buildPayload();
    },
    handleKey(key: string) {
      const index = Number.parseInt(key, 10) - 1;
      if (index >= 0 && index < PUNCHLINE_FLAGS.length) form.toggleFlag(index);
    },
  };
}

export function pairwiseView(task: AnnotationTask): ViewHandle & { form: PairwiseForm } {
  const form = new PairwiseForm();
  const root = el("section", "view pairwise-view");
  const payload = task.payload as Record<string, string>;
  root.appendChild(el("h2", undefined, "Which explanation is better?"));
  root.appendChild(field("Pun text", payload.pun_text));
  root.appendChild(field("Gold meaning 1", `${payload.pun_word} <${payload.pun_sense}>`));
  root.appendChild(field("Gold meaning 2", `${payload.alt_word} <${payload.alt_sense}>`));
  const columns = el("div", "explanations");
  columns.appendChild(field("Explanation 1", payload.explanation_1));
  columns.appendChild(field("Explanation 2", payload.explanation_2));
  root.appendChild(columns);
  const message = inlineMessage();
  const choices: [string, PairwiseWinner][] = [
    ["Explanation 1 is better", "first"],
    ["Explanation 2 is better", "second"],
    ["Not sure / tie", "tie"],
  ];
  const buttons = el("div", "winner-buttons");
  for (const [label, winner] of choices) {
    const button = el("button", "choice", label);
    button.type = "button";
    button.addEventListener("click", () => {
      buttons.querySelectorAll("button").forEach((b) => b.classList.remove("picked"));
      button.classList.add("picked");
      form.choose(winner);
    });
    buttons.appendChild(button);
  }
  root.appendChild(buttons);
  root.appendChild(message);
  return {
    element: root,
    form,
    trySubmit() {
      if (!form.isComplete()) {
        message.textContent = "Pick a winner (or the tie option) first.";
        return null;
      }
      message.textContent = "";
      return form.buildPayload();
    },
    handleKey(key: string) {
      if (key === "1") form.choose("first");
      else if (key === "2") form.choose("second");
      else if (key === "3") form.choose("tie");
    },
  };
}

export function generationView(task: AnnotationTask): ViewHandle & { form: GenerationForm } {
  const form = new GenerationForm();
  const root = el("section", "view generation-view");
  const payload = task.payload as Record<string, string>;
  root.appendChild(el("h2", undefined, "Judge the generated text"));
  root.appendChild(field("Sentence", payload.sentence));
  root.appendChild(field("Pun word", payload.pun_word));
  root.appendChild(field("Alternative word", payload.alt_word));
  root.appendChild(field("Meaning 1", payload.pun_sense));
  root.appendChild(field("Meaning 2", payload.alt_sense));

  const successRow = el("div", "flag-row");
  successRow.appendChild(el("span", "flag-label", "Successful pun?"));
  successRow.appendChild(yesNoControl((value) => form.setSuccess(value)));
  root.appendChild(successRow);

  const funninessRow = el("div", "flag-row");
  funninessRow.appendChild(el("span", "flag-label", "Funniness (1-5, rate every text)"));
  const scale = el("span", "funniness-scale");
  for (let value = 1; value <= 5; value += 1) {
    const button = el("button", "choice", String(value));
    button.type = "button";
    button.addEventListener("click", () => {
      scale.querySelectorAll("button").forEach((b) => b.classList.remove("picked"));
      button.classList.add("picked");
      form.setFunniness(value);
    });
    scale.appendChild(button);
  }
  funninessRow.appendChild(scale);
  root.appendChild(funninessRow);

  const labelRow = el("div", "flag-row");
  labelRow.appendChild(el("span", "flag-label", "Error type (optional)"));
  const select = el("select", "error-label") as HTMLSelectElement;
  select.appendChild(el("option", undefined, ""));
  for (const label of ERROR_LABELS) {
    const option = el("option", undefined, label) as HTMLOptionElement;
    option.value = label;
    select.appendChild(option);
  }
  select.addEventListener("change", () => form.setErrorLabel(select.value || undefined));
  labelRow.appendChild(select);
  root.appendChild(labelRow);

  const message = inlineMessage();
  root.appendChild(message);
  return {
    element: root,
    form,
    trySubmit() {
      if (!form.isComplete()) {
        message.textContent = "Both the success flag and a funniness rating are required.";
        return null;
      }
      message.textContent = "";
      return form.buildPayload();
    },
    handleKey(key: string) {
      const value = Number.parseInt(key, 10);
      if (value >= 1 && value <= 5) form.setFunniness(value);
    },
  };
}

export function viewForTask(task: AnnotationTask): ViewHandle {
  switch (task.kind) {
    case "punchline-check":
      return punchlineView(task);
    case "pairwise-explanation":
      return pairwiseView(task);
    case "generation-judgment":
      return generationView(task);
    default:
      throw new Error(`no view for task kind ${(task as AnnotationTask).kind}`);
  }
}
