/**
 * Form state for the three annotation views.
 *
 * The rule enforced everywhere: a submission payload can only be built when
 * every required input is set. The server validates again; these classes
 * exist so the UI can disable the submit control and so a headless client
 * can build byte-identical payloads.
 */

import {
  ERROR_LABELS,
  ErrorLabel,
  GenerationPayload,
  PairwisePayload,
  PairwiseWinner,
  PunchlinePayload,
} from "./types.js";

export const PUNCHLINE_FLAGS = ["pun_word", "alt_word", "pun_sense", "alt_sense"] as const;
export type PunchlineFlag = (typeof PUNCHLINE_FLAGS)[number];

export class PunchlineForm {
  private flags: Partial<Record<PunchlineFlag, boolean>> = {};

  setFlag(flag: PunchlineFlag, value: boolean): void {
    this.flags[flag] = value;
  }

  /** Keyboard shortcut behavior: keys 1-4 toggle, unset counts as false. */
  toggleFlag(index: number): void {
    const flag = PUNCHLINE_FLAGS[index];
    if (flag === undefined) return;
    this.flags[flag] = !(this.flags[flag] ?? false);
  }

  flagValue(flag: PunchlineFlag): boolean | undefined {
    return this.flags[flag];
  }

  isComplete(): boolean {
    return PUNCHLINE_FLAGS.every((flag) => typeof this.flags[flag] === "boolean");
  }

  missingFlags(): PunchlineFlag[] {
    return PUNCHLINE_FLAGS.filter((flag) => typeof this.flags[flag] !== "boolean");
  }

  buildPayload(): PunchlinePayload {
    if (!this.isComplete()) {
      throw new Error(`all four flags must be set (missing: ${this.missingFlags().join(", ")})`);
    }
    return {
      pun_word: this.flags.pun_word!,
      alt_word: this.flags.alt_word!,
      pun_sense: this.flags.pun_sense!,
      alt_sense: this.flags.alt_sense!,
    };
  }

  reset(): void {
    this.flags = {};
  }
}

export class PairwiseForm {
  private winner: PairwiseWinner | undefined;

  choose(winner: PairwiseWinner): void {
    this.winner = winner;
  }

  chosen(): PairwiseWinner | undefined {
    return this.winner;
  }

  isComplete(): boolean {
    return this.winner !== undefined;
  }

  buildPayload(): PairwisePayload {
    if (this.winner === undefined) {
      throw new Error("choose one of the two explanations or a tie first");
    }
    return { winner: this.winner };
  }

  reset(): void {
    this.winner = undefined;
  }
}

export class GenerationForm {
  private success: boolean | undefined;
  private funniness: GenerationPayload["funniness"] | undefined;
  private errorLabel: ErrorLabel | undefined;

  setSuccess(value: boolean): void {
    this.success = value;
  }

  setFunniness(value: number): void {
    if (!Number.isInteger(value) || value < 1 || value > 5) {
      throw new Error("funniness must be an integer between 1 and 5");
    }
    this.funniness = value as GenerationPayload["funniness"];
  }

  setErrorLabel(label: string | undefined): void {
    if (label === undefined || label === "") {
      this.errorLabel = undefined;
      return;
    }
    if (!(ERROR_LABELS as readonly string[]).includes(label)) {
      throw new Error(`unknown error label: ${label}`);
    }
    this.errorLabel = label as ErrorLabel;
  }

  /** Every text gets a funniness rating, successful or not. */
  isComplete(): boolean {
    return this.success !== undefined && this.funniness !== undefined;
  }

  buildPayload(): GenerationPayload {
    if (this.success === undefined || this.funniness === undefined) {
      throw new Error("success and funniness are both required");
    }
    const payload: GenerationPayload = {
      success: this.success,
      funniness: this.funniness,
    };
    if (this.errorLabel !== undefined) {
      payload.error_label = this.errorLabel;
    }
    return payload;
  }

  reset(): void {
    this.success = undefined;
    this.funniness = undefined;
    this.errorLabel = undefined;
  }
}

export type AnyForm = PunchlineForm | PairwiseForm | GenerationForm;

export function formForKind(kind: string): AnyForm {
  switch (kind) {
    case "punchline-check":
      return new PunchlineForm();
    case "pairwise-explanation":
      return new PairwiseForm();
    case "generation-judgment":
      return new GenerationForm();
    default:
      throw new Error(`unknown task kind: ${kind}`);
  }
}
