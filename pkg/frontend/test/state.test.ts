import { describe, expect, it } from "vitest";

import {
  formForKind,
  GenerationForm,
  PairwiseForm,
  PUNCHLINE_FLAGS,
  PunchlineForm,
} from "../src/state.js";

describe("PunchlineForm", () => {
  it("requires all four flags before building a payload", () => {
    const form = new PunchlineForm();
    expect(form.isComplete()).toBe(false);
    form.setFlag("pun_word", true);
    form.setFlag("alt_word", false);
    form.setFlag("pun_sense", true);
    expect(form.isComplete()).toBe(false);
    expect(form.missingFlags()).toEqual(["alt_sense"]);
    expect(() => form.buildPayload()).toThrow(/alt_sense/);
    form.setFlag("alt_sense", false);
    expect(form.buildPayload()).toEqual({
      pun_word: true,
      alt_word: false,
      pun_sense: true,
      alt_sense: false,
    });
  });

  it("keyboard toggles flip the addressed flag only", () => {
    const form = new PunchlineForm();
    form.toggleFlag(0);
    form.toggleFlag(0);
    form.toggleFlag(1);
    expect(form.flagValue("pun_word")).toBe(false);
    expect(form.flagValue("alt_word")).toBe(true);
    expect(form.flagValue("pun_sense")).toBeUndefined();
    form.toggleFlag(99); // out of range: no-op
    expect(PUNCHLINE_FLAGS).toHaveLength(4);
  });

  it("reset clears everything", () => {
    const form = new PunchlineForm();
    PUNCHLINE_FLAGS.forEach((flag) => form.setFlag(flag, true));
    expect(form.isComplete()).toBe(true);
    form.reset();
    expect(form.isComplete()).toBe(false);
  });
});

describe("PairwiseForm", () => {
  it("needs exactly one winner", () => {
    const form = new PairwiseForm();
    expect(form.isComplete()).toBe(false);
    expect(() => form.buildPayload()).toThrow(/choose/);
    form.choose("second");
    expect(form.buildPayload()).toEqual({ winner: "second" });
    form.choose("tie");
    expect(form.buildPayload()).toEqual({ winner: "tie" });
  });
});

describe("GenerationForm", () => {
  it("requires success and funniness, even for failed puns", () => {
    const form = new GenerationForm();
    form.setSuccess(false);
    expect(form.isComplete()).toBe(false); // funniness still required
    form.setFunniness(1);
    expect(form.buildPayload()).toEqual({ success: false, funniness: 1 });
  });

  it("rejects out-of-range funniness", () => {
    const form = new GenerationForm();
    expect(() => form.setFunniness(0)).toThrow(/between 1 and 5/);
    expect(() => form.setFunniness(6)).toThrow(/between 1 and 5/);
    expect(() => form.setFunniness(2.5)).toThrow(/between 1 and 5/);
  });

  it("error label is optional and validated", () => {
    const form = new GenerationForm();
    form.setSuccess(true);
    form.setFunniness(4);
    form.setErrorLabel("het-as-hom");
    expect(form.buildPayload()).toEqual({
      success: true,
      funniness: 4,
      error_label: "het-as-hom",
    });
    form.setErrorLabel(undefined);
    expect(form.buildPayload()).toEqual({ success: true, funniness: 4 });
    expect(() => form.setErrorLabel("made-up-label")).toThrow(/unknown error label/);
  });
});

describe("formForKind", () => {
  it("maps each kind to its form", () => {
    expect(formForKind("punchline-check")).toBeInstanceOf(PunchlineForm);
    expect(formForKind("pairwise-explanation")).toBeInstanceOf(PairwiseForm);
    expect(formForKind("generation-judgment")).toBeInstanceOf(GenerationForm);
    expect(() => formForKind("nope")).toThrow(/unknown task kind/);
  });
});
