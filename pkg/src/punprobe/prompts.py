"""Byte-exact prompt rendering for every task.

Templates live as sectioned text resources (resources/templates/); each
renderer assembles the sections, fills the named placeholders, and returns
a PromptSpec whose `rendered` text is a pure function of its inputs. All
rendered prompts end with "Output:".
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from string import Template
from typing import Optional

from .corpus import PunEntry, PunPair

TASKS = (
    "recognition",
    "explanation",
    "generation-free",
    "generation-constrained",
    "nonpun-generation",
    "pairwise-judge",
    "synonym",
)

BIASES = ("pun", "non-pun")

PAIRWISE_ANSWERS = (
    "Explanation 1 is much better",
    "Explanation 2 is much better",
    "I'm not sure which would be better.",
)

NONPUN_DEMO_REASON = (
    "The given text does not exploit different meanings of a word "
    "or similar-sounding words."
)


class PromptError(ValueError):
    """Raised when a renderer's preconditions are not met."""


@dataclass(frozen=True)
class PromptSpec:
    task: str
    rendered: str
    bias: Optional[str] = None
    variant: str = "basic"
    cot: bool = False
    demonstrations: tuple[PunEntry, ...] = ()
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SamplingParams:
    temperature: float
    max_tokens: int = 512
    seed: Optional[int] = None

    @classmethod
    def for_task(cls, task: str, max_tokens: int = 512) -> "SamplingParams":
        """Defaults: 0.7 for the generation tasks, 0 everywhere else."""
        generation = task in ("generation-free", "generation-constrained",
                              "nonpun-generation")
        return cls(temperature=0.7 if generation else 0.0, max_tokens=max_tokens)


def _load_sections(name: str) -> dict[str, str]:
    text = resources.files("punprobe.resources.templates").joinpath(name).read_text("utf-8")
    sections: dict[str, list[str]] = {}
    current: Optional[str] = None
    for line in text.splitlines():
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
            continue
        if current is None:
            raise PromptError(f"template {name}: content before first section header")
        sections[current].append(line)
    return {k: "\n".join(v).strip("\n") for k, v in sections.items()}


def template_version() -> str:
    """Short digest of all template resources; embedded in reports."""
    root = resources.files("punprobe.resources.templates")
    digest = hashlib.sha256()
    for item in sorted(root.iterdir(), key=lambda p: p.name):
        digest.update(item.name.encode("utf-8"))
        digest.update(item.read_bytes())
    return digest.hexdigest()[:12]


def _choice_text(label: str) -> str:
    return f"The given text is a {label}."


def render_recognition(entry: PunEntry, bias: str, variant: str, cot: bool,
                       demonstrations: tuple[PunEntry, ...] | list[PunEntry] = ()) -> PromptSpec:
    """Render the recognition prompt with one bias leaning.

    The bias names its category first in the instruction's choice pair.
    The enhanced variant adds the pun definition and exactly six
    demonstration blocks (3 puns + 3 non-puns); the basic variant is
    instruction plus test data only.
    """
    if bias not in BIASES:
        raise PromptError(f"bias must be one of {BIASES}, got {bias!r}")
    if variant not in ("basic", "enhanced"):
        raise PromptError(f"unknown variant {variant!r}")
    demos = tuple(demonstrations)
    if variant == "enhanced":
        n_pun = sum(1 for d in demos if d.is_pun())
        n_non = len(demos) - n_pun
        if (n_pun, n_non) != (3, 3):
            raise PromptError(
                f"enhanced variant needs 3 pun + 3 non-pun demonstrations, got {n_pun}+{n_non}"
            )
    elif demos:
        raise PromptError("basic variant takes no demonstrations")

    sections = _load_sections("recognition.txt")
    other = "non-pun" if bias == "pun" else "pun"
    schema = ('{"Reason": "XXX", "Choice": "The given text is a XXX"}' if cot
              else '{"Choice": "The given text is a XXX"}')
    cot_clause = " Give your reasons first, then make your final decision clearly." if cot else ""
    instruction = Template(sections["instruction"]).substitute(
        bias_pair=f"{bias}/{other}", cot_clause=cot_clause, schema=schema)

    example_tpl = Template(sections["example"])
    blocks = []
    for demo in demos:
        if cot:
            if demo.is_pun():
                if not demo.explanation:
                    raise PromptError(f"demonstration {demo.id} lacks an explanation for CoT")
                reason = demo.explanation
            else:
                reason = NONPUN_DEMO_REASON
            output = json.dumps({"Reason": reason, "Choice": _choice_text(demo.label)},
                                ensure_ascii=False)
        else:
            output = json.dumps({"Choice": _choice_text(demo.label)}, ensure_ascii=False)
        blocks.append(example_tpl.substitute(text=demo.text, output=output))

    test = Template(sections["test"]).substitute(text=entry.text)
    parts = []
    if variant == "enhanced":
        parts.append(sections["definition"])
    parts.append(instruction)
    if blocks:
        parts.append("\n".join(blocks))
    parts.append(test)
    return PromptSpec(
        task="recognition",
        rendered="\n\n".join(parts),
        bias=bias,
        variant=variant,
        cot=cot,
        demonstrations=demos,
        payload={"entry_id": entry.id, "text": entry.text},
    )


def render_generation(pair: PunPair, keywords: Optional[list[str] | tuple[str, ...]] = None,
                      source_entry: Optional[PunEntry] = None) -> PromptSpec:
    """Render the pun-generation prompt; constrained mode iff keywords given."""
    constrained = keywords is not None
    if constrained and not list(keywords):
        raise PromptError("constrained generation needs a non-empty keyword list")
    name = "generation_constrained.txt" if constrained else "generation_free.txt"
    sections = _load_sections(name)
    subs = {
        "pun_word": pair.pun_word,
        "alt_word": pair.alt_word,
        "pun_sense": pair.pun_sense,
        "alt_sense": pair.alt_sense,
    }
    if constrained:
        subs["keywords"] = ", ".join(keywords)
    test = Template(sections["test"]).substitute(**subs)
    rendered = "\n\n".join(
        [sections["definition"], sections["instruction"], sections["examples"], test]
    )
    payload = {
        "pun_word": pair.pun_word,
        "alt_word": pair.alt_word,
        "keywords": list(keywords) if constrained else None,
    }
    if source_entry is not None:
        payload["entry_id"] = source_entry.id
        payload["entry_text"] = source_entry.text
    return PromptSpec(
        task="generation-constrained" if constrained else "generation-free",
        rendered=rendered,
        payload=payload,
    )


def render_nonpun(pun_word: str, sense: str) -> PromptSpec:
    """Render the zero-shot non-pun baseline prompt (one keyword, one meaning)."""
    if not pun_word.strip():
        raise PromptError("keyword must be non-empty")
    cleaned = sense.strip()
    if cleaned.startswith("<") and cleaned.endswith(">"):
        cleaned = cleaned[1:-1].strip()
    sections = _load_sections("nonpun.txt")
    test = Template(sections["test"]).substitute(keyword=pun_word, sense=cleaned)
    rendered = "\n\n".join([sections["definition"], sections["instruction"], test])
    return PromptSpec(
        task="nonpun-generation",
        rendered=rendered,
        payload={"pun_word": pun_word, "sense": cleaned},
    )


def render_pairwise(pun_text: str, gold_pair: PunPair, human_explanation: str,
                    model_explanation: str, order: str) -> PromptSpec:
    """Render the zero-shot judge prompt with the stated presentation order."""
    if order not in ("human-first", "model-first"):
        raise PromptError(f"order must be 'human-first' or 'model-first', got {order!r}")
    if not gold_pair.pun_sense.strip() or not gold_pair.alt_sense.strip():
        raise PromptError("pairwise judging needs both gold senses")
    if human_explanation.strip() == model_explanation.strip():
        raise PromptError("pairwise judging needs two distinct explanations")
    first, second = ((human_explanation, model_explanation) if order == "human-first"
                     else (model_explanation, human_explanation))
    sections = _load_sections("pairwise.txt")
    test = Template(sections["test"]).substitute(
        pun_text=pun_text,
        pun_word=gold_pair.pun_word,
        pun_sense=gold_pair.pun_sense,
        alt_word=gold_pair.alt_word,
        alt_sense=gold_pair.alt_sense,
        explanation_1=first,
        explanation_2=second,
    )
    rendered = "\n\n".join([sections["definition"], sections["instruction"], test])
    return PromptSpec(
        task="pairwise-judge",
        rendered=rendered,
        payload={"pun_text": pun_text, "order": order},
    )


def render_synonym(pun_entry: PunEntry) -> PromptSpec:
    """Render the synonym-finding prompt for a hom entry."""
    if pun_entry.pun_type != "hom" or pun_entry.pair is None:
        raise PromptError("synonym prompt is hom-only")
    pair = pun_entry.pair
    sections = _load_sections("synonym.txt")
    test = Template(sections["test"]).substitute(
        text=pun_entry.text,
        keyword=pair.pun_word,
        pun_sense=pair.pun_sense,
        alt_sense=pair.alt_sense,
    )
    rendered = "\n\n".join([sections["instruction"], sections["examples"], test])
    return PromptSpec(
        task="synonym",
        rendered=rendered,
        payload={"entry_id": pun_entry.id, "pun_word": pair.pun_word},
    )
