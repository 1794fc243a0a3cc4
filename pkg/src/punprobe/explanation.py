"""Explanation evaluation: punchline-check aggregation and pairwise judging.

Punchline annotations record, per task and annotator, whether the pun word,
alternative word, and the two senses were mentioned in an explanation.
Aggregation uses majority vote (odd annotator counts), average mention
ratios, and Fleiss's kappa. Pairwise judging renders the judge prompt with
a seeded presentation order per task, parses the verdict, and normalizes
it back to model/human/tie.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from . import gateway, prompts
from .corpus import Corpus, PunEntry, SplitSpec

MENTION_KEYS = ("pun_word", "alt_word", "pun_sense", "alt_sense")

ERROR_LABELS = (
    "misclassify-pun-as-non-pun",
    "incorrect-pun-word",
    "incorrect-alternative-word",
    "het-as-hom",
    "lack-of-meaning-analysis",
    "fabricated-meaning",
)


class ExplanationError(ValueError):
    pass


@dataclass(frozen=True)
class PunchlineAnnotation:
    task_id: str
    annotator_id: str
    mentions: tuple[bool, bool, bool, bool]  # w_p, w_a, S_p, S_a

    def __post_init__(self):
        if len(self.mentions) != 4:
            raise ExplanationError("punchline annotation needs exactly four flags")


@dataclass(frozen=True)
class PairwiseVerdict:
    task_id: str
    presentation_order: str  # "human-first" | "model-first"
    winner: str  # "model" | "human" | "tie"


def resolve_majority(annotations: Sequence[PunchlineAnnotation]) -> tuple[bool, bool, bool, bool]:
    """Per-flag majority over an odd number of annotators for one task."""
    if not annotations:
        raise ExplanationError("no annotations for task")
    task_ids = {a.task_id for a in annotations}
    if len(task_ids) != 1:
        raise ExplanationError(f"annotations mix tasks: {sorted(task_ids)}")
    annotators = [a.annotator_id for a in annotations]
    if len(set(annotators)) != len(annotators):
        raise ExplanationError("duplicate annotator for task")
    if len(annotations) % 2 == 0:
        raise ExplanationError("majority vote needs an odd annotator count")
    half = len(annotations) / 2
    return tuple(
        sum(1 for a in annotations if a.mentions[i]) > half for i in range(4)
    )


def mention_ratios(resolved: Sequence[tuple[bool, bool, bool, bool]]) -> tuple[float, float, float, float]:
    """Mean of each mention flag across tasks."""
    if not resolved:
        raise ExplanationError("no resolved tasks")
    n = len(resolved)
    return tuple(sum(1 for flags in resolved if flags[i]) / n for i in range(4))


def fleiss_kappa(matrix: Sequence[Sequence[bool]]) -> float:
    """Fleiss's kappa for a tasks x annotators boolean matrix.

    Degenerate all-one-category matrices return 1.0 by convention (the
    textbook formula is 0/0 there).
    """
    if len(matrix) < 2:
        raise ExplanationError("fleiss kappa needs at least two tasks")
    n = len(matrix[0])
    if n < 2:
        raise ExplanationError("fleiss kappa needs at least two annotators")
    if any(len(row) != n for row in matrix):
        raise ExplanationError("ragged annotation matrix")
    counts = [(sum(1 for v in row if v), sum(1 for v in row if not v)) for row in matrix]
    total = len(matrix) * n
    p_true = sum(c[0] for c in counts) / total
    p_false = sum(c[1] for c in counts) / total
    p_bar = sum((t * t + f * f - n) / (n * (n - 1)) for t, f in counts) / len(matrix)
    p_e = p_true * p_true + p_false * p_false
    if p_e == 1.0:
        return 1.0 if p_bar == 1.0 else 0.0
    return (p_bar - p_e) / (1.0 - p_e)


# --- pairwise judging ------------------------------------------------------


@dataclass(frozen=True)
class PairwiseTask:
    task_id: str
    entry: PunEntry
    human_explanation: str
    model_explanation: str


def judge_order(task_id: str, seed: int) -> str:
    """Seeded per-task coin for the presentation order, recorded for replay."""
    digest = hashlib.sha256(f"{seed}:{task_id}".encode("utf-8")).digest()
    return "human-first" if digest[0] % 2 == 0 else "model-first"


def normalize_winner(slot_verdict: str, order: str) -> str:
    """Map a first/second/unsure verdict back to model/human/tie."""
    if slot_verdict == "unsure":
        return "tie"
    first_is_human = order == "human-first"
    if slot_verdict == "first_better":
        return "human" if first_is_human else "model"
    if slot_verdict == "second_better":
        return "model" if first_is_human else "human"
    raise ExplanationError(f"unknown verdict {slot_verdict!r}")


@dataclass(frozen=True)
class PairwiseOutcome:
    verdicts: tuple[PairwiseVerdict, ...]
    invalid_count: int


def run_pairwise(tasks: Sequence[PairwiseTask], judge_backend, seed: int = 0,
                 sampling: Optional[prompts.SamplingParams] = None) -> PairwiseOutcome:
    """Judge every task; invalid responses count as ties and are tallied."""
    sampling = sampling or prompts.SamplingParams.for_task("pairwise-judge")
    ordered = sorted(tasks, key=lambda t: t.task_id)
    specs = []
    orders = []
    for task in ordered:
        if task.entry.pair is None:
            raise ExplanationError(f"task {task.task_id} has no gold pair")
        order = judge_order(task.task_id, seed)
        orders.append(order)
        specs.append(prompts.render_pairwise(
            task.entry.text, task.entry.pair,
            task.human_explanation, task.model_explanation, order))
    exchanges = gateway.complete_many(specs, sampling, judge_backend)
    verdicts = []
    invalid = 0
    for task, order, exchange in zip(ordered, orders, exchanges):
        slot = gateway.parse_pairwise(exchange.raw)
        if slot is gateway.INVALID:
            invalid += 1
            winner = "tie"
        else:
            winner = normalize_winner(slot, order)
        verdicts.append(PairwiseVerdict(task_id=task.task_id,
                                        presentation_order=order, winner=winner))
    return PairwiseOutcome(verdicts=tuple(verdicts), invalid_count=invalid)


def pairwise_rates(verdicts: Sequence[PairwiseVerdict]) -> tuple[float, float, float]:
    """(win, tie, loss) rates for the model side; they always sum to 1."""
    if not verdicts:
        raise ExplanationError("no verdicts")
    n = len(verdicts)
    win = sum(1 for v in verdicts if v.winner == "model") / n
    tie = sum(1 for v in verdicts if v.winner == "tie") / n
    loss = sum(1 for v in verdicts if v.winner == "human") / n
    return win, tie, loss


def judge_consistency(judge_verdicts: Sequence[PairwiseVerdict],
                      human_verdicts: Sequence[PairwiseVerdict]) -> float:
    """Exact winner-match rate between judge and human reference verdicts."""
    judge_by_id = {v.task_id: v.winner for v in judge_verdicts}
    human_by_id = {v.task_id: v.winner for v in human_verdicts}
    shared = sorted(set(judge_by_id) & set(human_by_id))
    if not shared:
        raise ExplanationError("no overlapping task ids")
    return sum(1 for tid in shared if judge_by_id[tid] == human_by_id[tid]) / len(shared)


# --- sampling and annotation exchange --------------------------------------


def select_punchline_sample(corpus: Corpus, splits: Mapping[str, SplitSpec], seed: int,
                            n_hom: int = 100, n_het: int = 100) -> list[str]:
    """Seeded sample of hom and het test entries for the human audits."""
    by_id = corpus.by_id()
    rng = random.Random(seed)
    picked: list[str] = []
    for kind, count in (("hom", n_hom), ("het", n_het)):
        split = splits.get(f"{kind}-dataset")
        if split is None:
            continue
        candidates = sorted(
            tid for tid in split.test_ids
            if tid in by_id and by_id[tid].pun_type == kind
        )
        if len(candidates) > count:
            candidates = sorted(rng.sample(candidates, count))
        picked.extend(candidates)
    return picked


def annotation_record(task_id: str, annotator_id: str, kind: str, payload: dict,
                      submitted_at: float) -> dict:
    return {
        "task_id": task_id,
        "annotator_id": annotator_id,
        "kind": kind,
        "payload": payload,
        "submitted_at": submitted_at,
    }


def read_annotation_export(path: str) -> list[dict]:
    """Read the shared JSONL annotation exchange format (header line first)."""
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            if lineno == 0 and data.get("record") == "header":
                continue
            records.append(data)
    return records


def punchline_annotations_from_records(records: Iterable[dict]) -> list[PunchlineAnnotation]:
    out = []
    for rec in records:
        if rec.get("kind") != "punchline-check":
            continue
        payload = rec["payload"]
        out.append(PunchlineAnnotation(
            task_id=rec["task_id"],
            annotator_id=rec["annotator_id"],
            mentions=tuple(bool(payload[k]) for k in MENTION_KEYS),
        ))
    return out


def resolve_all_majorities(annotations: Sequence[PunchlineAnnotation],
                           required: int = 3) -> dict[str, tuple[bool, bool, bool, bool]]:
    """Majority flags for every task that reached the required annotator count."""
    by_task: dict[str, list[PunchlineAnnotation]] = {}
    for ann in annotations:
        by_task.setdefault(ann.task_id, []).append(ann)
    return {
        tid: resolve_majority(anns)
        for tid, anns in sorted(by_task.items())
        if len(anns) == required
    }


def error_label_frequencies(records: Iterable[dict]) -> dict[str, int]:
    """Simple frequency count of the optional error-type labels."""
    counts = {label: 0 for label in ERROR_LABELS}
    for rec in records:
        if rec.get("kind") != "generation-judgment":
            continue
        label = rec.get("payload", {}).get("error_label")
        if label is None:
            continue
        if label not in counts:
            raise ExplanationError(f"unknown error label {label!r}")
        counts[label] += 1
    return counts
