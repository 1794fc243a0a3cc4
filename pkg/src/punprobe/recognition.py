"""Recognition scoring: TPR, TNR, accuracy, bias deltas, Cohen's kappa.

Decisions are aligned to test ids and take one of three values: "pun",
"non-pun", or "invalid". Invalid counts as incorrect for the rates and as
its own category for kappa, so parse instability shows up in the agreement
statistic instead of being silently coerced.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

DECISIONS = ("pun", "non-pun", "invalid")


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class RecognitionRun:
    bias: str
    variant: str
    cot: bool
    ids: tuple[str, ...]
    decisions: tuple[str, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.decisions):
            raise MetricError("decisions must align one-to-one with ids")
        bad = [d for d in self.decisions if d not in DECISIONS]
        if bad:
            raise MetricError(f"unknown decisions: {sorted(set(bad))}")


def _labels_for(run: RecognitionRun, labels: Mapping[str, str]) -> list[str]:
    missing = [i for i in run.ids if i not in labels]
    if missing:
        raise MetricError(f"labels missing for ids: {missing[:5]}")
    return [labels[i] for i in run.ids]


def tpr(run: RecognitionRun, labels: Mapping[str, str]) -> float:
    """Fraction of pun-labeled items decided "pun"; invalid is incorrect."""
    aligned = _labels_for(run, labels)
    pun_slots = [d for d, lab in zip(run.decisions, aligned) if lab == "pun"]
    if not pun_slots:
        raise MetricError("no pun-labeled items in the run")
    return sum(1 for d in pun_slots if d == "pun") / len(pun_slots)


def tnr(run: RecognitionRun, labels: Mapping[str, str]) -> float:
    """Fraction of non-pun-labeled items decided "non-pun"."""
    aligned = _labels_for(run, labels)
    non_slots = [d for d, lab in zip(run.decisions, aligned) if lab == "non-pun"]
    if not non_slots:
        raise MetricError("no non-pun-labeled items in the run")
    return sum(1 for d in non_slots if d == "non-pun") / len(non_slots)


def accuracy(run: RecognitionRun, labels: Mapping[str, str]) -> float:
    aligned = _labels_for(run, labels)
    if not aligned:
        raise MetricError("empty run")
    return sum(1 for d, lab in zip(run.decisions, aligned) if d == lab) / len(aligned)


def deltas(run_nonpun_bias: RecognitionRun, run_pun_bias: RecognitionRun,
           labels: Mapping[str, str]) -> tuple[float, float]:
    """Signed (delta_TPR, delta_TNR) when the bias shifts from pun to non-pun."""
    if run_nonpun_bias.ids != run_pun_bias.ids:
        raise MetricError("runs cover different test ids")
    return (
        tpr(run_nonpun_bias, labels) - tpr(run_pun_bias, labels),
        tnr(run_nonpun_bias, labels) - tnr(run_pun_bias, labels),
    )


def cohen_kappa(run_a: RecognitionRun, run_b: RecognitionRun) -> float:
    """Agreement between two decision runs over {pun, non-pun, invalid}.

    Degenerate case: when expected agreement is 1 (both raters constant on
    the same category) the 0/0 form is resolved to 1.0.
    """
    if run_a.ids != run_b.ids:
        raise MetricError("runs cover different test ids")
    n = len(run_a.decisions)
    if n == 0:
        raise MetricError("empty runs")
    observed = sum(1 for x, y in zip(run_a.decisions, run_b.decisions) if x == y) / n
    expected = 0.0
    for cat in DECISIONS:
        pa = sum(1 for d in run_a.decisions if d == cat) / n
        pb = sum(1 for d in run_b.decisions if d == cat) / n
        expected += pa * pb
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)
