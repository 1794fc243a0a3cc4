"""Canonical pun data model, dataset importers, merge, splits, validation.

The on-disk canonical format is UTF-8 line-delimited JSON, one entry per
line with the flat field names: id, text, label, pun_type, pun_word,
alt_word, pun_sense, alt_sense, explanation, keywords. The two importers
adapt the irregular upstream formats into partial entries; merge() attaches
the crowd annotations and applies the filtering rules.
"""

from __future__ import annotations

import json
import logging
import random
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .textproc import DEFAULT_LEMMAS, LemmaDict, tokenize

log = logging.getLogger(__name__)

LABELS = ("pun", "non-pun")
PUN_TYPES = ("hom", "het", "none")

_WS_RE = re.compile(r"\s+")


def _collapse_ws(text: str) -> str:
    return _WS_RE.sub(" ", text).strip()


class CorpusError(ValueError):
    """Raised for malformed upstream files or impossible requests."""


@dataclass(frozen=True)
class PunPair:
    """The two words of a pun and their sense glosses."""

    pun_word: str
    alt_word: str
    pun_sense: str
    alt_sense: str

    def is_hom(self) -> bool:
        return self.pun_word == self.alt_word


@dataclass(frozen=True)
class PunEntry:
    id: str
    text: str
    label: str
    pun_type: str
    pair: Optional[PunPair] = None
    explanation: Optional[str] = None
    keywords: Optional[tuple[str, ...]] = None

    def is_pun(self) -> bool:
        return self.label == "pun"


@dataclass(frozen=True)
class Corpus:
    entries: tuple[PunEntry, ...]
    provenance: str = ""
    dropped: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def by_id(self) -> dict[str, PunEntry]:
        return {e.id: e for e in self.entries}

    def puns(self) -> list[PunEntry]:
        return [e for e in self.entries if e.is_pun()]

    def non_puns(self) -> list[PunEntry]:
        return [e for e in self.entries if not e.is_pun()]


@dataclass(frozen=True)
class SplitSpec:
    example_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    dataset_kind: str  # "hom-dataset" | "het-dataset"


@dataclass(frozen=True)
class Violation:
    entry_id: str
    rule: str
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    def __bool__(self) -> bool:
        return not self.violations

    def rules_for(self, entry_id: str) -> list[str]:
        return [v.rule for v in self.violations if v.entry_id == entry_id]


# --- importers -------------------------------------------------------------


def import_semeval(pun_xml: str, gold_file: str) -> list[PunEntry]:
    """Parse the sentence XML plus its tab-separated gold file.

    The XML holds <text id=...> elements containing <word id=...> tokens.
    Gold lines are tab separated: a sentence id followed by either "0"
    (non-pun) or the pun word id, optionally followed by the alternative
    word, the pun sense gloss, and the alternative sense gloss.
    """
    try:
        tree = ET.parse(pun_xml)
    except ET.ParseError as exc:
        raise CorpusError(f"malformed XML in {pun_xml}: {exc}") from exc

    sentences: dict[str, list[tuple[str, str]]] = {}
    for text_el in tree.getroot().iter("text"):
        sid = text_el.attrib.get("id")
        if sid is None:
            raise CorpusError("XML <text> element without id")
        if sid in sentences:
            raise CorpusError(f"duplicate sentence id in XML: {sid}")
        words = [(w.attrib["id"], (w.text or "").strip()) for w in text_el.iter("word")]
        sentences[sid] = words

    entries: list[PunEntry] = []
    seen: set[str] = set()
    with open(gold_file, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            sid = cols[0].strip()
            if sid not in sentences:
                raise CorpusError(f"gold line {lineno} references unknown sentence id {sid!r}")
            if sid in seen:
                raise CorpusError(f"duplicate gold line for sentence id {sid!r}")
            seen.add(sid)
            words = sentences[sid]
            text = _collapse_ws(" ".join(surface for _, surface in words))
            if len(cols) < 2 or cols[1].strip() in ("0", ""):
                entries.append(PunEntry(id=sid, text=text, label="non-pun", pun_type="none"))
                continue
            word_id = cols[1].strip()
            surface_by_id = dict(words)
            if word_id not in surface_by_id:
                raise CorpusError(
                    f"gold line {lineno}: word id {word_id!r} not found in sentence {sid!r}"
                )
            pun_word = surface_by_id[word_id]
            alt_word = cols[2].strip() if len(cols) > 2 and cols[2].strip() else pun_word
            pun_sense = cols[3].strip() if len(cols) > 3 else ""
            alt_sense = cols[4].strip() if len(cols) > 4 else ""
            pun_type = _infer_pun_type(sid, pun_word, alt_word)
            pair = PunPair(pun_word=pun_word, alt_word=alt_word,
                           pun_sense=pun_sense, alt_sense=alt_sense)
            entries.append(PunEntry(id=sid, text=text, label="pun", pun_type=pun_type, pair=pair))
    return entries


def _infer_pun_type(sid: str, pun_word: str, alt_word: str) -> str:
    low = sid.casefold()
    if low.startswith("hom"):
        return "hom"
    if low.startswith("het"):
        return "het"
    return "hom" if pun_word.casefold() == alt_word.casefold() else "het"


@dataclass(frozen=True)
class ExpunAnnotations:
    """Per-entry crowdsourced explanations and keyword sets, unfiltered."""

    by_id: dict[str, tuple[list[str], list[tuple[str, ...]]]]
    skipped_rows: int = 0

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self.by_id

    def __len__(self) -> int:
        return len(self.by_id)


def import_expun(annotations_file: str) -> ExpunAnnotations:
    """Read the delimited annotation file.

    Rows are tab separated: entry id, annotator id, explanation text,
    keywords joined by '|'. Rows with the wrong shape are skipped and
    counted; repeated (id, annotator) rows keep only the last one.
    """
    rows: dict[tuple[str, str], tuple[str, tuple[str, ...]]] = {}
    skipped = 0
    with open(annotations_file, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 4 or not cols[0].strip() or not cols[1].strip():
                skipped += 1
                continue
            entry_id, annotator, explanation, kw_blob = (c.strip() for c in cols)
            keywords = tuple(k.strip() for k in kw_blob.split("|") if k.strip())
            rows[(entry_id, annotator)] = (explanation, keywords)
    if skipped:
        log.warning("import_expun: skipped %d malformed rows", skipped)
    by_id: dict[str, tuple[list[str], list[tuple[str, ...]]]] = {}
    for (entry_id, _annotator), (explanation, keywords) in rows.items():
        explanations, keyword_sets = by_id.setdefault(entry_id, ([], []))
        explanations.append(explanation)
        keyword_sets.append(keywords)
    return ExpunAnnotations(by_id=by_id, skipped_rows=skipped)


# --- merge -----------------------------------------------------------------


def _longest_explanation(candidates: list[str]) -> Optional[str]:
    best = None
    best_len = -1
    for cand in candidates:
        collapsed = _collapse_ws(cand)
        if not collapsed:
            continue
        if len(collapsed) > best_len:  # ties keep the first occurrence
            best, best_len = collapsed, len(collapsed)
    return best


def _largest_keyword_set(candidates: list[tuple[str, ...]]) -> Optional[tuple[str, ...]]:
    best = None
    best_len = -1
    for cand in candidates:
        cleaned = tuple(_collapse_ws(k) for k in cand if _collapse_ws(k))
        if len(cleaned) > best_len:
            best, best_len = cleaned, len(cleaned)
    return best if best else None


def merge(semeval_entries: Iterable[PunEntry], expun: ExpunAnnotations,
          provenance: str = "semeval+expun") -> Corpus:
    """Attach the longest explanation and largest keyword set to each pun.

    Pun entries that end up with no explanation are dropped and listed on
    the returned corpus. Non-pun entries keep only their text. Entries
    already carrying an explanation pass through unchanged when the
    annotation map has nothing for them, which makes the operation
    idempotent.
    """
    merged: list[PunEntry] = []
    dropped: list[str] = []
    for entry in semeval_entries:
        if not entry.is_pun():
            merged.append(replace(entry, pair=None, explanation=None, keywords=None))
            continue
        if entry.id in expun:
            explanations, keyword_sets = expun.by_id[entry.id]
            explanation = _longest_explanation(explanations)
            keywords = _largest_keyword_set(keyword_sets)
        else:
            explanation = entry.explanation
            keywords = entry.keywords
        if not explanation:
            dropped.append(entry.id)
            continue
        merged.append(replace(entry, explanation=explanation, keywords=keywords))
    if dropped:
        log.info("merge: dropped %d pun entries without explanations", len(dropped))
    return Corpus(entries=tuple(merged), provenance=provenance, dropped=tuple(dropped))


# --- splits ----------------------------------------------------------------


def make_splits(corpus: Corpus, dataset_kind: str, n_pun_examples: int,
                n_nonpun_examples: int, seed: int) -> SplitSpec:
    """Seeded selection of demonstration examples; the remainder is test.

    The candidate lists are sorted by id before shuffling with
    random.Random(seed), so the split is reproducible across machines.
    """
    if dataset_kind not in ("hom-dataset", "het-dataset"):
        raise CorpusError(f"unknown dataset kind {dataset_kind!r}")
    wanted_type = "hom" if dataset_kind == "hom-dataset" else "het"
    puns = sorted((e for e in corpus.entries if e.pun_type == wanted_type), key=lambda e: e.id)
    nons = sorted((e for e in corpus.entries if not e.is_pun()), key=lambda e: e.id)
    if len(puns) < n_pun_examples:
        raise CorpusError(
            f"need {n_pun_examples} {wanted_type} examples, corpus has {len(puns)}"
        )
    if len(nons) < n_nonpun_examples:
        raise CorpusError(
            f"need {n_nonpun_examples} non-pun examples, corpus has {len(nons)}"
        )
    rng = random.Random(seed)
    pun_ids = [e.id for e in puns]
    non_ids = [e.id for e in nons]
    rng.shuffle(pun_ids)
    rng.shuffle(non_ids)
    example_ids = tuple(sorted(pun_ids[:n_pun_examples]) + sorted(non_ids[:n_nonpun_examples]))
    test_ids = tuple(sorted(pun_ids[n_pun_examples:]) + sorted(non_ids[n_nonpun_examples:]))
    return SplitSpec(example_ids=example_ids, test_ids=test_ids, dataset_kind=dataset_kind)


# --- validation ------------------------------------------------------------


def validate(corpus: Corpus, lemmas: LemmaDict = DEFAULT_LEMMAS) -> ValidationReport:
    """Check every entry against the data-model invariants; never mutates."""
    violations: list[Violation] = []
    seen_ids: set[str] = set()
    for entry in corpus.entries:
        if entry.id in seen_ids:
            violations.append(Violation(entry.id, "duplicate-id"))
        seen_ids.add(entry.id)
        if entry.label not in LABELS:
            violations.append(Violation(entry.id, "bad-label", entry.label))
            continue
        if entry.pun_type not in PUN_TYPES:
            violations.append(Violation(entry.id, "bad-pun-type", entry.pun_type))
            continue
        if entry.is_pun() != (entry.pun_type in ("hom", "het")):
            violations.append(Violation(entry.id, "label-type-mismatch"))
        if entry.is_pun() != (entry.pair is not None):
            violations.append(
                Violation(entry.id, "pair-missing" if entry.is_pun() else "pair-unexpected")
            )
        if not entry.is_pun() or entry.pair is None:
            continue
        pair = entry.pair
        if _collapse_ws(pair.pun_sense) == _collapse_ws(pair.alt_sense):
            violations.append(Violation(entry.id, "senses-identical"))
        if entry.pun_type == "hom" and pair.pun_word != pair.alt_word:
            violations.append(Violation(entry.id, "hom-word-mismatch",
                                        f"{pair.pun_word!r} vs {pair.alt_word!r}"))
        if entry.pun_type == "het" and pair.pun_word == pair.alt_word:
            violations.append(Violation(entry.id, "het-words-identical"))
        text_lemmas = set(lemmas.lemmas(tokenize(entry.text)))
        if lemmas.lemmatize(pair.pun_word) not in text_lemmas:
            violations.append(Violation(entry.id, "pun-word-absent", pair.pun_word))
        if entry.pun_type == "het" and lemmas.lemmatize(pair.alt_word) in text_lemmas:
            violations.append(Violation(entry.id, "het-alt-word-present", pair.alt_word))
        if not (entry.explanation and _collapse_ws(entry.explanation)):
            violations.append(Violation(entry.id, "missing-explanation"))
        if not entry.keywords:
            violations.append(Violation(entry.id, "missing-keywords"))
    return ValidationReport(violations=tuple(violations))


# --- canonical JSONL -------------------------------------------------------

_FIELDS = ("id", "text", "label", "pun_type", "pun_word", "alt_word",
           "pun_sense", "alt_sense", "explanation", "keywords")


def entry_to_record(entry: PunEntry) -> dict:
    pair = entry.pair
    return {
        "id": entry.id,
        "text": entry.text,
        "label": entry.label,
        "pun_type": entry.pun_type,
        "pun_word": pair.pun_word if pair else None,
        "alt_word": pair.alt_word if pair else None,
        "pun_sense": pair.pun_sense if pair else None,
        "alt_sense": pair.alt_sense if pair else None,
        "explanation": entry.explanation,
        "keywords": list(entry.keywords) if entry.keywords is not None else None,
    }


def entry_from_record(record: dict) -> PunEntry:
    unknown = set(record) - set(_FIELDS)
    if unknown:
        raise CorpusError(f"unknown corpus fields: {sorted(unknown)}")
    pair = None
    if record.get("pun_word") is not None:
        pair = PunPair(
            pun_word=record["pun_word"],
            alt_word=record.get("alt_word") or record["pun_word"],
            pun_sense=record.get("pun_sense") or "",
            alt_sense=record.get("alt_sense") or "",
        )
    keywords = record.get("keywords")
    return PunEntry(
        id=str(record["id"]),
        text=record["text"],
        label=record["label"],
        pun_type=record.get("pun_type") or "none",
        pair=pair,
        explanation=record.get("explanation"),
        keywords=tuple(keywords) if keywords is not None else None,
    )


def save_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for entry in corpus.entries:
            handle.write(json.dumps(entry_to_record(entry), ensure_ascii=False) + "\n")


def load_corpus(path: str, provenance: str = "") -> Corpus:
    entries = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(entry_from_record(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: bad JSON: {exc}") from exc
    return Corpus(entries=tuple(entries), provenance=provenance or path)
