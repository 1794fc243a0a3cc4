"""Experiment orchestration: recognition, explanation, and generation runs.

A single JSON config drives everything. Runs are deterministic under mock
backends and a fixed seed; all backend traffic goes through the gateway
cache, so recomputing a report from a warm cache touches no network and
reproduces the same bytes.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, replace
from typing import Optional

from . import gateway, prompts, toydata
from .corpus import Corpus, PunEntry, SplitSpec, load_corpus, make_splits
from .explanation import (
    PairwiseTask,
    error_label_frequencies,
    judge_order,
    mention_ratios,
    pairwise_rates,
    punchline_annotations_from_records,
    read_annotation_export,
    resolve_all_majorities,
    run_pairwise,
)
from .gateway import INVALID, BackendConfig
from .generation import (
    GenerationRecord,
    aggregate,
    score_record,
    strict_success,
    substitute_synonyms,
)
from .recognition import RecognitionRun, accuracy, cohen_kappa, deltas, tnr, tpr
from .wordmodels import EmbeddingTable, NGramModel

log = logging.getLogger(__name__)


class RunnerError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    corpus: str = "toy"
    dataset_kind: str = "het-dataset"
    seed: int = 7
    n_pun_examples: int = 4
    n_nonpun_examples: int = 4
    max_items: Optional[int] = None
    output_dir: str = "punprobe-out"
    subject_backend: Optional[BackendConfig] = None
    judge_backend: Optional[BackendConfig] = None
    synonym_backend: Optional[BackendConfig] = None
    baseline_backend: Optional[BackendConfig] = None
    allow_same_judge: bool = False
    recognition_variants: tuple[str, ...] = ("basic", "enhanced")
    recognition_cot: tuple[bool, ...] = (False, True)
    generation_modes: tuple[str, ...] = ("free", "constrained")
    nonpun_baseline: bool = True
    embeddings: str = "toy"
    lm_corpus: str = "toy"
    lm_order: int = 3
    lm_add_k: float = 0.01
    surprise_window: int = 2
    focus_prior: float = 0.5
    softmax_temperature: float = 0.1
    max_tokens: int = 512
    annotations: Optional[str] = None

    def __post_init__(self):
        if self.subject_backend is None:
            raise RunnerError("config needs a subject backend")
        if self.judge_backend is None:
            self.judge_backend = self.subject_backend
        if self.synonym_backend is None:
            self.synonym_backend = self.judge_backend
        if self.baseline_backend is None:
            self.baseline_backend = self.subject_backend
        if (not self.allow_same_judge
                and self.judge_backend.model_id == self.subject_backend.model_id):
            raise RunnerError(
                "judge backend must differ from the subject backend "
                "(set allow_same_judge to override)")


_BACKEND_KEYS = ("kind", "model_id", "endpoint", "api_key_source", "max_parallel",
                 "retry_limit", "backoff_initial", "backoff_multiplier", "cache_dir",
                 "persona", "timeout")


def _backend_from_dict(data: dict) -> BackendConfig:
    unknown = set(data) - set(_BACKEND_KEYS)
    if unknown:
        raise RunnerError(f"unknown backend keys: {sorted(unknown)}")
    if data.get("kind") == "mock" and "model_id" not in data:
        return BackendConfig.mock(data["persona"], cache_dir=data.get("cache_dir"))
    return BackendConfig(**data)


def load_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Read the JSON config file; flat keys mirror ExperimentConfig fields."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    data.update(overrides or {})
    for key in ("subject_backend", "judge_backend", "synonym_backend", "baseline_backend"):
        if isinstance(data.get(key), dict):
            data[key] = _backend_from_dict(data[key])
    for key in ("recognition_variants", "recognition_cot", "generation_modes"):
        if key in data:
            data[key] = tuple(data[key])
    return ExperimentConfig(**data)


@dataclass
class Experiment:
    """Resolved corpus, split, and models for one configured run."""

    config: ExperimentConfig
    corpus: Corpus
    split: SplitSpec
    embeddings: EmbeddingTable
    ngram: NGramModel

    @classmethod
    def prepare(cls, config: ExperimentConfig) -> "Experiment":
        if config.corpus == "toy":
            corpus = toydata.build_mock_corpus()
        else:
            corpus = load_corpus(config.corpus)
        split = make_splits(corpus, config.dataset_kind, config.n_pun_examples,
                            config.n_nonpun_examples, config.seed)
        if config.embeddings == "toy":
            embeddings = toydata.build_embeddings()
        else:
            embeddings = EmbeddingTable.load(config.embeddings)
        if config.lm_corpus == "toy":
            ngram = toydata.build_lm(order=config.lm_order, add_k=config.lm_add_k)
        else:
            with open(config.lm_corpus, encoding="utf-8") as handle:
                ngram = NGramModel.train_text(handle.read(), order=config.lm_order,
                                              add_k=config.lm_add_k)
        return cls(config=config, corpus=corpus, split=split,
                   embeddings=embeddings, ngram=ngram)

    def test_entries(self) -> list[PunEntry]:
        by_id = self.corpus.by_id()
        entries = [by_id[i] for i in self.split.test_ids]
        limit = self.config.max_items
        if limit is None or len(entries) <= limit:
            return entries
        # keep both labels represented when truncating for quick runs
        puns = [e for e in entries if e.is_pun()]
        nons = [e for e in entries if not e.is_pun()]
        picked: list[PunEntry] = []
        for pair in zip(puns, nons):
            if len(picked) + 2 > limit:
                break
            picked.extend(pair)
        leftovers = puns[len(picked) // 2:] + nons[len(picked) // 2:]
        picked.extend(leftovers[: limit - len(picked)])
        return sorted(picked, key=lambda e: e.id)

    def demonstrations(self) -> tuple[PunEntry, ...]:
        """Three pun and three non-pun example entries, interleaved."""
        by_id = self.corpus.by_id()
        pool = [by_id[i] for i in self.split.example_ids]
        puns = [e for e in pool if e.is_pun()][:3]
        nons = [e for e in pool if not e.is_pun()][:3]
        if len(puns) < 3 or len(nons) < 3:
            raise RunnerError("example pool too small for enhanced demonstrations")
        demos: list[PunEntry] = []
        for p, n in zip(puns, nons):
            demos.extend((p, n))
        return tuple(demos)

    def labels(self) -> dict[str, str]:
        return {e.id: e.label for e in self.test_entries()}


# --- recognition -------------------------------------------------------------


def _decide(raw: str) -> str:
    parsed = gateway.parse_choice(raw)
    return "invalid" if parsed is INVALID else parsed.choice


def run_recognition(experiment: Experiment) -> dict:
    """Execute the bias x variant x CoT matrix and score every cell."""
    config = experiment.config
    entries = experiment.test_entries()
    if not entries:
        raise RunnerError("empty test split")
    labels = experiment.labels()
    params = prompts.SamplingParams.for_task("recognition", config.max_tokens)
    cells = []
    runs: dict[tuple[str, bool, str], RecognitionRun] = {}
    for variant in config.recognition_variants:
        demos = experiment.demonstrations() if variant == "enhanced" else ()
        for cot in config.recognition_cot:
            for bias in ("pun", "non-pun"):
                specs = [prompts.render_recognition(e, bias, variant, cot, demos)
                         for e in entries]
                exchanges = gateway.complete_many(specs, params, config.subject_backend)
                decisions = tuple(_decide(x.raw) for x in exchanges)
                runs[(variant, cot, bias)] = RecognitionRun(
                    bias=bias, variant=variant, cot=cot,
                    ids=tuple(e.id for e in entries), decisions=decisions)
    for variant in config.recognition_variants:
        for cot in config.recognition_cot:
            pun_run = runs[(variant, cot, "pun")]
            non_run = runs[(variant, cot, "non-pun")]
            d_tpr, d_tnr = deltas(non_run, pun_run, labels)
            cells.append({
                "variant": variant,
                "cot": cot,
                "tpr_pun_bias": tpr(pun_run, labels),
                "tpr_nonpun_bias": tpr(non_run, labels),
                "tnr_pun_bias": tnr(pun_run, labels),
                "tnr_nonpun_bias": tnr(non_run, labels),
                "accuracy_pun_bias": accuracy(pun_run, labels),
                "accuracy_nonpun_bias": accuracy(non_run, labels),
                "delta_tpr": d_tpr,
                "delta_tnr": d_tnr,
                "kappa": cohen_kappa(pun_run, non_run),
                "invalid_pun_bias": pun_run.decisions.count("invalid"),
                "invalid_nonpun_bias": non_run.decisions.count("invalid"),
                "decisions_pun_bias": list(pun_run.decisions),
                "decisions_nonpun_bias": list(non_run.decisions),
            })
    return {
        "test_ids": [e.id for e in entries],
        "labels": [labels[e.id] for e in entries],
        "cells": cells,
    }


# --- explanation ---------------------------------------------------------------


def harvest_explanations(experiment: Experiment) -> tuple[dict[str, str], int]:
    """Reason fields of enhanced pun-biased CoT recognition, per pun entry."""
    config = experiment.config
    demos = experiment.demonstrations()
    params = prompts.SamplingParams.for_task("recognition", config.max_tokens)
    puns = [e for e in experiment.test_entries() if e.is_pun()]
    specs = [prompts.render_recognition(e, "pun", "enhanced", True, demos) for e in puns]
    exchanges = gateway.complete_many(specs, params, config.subject_backend)
    harvested: dict[str, str] = {}
    missing = 0
    for entry, exchange in zip(puns, exchanges):
        parsed = gateway.parse_choice(exchange.raw)
        if parsed is INVALID or not parsed.reason:
            missing += 1
            continue
        harvested[entry.id] = parsed.reason
    return harvested, missing


def run_explanation(experiment: Experiment) -> dict:
    """Harvest CoT explanations, judge them pairwise, ingest punchline audits."""
    config = experiment.config
    harvested, missing = harvest_explanations(experiment)
    by_id = experiment.corpus.by_id()
    tasks = []
    identical = 0
    for entry_id, model_explanation in sorted(harvested.items()):
        entry = by_id[entry_id]
        if not entry.explanation:
            continue
        if entry.explanation.strip() == model_explanation.strip():
            identical += 1
            continue
        tasks.append(PairwiseTask(task_id=f"pair:{entry_id}", entry=entry,
                                  human_explanation=entry.explanation,
                                  model_explanation=model_explanation))
    block: dict = {
        "explanations": harvested,
        "missing_explanations": missing,
        "identical_explanations": identical,
    }
    if tasks:
        outcome = run_pairwise(tasks, config.judge_backend, seed=config.seed)
        win, tie, loss = pairwise_rates(outcome.verdicts)
        block["pairwise"] = {
            "n": len(outcome.verdicts),
            "win_rate": win,
            "tie_rate": tie,
            "loss_rate": loss,
            "invalid": outcome.invalid_count,
            "verdicts": [
                {"task_id": v.task_id, "order": v.presentation_order, "winner": v.winner}
                for v in outcome.verdicts
            ],
        }
    else:
        block["pairwise"] = None
    block["punchline"] = _punchline_block(config)
    return block


def _punchline_block(config: ExperimentConfig) -> dict:
    if not config.annotations or not os.path.exists(config.annotations):
        return {"status": "pending"}
    records = read_annotation_export(config.annotations)
    annotations = punchline_annotations_from_records(records)
    if not annotations:
        return {"status": "pending"}
    resolved = resolve_all_majorities(annotations)
    if not resolved:
        return {"status": "pending"}
    ratios = mention_ratios(list(resolved.values()))
    return {
        "status": "complete",
        "n_tasks": len(resolved),
        "mention_ratio_pun_word": ratios[0],
        "mention_ratio_alt_word": ratios[1],
        "mention_ratio_pun_sense": ratios[2],
        "mention_ratio_alt_sense": ratios[3],
    }


# --- generation ------------------------------------------------------------------


def _generate_sentence(spec: prompts.PromptSpec, params: prompts.SamplingParams,
                       backend: BackendConfig) -> tuple[Optional[str], int]:
    """One completion with a single re-ask on unparseable output."""
    exchange = gateway.complete(spec, params, backend)
    sentence = gateway.parse_sentence(exchange.raw)
    if sentence is INVALID:
        exchange = gateway.complete(spec, params, backend, attempt=1)
        sentence = gateway.parse_sentence(exchange.raw)
    if sentence is INVALID:
        return None, 1
    return sentence, 0


def acquire_synonyms(experiment: Experiment, entries: list[PunEntry]) -> dict[str, Optional[tuple[str, str]]]:
    """Sense synonyms for hom entries, used as surprise-metric surrogates."""
    config = experiment.config
    params = prompts.SamplingParams.for_task("synonym", config.max_tokens)
    out: dict[str, Optional[tuple[str, str]]] = {}
    homs = [e for e in entries if e.pun_type == "hom"]
    specs = [prompts.render_synonym(e) for e in homs]
    exchanges = gateway.complete_many(specs, params, config.synonym_backend)
    for entry, exchange in zip(homs, exchanges):
        parsed = gateway.parse_synonyms(exchange.raw)
        out[entry.id] = None if parsed is INVALID else parsed
    return out


def run_generation(experiment: Experiment) -> dict:
    """Free/constrained generation, non-pun baseline, human row, full metrics."""
    config = experiment.config
    entries = [e for e in experiment.test_entries() if e.is_pun()]
    if not entries:
        raise RunnerError("no pun entries in the test split")
    synonyms = acquire_synonyms(experiment, entries)
    excluded_synonyms = sorted(eid for eid, syn in synonyms.items() if syn is None)

    gen_params = prompts.SamplingParams.for_task("generation-free", config.max_tokens)
    nonpun_params = prompts.SamplingParams.for_task("nonpun-generation", config.max_tokens)

    rows = []
    records = []
    invalid_counts = {"free": 0, "constrained": 0, "nonpun": 0}

    def effective_pair(entry: PunEntry):
        return substitute_synonyms(entry, synonyms.get(entry.id))

    def score(record: GenerationRecord, keywords, human_text):
        return score_record(record, experiment.embeddings, experiment.ngram,
                            keywords=keywords, human_text=human_text,
                            d=config.surprise_window, rho=config.focus_prior,
                            temperature=config.softmax_temperature)

    for entry in entries:
        pair = entry.pair
        eff = effective_pair(entry)
        human_record = GenerationRecord(
            entry_id=entry.id, sentence=entry.text, mode="free", source="human",
            pair=pair, pun_type=entry.pun_type, effective_pair=eff)
        rows.append(score(human_record, None, None))
        records.append(human_record)

        for mode in config.generation_modes:
            keywords = list(entry.keywords or ()) if mode == "constrained" else None
            if mode == "constrained" and not keywords:
                continue
            spec = prompts.render_generation(pair, keywords, source_entry=entry)
            sentence, invalid = _generate_sentence(spec, gen_params, config.subject_backend)
            invalid_counts[mode] += invalid
            if sentence is None:
                continue
            record = GenerationRecord(
                entry_id=entry.id, sentence=sentence, mode=mode, source="llm",
                pair=pair, pun_type=entry.pun_type, effective_pair=eff)
            rows.append(score(record, keywords, entry.text))
            records.append(record)

        if config.nonpun_baseline:
            spec = prompts.render_nonpun(pair.pun_word, pair.pun_sense)
            sentence, invalid = _generate_sentence(spec, nonpun_params,
                                                   config.baseline_backend)
            invalid_counts["nonpun"] += invalid
            if sentence is not None:
                record = GenerationRecord(
                    entry_id=entry.id, sentence=sentence, mode="free",
                    source="nonpun-baseline", pair=pair, pun_type=entry.pun_type,
                    effective_pair=eff)
                rows.append(score(record, None, None))
                records.append(record)

    rows = _apply_generation_annotations(rows, config)
    error_labels = None
    if config.annotations and os.path.exists(config.annotations):
        error_labels = error_label_frequencies(
            read_annotation_export(config.annotations))

    sections = {}
    for section, match in (
        ("human", lambda r: r.source == "human"),
        ("llm_free", lambda r: r.source == "llm" and r.mode == "free"),
        ("llm_constrained", lambda r: r.source == "llm" and r.mode == "constrained"),
        ("nonpun_baseline", lambda r: r.source == "nonpun-baseline"),
    ):
        selected = [r for r in rows if match(r)]
        sections[section] = _aggregate_dict(selected) if selected else None

    return {
        "sections": sections,
        "rows": [_row_dict(r) for r in sorted(rows, key=lambda r: (r.entry_id, r.source, r.mode))],
        "invalid_counts": invalid_counts,
        "synonym_exclusions": excluded_synonyms,
        "error_label_counts": error_labels,
        "sentences": [
            {"entry_id": rec.entry_id, "source": rec.source, "mode": rec.mode,
             "sentence": rec.sentence}
            for rec in sorted(records, key=lambda r: (r.entry_id, r.source, r.mode))
        ],
    }


def generation_task_id(source: str, mode: str, entry_id: str) -> str:
    return f"gen:{source}:{mode}:{entry_id}"


def _apply_generation_annotations(rows, config: ExperimentConfig):
    """Attach success/funniness from the annotation export, then strictness."""
    if not config.annotations or not os.path.exists(config.annotations):
        return rows
    judgments: dict[str, list[dict]] = {}
    for rec in read_annotation_export(config.annotations):
        if rec.get("kind") != "generation-judgment":
            continue
        judgments.setdefault(rec["task_id"], []).append(rec["payload"])
    if not judgments:
        return rows
    out = []
    for row in rows:
        tid = generation_task_id(row.source, row.mode, row.entry_id)
        payloads = judgments.get(tid)
        if not payloads:
            out.append(row)
            continue
        success_votes = [bool(p["success"]) for p in payloads]
        success = sum(success_votes) * 2 > len(success_votes)
        funniness = round(sum(int(p["funniness"]) for p in payloads) / len(payloads))
        strict = None
        if row.overlap is not None:
            strict = strict_success(success, row.overlap)
        elif row.source == "human":
            strict = success  # the reference text is original by definition
        out.append(replace(row, success=success, funniness=funniness,
                           strict_success=strict))
    return out


def _aggregate_dict(rows) -> dict:
    agg = aggregate(rows)
    return {
        "n": agg.n,
        "ambiguity": agg.ambiguity,
        "distinctiveness": agg.distinctiveness,
        "surprise": agg.surprise,
        "surprise_with_sentinels": agg.surprise_with_sentinels,
        "surprise_sentinel_rate": agg.surprise_sentinel_rate,
        "unusualness": agg.unusualness,
        "one_pun_word_rate": agg.one_pun_word_rate,
        "lazy_rate": agg.lazy_rate,
        "incorporation": agg.incorporation,
        "overlap": agg.overlap,
        "success_rate": agg.success_rate,
        "funniness": agg.funniness,
        "strict_success_rate": agg.strict_success_rate,
    }


def _row_dict(row) -> dict:
    data = {
        "entry_id": row.entry_id,
        "source": row.source,
        "mode": row.mode,
        "ambiguity": row.ambiguity,
        "distinctiveness": row.distinctiveness,
        "unusualness": row.unusualness,
        "wp_count": row.wp_count,
        "wa_count": row.wa_count,
        "one_pun_word": row.one_pun_word,
        "lazy": row.lazy,
        "incorporation": row.incorporation,
        "overlap": row.overlap,
        "success": row.success,
        "funniness": row.funniness,
        "strict_success": row.strict_success,
    }
    if row.surprise is not None:
        data["surprise"] = {
            "s_local": row.surprise.s_local,
            "s_global": row.surprise.s_global,
            "s_ratio": row.surprise.s_ratio,
            "window": row.surprise.window,
        }
    else:
        data["surprise"] = None
    return data


# --- whole experiment -------------------------------------------------------------


def run_all(config: ExperimentConfig, tasks: tuple[str, ...] = ("recognition",
                                                                "explanation",
                                                                "generation")) -> dict:
    experiment = Experiment.prepare(config)
    report: dict = {
        "metadata": {
            "dataset_kind": config.dataset_kind,
            "seed": config.seed,
            "template_version": prompts.template_version(),
            "subject_model": config.subject_backend.model_id,
            "judge_model": config.judge_backend.model_id,
            "synonym_model": config.synonym_backend.model_id,
            "n_test": len(experiment.test_entries()),
            "n_examples": len(experiment.split.example_ids),
        },
    }
    if "recognition" in tasks:
        report["recognition"] = run_recognition(experiment)
    if "explanation" in tasks:
        report["explanation"] = run_explanation(experiment)
    if "generation" in tasks:
        report["generation"] = run_generation(experiment)
    report["status"] = report_status(report)
    return report


def report_status(report: dict) -> str:
    """'complete' or 'partial' (human-annotation blocks still pending)."""
    explanation = report.get("explanation")
    if explanation and explanation.get("punchline", {}).get("status") == "pending":
        return "partial"
    generation = report.get("generation")
    if generation:
        sections = generation.get("sections", {})
        for data in sections.values():
            if data and data.get("success_rate") is None and data["n"] > 0:
                return "partial"
    return "complete"


# --- annotation task emission -------------------------------------------------------


def emit_annotation_tasks(report: dict, experiment: Experiment, path: str) -> int:
    """Write the annotation task file the annotation service serves."""
    by_id = experiment.corpus.by_id()
    tasks = []
    explanation = report.get("explanation") or {}
    for entry_id, model_explanation in sorted((explanation.get("explanations") or {}).items()):
        entry = by_id[entry_id]
        if entry.pair is None:
            continue
        tasks.append({
            "task_id": f"punch:{entry_id}",
            "kind": "punchline-check",
            "payload": {
                "pun_text": entry.text,
                "pun_word": entry.pair.pun_word,
                "alt_word": entry.pair.alt_word,
                "pun_sense": entry.pair.pun_sense,
                "alt_sense": entry.pair.alt_sense,
                "explanation": model_explanation,
            },
        })
        if entry.explanation and entry.explanation.strip() != model_explanation.strip():
            order = judge_order(f"pair:{entry_id}", experiment.config.seed)
            first, second = ((entry.explanation, model_explanation)
                             if order == "human-first"
                             else (model_explanation, entry.explanation))
            tasks.append({
                "task_id": f"pair:{entry_id}",
                "kind": "pairwise-explanation",
                "payload": {
                    "pun_text": entry.text,
                    "pun_word": entry.pair.pun_word,
                    "alt_word": entry.pair.alt_word,
                    "pun_sense": entry.pair.pun_sense,
                    "alt_sense": entry.pair.alt_sense,
                    "explanation_1": first,
                    "explanation_2": second,
                },
            })
    generation = report.get("generation") or {}
    for item in generation.get("sentences", []):
        entry = by_id.get(item["entry_id"])
        if entry is None or entry.pair is None:
            continue
        tasks.append({
            "task_id": generation_task_id(item["source"], item["mode"], item["entry_id"]),
            "kind": "generation-judgment",
            "payload": {
                "sentence": item["sentence"],
                "pun_word": entry.pair.pun_word,
                "alt_word": entry.pair.alt_word,
                "pun_sense": entry.pair.pun_sense,
                "alt_sense": entry.pair.alt_sense,
            },
        })
    with open(path, "w", encoding="utf-8") as handle:
        json.dump({"tasks": tasks}, handle, ensure_ascii=False, indent=2, sort_keys=True)
    return len(tasks)
