"""Generation metrics: ambiguity, distinctiveness, surprise, unusualness,
incorporation rates, lazy-pattern detection, overlap, and strict success.

The ambiguity/distinctiveness machinery follows the focus-word model: each
context word is either on-topic (focused) for a meaning or off-topic, with
a Bernoulli(rho) focus prior. The posterior over the two meanings factorizes
over context words, so no explicit sum over focus vectors is needed; the
test suite checks that factorization against exhaustive enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .corpus import PunEntry, PunPair
from .textproc import DEFAULT_LEMMAS, STOPWORDS, LemmaDict, tokenize
from .wordmodels import (
    EmbeddingTable,
    NGramModel,
    VocabularyError,
    meaning_vector,
    relatedness_distribution,
    seq_logprob,
    unigram_prob,
)

S_GLOBAL_GUARD = 1e-12


class GenerationMetricError(ValueError):
    pass


# --- low-level probability helpers (shared with the test oracles) ----------


def posterior_from_probs(p_m1: Sequence[float], p_m2: Sequence[float],
                         p_unfocused: Sequence[float], rho: float,
                         prior: float = 0.5) -> tuple[float, float]:
    """Meaning posterior from per-word focused/unfocused probabilities.

    Computes P(m | w) ∝ P(m) * prod_i [rho * P(w_i|m, focused) +
    (1-rho) * P(w_i|unfocused)], which equals the exhaustive sum over all
    2^n focus vectors.
    """
    l1 = math.log(prior)
    l2 = math.log(1.0 - prior)
    for f1, f2, u in zip(p_m1, p_m2, p_unfocused):
        l1 += math.log(rho * f1 + (1.0 - rho) * u)
        l2 += math.log(rho * f2 + (1.0 - rho) * u)
    top = max(l1, l2)
    e1, e2 = math.exp(l1 - top), math.exp(l2 - top)
    return e1 / (e1 + e2), e2 / (e1 + e2)


def focus_q(p_focused: float, p_unfocused: float, rho: float) -> float:
    """Posterior that one context word is focused under one meaning."""
    num = rho * p_focused
    return num / (num + (1.0 - rho) * p_unfocused)


def binary_entropy(p: float) -> float:
    """Base-2 entropy of (p, 1-p); zero terms contribute zero."""
    total = 0.0
    for x in (p, 1.0 - p):
        if x > 0.0:
            total -= x * math.log2(x)
    return total


def bernoulli_sym_kl(q_a: float, q_b: float) -> float:
    """Symmetrized KL (base 2) between Bernoulli(q_a) and Bernoulli(q_b)."""
    def kl(x: float, y: float) -> float:
        total = 0.0
        for px, py in ((x, y), (1.0 - x, 1.0 - y)):
            if px > 0.0:
                total += px * math.log2(px / py)
        return total

    return kl(q_a, q_b) + kl(q_b, q_a)


def distinctiveness_from_probs(p_m1: Sequence[float], p_m2: Sequence[float],
                               p_unfocused: Sequence[float], rho: float) -> float:
    """Sum of per-word Bernoulli symmetrized KLs between the focus posteriors.

    Equals the symmetrized KL between the two product distributions over
    whole focus vectors, because KL decomposes over independent components.
    """
    total = 0.0
    for f1, f2, u in zip(p_m1, p_m2, p_unfocused):
        total += bernoulli_sym_kl(focus_q(f1, u, rho), focus_q(f2, u, rho))
    return total


# --- meaning model ----------------------------------------------------------


@dataclass(frozen=True)
class MeaningModel:
    """Two sense directions plus the probability machinery around them."""

    embeddings: EmbeddingTable
    ngram: NGramModel
    m1: np.ndarray
    m2: np.ndarray
    dist1: np.ndarray
    dist2: np.ndarray
    rho: float = 0.5
    prior: float = 0.5
    temperature: float = 0.1

    @classmethod
    def for_pair(cls, pair: PunPair, embeddings: EmbeddingTable, ngram: NGramModel,
                 rho: float = 0.5, prior: float = 0.5,
                 temperature: float = 0.1) -> "MeaningModel":
        if not 0.0 < rho < 1.0:
            raise GenerationMetricError("rho must lie in (0, 1)")
        if not 0.0 < prior < 1.0:
            raise GenerationMetricError("meaning prior must lie in (0, 1)")
        m1 = meaning_vector(pair.pun_sense, pair.pun_word, embeddings)
        m2 = meaning_vector(pair.alt_sense, pair.alt_word, embeddings)
        dist1 = relatedness_distribution(m1, embeddings, temperature)
        dist2 = relatedness_distribution(m2, embeddings, temperature)
        return cls(embeddings=embeddings, ngram=ngram, m1=m1, m2=m2,
                   dist1=dist1, dist2=dist2, rho=rho, prior=prior,
                   temperature=temperature)

    def focused_prob(self, word: str, meaning: int) -> float:
        """P(word | meaning, focused); out-of-vocabulary words fall back to
        their unigram probability in both branches, making them uninformative."""
        dist = self.dist1 if meaning == 1 else self.dist2
        if word in self.embeddings:
            return float(dist[self.embeddings.index(word)])
        return unigram_prob(word, self.ngram)

    def unfocused_prob(self, word: str) -> float:
        return unigram_prob(word, self.ngram)

    def word_probs(self, context_tokens: Sequence[str]) -> tuple[list[float], list[float], list[float]]:
        p1 = [self.focused_prob(w, 1) for w in context_tokens]
        p2 = [self.focused_prob(w, 2) for w in context_tokens]
        p0 = [self.unfocused_prob(w) for w in context_tokens]
        return p1, p2, p0


def context_words(sentence: str, pair: PunPair, lemmas: LemmaDict = DEFAULT_LEMMAS,
                  stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Sentence tokens minus stopwords and all pun/alternative word lemmas."""
    excluded = {lemmas.lemmatize(pair.pun_word), lemmas.lemmatize(pair.alt_word)}
    out = []
    for tok in tokenize(sentence):
        if tok in stopwords:
            continue
        if lemmas.lemmatize(tok) in excluded:
            continue
        out.append(tok)
    return out


def meaning_posterior(context_tokens: Sequence[str], model: MeaningModel) -> tuple[float, float]:
    """(P(m1 | context), P(m2 | context)); the prior when the context is empty."""
    p1, p2, p0 = model.word_probs(context_tokens)
    return posterior_from_probs(p1, p2, p0, model.rho, model.prior)


def ambiguity(sentence: str, pair: PunPair, model: MeaningModel,
              lemmas: LemmaDict = DEFAULT_LEMMAS) -> float:
    """Base-2 entropy of the meaning posterior; 1.0 means perfectly balanced."""
    posterior = meaning_posterior(context_words(sentence, pair, lemmas), model)
    return binary_entropy(posterior[0])


def focus_posterior(context_word: str, meaning: int, model: MeaningModel) -> float:
    """q = P(focused | word, meaning) in (0, 1)."""
    return focus_q(model.focused_prob(context_word, meaning),
                   model.unfocused_prob(context_word), model.rho)


def distinctiveness(sentence: str, pair: PunPair, model: MeaningModel,
                    lemmas: LemmaDict = DEFAULT_LEMMAS) -> float:
    """Symmetrized KL between the focus distributions of the two meanings."""
    tokens = context_words(sentence, pair, lemmas)
    p1, p2, p0 = model.word_probs(tokens)
    return distinctiveness_from_probs(p1, p2, p0, model.rho)


# --- surprise and unusualness ----------------------------------------------


@dataclass(frozen=True)
class SurpriseBreakdown:
    s_local: float
    s_global: float
    s_ratio: float
    window: int

    def is_sentinel(self) -> bool:
        return self.s_ratio == -1.0


def _span_logratio(tokens: list[str], slot: int, pun_word: str, alt_word: str,
                   ngram: NGramModel) -> float:
    """log p(span with alt) - log p(span with pun): positive when the
    alternative word is the expected one."""
    with_pun = list(tokens)
    with_pun[slot] = pun_word
    with_alt = list(tokens)
    with_alt[slot] = alt_word
    return seq_logprob(with_alt, ngram) - seq_logprob(with_pun, ngram)


def surprise(tokens: Sequence[str], pun_index: int, pair: PunPair, d: int,
             ngram: NGramModel) -> SurpriseBreakdown:
    """Local and global surprisal of the pun word versus the alternative.

    The probability of a word in context is realized as the joint n-gram
    probability of the surrounding token span with that word at the pun
    slot; the local span keeps d tokens each side, the global span is the
    whole sentence. The ratio is -1 (sentinel) when either surprisal is
    negative or the global surprisal is indistinguishable from zero.
    """
    tokens = [t.casefold() for t in tokens]
    if not 0 <= pun_index < len(tokens):
        raise GenerationMetricError(f"pun index {pun_index} out of range")
    if d < 1:
        raise GenerationMetricError("window must be >= 1")
    pun_word = pair.pun_word.casefold()
    alt_word = pair.alt_word.casefold()
    start = max(0, pun_index - d)
    stop = min(len(tokens), pun_index + d + 1)
    s_local = _span_logratio(tokens[start:stop], pun_index - start,
                             pun_word, alt_word, ngram)
    s_global = _span_logratio(tokens, pun_index, pun_word, alt_word, ngram)
    if s_local < 0.0 or s_global < 0.0 or abs(s_global) < S_GLOBAL_GUARD:
        ratio = -1.0
    else:
        ratio = s_local / s_global
    return SurpriseBreakdown(s_local=s_local, s_global=s_global, s_ratio=ratio, window=d)


def unusualness(tokens: Sequence[str], ngram: NGramModel) -> float:
    """Per-token log ratio of the joint probability to the unigram product,
    negated; exactly zero under an order-1 model."""
    tokens = [t.casefold() for t in tokens]
    if not tokens:
        raise GenerationMetricError("cannot score an empty sentence")
    joint = seq_logprob(tokens, ngram)
    independent = sum(math.log(unigram_prob(t, ngram)) for t in tokens)
    return -(joint - independent) / len(tokens)


def find_pun_index(tokens: Sequence[str], pun_word: str,
                   lemmas: LemmaDict = DEFAULT_LEMMAS) -> Optional[int]:
    """Index of the first token whose lemma matches the pun word's lemma."""
    target = lemmas.lemmatize(pun_word)
    for i, tok in enumerate(tokens):
        if lemmas.lemmatize(tok) == target:
            return i
    return None


# --- synonym substitution ----------------------------------------------------


def substitute_synonyms(entry: PunEntry, synonyms) -> Optional[PunPair]:
    """Effective pair for the surprise metric.

    Het entries pass through unchanged. Hom entries get the two sense
    synonyms as pun/alternative surrogates; missing, unparsed, or equal
    synonyms exclude the entry (None). Meaning vectors for ambiguity and
    distinctiveness keep using the original glosses either way.
    """
    if entry.pair is None:
        raise GenerationMetricError(f"entry {entry.id} has no pair")
    if entry.pun_type != "hom":
        return entry.pair
    if not isinstance(synonyms, (tuple, list)) or len(synonyms) != 2:
        return None
    first, second = (s.strip() for s in synonyms)
    if not first or not second or first.casefold() == second.casefold():
        return None
    return replace(entry.pair, pun_word=first, alt_word=second)


# --- incorporation, overlap, success ----------------------------------------


@dataclass(frozen=True)
class GenerationRecord:
    entry_id: str
    sentence: str
    mode: str  # "free" | "constrained"
    source: str  # "llm" | "human" | "nonpun-baseline"
    pair: PunPair
    pun_type: str
    effective_pair: Optional[PunPair] = None

    def surprise_pair(self) -> Optional[PunPair]:
        if self.effective_pair is not None:
            return self.effective_pair
        return None if self.pair.is_hom() else self.pair


def one_pun_word_stats(record: GenerationRecord,
                       lemmas: LemmaDict = DEFAULT_LEMMAS) -> tuple[int, int, bool, bool]:
    """(pun-word count, alt-word count, one-pun-word flag, lazy flag).

    Counts are over lemmatized tokens of the sentence against the original
    pair. For het records the flag also requires the alternative word to be
    absent; lazy means a repeated pun word, or both words present for het.
    """
    token_lemmas = lemmas.lemmas(tokenize(record.sentence))
    wp = lemmas.lemmatize(record.pair.pun_word)
    wa = lemmas.lemmatize(record.pair.alt_word)
    wp_count = sum(1 for t in token_lemmas if t == wp)
    wa_count = wp_count if wp == wa else sum(1 for t in token_lemmas if t == wa)
    if record.pun_type == "het" and wp != wa:
        one = wp_count == 1 and wa_count == 0
        lazy = wp_count >= 2 or (wp_count >= 1 and wa_count >= 1)
    else:
        one = wp_count == 1
        lazy = wp_count >= 2
    return wp_count, wa_count, one, lazy


def _keyword_lemma_sets(keywords: Sequence[str], lemmas: LemmaDict,
                        stopwords: frozenset[str]) -> list[tuple[str, set[str]]]:
    out = []
    for keyword in keywords:
        all_lemmas = set(lemmas.lemmas(tokenize(keyword)))
        content = {lem for lem in all_lemmas if lem not in stopwords}
        out.append((keyword, content or all_lemmas))
    return out


def context_incorporation(record: GenerationRecord, keywords: Sequence[str],
                          lemmas: LemmaDict = DEFAULT_LEMMAS,
                          stopwords: frozenset[str] = STOPWORDS) -> float:
    """Fraction of keywords whose content lemmas all appear in the sentence."""
    if not keywords:
        raise GenerationMetricError("no keywords to check")
    sentence_lemmas = set(lemmas.lemmas(tokenize(record.sentence)))
    hit = 0
    for _, content in _keyword_lemma_sets(keywords, lemmas, stopwords):
        if content <= sentence_lemmas:
            hit += 1
    return hit / len(keywords)


def overlap(generated: str, human: str, pair: PunPair,
            keywords: Sequence[str] = (),
            lemmas: LemmaDict = DEFAULT_LEMMAS) -> float:
    """Jaccard similarity of the refined lemma sets of the two texts.

    Both sets drop every lemma of the pun word, the alternative word, and
    the prompt keywords; stopwords stay in. An empty union scores 0.
    """
    removed = {lemmas.lemmatize(pair.pun_word), lemmas.lemmatize(pair.alt_word)}
    for keyword in keywords:
        removed.update(lemmas.lemmas(tokenize(keyword)))
    gen_set = set(lemmas.lemmas(tokenize(generated))) - removed
    hum_set = set(lemmas.lemmas(tokenize(human))) - removed
    union = gen_set | hum_set
    if not union:
        return 0.0
    return len(gen_set & hum_set) / len(union)


def strict_success(success: bool, overlap_value: float) -> bool:
    """Success combined with originality: overlap strictly below 0.5."""
    return bool(success) and overlap_value < 0.5


# --- per-record rows and aggregation -----------------------------------------


@dataclass(frozen=True)
class GenMetricsRow:
    entry_id: str
    source: str
    mode: str
    ambiguity: Optional[float] = None
    distinctiveness: Optional[float] = None
    surprise: Optional[SurpriseBreakdown] = None
    unusualness: Optional[float] = None
    wp_count: int = 0
    wa_count: int = 0
    one_pun_word: bool = False
    lazy: bool = False
    incorporation: Optional[float] = None
    overlap: Optional[float] = None
    success: Optional[bool] = None
    funniness: Optional[int] = None
    strict_success: Optional[bool] = None

    def __post_init__(self):
        if self.funniness is not None and self.funniness not in (1, 2, 3, 4, 5):
            raise GenerationMetricError(f"funniness must be 1..5, got {self.funniness}")


@dataclass(frozen=True)
class AggregateRow:
    n: int
    ambiguity: Optional[float]
    distinctiveness: Optional[float]
    surprise: Optional[float]
    surprise_with_sentinels: Optional[float]
    surprise_sentinel_rate: Optional[float]
    unusualness: Optional[float]
    one_pun_word_rate: float
    lazy_rate: float
    incorporation: Optional[float]
    overlap: Optional[float]
    success_rate: Optional[float]
    funniness: Optional[float]
    strict_success_rate: Optional[float]


def _mean(values: list[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


def aggregate(rows: Sequence[GenMetricsRow], trim_fraction: float = 0.02) -> AggregateRow:
    """Column means; the surprise ratio mean drops its top trim_fraction.

    Sentinel (-1) surprise ratios are excluded from the trimmed mean and
    reported as a separate rate; a second mean that keeps them is reported
    for comparisons against reference tables computed that way.
    """
    if not rows:
        raise GenerationMetricError("nothing to aggregate")
    ratios = [r.surprise.s_ratio for r in rows if r.surprise is not None]
    finite = sorted(v for v in ratios if v != -1.0)
    sentinels = len(ratios) - len(finite)
    drop = math.floor(len(finite) * trim_fraction)
    trimmed = finite[:len(finite) - drop] if drop else finite
    with_sentinels = trimmed + [-1.0] * sentinels
    return AggregateRow(
        n=len(rows),
        ambiguity=_mean([r.ambiguity for r in rows if r.ambiguity is not None]),
        distinctiveness=_mean([r.distinctiveness for r in rows
                               if r.distinctiveness is not None]),
        surprise=_mean(trimmed),
        surprise_with_sentinels=_mean(with_sentinels),
        surprise_sentinel_rate=(sentinels / len(ratios)) if ratios else None,
        unusualness=_mean([r.unusualness for r in rows if r.unusualness is not None]),
        one_pun_word_rate=sum(1 for r in rows if r.one_pun_word) / len(rows),
        lazy_rate=sum(1 for r in rows if r.lazy) / len(rows),
        incorporation=_mean([r.incorporation for r in rows if r.incorporation is not None]),
        overlap=_mean([r.overlap for r in rows if r.overlap is not None]),
        success_rate=_mean([1.0 if r.success else 0.0 for r in rows
                            if r.success is not None]),
        funniness=_mean([float(r.funniness) for r in rows if r.funniness is not None]),
        strict_success_rate=_mean([1.0 if r.strict_success else 0.0 for r in rows
                                   if r.strict_success is not None]),
    )


def score_record(record: GenerationRecord, embeddings: EmbeddingTable,
                 ngram: NGramModel, keywords: Optional[Sequence[str]] = None,
                 human_text: Optional[str] = None, d: int = 2, rho: float = 0.5,
                 temperature: float = 0.1,
                 lemmas: LemmaDict = DEFAULT_LEMMAS) -> GenMetricsRow:
    """Compute every applicable metric for one generation record."""
    tokens = tokenize(record.sentence)
    wp_count, wa_count, one, lazy = one_pun_word_stats(record, lemmas)

    amb = dist = None
    try:
        model = MeaningModel.for_pair(record.pair, embeddings, ngram,
                                      rho=rho, temperature=temperature)
        amb = ambiguity(record.sentence, record.pair, model, lemmas)
        dist = distinctiveness(record.sentence, record.pair, model, lemmas)
    except VocabularyError:  # vocabulary gaps exclude the row from A/D only
        pass

    breakdown = None
    surprise_pair = record.surprise_pair()
    if surprise_pair is not None and tokens:
        slot = find_pun_index(tokens, record.pair.pun_word, lemmas)
        if slot is not None:
            breakdown = surprise(tokens, slot, surprise_pair, d, ngram)

    unusual = unusualness(tokens, ngram) if tokens else None

    incorporation = None
    if record.mode == "constrained" and keywords:
        incorporation = context_incorporation(record, keywords, lemmas)

    overlap_value = None
    if human_text is not None and record.source != "human":
        overlap_value = overlap(record.sentence, human_text, record.pair,
                                keywords or (), lemmas)

    return GenMetricsRow(
        entry_id=record.entry_id,
        source=record.source,
        mode=record.mode,
        ambiguity=amb,
        distinctiveness=dist,
        surprise=breakdown,
        unusualness=unusual,
        wp_count=wp_count,
        wa_count=wa_count,
        one_pun_word=one,
        lazy=lazy,
        incorporation=incorporation,
        overlap=overlap_value,
    )
