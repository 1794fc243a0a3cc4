"""Word-probability machinery: embedding relatedness and an n-gram LM.

The embedding table provides cosine relatedness between words and
sense-meaning vectors; the n-gram model provides add-k smoothed joint and
unigram probabilities with backoff to shorter contexts. Both are immutable
after construction and safe to share across workers.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

from .textproc import STOPWORDS, tokenize


class VocabularyError(ValueError):
    """Raised when a word required for a computation has no vector."""


class EmbeddingTable:
    """Dense word vectors with case-folded lookup.

    The on-disk format is one word per line followed by its components,
    whitespace separated (the common plain-text vector format).
    """

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise ValueError("embedding table is empty")
        dims = {len(v) for v in vectors.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent vector dimensions: {sorted(dims)}")
        self.dimension = dims.pop()
        self._vectors = {w.casefold(): np.asarray(v, dtype=float) for w, v in vectors.items()}
        self.words = sorted(self._vectors)
        norms = np.array([np.linalg.norm(self._vectors[w]) for w in self.words])
        if np.any(norms == 0):
            raise ValueError("zero vector in embedding table")
        self._matrix = np.stack([self._vectors[w] for w in self.words]) / norms[:, None]
        self._index = {w: i for i, w in enumerate(self.words)}

    @classmethod
    def load(cls, path: str) -> "EmbeddingTable":
        vectors: dict[str, np.ndarray] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, 1):
                parts = line.split()
                if not parts:
                    continue
                word, comps = parts[0], parts[1:]
                if not comps:
                    raise ValueError(f"line {lineno}: no vector components")
                vectors[word] = np.array([float(c) for c in comps])
        return cls(vectors)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for word in self.words:
                comps = " ".join(repr(float(x)) for x in self._vectors[word])
                handle.write(f"{word} {comps}\n")

    def __contains__(self, word: str) -> bool:
        return word.casefold() in self._index

    def __len__(self) -> int:
        return len(self.words)

    def vector(self, word: str) -> np.ndarray:
        try:
            return self._vectors[word.casefold()]
        except KeyError:
            raise VocabularyError(f"word not in embedding vocabulary: {word!r}") from None

    def unit_vector(self, word: str) -> np.ndarray:
        return self._matrix[self.index(word)]

    def index(self, word: str) -> int:
        try:
            return self._index[word.casefold()]
        except KeyError:
            raise VocabularyError(f"word not in embedding vocabulary: {word!r}") from None

    def cosines(self, direction: np.ndarray) -> np.ndarray:
        """Cosine of every vocabulary word against a unit direction."""
        return self._matrix @ direction


def meaning_vector(sense_gloss: str, keyword: str, embeddings: EmbeddingTable) -> np.ndarray:
    """Unit vector for one sense: mean of the keyword and gloss content words.

    Stopwords in the gloss are skipped; out-of-vocabulary constituents are
    skipped too. At least one constituent must be in the vocabulary.
    """
    parts = []
    if keyword in embeddings:
        parts.append(embeddings.unit_vector(keyword))
    for tok in tokenize(sense_gloss):
        if tok in STOPWORDS:
            continue
        if tok in embeddings:
            parts.append(embeddings.unit_vector(tok))
    if not parts:
        raise VocabularyError(
            f"no in-vocabulary constituent for sense {sense_gloss!r} (keyword {keyword!r})"
        )
    mean = np.mean(parts, axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0:
        raise VocabularyError("constituent vectors cancel out; meaning vector undefined")
    return mean / norm


def relatedness_distribution(meaning_vec: np.ndarray, embeddings: EmbeddingTable,
                             temperature: float = 0.1) -> np.ndarray:
    """Softmax over the vocabulary of cosine(word, meaning) / temperature."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    logits = embeddings.cosines(meaning_vec) / temperature
    logits -= logits.max()
    ex = np.exp(logits)
    return ex / ex.sum()


def p_word_given_meaning(word: str, meaning_vec: np.ndarray, embeddings: EmbeddingTable,
                         temperature: float = 0.1) -> float:
    """Probability of one vocabulary word under the meaning softmax."""
    dist = relatedness_distribution(meaning_vec, embeddings, temperature)
    return float(dist[embeddings.index(word)])


@dataclass(frozen=True)
class NGramModel:
    """Add-k n-gram model with backoff to shorter contexts.

    Probabilities are normalized over the seen vocabulary plus a single
    unknown bucket, so every conditional distribution sums to one and every
    word (seen or not) gets strictly positive mass. A context that was never
    observed backs off to the next shorter context, down to the unigram.
    """

    order: int
    add_k: float
    vocabulary: frozenset[str]
    counts: dict[int, dict[tuple[str, ...], Counter]]
    context_totals: dict[int, dict[tuple[str, ...], int]]

    @classmethod
    def train(cls, sentences: list[list[str]], order: int = 3, add_k: float = 0.01) -> "NGramModel":
        if order < 1:
            raise ValueError("order must be >= 1")
        if add_k <= 0:
            raise ValueError("add_k must be positive")
        vocab: set[str] = set()
        counts: dict[int, dict[tuple[str, ...], Counter]] = {
            n: defaultdict(Counter) for n in range(order)
        }
        for sent in sentences:
            vocab.update(sent)
            for i, tok in enumerate(sent):
                for n in range(order):
                    if i - n < 0:
                        break
                    counts[n][tuple(sent[i - n:i])][tok] += 1
        totals = {
            n: {ctx: sum(c.values()) for ctx, c in ctx_counts.items()}
            for n, ctx_counts in counts.items()
        }
        frozen = {n: dict(ctx_counts) for n, ctx_counts in counts.items()}
        return cls(order=order, add_k=add_k, vocabulary=frozenset(vocab),
                   counts=frozen, context_totals=totals)

    @classmethod
    def train_text(cls, text: str, order: int = 3, add_k: float = 0.01) -> "NGramModel":
        """Train from plain text, one sentence per line."""
        sentences = [tokenize(line) for line in text.splitlines()]
        return cls.train([s for s in sentences if s], order=order, add_k=add_k)

    def _smoothed(self, context: tuple[str, ...], word: str) -> float:
        counter = self.counts[len(context)].get(context)
        total = self.context_totals[len(context)].get(context, 0)
        count = counter.get(word, 0) if counter is not None else 0
        universe = len(self.vocabulary) + 1  # seen types plus the unknown bucket
        return (count + self.add_k) / (total + self.add_k * universe)

    def cond_prob(self, word: str, context: tuple[str, ...] | list[str]) -> float:
        """P(word | context), backing off while the context is unseen."""
        ctx = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        while ctx and ctx not in self.counts[len(ctx)]:
            ctx = ctx[1:]
        return self._smoothed(ctx, word)


def unigram_prob(word: str, model: NGramModel) -> float:
    """Add-k smoothed relative frequency; positive even out of vocabulary."""
    return model.cond_prob(word, ())


def seq_logprob(tokens: list[str], model: NGramModel) -> float:
    """Natural-log joint probability of the token sequence under the model."""
    if not tokens:
        raise ValueError("cannot score an empty sequence")
    total = 0.0
    for i, tok in enumerate(tokens):
        context = tokens[max(0, i - (model.order - 1)):i]
        total += math.log(model.cond_prob(tok, context))
    return total
