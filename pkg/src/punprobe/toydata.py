"""Deterministic toy world: clustered embeddings, an LM corpus, and fixtures.

Everything here is generated from fixed tables and a fixed seed, so tests
and demos that score the fixture always see the same numbers. The design is
simple: ten topic clusters in embedding space; each pun pair ties its two
senses to two different clusters; human pun sentences draw context words
from both clusters while the matched non-pun baselines stay inside one.
The LM corpus teaches the collocations that make the pun slot surprising.
"""

from __future__ import annotations

import numpy as np

from .corpus import Corpus, PunEntry, PunPair
from .wordmodels import EmbeddingTable, NGramModel

EMBEDDING_SEED = 202
EMBEDDING_DIM = 16

TOPIC_WORDS: dict[str, list[str]] = {
    "money": ["coin", "fee", "bank", "wage", "debt", "pay", "salary", "tax"],
    "sea": ["boat", "harbor", "sailor", "wave", "ship", "anchor", "port", "dock"],
    "music": ["tune", "violin", "chord", "melody", "concert", "drum", "song", "note"],
    "food": ["bread", "butter", "pie", "dough", "oven", "bake", "dinner", "cook"],
    "law": ["court", "judge", "trial", "verdict", "lawyer", "case", "jury", "appeal"],
    "body": ["arm", "bone", "muscle", "spine", "skin", "blood", "knee", "elbow"],
    "light": ["lamp", "beam", "glow", "shine", "bulb", "torch", "bright", "spark"],
    "war": ["army", "battle", "sword", "shield", "troop", "siege", "cannon", "fort"],
    "time": ["clock", "hour", "minute", "season", "calendar", "moment", "delay", "dawn"],
    "plant": ["tree", "leaf", "seed", "garden", "branch", "stem", "blossom", "soil"],
}

NEUTRAL_WORDS = [
    "stayed", "wanted", "near", "table", "chair", "paper", "town", "road",
    "house", "door", "window", "story", "name",
]

# (pun word, alternative word); senses get tied to two topic clusters
HOMOPHONE_PAIRS: list[tuple[str, str]] = [
    ("peace", "piece"), ("sole", "soul"), ("fare", "fair"), ("tide", "tied"),
    ("bass", "base"), ("knight", "night"), ("flour", "flower"), ("hare", "hair"),
    ("pear", "pair"), ("sale", "sail"), ("steak", "stake"), ("mail", "male"),
    ("meat", "meet"), ("pane", "pain"), ("plane", "plain"), ("rain", "reign"),
    ("root", "route"), ("tow", "toe"), ("waist", "waste"), ("weak", "week"),
    ("heel", "heal"), ("whole", "hole"), ("son", "sun"), ("tail", "tale"),
    ("beach", "beech"), ("cell", "sell"), ("cent", "scent"), ("coarse", "course"),
    ("dear", "deer"), ("dye", "die"), ("earn", "urn"), ("fir", "fur"),
    ("gait", "gate"), ("grate", "great"), ("hoarse", "horse"), ("idle", "idol"),
    ("loan", "lone"), ("mane", "main"), ("oar", "ore"), ("pail", "pale"),
    ("peak", "peek"), ("pedal", "peddle"), ("pole", "poll"), ("pray", "prey"),
    ("principal", "principle"), ("rap", "wrap"), ("role", "roll"), ("rose", "rows"),
    ("seam", "seem"), ("sight", "site"),
]

TOPIC_NAMES = list(TOPIC_WORDS)

HOM_WORDS = [
    ("temple", "a place of worship", "the flat side of the forehead"),
    ("scale", "a graduated series of musical notes", "a small plate on a fish"),
    ("palm", "the inner surface of the hand", "a tropical evergreen tree"),
    ("organ", "a wind instrument with pipes", "a functional part of the body"),
]


def pair_topics(index: int) -> tuple[str, str]:
    """Deterministic distinct topic pair for fixture row `index`."""
    t1 = TOPIC_NAMES[index % 10]
    t2 = TOPIC_NAMES[(index + 3 + index // 10) % 10]
    if t1 == t2:
        t2 = TOPIC_NAMES[(index + 4) % 10]
    return t1, t2


def fixture_pairs() -> list[PunPair]:
    pairs = []
    for i, (w_p, w_a) in enumerate(HOMOPHONE_PAIRS):
        t1, t2 = pair_topics(i)
        a = TOPIC_WORDS[t1]
        b = TOPIC_WORDS[t2]
        pairs.append(PunPair(
            pun_word=w_p,
            alt_word=w_a,
            pun_sense=f"the {t1} reading, as in {a[4]} and {a[5]}",
            alt_sense=f"the {t2} reading, as in {b[4]} and {b[5]}",
        ))
    return pairs


def build_embeddings(dim: int = EMBEDDING_DIM, seed: int = EMBEDDING_SEED) -> EmbeddingTable:
    """Clustered vectors: one axis per topic, neutrals nearly orthogonal."""
    rng = np.random.default_rng(seed)
    vectors: dict[str, np.ndarray] = {}
    axis = {name: i for i, name in enumerate(TOPIC_NAMES)}

    def topic_vector(topic: str) -> np.ndarray:
        v = np.zeros(dim)
        v[axis[topic]] = 1.0
        return v + rng.normal(0.0, 0.12, dim)

    for topic, words in TOPIC_WORDS.items():
        for word in words:
            vectors[word] = topic_vector(topic)
    for word in NEUTRAL_WORDS:
        v = rng.normal(0.0, 1.0, dim)
        v[: len(TOPIC_NAMES)] *= 0.05
        vectors[word] = v
    for i, (w_p, w_a) in enumerate(HOMOPHONE_PAIRS):
        t1, t2 = pair_topics(i)
        mix = np.zeros(dim)
        mix[axis[t1]] = 1.0
        mix[axis[t2]] = 1.0
        vectors[w_p] = mix + rng.normal(0.0, 0.12, dim)
        vectors[w_a] = topic_vector(t2)
    for word, _, _ in HOM_WORDS:
        mix = np.zeros(dim)
        mix[axis["war"]] = 1.0
        mix[axis["body"]] = 1.0
        vectors[word] = mix + rng.normal(0.0, 0.12, dim)
    return EmbeddingTable(vectors)


def pun_sentence(index: int) -> str:
    w_p = HOMOPHONE_PAIRS[index][0]
    t1, t2 = pair_topics(index)
    a = TOPIC_WORDS[t1]
    b = TOPIC_WORDS[t2]
    return (f"The {a[0]} and the {a[1]} stayed while "
            f"the {b[1]} wanted the {b[0]} {w_p}.")


def nonpun_sentence(index: int) -> str:
    w_p = HOMOPHONE_PAIRS[index][0]
    t1, _ = pair_topics(index)
    a = TOPIC_WORDS[t1]
    n1 = NEUTRAL_WORDS[3 + index % 9]
    n2 = NEUTRAL_WORDS[3 + (index + 4) % 9]
    return f"The {a[2]} {w_p} stayed near the {n1} and the {n2}."


def fixture_keywords(index: int) -> tuple[str, str]:
    t1, t2 = pair_topics(index)
    return (TOPIC_WORDS[t1][0], TOPIC_WORDS[t2][0])


def build_lm_text() -> str:
    """Training text: collocation patterns per pair plus flat filler lines."""
    lines = []
    for i, (w_p, w_a) in enumerate(HOMOPHONE_PAIRS):
        t1, t2 = pair_topics(i)
        a = TOPIC_WORDS[t1]
        b = TOPIC_WORDS[t2]
        lines.extend([f"the {b[0]} {w_a} stayed with the {b[1]}"] * 3)
        lines.extend([f"the {a[2]} {w_p} stayed near the {a[3]}"] * 2)
    for topic_words in TOPIC_WORDS.values():
        for word in topic_words:
            lines.append(f"the {word} was there")
    for word in NEUTRAL_WORDS:
        lines.append(f"the {word} was there")
    for word, sense_a, sense_b in HOM_WORDS:
        lines.extend([f"the old {word} stood on the hill"] * 2)
    return "\n".join(lines) + "\n"


def build_lm(order: int = 3, add_k: float = 0.01) -> NGramModel:
    return NGramModel.train_text(build_lm_text(), order=order, add_k=add_k)


def build_fixture_entries() -> list[PunEntry]:
    """Fifty het pun entries with pairs, explanations, and keywords."""
    entries = []
    for i, pair in enumerate(fixture_pairs()):
        entries.append(PunEntry(
            id=f"toy_het_{i:02d}",
            text=pun_sentence(i),
            label="pun",
            pun_type="het",
            pair=pair,
            explanation=(f"The word '{pair.pun_word}' plays on '{pair.alt_word}': "
                         f"the sentence supports {pair.pun_sense} while the nearby "
                         f"words also evoke {pair.alt_sense}."),
            keywords=fixture_keywords(i),
        ))
    return entries


def build_nonpun_baselines() -> dict[str, str]:
    """Matched non-pun sentence per fixture entry, keyed by entry id."""
    return {f"toy_het_{i:02d}": nonpun_sentence(i) for i in range(len(HOMOPHONE_PAIRS))}


def _hom_entry(index: int, word: str, sense_a: str, sense_b: str) -> PunEntry:
    return PunEntry(
        id=f"toy_hom_{index:02d}",
        text=f"The army and the spine stayed while the old {word} stood apart.",
        label="pun",
        pun_type="hom",
        pair=PunPair(word, word, sense_a, sense_b),
        explanation=f"The word '{word}' carries both meanings at once.",
        keywords=("army", "spine"),
    )


NONPUN_SENTENCES = [
    "The table and the chair stayed near the door.",
    "The paper on the window told a story.",
    "The town road passed the house at dawn.",
    "A name on the door is not a story.",
    "The chair near the window wanted paint.",
    "The house at the end of the road stayed quiet.",
    "The story in the paper was about the town.",
    "The door of the house swung near the table.",
    "The window looked out over the road.",
    "Paper names fade on old doors.",
]


def build_mock_corpus(n_het: int = 8, n_hom: int = 2, n_non: int = 8) -> Corpus:
    """Small mixed corpus for end-to-end runs against mock backends."""
    if n_het > len(HOMOPHONE_PAIRS) or n_hom > len(HOM_WORDS) or n_non > len(NONPUN_SENTENCES):
        raise ValueError("mock corpus request exceeds the fixture tables")
    entries = build_fixture_entries()[:n_het]
    for i in range(n_hom):
        word, sense_a, sense_b = HOM_WORDS[i]
        entries.append(_hom_entry(i, word, sense_a, sense_b))
    for i in range(n_non):
        entries.append(PunEntry(id=f"toy_non_{i:02d}", text=NONPUN_SENTENCES[i],
                                label="non-pun", pun_type="none"))
    return Corpus(entries=tuple(entries), provenance="toydata")
