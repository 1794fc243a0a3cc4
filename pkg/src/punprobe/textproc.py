"""Tokenization, lemmatization, and the shared stopword list.

Every metric in the toolkit funnels text through these helpers, so the
rules are deliberately simple and deterministic: case-folded alphanumeric
tokens, a dictionary-plus-suffix-rules lemmatizer, and a fixed stopword
resource. Consistency between the two sides of a comparison matters more
here than linguistic perfection.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)
_VOWELS = set("aeiouy")


def tokenize(text: str) -> list[str]:
    """Split text into case-folded word tokens, dropping punctuation.

    Apostrophized contractions split at the apostrophe ("don't" -> "don",
    "t"). Token order is preserved.
    """
    return _TOKEN_RE.findall(text.casefold())


def _read_resource(name: str) -> str:
    return resources.files("punprobe.resources").joinpath(name).read_text("utf-8")


def load_stopwords() -> frozenset[str]:
    words = set()
    for line in _read_resource("stopwords.txt").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


STOPWORDS = load_stopwords()


def _measure(stem: str) -> int:
    """Porter-style measure: number of vowel-consonant transitions."""
    m = 0
    prev_vowel = False
    for ch in stem:
        vowel = ch in _VOWELS
        if prev_vowel and not vowel:
            m += 1
        prev_vowel = vowel
    return m


def _ends_cvc(stem: str) -> bool:
    if len(stem) < 3:
        return False
    a, b, c = stem[-3], stem[-2], stem[-1]
    return a not in _VOWELS and b in _VOWELS and c not in _VOWELS and c not in "wxy"


def _tidy_stripped(stem: str) -> str:
    """Clean-up applied after removing 'ed'/'ing', Porter step-1b style."""
    if stem.endswith(("at", "bl", "iz")):
        return stem + "e"
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    if _measure(stem) == 1 and _ends_cvc(stem):
        return stem + "e"
    return stem


def _apply_suffix_rules(word: str) -> str:
    """Apply the first matching rewrite; returns the word unchanged if none fit."""
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies"):
        return word[:-3] + ("y" if len(word) >= 5 else "ie")
    if word.endswith(("ches", "shes", "xes", "zes", "oes")):
        return word[:-2]
    if word.endswith("ied"):
        return word[:-3] + ("y" if len(word) >= 5 else "ie")
    if word.endswith("ing") and len(word) >= 6:
        stem = word[:-3]
        if len(stem) >= 3 and _VOWELS.intersection(stem):
            return _tidy_stripped(stem)
        return word
    if word.endswith("ed") and len(word) >= 5:
        stem = word[:-2]
        if len(stem) >= 3 and _VOWELS.intersection(stem):
            return _tidy_stripped(stem)
        return word
    if word.endswith("s") and len(word) >= 4 and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    return word


def _parse_lemma_table(text: str) -> dict[str, str]:
    table: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"lemma table line must have two columns: {line!r}")
        table[parts[0].casefold()] = parts[1].casefold()
    return table


@dataclass(frozen=True)
class LemmaDict:
    """Explicit surface->lemma map with ordered suffix-rewrite fallbacks.

    lemmatize() is idempotent: outputs are iterated to a fixed point, and
    explicit-map targets are looked up again so chained irregulars resolve.
    """

    table: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | None = None) -> "LemmaDict":
        """Load the shipped table, or a user-supplied two-column file."""
        if path is None:
            text = _read_resource("lemmas.txt")
        else:
            with open(path, encoding="utf-8") as handle:
                text = handle.read()
        return cls(_parse_lemma_table(text))

    def lemmatize(self, token: str) -> str:
        word = token.casefold()
        for _ in range(5):
            nxt = self.table.get(word)
            if nxt is None:
                nxt = _apply_suffix_rules(word)
            if nxt == word:
                break
            word = nxt
        return word

    def lemmas(self, tokens: list[str]) -> list[str]:
        return [self.lemmatize(t) for t in tokens]


DEFAULT_LEMMAS = LemmaDict.load()


def lemmatize(token: str) -> str:
    """Lemmatize with the shipped dictionary."""
    return DEFAULT_LEMMAS.lemmatize(token)


def content_lemmas(text: str, lemmas: LemmaDict = DEFAULT_LEMMAS,
                   stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    """Lemmatized tokens of text with stopwords removed (surface or lemma)."""
    out = []
    for tok in tokenize(text):
        if tok in stopwords:
            continue
        lem = lemmas.lemmatize(tok)
        if lem in stopwords:
            continue
        out.append(lem)
    return out
