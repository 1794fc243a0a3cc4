"""Backend execution with caching, bounded parallelism, and tolerant parsing.

Backends are either an OpenAI-style HTTP chat endpoint or a deterministic
mock persona. Every exchange is cached under a digest of (model, sampling
params, rendered prompt, attempt); a cache hit never touches the network.
The parsers are total: they return a value or INVALID, never raise.
"""

from __future__ import annotations

import ast
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from hashlib import sha256
from string import Template
from typing import Optional, Sequence

import requests

from .prompts import PromptSpec, SamplingParams

log = logging.getLogger(__name__)

DEFAULT_API_KEY_VAR = "PUNPROBE_API_KEY"


class GatewayError(RuntimeError):
    pass


class TransportError(GatewayError):
    """Transport or protocol failure that survived the retry budget."""


class AuthenticationError(GatewayError):
    """Authentication failure; never retried."""


class Invalid:
    """Sentinel type for unparseable responses. Use the INVALID singleton."""

    _instance: Optional["Invalid"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INVALID"

    def __bool__(self) -> bool:
        return False


INVALID = Invalid()


# --- parsing ---------------------------------------------------------------


def _literal_object(raw: str, start: int) -> Optional[dict]:
    depth = 0
    for i in range(start, len(raw)):
        if raw[i] == "{":
            depth += 1
        elif raw[i] == "}":
            depth -= 1
            if depth == 0:
                try:
                    obj = ast.literal_eval(raw[start:i + 1])
                except (ValueError, SyntaxError):
                    return None
                return obj if isinstance(obj, dict) else None
    return None


def iter_json_objects(raw: str):
    """Yield dicts for every brace-delimited object parseable as JSON or a
    Python literal (tolerates the single-quoted pseudo-JSON some models emit)."""
    decoder = json.JSONDecoder()
    for match in re.finditer(r"\{", raw):
        start = match.start()
        try:
            obj, _ = decoder.raw_decode(raw[start:])
        except json.JSONDecodeError:
            obj = _literal_object(raw, start)
        if isinstance(obj, dict):
            yield obj


@dataclass(frozen=True)
class ChoiceResult:
    choice: str  # "pun" | "non-pun"
    reason: Optional[str] = None


def _choice_from_text(text: str) -> Optional[str]:
    low = text.casefold()
    if "non-pun" in low or "non pun" in low:
        return "non-pun"
    if "pun" in low:
        return "pun"
    return None


def parse_choice(raw: str):
    """Extract the recognition decision, falling back to substring search.

    The non-pun check runs first because "pun" is a substring of "non-pun".
    """
    reason = None
    for obj in iter_json_objects(raw):
        if reason is None and isinstance(obj.get("Reason"), str):
            reason = obj["Reason"]
        value = obj.get("Choice")
        if isinstance(value, str):
            choice = _choice_from_text(value)
            if choice is not None:
                return ChoiceResult(choice=choice, reason=reason)
    low = raw.casefold()
    if "is a non-pun" in low:
        return ChoiceResult(choice="non-pun", reason=reason)
    if "is a pun" in low:
        return ChoiceResult(choice="pun", reason=reason)
    return INVALID


def parse_sentence(raw: str):
    """Extract the generated sentence from {"Sentence": ...} or bare text."""
    for obj in iter_json_objects(raw):
        value = obj.get("Sentence")
        if isinstance(value, str) and value.strip():
            return value.strip()
    trimmed = raw.strip()
    if trimmed and "\n" not in trimmed and "{" not in trimmed and "}" not in trimmed:
        return trimmed
    return INVALID


PAIRWISE_VERDICTS = (
    ("Explanation 1 is much better", "first_better"),
    ("Explanation 2 is much better", "second_better"),
    ("I'm not sure which would be better", "unsure"),
)


def parse_pairwise(raw: str):
    """Match one of the three verbatim judge answers, in or out of JSON."""
    texts = [obj["Choice"] for obj in iter_json_objects(raw)
             if isinstance(obj.get("Choice"), str)]
    if not texts:
        texts = [raw]
    for text in texts:
        found = {verdict for answer, verdict in PAIRWISE_VERDICTS if answer in text}
        if len(found) == 1:
            return found.pop()
    return INVALID


SYNONYM_KEY_1 = "Synonym 1 for Meaning 1"
SYNONYM_KEY_2 = "Synonym 2 for Meaning 2"


def parse_synonyms(raw: str):
    """Extract the two sense synonyms; they must be present and different."""
    for obj in iter_json_objects(raw):
        first = obj.get(SYNONYM_KEY_1)
        second = obj.get(SYNONYM_KEY_2)
        if not (isinstance(first, str) and isinstance(second, str)):
            continue
        first, second = first.strip(), second.strip()
        if not first or not second:
            continue
        if first.casefold() == second.casefold():
            return INVALID
        return (first, second)
    return INVALID


# --- mock personas ---------------------------------------------------------


@dataclass(frozen=True)
class PersonaRule:
    match: dict
    respond: str


@dataclass(frozen=True)
class MockPersona:
    """Deterministic canned-response backend: first matching rule wins."""

    name: str
    rules: tuple[PersonaRule, ...]

    def respond(self, prompt_spec: PromptSpec) -> str:
        features = prompt_features(prompt_spec)
        for rule in self.rules:
            task = rule.match.get("task")
            if task is not None and task != prompt_spec.task:
                continue
            contains = rule.match.get("contains")
            if contains is not None and contains not in prompt_spec.rendered:
                continue
            return Template(rule.respond).safe_substitute(features)
        return ""


def _json_escape(value: str) -> str:
    return json.dumps(value, ensure_ascii=False)[1:-1]


def prompt_features(prompt_spec: PromptSpec) -> dict[str, str]:
    """Feature strings a persona template may substitute.

    Values are escaped for embedding inside double-quoted JSON strings.
    """
    features = {"task": prompt_spec.task, "bias": prompt_spec.bias or ""}
    for key in ("entry_id", "entry_text", "pun_word", "alt_word", "pun_text", "sense"):
        value = prompt_spec.payload.get(key)
        features[key] = _json_escape(value) if isinstance(value, str) else ""
    return features


def _rules(*pairs) -> tuple[PersonaRule, ...]:
    return tuple(PersonaRule(match=m, respond=r) for m, r in pairs)


BUILTIN_PERSONAS: dict[str, MockPersona] = {
    # answers "pun" no matter what the prompt says
    "always-pun": MockPersona("always-pun", _rules(
        ({"task": "recognition", "contains": "Give your reasons first"},
         '{"Reason": "It reads like wordplay on $entry_id.", '
         '"Choice": "The given text is a pun"}'),
        ({"task": "recognition"}, '{"Choice": "The given text is a pun"}'),
    )),
    # follows whichever category the biased instruction names first
    "bias-follower": MockPersona("bias-follower", _rules(
        ({"task": "recognition", "contains": "is a pun/non-pun. Give your reasons first"},
         '{"Reason": "Following the prompt lean.", "Choice": "The given text is a pun"}'),
        ({"task": "recognition", "contains": "is a non-pun/pun. Give your reasons first"},
         '{"Reason": "Following the prompt lean.", "Choice": "The given text is a non-pun"}'),
        ({"task": "recognition", "contains": "is a pun/non-pun."},
         '{"Choice": "The given text is a pun"}'),
        ({"task": "recognition", "contains": "is a non-pun/pun."},
         '{"Choice": "The given text is a non-pun"}'),
    )),
    # degenerate generation: the pun word twice plus the alternative word
    "lazy-generator": MockPersona("lazy-generator", _rules(
        ({"task": "generation-free"},
         '{"Sentence": "The $pun_word stayed a $pun_word while the $alt_word moved on."}'),
        ({"task": "generation-constrained"},
         '{"Sentence": "The $pun_word stayed a $pun_word while the $alt_word moved on."}'),
        ({"task": "nonpun-generation"},
         '{"Sentence": "The $pun_word sat quietly on the table."}'),
    )),
    # copies the human pun verbatim
    "echo-human": MockPersona("echo-human", _rules(
        ({"task": "generation-free"}, '{"Sentence": "$entry_text"}'),
        ({"task": "generation-constrained"}, '{"Sentence": "$entry_text"}'),
        ({"task": "nonpun-generation"},
         '{"Sentence": "The $pun_word sat quietly on the table."}'),
    )),
    # judge that never commits
    "always-unsure": MockPersona("always-unsure", _rules(
        ({"task": "pairwise-judge"}, "I'm not sure which would be better."),
    )),
    # fixed distinct synonym pair for hom substitution tests
    "stock-synonyms": MockPersona("stock-synonyms", _rules(
        ({"task": "synonym"},
         '{"Synonym 1 for Meaning 1": "alpha", "Synonym 2 for Meaning 2": "beta"}'),
    )),
}


def load_persona_file(path: str) -> MockPersona:
    """Load a persona from a JSON list of {match, respond} rules."""
    with open(path, encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, list):
        raise GatewayError(f"persona file {path} must hold a JSON list of rules")
    rules = []
    for item in data:
        if not isinstance(item, dict) or "respond" not in item:
            raise GatewayError(f"persona rule missing 'respond': {item!r}")
        rules.append(PersonaRule(match=item.get("match", {}), respond=item["respond"]))
    name = os.path.splitext(os.path.basename(path))[0]
    return MockPersona(name=name, rules=tuple(rules))


def get_persona(name_or_path: str) -> MockPersona:
    if name_or_path in BUILTIN_PERSONAS:
        return BUILTIN_PERSONAS[name_or_path]
    if os.path.exists(name_or_path):
        return load_persona_file(name_or_path)
    raise GatewayError(f"unknown persona {name_or_path!r} "
                       f"(builtins: {sorted(BUILTIN_PERSONAS)})")


# --- backend configuration and execution -----------------------------------


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # "http" | "mock"
    model_id: str
    endpoint: str = ""
    api_key_source: str = DEFAULT_API_KEY_VAR
    max_parallel: int = 4
    retry_limit: int = 3
    backoff_initial: float = 0.5
    backoff_multiplier: float = 2.0
    cache_dir: Optional[str] = None
    persona: Optional[str] = None
    timeout: float = 60.0

    def __post_init__(self):
        if self.kind not in ("http", "mock"):
            raise GatewayError(f"unknown backend kind {self.kind!r}")
        if self.max_parallel < 1:
            raise GatewayError("max_parallel must be >= 1")
        if self.retry_limit < 0:
            raise GatewayError("retry_limit must be >= 0")
        if self.kind == "mock" and not self.persona:
            raise GatewayError("mock backend needs a persona")
        if self.kind == "http" and not self.endpoint:
            raise GatewayError("http backend needs an endpoint")

    @classmethod
    def mock(cls, persona: str, cache_dir: Optional[str] = None,
             model_id: Optional[str] = None) -> "BackendConfig":
        return cls(kind="mock", model_id=model_id or f"mock:{persona}",
                   persona=persona, cache_dir=cache_dir)


@dataclass(frozen=True)
class Exchange:
    prompt_hash: str
    raw: str
    created_at: float
    attempt_count: int


def prompt_hash(prompt_spec: PromptSpec, params: SamplingParams,
                backend: BackendConfig, attempt: int = 0) -> str:
    key = json.dumps({
        "model_id": backend.model_id,
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
        "seed": params.seed,
        "rendered": prompt_spec.rendered,
        "attempt": attempt,
    }, sort_keys=True, ensure_ascii=False)
    return sha256(key.encode("utf-8")).hexdigest()


_write_locks: dict[str, threading.Lock] = {}
_write_locks_guard = threading.Lock()


def _lock_for(key: str) -> threading.Lock:
    with _write_locks_guard:
        return _write_locks.setdefault(key, threading.Lock())


def _cache_path(cache_dir: str, key: str) -> str:
    return os.path.join(cache_dir, f"{key}.json")


def _cache_read(cache_dir: str, key: str) -> Optional[Exchange]:
    path = _cache_path(cache_dir, key)
    if not os.path.exists(path):
        return None
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        return Exchange(prompt_hash=data["prompt_hash"], raw=data["raw"],
                        created_at=data["created_at"], attempt_count=data["attempt_count"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        log.warning("corrupt cache entry %s (%s); bypassing", path, exc)
        return None


def _cache_write(cache_dir: str, exchange: Exchange) -> None:
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir, exchange.prompt_hash)
    tmp = f"{path}.tmp.{os.getpid()}.{threading.get_ident()}"
    payload = {
        "prompt_hash": exchange.prompt_hash,
        "raw": exchange.raw,
        "created_at": exchange.created_at,
        "attempt_count": exchange.attempt_count,
    }
    with _lock_for(exchange.prompt_hash):
        if os.path.exists(path):
            return
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, ensure_ascii=False)
        os.replace(tmp, path)


_RETRYABLE_STATUS = {408, 425, 429, 500, 502, 503, 504}


def _http_once(prompt_spec: PromptSpec, params: SamplingParams,
               backend: BackendConfig) -> str:
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(backend.api_key_source, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {
        "model": backend.model_id,
        "messages": [{"role": "user", "content": prompt_spec.rendered}],
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    }
    if params.seed is not None:
        body["seed"] = params.seed
    response = requests.post(backend.endpoint, json=body, headers=headers,
                             timeout=backend.timeout)
    if response.status_code in (401, 403):
        raise AuthenticationError(
            f"authentication failed ({response.status_code}) at {backend.endpoint}")
    if response.status_code in _RETRYABLE_STATUS:
        raise _Retryable(f"status {response.status_code}")
    if response.status_code != 200:
        raise TransportError(f"unexpected status {response.status_code}: {response.text[:200]}")
    try:
        data = response.json()
        choice = data["choices"][0]
        if "message" in choice:
            return choice["message"]["content"]
        return choice["text"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"unexpected response shape: {exc}") from exc


class _Retryable(Exception):
    pass


def complete(prompt_spec: PromptSpec, sampling_params: SamplingParams,
             backend: BackendConfig, attempt: int = 0) -> Exchange:
    """Execute one prompt, serving repeats from the cache.

    `attempt` salts the cache key; it is bumped only for the single re-ask
    allowed on invalid generation output.
    """
    key = prompt_hash(prompt_spec, sampling_params, backend, attempt)
    if backend.cache_dir:
        cached = _cache_read(backend.cache_dir, key)
        if cached is not None:
            return cached

    if backend.kind == "mock":
        persona = get_persona(backend.persona)
        exchange = Exchange(prompt_hash=key, raw=persona.respond(prompt_spec),
                            created_at=time.time(), attempt_count=1)
    else:
        tries = 0
        delay = backend.backoff_initial
        while True:
            tries += 1
            try:
                raw = _http_once(prompt_spec, sampling_params, backend)
                break
            except _Retryable as exc:
                if tries > backend.retry_limit:
                    raise TransportError(
                        f"gave up after {tries} attempts: {exc}") from exc
                time.sleep(delay)
                delay *= backend.backoff_multiplier
            except requests.RequestException as exc:
                if tries > backend.retry_limit:
                    raise TransportError(
                        f"gave up after {tries} attempts: {exc}") from exc
                time.sleep(delay)
                delay *= backend.backoff_multiplier
        exchange = Exchange(prompt_hash=key, raw=raw, created_at=time.time(),
                            attempt_count=tries)

    if backend.cache_dir:
        _cache_write(backend.cache_dir, exchange)
    return exchange


def complete_many(prompt_specs: Sequence[PromptSpec], sampling_params: SamplingParams,
                  backend: BackendConfig) -> list[Exchange]:
    """Run prompts with at most max_parallel in flight; results in input order."""
    if not prompt_specs:
        return []
    if backend.max_parallel == 1 or len(prompt_specs) == 1:
        return [complete(spec, sampling_params, backend) for spec in prompt_specs]
    with ThreadPoolExecutor(max_workers=backend.max_parallel) as pool:
        futures = [pool.submit(complete, spec, sampling_params, backend)
                   for spec in prompt_specs]
        return [f.result() for f in futures]
