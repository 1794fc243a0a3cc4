"""HTTP annotation service: serve tasks, collect submissions, report agreement.

Persistence is a line-delimited JSON event log; the in-memory index is a
pure fold over it and is rebuilt on startup. Task assignment is leased so a
task is never answered by more than `required_annotators` distinct people,
even with concurrent clients. Exports use the shared annotation exchange
format consumed by the explanation metrics.
"""

from __future__ import annotations

import json
import logging
import os
import secrets
import threading
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .explanation import (
    annotation_record,
    fleiss_kappa,
    punchline_annotations_from_records,
)

log = logging.getLogger(__name__)

KINDS = ("punchline-check", "pairwise-explanation", "generation-judgment")
PUNCHLINE_FLAGS = ("pun_word", "alt_word", "pun_sense", "alt_sense")
PAIRWISE_WINNERS = ("first", "second", "tie")
ERROR_LABELS = (
    "misclassify-pun-as-non-pun",
    "incorrect-pun-word",
    "incorrect-alternative-word",
    "het-as-hom",
    "lack-of-meaning-analysis",
    "fabricated-meaning",
)

DEFAULT_LEASE_SECONDS = 30 * 60


class AnnotationError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def validate_payload(kind: str, payload: dict) -> dict:
    """Check a submission payload against its kind's schema; returns it cleaned."""
    if not isinstance(payload, dict):
        raise AnnotationError("bad-payload", "payload must be an object")
    if kind == "punchline-check":
        cleaned = {}
        for flag in PUNCHLINE_FLAGS:
            if flag not in payload or not isinstance(payload[flag], bool):
                raise AnnotationError("bad-payload",
                                      f"punchline payload needs boolean {flag!r}")
            cleaned[flag] = payload[flag]
        return cleaned
    if kind == "pairwise-explanation":
        winner = payload.get("winner")
        if winner not in PAIRWISE_WINNERS:
            raise AnnotationError("bad-payload",
                                  f"winner must be one of {PAIRWISE_WINNERS}")
        return {"winner": winner}
    if kind == "generation-judgment":
        success = payload.get("success")
        funniness = payload.get("funniness")
        if not isinstance(success, bool):
            raise AnnotationError("bad-payload", "success must be a boolean")
        if not isinstance(funniness, int) or funniness not in (1, 2, 3, 4, 5):
            raise AnnotationError("bad-payload", "funniness must be an integer 1..5")
        cleaned = {"success": success, "funniness": funniness}
        label = payload.get("error_label")
        if label is not None:
            if label not in ERROR_LABELS:
                raise AnnotationError("bad-payload", f"unknown error label {label!r}")
            cleaned["error_label"] = label
        return cleaned
    raise AnnotationError("bad-kind", f"unknown task kind {kind!r}")


@dataclass
class Task:
    task_id: str
    kind: str
    payload: dict
    required_annotators: int = 3


@dataclass
class _Lease:
    annotator_id: str
    expires_at: float


class AnnotationStore:
    """Tasks, the append-only event log, leases, and derived state."""

    def __init__(self, tasks: list[Task], log_path: str,
                 lease_seconds: float = DEFAULT_LEASE_SECONDS):
        self._tasks = {t.task_id: t for t in tasks}
        if len(self._tasks) != len(tasks):
            raise AnnotationError("bad-tasks", "duplicate task ids")
        self._log_path = log_path
        self._lease_seconds = lease_seconds
        self._lock = threading.Lock()
        self._annotators: dict[str, str] = {}  # id -> session token
        # effective state: (task_id, annotator_id) -> event dict
        self._effective: dict[tuple[str, str], dict] = {}
        self._log_len = 0
        self._leases: dict[str, list[_Lease]] = {}
        if os.path.exists(log_path):
            self._replay()

    @classmethod
    def from_task_file(cls, path: str, log_path: str,
                       lease_seconds: float = DEFAULT_LEASE_SECONDS,
                       required_annotators: int = 3) -> "AnnotationStore":
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        tasks = [Task(task_id=t["task_id"], kind=t["kind"], payload=t["payload"],
                      required_annotators=t.get("required_annotators", required_annotators))
                 for t in data["tasks"]]
        return cls(tasks, log_path, lease_seconds)

    # --- event log ---------------------------------------------------------

    def _replay(self) -> None:
        with open(self._log_path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                self._log_len += 1
                if event.get("event") == "register":
                    self._annotators[event["annotator_id"]] = event["token"]
                elif event.get("event") == "submit":
                    key = (event["task_id"], event["annotator_id"])
                    self._effective[key] = event

    def _append(self, event: dict) -> None:
        line = json.dumps(event, ensure_ascii=False, sort_keys=True)
        with open(self._log_path, "a", encoding="utf-8") as handle:
            handle.write(line + "\n")
        self._log_len += 1

    @property
    def log_length(self) -> int:
        return self._log_len

    # --- annotators ----------------------------------------------------------

    def register(self, annotator_id: str) -> str:
        if not annotator_id or not annotator_id.strip():
            raise AnnotationError("bad-annotator", "annotator id must be non-empty")
        with self._lock:
            token = self._annotators.get(annotator_id)
            if token is None:
                token = secrets.token_hex(8)
                self._annotators[annotator_id] = token
                self._append({"event": "register", "annotator_id": annotator_id,
                              "token": token, "at": time.time()})
            return token

    def _require_known(self, annotator_id: str) -> None:
        if annotator_id not in self._annotators:
            raise AnnotationError("unknown-annotator",
                                  f"annotator {annotator_id!r} is not registered")

    # --- task assignment ------------------------------------------------------

    def _distinct_annotators(self, task_id: str) -> set[str]:
        return {ann for (tid, ann) in self._effective if tid == task_id}

    def _active_leases(self, task_id: str, now: float) -> list[_Lease]:
        leases = [l for l in self._leases.get(task_id, []) if l.expires_at > now]
        self._leases[task_id] = leases
        return leases

    def next_task(self, annotator_id: str, kind: Optional[str] = None) -> Optional[Task]:
        """A task this annotator can still answer, or None when exhausted.

        Assignment is leased: concurrent annotators never drive a task past
        its required annotator count; an expired lease makes the task
        servable again.
        """
        now = time.time()
        with self._lock:
            self._require_known(annotator_id)
            for task_id in sorted(self._tasks):
                task = self._tasks[task_id]
                if kind and task.kind != kind:
                    continue
                done = self._distinct_annotators(task_id)
                if annotator_id in done:
                    continue
                leases = self._active_leases(task_id, now)
                if any(l.annotator_id == annotator_id for l in leases):
                    return task  # existing lease still valid, reissue
                others = {l.annotator_id for l in leases} | done
                if len(others) >= task.required_annotators:
                    continue
                leases.append(_Lease(annotator_id=annotator_id,
                                     expires_at=now + self._lease_seconds))
                self._leases[task_id] = leases
                return task
        return None

    # --- submissions ------------------------------------------------------------

    def submit(self, task_id: str, annotator_id: str, payload: dict) -> dict:
        with self._lock:
            self._require_known(annotator_id)
            task = self._tasks.get(task_id)
            if task is None:
                raise AnnotationError("unknown-task", f"unknown task {task_id!r}")
            done = self._distinct_annotators(task_id)
            if annotator_id not in done and len(done) >= task.required_annotators:
                raise AnnotationError("task-full",
                                      f"task {task_id!r} already has enough annotators")
            cleaned = validate_payload(task.kind, payload)
            event = {
                "event": "submit",
                "task_id": task_id,
                "annotator_id": annotator_id,
                "kind": task.kind,
                "payload": cleaned,
                "submitted_at": time.time(),
            }
            self._append(event)
            self._effective[(task_id, annotator_id)] = event
            self._leases[task_id] = [
                l for l in self._leases.get(task_id, [])
                if l.annotator_id != annotator_id
            ]
            return {"accepted": True, "task_id": task_id}

    # --- derived views --------------------------------------------------------------

    def effective_records(self, kind: Optional[str] = None) -> list[dict]:
        with self._lock:
            events = sorted(self._effective.values(),
                            key=lambda e: (e["task_id"], e["annotator_id"]))
        return [
            annotation_record(e["task_id"], e["annotator_id"], e["kind"],
                              e["payload"], e["submitted_at"])
            for e in events
            if kind is None or e["kind"] == kind
        ]

    def completed_tasks(self, kind: str) -> dict[str, list[dict]]:
        by_task: dict[str, list[dict]] = {}
        for record in self.effective_records(kind):
            by_task.setdefault(record["task_id"], []).append(record)
        return {
            tid: records for tid, records in by_task.items()
            if len(records) >= self._tasks[tid].required_annotators
        }

    def progress(self) -> dict:
        with self._lock:
            per_kind: dict[str, dict] = {k: {"tasks": 0, "complete": 0, "submissions": 0}
                                         for k in KINDS}
            for task in self._tasks.values():
                per_kind[task.kind]["tasks"] += 1
            counts: dict[str, int] = {}
            for (tid, _ann) in self._effective:
                counts[tid] = counts.get(tid, 0) + 1
            for tid, n in counts.items():
                task = self._tasks[tid]
                per_kind[task.kind]["submissions"] += n
                if n >= task.required_annotators:
                    per_kind[task.kind]["complete"] += 1
            return {
                "kinds": per_kind,
                "annotators": sorted(self._annotators),
                "log_length": self._log_len,
            }

    def agreement(self, kind: str) -> dict:
        """Live agreement over completed tasks, via the explanation metrics."""
        complete = self.completed_tasks(kind)
        if not complete:
            return {"kind": kind, "n_complete": 0, "statistics": None}
        if kind == "punchline-check":
            records = [r for recs in complete.values() for r in recs]
            annotations = punchline_annotations_from_records(records)
            by_task: dict[str, list] = {}
            for ann in annotations:
                by_task.setdefault(ann.task_id, []).append(ann)
            stats = {}
            for i, flag in enumerate(PUNCHLINE_FLAGS):
                matrix = [
                    [a.mentions[i] for a in sorted(anns, key=lambda a: a.annotator_id)]
                    for _, anns in sorted(by_task.items())
                ]
                stats[flag] = fleiss_kappa(matrix) if len(matrix) >= 2 else None
            return {"kind": kind, "n_complete": len(complete), "statistics": stats}
        key = "winner" if kind == "pairwise-explanation" else "success"
        agree = [
            1.0 if len({json.dumps(r["payload"][key]) for r in records}) == 1 else 0.0
            for records in complete.values()
        ]
        return {"kind": kind, "n_complete": len(complete),
                "statistics": {"exact_match_rate": sum(agree) / len(agree)}}

    def export(self, kind: Optional[str] = None) -> str:
        """Effective records as JSONL with a header line; a consistent snapshot."""
        records = self.effective_records(kind)
        header = {"record": "header", "kind": kind or "all", "count": len(records)}
        lines = [json.dumps(header, ensure_ascii=False, sort_keys=True)]
        lines += [json.dumps(r, ensure_ascii=False, sort_keys=True) for r in records]
        return "\n".join(lines) + "\n"

    def import_records(self, records: list[dict]) -> int:
        """Replay exported records into this store, keeping their timestamps.

        Annotators are registered on sight; existing (task, annotator)
        records are replaced, so importing an export reproduces the exact
        effective state it captured.
        """
        count = 0
        for record in records:
            self.register(record["annotator_id"])
            with self._lock:
                task = self._tasks.get(record["task_id"])
                if task is None:
                    raise AnnotationError("unknown-task",
                                          f"unknown task {record['task_id']!r}")
                event = {
                    "event": "submit",
                    "task_id": record["task_id"],
                    "annotator_id": record["annotator_id"],
                    "kind": record["kind"],
                    "payload": validate_payload(task.kind, record["payload"]),
                    "submitted_at": record["submitted_at"],
                }
                self._append(event)
                self._effective[(event["task_id"], event["annotator_id"])] = event
                count += 1
        return count


# --- HTTP layer ------------------------------------------------------------------


def _make_handler(store: AnnotationStore, ui_dir: Optional[str]):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            log.debug("annotation-http: " + args[0], *args[1:])

        def _send_json(self, status: int, payload: dict) -> None:
            data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def _send_error(self, status: int, code: str, message: str) -> None:
            self._send_json(status, {"code": code, "message": message})

        def _read_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            if length == 0:
                return {}
            try:
                return json.loads(self.rfile.read(length))
            except json.JSONDecodeError as exc:
                raise AnnotationError("bad-json", f"request body is not JSON: {exc}")

        def do_GET(self):
            parsed = urlparse(self.path)
            query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
            try:
                if parsed.path == "/api/tasks/next":
                    annotator = query.get("annotator", "")
                    task = store.next_task(annotator, query.get("kind"))
                    if task is None:
                        self._send_json(200, {"task": None})
                    else:
                        self._send_json(200, {"task": {
                            "task_id": task.task_id, "kind": task.kind,
                            "payload": task.payload,
                            "required_annotators": task.required_annotators}})
                elif parsed.path == "/api/progress":
                    self._send_json(200, store.progress())
                elif parsed.path == "/api/agreement":
                    kind = query.get("kind", "")
                    if kind not in KINDS:
                        raise AnnotationError("bad-kind", f"unknown kind {kind!r}")
                    self._send_json(200, store.agreement(kind))
                elif parsed.path == "/api/export":
                    kind = query.get("kind")
                    if kind is not None and kind not in KINDS:
                        raise AnnotationError("bad-kind", f"unknown kind {kind!r}")
                    data = store.export(kind).encode("utf-8")
                    self.send_response(200)
                    self.send_header("Content-Type", "application/json; charset=utf-8")
                    self.send_header("Content-Length", str(len(data)))
                    self.end_headers()
                    self.wfile.write(data)
                elif parsed.path.startswith("/ui"):
                    self._serve_static(parsed.path)
                else:
                    self._send_error(404, "not-found", f"no route {parsed.path}")
            except AnnotationError as exc:
                status = 404 if exc.code in ("unknown-task",) else 400
                self._send_error(status, exc.code, exc.message)

        def do_POST(self):
            parsed = urlparse(self.path)
            try:
                body = self._read_body()
                if parsed.path == "/api/annotators":
                    token = store.register(str(body.get("annotator_id", "")))
                    self._send_json(200, {"annotator_id": body.get("annotator_id"),
                                          "token": token})
                elif parsed.path == "/api/annotations":
                    result = store.submit(str(body.get("task_id", "")),
                                          str(body.get("annotator_id", "")),
                                          body.get("payload", {}))
                    self._send_json(200, result)
                else:
                    self._send_error(404, "not-found", f"no route {parsed.path}")
            except AnnotationError as exc:
                status = 404 if exc.code in ("unknown-task",) else 400
                self._send_error(status, exc.code, exc.message)

        def _serve_static(self, path: str) -> None:
            if ui_dir is None:
                self._send_error(404, "no-ui", "no UI directory configured")
                return
            rel = path[len("/ui"):].lstrip("/") or "index.html"
            target = os.path.normpath(os.path.join(ui_dir, rel))
            if not target.startswith(os.path.normpath(ui_dir)) or not os.path.isfile(target):
                self._send_error(404, "not-found", f"no asset {rel}")
                return
            ctype = "text/html; charset=utf-8"
            if target.endswith(".js"):
                ctype = "text/javascript; charset=utf-8"
            elif target.endswith(".css"):
                ctype = "text/css; charset=utf-8"
            elif target.endswith(".json"):
                ctype = "application/json; charset=utf-8"
            with open(target, "rb") as handle:
                data = handle.read()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    return Handler


class AnnotationServer:
    """Threaded HTTP server wrapper around one AnnotationStore."""

    def __init__(self, store: AnnotationStore, host: str = "127.0.0.1", port: int = 0,
                 ui_dir: Optional[str] = None):
        self.store = store
        self._httpd = ThreadingHTTPServer((host, port), _make_handler(store, ui_dir))
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "AnnotationServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
