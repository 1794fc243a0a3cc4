"""Secondary acceptance: the annotation UI and service working together.

Criterion 10 drives the compiled UI payload builders (frontend/dist) under
node and submits their output through the HTTP API, checking that exports
and agreement statistics are identical to a headless submission of the
same payloads. Criterion 11 exercises the 3-annotator cap under concurrent
HTTP polling and compares live agreement against the offline statistic.
"""

import json
import shutil
import subprocess
import threading
from pathlib import Path

import pytest
import requests

from punprobe.annotation import AnnotationServer, AnnotationStore, Task
from punprobe.explanation import (
    fleiss_kappa,
    mention_ratios,
    punchline_annotations_from_records,
    resolve_all_majorities,
)

FRONTEND = Path(__file__).parent.parent / "frontend"
DIST_STATE = FRONTEND / "dist" / "state.js"

NODE_BUILD_SNIPPET = """
import {{ PunchlineForm, PairwiseForm, GenerationForm }} from {module};
const punchline = new PunchlineForm();
punchline.setFlag("pun_word", true);
punchline.setFlag("alt_word", false);
punchline.setFlag("pun_sense", true);
punchline.setFlag("alt_sense", false);
const pairwise = new PairwiseForm();
pairwise.choose("tie");
const generation = new GenerationForm();
generation.setSuccess(true);
generation.setFunniness(4);
generation.setErrorLabel("het-as-hom");
console.log(JSON.stringify({{
  "punchline-check": punchline.buildPayload(),
  "pairwise-explanation": pairwise.buildPayload(),
  "generation-judgment": generation.buildPayload(),
}}));
"""


def ui_payloads() -> dict:
    """Payloads built by the actual compiled UI form classes."""
    if shutil.which("node") is None:
        pytest.skip("node is not available")
    if not DIST_STATE.exists():
        pytest.skip("frontend not built; run `npm --prefix frontend run build`")
    script = NODE_BUILD_SNIPPET.format(module=json.dumps(DIST_STATE.as_uri()))
    result = subprocess.run(["node", "--input-type=module", "-e", script],
                            capture_output=True, text=True, timeout=60)
    assert result.returncode == 0, result.stderr
    return json.loads(result.stdout)


def make_tasks():
    return [
        Task(task_id="punch:demo", kind="punchline-check",
             payload={"pun_text": "t", "pun_word": "w", "alt_word": "a",
                      "pun_sense": "s1", "alt_sense": "s2", "explanation": "e"}),
        Task(task_id="pair:demo", kind="pairwise-explanation",
             payload={"pun_text": "t", "pun_word": "w", "alt_word": "a",
                      "pun_sense": "s1", "alt_sense": "s2",
                      "explanation_1": "x", "explanation_2": "y"}),
        Task(task_id="gen:demo", kind="generation-judgment",
             payload={"sentence": "s", "pun_word": "w", "alt_word": "a",
                      "pun_sense": "s1", "alt_sense": "s2"}),
    ]


def submit_all(base: str, payloads: dict, annotators=("a1", "a2", "a3")) -> None:
    for annotator in annotators:
        response = requests.post(f"{base}/api/annotators",
                                 json={"annotator_id": annotator})
        assert response.status_code == 200
        while True:
            task = requests.get(f"{base}/api/tasks/next",
                                params={"annotator": annotator}).json()["task"]
            if task is None:
                break
            response = requests.post(f"{base}/api/annotations", json={
                "task_id": task["task_id"], "annotator_id": annotator,
                "payload": payloads[task["kind"]]})
            assert response.status_code == 200, response.text


def normalized_export(base: str, kind: str) -> list[dict]:
    text = requests.get(f"{base}/api/export", params={"kind": kind}).text
    records = [json.loads(line) for line in text.strip().splitlines()[1:]]
    for record in records:
        record.pop("submitted_at", None)
    return records


def test_criterion_10_ui_roundtrip_matches_headless(tmp_path):
    payloads = ui_payloads()

    servers = {}
    for lane in ("ui", "headless"):
        store = AnnotationStore(make_tasks(), str(tmp_path / f"{lane}.jsonl"))
        servers[lane] = AnnotationServer(store, port=0).start()
    try:
        # ui lane: payloads built by the compiled frontend forms, over HTTP
        submit_all(servers["ui"].address, payloads)
        # headless lane: the same payloads written out by hand
        headless = {
            "punchline-check": {"pun_word": True, "alt_word": False,
                                "pun_sense": True, "alt_sense": False},
            "pairwise-explanation": {"winner": "tie"},
            "generation-judgment": {"success": True, "funniness": 4,
                                    "error_label": "het-as-hom"},
        }
        assert payloads == headless  # the UI builds exactly the documented shapes
        submit_all(servers["headless"].address, headless)

        for kind in ("punchline-check", "pairwise-explanation", "generation-judgment"):
            ui_records = normalized_export(servers["ui"].address, kind)
            headless_records = normalized_export(servers["headless"].address, kind)
            assert ui_records == headless_records
            assert len(ui_records) == 3  # each submission shows up in the export
            ui_agree = requests.get(f"{servers['ui'].address}/api/agreement",
                                    params={"kind": kind}).json()
            headless_agree = requests.get(f"{servers['headless'].address}/api/agreement",
                                          params={"kind": kind}).json()
            assert ui_agree == headless_agree

        # downstream mention ratios are identical too
        ratios = []
        for lane in ("ui", "headless"):
            records = normalized_export(servers[lane].address, "punchline-check")
            for record in records:
                record["submitted_at"] = 0.0
            annotations = punchline_annotations_from_records(records)
            resolved = resolve_all_majorities(annotations)
            ratios.append(mention_ratios(list(resolved.values())))
        assert ratios[0] == ratios[1] == (1.0, 0.0, 1.0, 0.0)
    finally:
        for server in servers.values():
            server.stop()
    print("ACCEPTANCE 10 PASS: UI-built submissions round-trip identically "
          "to headless API submissions")


def test_criterion_11_concurrent_cap_and_live_agreement(tmp_path):
    tasks = [
        Task(task_id=f"punch:{i:02d}", kind="punchline-check",
             payload={"pun_text": f"pun {i}", "pun_word": "w", "alt_word": "a",
                      "pun_sense": "s1", "alt_sense": "s2", "explanation": "e"})
        for i in range(20)
    ]
    store = AnnotationStore(tasks, str(tmp_path / "events.jsonl"))
    server = AnnotationServer(store, port=0).start()
    base = server.address
    annotators = ("ann-a", "ann-b", "ann-c")
    errors = []

    def worker(annotator: str, vote: bool):
        try:
            requests.post(f"{base}/api/annotators", json={"annotator_id": annotator})
            while True:
                task = requests.get(f"{base}/api/tasks/next",
                                    params={"annotator": annotator}).json()["task"]
                if task is None:
                    return
                payload = {"pun_word": vote, "alt_word": vote,
                           "pun_sense": True, "alt_sense": False}
                response = requests.post(f"{base}/api/annotations", json={
                    "task_id": task["task_id"], "annotator_id": annotator,
                    "payload": payload})
                assert response.status_code == 200
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    try:
        threads = [threading.Thread(target=worker, args=(a, a != "ann-c"))
                   for a in annotators]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        assert not errors

        by_task: dict[str, set] = {}
        records = normalized_export(base, "punchline-check")
        for record in records:
            by_task.setdefault(record["task_id"], set()).add(record["annotator_id"])
        assert len(by_task) == 20
        assert all(len(who) <= 3 for who in by_task.values())

        live = requests.get(f"{base}/api/agreement",
                            params={"kind": "punchline-check"}).json()
        assert live["n_complete"] == 20
        for record in records:
            record["submitted_at"] = 0.0
        annotations = punchline_annotations_from_records(records)
        grouped: dict[str, list] = {}
        for annotation in annotations:
            grouped.setdefault(annotation.task_id, []).append(annotation)
        for i, flag in enumerate(("pun_word", "alt_word", "pun_sense", "alt_sense")):
            matrix = [
                [a.mentions[i] for a in sorted(anns, key=lambda a: a.annotator_id)]
                for _, anns in sorted(grouped.items())
            ]
            offline = fleiss_kappa(matrix)
            assert abs(live["statistics"][flag] - offline) <= 1e-12
    finally:
        server.stop()
    print("ACCEPTANCE 11 PASS: concurrent polling never exceeds the 3-annotator "
          "cap; live agreement equals the offline statistic to 1e-12")
