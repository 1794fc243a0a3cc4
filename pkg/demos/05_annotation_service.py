"""Run the annotation service in-process and drive it like three annotators."""

import json
import tempfile

import requests

from punprobe.annotation import AnnotationServer, AnnotationStore, Task

tasks = [
    Task(task_id=f"punch:{i}", kind="punchline-check",
         payload={"pun_text": f"Pun number {i}.", "pun_word": "peace",
                  "alt_word": "piece", "pun_sense": "s1", "alt_sense": "s2",
                  "explanation": "It swaps piece for peace."})
    for i in range(3)
]

with tempfile.TemporaryDirectory() as tmp:
    store = AnnotationStore(tasks, f"{tmp}/events.jsonl")
    server = AnnotationServer(store, port=0).start()
    base = server.address
    print("service at", base)

    for annotator in ("ann-a", "ann-b", "ann-c"):
        token = requests.post(f"{base}/api/annotators",
                              json={"annotator_id": annotator}).json()["token"]
        print(f"registered {annotator} (token {token[:6]}...)")
        while True:
            task = requests.get(f"{base}/api/tasks/next",
                                params={"annotator": annotator}).json()["task"]
            if task is None:
                break
            payload = {"pun_word": True, "alt_word": annotator != "ann-c",
                       "pun_sense": True, "alt_sense": False}
            requests.post(f"{base}/api/annotations",
                          json={"task_id": task["task_id"],
                                "annotator_id": annotator, "payload": payload})

    print("progress: ", json.dumps(requests.get(f"{base}/api/progress").json()["kinds"]
                                   ["punchline-check"]))
    print("agreement:", json.dumps(requests.get(
        f"{base}/api/agreement", params={"kind": "punchline-check"}).json()))
    export = requests.get(f"{base}/api/export",
                          params={"kind": "punchline-check"}).text
    print("export header:", export.splitlines()[0])
    server.stop()
