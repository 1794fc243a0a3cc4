"""Full mock experiment: recognition + explanation + generation -> report files."""

import json
import tempfile
from pathlib import Path

from punprobe.gateway import BackendConfig
from punprobe.report import emit_report
from punprobe.runner import ExperimentConfig, run_all

with tempfile.TemporaryDirectory() as tmp:
    config = ExperimentConfig(
        corpus="toy",
        dataset_kind="het-dataset",
        seed=7,
        output_dir=f"{tmp}/out",
        subject_backend=BackendConfig.mock("echo-human", cache_dir=f"{tmp}/cache-s"),
        judge_backend=BackendConfig.mock("always-unsure", cache_dir=f"{tmp}/cache-j"),
    )
    report = run_all(config)
    paths = emit_report(report, config.output_dir)
    print("status:", report["status"], "(partial = human annotations pending)")
    print("files written:")
    for path in paths:
        print("  ", path)
    print()
    print(Path(config.output_dir, "tables.md").read_text(encoding="utf-8"))
    cells = report["recognition"]["cells"]
    print("recognition cells:", json.dumps(cells[0], default=str)[:160], "...")
