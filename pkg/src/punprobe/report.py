"""Report emission: canonical JSON, markdown tables, and per-figure CSVs.

Field ordering and float formatting are deterministic, so emitting the same
report twice produces byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os

FIGURE_FILES = (
    "figure2_cot_accuracy.csv",
    "figure3_pairwise.csv",
    "figure4_incorporation.csv",
    "figure5_overlap.csv",
)


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def render_recognition_table(block: dict) -> str:
    lines = [
        "| Variant | CoT | TPR | dTPR | TNR | dTNR | kappa | Acc (pun bias) | Invalid |",
        "|---|---|---|---|---|---|---|---|---|",
    ]
    for cell in block["cells"]:
        lines.append("| {variant} | {cot} | {tpr} | {dtpr} | {tnr} | {dtnr} | {kappa} "
                     "| {acc} | {inv} |".format(
                         variant=cell["variant"],
                         cot="yes" if cell["cot"] else "no",
                         tpr=_fmt(cell["tpr_pun_bias"], 3),
                         dtpr=_fmt(cell["delta_tpr"], 3),
                         tnr=_fmt(cell["tnr_pun_bias"], 3),
                         dtnr=_fmt(cell["delta_tnr"], 3),
                         kappa=_fmt(cell["kappa"], 3),
                         acc=_fmt(cell["accuracy_pun_bias"], 3),
                         inv=cell["invalid_pun_bias"] + cell["invalid_nonpun_bias"]))
    return "\n".join(lines)


def render_generation_table(block: dict) -> str:
    columns = ("ambiguity", "distinctiveness", "surprise_with_sentinels",
               "one_pun_word_rate", "lazy_rate", "incorporation", "overlap",
               "success_rate", "funniness", "strict_success_rate")
    header = "| Section | n | A | D | S | 1wp | lazy | incorp | overlap | success | funny | strict |"
    lines = [header, "|" + "---|" * 12]
    for section in ("nonpun_baseline", "llm_free", "llm_constrained", "human"):
        data = block["sections"].get(section)
        if data is None:
            continue
        cells = [section, str(data["n"])] + [_fmt(data[c], 3) for c in columns]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)


def render_markdown(report: dict) -> str:
    parts = ["# Evaluation report", ""]
    meta = report.get("metadata", {})
    parts.append("- subject model: " + str(meta.get("subject_model")))
    parts.append("- judge model: " + str(meta.get("judge_model")))
    parts.append("- dataset: " + str(meta.get("dataset_kind")))
    parts.append("- seed: " + str(meta.get("seed")))
    parts.append("- template version: " + str(meta.get("template_version")))
    parts.append("- status: " + str(report.get("status")))
    parts.append("")
    if "recognition" in report:
        parts += ["## Recognition", "", render_recognition_table(report["recognition"]), ""]
    explanation = report.get("explanation")
    if explanation:
        parts += ["## Explanation", ""]
        pairwise = explanation.get("pairwise")
        if pairwise:
            parts.append(
                f"- pairwise (n={pairwise['n']}): win {_fmt(pairwise['win_rate'], 3)}, "
                f"tie {_fmt(pairwise['tie_rate'], 3)}, loss {_fmt(pairwise['loss_rate'], 3)}, "
                f"invalid {pairwise['invalid']}")
        punchline = explanation.get("punchline", {})
        if punchline.get("status") == "complete":
            parts.append(
                "- punchline mention ratios (wp/wa/sp/sa): "
                + "/".join(_fmt(punchline[k], 2) for k in (
                    "mention_ratio_pun_word", "mention_ratio_alt_word",
                    "mention_ratio_pun_sense", "mention_ratio_alt_sense")))
        else:
            parts.append("- punchline check: pending annotations")
        parts.append("")
    if "generation" in report:
        parts += ["## Generation", "", render_generation_table(report["generation"]), ""]
    return "\n".join(parts)


def _figure2_rows(report: dict) -> list[dict]:
    rows = []
    block = report.get("recognition")
    if not block:
        return rows
    model = report["metadata"]["subject_model"]
    dataset = report["metadata"]["dataset_kind"]
    for cell in block["cells"]:
        if cell["variant"] != "enhanced":
            continue
        rows.append({
            "model": model,
            "dataset": dataset,
            "response": "cot" if cell["cot"] else "direct",
            "tpr": cell["tpr_pun_bias"],
            "tnr": cell["tnr_pun_bias"],
            "accuracy": cell["accuracy_pun_bias"],
        })
    return rows


def _figure3_rows(report: dict) -> list[dict]:
    explanation = report.get("explanation") or {}
    pairwise = explanation.get("pairwise")
    if not pairwise:
        return []
    meta = report["metadata"]
    return [{
        "model": meta["subject_model"],
        "dataset": meta["dataset_kind"],
        "win_rate": pairwise["win_rate"],
        "tie_rate": pairwise["tie_rate"],
        "loss_rate": pairwise["loss_rate"],
    }]


def _figure4_rows(report: dict) -> list[dict]:
    generation = report.get("generation") or {}
    section = (generation.get("sections") or {}).get("llm_constrained")
    if not section or section.get("incorporation") is None:
        return []
    meta = report["metadata"]
    return [{
        "model": meta["subject_model"],
        "dataset": meta["dataset_kind"],
        "incorporation_rate": section["incorporation"],
    }]


def _figure5_rows(report: dict) -> list[dict]:
    generation = report.get("generation") or {}
    rows = []
    meta = report["metadata"]
    for mode in ("llm_free", "llm_constrained"):
        section = (generation.get("sections") or {}).get(mode)
        if not section:
            continue
        rows.append({
            "model": meta["subject_model"],
            "dataset": meta["dataset_kind"],
            "mode": mode.removeprefix("llm_"),
            "overlap": section["overlap"],
            "success_rate": section["success_rate"],
            "strict_success_rate": section["strict_success_rate"],
        })
    return rows


def _write_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if not rows:
            handle.write("")
            return
        writer = csv.DictWriter(handle, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def emit_report(report: dict, output_dir: str) -> list[str]:
    """Write report.json, tables.md, and the four figure CSVs; return paths."""
    os.makedirs(output_dir, exist_ok=True)
    written = []

    json_path = os.path.join(output_dir, "report.json")
    with open(json_path, "w", encoding="utf-8") as handle:
        json.dump(report, handle, ensure_ascii=False, indent=2, sort_keys=True)
        handle.write("\n")
    written.append(json_path)

    md_path = os.path.join(output_dir, "tables.md")
    with open(md_path, "w", encoding="utf-8") as handle:
        handle.write(render_markdown(report))
        handle.write("\n")
    written.append(md_path)

    for name, rows in zip(FIGURE_FILES, (
            _figure2_rows(report), _figure3_rows(report),
            _figure4_rows(report), _figure5_rows(report))):
        path = os.path.join(output_dir, name)
        _write_csv(path, rows)
        written.append(path)
    return written


def roundtrip_equal(report: dict) -> bool:
    """Canonical JSON serialization round-trips without loss."""
    text = json.dumps(report, ensure_ascii=False, sort_keys=True)
    return json.loads(text) == report
