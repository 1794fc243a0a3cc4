import json
import time

import pytest

from punprobe import report as report_mod
from punprobe import runner, toydata
from punprobe.corpus import save_corpus
from punprobe.explanation import annotation_record
from punprobe.gateway import BackendConfig
from punprobe.runner import Experiment, ExperimentConfig, RunnerError


def make_config(tmp_path, persona="bias-follower", **kw):
    defaults = dict(
        corpus="toy",
        dataset_kind="het-dataset",
        seed=7,
        n_pun_examples=4,
        n_nonpun_examples=4,
        output_dir=str(tmp_path / "out"),
        subject_backend=BackendConfig.mock(persona, cache_dir=str(tmp_path / "cache-s")),
        judge_backend=BackendConfig.mock("always-unsure",
                                         cache_dir=str(tmp_path / "cache-j")),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def test_config_requires_distinct_judge(tmp_path):
    backend = BackendConfig.mock("always-pun")
    with pytest.raises(RunnerError, match="judge"):
        ExperimentConfig(subject_backend=backend, judge_backend=backend)
    config = ExperimentConfig(subject_backend=backend, judge_backend=backend,
                              allow_same_judge=True)
    assert config.judge_backend is backend


def test_prepare_toy_experiment(tmp_path):
    experiment = Experiment.prepare(make_config(tmp_path))
    assert len(experiment.test_entries()) == 8  # 4 het puns + 4 non-puns
    demos = experiment.demonstrations()
    assert len(demos) == 6
    assert sum(1 for d in demos if d.is_pun()) == 3


def test_recognition_bias_follower_extremes(tmp_path):
    experiment = Experiment.prepare(make_config(tmp_path))
    block = runner.run_recognition(experiment)
    for cell in block["cells"]:
        assert cell["tpr_pun_bias"] == 1.0
        assert cell["tnr_pun_bias"] == 0.0
        assert cell["tpr_nonpun_bias"] == 0.0
        assert cell["tnr_nonpun_bias"] == 1.0
        assert cell["delta_tpr"] == -1.0
        assert cell["delta_tnr"] == 1.0
        assert cell["kappa"] == 0.0
        assert cell["invalid_pun_bias"] == 0


def test_recognition_always_pun_degenerate_kappa(tmp_path):
    experiment = Experiment.prepare(make_config(tmp_path, persona="always-pun"))
    block = runner.run_recognition(experiment)
    for cell in block["cells"]:
        assert cell["tpr_pun_bias"] == 1.0
        assert cell["tnr_pun_bias"] == 0.0
        assert cell["delta_tpr"] == 0.0
        assert cell["delta_tnr"] == 0.0
        assert cell["kappa"] == 1.0


def test_explanation_harvest_and_unsure_judge(tmp_path):
    experiment = Experiment.prepare(make_config(tmp_path))
    block = runner.run_explanation(experiment)
    assert block["missing_explanations"] == 0
    assert len(block["explanations"]) == 4
    pairwise = block["pairwise"]
    assert pairwise["n"] == 4
    assert (pairwise["win_rate"], pairwise["tie_rate"], pairwise["loss_rate"]) == (0, 1.0, 0)
    assert block["punchline"] == {"status": "pending"}


def test_generation_echo_human_overlap_one(tmp_path):
    experiment = Experiment.prepare(make_config(tmp_path, persona="echo-human"))
    block = runner.run_generation(experiment)
    free = block["sections"]["llm_free"]
    assert free["overlap"] == 1.0
    assert free["one_pun_word_rate"] == 1.0
    constrained = block["sections"]["llm_constrained"]
    assert constrained["overlap"] == 1.0
    assert constrained["incorporation"] == 1.0  # echoes contain their own keywords


def test_generation_lazy_generator_rates(tmp_path):
    experiment = Experiment.prepare(make_config(tmp_path, persona="lazy-generator"))
    block = runner.run_generation(experiment)
    free = block["sections"]["llm_free"]
    assert free["lazy_rate"] == 1.0
    assert free["one_pun_word_rate"] == 0.0
    assert block["sections"]["human"]["one_pun_word_rate"] == 1.0


def test_generation_annotations_strict_success(tmp_path):
    config = make_config(tmp_path, persona="echo-human")
    experiment = Experiment.prepare(config)
    # write a synthetic export: every llm generation judged successful by 3
    records = []
    for entry in experiment.test_entries():
        if not entry.is_pun():
            continue
        for mode in ("free", "constrained"):
            tid = runner.generation_task_id("llm", mode, entry.id)
            for annotator in ("a1", "a2", "a3"):
                records.append(annotation_record(
                    tid, annotator, "generation-judgment",
                    {"success": True, "funniness": 3}, time.time()))
    export = tmp_path / "annotations.jsonl"
    lines = [json.dumps({"record": "header", "kind": "all", "count": len(records)})]
    lines += [json.dumps(r) for r in records]
    export.write_text("\n".join(lines) + "\n", encoding="utf-8")

    config.annotations = str(export)
    block = runner.run_generation(experiment)
    free = block["sections"]["llm_free"]
    assert free["success_rate"] == 1.0
    assert free["strict_success_rate"] == 0.0  # overlap 1.0 kills originality
    assert free["funniness"] == 3.0


def test_hom_dataset_synonym_substitution(tmp_path):
    corpus_path = tmp_path / "hom.jsonl"
    save_corpus(toydata.build_mock_corpus(n_het=0, n_hom=4, n_non=6), str(corpus_path))
    config = make_config(
        tmp_path,
        persona="echo-human",
        corpus=str(corpus_path),
        dataset_kind="hom-dataset",
        n_pun_examples=1,
        n_nonpun_examples=1,
        recognition_variants=("basic",),
        synonym_backend=BackendConfig.mock("stock-synonyms",
                                           cache_dir=str(tmp_path / "cache-syn")),
    )
    experiment = Experiment.prepare(config)
    block = runner.run_generation(experiment)
    assert block["synonym_exclusions"] == []
    # surrogate words are out of the LM vocabulary: log-ratio 0 -> sentinel
    human = block["sections"]["human"]
    assert human["surprise_sentinel_rate"] == 1.0


def test_full_run_bit_reproducible(tmp_path):
    config_a = make_config(tmp_path)
    report_a = runner.run_all(config_a)
    out_a = tmp_path / "a"
    report_mod.emit_report(report_a, str(out_a))

    config_b = make_config(tmp_path)  # same caches: warm second run
    report_b = runner.run_all(config_b)
    out_b = tmp_path / "b"
    report_mod.emit_report(report_b, str(out_b))

    for name in ["report.json", "tables.md", *report_mod.FIGURE_FILES]:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_full_run_reproducible_with_cold_caches(tmp_path):
    report_a = runner.run_all(make_config(tmp_path / "run1"))
    report_b = runner.run_all(make_config(tmp_path / "run2"))
    assert report_a == report_b


def test_report_status_partial_without_annotations(tmp_path):
    result = runner.run_all(make_config(tmp_path))
    assert result["status"] == "partial"
    assert result["metadata"]["template_version"]


def test_emit_report_roundtrip_and_figures(tmp_path):
    config = make_config(tmp_path, persona="echo-human")
    result = runner.run_all(config)
    out = tmp_path / "out"
    paths = report_mod.emit_report(result, str(out))
    assert report_mod.roundtrip_equal(result)
    data = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert data["recognition"]["cells"]
    fig4 = (out / "figure4_incorporation.csv").read_text(encoding="utf-8")
    assert "incorporation_rate" in fig4
    assert len(paths) == 6


def test_emit_annotation_tasks_file(tmp_path):
    config = make_config(tmp_path)
    experiment = Experiment.prepare(config)
    result = runner.run_all(config)
    path = tmp_path / "tasks.json"
    count = runner.emit_annotation_tasks(result, experiment, str(path))
    data = json.loads(path.read_text(encoding="utf-8"))
    assert count == len(data["tasks"]) > 0
    kinds = {t["kind"] for t in data["tasks"]}
    assert kinds == {"punchline-check", "pairwise-explanation", "generation-judgment"}
    ids = [t["task_id"] for t in data["tasks"]]
    assert len(ids) == len(set(ids))
