"""Command-line entry points.

One JSON config file drives the experiment subcommands; flags override
config keys. Exit codes: 0 success, 1 partial (pending human annotations),
2 fatal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import annotation, report, runner
from .corpus import import_expun, import_semeval, load_corpus, merge, save_corpus, validate

log = logging.getLogger(__name__)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                        help="override a config key (value parsed as JSON)")


def _load_config(args) -> runner.ExperimentConfig:
    overrides = {}
    for item in args.set:
        key, _, value = item.partition("=")
        if not _:
            raise SystemExit(f"--set needs KEY=VALUE, got {item!r}")
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key] = value
    return runner.load_config(args.config, overrides)


def cmd_import(args) -> int:
    entries = import_semeval(args.semeval_xml, args.gold)
    expun = import_expun(args.expun) if args.expun else None
    if expun is None:
        from .corpus import ExpunAnnotations

        expun = ExpunAnnotations(by_id={})
    corpus = merge(entries, expun)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} entries to {args.out}"
          f" (dropped {len(corpus.dropped)} without explanations)")
    return 0


def cmd_validate(args) -> int:
    corpus = load_corpus(args.corpus)
    result = validate(corpus)
    for violation in result.violations:
        print(f"{violation.entry_id}\t{violation.rule}\t{violation.detail}")
    print(f"{len(result.violations)} violations in {len(corpus)} entries")
    return 0 if result else 1


def _run_tasks(args, tasks: tuple[str, ...]) -> int:
    config = _load_config(args)
    result = runner.run_all(config, tasks=tasks)
    report.emit_report(result, config.output_dir)
    if args.emit_annotation_tasks:
        experiment = runner.Experiment.prepare(config)
        count = runner.emit_annotation_tasks(result, experiment,
                                             args.emit_annotation_tasks)
        print(f"wrote {count} annotation tasks to {args.emit_annotation_tasks}")
    print(f"report written to {config.output_dir} (status: {result['status']})")
    return 0 if result["status"] == "complete" else 1


def cmd_recognize(args) -> int:
    return _run_tasks(args, ("recognition",))


def cmd_explain(args) -> int:
    return _run_tasks(args, ("explanation",))


def cmd_generate(args) -> int:
    return _run_tasks(args, ("generation",))


def cmd_judge(args) -> int:
    return _run_tasks(args, ("explanation",))


def cmd_synonyms(args) -> int:
    config = _load_config(args)
    experiment = runner.Experiment.prepare(config)
    entries = [e for e in experiment.test_entries() if e.pun_type == "hom"]
    synonyms = runner.acquire_synonyms(experiment, entries)
    for entry_id in sorted(synonyms):
        pair = synonyms[entry_id]
        rendered = "EXCLUDED" if pair is None else f"{pair[0]}\t{pair[1]}"
        print(f"{entry_id}\t{rendered}")
    return 0


def cmd_metrics(args) -> int:
    return _run_tasks(args, ("recognition", "explanation", "generation"))


def cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as handle:
        data = json.load(handle)
    paths = report.emit_report(data, args.out)
    print("\n".join(paths))
    return 0


def cmd_annotate_serve(args) -> int:
    store = annotation.AnnotationStore.from_task_file(
        args.tasks, args.log, lease_seconds=args.lease_seconds,
        required_annotators=args.required_annotators)
    server = annotation.AnnotationServer(store, host=args.host, port=args.port,
                                         ui_dir=args.ui_dir)
    print(f"annotation service listening on {server.address}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="punprobe",
                                     description="pun understanding evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("import", help="build the canonical corpus from upstream files")
    p.add_argument("--semeval-xml", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--expun", help="delimited annotation file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("validate", help="check a canonical corpus against the invariants")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_validate)

    for name, func in (("recognize", cmd_recognize), ("explain", cmd_explain),
                       ("generate", cmd_generate), ("judge", cmd_judge),
                       ("metrics", cmd_metrics)):
        p = sub.add_parser(name)
        _add_config_arguments(p)
        p.add_argument("--emit-annotation-tasks", metavar="PATH",
                       help="also write the annotation task file")
        p.set_defaults(func=func)

    p = sub.add_parser("synonyms", help="acquire hom-pun sense synonyms")
    _add_config_arguments(p)
    p.set_defaults(func=cmd_synonyms)

    p = sub.add_parser("report", help="re-emit tables and figure CSVs from report.json")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("annotate-serve", help="serve annotation tasks over HTTP")
    p.add_argument("--tasks", required=True, help="annotation task JSON file")
    p.add_argument("--log", required=True, help="event log path (JSONL, append-only)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--ui-dir", help="static directory with the annotation UI bundle")
    p.add_argument("--lease-seconds", type=float, default=annotation.DEFAULT_LEASE_SECONDS)
    p.add_argument("--required-annotators", type=int, default=3)
    p.set_defaults(func=cmd_annotate_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # fatal: config, corpus, or backend failure
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
