"""Command-line entry points for every pipeline stage.

Commands are deterministic given their flags: identical invocations write
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import replace
from pathlib import Path

from . import corpus_io
from .crowd import auto_paraphrase
from .errors import ConvforgeError, EmptyCorpusError
from .expansion import expand
from .metrics import compute_report, import_corpus
from .scenario import GoalConfig
from .selfplay import generate_outlines
from .store import PipelineStore
from .task_spec import load_task_spec_files
from .templates import load_overrides


def _load_config(path: str | None) -> GoalConfig:
    if not path:
        return GoalConfig()
    with open(path, encoding="utf-8") as f:
        return GoalConfig.from_dict(json.load(f))


def _load_specs(schema_paths: list[str], db_paths: list[str]):
    if len(schema_paths) != len(db_paths):
        raise ConvforgeError("need one --db per --schema")
    return [load_task_spec_files(s, d) for s, d in zip(schema_paths, db_paths)]


def cmd_generate(args) -> int:
    specs = _load_specs(args.schema, args.db)
    config = _load_config(args.config)
    if args.p_unsat is not None:
        config = replace(config, p_unsat=args.p_unsat)
    if args.p_multi_goal is not None:
        config = replace(config, p_multi_goal=args.p_multi_goal)
    grammar = None
    if args.overrides:
        with open(args.overrides, encoding="utf-8") as f:
            grammar = load_overrides(f.read())
    batch = generate_outlines(
        specs if len(specs) > 1 else specs[0],
        config,
        n=args.n,
        seed=args.seed,
        dedup=args.dedup,
        max_turns=args.max_turns,
        grammar=grammar,
    )
    corpus_io.write_outlines(args.out, list(batch.outlines))
    print(
        f"wrote {len(batch.outlines)} outlines to {args.out} "
        f"({batch.episodes_run} episodes, {batch.duplicates_dropped} duplicates dropped)"
    )
    if batch.exhausted:
        print("warning: dedup retry budget exhausted before reaching the requested count")
    return 0


def cmd_templates(args) -> int:
    outlines = corpus_io.read_outlines(args.outlines)
    lines = []
    for outline in outlines:
        lines.append(f"# {outline.outline_id}")
        for turn in outline.turns:
            lines.append(f"{turn.annotation.speaker.value}: {turn.template}")
        lines.append("")
    Path(args.out).write_text("\n".join(lines), encoding="utf-8")
    print(f"wrote templates for {len(outlines)} outlines to {args.out}")
    return 0


def cmd_tasks(args) -> int:
    outlines = corpus_io.read_outlines(args.outlines)
    store = PipelineStore(args.state_dir)
    tasks = store.init_tasks(outlines, args.k)
    print(f"created {len(tasks)} paraphrase tasks in {args.state_dir}")
    return 0


def cmd_autoparaphrase(args) -> int:
    store = PipelineStore(args.state_dir)
    submitted = 0
    for task_id in sorted(store.tasks):
        if task_id in store.rewrites:
            continue
        task = store.tasks[task_id]
        outline = store.outlines[task.outline_ref]
        rewrite = auto_paraphrase(outline)
        store.submit(task_id, rewrite.worker_id, {"utterances": list(rewrite.utterances)})
        submitted += 1
    print(f"auto-paraphrased {submitted} tasks in {args.state_dir}")
    return 0


def cmd_finalize(args) -> int:
    store = PipelineStore(args.state_dir)
    result = store.finalize()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_io.write_dialogues(out_dir / "dialogues.jsonl", list(result.dialogues))
    with open(out_dir / "paraphrase_map.json", "w", encoding="utf-8") as f:
        json.dump(result.paraphrase_map.to_dict(), f, ensure_ascii=False, indent=2)
    with open(out_dir / "drop_report.json", "w", encoding="utf-8") as f:
        json.dump(result.drop_report.to_dict(), f, ensure_ascii=False, indent=2)
    report = result.drop_report
    print(
        f"finalized {report.dialogues_out} of {report.dialogues_in} dialogues "
        f"({report.total_dropped()} dropped) into {out_dir}"
    )
    return 0


def cmd_expand(args) -> int:
    from .crowd import ParaphraseMap

    outlines = corpus_io.read_outlines(args.outlines)
    with open(args.map, encoding="utf-8") as f:
        pmap = ParaphraseMap.from_dict(json.load(f))
    rng = random.Random(args.seed)
    dialogues, dropped = expand(outlines, pmap, rng, strict=args.strict_keys)
    corpus_io.write_dialogues(args.out, dialogues)
    print(f"expanded {len(dialogues)} dialogues to {args.out} ({dropped} outlines dropped)")
    return 0


def cmd_report(args) -> int:
    dialogues = import_corpus(args.corpus, format=args.format)
    if not dialogues:
        raise EmptyCorpusError(f"no dialogues in {args.corpus}")
    report = compute_report(dialogues)
    print(report.as_table())
    if args.out_dir:
        from .plots import save_report_figure

        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(report.as_table() + "\n", encoding="utf-8")
        (out_dir / "report.tsv").write_text(report.as_tsv() + "\n", encoding="utf-8")
        save_report_figure(report, out_dir / "report.png")
        print(f"wrote report.txt, report.tsv, report.png to {out_dir}")
    return 0


def cmd_split(args) -> int:
    dialogues = corpus_io.read_dialogues(args.corpus)
    ratios = tuple(float(r) for r in args.ratios.split(","))
    if len(ratios) != 3:
        raise ConvforgeError("--ratios needs three comma-separated numbers")
    train, dev, test = corpus_io.split_corpus(
        dialogues, ratios, seed=args.seed, allow_empty=args.allow_empty
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, split in (("train", train), ("dev", dev), ("test", test)):
        corpus_io.write_dialogues(out_dir / f"{name}.jsonl", split)
    print(f"split {len(dialogues)} dialogues into {len(train)}/{len(dev)}/{len(test)}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.state_dir, args.port, ui_dir=args.ui_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convforge",
        description="Generate, annotate, expand, and measure goal-oriented dialogue datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run self-play and write outlines")
    p.add_argument("--schema", action="append", required=True, help="task schema JSON (repeatable)")
    p.add_argument("--db", action="append", required=True, help="entity database JSON (repeatable)")
    p.add_argument("-n", type=int, default=100, help="number of outlines")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="scenario config JSON")
    p.add_argument("--overrides", help="template override JSON")
    p.add_argument("--out", required=True, help="output outlines JSONL")
    p.add_argument("--dedup", action="store_true", help="drop outlines with repeated flows")
    p.add_argument("--max-turns", type=int, default=30)
    p.add_argument("--p-unsat", type=float, default=None, help="override unsatisfiable-goal rate")
    p.add_argument("--p-multi-goal", type=float, default=None, help="override multi-goal rate")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("templates", help="dump template utterances for review")
    p.add_argument("--outlines", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_templates)

    p = sub.add_parser("tasks", help="seed a state dir with paraphrase tasks")
    p.add_argument("--outlines", required=True)
    p.add_argument("--state-dir", required=True)
    p.add_argument("-k", type=int, default=2, help="rewrites to collect per outline")
    p.set_defaults(func=cmd_tasks)

    p = sub.add_parser("autoparaphrase", help="answer open tasks with identity rewrites")
    p.add_argument("--state-dir", required=True)
    p.set_defaults(func=cmd_autoparaphrase)

    p = sub.add_parser("finalize", help="emit dialogues, paraphrase map, and drop report")
    p.add_argument("--state-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_finalize)

    p = sub.add_parser("expand", help="realize outlines through the paraphrase map")
    p.add_argument("--outlines", required=True)
    p.add_argument("--map", required=True, help="paraphrase map JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--strict-keys",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="key lookups on full annotations (default) or allow value substitution",
    )
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("report", help="compute corpus diversity metrics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("native", "dstc2_like"), default="native")
    p.add_argument("--out-dir", help="also write report.txt/.tsv/.png here")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("split", help="partition a corpus into train/dev/test")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ratios", default="0.5,0.16,0.34")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--allow-empty", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("serve", help="run the annotation task service")
    p.add_argument("--state-dir", required=True)
    p.add_argument("--port", type=int, default=8723)
    p.add_argument("--ui-dir", help="static UI bundle to host at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
