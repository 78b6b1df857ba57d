"""Command-line surface: deterministic file-to-file pipeline stages.

    sgqgen ingest scenes.jsonl --out corpus.index.json
    sgqgen generate corpus.index.json --seed 7 --out examples.jsonl
    sgqgen exec program.txt scenes.jsonl
    sgqgen balance examples.jsonl --out balanced.jsonl
    sgqgen split --train-pool a.jsonl --eval-pool b.jsonl --spec split.txt --out splits/
    sgqgen stats examples.jsonl --out stats.tsv --figures figures/
    sgqgen verify splits/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .balance import balance, compute_stats
from .config import PipelineConfig
from .generate import generate_examples, resolve_resources
from .interpreter import ExecutionError, execute
from .mining import CorpusIndex, build_masked_index
from .programs import ProgramError, parse_program
from .records import read_records, write_records
from .scenes import SceneError, load_scene_graphs
from .splits import (
    PropertyError,
    SplitError,
    build_split,
    parse_split_spec,
    read_report,
    verify_split,
    write_report,
)


def _header(command: str, config: PipelineConfig) -> dict:
    payload = config.to_dict()
    # Worker count never affects output bytes, so it is not provenance.
    payload.pop("threads", None)
    return {
        "tool": "sgqgen",
        "version": __version__,
        "command": command,
        "config": payload,
    }


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        config = config.override(seed=args.seed)
    if getattr(args, "threads", None) is not None:
        config = config.override(threads=args.threads)
    return config


def cmd_ingest(args) -> int:
    config = _load_config(args)
    try:
        scenes = load_scene_graphs(args.scenes)
    except SceneError as exc:
        print(f"ingest error: {exc}", file=sys.stderr)
        return 2
    index = build_masked_index(
        scenes, max_objects=config.max_objects, header=_header("ingest", config)
    )
    out = args.out or "corpus.index.json"
    index.save(out)
    print(f"ingested {len(scenes)} scenes -> {out} ({len(index.entries)} masked keys)")
    return 0


def cmd_generate(args) -> int:
    config = _load_config(args)
    index = CorpusIndex.load(args.corpus)
    records, summary = generate_examples(index, config)
    out = args.out or "examples.jsonl"
    write_records(out, records, header=_header("generate", config))
    skipped = sum(v for k, v in summary.items() if k != "records")
    print(f"wrote {len(records)} records -> {out} ({skipped} candidates skipped)")
    if args.summary:
        for key, value in summary.items():
            print(f"  {key}\t{value}")
    return 0


def cmd_exec(args) -> int:
    config = _load_config(args)
    _, categories = resolve_resources(config)
    try:
        program = parse_program(Path(args.program).read_text(encoding="utf-8"))
    except ProgramError as exc:
        print(f"program error: {exc}", file=sys.stderr)
        return 2
    try:
        scenes = load_scene_graphs(args.scenes)
    except SceneError as exc:
        print(f"scene error: {exc}", file=sys.stderr)
        return 2
    try:
        answer = execute(program, scenes, categories)
    except ExecutionError as exc:
        print(f"{exc.kind}: {exc}", file=sys.stderr)
        return 1
    print(answer.render())
    return 0


def cmd_balance(args) -> int:
    config = _load_config(args)
    _, records = read_records(args.examples)
    kept = balance(records, seed=config.seed)
    out = args.out or "balanced.jsonl"
    write_records(out, kept, header=_header("balance", config))
    print(f"retained {len(kept)} of {len(records)} records -> {out}")
    return 0


def cmd_split(args) -> int:
    config = _load_config(args)
    spec = parse_split_spec(Path(args.spec).read_text(encoding="utf-8"))
    if args.seed is not None:
        spec = type(spec)(**{**spec.to_dict(), "seed": args.seed})
    _, train_pool = read_records(args.train_pool)
    _, eval_pool = read_records(args.eval_pool)
    try:
        result = build_split(train_pool, eval_pool, spec)
    except (SplitError, PropertyError) as exc:
        print(f"split error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out or "splits")
    out_dir.mkdir(parents=True, exist_ok=True)
    header = _header("split", config)
    header["split_spec"] = spec.to_dict()
    write_records(out_dir / "train.jsonl", result.train, header=header)
    write_records(out_dir / "dev.jsonl", result.dev, header=header)
    write_records(out_dir / "test.jsonl", result.test, header=header)
    report = verify_split(result.train, result.dev, result.test, spec, result.info)
    write_report(out_dir / "report.json", spec, result.info, report)
    status = "pass" if report.passed else "FAIL"
    print(
        f"split {spec.mode}: train={len(result.train)} dev={len(result.dev)} "
        f"test={len(result.test)} filtered={result.info.get('filtered', 0)} [{status}]"
    )
    for violation in report.violations:
        print(f"  violation: {violation}", file=sys.stderr)
    return 0 if report.passed else 1


def cmd_stats(args) -> int:
    config = _load_config(args)
    _, records = read_records(args.examples)
    stats = compute_stats(records)
    lines = [f"{key}\t{value}" for key, value in stats.to_dict().items()]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    if args.json:
        payload = {"_header": _header("stats", config), "stats": stats.to_dict()}
        Path(args.json).write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        print(f"wrote {args.json}")
    if args.figures:
        from .figures import render_stats_figures

        for path in render_stats_figures(records, args.figures):
            print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    split_dir = Path(args.split_dir)
    spec, info, _ = read_report(split_dir / "report.json")
    if args.spec:
        spec = parse_split_spec(Path(args.spec).read_text(encoding="utf-8"))
    _, train = read_records(split_dir / "train.jsonl")
    _, dev = read_records(split_dir / "dev.jsonl")
    _, test = read_records(split_dir / "test.jsonl")
    report = verify_split(train, dev, test, spec, info)
    if args.out:
        write_report(args.out, spec, info, report)
    status = "pass" if report.passed else "FAIL"
    print(
        f"verify {spec.mode}: train={report.train_size} eval={report.eval_size} "
        f"violations={len(report.violations)} [{status}]"
    )
    for violation in report.violations:
        print(f"  violation: {violation}", file=sys.stderr)
    for warning in report.warnings:
        print(f"  warning: {warning}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgqgen",
        description="Generate multi-image question/program/answer datasets from "
        "scene graphs and build audited compositional splits.",
    )
    parser.add_argument("--version", action="version", version=f"sgqgen {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def shared(p):
        p.add_argument("--seed", type=int, default=None, help="random seed")
        p.add_argument("--config", help="pipeline config JSON")
        p.add_argument("--out", help="output path")
        p.add_argument("--threads", type=int, default=None, help="worker threads")

    p = sub.add_parser("ingest", help="validate scenes and build the masked index")
    p.add_argument("scenes", help="scene JSONL file")
    shared(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("generate", help="generate examples from an ingested corpus")
    p.add_argument("corpus", help="corpus index file from ingest")
    p.add_argument("--summary", action="store_true", help="print skip-reason tallies")
    shared(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("exec", help="execute a program file over scenes")
    p.add_argument("program", help="program text file")
    p.add_argument("scenes", help="scene JSONL file")
    shared(p)
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("balance", help="deduplicate and balance generated examples")
    p.add_argument("examples", help="example JSONL file")
    shared(p)
    p.set_defaults(func=cmd_balance)

    p = sub.add_parser("split", help="build a compositional split")
    p.add_argument("--train-pool", required=True, help="training-source example JSONL")
    p.add_argument("--eval-pool", required=True, help="evaluation-source example JSONL")
    p.add_argument("--spec", required=True, help="split spec file")
    shared(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stats", help="corpus statistics report")
    p.add_argument("examples", help="example JSONL file")
    p.add_argument("--json", help="also write a machine-readable stats record")
    p.add_argument("--figures", help="directory for report figures (PNG)")
    shared(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("verify", help="re-audit a built split directory")
    p.add_argument("split_dir", help="directory written by the split command")
    p.add_argument("--spec", help="split spec file (defaults to the stored spec)")
    shared(p)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
