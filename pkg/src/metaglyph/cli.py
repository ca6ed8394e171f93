"""Batch front door: generate scenes from a CSV plus a corpus directory,
manage the corpus, and run the brute-force mapping oracle.

Exit codes: 0 success with at least one result, 1 input error, 2 no result,
3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import shutil
import sys
from pathlib import Path

from . import dataset, metaphor, pipeline, search, semantics
from .config import EngineConfig, load_config
from .errors import MetaglyphError, SpaceTooLarge
from .metaphor import LocalCorpus

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_RESULT = 2
EXIT_INTERNAL = 3


def _backend_from_flag(spec: str):
    if spec == "lexical":
        return semantics.LexicalBackend()
    if spec.startswith("table:"):
        return semantics.TableBackend(spec.split(":", 1)[1])
    if spec.startswith("remote:"):
        return semantics.RemoteEmbeddingBackend(spec.split(":", 1)[1])
    raise ValueError(f"unknown backend {spec!r}; use lexical, table:PATH, or remote:URL")


def _load_engine_config(args) -> EngineConfig:
    cfg = load_config(getattr(args, "config", None))
    search_cfg = cfg.search
    if getattr(args, "iterations", None) is not None:
        search_cfg = dataclasses.replace(search_cfg, iterations=args.iterations)
    if getattr(args, "time_budget_ms", None) is not None:
        search_cfg = dataclasses.replace(search_cfg, time_budget_ms=args.time_budget_ms)
    if getattr(args, "strict_axis_gate", False):
        search_cfg = search_cfg.strict()
    return dataclasses.replace(cfg, search=search_cfg)


def cmd_generate(args) -> int:
    csv_path = Path(args.csv)
    corpus_dir = Path(args.corpus)
    if not csv_path.is_file():
        print(f"error: spreadsheet not found: {csv_path}", file=sys.stderr)
        return EXIT_INPUT
    if not corpus_dir.is_dir():
        print(f"error: corpus directory not found: {corpus_dir}", file=sys.stderr)
        return EXIT_INPUT
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _load_engine_config(args)
    try:
        ds = dataset.load_spreadsheet(csv_path.read_bytes(), csv_path.name, config)
        if args.auto_group:
            proposals = dataset.propose_groups(
                ds, config.grouping.similarity_threshold,
                backend=_backend_from_flag(args.backend))
            ds = dataset.with_groups(ds, proposals)
        corpus = LocalCorpus(corpus_dir)
        candidates = metaphor.search_images(
            ds.topic, limit=args.candidates, corpus=corpus)
        report = pipeline.generate(
            ds, candidates, config=config, seed=args.seed,
            embedding_backend=_backend_from_flag(args.backend),
            jobs=args.jobs)
    except MetaglyphError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    files: dict[str, list[str]] = {}
    for rank, result in enumerate(report.results, start=1):
        svg_path = out_dir / f"rank{rank}.svg"
        svg_path.write_bytes(result.svg)
        legend_path = out_dir / f"rank{rank}.legend.svg"
        legend_path.write_bytes(result.legend)
        mapping_path = out_dir / f"rank{rank}.mapping.json"
        mapping_path.write_text(json.dumps(result.solution_json, indent=2,
                                           sort_keys=True), encoding="utf-8")
        files[f"rank{rank}"] = [svg_path.name, legend_path.name, mapping_path.name]
    payload = report.to_json()
    payload["files"] = files
    (out_dir / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")
    for cand in report.candidates:
        status = cand.reason or f"reward={cand.reward:.4f}"
        print(f"{cand.candidate_id}: {cand.status} ({status})")
    print(f"{len(report.results)} result(s) in {out_dir}")
    return EXIT_OK if report.results else EXIT_NO_RESULT


def cmd_oracle(args) -> int:
    csv_path = Path(args.csv)
    svg_path = Path(args.svg)
    if not csv_path.is_file() or not svg_path.is_file():
        print("error: input file missing", file=sys.stderr)
        return EXIT_INPUT
    config = _load_engine_config(args)
    try:
        ds = dataset.load_spreadsheet(csv_path.read_bytes(), csv_path.name, config)
        backend = _backend_from_flag(args.backend)
        table = semantics.importance_score(ds, backend)
        ds = semantics.apply_importance(ds, table)
        scorer = semantics.RelevanceScorer(embedding_backend=backend,
                                           config=config.semantics)
        candidate = metaphor.MetaphorCandidate(
            id=svg_path.name, source=metaphor.ImageSource.LOCAL_CORPUS,
            svg_bytes=svg_path.read_bytes())
        element_list, space, evaluator = pipeline.prepare_candidate(
            ds, candidate, config, scorer, table.ranking, table.scores)
        value, choices = search.enumerate_optimum(space, evaluator,
                                                  limit=args.limit)
    except SpaceTooLarge as exc:
        print(f"error [space_too_large]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MetaglyphError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    solution = evaluator.solution(choices)
    print(json.dumps({
        "space_size": space.size(),
        "max_reward": value,
        "argmax": solution.to_json(space),
    }, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_corpus(args) -> int:
    corpus_dir = Path(args.corpus)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    corpus = LocalCorpus(corpus_dir)
    config = _load_engine_config(args)
    if args.corpus_cmd == "add":
        failures = 0
        for raw in args.files:
            path = Path(raw)
            if not path.is_file():
                print(f"{path}: missing")
                failures += 1
                continue
            candidate = metaphor.MetaphorCandidate(
                id=path.name, source=metaphor.ImageSource.LOCAL_CORPUS,
                svg_bytes=path.read_bytes())
            try:
                element_list = metaphor.build_element_list(candidate,
                                                           config.decompose)
            except MetaglyphError as exc:
                print(f"{path.name}: rejected [{exc.code}] {exc}")
                failures += 1
                continue
            shutil.copyfile(path, corpus_dir / path.name)
            print(f"{path.name}: accepted "
                  f"({len(element_list.essential)} essential, "
                  f"{len(element_list.removed)} removed, "
                  f"{element_list.structure.value})")
        return EXIT_INPUT if failures == len(args.files) else EXIT_OK
    if args.corpus_cmd == "tag":
        tags = corpus.tags()
        tags[Path(args.file).name] = sorted(set(args.tags))
        corpus.write_tags(tags)
        print(f"{Path(args.file).name}: {', '.join(tags[Path(args.file).name])}")
        return EXIT_OK
    # list
    tags = corpus.tags()
    for path in corpus.files():
        candidate = metaphor.MetaphorCandidate(
            id=path.name, source=metaphor.ImageSource.LOCAL_CORPUS,
            svg_bytes=path.read_bytes())
        try:
            element_list = metaphor.build_element_list(candidate, config.decompose)
            info = (f"{len(element_list.essential)} essential, "
                    f"{element_list.structure.value}")
        except MetaglyphError as exc:
            info = f"invalid [{exc.code}]"
        tag_text = ", ".join(tags.get(path.name, [])) or "-"
        print(f"{path.name}\t{tag_text}\t{info}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _load_engine_config(args)
    if args.corpus:
        config = dataclasses.replace(config, corpus_dir=str(args.corpus))
    app = create_app(config=config, store_path=args.store)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metaglyph",
        description="Generate metaphoric glyph-based visualizations from a spreadsheet.")
    parser.add_argument("--config", help="JSON config file", default=None)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_gen = sub.add_parser("generate", help="run the full pipeline on a CSV")
    p_gen.add_argument("csv")
    p_gen.add_argument("--corpus", required=True, help="directory of candidate SVGs")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--iterations", type=int, default=None)
    p_gen.add_argument("--time-budget-ms", type=int, default=None)
    p_gen.add_argument("--candidates", type=int, default=5)
    p_gen.add_argument("--strict-axis-gate", action="store_true",
                       help="restrict valid axis counts to {0, 1}")
    p_gen.add_argument("--backend", default="lexical",
                       help="lexical | table:PATH | remote:URL")
    p_gen.add_argument("--jobs", type=int, default=1)
    p_gen.add_argument("--auto-group", action="store_true",
                       help="accept all proposed dimension groups")
    p_gen.set_defaults(func=cmd_generate)

    p_oracle = sub.add_parser("oracle",
                              help="exhaustively enumerate the mapping space")
    p_oracle.add_argument("csv")
    p_oracle.add_argument("svg")
    p_oracle.add_argument("--backend", default="lexical")
    p_oracle.add_argument("--strict-axis-gate", action="store_true")
    p_oracle.add_argument("--limit", type=int, default=1_000_000)
    p_oracle.set_defaults(func=cmd_oracle)

    p_corpus = sub.add_parser("corpus", help="manage a local corpus directory")
    p_corpus.add_argument("--corpus", required=True)
    corpus_sub = p_corpus.add_subparsers(dest="corpus_cmd", required=True)
    p_add = corpus_sub.add_parser("add", help="validate and copy SVGs in")
    p_add.add_argument("files", nargs="+")
    p_tag = corpus_sub.add_parser("tag", help="set keywords for one file")
    p_tag.add_argument("file")
    p_tag.add_argument("tags", nargs="+")
    corpus_sub.add_parser("list", help="list files with tags and element counts")
    p_corpus.set_defaults(func=cmd_corpus)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8008)
    p_serve.add_argument("--corpus", default=None)
    p_serve.add_argument("--store", default=None,
                         help="sqlite session store path (default: in-memory)")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MetaglyphError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
