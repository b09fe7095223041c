"""Command-line entry points: extract, eval, chat, render, serve.

Exit codes: 0 success; 2 at least one per-document failure (other documents
are still written); 64 usage error; 65 no overlapping doc ids in eval; 69
engine unreachable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .datamodel import FILE_SUFFIX, SchemaError, load, save
from .engine import (AuthError, EngineDescriptor, EngineError, GenerationConfig,
                     InferenceEngine, TransportError, engine_from_descriptor)
from .evaluation import (MatchPolicy, corpus_ner_metrics, corpus_relation_metrics,
                         format_report, report_as_json)
from .extractors import FRAME_EXTRACTORS
from .pipeline import RelationStep, TypeFilter, allow_all_pairs, run_pipeline
from .prompt_editor import TemplateIncomplete, chat_turn, extract_template, new_session
from .prompting import MalformedPlaceholder, PromptTemplate
from .viz import viz_render

EX_OK = 0
EX_PARTIAL = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_UNAVAILABLE = 69

_ENGINE_KINDS = {"openai": "openai_compatible", "ollama": "ollama", "scripted": "scripted"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunManifest:
    """Written next to the outputs so every run stays reconstructible."""

    engine: dict
    template: dict
    extractor: dict
    inputs: list[str]
    started_at: str
    finished_at: str
    counts: dict
    relation_template: dict | None = None
    failures: list[dict] = field(default_factory=list)


def _template_entry(path: Path) -> dict:
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    return {"path": str(path), "sha256": digest}


def _load_rules(path: str) -> list[tuple[str, str]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError("rules file must hold a JSON array of [matcher, response] pairs")
    rules = []
    for idx, item in enumerate(data):
        if not isinstance(item, list) or len(item) != 2:
            raise ValueError(f"rules entry #{idx} must be a [matcher, response] pair")
        rules.append((str(item[0]), str(item[1])))
    return rules


def _build_engine(args) -> InferenceEngine:
    kind = _ENGINE_KINDS[args.engine]
    descriptor = EngineDescriptor(
        kind=kind,
        base_url=getattr(args, "base_url", "") or "",
        model=getattr(args, "model", "") or "",
        api_key_env=getattr(args, "api_key_env", "") or "",
    )
    rules = None
    if kind == "scripted":
        if not getattr(args, "rules", None):
            raise ValueError("--engine scripted requires --rules FILE")
        rules = _load_rules(args.rules)
    return engine_from_descriptor(descriptor, rules=rules,
                                  timeout=getattr(args, "timeout", 300.0))


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--engine", choices=sorted(_ENGINE_KINDS), required=True)
    parser.add_argument("--base-url", dest="base_url", default="",
                        help="backend base URL (e.g. http://localhost:8000/v1)")
    parser.add_argument("--model", default="", help="model name for HTTP backends")
    parser.add_argument("--api-key-env", dest="api_key_env", default="",
                        help="name of the env var holding the API key")
    parser.add_argument("--rules", default=None,
                        help="JSON file of [matcher, response] pairs for --engine scripted")
    parser.add_argument("--timeout", type=float, default=300.0,
                        help="per-request timeout in seconds")


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _input_files(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.suffix == ".txt" and p.is_file())
    return [path]


def cmd_extract(args) -> int:
    try:
        engine = _build_engine(args)
        template = PromptTemplate.from_file(args.template)
    except (ValueError, MalformedPlaceholder, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE

    relation_step = None
    relation_template_entry = None
    if args.relations:
        if not args.relation_template:
            print("error: --relations requires --relation-template", file=sys.stderr)
            return EX_USAGE
        try:
            relation_template = PromptTemplate.from_file(args.relation_template)
            if args.filter:
                possible_types_fn = TypeFilter.from_file(args.filter)
            elif args.relation_mode == "multiclass":
                print("error: --relation-mode multiclass requires --filter FILE "
                      "(it defines the possible relation types)", file=sys.stderr)
                return EX_USAGE
            else:
                possible_types_fn = allow_all_pairs
        except (ValueError, MalformedPlaceholder, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EX_USAGE
        relation_step = RelationStep(
            template=relation_template,
            mode=args.relation_mode,
            possible_types_fn=possible_types_fn,
            context_padding=args.context_padding,
        )
        relation_template_entry = _template_entry(Path(args.relation_template))

    input_path = Path(args.input)
    inputs = _input_files(input_path)
    if not inputs:
        print(f"error: no .txt files under {input_path}", file=sys.stderr)
        return EX_USAGE
    output_dir = Path(args.output)
    output_dir.mkdir(parents=True, exist_ok=True)

    started = _now()
    failures = []
    totals = {"documents": 0, "frames": 0, "relations": 0,
              "discarded_records": 0, "llm_calls": 0, "relation_tasks": 0}
    for source in inputs:
        try:
            text = source.read_text(encoding="utf-8")
            result = run_pipeline(
                engine, template, args.extractor, text, source.stem,
                max_concurrency=args.concurrency,
                relation_step=relation_step,
            )
            save(result.document, output_dir / f"{source.stem}{FILE_SUFFIX}")
        except (TransportError, AuthError) as exc:
            print(f"error: engine unreachable: {exc}", file=sys.stderr)
            return EX_UNAVAILABLE
        except (EngineError, ValueError, OSError) as exc:
            failures.append({"input": str(source), "error": f"{type(exc).__name__}: {exc}"})
            print(f"failed: {source}: {exc}", file=sys.stderr)
            continue
        totals["documents"] += 1
        totals["frames"] += len(result.document.frames)
        totals["relations"] += len(result.document.relations)
        totals["discarded_records"] += result.stats.records_discarded
        totals["llm_calls"] += result.stats.llm_calls
        totals["relation_tasks"] += result.relation_tasks
        print(f"wrote {output_dir / (source.stem + FILE_SUFFIX)}: "
              f"{len(result.document.frames)} frame(s), "
              f"{len(result.document.relations)} relation(s)")

    manifest = RunManifest(
        engine={"kind": _ENGINE_KINDS[args.engine], "base_url": args.base_url,
                "model": args.model, "api_key_env": args.api_key_env},
        template=_template_entry(Path(args.template)),
        extractor={"kind": args.extractor, "concurrency": args.concurrency,
                   "relations": bool(args.relations),
                   "relation_mode": args.relation_mode if args.relations else None},
        inputs=[str(p) for p in inputs],
        started_at=started,
        finished_at=_now(),
        counts=totals,
        relation_template=relation_template_entry,
        failures=failures,
    )
    manifest_path = output_dir / "manifest.json"
    manifest_path.write_text(json.dumps(asdict(manifest), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {manifest_path}")
    return EX_PARTIAL if failures else EX_OK


def _load_docs(directory: Path) -> dict[str, object]:
    docs = {}
    for path in sorted(directory.glob(f"*{FILE_SUFFIX}")):
        try:
            doc = load(path)
        except SchemaError as exc:
            print(f"warning: skipping {path}: {exc}", file=sys.stderr)
            continue
        docs[doc.doc_id] = doc
    return docs


def cmd_eval(args) -> int:
    gold = _load_docs(Path(args.gold))
    pred = _load_docs(Path(args.pred))
    shared = sorted(set(gold) & set(pred))
    if not shared:
        print("error: no overlapping doc_ids between --gold and --pred", file=sys.stderr)
        return EX_DATAERR
    for doc_id in sorted(set(gold) ^ set(pred)):
        side = "gold" if doc_id in gold else "pred"
        print(f"warning: doc_id {doc_id!r} only present in {side}", file=sys.stderr)

    policy = MatchPolicy(mode=args.mode, type_attribute=args.type_attribute)
    attribute_keys = [k for k in (args.attributes or "").split(",") if k]
    doc_pairs = [(pred[doc_id], gold[doc_id]) for doc_id in shared]

    ner = corpus_ner_metrics(doc_pairs, policy, attribute_keys)
    reports = {"ner": ner}
    if args.relations:
        reports["relations"] = corpus_relation_metrics(doc_pairs, policy)

    if args.json:
        print(json.dumps({name: json.loads(report_as_json(r))
                          for name, r in reports.items()}, indent=2))
    else:
        print(f"documents scored: {len(shared)}")
        for name, report in reports.items():
            print(format_report(report, title=f"{name} ({args.mode})"))
    return EX_OK


def cmd_chat(args) -> int:
    try:
        engine = _build_engine(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        session = new_session(args.extractor, engine)
    except KeyError:
        print(f"error: unknown extractor kind {args.extractor!r}", file=sys.stderr)
        return EX_USAGE

    print(f"prompt editor session: extractor={args.extractor} engine={engine.kind}")
    print("commands: /save FILE writes the last reply as a template, /quit exits")
    for raw_line in sys.stdin:
        line = raw_line.rstrip("\n")
        if not line.strip():
            continue
        if line.strip() == "/quit":
            print("bye")
            return EX_OK
        if line.startswith("/save"):
            parts = line.split(maxsplit=1)
            if len(parts) != 2:
                print("error: usage is /save FILE")
                continue
            last = session.last_assistant_text()
            if last is None:
                print("error: no assistant reply to save yet")
                continue
            try:
                template = extract_template(last)
            except TemplateIncomplete as exc:
                print(f"error: {exc}")
                continue
            Path(parts[1]).write_text(template.text, encoding="utf-8")
            print(f"saved template to {parts[1]}")
            continue
        print(f"user: {line}")
        try:
            reply = chat_turn(session, line)
        except EngineError as exc:
            print(f"error: engine failure: {exc}")
            continue
        print("assistant:")
        print(reply)
        print("---")
    return EX_OK


def cmd_render(args) -> int:
    try:
        doc = load(args.input)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    html_text = viz_render(doc)
    Path(args.output).write_text(html_text, encoding="utf-8")
    print(f"wrote {args.output}")
    return EX_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    try:
        engine = _build_engine(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    app = create_app(args.docs, engine, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EX_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="framekit",
                     description="LLM information extraction into span-grounded frames")
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="run an extraction pipeline over text files")
    _add_engine_flags(p_extract)
    p_extract.add_argument("--template", required=True, help="frame template file")
    p_extract.add_argument("--extractor", choices=sorted(FRAME_EXTRACTORS), required=True)
    p_extract.add_argument("--input", required=True, help="a .txt file or a directory of them")
    p_extract.add_argument("--output", required=True, help="output directory")
    p_extract.add_argument("--relations", action="store_true",
                           help="also extract relations between frames")
    p_extract.add_argument("--relation-template", dest="relation_template", default=None)
    p_extract.add_argument("--relation-mode", dest="relation_mode",
                           choices=("binary", "multiclass"), default="multiclass")
    p_extract.add_argument("--filter", default=None,
                           help="JSON file of possible-relation-type rules per type pair")
    p_extract.add_argument("--context-padding", dest="context_padding", type=int, default=200)
    p_extract.add_argument("--concurrency", type=int, default=1)
    p_extract.set_defaults(func=cmd_extract)

    p_eval = sub.add_parser("eval", help="score predictions against gold .llmie files")
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--mode", choices=("strict", "relaxed"), default="strict")
    p_eval.add_argument("--attributes", default="",
                        help="comma-separated attribute keys to score for accuracy")
    p_eval.add_argument("--type-attribute", dest="type_attribute", default="Type")
    p_eval.add_argument("--relations", action="store_true")
    p_eval.add_argument("--json", action="store_true", help="emit machine-readable JSON")
    p_eval.set_defaults(func=cmd_eval)

    p_chat = sub.add_parser("chat", help="develop a prompt template with the editor agent")
    _add_engine_flags(p_chat)
    p_chat.add_argument("--extractor", required=True,
                        help="extractor kind the template is for")
    p_chat.set_defaults(func=cmd_chat)

    p_render = sub.add_parser("render", help="render one .llmie document to HTML")
    p_render.add_argument("--input", required=True)
    p_render.add_argument("--output", required=True)
    p_render.set_defaults(func=cmd_render)

    p_serve = sub.add_parser("serve", help="serve the HTTP API and workbench")
    _add_engine_flags(p_serve)
    p_serve.add_argument("--docs", required=True, help="directory of .llmie files")
    p_serve.add_argument("--port", type=int, default=8600)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--static", default=None,
                         help="directory of built workbench assets to serve at /")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
