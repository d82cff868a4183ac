"""Command-line interface: dataset generation, verification, evaluation, reporting.

Subcommands: gen-graph, gen-dataset, verify, eval, confidence, report.
Exit codes: 0 ok, 1 domain error, 2 usage error.  Configuration precedence is
CLI flag > config file > built-in default; the API key for live endpoints is
read from the TKGQA_API_KEY environment variable only.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

from .errors import ClientError, ParseError, TkgqaError
from .generator import (
    GraphParams,
    QUESTION_TYPES,
    estimate_tokens,
    export_instances,
    generate_graph,
    generate_instances,
    import_instances,
    verify_instance,
)
from .graph import load_tkg, render_text, save_tkg
from .oracle import oracle_answer
from . import pipelines
from .pipelines import LiveChatClient, PipelineConfig, make_mock_client, run, temporal_confidence
from .scoring import (
    aggregate,
    confidence_report,
    load_rows,
    make_row,
    save_rows,
    score,
)

API_KEY_ENV = "TKGQA_API_KEY"

CONFIG_DEFAULTS = {
    "base_url": "",
    "model": "",
    "temperature": "0",
    "max_tokens": "1024",
    "parallelism": "4",
    "threshold": "0.8",
    "bin_width": "500",
}


def load_config(path: str | Path | None) -> dict[str, str]:
    """Parse a `key = value` config file; '#' starts a comment."""
    config = dict(CONFIG_DEFAULTS)
    if path is None:
        return config
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise TkgqaError(f"config line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        config[key] = value
    return config


def _setting(args_value, config: dict, key: str, cast=str):
    if args_value is not None:
        return args_value
    return cast(config[key]) if config.get(key) not in (None, "") else None


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen_graph(args: argparse.Namespace) -> int:
    params = GraphParams(
        seed=args.seed,
        n_entities=args.entities,
        n_relations=args.relations,
        n_facts=args.facts,
        time_range=(args.time_start, args.time_end),
        max_episodes_per_triple=args.max_episodes,
    )
    g = generate_graph(params)
    save_tkg(g, args.out)
    tokens = estimate_tokens(render_text(g, seed=args.seed))
    print(
        f"entities={len(g.entities)} relations={len(g.relations)} "
        f"facts={len(g.facts)} token_estimate={tokens} out={args.out}"
    )
    return 0


def cmd_gen_dataset(args: argparse.Namespace) -> int:
    graph_path = Path(args.graph)
    g = load_tkg(graph_path)
    types = args.types.split(",") if args.types else None
    out_path = Path(args.out)
    tkg_ref = os.path.relpath(graph_path, start=out_path.parent)
    instances = generate_instances(
        g, per_type=args.per_type, types=types, seed=args.seed, tkg_ref=tkg_ref
    )
    failures = 0
    for inst in instances:
        if not verify_instance(inst):
            failures += 1
            try:
                recomputed = oracle_answer(inst.tkg, inst.canonical_call).to_json()
            except TkgqaError as exc:
                recomputed = {"error": str(exc)}
            print(
                f"VERIFY FAIL {inst.id}: gold={inst.gold.to_json()} oracle={recomputed}",
                file=sys.stderr,
            )
    if failures:
        print(f"{failures} of {len(instances)} instances failed verification", file=sys.stderr)
        return 1
    export_instances(instances, out_path)
    print(f"instances={len(instances)} types={len(set(i.question_type for i in instances))} out={out_path}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    instances = import_instances(args.dataset)
    failures = 0
    for inst in instances:
        if not verify_instance(inst):
            failures += 1
            try:
                recomputed = oracle_answer(inst.tkg, inst.canonical_call).to_json()
            except TkgqaError as exc:
                recomputed = {"error": str(exc)}
            print(f"VERIFY FAIL {inst.id}: gold={inst.gold.to_json()} oracle={recomputed}")
    print(f"verified {len(instances) - failures}/{len(instances)} instances")
    return 1 if failures else 0


def _make_live_client(args, config) -> LiveChatClient:
    base_url = _setting(args.base_url, config, "base_url")
    model = _setting(args.model, config, "model")
    if not base_url or not model:
        raise ClientError("live evaluation needs --base-url and --model (or config entries)")
    api_key = os.environ.get(API_KEY_ENV, "")
    if not api_key:
        raise ClientError(f"set {API_KEY_ENV} in the environment for live endpoints")
    return LiveChatClient(
        base_url,
        api_key,
        max_in_flight=int(_setting(args.parallelism, config, "parallelism", int) or 4),
    )


def cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if (args.mock is None) == (not (args.base_url or config.get("base_url"))):
        print("error: provide exactly one of --mock or a live endpoint (--base-url/--model)", file=sys.stderr)
        return 2
    instances = import_instances(args.dataset)
    techniques = args.technique.split(",")
    unknown = set(techniques) - set(pipelines.TECHNIQUES)
    if unknown:
        print(f"error: unknown techniques {sorted(unknown)}", file=sys.stderr)
        return 2
    model = _setting(args.model, config, "model") or "mock"
    cfg = PipelineConfig(
        model=model,
        temperature=float(_setting(args.temperature, config, "temperature", float) or 0.0),
        max_tokens=int(_setting(None, config, "max_tokens", int) or 1024),
    )

    jobs = [(inst, tech) for tech in techniques for inst in instances]
    # one shared live client (pacing and in-flight bounds apply across jobs);
    # mocks are confined to a single run each
    live_client = _make_live_client(args, config) if args.mock is None else None

    def run_one(job):
        inst, tech = job
        client = live_client if live_client is not None else make_mock_client(
            args.mock, inst, seed=args.seed or 0
        )
        result = run(inst, tech, client, cfg)
        return inst, result, score(result, inst.gold, inst.question_type)

    outcomes = []
    if live_client is not None and (args.parallelism or int(config["parallelism"])) > 1:
        workers = args.parallelism or int(config["parallelism"])
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_one, jobs))
    else:
        outcomes = [run_one(job) for job in jobs]

    rows = [make_row(inst, result, ok) for inst, result, ok in outcomes]
    if args.rows:
        save_rows(rows, args.rows)
    if args.transcripts:
        with open(args.transcripts, "w", encoding="utf-8") as fh:
            for _inst, result, _ok in outcomes:
                fh.write(json.dumps(result.transcript_record(), sort_keys=True) + "\n")
    report = aggregate(rows, bin_width=int(_setting(args.bin_width, config, "bin_width", int) or 500))
    rendered = _render_report(report, args.format)
    if args.report:
        Path(args.report).write_text(rendered + "\n", encoding="utf-8")
    else:
        print(rendered)
    return 0


def _render_report(report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report.to_json(), indent=2, sort_keys=True)
    if fmt == "csv":
        return report.to_csv().rstrip("\n")
    return report.to_text()


def cmd_confidence(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    threshold = args.threshold if args.threshold is not None else float(config["threshold"])
    pairs = []
    path = Path(args.input)
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
        if "actual" not in obj or obj["actual"] not in ("knowledge", "temporal"):
            raise ParseError(line_no, "each task needs an 'actual' label of knowledge|temporal")
        pairs.append((obj["actual"], str(obj.get("question", "")), str(obj.get("data", ""))))

    cfg = PipelineConfig(model=_setting(args.model, config, "model") or "mock")
    scores = []
    live_client = _make_live_client(args, config) if args.mock is None else None
    for actual, question, data in pairs:
        if live_client is not None:
            client = live_client
        else:
            client = make_mock_client(args.mock, _ConfidenceStub(question), seed=0)
        value = temporal_confidence(question, data, client, cfg)
        scores.append((actual, value))
    report = confidence_report(scores, threshold=threshold)
    if args.format == "json":
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
    else:
        print(report.to_text())
    return 0


class _ConfidenceStub:
    """Minimal instance stand-in so mock factories work for confidence runs."""

    def __init__(self, question: str):
        self.id = question[:40]
        self.question_type = "confidence"
        self.canonical_call = None
        self.gold = None
        self.tkg = None


def cmd_report(args: argparse.Namespace) -> int:
    rows = load_rows(args.rows)
    report = aggregate(rows, bin_width=args.bin_width or 500)
    print(_render_report(report, args.format))
    return 0


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tkgqa",
        description="Temporal knowledge-graph question answering toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-graph", help="generate a random temporal knowledge graph")
    p.add_argument("--seed", type=int, required=True, help="master RNG seed (required)")
    p.add_argument("--entities", type=int, default=60, help="entity vocabulary size")
    p.add_argument("--relations", type=int, default=8, help="relation vocabulary size")
    p.add_argument("--facts", type=int, default=270, help="number of facts to place")
    p.add_argument("--time-start", type=int, default=1900, help="earliest allowed year")
    p.add_argument("--time-end", type=int, default=2040, help="latest allowed year")
    p.add_argument("--max-episodes", type=int, default=3, help="max episodes per triple")
    p.add_argument("--out", required=True, help="output fact file (JSON Lines)")
    p.set_defaults(func=cmd_gen_graph)

    p = sub.add_parser("gen-dataset", help="generate a verified question dataset over a graph")
    p.add_argument("--graph", required=True, help="input fact file")
    p.add_argument("--per-type", type=int, default=10, help="instances per question type")
    p.add_argument("--types", default=None, help=f"comma list of types (default: all {len(QUESTION_TYPES)})")
    p.add_argument("--seed", type=int, required=True, help="master RNG seed (required)")
    p.add_argument("--out", required=True, help="output dataset file (JSON Lines)")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("verify", help="re-check gold answers against the brute-force oracle")
    p.add_argument("--dataset", required=True, help="dataset file to verify")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("eval", help="run techniques over a dataset and report accuracy")
    p.add_argument("--dataset", required=True, help="dataset file")
    p.add_argument("--technique", required=True, help="comma list of techniques")
    p.add_argument("--mock", default=None, help="mock client: oracle, random, or a script path")
    p.add_argument("--base-url", default=None, help="chat-completions endpoint base URL")
    p.add_argument("--model", default=None, help="model name for live endpoints")
    p.add_argument("--temperature", type=float, default=None, help="sampling temperature")
    p.add_argument("--seed", type=int, default=None, help="seed for seeded mocks")
    p.add_argument("--parallelism", type=int, default=None, help="live-endpoint worker bound")
    p.add_argument("--rows", default=None, help="write scored rows JSONL here")
    p.add_argument("--transcripts", default=None, help="write transcript JSONL here")
    p.add_argument("--report", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text", help="report format")
    p.add_argument("--bin-width", type=int, default=None, help="token bin width")
    p.add_argument("--config", default=None, help="key = value config file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("confidence", help="classify tasks as temporal vs knowledge")
    p.add_argument("--input", required=True, help="JSONL of {question, data, actual} tasks")
    p.add_argument("--mock", default=None, help="mock client: oracle, random, or a script path")
    p.add_argument("--base-url", default=None, help="chat-completions endpoint base URL")
    p.add_argument("--model", default=None, help="model name for live endpoints")
    p.add_argument("--threshold", type=float, default=None, help="temporal threshold (default 0.8)")
    p.add_argument("--parallelism", type=int, default=None, help="live-endpoint worker bound")
    p.add_argument("--format", choices=("text", "json"), default="text", help="output format")
    p.add_argument("--config", default=None, help="key = value config file")
    p.set_defaults(func=cmd_confidence)

    p = sub.add_parser("report", help="re-aggregate persisted scored rows")
    p.add_argument("--rows", required=True, help="scored rows JSONL")
    p.add_argument("--format", choices=("text", "csv", "json"), default="text", help="report format")
    p.add_argument("--bin-width", type=int, default=None, help="token bin width")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TkgqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
