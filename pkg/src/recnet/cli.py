"""Command line entry points; each subcommand wraps one module."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, proximity, spreading, trails
from .engine import Engine, EngineConfig, load_events, replay_events


def _ingest_options(args: argparse.Namespace) -> corpus.IngestOptions:
    return corpus.IngestOptions(min_keyword_freq=args.min_freq, stemming=args.stem)


def cmd_ingest(args: argparse.Namespace) -> int:
    ctx = corpus.ingest(args.file, _ingest_options(args))
    stats = {
        "records": ctx.m,
        "keywords": ctx.n,
        "cited_documents": ctx.o,
        "documents": ctx.p,
        "citing_records": len(ctx.citing_records),
        "incidence_entries": sum(len(s) for s in ctx.keyword_records),
        "citation_entries": sum(len(s) for s in ctx.doc_out),
    }
    print(json.dumps(stats, indent=2))
    return 0


def cmd_prox(args: argparse.Namespace) -> int:
    ctx = corpus.ingest(args.file, _ingest_options(args))
    if args.kind == "structural":
        matrix = proximity.combine_structural(
            proximity.inwards_proximity(ctx), proximity.outwards_proximity(ctx), args.lam
        )
    else:
        kind = {"keyword": "keyword_semantic", "record": "record_semantic"}.get(args.kind, args.kind)
        matrix = proximity.derived_proximity(ctx, kind)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            proximity.write_proximity(matrix, fh)
    else:
        proximity.write_proximity(matrix, sys.stdout)
    return 0


def cmd_sa(args: argparse.Namespace) -> int:
    with open(args.network, encoding="utf-8") as fh:
        W = proximity.read_proximity(fh, args.kind)
    cfg = spreading.SAConfig(decay=args.decay, top_k=args.top, threshold=args.threshold)
    for node, activation in spreading.spread(W, args.cues.split(","), cfg):
        print(f"{node}\t{activation!r}")
    return 0


def cmd_learn_paths(args: argparse.Namespace) -> int:
    ctx = corpus.ingest(args.corpus, _ingest_options(args))
    with open(args.log, encoding="utf-8") as fh:
        events = trails.parse_path_log(fh)
    paths = trails.extract_paths(events, args.session_gap)
    if not paths:
        print("no paths extracted", file=sys.stderr)
        return 1
    T = trails.learn(ctx, paths)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            proximity.write_proximity(T, fh)
    else:
        proximity.write_proximity(T, sys.stdout)
    print(f"paths={len(paths)} entries={T.nnz}", file=sys.stderr)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    from .service import create_app
    from .simulate import AsgiApiClient, CommunitySpec, HttpApiClient, run_community_sim

    spec = CommunitySpec.from_file(args.spec)
    if args.url:
        client = HttpApiClient(args.url)
    else:
        config = EngineConfig.from_file(args.config)
        client = AsgiApiClient(create_app(Engine.from_config(config)))
    report = run_community_sim(spec, client)
    text = report.to_tsv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    config = EngineConfig.from_file(args.config) if args.config else EngineConfig()
    if args.context:
        config.context_files = list(args.context)
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    serve(config)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    config = EngineConfig.from_file(args.config)
    engine = replay_events(config, load_events(args.events))
    engine.snapshot(args.out)
    print(f"snapshot written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recnet")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_ingest_opts(p: argparse.ArgumentParser) -> None:
        p.add_argument("--min-freq", type=int, default=2, help="keyword frequency floor")
        p.add_argument("--stem", action="store_true", help="light keyword stemming")

    p = sub.add_parser("ingest", help="ingest a record file and print corpus stats")
    p.add_argument("file")
    add_ingest_opts(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("prox", help="compute a proximity matrix from a record file")
    p.add_argument("file")
    p.add_argument("--kind", choices=["inwards", "outwards", "structural", "keyword", "record"], required=True)
    p.add_argument("--lam", type=float, default=0.5, help="inwards weight for --kind structural")
    p.add_argument("--out")
    add_ingest_opts(p)
    p.set_defaults(func=cmd_prox)

    p = sub.add_parser("sa", help="spreading activation over an exported network")
    p.add_argument("--network", required=True)
    p.add_argument("--cues", required=True, help="comma-separated node ids")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--decay", type=float, default=0.8)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--kind", default="composite", help="kind of the network file")
    p.set_defaults(func=cmd_sa)

    p = sub.add_parser("learn-paths", help="learn traversal proximity from a path log")
    p.add_argument("--corpus", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--session-gap", type=float, default=1800.0)
    p.add_argument("--out")
    add_ingest_opts(p)
    p.set_defaults(func=cmd_learn_paths)

    p = sub.add_parser("simulate", help="drive a synthetic community through the loop")
    p.add_argument("--spec", required=True)
    p.add_argument("--config", help="engine config (ignored with --url)")
    p.add_argument("--url", help="base URL of a running service")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config")
    p.add_argument("--context", action="append", help="record file (repeatable)")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="replay an event log into a snapshot")
    p.add_argument("--config", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
