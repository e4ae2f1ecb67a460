"""
Main entry point for the kgscout command line: index, serve, agent, eval, collect and stats.
"""

import argparse
import asyncio
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from kgscout_shared import clear_overrides, get_clean_logger, get_config, reload_config, set_overrides, setup_logging
from kgscout_graph import (
    GraphError,
    STARK_REFERENCE_STATS,
    build_index,
    load_bundle,
    load_graph_files,
    save_bundle,
    validate_against_reference,
)
from kgscout_agent import (
    PolicyTransportError,
    ScriptError,
    Trajectory,
    UsageTracker,
    build_renderer,
    run_parallel,
)
from kgscout_eval import (
    CollectionConfig,
    ExportError,
    QueryCase,
    RecordFormatError,
    SplitError,
    collect,
    evaluate_split,
    load_split,
    neighbors_call_histogram,
    save_report,
    tool_usage_stats,
    trajectory_hit1,
)
from .run_config import RunConfig
from .service import create_app, get_port_check_instructions, is_port_free

TRAJECTORIES_FILE = "trajectories.jsonl"
USAGE_FILE = "usage.json"

# CLI flag dest -> dotted config key
FLAG_KEYS = {
    "bundle": "graph.bundle_path",
    "nodes": "graph.nodes_path",
    "edges": "graph.edges_path",
    "manifest": "graph.manifest_path",
    "k1": "index.k1",
    "b": "index.b",
    "host": "service.host",
    "port": "service.port",
    "policy": "policy.kind",
    "script": "policy.script_path",
    "model": "policy.model",
    "base_url": "policy.base_url",
    "temperature": "policy.temperature",
    "answer_mode": "policy.answer_mode",
    "n": "agent.n_agents",
    "max_steps": "agent.max_steps",
    "seed": "agent.seed",
    "query_ranking": "tools.query_ranking",
    "type_filtering": "tools.type_filtering",
    "neighbors_enabled": "tools.neighbors_enabled",
    "eval_concurrency": "evaluation.concurrency",
    "repeats": "collection.repeats",
    "max_queries": "collection.max_queries",
    "collect_concurrency": "collection.concurrency",
    "log_level": "logging.level",
}

EXPECTED_ERRORS = (
    GraphError,
    SplitError,
    ScriptError,
    RecordFormatError,
    ExportError,
    PolicyTransportError,
    FileNotFoundError,
    ValueError,
)


def _add_policy_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--policy", choices=["scripted", "remote"], help="policy backend")
    parser.add_argument("--script", help="scripted policy file (implies --policy scripted)")
    parser.add_argument("--model", help="model name for the remote policy")
    parser.add_argument("--base-url", dest="base_url", help="OpenAI-compatible endpoint URL")
    parser.add_argument("--temperature", type=float, help="sampling temperature")
    parser.add_argument("--answer-mode", dest="answer_mode", choices=["text", "tool"], help="final answer protocol")
    parser.add_argument("--max-steps", dest="max_steps", type=int, help="step limit per trajectory")
    parser.add_argument("--seed", type=int, help="base seed; agent i uses seed + i")
    parser.add_argument("--no-query-ranking", dest="query_ranking", action="store_const", const=False,
                        help="neighbors ignores the query text")
    parser.add_argument("--no-type-filtering", dest="type_filtering", action="store_const", const=False,
                        help="neighbors ignores type filters")
    parser.add_argument("--search-only", dest="neighbors_enabled", action="store_const", const=False,
                        help="disable the neighbors tool")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgscout", description="Agentic retrieval over knowledge graphs")
    parser.add_argument("--config", help="config file (default: kgscout.config.json, then kgscout.config.default.json)")
    parser.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    index = sub.add_parser("index", help="build a graph + index bundle from ingestion files")
    index.add_argument("--nodes", help="node records (JSONL)")
    index.add_argument("--edges", help="edge records (JSONL)")
    index.add_argument("--manifest", help="type manifest (JSON)")
    index.add_argument("--out", dest="bundle", help="bundle directory to write")
    index.add_argument("--k1", type=float, help="BM25 k1")
    index.add_argument("--b", type=float, help="BM25 b")

    serve = sub.add_parser("serve", help="serve the tools over HTTP")
    serve.add_argument("--bundle", help="bundle directory")
    serve.add_argument("--host", help="bind address")
    serve.add_argument("--port", type=int, help="bind port")

    agent = sub.add_parser("agent", help="answer one query with n fused agents")
    agent.add_argument("--bundle", help="bundle directory")
    agent.add_argument("--query", required=True, help="query text")
    agent.add_argument("--n", type=int, help="number of parallel agents")
    agent.add_argument("--out", help="directory for trajectories.jsonl")
    _add_policy_flags(agent)

    evaluate = sub.add_parser("eval", help="evaluate a query split")
    evaluate.add_argument("--bundle", help="bundle directory")
    evaluate.add_argument("--split", required=True, help="split file (.jsonl, .csv, .tsv)")
    evaluate.add_argument("--n", type=int, help="number of parallel agents")
    evaluate.add_argument("--out", required=True, help="report directory")
    evaluate.add_argument("--concurrency", dest="eval_concurrency", type=int, help="queries evaluated at once")
    _add_policy_flags(evaluate)

    collect_cmd = sub.add_parser("collect", help="collect trajectories for fine-tuning")
    collect_cmd.add_argument("--bundle", help="bundle directory")
    collect_cmd.add_argument("--split", required=True, help="training split file")
    collect_cmd.add_argument("--out", required=True, help="export directory")
    collect_cmd.add_argument("--repeats", type=int, help="trajectories per query")
    collect_cmd.add_argument("--max-queries", dest="max_queries", type=int, help="query subsample size")
    collect_cmd.add_argument("--concurrency", dest="collect_concurrency", type=int, help="trajectories run at once")
    _add_policy_flags(collect_cmd)

    stats = sub.add_parser("stats", help="graph statistics and trajectory behaviour")
    stats.add_argument("--bundle", help="bundle directory")
    stats.add_argument("--expect", choices=sorted(STARK_REFERENCE_STATS), help="compare with published dataset sizes")
    stats.add_argument("--trajectories", help="trajectories.jsonl written by agent or eval")
    stats.add_argument("--split", help="split file, needed for the neighbors-call histogram")
    return parser


def apply_flags(args: argparse.Namespace):
    values = {key: getattr(args, dest) for dest, key in FLAG_KEYS.items() if hasattr(args, dest)}
    if getattr(args, "script", None) and getattr(args, "policy", None) is None:
        values["policy.kind"] = "scripted"
    clear_overrides()
    set_overrides(values)


def _print_json(payload: Dict[str, Any]):
    print(json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2))


def write_trajectories(trajectories: Sequence[Trajectory], path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        for trajectory in trajectories:
            file.write(json.dumps(trajectory.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_trajectories(path) -> List[Trajectory]:
    with open(path, "r", encoding="utf-8") as file:
        return [Trajectory.from_dict(json.loads(line)) for line in file if line.strip()]


def _trajectory_order(trajectory: Trajectory):
    return (trajectory.query_id or "", trajectory.metadata.get("agent_index", 0), trajectory.metadata.get("repeat", 0))


# -- commands ---------------------------------------------------------------------------------------


def cmd_index(run_config: RunConfig, logger) -> int:
    run_config.validate_sources()
    graph = load_graph_files(run_config.nodes_path, run_config.edges_path, run_config.manifest_path, logger=logger)
    index = build_index(graph, run_config.bm25, logger=logger)
    save_bundle(graph, index, run_config.bundle_path, logger=logger)
    _print_json(graph.stats().to_dict())
    return 0


def cmd_serve(run_config: RunConfig, logger) -> int:
    import uvicorn

    toolkit = run_config.load_toolkit(logger=logger)
    if not is_port_free(run_config.host, run_config.port):
        logger.error(f"Port {run_config.port} is already in use!")
        logger.error(get_port_check_instructions(run_config.port))
        logger.error("Please either:")
        logger.error(f"  1. Stop the process using port {run_config.port}")
        logger.error("  2. Use a different port with --port or service.port")
        return 1

    app = create_app(toolkit, logger=logger)
    logger.info(f"Serving tools for graph '{toolkit.graph.name}' on http://{run_config.host}:{run_config.port}")
    # uvicorn handles SIGINT/SIGTERM with a graceful shutdown
    server = uvicorn.Server(uvicorn.Config(app, host=run_config.host, port=run_config.port, log_level="warning"))
    server.run()
    return 0


async def cmd_agent(run_config: RunConfig, query: str, out: Optional[str], logger) -> int:
    run_config.validate_policy()
    toolkit = run_config.load_toolkit(logger=logger)
    usage_tracker = UsageTracker(logger=logger)
    ranking, trajectories = await run_parallel(
        query,
        run_config.policy_factory(usage_tracker, logger=logger),
        run_config.n_agents,
        toolkit,
        run_config.policy,
        limit=run_config.fusion_limit,
        logger=logger,
    )
    if out:
        write_trajectories(trajectories, Path(out) / TRAJECTORIES_FILE)

    print(f"{'rank':>4}  {'votes':>5}  {'first':>5}  id")
    for rank, entry in enumerate(ranking.entries, start=1):
        print(f"{rank:>4}  {entry.votes:>5}  {entry.first_position:>5}  {entry.id}")
    print(f"{ranking.successful_agents}/{ranking.total_agents} agent(s) succeeded")
    if ranking.status == "failed":
        logger.error("All agents failed")
        return 1
    return 0


async def cmd_eval(run_config: RunConfig, split_path: str, out: str, logger) -> int:
    run_config.validate_policy()
    toolkit = run_config.load_toolkit(logger=logger)
    cases = load_split(split_path, graph=toolkit.graph, logger=logger)
    usage_tracker = UsageTracker(logger=logger, usage_log_path=Path(out) / USAGE_FILE)
    factory = run_config.policy_factory(usage_tracker, logger=logger)
    renderer = build_renderer(run_config.policy, logger=logger)
    trajectories: List[Trajectory] = []

    async def retrieve(case: QueryCase) -> List[str]:
        ranking, agent_trajectories = await run_parallel(
            case.query,
            factory,
            run_config.n_agents,
            toolkit,
            run_config.policy,
            limit=run_config.fusion_limit,
            renderer=renderer,
            query_id=case.id,
            logger=logger,
        )
        trajectories.extend(agent_trajectories)
        if ranking.status == "failed":
            raise RuntimeError(f"all {ranking.total_agents} agent(s) failed")
        return ranking.ids

    report = await evaluate_split(cases, retrieve, concurrency=run_config.eval_concurrency, logger=logger)
    trajectories.sort(key=_trajectory_order)
    answers = {case.id: case.answer_ids for case in cases}
    histogram = neighbors_call_histogram(
        trajectories, [trajectory_hit1(t, answers[t.query_id]) for t in trajectories]
    )
    usage = tool_usage_stats(trajectories, graph=toolkit.graph.name)
    save_report(report, out, tool_usage=usage, histogram=histogram, logger=logger)
    write_trajectories(trajectories, Path(out) / TRAJECTORIES_FILE)
    usage_tracker.save_usage_log()
    print(report.to_table())
    return 0


async def cmd_collect(run_config: RunConfig, split_path: str, out: str, logger) -> int:
    run_config.validate_policy()
    toolkit = run_config.load_toolkit(logger=logger)
    cases = load_split(split_path, graph=toolkit.graph, logger=logger)
    usage_tracker = UsageTracker(logger=logger, usage_log_path=Path(out) / USAGE_FILE)
    collection = CollectionConfig.from_config()
    # remote policies read temperature from their own config
    run_config = replace(
        run_config,
        policy=replace(run_config.policy, temperature=collection.temperature, max_steps=collection.max_steps),
    )
    manifest = await collect(
        cases,
        run_config.policy_factory(usage_tracker, logger=logger),
        toolkit,
        run_config.policy,
        collection,
        out,
        usage_tracker=usage_tracker,
        logger=logger,
    )
    usage_tracker.save_usage_log()
    _print_json(manifest["counts"])
    return 0


def cmd_stats(run_config: RunConfig, expect: Optional[str], trajectories_path: Optional[str], split_path: Optional[str], logger) -> int:
    run_config.validate_bundle()
    graph, _ = load_bundle(run_config.bundle_path, logger=logger)
    stats = graph.stats()
    payload: Dict[str, Any] = {"graph": graph.name, "stats": stats.to_dict()}
    status = 0
    if expect:
        mismatches = validate_against_reference(stats, expect)
        payload["reference"] = {"dataset": expect, "mismatches": mismatches}
        if mismatches:
            logger.error(f"Graph does not match the published {expect} sizes: {mismatches}")
            status = 1
    if trajectories_path:
        trajectories = read_trajectories(trajectories_path)
        payload["tool_usage"] = tool_usage_stats(trajectories, graph=graph.name).to_dict()
        if split_path:
            answers = {case.id: case.answer_ids for case in load_split(split_path, graph=graph, logger=logger)}
            outcomes = [trajectory_hit1(t, answers.get(t.query_id, ())) for t in trajectories]
            payload["neighbors_call_histogram"] = neighbors_call_histogram(trajectories, outcomes).to_dict()
    _print_json(payload)
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.config:
        reload_config(args.config)
    apply_flags(args)

    root_logger = setup_logging(level=get_config("logging.level", "INFO"))
    logger = get_clean_logger("main", root_logger)

    try:
        run_config = RunConfig.from_config()
        if args.command == "index":
            return cmd_index(run_config, logger)
        if args.command == "serve":
            return cmd_serve(run_config, logger)
        if args.command == "agent":
            return asyncio.run(cmd_agent(run_config, args.query, args.out, logger))
        if args.command == "eval":
            return asyncio.run(cmd_eval(run_config, args.split, args.out, logger))
        if args.command == "collect":
            return asyncio.run(cmd_collect(run_config, args.split, args.out, logger))
        if args.command == "stats":
            return cmd_stats(run_config, args.expect, args.trajectories, args.split, logger)
    except EXPECTED_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        return 1
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 1
    return 1


def run():
    """Synchronous wrapper for the console script"""
    sys.exit(main())


if __name__ == "__main__":
    run()
