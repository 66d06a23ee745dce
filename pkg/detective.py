"""Detective CLI - run queries, the planted-clue benchmark, graph inspection or idf rebuilds"""
import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from core.benchmark import VARIANTS, evaluate, generate_benchmark
from core.config import load_config
from core.error_handler import ErrorLogger, configure_logging, exit_code_for
from core.idf_builder import build_idf_table
from core.pipeline import inspect_graph, run_query
from core.scoring import DEFAULT_IDF_PATH

load_dotenv()

logger = logging.getLogger("detective")


def _split_list(value: Optional[str]) -> List[str]:
    return [v.strip() for v in (value or "").split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="detective", description="Graph-based active evidence search over long videos")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override one config value (repeatable)")
        p.add_argument("--out", help="output directory for artifacts")
        p.add_argument("--verbose", action="store_true", help="debug logging")

    run = sub.add_parser("run", help="answer one question about a feature bundle")
    run.add_argument("--bundle", required=True, help="bundle directory or JSON file")
    run.add_argument("--query", required=True, help="question text")
    run.add_argument("--options", help="comma-separated answer options (omit for free-form)")
    run.add_argument("--mock", action="store_true", help="use the scripted mock providers")
    run.add_argument("--cache-dir", help="provider response cache directory")
    common(run)

    bench = sub.add_parser("bench", help="planted-clue benchmark over seeded instances")
    bench.add_argument("--seeds", type=int, default=200, help="number of instances (seeds 0..N-1)")
    bench.add_argument("--k", type=int, default=120, help="segments per instance")
    bench.add_argument("--clue-count", type=int, default=6)
    bench.add_argument("--clusters", type=int, default=2)
    bench.add_argument("--decoys", type=int, default=2, help="decoy segments per cluster")
    bench.add_argument("--noise", type=float, default=0.1)
    bench.add_argument("--variants", default=",".join(VARIANTS), help="comma-separated variants")
    bench.add_argument("--workers", type=int, default=4)
    common(bench)

    graph = sub.add_parser("graph", help="segment a bundle and dump its affinity graph")
    graph.add_argument("--bundle", required=True)
    common(graph)

    idf = sub.add_parser("build-idf", help="rebuild the default lexical idf table")
    idf.add_argument("--docs", help="directory of plain-text or .gz documents (default: nltk brown corpus)")
    idf.add_argument("--table", default=DEFAULT_IDF_PATH, help="output .tsv path")
    idf.add_argument("--min-df", type=int, default=3, help="terms in fewer documents are left out")
    idf.add_argument("--ceiling", type=float, default=1.5, help="weight of a term seen in exactly min-df documents")
    common(idf)
    return parser


def _run(args) -> None:
    result = run_query(
        args.bundle, args.query, _split_list(args.options),
        config_path=args.config, overrides=args.overrides,
        mock=args.mock, out_dir=args.out, cache_dir=args.cache_dir,
    )
    print(f"Answer: {result.answer.letter or result.answer.status}")
    if result.answer.letter is None:
        print(result.answer.raw)


def _bench(args) -> None:
    cfg = load_config(args.config, args.overrides)
    instances = [
        generate_benchmark(seed, k=args.k, clue_count=args.clue_count, noise=args.noise,
                           clusters=args.clusters, decoys_per_cluster=args.decoys)
        for seed in range(args.seeds)
    ]
    report = evaluate(instances, _split_list(args.variants), cfg, workers=args.workers, out_dir=args.out)
    print(report.summary())


def _graph(args) -> None:
    record = inspect_graph(args.bundle, args.config, args.overrides, args.out)
    print(f"{len(record['nodes'])} segments, {record['graph']['nnz']} nonzeros, "
          f"spectral radius {record['spectral_radius']:.6f}")


def _build_idf(args) -> None:
    weights = build_idf_table(args.table, args.docs, args.min_df, args.ceiling)
    print(f"{len(weights)} idf weights -> {args.table}")


COMMANDS = {"run": _run, "bench": _bench, "graph": _graph, "build-idf": _build_idf}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        COMMANDS[args.command](args)
        return 0
    except Exception as e:
        record = ErrorLogger().log_error(e, context={'command': args.command}, out_dir=args.out)
        print(f"❌ {record['error_type']}: {record['message']}", file=sys.stderr)
        print(f"   {record['hint']}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
