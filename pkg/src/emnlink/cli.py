"""Command-line entry point.

Subcommands cover the full pipeline: build-emn, train, link, eval
(recall, cv, ablate, combined), inspect, and serve.  Every subcommand
works against local files; link and inspect can instead talk to a
running service with --server.  Exit codes: 0 success, 1 domain error,
2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from datetime import date
from pathlib import Path

from .config import Config, load_config
from .corpus import load_tweets
from .emn import load_snapshot, save_snapshot
from .errors import LinkerError
from .evaluation import (
    ExplicitLinkerStub,
    ablate_context,
    combined_f1,
    cross_validate,
    dump_combined,
    dump_predictions,
    mix_evaluation_set,
    recall_at_k,
    training_queries,
)
from .linker import (
    LinkRequest,
    link,
    load_ranker,
    save_ranker,
    train,
)
from .pipeline import CorpusBundle, build_graph

__all__ = ["main", "build_parser"]


def _parse_ratio(raw: str) -> tuple[int, int]:
    parts = raw.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"ratio must look like 4:1, got {raw!r}")
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"ratio must be integers, got {raw!r}")
    if a < 1 or b < 1:
        raise argparse.ArgumentTypeError("ratio parts must be >= 1")
    return a, b


def _parse_date(raw: str) -> date:
    try:
        return date.fromisoformat(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ISO date, got {raw!r}")


def _add_config_flag(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value config file; flags override it")


def _resolve_config(args: argparse.Namespace, **overrides) -> Config:
    base = load_config(args.config) if getattr(args, "config", None) else Config()
    return base.with_overrides(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emn-linker",
        description=(
            "Link tweets that mention entities implicitly: build an entity "
            "model graph from knowledge-base triples, tweet corpora, and "
            "page views, train a pairwise ranker, and resolve new tweets."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p_build = commands.add_parser(
        "build-emn", help="build a graph snapshot from raw corpora"
    )
    p_build.add_argument("--triples", help="<subject TAB predicate TAB object TAB is_literal> file")
    p_build.add_argument("--labels", help="<id TAB label TAB comment TAB type> file")
    p_build.add_argument("--tweets", help="tweet corpus, one JSON object per line")
    p_build.add_argument("--pageviews", help="<id TAB date TAB views> file")
    p_build.add_argument("--phrases", help="known multi-word names, one per line")
    p_build.add_argument("--stopwords", help="stopword list, one per line")
    p_build.add_argument("--as-of", dest="as_of", type=_parse_date, help="ISO date the build is anchored to")
    p_build.add_argument("--type", dest="entity_type", help="entity type to model")
    p_build.add_argument("--keywords", help="comma-separated type keywords")
    p_build.add_argument("--m", dest="m_relations", type=int, help="how many top relationships to keep")
    p_build.add_argument("--cap", dest="context_cap", type=int, help="max contextual tweets per entity")
    p_build.add_argument("--window", dest="salience_window_days", type=int, help="salience window in days")
    p_build.add_argument("--threads", type=int, help="parallel model building")
    p_build.add_argument("--out", required=True, help="snapshot file to write")
    _add_config_flag(p_build)
    p_build.set_defaults(func=cmd_build)

    p_train = commands.add_parser("train", help="fit the pairwise ranker on gold tweets")
    p_train.add_argument("--emn", required=True, help="graph snapshot")
    p_train.add_argument("--tweets", required=True, help="gold-labeled tweets (JSONL)")
    p_train.add_argument("--c", dest="c_tradeoff", type=float, help="hinge-loss trade-off")
    p_train.add_argument("--epochs", type=int, help="training epochs")
    p_train.add_argument("--k", type=int, help="candidates per tweet")
    p_train.add_argument("--seed", type=int, help="seed recorded in the run config")
    p_train.add_argument("--out", required=True, help="model file to write")
    _add_config_flag(p_train)
    p_train.set_defaults(func=cmd_train)

    p_link = commands.add_parser("link", help="rank entities for one tweet text")
    p_link.add_argument("--emn", help="graph snapshot")
    p_link.add_argument("--ranker", help="trained model file")
    p_link.add_argument("--type", dest="entity_type", default="", help="entity type of the query")
    p_link.add_argument("--text", required=True, help="tweet text")
    p_link.add_argument("--k", type=int, help="candidates to retrieve")
    p_link.add_argument("--top", type=int, default=5, help="rows to print")
    p_link.add_argument("--server", help="service URL; query it instead of local files")
    _add_config_flag(p_link)
    p_link.set_defaults(func=cmd_link)

    p_eval = commands.add_parser("eval", help="run an evaluation protocol")
    metrics = p_eval.add_subparsers(dest="metric", required=True)

    p_recall = metrics.add_parser("recall", help="candidate recall at k")
    p_recall.add_argument("--emn", required=True)
    p_recall.add_argument("--gold", required=True, help="gold-labeled tweets (JSONL)")
    p_recall.add_argument("--k", type=int, help="cutoff")
    p_recall.add_argument("--dump", help="write per-tweet predictions TSV here")
    p_recall.add_argument("--report", help="write metrics TSV here")
    _add_config_flag(p_recall)
    p_recall.set_defaults(func=cmd_eval_recall)

    p_cv = metrics.add_parser("cv", help="cross-validated rank-1 accuracy")
    p_cv.add_argument("--emn", required=True)
    p_cv.add_argument("--gold", required=True)
    p_cv.add_argument("--folds", type=int)
    p_cv.add_argument("--seed", type=int)
    p_cv.add_argument("--c", dest="c_tradeoff", type=float)
    p_cv.add_argument("--k", type=int)
    p_cv.add_argument("--epochs", type=int)
    p_cv.add_argument("--threads", type=int)
    p_cv.add_argument("--dump", help="write per-tweet predictions TSV here")
    p_cv.add_argument("--report", help="write metrics TSV here")
    _add_config_flag(p_cv)
    p_cv.set_defaults(func=cmd_eval_cv)

    p_ablate = metrics.add_parser(
        "ablate", help="compare graphs built with and without contextual tweets"
    )
    p_ablate.add_argument("--triples")
    p_ablate.add_argument("--labels")
    p_ablate.add_argument("--tweets")
    p_ablate.add_argument("--pageviews")
    p_ablate.add_argument("--phrases")
    p_ablate.add_argument("--stopwords")
    p_ablate.add_argument("--as-of", dest="as_of", type=_parse_date)
    p_ablate.add_argument("--type", dest="entity_type")
    p_ablate.add_argument("--keywords")
    p_ablate.add_argument("--gold", help="gold tweets; defaults to labeled tweets in --tweets")
    p_ablate.add_argument("--folds", type=int)
    p_ablate.add_argument("--seed", type=int)
    p_ablate.add_argument("--k", type=int)
    p_ablate.add_argument("--report", help="write metrics TSV here")
    _add_config_flag(p_ablate)
    p_ablate.set_defaults(func=cmd_eval_ablate)

    p_comb = metrics.add_parser(
        "combined", help="explicit-only vs explicit+implicit linking F1"
    )
    p_comb.add_argument("--emn", required=True)
    p_comb.add_argument("--stub", required=True, help="external linker output TSV")
    p_comb.add_argument("--gold", required=True, help="implicit gold tweets (JSONL)")
    p_comb.add_argument("--explicit", required=True, help="explicit gold tweets (JSONL)")
    p_comb.add_argument("--nil", required=True, help="tweets without an entity (JSONL)")
    p_comb.add_argument("--ratio", type=_parse_ratio, default=(4, 1), help="explicit:implicit mix, like 4:1")
    p_comb.add_argument("--ranker", help="trained model; trained on the implicit split when absent")
    p_comb.add_argument("--seed", type=int)
    p_comb.add_argument("--k", type=int)
    p_comb.add_argument("--c", dest="c_tradeoff", type=float)
    p_comb.add_argument("--epochs", type=int)
    p_comb.add_argument("--dump", help="write per-tweet arm decisions TSV here")
    p_comb.add_argument("--report", help="write metrics TSV here")
    _add_config_flag(p_comb)
    p_comb.set_defaults(func=cmd_eval_combined)

    p_inspect = commands.add_parser("inspect", help="dump one entity's model")
    p_inspect.add_argument("--emn", help="graph snapshot")
    p_inspect.add_argument("--entity", required=True, help="entity id")
    p_inspect.add_argument("--server", help="service URL; query it instead of a local file")
    p_inspect.set_defaults(func=cmd_inspect)

    p_serve = commands.add_parser("serve", help="serve the linker over HTTP")
    p_serve.add_argument("--emn", required=True)
    p_serve.add_argument("--ranker", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def _write_report(path: str, rows: list[tuple[str, float]]) -> None:
    lines = [f"{name}\t{value!r}" for name, value in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_build(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    keywords = None
    if args.keywords is not None:
        keywords = tuple(w.strip() for w in args.keywords.split(",") if w.strip())
    config = _resolve_config(
        args,
        m_relations=args.m_relations,
        context_cap=args.context_cap,
        salience_window_days=args.salience_window_days,
        threads=args.threads,
        entity_type=args.entity_type,
        type_keywords=keywords,
        as_of_date=args.as_of,
        triples=args.triples,
        labels=args.labels,
        tweets=args.tweets,
        pageviews=args.pageviews,
        phrases=args.phrases,
        stopwords=args.stopwords,
    )
    for required in ("triples", "labels", "tweets"):
        if not getattr(config, required):
            parser.error(f"--{required} is required (flag or config file)")
    bundle = CorpusBundle.from_files(
        tweets=config.tweets,
        triples=config.triples,
        labels=config.labels,
        pageviews=config.pageviews or None,
        phrases=config.phrases or None,
        stopwords=config.stopwords or None,
    )
    result = build_graph(bundle, config)
    save_snapshot(result.graph, args.out)
    graph = result.graph
    print(f"entities\t{len(graph.entities)}")
    print(f"clues\t{len(graph.clues)}")
    print(f"edges\t{graph.edge_count()}")
    if result.skipped_entities:
        print(f"skipped\t{','.join(result.skipped_entities)}")
    print(f"wrote {args.out}")
    return 0


def cmd_train(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _resolve_config(
        args,
        c_tradeoff=args.c_tradeoff,
        epochs=args.epochs,
        k=args.k,
        seed=args.seed,
    )
    graph = load_snapshot(args.emn)
    tweets = [t for t in load_tweets(args.tweets) if t.gold_entity]
    queries = training_queries(graph, tweets, config.k)
    ranker = train(queries, c_tradeoff=config.c_tradeoff, epochs=config.epochs)
    save_ranker(ranker, args.out)
    print(f"weights\t{ranker.weights[0]!r}\t{ranker.weights[1]!r}")
    print(f"swapped_pairs\t{ranker.swapped_pairs}")
    print(f"skipped_queries\t{ranker.skipped_queries}")
    print(f"loss\t{ranker.loss_history[0]!r}\t{ranker.loss_history[-1]!r}")
    print(f"wrote {args.out}")
    return 0


def _print_link_rows(rows: list[dict]) -> None:
    print("rank\tentity_id\tname\tscore\tcosine\trel_salience\tevidence")
    for position, row in enumerate(rows, start=1):
        print(
            f"{position}\t{row['entity_id']}\t{row['name']}\t{row['score']:.6f}"
            f"\t{row['cosine']:.6f}\t{row['rel_salience']:.6f}\t{row['evidence']:.6f}"
        )


def cmd_link(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.server:
        import httpx

        response = httpx.post(
            args.server.rstrip("/") + "/link",
            json={
                "entity_type": args.entity_type,
                "text": args.text,
                "k": args.k or 25,
                "top": args.top,
            },
            timeout=30.0,
        )
        if response.status_code != 200:
            detail = response.json().get("detail", response.text)
            print(f"error: {detail}", file=sys.stderr)
            return 1
        _print_link_rows(response.json()["results"])
        return 0
    if not args.emn:
        parser.error("--emn is required unless --server is given")
    if not args.ranker:
        parser.error("--ranker is required unless --server is given")
    config = _resolve_config(args, k=args.k)
    graph = load_snapshot(args.emn)
    ranker = load_ranker(args.ranker)
    ranked = link(
        graph,
        ranker,
        LinkRequest(entity_type=args.entity_type, text=args.text),
        k=config.k,
    )
    _print_link_rows(
        [
            {
                "entity_id": r.entity_id,
                "name": graph.entities[r.entity_id].name,
                "score": r.score,
                "cosine": r.cosine,
                "rel_salience": r.rel_salience,
                "evidence": r.evidence,
            }
            for r in ranked[: args.top]
        ]
    )
    return 0


def cmd_eval_recall(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _resolve_config(args, k=args.k)
    graph = load_snapshot(args.emn)
    gold = [t for t in load_tweets(args.gold) if t.gold_entity]
    value, records = recall_at_k(graph, gold, k=config.k)
    print(f"recall@{config.k}\t{value:.4f}")
    if args.dump:
        dump_predictions(records, args.dump)
        print(f"wrote {args.dump}")
    if args.report:
        _write_report(args.report, [(f"recall@{config.k}", value)])
        print(f"wrote {args.report}")
    return 0


def cmd_eval_cv(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _resolve_config(
        args,
        folds=args.folds,
        seed=args.seed,
        c_tradeoff=args.c_tradeoff,
        k=args.k,
        epochs=args.epochs,
        threads=args.threads,
    )
    graph = load_snapshot(args.emn)
    gold = [t for t in load_tweets(args.gold) if t.gold_entity]
    report = cross_validate(
        graph,
        gold,
        folds=config.folds,
        seed=config.seed,
        c_tradeoff=config.c_tradeoff,
        k=config.k,
        epochs=config.epochs,
        threads=config.threads,
    )
    print(f"accuracy\t{report.disambiguation_accuracy:.4f}")
    for fold, value in enumerate(report.per_fold):
        print(f"fold_{fold}\t{value:.4f}")
    if args.dump:
        dump_predictions(report.predictions, args.dump)
        print(f"wrote {args.dump}")
    if args.report:
        rows = [("accuracy", report.disambiguation_accuracy)]
        rows += [(f"fold_{i}", v) for i, v in enumerate(report.per_fold)]
        _write_report(args.report, rows)
        print(f"wrote {args.report}")
    return 0


def cmd_eval_ablate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    keywords = None
    if args.keywords is not None:
        keywords = tuple(w.strip() for w in args.keywords.split(",") if w.strip())
    config = _resolve_config(
        args,
        entity_type=args.entity_type,
        type_keywords=keywords,
        as_of_date=args.as_of,
        folds=args.folds,
        seed=args.seed,
        k=args.k,
        triples=args.triples,
        labels=args.labels,
        tweets=args.tweets,
        pageviews=args.pageviews,
        phrases=args.phrases,
        stopwords=args.stopwords,
    )
    for required in ("triples", "labels", "tweets"):
        if not getattr(config, required):
            parser.error(f"--{required} is required (flag or config file)")
    bundle = CorpusBundle.from_files(
        tweets=config.tweets,
        triples=config.triples,
        labels=config.labels,
        pageviews=config.pageviews or None,
        phrases=config.phrases or None,
        stopwords=config.stopwords or None,
    )
    gold = None
    if args.gold:
        gold = [t for t in load_tweets(args.gold) if t.gold_entity]
    with_ctx, without_ctx = ablate_context(
        bundle, config, gold=gold, folds=config.folds, seed=config.seed
    )
    rows = [
        ("with_context_recall", with_ctx.recall_at_k),
        ("with_context_accuracy", with_ctx.disambiguation_accuracy),
        ("without_context_recall", without_ctx.recall_at_k),
        ("without_context_accuracy", without_ctx.disambiguation_accuracy),
    ]
    for name, value in rows:
        print(f"{name}\t{value:.4f}")
    if args.report:
        _write_report(args.report, rows)
        print(f"wrote {args.report}")
    return 0


def cmd_eval_combined(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = _resolve_config(
        args,
        seed=args.seed,
        k=args.k,
        c_tradeoff=args.c_tradeoff,
        epochs=args.epochs,
    )
    graph = load_snapshot(args.emn)
    stub = ExplicitLinkerStub.from_tsv(args.stub)
    implicit = [t for t in load_tweets(args.gold) if t.gold_entity]
    explicit = load_tweets(args.explicit)
    nil = load_tweets(args.nil)
    train_split, mixed = mix_evaluation_set(
        implicit, explicit, nil, ratio=args.ratio, seed=config.seed
    )
    if args.ranker:
        ranker = load_ranker(args.ranker)
    else:
        ranker = train(
            training_queries(graph, train_split, config.k),
            c_tradeoff=config.c_tradeoff,
            epochs=config.epochs,
        )
    report = combined_f1(stub, mixed, graph, ranker, k=config.k)
    rows = [
        ("el_precision", report.el_only.precision),
        ("el_recall", report.el_only.recall),
        ("el_f1", report.el_only.f1),
        ("combined_precision", report.combined.precision),
        ("combined_recall", report.combined.recall),
        ("combined_f1", report.combined.f1),
    ]
    for name, value in rows:
        print(f"{name}\t{value:.4f}")
    if args.dump:
        dump_combined(report.records, args.dump)
        print(f"wrote {args.dump}")
    if args.report:
        _write_report(args.report, rows)
        print(f"wrote {args.report}")
    return 0


def cmd_inspect(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.server:
        import httpx

        response = httpx.get(
            args.server.rstrip("/") + f"/entities/{args.entity}", timeout=30.0
        )
        if response.status_code != 200:
            detail = response.json().get("detail", response.text)
            print(f"error: {detail}", file=sys.stderr)
            return 1
        body = response.json()
        print(f"entity\t{body['entity_id']}\t{body['name']}")
        print(f"salience\t{body['salience']}")
        for row in body["clues"]:
            print(
                f"clue\t{row['clue']}\t{row['specificity']!r}"
                f"\t{row['frequency']}\t{row['origin']}"
            )
        return 0
    if not args.emn:
        parser.error("--emn is required unless --server is given")
    graph = load_snapshot(args.emn)
    node = graph.entities.get(args.entity)
    if node is None:
        print(f"error: unknown entity {args.entity!r}", file=sys.stderr)
        return 1
    print(f"entity\t{node.entity_id}\t{node.name}")
    print(f"salience\t{node.salience.value}")
    rows = [
        (name, graph.clues[name].specificity, frequency, graph.clues[name].origin)
        for name, frequency in graph.entity_to_clues[args.entity].items()
    ]
    rows.sort(key=lambda r: (-r[1], r[0]))
    for name, specificity, frequency, origin in rows:
        print(f"clue\t{name}\t{specificity!r}\t{frequency}\t{origin.render()}")
    return 0


def cmd_serve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(emn_path=args.emn, ranker_path=args.ranker)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    except LinkerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
