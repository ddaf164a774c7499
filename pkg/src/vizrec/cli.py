"""Command-line entry points: train, evaluate, recommend, serve, corpus
inspection, meta-feature dumps, and synthetic corpus generation."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import network
from .errors import VizrecError
from .serving import DEFAULT_BIND, DEFAULT_BIND_ENV, DEFAULT_MODEL_ENV, RecommendQuery, recommend, serve
from .tabular import corpus_stats, load_corpus, load_dataset, save_corpus


def _add_model_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model",
        default=os.environ.get(DEFAULT_MODEL_ENV, "model.bin"),
        help=f"model file (default ${DEFAULT_MODEL_ENV} or model.bin)",
    )


def cmd_train(args) -> int:
    from .trainer import TrainConfig, train

    corpus = load_corpus(args.corpus)
    cfg = TrainConfig(
        negatives_per_dataset=args.neg,
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        mode=args.mode,
        resample_negatives_per_epoch=args.resample_negatives_per_epoch,
    )
    train_split, val_split = _two_way_split(corpus, args.val_frac, args.seed)
    model, report = train(train_split, val_split, cfg)
    network.save(model, args.out)
    report_path = args.out + ".report.json"
    with open(report_path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, indent=2)
    print(f"model written to {args.out}")
    print(f"report written to {report_path}")
    print(f"selected epoch {report.selected_epoch}, val nDCG@5 history {report.val_ndcg5}")
    return 0


def _two_way_split(corpus, val_frac: float, seed: int):
    """Train/val split by dataset for the train command."""
    import random

    ids = list(corpus.dataset_ids)
    random.Random(seed).shuffle(ids)
    n_val = max(1, int(round(val_frac * len(ids))))
    if n_val >= len(ids):
        raise VizrecError(f"{len(ids)} datasets cannot support val_frac={val_frac}")
    val_ids = set(ids[:n_val])
    from .tabular import Corpus

    def subset(keep):
        datasets = tuple(d for d in corpus.datasets if d.id in keep)
        return Corpus(
            datasets=datasets,
            visualizations={d.id: corpus.visualizations_of(d.id) for d in datasets},
        )

    return subset(set(ids[n_val:])), subset(val_ids)


def cmd_evaluate(args) -> int:
    from .evaluator import (
        PoolConfig,
        baseline_configpop,
        baseline_random,
        evaluate,
        model_scorer,
    )

    model = network.load(args.model)
    corpus = load_corpus(args.corpus)
    vocab = model.shape.vocab
    pool_cfg = PoolConfig(negatives_per_dataset=args.negatives, seed=args.seed)
    rows = {}
    if args.with_baselines:
        rows["Random"] = evaluate(baseline_random(args.seed), corpus, vocab, pool_cfg)
        rows["ConfigPop"] = evaluate(baseline_configpop(vocab), corpus, vocab, pool_cfg)
    rows["Model"] = evaluate(model_scorer(model), corpus, vocab, pool_cfg)
    report = {
        name: {f"nDCG@{k}": round(res.ndcg[k], 4) for k in sorted(res.ndcg)}
        for name, res in rows.items()
    }
    if args.report:
        payload = {
            "summary": report,
            "detail": {name: res.to_dict() for name, res in rows.items()},
        }
        with open(args.report, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
        print(f"report written to {args.report}")
    for name, metrics in report.items():
        print(name, metrics)
    return 0


def cmd_recommend(args) -> int:
    from .tabular import AttributeType

    model = network.load(args.model)
    dataset = load_dataset(args.dataset)
    query = RecommendQuery(
        top_k=args.top_k,
        required_attribute_types=tuple(
            AttributeType(t).value for t in (args.require_type or ())
        ),
        required_attributes=frozenset(args.require_attribute or ()),
        allowed_marks=frozenset(args.allow_mark or ()),
        allowed_aggregates=frozenset(args.allow_aggregate or ()),
    )
    results = recommend(model, dataset, query)
    payload = [r.to_dict() for r in results]
    if not args.emit_specs:
        for entry in payload:
            entry.pop("chart_spec")
    print(json.dumps(payload, indent=2))
    return 0


def cmd_serve(args) -> int:
    serve(args.model, args.bind)
    return 0


def cmd_corpus(args) -> int:
    corpus = load_corpus(args.corpus)
    if args.corpus_command == "stats":
        print(json.dumps(corpus_stats(corpus), indent=2))
    else:
        # load_corpus already validates references and invariants
        print(f"{args.corpus}: OK ({len(corpus.datasets)} datasets, "
              f"{corpus.total_visualizations} visualizations)")
    return 0


def cmd_metafeatures(args) -> int:
    from .metafeatures import compute_metafeatures, default_schema

    dataset = load_dataset(args.dataset)
    schema = default_schema()
    attr = dataset.attribute(args.attribute)
    vector = compute_metafeatures(attr, schema)
    names = [f.function for f in schema.features]
    reps = [(f.representation, f.partition) for f in schema.features]
    for (rep, part), name, value in zip(reps, names, vector.values):
        print(f"{rep}/{part}/{name}\t{value:.6g}")
    return 0


def cmd_synth(args) -> int:
    from .evaluator import generate_synthetic_corpus

    corpus = generate_synthetic_corpus(n_datasets=args.n_datasets, seed=args.seed)
    save_corpus(corpus, args.out)
    print(f"wrote {len(corpus.datasets)} datasets, "
          f"{corpus.total_visualizations} visualizations to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vizrec")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model on a corpus")
    p_train.add_argument("--corpus", required=True)
    p_train.add_argument("--out", default="model.bin")
    p_train.add_argument("--neg", type=int, default=20)
    p_train.add_argument("--lr", type=float, default=0.05)
    p_train.add_argument("--epochs", type=int, default=30)
    p_train.add_argument("--batch-size", type=int, default=64)
    p_train.add_argument("--seed", type=int, default=1)
    p_train.add_argument("--val-frac", type=float, default=0.1)
    p_train.add_argument("--mode", choices=("full", "wide_only", "deep_only"), default="full")
    p_train.add_argument("--resample-negatives-per-epoch", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("evaluate", help="evaluate a model on a test corpus")
    _add_model_arg(p_eval)
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--negatives", type=int, default=99)
    p_eval.add_argument("--seed", type=int, default=1)
    p_eval.add_argument("--report")
    p_eval.add_argument("--with-baselines", action="store_true")
    p_eval.set_defaults(func=cmd_evaluate)

    p_rec = sub.add_parser("recommend", help="rank visualizations for a dataset")
    _add_model_arg(p_rec)
    p_rec.add_argument("--dataset", required=True)
    p_rec.add_argument("--top-k", type=int, default=10)
    p_rec.add_argument("--require-type", action="append")
    p_rec.add_argument("--require-attribute", action="append")
    p_rec.add_argument("--allow-mark", action="append")
    p_rec.add_argument("--allow-aggregate", action="append")
    p_rec.add_argument("--emit-specs", action="store_true")
    p_rec.set_defaults(func=cmd_recommend)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    _add_model_arg(p_serve)
    p_serve.add_argument(
        "--bind", default=os.environ.get(DEFAULT_BIND_ENV, DEFAULT_BIND)
    )
    p_serve.set_defaults(func=cmd_serve)

    p_corpus = sub.add_parser("corpus", help="inspect a corpus file")
    corpus_sub = p_corpus.add_subparsers(dest="corpus_command", required=True)
    for name in ("stats", "validate"):
        p = corpus_sub.add_parser(name)
        p.add_argument("--corpus", required=True)
        p.set_defaults(func=cmd_corpus)

    p_meta = sub.add_parser("metafeatures", help="print one attribute's vector")
    p_meta.add_argument("dataset")
    p_meta.add_argument("--attribute", required=True)
    p_meta.set_defaults(func=cmd_metafeatures)

    p_synth = sub.add_parser("synth", help="generate a planted-rule corpus")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--n-datasets", type=int, default=50)
    p_synth.add_argument("--seed", type=int, default=1)
    p_synth.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VizrecError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
