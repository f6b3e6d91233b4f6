"""The t2v command line: parse/compile/split/stats/train/eval/serve/synth.

Exit codes: 0 success, 1 validation failure, 2 usage error (argparse's
convention).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import dataset as ds
from . import evaluation
from .compiler import StageError, render_pipeline, spec_to_json
from .ngrams import build_lexicon, load_lexicon, save_lexicon
from .vql import VqlSyntaxError, SemanticError, parse_vql


def _query_to_json(q) -> dict:
    def conv(obj):
        if dataclasses.is_dataclass(obj):
            return {k: conv(v) for k, v in dataclasses.asdict(obj).items()}
        if isinstance(obj, dict):
            return {k: conv(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [conv(v) for v in obj]
        if hasattr(obj, "value"):  # enums
            return obj.value
        return obj
    return conv(dataclasses.asdict(q))


def cmd_parse(args) -> int:
    try:
        q = parse_vql(args.vql)
    except (VqlSyntaxError, SemanticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(_query_to_json(q), indent=2, ensure_ascii=False))
    return 0


def cmd_compile(args) -> int:
    try:
        spec = render_pipeline(args.vql, args.db_id, args.data_dir)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = spec_to_json(spec)
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        print(out, end="")
    return 0


def cmd_split(args) -> int:
    schemas = ds.load_schemas(args.schemas) if args.schemas else None
    try:
        samples = ds.load_corpus(args.corpus, schemas)
        ratios = tuple(float(r) for r in args.ratios.split(","))
        spec = ds.SplitSpec(ds.SplitMode(args.mode), ratios, args.seed)
        train, dev, test = ds.split_corpus(samples, spec)
    except (ds.CorpusError, ds.InfeasibleSplit, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    for name, subset in (("train", train), ("dev", dev), ("test", test)):
        ds.write_corpus(subset, outdir / f"{name}.jsonl")
    print(f"train={len(train)} dev={len(dev)} test={len(test)}")
    return 0


def cmd_stats(args) -> int:
    schemas = ds.load_schemas(args.schemas) if args.schemas else None
    try:
        samples = ds.load_corpus(args.corpus, schemas)
    except ds.CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(ds.corpus_stats(samples).to_json(), indent=2,
                     ensure_ascii=False))
    return 0


def cmd_synth(args) -> int:
    from .neural import generate_synthetic_corpus, toy_schemas

    if args.schemas:
        schemas = ds.load_schemas(args.schemas)
    else:
        schemas = toy_schemas()
    samples = generate_synthetic_corpus(schemas, args.n, args.seed)
    out = Path(args.out or "synthetic.jsonl")
    ds.write_corpus(samples, out)
    print(f"wrote {len(samples)} samples to {out}")
    return 0


def cmd_train(args) -> int:
    from .neural import ModelConfig, save_checkpoint, train
    from .neural import toy_schemas

    schemas = ds.load_schemas(args.schemas) if args.schemas else toy_schemas()
    try:
        samples = ds.load_corpus(args.corpus, schemas)
    except ds.CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    config = ModelConfig(seed=args.seed)
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        config = ModelConfig(**{**dataclasses.asdict(config), **doc})
    lexicon = build_lexicon([s.question_zh for s in samples],
                            max_n=4, min_freq=args.min_freq)
    result = train(samples, schemas, lexicon, config, epochs=args.epochs,
                   target_accuracy=args.target_acc,
                   log=lambda msg: print(msg, file=sys.stderr))
    out = Path(args.out or "model.t2v")
    save_checkpoint(result.params, result.config, out)
    save_lexicon(lexicon, out.with_suffix(".lexicon"))
    print(f"final loss {result.loss_curve[-1]:.4f}; checkpoint at {out}")
    return 0


def cmd_eval(args) -> int:
    schemas = ds.load_schemas(args.schemas)
    try:
        gold = ds.load_corpus(args.gold, schemas)
        preds = evaluation.load_predictions(args.pred)
        report = evaluation.evaluate(preds, gold, schemas)
    except (ds.CorpusError, evaluation.UnknownSampleId, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(evaluation.format_report(report), end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import build_app

    app = build_app(args.model, args.data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="t2v", description="Chinese Text-to-Vis toolchain")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a VQL string to JSON AST")
    p.add_argument("vql")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("compile", help="compile VQL to a Vega-Lite spec")
    p.add_argument("vql")
    p.add_argument("--db-id", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("split", help="split a corpus into train/dev/test")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schemas")
    p.add_argument("--mode", choices=[m.value for m in ds.SplitMode],
                   required=True)
    p.add_argument("--ratios", default="0.7,0.15,0.15")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_split)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schemas")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--schemas")
    p.add_argument("-n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("train", help="train the translator")
    p.add_argument("--corpus", required=True)
    p.add_argument("--schemas")
    p.add_argument("--config", help="JSON file overriding model config fields")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--min-freq", type=int, default=2)
    p.add_argument("--target-acc", type=float, default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--schemas", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
