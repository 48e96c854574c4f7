"""Command-line entry points: thin wrappers over the package and service.

Exit codes are stable: 0 success, 1 usage or configuration problem,
2 bad input data.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from .corpus import (
    Corpus,
    CorpusError,
    Rejection,
    build_vocab,
    clean_pairs,
    parse_news_xml,
    read_corpus_tsv,
    tag_and_merge,
    write_corpus_tsv,
    write_rejection_report,
)
from .inference import InferenceError, ScriptValidationError, TransliterationRequest, transliterate_text, transliterate_word
from .languages import Language, UnknownLanguageError
from .metrics import (
    MetricError,
    annotation_report,
    evaluation_report,
    read_annotations,
    write_annotations,
)
from .model import ModelConfig, ModelError
from .training import (
    Checkpoint,
    CheckpointError,
    NonFiniteError,
    TrainConfig,
    TrainMode,
    load_checkpoint,
    save_checkpoint,
    train,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


_LANG_ALIASES = {
    "en": Language.ENGLISH, "eng": Language.ENGLISH, "english": Language.ENGLISH,
    "hi": Language.HINDI, "hin": Language.HINDI, "hindi": Language.HINDI,
    "bn": Language.BENGALI, "ben": Language.BENGALI, "bengali": Language.BENGALI, "bangla": Language.BENGALI,
    "ta": Language.TAMIL, "tam": Language.TAMIL, "tamil": Language.TAMIL,
    "kn": Language.KANNADA, "kan": Language.KANNADA, "kannada": Language.KANNADA,
}


def _languages_from_filename(path: Path) -> tuple[Language, Language] | None:
    tokens = re.split(r"[^a-zA-Z]+", path.stem.lower())
    langs = [_LANG_ALIASES[t] for t in tokens if t in _LANG_ALIASES]
    if len(langs) != 2 or langs[0] is langs[1]:
        return None
    return langs[0], langs[1]


def cmd_parse_corpus(args: argparse.Namespace) -> int:
    input_dir = Path(args.input_dir)
    mapping: dict[str, tuple[Language, Language]] = {}
    if args.mapping:
        raw = json.loads(Path(args.mapping).read_text(encoding="utf-8"))
        mapping = {name: (Language.from_name(pair[0]), Language.from_name(pair[1])) for name, pair in raw.items()}

    directions = []
    rejections: list[Rejection] = []
    provenance = []
    for path in sorted(input_dir.glob("*.xml")):
        pair = mapping.get(path.name) or _languages_from_filename(path)
        if pair is None:
            print(f"skipping {path.name}: cannot infer its language pair", file=sys.stderr)
            continue
        result = parse_news_xml(path.read_bytes(), pair[0], pair[1], strict=args.strict)
        if result.ignored_elements:
            print(f"{path.name}: ignored {result.ignored_elements} unknown elements", file=sys.stderr)
        cleaned, rejected = clean_pairs(result.triples)
        rejections.extend(rejected)
        directions.append(cleaned)
        directions.append([t.reversed() for t in cleaned])
        provenance.append(path.name)
    if not directions:
        raise CorpusError(f"no parsable corpus files in {input_dir}")

    corpus = tag_and_merge(directions, provenance)
    write_corpus_tsv(corpus, args.out)
    write_rejection_report(rejections, args.report)
    print(f"{len(corpus)} triples from {len(provenance)} files -> {args.out}")
    print(f"{len(rejections)} cleaning events -> {args.report}")
    return EXIT_OK


def _read_json_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON: {exc}") from exc


def cmd_train(args: argparse.Namespace) -> int:
    corpus = read_corpus_tsv(args.corpus)
    dev = read_corpus_tsv(args.dev) if args.dev else None

    model_raw = _read_json_config(args.model_config) if args.model_config else {}
    train_raw = _read_json_config(args.train_config) if args.train_config else {}
    if "mode" in train_raw:
        train_raw["mode"] = TrainMode(train_raw["mode"])
    try:
        train_config = TrainConfig(**train_raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"train config: {exc}") from exc

    vocab = build_vocab(corpus)
    model_raw.setdefault("vocab_size", len(vocab))
    try:
        model_config = ModelConfig(**{**_TOY_MODEL_DEFAULTS, **model_raw})
    except (TypeError, ModelError) as exc:
        raise UsageError(f"model config: {exc}") from exc

    ckpt, history = train(corpus, model_config, train_config, dev=dev, vocab=vocab)
    save_checkpoint(ckpt, args.out)
    if args.history:
        history.write_jsonl(args.history)
    final = history.epoch_mean_loss[-1] if history.epoch_mean_loss else None
    print(f"trained {ckpt.meta.steps} steps (mode={ckpt.meta.mode}), final loss {final} -> {args.out}")
    return EXIT_OK


# Desk-scale defaults; the full-scale preset is ModelConfig.full_scale().
_TOY_MODEL_DEFAULTS = {
    "num_encoder_layers": 2,
    "num_decoder_layers": 2,
    "embed_size": 32,
    "heads": 4,
    "hidden_dim": 64,
    "max_seq_len": 50,
    "dropout": 0.0,
}


def _predict_rows(ckpt: Checkpoint, corpus: Corpus) -> list[tuple[Language, Language, str, str]]:
    rows = []
    for t in corpus:
        result = transliterate_word(ckpt, t.source, t.source_lang, t.target_lang)
        rows.append((t.source_lang, t.target_lang, result.output, t.target))
    return rows


def cmd_evaluate(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(args.checkpoint) if args.checkpoint else None
    if args.test:
        if ckpt is None:
            raise UsageError("--test evaluation needs --checkpoint")
        corpus = read_corpus_tsv(args.test)
        if not corpus.triples:
            raise CorpusError(f"{args.test}: empty test set")
        report = evaluation_report(_predict_rows(ckpt, corpus))
    elif args.annotations:
        records = read_annotations(args.annotations)
        if not records:
            raise MetricError(f"{args.annotations}: empty annotation file")
        report = annotation_report(records)
    else:
        raise UsageError("evaluate needs --test or --annotations")

    payload = json.dumps(report, ensure_ascii=False, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        print(f"report -> {args.out}")
    else:
        print(payload)
    return EXIT_OK


def _checkpoint_path(args: argparse.Namespace) -> str:
    path = args.checkpoint or os.environ.get("MATRA_CHECKPOINT")
    if not path:
        raise UsageError("no checkpoint: pass --checkpoint or set MATRA_CHECKPOINT")
    return path


def cmd_transliterate(args: argparse.Namespace) -> int:
    if args.url:
        import httpx

        response = httpx.post(
            args.url.rstrip("/") + "/transliterate",
            json={"text": args.text, "source_lang": args.source, "target_lang": args.target},
            timeout=60.0,
        )
        if response.status_code != 200:
            detail = response.json().get("detail", response.text)
            raise InferenceError(f"service returned {response.status_code}: {detail}")
        body = response.json()
        print(body["output"])
        for word in body.get("intermediate") or []:
            print(f"intermediate: {word}", file=sys.stderr)
        return EXIT_OK

    ckpt = load_checkpoint(_checkpoint_path(args))
    request = TransliterationRequest(args.text, Language.from_name(args.source), Language.from_name(args.target))
    result = transliterate_text(ckpt, request)
    print(result.output)
    for word in result.intermediates or ():
        print(f"intermediate: {word}", file=sys.stderr)
    for flag in result.flags:
        print(f"flag: {flag}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServeConfig, create_app

    port = args.port if args.port is not None else int(os.environ.get("MATRA_PORT", "8000"))
    config = ServeConfig(
        checkpoint_path=_checkpoint_path(args),
        host=args.host,
        port=port,
        rate_limit_per_minute=args.rate_limit,
        annotation_store=args.annotation_store,
    )
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return EXIT_OK


def cmd_annotations_export(args: argparse.Namespace) -> int:
    ckpt = load_checkpoint(_checkpoint_path(args))
    corpus = read_corpus_tsv(args.test)
    if not corpus.triples:
        raise CorpusError(f"{args.test}: empty test set")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for i, t in enumerate(corpus):
            result = transliterate_word(ckpt, t.source, t.source_lang, t.target_lang)
            fh.write(
                json.dumps(
                    {
                        "id": f"{Path(args.test).stem}-{i}",
                        "source_lang": t.source_lang.value,
                        "target_lang": t.target_lang.value,
                        "input": t.source,
                        "prediction": result.output,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    print(f"{len(corpus)} pending annotations -> {args.out}")
    return EXIT_OK


def cmd_annotations_import(args: argparse.Namespace) -> int:
    merged = []
    for path in args.files:
        merged.extend(read_annotations(path))
    existing = read_annotations(args.store) if Path(args.store).exists() else []
    write_annotations(existing + merged, args.store)
    print(f"imported {len(merged)} records into {args.store} ({len(existing) + len(merged)} total)")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="matra", description="Multilingual character-level transliteration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse-corpus", help="parse corpus XML files into a tagged TSV")
    p.add_argument("input_dir")
    p.add_argument("--out", default="corpus.tsv")
    p.add_argument("--report", default="rejections.jsonl")
    p.add_argument("--mapping", help="JSON file mapping XML filename to [source, target] languages")
    p.add_argument("--strict", action="store_true", help="fail on schema deviations instead of skipping")
    p.set_defaults(fn=cmd_parse_corpus)

    p = sub.add_parser("train", help="train a model on a tagged TSV corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model-config", help="JSON with model hyperparameters")
    p.add_argument("--train-config", help="JSON with training hyperparameters")
    p.add_argument("--dev", help="optional dev TSV for per-epoch accuracy")
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="write per-epoch JSONL history here")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint or an annotation file")
    p.add_argument("--checkpoint")
    p.add_argument("--test", help="tagged TSV test set")
    p.add_argument("--annotations", help="annotation JSONL")
    p.add_argument("--out", help="write the metric report JSON here (default: stdout)")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("transliterate", help="transliterate a word or sentence")
    p.add_argument("text")
    p.add_argument("--from", dest="source", required=True)
    p.add_argument("--to", dest="target", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--url", help="use a running service instead of a local checkpoint")
    p.set_defaults(fn=cmd_transliterate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--checkpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int)
    p.add_argument("--rate-limit", type=int, default=60, help="requests per minute per client")
    p.add_argument("--annotation-store", default="annotations.jsonl")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("annotations-export", help="export model predictions as a pending annotation queue")
    p.add_argument("--checkpoint")
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_annotations_export)

    p = sub.add_parser("annotations-import", help="merge annotated JSONL files into a store")
    p.add_argument("files", nargs="+")
    p.add_argument("--store", required=True)
    p.set_defaults(fn=cmd_annotations_import)

    return parser


_DATA_ERRORS = (
    CorpusError,
    MetricError,
    UnknownLanguageError,
    CheckpointError,
    InferenceError,
    NonFiniteError,
    FileNotFoundError,
    NotADirectoryError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ModelError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
