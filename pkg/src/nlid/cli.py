"""Command-line interface: train, predict, evaluate, compare, report-features.

Exit codes: 0 success, 1 usage, 2 data error, 3 model error. Every failure
path prints a single line to stderr prefixed with ``error[usage]``,
``error[data]``, or ``error[model]``.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, load_corpus, stratified_folds
from .ensemble import (
    DEFAULT_THRESHOLD,
    EnsembleModel,
    build_ensemble,
    fuse_predict,
    predict_corpus,
)
from .errors import DataError, ModelError
from .features import CHAR_NGRAM, DENSE, ESSAY, TRANSCRIPT, WORD_NGRAM, FeatureSpec
from .figures import save_confusion_heatmap, save_feature_ranking_chart
from .ioutil import atomic_write_text
from .metrics import confusion, mcnemar, score
from .modelio import load_ensemble, save_ensemble
from .report import (
    ranking_tsv_lines,
    render_eval_report,
    report_kv_lines,
    top_features,
)
from .svm import DEFAULT_C_GRID, DEFAULT_MAX_ITER, DEFAULT_SEED, DEFAULT_TOL


@dataclass
class RunConfig:
    """Training configuration; every field can come from a config file or a
    flag, with flags winning."""

    essays: str | None = None
    transcripts: str | None = None
    ivectors: str | None = None
    labels: str | None = None
    dev_essays: str | None = None
    dev_transcripts: str | None = None
    dev_ivectors: str | None = None
    dev_labels: str | None = None
    model_out: str | None = None
    log: str | None = None
    threshold: float = DEFAULT_THRESHOLD
    grid: list[float] = field(default_factory=lambda: list(DEFAULT_C_GRID))
    folds: int = 5
    seed: int = DEFAULT_SEED
    char_n: list[int] = field(default_factory=lambda: list(range(1, 11)))
    word_n: list[int] = field(default_factory=lambda: [1, 2])
    with_ivectors: bool = False
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    jobs: int = 1
    refit_on: str = "train"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit code 1, not argparse's 2
        raise UsageError(message)


def _parse_float_list(raw: str) -> list[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"bad float list {raw!r}: {exc}") from exc


def _parse_int_list(raw: str) -> list[int]:
    out: list[int] = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, _, hi = part.partition("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train an ensemble from corpus files")
    train.add_argument("--config", help="JSON config file; flags override it")
    train.add_argument("--essays")
    train.add_argument("--transcripts")
    train.add_argument("--ivectors")
    train.add_argument("--labels")
    train.add_argument("--dev-essays", dest="dev_essays")
    train.add_argument("--dev-transcripts", dest="dev_transcripts")
    train.add_argument("--dev-ivectors", dest="dev_ivectors")
    train.add_argument("--dev-labels", dest="dev_labels")
    train.add_argument("--model-out", dest="model_out")
    train.add_argument("--log", help="training log path (default: MODEL_OUT.log)")
    train.add_argument("--threshold", type=float)
    train.add_argument("--grid", type=_parse_float_list, help="comma-separated C values")
    train.add_argument("--folds", type=int)
    train.add_argument("--seed", type=int)
    train.add_argument("--char-n", dest="char_n", type=_parse_int_list,
                       help="char n-gram orders, e.g. 1-10 or 6,7,8")
    train.add_argument("--word-n", dest="word_n", type=_parse_int_list,
                       help="word n-gram orders, e.g. 1,2")
    train.add_argument("--with-ivectors", dest="with_ivectors",
                       action=argparse.BooleanOptionalAction)
    train.add_argument("--tol", type=float)
    train.add_argument("--max-iter", dest="max_iter", type=int)
    train.add_argument("--jobs", type=int)
    train.add_argument("--refit-on", dest="refit_on", choices=["train", "train+dev"])
    train.set_defaults(func=cmd_train)

    predict = sub.add_parser("predict", help="predict a corpus with a trained model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--essays", required=True)
    predict.add_argument("--transcripts", required=True)
    predict.add_argument("--ivectors")
    predict.add_argument("--labels", required=True)
    predict.add_argument("--out", required=True, help="predictions TSV path")
    predict.add_argument("--jobs", type=int, default=1)
    predict.set_defaults(func=cmd_predict)

    evaluate = sub.add_parser("evaluate", help="score predictions against gold labels")
    evaluate.add_argument("--predictions", required=True)
    evaluate.add_argument("--gold", required=True, help="gold labels TSV")
    evaluate.add_argument("--out-dir", dest="out_dir", required=True)
    evaluate.add_argument("--no-figures", dest="figures", action="store_false")
    evaluate.set_defaults(func=cmd_evaluate)

    compare = sub.add_parser("compare", help="McNemar test between two prediction files")
    compare.add_argument("--a", required=True, dest="preds_a")
    compare.add_argument("--b", required=True, dest="preds_b")
    compare.add_argument("--gold", required=True)
    compare.add_argument("--exact", action="store_true",
                         help="exact binomial p-value instead of chi-squared")
    compare.set_defaults(func=cmd_compare)

    report = sub.add_parser("report-features", help="most informative features per class")
    report.add_argument("--model", required=True)
    report.add_argument("--view", help="view name, e.g. char8:essay (default: best n-gram view)")
    report.add_argument("--top", type=int, default=10)
    report.add_argument("--out", required=True, help="ranking TSV path")
    report.add_argument("--no-figures", dest="figures", action="store_false")
    report.set_defaults(func=cmd_report_features)

    return parser


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    valid = {f.name for f in fields(RunConfig)}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                file_values = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad config file {args.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise UsageError(f"bad config file {args.config}: expected a JSON object")
        for key, value in file_values.items():
            if key not in valid:
                raise UsageError(f"unknown config key {key!r} in {args.config}")
            setattr(config, key, value)
    for name in valid:
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    for required in ("essays", "transcripts", "labels", "model_out"):
        if getattr(config, required) is None:
            raise UsageError(f"missing required option --{required.replace('_', '-')}")
    if config.refit_on == "train+dev":
        for required in ("dev_essays", "dev_transcripts", "dev_labels"):
            if getattr(config, required) is None:
                raise UsageError(f"--refit-on train+dev needs --{required.replace('_', '-')}")
    return config


def _specs_from_config(config: RunConfig) -> list[FeatureSpec]:
    specs = [
        FeatureSpec(kind=CHAR_NGRAM, n=n, modality=mod)
        for mod in (ESSAY, TRANSCRIPT)
        for n in config.char_n
    ]
    specs += [
        FeatureSpec(kind=WORD_NGRAM, n=n, modality=mod)
        for mod in (ESSAY, TRANSCRIPT)
        for n in config.word_n
    ]
    return specs


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    corpus = load_corpus(config.essays, config.transcripts, config.ivectors, config.labels)
    refit_corpus = None
    if config.refit_on == "train+dev":
        dev = load_corpus(
            config.dev_essays, config.dev_transcripts, config.dev_ivectors, config.dev_labels
        )
        refit_corpus = Corpus.from_instances(list(corpus.instances) + list(dev.instances))
    folds = stratified_folds(corpus, config.folds, config.seed)
    specs = _specs_from_config(config)

    log_lines = [
        "config"
        f"\tthreshold={config.threshold!r}"
        f"\tfolds={config.folds}"
        f"\tseed={config.seed}"
        f"\tgrid={','.join(repr(c) for c in config.grid)}"
        f"\twith_ivectors={config.with_ivectors}"
        f"\trefit_on={config.refit_on}"
    ]

    def on_view(view, kept: bool) -> None:
        line = (
            f"view={view.name}\tcv_accuracy={view.cv_accuracy:.4f}"
            f"\tbest_C={view.best_C:g}\tstatus={'kept' if kept else 'dropped'}"
        )
        log_lines.append(line)
        print(line, file=sys.stderr)

    log_path = Path(config.log) if config.log else Path(config.model_out + ".log")
    try:
        model = build_ensemble(
            corpus,
            specs,
            with_ivectors=config.with_ivectors,
            folds=folds,
            grid=config.grid,
            threshold=config.threshold,
            tol=config.tol,
            max_iter=config.max_iter,
            seed=config.seed,
            jobs=config.jobs,
            refit_corpus=refit_corpus,
            on_view=on_view,
        )
    finally:
        atomic_write_text(log_path, "\n".join(log_lines) + "\n")
    save_ensemble(model, config.model_out)
    log_lines.append(f"ensemble\tviews={len(model.views)}\tmodel={config.model_out}")
    atomic_write_text(log_path, "\n".join(log_lines) + "\n")
    print(f"wrote {config.model_out} ({len(model.views)} views); log at {log_path}")
    return 0


def _predict_chunk(payload: tuple[EnsembleModel, list]) -> list:
    model, instances = payload
    return [fuse_predict(model, inst) for inst in instances]


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_ensemble(args.model)
    corpus = load_corpus(args.essays, args.transcripts, args.ivectors, args.labels)
    if args.jobs > 1 and len(corpus) > 1:
        instances = list(corpus.instances)
        step = (len(instances) + args.jobs - 1) // args.jobs
        chunks = [instances[i : i + step] for i in range(0, len(instances), step)]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = [p for part in pool.map(_predict_chunk, ((model, c) for c in chunks))
                       for p in part]
    else:
        results = predict_corpus(model, corpus)
    header = "id\tlabel\t" + "\t".join(view.name for view in model.views)
    rows = [header]
    for inst, fused in zip(corpus, results):
        rows.append(f"{inst.id}\t{fused.label}\t" + "\t".join(fused.view_labels))
    atomic_write_text(args.out, "\n".join(rows) + "\n")
    print(f"wrote {args.out} ({len(results)} predictions)")
    return 0


def _read_label_file(path: str, id_col: int = 0, label_col: int = 1) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        fh.readline()  # header
        for line in fh:
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) <= max(id_col, label_col):
                raise DataError(f"malformed row in {path}: {line!r}")
            key = parts[id_col]
            if key in out:
                raise DataError(f"duplicate id '{key}' in {path}")
            out[key] = parts[label_col]
    if not out:
        raise DataError(f"no rows in {path}")
    return out


def _aligned_streams(gold: dict[str, str], *prediction_maps: dict[str, str]) -> list[list[str]]:
    for preds in prediction_maps:
        for missing in sorted(set(gold) - set(preds)):
            raise DataError(f"id mismatch: id '{missing}' missing from predictions")
        for extra in sorted(set(preds) - set(gold)):
            raise DataError(f"id mismatch: id '{extra}' missing from gold")
    ids = list(gold)
    streams = [[gold[i] for i in ids]]
    streams.extend([preds[i] for i in ids] for preds in prediction_maps)
    return streams


def cmd_evaluate(args: argparse.Namespace) -> int:
    gold = _read_label_file(args.gold)
    preds = _read_label_file(args.predictions)
    gold_stream, pred_stream = _aligned_streams(gold, preds)
    label_set = sorted(set(gold_stream) | set(pred_stream))
    matrix = confusion(gold_stream, pred_stream, label_set)
    report = score(matrix)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "report.txt", render_eval_report(report, matrix))
    atomic_write_text(out_dir / "report.tsv", "\n".join(report_kv_lines(report, matrix)) + "\n")
    if args.figures:
        save_confusion_heatmap(matrix, out_dir / "confusion.png")
    print(f"accuracy={report.accuracy:.4f} macro_f1={report.macro_f1:.4f} n={matrix.total}")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    gold = _read_label_file(args.gold)
    preds_a = _read_label_file(args.preds_a)
    preds_b = _read_label_file(args.preds_b)
    gold_stream, stream_a, stream_b = _aligned_streams(gold, preds_a, preds_b)
    result = mcnemar(gold_stream, stream_a, stream_b, exact=args.exact)
    print(
        f"b={result.b} c={result.c} statistic={result.statistic:.6f} "
        f"p_value={result.p_value:.6f} method={result.method}"
    )
    return 0


def cmd_report_features(args: argparse.Namespace) -> int:
    model = load_ensemble(args.model)
    ngram_views = [v for v in model.views if v.spec.kind != DENSE]
    if args.view:
        matches = [v for v in model.views if v.name == args.view]
        if not matches:
            available = ", ".join(v.name for v in model.views)
            raise DataError(f"no view named '{args.view}' in model (available: {available})")
        view = matches[0]
    else:
        if not ngram_views:
            raise DataError("no vocabulary: model has no n-gram views")
        view = max(ngram_views, key=lambda v: v.cv_accuracy)
    rankings = [top_features(view, label, args.top) for label in model.labels]
    atomic_write_text(args.out, "\n".join(ranking_tsv_lines(rankings)) + "\n")
    if args.figures:
        save_feature_ranking_chart(rankings, Path(args.out).with_suffix(".png"))
    print(f"wrote {args.out} (view {view.name}, top {args.top})")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        return 1
    except ModelError as exc:
        print(f"error[model]: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[data]: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
