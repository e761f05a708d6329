"""Command line interface: corpus preparation, training, classification,
and the cross-validated experiment commands.

Exit codes: 0 success, 1 usage error, 2 data error. Every randomized command
takes an explicit seed and is byte-for-byte reproducible from it, including
reports produced with multiple worker processes.
"""

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .classifier import load_model, save_model, train
from .corpus import (Corpus, PreprocessConfig, dedup_spam, emulate_address_book,
                     encrypt_corpus, load_corpus, load_message_file,
                     load_raw_dir, preprocess, preprocess_corpus,
                     raw_to_message, save_corpus, save_token_map)
from .errors import DataError
from .evaluation import (attribute_sweep, cross_validate, cross_validate_keyword,
                         fold_results_to_csv, make_folds, paired_t_test,
                         sweep_rows_to_csv, training_rows_to_csv,
                         training_size_sweep, _row_from_cv)
from .features import save_attribute_set, select_attributes
from .keyword_filter import load_rules
from .lemmatizer import load_stoplist


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2 for
    # data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_preprocess_flags(parser) -> None:
    parser.add_argument("--lemmatize", action=argparse.BooleanOptionalAction,
                        default=None, help="map words to base forms")
    parser.add_argument("--stoplist", action=argparse.BooleanOptionalAction,
                        default=None, help="drop stop-list words")
    parser.add_argument("--stoplist-file", default=None,
                        help="stop-list file (default: bundled list)")


def _preprocess_config(args) -> PreprocessConfig:
    stoplist = bool(getattr(args, "stoplist", False))
    words = load_stoplist(getattr(args, "stoplist_file", None)) if stoplist \
        else frozenset()
    return PreprocessConfig(lemmatize=bool(getattr(args, "lemmatize", False)),
                            stoplist=stoplist, stoplist_words=words)


def _apply_config_file(args, keys) -> None:
    """Fill in unset options from a JSON config file: flags beat the file,
    the file beats built-in defaults."""
    path = getattr(args, "config", None)
    if path is None:
        return
    try:
        values = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(values, dict):
        raise DataError(f"{path}: config must be a JSON object")
    for key, value in values.items():
        attr = key.replace("-", "_")
        if attr not in keys:
            raise DataError(f"{path}: unknown config key {key!r}")
        if getattr(args, attr, None) is None:
            setattr(args, attr, value)


def _defaults(args, **pairs) -> None:
    for attr, value in pairs.items():
        if getattr(args, attr) is None:
            setattr(args, attr, value)


def _write_or_print(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")


def cmd_ingest(args) -> int:
    raw = load_raw_dir(args.raw_dir)
    if not raw:
        raise DataError(f"no messages found under {args.raw_dir}")
    n_read = len(raw)
    if args.dedup_spam:
        raw = dedup_spam(raw)
    n_deduped = len(raw)
    if args.address_book_keep is not None:
        raw = emulate_address_book(raw, args.address_book_keep)
    corpus = Corpus(tuple(raw_to_message(m, case_fold=args.case_fold)
                          for m in raw))
    save_corpus(corpus, args.out_dir)
    print(f"read {n_read} messages, dropped {n_read - n_deduped} duplicate spam, "
          f"kept {len(corpus)} ({corpus.n_spam} spam, {corpus.n_legit} legit)")
    return 0


def _encrypt_one(corpus: Corpus, cfg: PreprocessConfig, out_dir: Path) -> None:
    prepared = preprocess_corpus(corpus, cfg)
    encrypted, mapping = encrypt_corpus(prepared)
    save_corpus(encrypted, out_dir)
    save_token_map(mapping, out_dir / "tokenmap.txt")
    print(f"{out_dir}: {len(encrypted)} messages, {len(mapping)} distinct tokens")


def cmd_encrypt(args) -> int:
    corpus = load_corpus(args.corpus_dir)
    out = Path(args.out_dir)
    if args.all_variants:
        words = load_stoplist(args.stoplist_file)
        for lemmatize in (False, True):
            for stoplist in (False, True):
                cfg = PreprocessConfig(lemmatize=lemmatize, stoplist=stoplist,
                                       stoplist_words=words if stoplist
                                       else frozenset())
                _encrypt_one(corpus, cfg, out / cfg.variant)
    else:
        _encrypt_one(corpus, _preprocess_config(args), out)
    return 0


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus_dir)
    cfg = _preprocess_config(args)
    prepared = preprocess_corpus(corpus, cfg)
    attrs = select_attributes(prepared, args.n_attrs, min_df=args.min_df)
    if attrs.truncated:
        print(f"warning: vocabulary has only {len(attrs)} candidates, "
              f"requested {args.n_attrs}", file=sys.stderr)
    model = train(prepared, attrs, smoothing=args.smoothing, preprocess=cfg)
    save_model(model, args.model_out)
    if args.attrs_out:
        save_attribute_set(attrs, args.attrs_out)
    print(f"trained on {len(corpus)} messages ({corpus.n_spam} spam, "
          f"{corpus.n_legit} legit), {len(attrs)} attributes -> {args.model_out}")
    return 0


def cmd_classify(args) -> int:
    model = load_model(args.model)
    cfg = _preprocess_config(args)
    if model.preprocess_hash != cfg.config_hash():
        raise DataError(
            "preprocessing configuration does not match the model "
            f"(model hash {model.preprocess_hash}, flags hash {cfg.config_hash()})")
    path = Path(args.input)
    if path.is_dir():
        messages = load_corpus(path).messages
    elif path.is_file():
        messages = (load_message_file(path),)
    else:
        raise DataError(f"no such file or directory: {path}")
    for msg in messages:
        decision = model.decide(preprocess(msg, cfg), args.cost_ratio)
        print(f"{msg.id} {decision.posterior_spam:.12g} {decision.label}")
    return 0


_CROSSVAL_KEYS = {"n_attrs", "cost_ratio", "k", "seed", "min_df", "smoothing",
                  "lemmatize", "stoplist", "stoplist_file", "stratified"}


def _keyword_baseline(args) -> bool:
    """The keyword baseline runs when asked for via --filter or --rules."""
    wanted = getattr(args, "filter", "nb") == "keyword" or bool(args.rules)
    if wanted and not (args.rules and args.raw_dir):
        raise DataError("the keyword baseline needs --rules and --raw-dir")
    return wanted


def cmd_crossval(args) -> int:
    _apply_config_file(args, _CROSSVAL_KEYS)
    _defaults(args, n_attrs=50, cost_ratio=1.0, k=10, min_df=1, smoothing=1.0,
              stratified=False)
    if args.seed is None:
        raise DataError("a seed is required (--seed or config file)")
    corpus = load_corpus(args.corpus_dir)
    cfg = _preprocess_config(args)
    plan = make_folds(corpus, args.k, args.seed, stratified=args.stratified)
    result = cross_validate(corpus, cfg, args.n_attrs, args.cost_ratio, plan,
                            min_df=args.min_df, smoothing=args.smoothing)
    rows = [_row_from_cv(result, args.n_attrs, cfg)]
    if _keyword_baseline(args):
        ruleset = load_rules(args.rules)
        raw = load_raw_dir(args.raw_dir)
        kw = cross_validate_keyword(raw, ruleset, args.cost_ratio, plan)
        rows.append(_row_from_cv(kw, None, None))
    _write_or_print(sweep_rows_to_csv(rows, args.seed), args.out)
    if args.folds_out:
        _write_or_print(fold_results_to_csv(result, args.seed, args.k),
                        args.folds_out)
    return 0


_SWEEP_KEYS = {"n_min", "n_max", "n_step", "cost_ratios", "k", "seed",
               "min_df", "smoothing", "lemmatize", "stoplist", "stoplist_file",
               "stratified", "jobs"}


def _parse_cost_ratios(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        values = [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError as exc:
        raise DataError(f"bad cost ratio list: {text!r}") from exc
    if not values or any(v <= 0 for v in values):
        raise DataError(f"bad cost ratio list: {text!r}")
    return values


def cmd_sweep(args) -> int:
    _apply_config_file(args, _SWEEP_KEYS)
    _defaults(args, n_min=50, n_max=700, n_step=50, cost_ratios="1,9,999",
              k=10, min_df=1, smoothing=1.0, stratified=False, jobs=1)
    if args.seed is None:
        raise DataError("a seed is required (--seed or config file)")
    corpus = load_corpus(args.corpus_dir)
    cfg = _preprocess_config(args)
    plan = make_folds(corpus, args.k, args.seed, stratified=args.stratified)
    n_values = list(range(args.n_min, args.n_max + 1, args.n_step))
    cost_ratios = _parse_cost_ratios(args.cost_ratios)
    rows = attribute_sweep(corpus, cfg, cost_ratios, n_values, plan,
                           min_df=args.min_df, smoothing=args.smoothing,
                           jobs=args.jobs)
    if _keyword_baseline(args):
        ruleset = load_rules(args.rules)
        raw = load_raw_dir(args.raw_dir)
        for lam in cost_ratios:
            kw = cross_validate_keyword(raw, ruleset, lam, plan)
            rows.append(_row_from_cv(kw, None, None))
    _write_or_print(sweep_rows_to_csv(rows, args.seed), args.out)
    return 0


_TSWEEP_KEYS = {"n_attrs", "cost_ratio", "k", "seed", "min_df", "smoothing",
                "lemmatize", "stoplist", "stoplist_file", "stratified",
                "fractions"}


def cmd_tsweep(args) -> int:
    _apply_config_file(args, _TSWEEP_KEYS)
    _defaults(args, n_attrs=50, cost_ratio=1.0, k=10, min_df=1, smoothing=1.0,
              stratified=False,
              fractions="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    if args.seed is None:
        raise DataError("a seed is required (--seed or config file)")
    corpus = load_corpus(args.corpus_dir)
    cfg = _preprocess_config(args)
    plan = make_folds(corpus, args.k, args.seed, stratified=args.stratified)
    if isinstance(args.fractions, (list, tuple)):
        fractions = [float(v) for v in args.fractions]
    else:
        fractions = [float(p) for p in str(args.fractions).split(",") if p.strip()]
    rows = training_size_sweep(corpus, cfg, args.n_attrs, args.cost_ratio,
                               plan, fractions, min_df=args.min_df,
                               smoothing=args.smoothing)
    _write_or_print(training_rows_to_csv(rows, args.seed), args.out)
    return 0


def _read_fold_csv(path) -> tuple[dict, list[float]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# "):
        raise DataError(f"{path}: missing metadata header line")
    meta = {}
    for part in lines[0][2:].split():
        key, _, value = part.partition("=")
        meta[key] = value
    if len(lines) < 2 or not lines[1].startswith("fold,"):
        raise DataError(f"{path}: missing column header")
    header = lines[1].split(",")
    try:
        wacc_col = header.index("weighted_accuracy")
    except ValueError as exc:
        raise DataError(f"{path}: no weighted_accuracy column") from exc
    values = []
    for line in lines[2:]:
        if line.strip():
            values.append(float(line.split(",")[wacc_col]))
    return meta, values


def cmd_ttest(args) -> int:
    meta_a, wacc_a = _read_fold_csv(args.run_a)
    meta_b, wacc_b = _read_fold_csv(args.run_b)
    for key in ("seed", "k"):
        if meta_a.get(key) != meta_b.get(key):
            raise DataError(
                f"fold plans differ ({key}={meta_a.get(key)} vs {meta_b.get(key)}); "
                "paired tests need the same partition")
    result = paired_t_test(wacc_a, wacc_b)
    print("t_statistic,df,p_value,degenerate")
    print(f"{result.t_statistic:.6g},{result.df},{result.p_value:.6g},"
          f"{'true' if result.degenerate else 'false'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spamlab",
                     description="Trainable naive Bayes spam filter with "
                                 "cost-sensitive evaluation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse raw messages into a corpus")
    p.add_argument("raw_dir")
    p.add_argument("out_dir")
    p.add_argument("--dedup-spam", action="store_true",
                   help="drop same-day duplicate spam bodies")
    p.add_argument("--address-book-keep", type=int, default=None, metavar="N",
                   help="keep only each sender's N earliest legitimate messages")
    p.add_argument("--case-fold", action=argparse.BooleanOptionalAction,
                   default=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("encrypt", help="replace tokens with integer codes")
    p.add_argument("corpus_dir")
    p.add_argument("out_dir")
    _add_preprocess_flags(p)
    p.add_argument("--all-variants", action="store_true",
                   help="emit all four lemmatizer/stop-list combinations")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("train", help="train a filter model")
    p.add_argument("corpus_dir")
    p.add_argument("model_out")
    p.add_argument("--n-attrs", type=int, default=50)
    p.add_argument("--min-df", type=int, default=1)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--attrs-out", default=None,
                   help="also write the ranked attribute list")
    _add_preprocess_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="classify messages with a model")
    p.add_argument("model")
    p.add_argument("input", help="corpus directory or single message file")
    p.add_argument("--cost-ratio", type=float, default=1.0)
    _add_preprocess_flags(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("crossval", help="cross-validated evaluation")
    p.add_argument("corpus_dir")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--n-attrs", type=int, default=None)
    p.add_argument("--cost-ratio", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--min-df", type=int, default=None)
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction,
                   default=None)
    _add_preprocess_flags(p)
    p.add_argument("--filter", choices=("nb", "keyword"), default="nb",
                   help="add a keyword rule baseline row alongside the "
                        "trained filter's")
    p.add_argument("--rules", default=None, help="keyword rule file")
    p.add_argument("--raw-dir", default=None,
                   help="raw messages for the keyword baseline")
    p.add_argument("--out", default=None, help="report CSV (default stdout)")
    p.add_argument("--folds-out", default=None, help="per-fold detail CSV")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("sweep", help="attribute-count sweep")
    p.add_argument("corpus_dir")
    p.add_argument("--config", default=None)
    p.add_argument("--n-min", type=int, default=None)
    p.add_argument("--n-max", type=int, default=None)
    p.add_argument("--n-step", type=int, default=None)
    p.add_argument("--cost-ratios", default=None,
                   help="comma-separated list (default 1,9,999)")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--min-df", type=int, default=None)
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--jobs", type=int, default=None)
    _add_preprocess_flags(p)
    p.add_argument("--filter", choices=("nb", "keyword"), default="nb",
                   help="add keyword rule baseline rows alongside the sweep")
    p.add_argument("--rules", default=None)
    p.add_argument("--raw-dir", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tsweep", help="training-size sweep")
    p.add_argument("corpus_dir")
    p.add_argument("--config", default=None)
    p.add_argument("--n-attrs", type=int, default=None)
    p.add_argument("--cost-ratio", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--min-df", type=int, default=None)
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--stratified", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--fractions", default=None,
                   help="comma-separated training fractions in (0,1]")
    _add_preprocess_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_tsweep)

    p = sub.add_parser("ttest", help="paired t-test on two fold-detail CSVs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.set_defaults(func=cmd_ttest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    raise SystemExit(main())
