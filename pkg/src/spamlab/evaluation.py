"""Cost-weighted metrics, seeded cross-validation, sweeps, and paired t-tests.

Weighted measures treat each legitimate message as ``cost_ratio`` messages, so
blocking one counts as ``cost_ratio`` errors. The total cost ratio compares
the filter's weighted error to the no-filter baseline that passes everything;
values above 1 mean the filter beats not filtering. In cross-validation the
overall total cost ratio is the baseline weighted error divided by the mean
per-fold weighted error, never the mean of per-fold ratios (which would hide
folds that do badly).
"""

import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .classifier import BinaryNaiveBayes, decision_threshold
from .corpus import (Corpus, PreprocessConfig, RawMessage, SPAM,
                     preprocess_corpus)
from .features import presence_matrix, rank_attributes
from .keyword_filter import RuleSet, classify_keyword


@dataclass(frozen=True)
class ConfusionCounts:
    """Outcome counts: messages kept or blocked, by true class."""

    n_legit_pass: int
    n_legit_blocked: int
    n_spam_pass: int
    n_spam_blocked: int

    def __post_init__(self):
        if min(self.n_legit_pass, self.n_legit_blocked,
               self.n_spam_pass, self.n_spam_blocked) < 0:
            raise ValueError("counts must be nonnegative")

    @property
    def n_legit(self) -> int:
        return self.n_legit_pass + self.n_legit_blocked

    @property
    def n_spam(self) -> int:
        return self.n_spam_pass + self.n_spam_blocked

    @property
    def total(self) -> int:
        return self.n_legit + self.n_spam

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.n_legit_pass + other.n_legit_pass,
            self.n_legit_blocked + other.n_legit_blocked,
            self.n_spam_pass + other.n_spam_pass,
            self.n_spam_blocked + other.n_spam_blocked,
        )


def confusion_from_decisions(is_spam: Iterable[bool],
                             blocked: Iterable[bool]) -> ConfusionCounts:
    n_lp = n_lb = n_sp = n_sb = 0
    for truth, pred in zip(is_spam, blocked, strict=True):
        if truth:
            if pred:
                n_sb += 1
            else:
                n_sp += 1
        elif pred:
            n_lb += 1
        else:
            n_lp += 1
    return ConfusionCounts(n_lp, n_lb, n_sp, n_sb)


def weighted_accuracy(counts: ConfusionCounts, cost_ratio: float) -> float:
    """Accuracy with every legitimate message weighted ``cost_ratio`` times."""
    lam = float(cost_ratio)
    return (lam * counts.n_legit_pass + counts.n_spam_blocked) \
        / (lam * counts.n_legit + counts.n_spam)


def baseline_weighted_error(counts: ConfusionCounts, cost_ratio: float) -> float:
    """Weighted error of the pass-everything baseline on the same messages."""
    lam = float(cost_ratio)
    return 1.0 - lam * counts.n_legit / (lam * counts.n_legit + counts.n_spam)


@dataclass(frozen=True)
class MetricsReport:
    """Every reported measure for one confusion table at one cost ratio.

    ``spam_precision`` is None when nothing was blocked (no positives to be
    precise about); reports print it infinity-style. ``total_cost_ratio`` is
    infinite when the filter made no weighted errors.
    """

    cost_ratio: float
    spam_recall: float
    spam_precision: float | None
    accuracy: float
    error_rate: float
    weighted_accuracy: float
    weighted_error: float
    baseline_weighted_accuracy: float
    baseline_weighted_error: float
    total_cost_ratio: float


def metrics(counts: ConfusionCounts, cost_ratio: float) -> MetricsReport:
    """Compute the full report for one confusion table."""
    if not cost_ratio > 0:
        raise ValueError("cost_ratio must be positive")
    if counts.n_legit < 1 or counts.n_spam < 1:
        raise ValueError("need at least one message of each class")
    blocked = counts.n_spam_blocked + counts.n_legit_blocked
    sr = counts.n_spam_blocked / counts.n_spam
    sp = counts.n_spam_blocked / blocked if blocked else None
    acc = (counts.n_legit_pass + counts.n_spam_blocked) / counts.total
    wacc = weighted_accuracy(counts, cost_ratio)
    werr = 1.0 - wacc
    berr = baseline_weighted_error(counts, cost_ratio)
    tcr = berr / werr if werr > 0 else math.inf
    return MetricsReport(
        cost_ratio=float(cost_ratio), spam_recall=sr, spam_precision=sp,
        accuracy=acc, error_rate=1.0 - acc,
        weighted_accuracy=wacc, weighted_error=werr,
        baseline_weighted_accuracy=1.0 - berr, baseline_weighted_error=berr,
        total_cost_ratio=tcr)


@dataclass(frozen=True)
class FoldPlan:
    """A reproducible partition of message ids into folds."""

    seed: int
    k: int
    assignment: dict[str, int]
    stratified: bool = False

    def members(self, fold: int) -> list[str]:
        return sorted(i for i, f in self.assignment.items() if f == fold)

    def validate_for(self, corpus: Corpus) -> None:
        ids = set(corpus.ids())
        planned = set(self.assignment)
        if ids != planned:
            raise ValueError("fold plan does not cover exactly the corpus ids")
        folds = set(self.assignment.values())
        if folds != set(range(self.k)):
            raise ValueError("fold indices must cover 0..k-1")


def make_folds(corpus: Corpus, k: int, seed: int,
               stratified: bool = False) -> FoldPlan:
    """Randomly partition a corpus into ``k`` folds whose sizes differ by at
    most one; the same seed always gives the same assignment."""
    ids = corpus.ids()
    if len(set(ids)) != len(ids):
        raise ValueError("corpus has duplicate message ids")
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > len(ids):
        raise ValueError(f"k={k} exceeds corpus size {len(ids)}")
    rng = random.Random(seed)
    if stratified:
        spam_ids = sorted(m.id for m in corpus.messages if m.label == SPAM)
        other_ids = sorted(m.id for m in corpus.messages if m.label != SPAM)
        rng.shuffle(spam_ids)
        rng.shuffle(other_ids)
        ordered = spam_ids + other_ids
        assignment = {mid: pos % k for pos, mid in enumerate(ordered)}
    else:
        ordered = sorted(ids)
        rng.shuffle(ordered)
        assignment = {}
        base, extra = divmod(len(ordered), k)
        start = 0
        for fold in range(k):
            size = base + (1 if fold < extra else 0)
            for mid in ordered[start:start + size]:
                assignment[mid] = fold
            start += size
    return FoldPlan(seed=seed, k=k, assignment=assignment, stratified=stratified)


@dataclass(frozen=True)
class FoldResult:
    """One held-out fold's outcome. ``attribute_tokens`` is empty for filters
    that do not train."""

    fold: int
    counts: ConfusionCounts
    weighted_accuracy: float
    weighted_error: float
    baseline_weighted_error: float
    attribute_tokens: tuple[str, ...] = ()


@dataclass(frozen=True)
class CvResult:
    """Aggregated cross-validation outcome.

    ``total_cost_ratio`` divides the mean per-fold baseline weighted error by
    the mean per-fold weighted error; averaging per-fold ratios instead would
    ignore folds that perform far worse than the baseline.
    """

    cost_ratio: float
    folds: tuple[FoldResult, ...]
    pooled: ConfusionCounts
    mean_weighted_accuracy: float
    mean_weighted_error: float
    baseline_weighted_error: float
    total_cost_ratio: float

    @property
    def spam_recall(self) -> float:
        return self.pooled.n_spam_blocked / self.pooled.n_spam

    @property
    def spam_precision(self) -> float | None:
        blocked = self.pooled.n_spam_blocked + self.pooled.n_legit_blocked
        return self.pooled.n_spam_blocked / blocked if blocked else None


def summarize_folds(folds: Sequence[FoldResult], cost_ratio: float) -> CvResult:
    if not folds:
        raise ValueError("no folds to summarize")
    mean_wacc = sum(f.weighted_accuracy for f in folds) / len(folds)
    mean_werr = sum(f.weighted_error for f in folds) / len(folds)
    mean_berr = sum(f.baseline_weighted_error for f in folds) / len(folds)
    tcr = mean_berr / mean_werr if mean_werr > 0 else math.inf
    pooled = folds[0].counts
    for f in folds[1:]:
        pooled = pooled + f.counts
    return CvResult(cost_ratio=float(cost_ratio), folds=tuple(folds),
                    pooled=pooled, mean_weighted_accuracy=mean_wacc,
                    mean_weighted_error=mean_werr,
                    baseline_weighted_error=mean_berr, total_cost_ratio=tcr)


def _fold_result(fold: int, is_spam, blocked, cost_ratio: float,
                 attribute_tokens: tuple[str, ...] = ()) -> FoldResult:
    counts = confusion_from_decisions(is_spam, blocked)
    wacc = weighted_accuracy(counts, cost_ratio)
    return FoldResult(fold=fold, counts=counts, weighted_accuracy=wacc,
                      weighted_error=1.0 - wacc,
                      baseline_weighted_error=baseline_weighted_error(counts, cost_ratio),
                      attribute_tokens=attribute_tokens)


def _part_seed(seed: int, part: int) -> int:
    # Derived, collision-free seeds for per-part subsampling in the
    # training-size sweep; everything flows from the plan's seed.
    return seed * 1000003 + part


def cross_validate(corpus: Corpus, cfg: PreprocessConfig, n_attributes: int,
                   cost_ratio: float, plan: FoldPlan, *, min_df: int = 1,
                   smoothing: float = 1.0, train_fraction: float = 1.0,
                   lemmatizer: Callable[[str], str] | None = None) -> CvResult:
    """Cross-validate the naive Bayes filter under a fixed fold plan.

    Attribute selection and training see only the training folds, so nothing
    from a held-out fold can leak into the ranking or the conditionals.
    ``train_fraction`` keeps only that seeded fraction of each training part
    (subsets are nested: a smaller fraction is a prefix of a larger one).
    """
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError("train_fraction must be in (0, 1]")
    plan.validate_for(corpus)
    pre = preprocess_corpus(corpus, cfg, lemmatizer)
    if any(m.label is None for m in pre.messages):
        raise ValueError("corpus contains unlabeled messages")
    docs = [m.tokens for m in pre.messages]
    is_spam = np.array([m.label == SPAM for m in pre.messages])
    tokens, X = presence_matrix(docs)
    token_col = {t: j for j, t in enumerate(tokens)}
    id_row = {m.id: i for i, m in enumerate(pre.messages)}

    part_rows: list[list[int]] = []
    for part in range(plan.k):
        members = plan.members(part)
        rows = [id_row[mid] for mid in members]
        if train_fraction < 1.0:
            rng = random.Random(_part_seed(plan.seed, part))
            shuffled = list(rows)
            rng.shuffle(shuffled)
            keep = max(1, round(train_fraction * len(shuffled)))
            part_rows.append(shuffled[:keep])
        else:
            part_rows.append(rows)

    fold_results = []
    threshold = decision_threshold(cost_ratio)
    for fold in range(plan.k):
        test_rows = np.array(sorted(id_row[mid] for mid in plan.members(fold)))
        train_rows = np.array(sorted(
            r for part in range(plan.k) if part != fold for r in part_rows[part]))
        spam_tr = is_spam[train_rows]
        n_spam = int(spam_tr.sum())
        n_legit = len(train_rows) - n_spam
        if n_spam == 0 or n_legit == 0:
            raise ValueError(f"fold {fold}: training data lacks one of the classes")
        Xtr = X[train_rows]
        n1s = Xtr[spam_tr].sum(axis=0)
        n1l = Xtr[~spam_tr].sum(axis=0)
        attrs = rank_attributes(tokens, n1s, n1l, n_spam, n_legit,
                                n_attributes, min_df)
        sel = [token_col[t] for t in attrs.tokens]
        nb = BinaryNaiveBayes(smoothing=smoothing)
        nb.fit(Xtr[:, sel], spam_tr)
        posterior = nb.posterior_spam(X[test_rows][:, sel])
        blocked = posterior > threshold
        fold_results.append(_fold_result(fold, is_spam[test_rows], blocked,
                                         cost_ratio, attrs.tokens))
    return summarize_folds(fold_results, cost_ratio)


def cross_validate_keyword(messages: Sequence[RawMessage], ruleset: RuleSet,
                           cost_ratio: float, plan: FoldPlan) -> CvResult:
    """Evaluate a keyword rule set fold by fold under the same plan.

    The rules do not train, so cross-validation only splits the evaluation;
    the per-fold results pair with a trained filter's for significance tests.
    """
    by_id = {m.id: m for m in messages}
    if len(by_id) != len(messages):
        raise ValueError("duplicate message ids")
    if set(by_id) != set(plan.assignment):
        raise ValueError("fold plan does not cover exactly the message ids")
    decision_threshold(cost_ratio)
    fold_results = []
    for fold in range(plan.k):
        members = plan.members(fold)
        is_spam = []
        blocked = []
        for mid in members:
            msg = by_id[mid]
            if msg.label is None:
                raise ValueError(f"{mid}: unlabeled message")
            is_spam.append(msg.label == SPAM)
            blocked.append(classify_keyword(ruleset, msg) == SPAM)
        fold_results.append(_fold_result(fold, is_spam, blocked, cost_ratio))
    return summarize_folds(fold_results, cost_ratio)


@dataclass(frozen=True)
class SweepRow:
    """One report row; ``n_attributes`` and the preprocessing flags are None
    for filters they do not apply to (printed as '-')."""

    n_attributes: int | None
    cost_ratio: float
    lemmatize: bool | None
    stoplist: bool | None
    spam_recall: float
    spam_precision: float | None
    weighted_accuracy: float
    total_cost_ratio: float


def _row_from_cv(result: CvResult, n_attributes: int | None,
                 cfg: PreprocessConfig | None) -> SweepRow:
    return SweepRow(
        n_attributes=n_attributes, cost_ratio=result.cost_ratio,
        lemmatize=cfg.lemmatize if cfg is not None else None,
        stoplist=cfg.stoplist if cfg is not None else None,
        spam_recall=result.spam_recall, spam_precision=result.spam_precision,
        weighted_accuracy=result.mean_weighted_accuracy,
        total_cost_ratio=result.total_cost_ratio)


def _sweep_cell(args) -> SweepRow:
    corpus, cfg, n, cost_ratio, plan, min_df, smoothing = args
    result = cross_validate(corpus, cfg, n, cost_ratio, plan,
                            min_df=min_df, smoothing=smoothing)
    return _row_from_cv(result, n, cfg)


def attribute_sweep(corpus: Corpus, cfg: PreprocessConfig,
                    cost_ratios: Sequence[float], n_values: Sequence[int],
                    plan: FoldPlan, *, min_df: int = 1, smoothing: float = 1.0,
                    jobs: int = 1) -> list[SweepRow]:
    """Cross-validate every (attribute count, cost ratio) cell.

    Cells are independent; with ``jobs`` > 1 they run in worker processes and
    the output is identical to a sequential run.
    """
    if not n_values:
        raise ValueError("n_values must be nonempty")
    cells = [(corpus, cfg, n, lam, plan, min_df, smoothing)
             for n in n_values for lam in cost_ratios]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_cell, cells))
    return [_sweep_cell(cell) for cell in cells]


@dataclass(frozen=True)
class TrainingSizeRow:
    fraction: float
    total_cost_ratio: float


def training_size_sweep(corpus: Corpus, cfg: PreprocessConfig,
                        n_attributes: int, cost_ratio: float, plan: FoldPlan,
                        fractions: Sequence[float], *, min_df: int = 1,
                        smoothing: float = 1.0) -> list[TrainingSizeRow]:
    """Cross-validate at increasing training-set fractions.

    Each training part is subsampled to the fraction; the seeded subsets are
    nested, so larger fractions extend smaller ones.
    """
    rows = []
    for fraction in fractions:
        result = cross_validate(corpus, cfg, n_attributes, cost_ratio, plan,
                                min_df=min_df, smoothing=smoothing,
                                train_fraction=float(fraction))
        rows.append(TrainingSizeRow(float(fraction), result.total_cost_ratio))
    return rows


@dataclass(frozen=True)
class TTestResult:
    """Paired one-sided t-test outcome. ``degenerate`` marks zero-variance
    differences, where the statistic is not defined."""

    t_statistic: float
    df: int
    p_value: float
    degenerate: bool


def paired_t_test(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """One-sided paired Student t-test that the first run beats the second.

    Pairing is positional (fold by fold), so both runs must come from the
    same fold plan. Identical inputs give p = 0.5; constant nonzero
    differences are flagged degenerate with p of 0 or 1 by direction.
    """
    xs = [float(v) for v in a]
    ys = [float(v) for v in b]
    if len(xs) != len(ys):
        raise ValueError("paired samples must have equal length")
    if len(xs) < 2:
        raise ValueError("need at least two pairs")
    diffs = [x - y for x, y in zip(xs, ys)]
    k = len(diffs)
    mean = sum(diffs) / k
    var = sum((d - mean) ** 2 for d in diffs) / (k - 1)
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, k - 1, 0.5, True)
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(t, k - 1, 0.0 if mean > 0 else 1.0, True)
    t = mean / math.sqrt(var / k)
    return TTestResult(t, k - 1, student_t_sf(t, k - 1), False)


def student_t_sf(t: float, df: int) -> float:
    """Upper tail probability P(T >= t) of Student's t distribution.

    Exact through the regularized incomplete beta function; no normal
    approximation, which matters at the small fold counts used here.
    """
    if df < 1:
        raise ValueError("df must be at least 1")
    x = df / (df + t * t)
    p = 0.5 * _reg_inc_beta(0.5 * df, 0.5, x)
    return p if t >= 0 else 1.0 - p


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) via Lentz's continued fraction."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    # The continued fraction converges fast only for x below the split point;
    # above it, evaluate the mirrored fraction.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _beta_cf(a: float, b: float, x: float) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-15:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


REPORT_COLUMNS = "n_attrs,lambda,lemmatize,stoplist,spam_recall,spam_precision,w_accuracy,tcr"


def _fmt_pct(value: float | None) -> str:
    if value is None:
        return "inf"
    return f"{100.0 * value:.3f}"


def _fmt_tcr(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return f"{value:.2f}"


def _fmt_flag(value: bool | None) -> str:
    if value is None:
        return "-"
    return "true" if value else "false"


def sweep_rows_to_csv(rows: Sequence[SweepRow], seed: int) -> str:
    """Render report rows in the fixed report schema (percentages to three
    decimals, total cost ratio to two)."""
    lines = [f"# seed={seed}", REPORT_COLUMNS]
    for r in rows:
        lines.append(",".join([
            "-" if r.n_attributes is None else str(r.n_attributes),
            f"{r.cost_ratio:g}",
            _fmt_flag(r.lemmatize),
            _fmt_flag(r.stoplist),
            _fmt_pct(r.spam_recall),
            _fmt_pct(r.spam_precision),
            _fmt_pct(r.weighted_accuracy),
            _fmt_tcr(r.total_cost_ratio),
        ]))
    return "\n".join(lines) + "\n"


def training_rows_to_csv(rows: Sequence[TrainingSizeRow], seed: int) -> str:
    lines = [f"# seed={seed}", "fraction,tcr"]
    for r in rows:
        lines.append(f"{r.fraction:g},{_fmt_tcr(r.total_cost_ratio)}")
    return "\n".join(lines) + "\n"


def fold_results_to_csv(result: CvResult, seed: int, k: int) -> str:
    """Per-fold detail with full-precision weighted accuracy, the input to
    paired significance tests."""
    lines = [
        f"# seed={seed} k={k} lambda={result.cost_ratio:g}",
        "fold,n_legit_pass,n_legit_blocked,n_spam_pass,n_spam_blocked,"
        "weighted_accuracy,weighted_error",
    ]
    for f in result.folds:
        c = f.counts
        lines.append(
            f"{f.fold},{c.n_legit_pass},{c.n_legit_blocked},{c.n_spam_pass},"
            f"{c.n_spam_blocked},{f.weighted_accuracy:.17g},{f.weighted_error:.17g}")
    return "\n".join(lines) + "\n"
