"""Two-class naive Bayes over binary attributes with a cost-ratio decision rule.

Training is counting: class priors are class frequencies, and each attribute's
conditional presence probability is its smoothed presence ratio. A message is
blocked as spam when the posterior odds of spam exceed the cost ratio, i.e.
when the spam posterior exceeds ``cost_ratio / (1 + cost_ratio)``. The cost
ratio says how many missed spam messages one wrongly blocked legitimate
message is worth.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import Corpus, LEGIT, Message, PreprocessConfig, SPAM
from .errors import DataError
from .features import AttributeSet, vectorize_docs
from .validation import check_presence_matrix, spam_mask


def decision_threshold(cost_ratio: float) -> float:
    """Posterior threshold equivalent to blocking when the odds exceed the ratio."""
    if not cost_ratio > 0:
        raise ValueError("cost_ratio must be positive")
    return cost_ratio / (1.0 + cost_ratio)


@dataclass(frozen=True)
class Decision:
    """One classification outcome with the parameters that produced it."""

    posterior_spam: float
    label: str
    cost_ratio: float
    threshold: float


def decide(posterior_spam: float, cost_ratio: float) -> Decision:
    """Label a message from its spam posterior; blocking requires strictly
    exceeding the threshold."""
    threshold = decision_threshold(cost_ratio)
    label = SPAM if posterior_spam > threshold else LEGIT
    return Decision(posterior_spam, label, cost_ratio, threshold)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class BinaryNaiveBayes(BaseEstimator, ClassifierMixin):
    """Naive Bayes on binary presence features, trained by counting.

    Conditional probabilities are presence ratios with additive smoothing so
    that no single attribute can veto a class outright; they are therefore
    always strictly between 0 and 1. Posteriors are accumulated in log space
    (direct products of hundreds of factors underflow) and renormalized over
    the two classes.

    Parameters
    ----------
    smoothing : float
        Additive smoothing weight for the presence/absence counts
        (1.0 gives add-one smoothing over the two outcomes).
    cost_ratio : float
        Cost of a blocked legitimate message measured in missed spam
        messages; sets the decision threshold used by ``predict``.
    """

    def __init__(self, smoothing: float = 1.0, cost_ratio: float = 1.0):
        self.smoothing = smoothing
        self.cost_ratio = cost_ratio

    def fit(self, X, y):
        if not self.smoothing > 0:
            raise ValueError("smoothing must be positive")
        decision_threshold(self.cost_ratio)
        X = check_presence_matrix(X)
        spam = spam_mask(y, len(X))
        n_spam = int(spam.sum())
        n_legit = len(X) - n_spam
        if n_spam == 0 or n_legit == 0:
            raise ValueError("training data must contain both classes")
        s = float(self.smoothing)
        self.cond_spam_ = (X[spam].sum(axis=0) + s) / (n_spam + 2.0 * s)
        self.cond_legit_ = (X[~spam].sum(axis=0) + s) / (n_legit + 2.0 * s)
        self.n_spam_ = n_spam
        self.n_legit_ = n_legit
        self.prior_spam_ = n_spam / (n_spam + n_legit)
        self.classes_ = np.array([LEGIT, SPAM], dtype=object)
        self.n_features_in_ = X.shape[1]
        return self

    def posterior_spam(self, X) -> np.ndarray:
        """Spam posterior for each row of a presence matrix."""
        check_is_fitted(self, "cond_spam_")
        X = check_presence_matrix(X, self.n_features_in_)
        Xf = X.astype(np.float64)
        log_odds_present = np.log(self.cond_spam_) - np.log(self.cond_legit_)
        log_odds_absent = np.log1p(-self.cond_spam_) - np.log1p(-self.cond_legit_)
        gap = (math.log(self.prior_spam_) - math.log1p(-self.prior_spam_)
               + float(log_odds_absent.sum())
               + Xf @ (log_odds_present - log_odds_absent))
        return _stable_sigmoid(np.asarray(gap, dtype=np.float64))

    def predict_proba(self, X) -> np.ndarray:
        p = self.posterior_spam(X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        threshold = decision_threshold(self.cost_ratio)
        p = self.posterior_spam(X)
        return np.where(p > threshold, SPAM, LEGIT).astype(object)


@dataclass(frozen=True, eq=False)
class FilterModel:
    """A trained filter: the selected attribute tokens plus the fitted classifier.

    ``preprocess_hash`` pins the preprocessing configuration the model was
    trained under so mismatched configurations are caught at classify time.
    """

    attribute_tokens: tuple[str, ...]
    nb: BinaryNaiveBayes
    n_legit: int
    n_spam: int
    smoothing: float
    preprocess_hash: str

    def posterior_spam(self, msg: Message) -> float:
        row = vectorize_docs([msg.tokens], self.attribute_tokens)
        return float(self.nb.posterior_spam(row)[0])

    def decide(self, msg: Message, cost_ratio: float) -> Decision:
        return decide(self.posterior_spam(msg), cost_ratio)


def train(corpus: Corpus, attrs: AttributeSet, smoothing: float = 1.0,
          preprocess: PreprocessConfig | None = None) -> FilterModel:
    """Fit naive Bayes conditionals for the given attribute set.

    The corpus must already be preprocessed with the configuration passed
    here; the model records only that configuration's hash.
    """
    tokens = attrs.tokens
    X = vectorize_docs([m.tokens for m in corpus.messages], tokens)
    nb = BinaryNaiveBayes(smoothing=smoothing)
    nb.fit(X, [m.label for m in corpus.messages])
    cfg = preprocess if preprocess is not None else PreprocessConfig()
    return FilterModel(tokens, nb, nb.n_legit_, nb.n_spam_, float(smoothing),
                       cfg.config_hash())


def save_model(model: FilterModel, path) -> None:
    """Persist a trained model as text; probabilities keep 12 significant digits."""
    lines = [
        "# naive bayes spam filter model",
        f"n_legit {model.n_legit}",
        f"n_spam {model.n_spam}",
        f"smoothing {model.smoothing:g}",
        f"preprocess_hash {model.preprocess_hash}",
        f"attributes {len(model.attribute_tokens)}",
    ]
    for tok, ps, pl in zip(model.attribute_tokens, model.nb.cond_spam_,
                           model.nb.cond_legit_):
        lines.append(f"{tok} {ps:.12g} {pl:.12g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path) -> FilterModel:
    path = Path(path)
    lines = [ln for ln in path.read_text(encoding="utf-8").splitlines()
             if ln.strip() and not ln.startswith("#")]
    header: dict[str, str] = {}
    idx = 0
    for idx, line in enumerate(lines):
        key, _, value = line.partition(" ")
        if key not in {"n_legit", "n_spam", "smoothing", "preprocess_hash",
                       "attributes"}:
            raise DataError(f"{path}: unexpected header line: {line!r}")
        header[key] = value.strip()
        if key == "attributes":
            break
    missing = {"n_legit", "n_spam", "smoothing", "preprocess_hash",
               "attributes"} - set(header)
    if missing:
        raise DataError(f"{path}: missing header fields: {sorted(missing)}")
    n_attrs = int(header["attributes"])
    rows = lines[idx + 1:]
    if len(rows) != n_attrs:
        raise DataError(f"{path}: expected {n_attrs} attribute rows, got {len(rows)}")
    tokens = []
    cond_spam = np.empty(n_attrs)
    cond_legit = np.empty(n_attrs)
    for i, row in enumerate(rows):
        parts = row.split()
        if len(parts) != 3:
            raise DataError(f"{path}: bad attribute row: {row!r}")
        tokens.append(parts[0])
        cond_spam[i] = float(parts[1])
        cond_legit[i] = float(parts[2])
    n_legit = int(header["n_legit"])
    n_spam = int(header["n_spam"])
    smoothing = float(header["smoothing"])
    nb = BinaryNaiveBayes(smoothing=smoothing)
    nb.cond_spam_ = cond_spam
    nb.cond_legit_ = cond_legit
    nb.n_spam_ = n_spam
    nb.n_legit_ = n_legit
    nb.prior_spam_ = n_spam / (n_spam + n_legit)
    nb.classes_ = np.array([LEGIT, SPAM], dtype=object)
    nb.n_features_in_ = n_attrs
    return FilterModel(tuple(tokens), nb, n_legit, n_spam, smoothing,
                       header["preprocess_hash"])
