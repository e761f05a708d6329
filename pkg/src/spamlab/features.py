"""Mutual-information attribute ranking and binary presence features.

Every distinct token seen in training is a candidate attribute. Candidates are
scored by the mutual information between their presence/absence and the class,
and the top scorers become the feature vector positions. Features are binary:
a bit is set when the token occurs at least once in the message, regardless of
multiplicity.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .corpus import Corpus, Message
from .errors import DataError
from .validation import spam_mask


@dataclass(frozen=True)
class AttributeStats:
    """Document-presence counts for one candidate token."""

    token: str
    n_x1_spam: int
    n_x1_legit: int
    n_x0_spam: int
    n_x0_legit: int


@dataclass(frozen=True)
class Attribute:
    token: str
    score: float
    index: int


@dataclass(frozen=True)
class AttributeSet:
    """Selected attributes ordered by decreasing mutual information.

    ``requested`` records how many attributes were asked for; when the
    candidate vocabulary was smaller, ``truncated`` is set and everything
    available is kept.
    """

    attributes: tuple[Attribute, ...]
    requested: int

    def __len__(self) -> int:
        return len(self.attributes)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(a.token for a in self.attributes)

    @property
    def truncated(self) -> bool:
        return len(self.attributes) < self.requested


def presence_matrix(docs) -> tuple[list[str], np.ndarray]:
    """Vocabulary in first-occurrence order plus a docs-by-tokens presence matrix."""
    docs = [tuple(d) for d in docs]
    index: dict[str, int] = {}
    for doc in docs:
        for tok in doc:
            if tok not in index:
                index[tok] = len(index)
    X = np.zeros((len(docs), len(index)), dtype=bool)
    for i, doc in enumerate(docs):
        X[i, [index[t] for t in set(doc)]] = True
    return list(index), X


def vectorize_docs(docs, tokens) -> np.ndarray:
    """Binary presence matrix of the given documents over a fixed token list."""
    index = {t: j for j, t in enumerate(tokens)}
    X = np.zeros((len(docs), len(index)), dtype=np.uint8)
    for i, doc in enumerate(docs):
        for tok in set(doc):
            j = index.get(tok)
            if j is not None:
                X[i, j] = 1
    return X


def vectorize(msg: Message, attrs: AttributeSet) -> np.ndarray:
    """Binary presence vector of one message over an attribute set."""
    present = set(msg.tokens)
    return np.fromiter((1 if a.token in present else 0 for a in attrs.attributes),
                       dtype=np.uint8, count=len(attrs))


def _check_counts(stats: AttributeStats, n_legit: int, n_spam: int) -> None:
    counts = (stats.n_x1_spam, stats.n_x1_legit, stats.n_x0_spam, stats.n_x0_legit)
    if any(c < 0 for c in counts):
        raise ValueError("negative counts")
    if stats.n_x1_spam + stats.n_x0_spam != n_spam:
        raise ValueError("spam counts do not sum to n_spam")
    if stats.n_x1_legit + stats.n_x0_legit != n_legit:
        raise ValueError("legit counts do not sum to n_legit")


def mutual_information(stats: AttributeStats, n_legit: int, n_spam: int) -> float:
    """Mutual information (bits) between a token's presence and the class.

    The four-cell sum over presence times class, with raw frequency ratios as
    probabilities and empty cells contributing zero.
    """
    _check_counts(stats, n_legit, n_spam)
    n = n_legit + n_spam
    if n < 1:
        raise ValueError("empty corpus")
    n_x1 = stats.n_x1_spam + stats.n_x1_legit
    n_x0 = stats.n_x0_spam + stats.n_x0_legit
    cells = (
        (stats.n_x1_spam, n_x1, n_spam),
        (stats.n_x1_legit, n_x1, n_legit),
        (stats.n_x0_spam, n_x0, n_spam),
        (stats.n_x0_legit, n_x0, n_legit),
    )
    mi = 0.0
    for joint, n_x, n_c in cells:
        if joint == 0:
            continue
        # Integer products keep the ratio exactly 1 on factorizing tables,
        # so independence gives exactly zero.
        mi += (joint / n) * math.log2((joint * n) / (n_x * n_c))
    # Rounding can leave a tiny negative residue on near-independent tables.
    return max(0.0, mi)


def _mi_scores(n1_spam: np.ndarray, n1_legit: np.ndarray,
               n_spam: int, n_legit: int) -> np.ndarray:
    """Vectorized mutual information over per-token presence counts."""
    n = n_spam + n_legit
    n1_spam = n1_spam.astype(np.int64)
    n1_legit = n1_legit.astype(np.int64)
    n0_spam = n_spam - n1_spam
    n0_legit = n_legit - n1_legit
    n_x1 = n1_spam + n1_legit
    n_x0 = n0_spam + n0_legit

    def term(joint, n_x, n_c):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (joint / n) * np.log2((joint * n) / (n_x * n_c))
        return np.where(joint > 0, t, 0.0)

    total = (term(n1_spam, n_x1, n_spam) + term(n1_legit, n_x1, n_legit)
             + term(n0_spam, n_x0, n_spam) + term(n0_legit, n_x0, n_legit))
    return np.maximum(total, 0.0)


def _tie_key(token: str):
    # Numeric tokens (encrypted corpora) order by their code; anything else
    # falls back to lexicographic order after them.
    if token.isascii() and token.isdigit():
        return (0, int(token), "")
    return (1, 0, token)


def rank_attributes(tokens, n1_spam, n1_legit, n_spam: int, n_legit: int,
                    n: int, min_df: int = 1) -> AttributeSet:
    """Rank candidate tokens by mutual information and keep the top ``n``.

    Ties break deterministically by token code (numeric tokens) or token text,
    so rankings are reproducible and prefixes are stable as ``n`` grows.
    """
    if n < 1:
        raise ValueError("attribute count must be at least 1")
    min_df = max(1, min_df)
    scores = _mi_scores(np.asarray(n1_spam), np.asarray(n1_legit), n_spam, n_legit)
    df = np.asarray(n1_spam) + np.asarray(n1_legit)
    candidates = [i for i in range(len(tokens)) if df[i] >= min_df]
    if not candidates:
        raise ValueError("empty vocabulary: no candidate attributes")
    candidates.sort(key=lambda i: (-scores[i], _tie_key(tokens[i])))
    chosen = candidates[:n]
    return AttributeSet(tuple(Attribute(tokens[i], float(scores[i]), rank)
                              for rank, i in enumerate(chosen)), requested=n)


def _corpus_counts(corpus: Corpus):
    labels = [m.label for m in corpus.messages]
    if any(lab is None for lab in labels):
        raise ValueError("corpus contains unlabeled messages")
    spam = spam_mask(labels)
    n_spam = int(spam.sum())
    n_legit = len(labels) - n_spam
    if n_spam == 0 or n_legit == 0:
        raise ValueError("corpus must contain at least one message of each class")
    tokens, X = presence_matrix(m.tokens for m in corpus.messages)
    n1_spam = X[spam].sum(axis=0)
    n1_legit = X[~spam].sum(axis=0)
    return tokens, n1_spam, n1_legit, n_spam, n_legit


def collect_stats(corpus: Corpus) -> dict[str, AttributeStats]:
    """Document-presence counts per token over a labeled corpus.

    A token counts once per message no matter how often it repeats there.
    """
    tokens, n1s, n1l, n_spam, n_legit = _corpus_counts(corpus)
    return {
        tok: AttributeStats(tok, int(n1s[i]), int(n1l[i]),
                            n_spam - int(n1s[i]), n_legit - int(n1l[i]))
        for i, tok in enumerate(tokens)
    }


def select_attributes(corpus: Corpus, n: int, min_df: int = 1) -> AttributeSet:
    """Pick the ``n`` tokens most informative about the class."""
    tokens, n1s, n1l, n_spam, n_legit = _corpus_counts(corpus)
    return rank_attributes(tokens, n1s, n1l, n_spam, n_legit, n, min_df)


def save_attribute_set(attrs: AttributeSet, path) -> None:
    """Persist as ``<rank> <token> <mi>`` lines, scores to 6 decimal places."""
    text = "".join(f"{a.index} {a.token} {a.score:.6f}\n" for a in attrs.attributes)
    Path(path).write_text(text, encoding="utf-8")


def load_attribute_set(path) -> AttributeSet:
    attributes = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected '<rank> <token> <mi>'")
        attributes.append(Attribute(parts[1], float(parts[2]), int(parts[0])))
    return AttributeSet(tuple(attributes), requested=len(attributes))


class MutualInfoSelector(BaseEstimator, TransformerMixin):
    """Select the tokens that carry the most information about the class.

    Fits on an iterable of token sequences plus labels, then transforms
    documents into binary presence matrices over the selected attributes.

    Parameters
    ----------
    n_attributes : int
        How many attributes to keep. When the candidate vocabulary is
        smaller, everything is kept and ``attributes_.truncated`` is set.
    min_df : int
        Minimum number of training documents a token must occur in to be a
        candidate. The default of 1 admits every training token.
    """

    def __init__(self, n_attributes: int = 50, min_df: int = 1):
        self.n_attributes = n_attributes
        self.min_df = min_df

    def fit(self, X, y):
        docs = [tuple(d) for d in X]
        spam = spam_mask(y, len(docs))
        n_spam = int(spam.sum())
        n_legit = len(docs) - n_spam
        if n_spam == 0 or n_legit == 0:
            raise ValueError("training data must contain both classes")
        tokens, M = presence_matrix(docs)
        n1s = M[spam].sum(axis=0)
        n1l = M[~spam].sum(axis=0)
        self.attributes_ = rank_attributes(tokens, n1s, n1l, n_spam, n_legit,
                                           self.n_attributes, self.min_df)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "attributes_")
        return vectorize_docs([tuple(d) for d in X], self.attributes_.tokens)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        check_is_fitted(self, "attributes_")
        return np.asarray(self.attributes_.tokens, dtype=object)
