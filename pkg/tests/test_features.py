import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from sklearn.base import clone

from spamlab import (AttributeStats, Corpus, LEGIT, Message, MutualInfoSelector,
                     SPAM, collect_stats, load_attribute_set,
                     mutual_information, save_attribute_set, select_attributes,
                     vectorize, vectorize_docs)
from conftest import synthetic_corpus


def mi_brute_force(n1s, n1l, n0s, n0l):
    """Independent evaluation of the four-cell sum with exact rationals."""
    n = n1s + n1l + n0s + n0l
    ns, nl = n1s + n0s, n1l + n0l
    nx1, nx0 = n1s + n1l, n0s + n0l
    total = 0.0
    for joint, nx, nc in [(n1s, nx1, ns), (n1l, nx1, nl),
                          (n0s, nx0, ns), (n0l, nx0, nl)]:
        if joint:
            p = Fraction(joint, n)
            total += float(p) * math.log2(float(p / (Fraction(nx, n) * Fraction(nc, n))))
    return total


def message(mid, body, label):
    return Message(mid, (), tuple(body.split()), label)


class TestCollectStats:
    def corpus(self):
        return Corpus((
            message("spam/1", "cash now", SPAM),
            message("spam/2", "cash cash cash", SPAM),
            message("legit/1", "cash later", LEGIT),
            message("legit/2", "see you", LEGIT),
        ))

    def test_hand_counts(self):
        stats = collect_stats(self.corpus())
        assert stats["cash"] == AttributeStats("cash", 2, 1, 0, 1)

    def test_presence_not_frequency(self):
        stats = collect_stats(self.corpus())
        assert stats["cash"].n_x1_spam == 2  # triple occurrence counts once

    def test_absent_token_absent_from_map(self):
        assert "viagra" not in collect_stats(self.corpus())

    def test_token_in_every_message(self):
        corpus = Corpus((message("spam/1", "x a", SPAM),
                         message("legit/1", "x b", LEGIT)))
        stats = collect_stats(corpus)["x"]
        assert stats.n_x0_spam == 0
        assert stats.n_x0_legit == 0

    def test_single_class_rejected(self):
        corpus = Corpus((message("spam/1", "a", SPAM),))
        with pytest.raises(ValueError):
            collect_stats(corpus)


class TestMutualInformation:
    def test_constant_attribute_is_zero(self):
        assert mutual_information(AttributeStats("x", 3, 2, 0, 0), 2, 3) == 0.0

    def test_balanced_perfect_predictor_is_one_bit(self):
        assert mutual_information(AttributeStats("x", 5, 0, 0, 5), 5, 5) == 1.0

    def test_derived_example(self):
        got = mutual_information(AttributeStats("x", 2, 1, 0, 1), 2, 2)
        assert got == pytest.approx(0.31127812445913283, abs=1e-12)

    def test_independent_table_is_zero(self):
        # presence rate 2/3 in both classes: joint factorizes exactly
        assert mutual_information(AttributeStats("x", 2, 2, 1, 1), 3, 3) == 0.0

    def test_matches_brute_force_on_random_tables(self):
        rng = random.Random(42)
        for _ in range(300):
            ns, nl = rng.randint(1, 50), rng.randint(1, 50)
            n1s, n1l = rng.randint(0, ns), rng.randint(0, nl)
            stats = AttributeStats("x", n1s, n1l, ns - n1s, nl - n1l)
            got = mutual_information(stats, nl, ns)
            want = mi_brute_force(n1s, n1l, ns - n1s, nl - n1l)
            assert got == pytest.approx(want, abs=1e-12)

    @given(st.integers(1, 40), st.integers(1, 40),
           st.integers(0, 40), st.integers(0, 40))
    def test_nonnegative_and_swap_symmetric(self, ns, nl, a, b):
        n1s, n1l = min(a, ns), min(b, nl)
        stats = AttributeStats("x", n1s, n1l, ns - n1s, nl - n1l)
        swapped = AttributeStats("x", n1l, n1s, nl - n1l, ns - n1s)
        mi = mutual_information(stats, nl, ns)
        assert mi >= 0.0
        assert mi == pytest.approx(mutual_information(swapped, ns, nl), abs=1e-12)

    def test_inconsistent_counts_rejected(self):
        with pytest.raises(ValueError):
            mutual_information(AttributeStats("x", 2, 0, 0, 0), 1, 1)


class TestSelectAttributes:
    def test_requested_more_than_vocabulary(self):
        corpus = Corpus((message("spam/1", "a b", SPAM),
                         message("legit/1", "c", LEGIT)))
        attrs = select_attributes(corpus, 10)
        assert len(attrs) == 3
        assert attrs.truncated
        assert attrs.requested == 10

    def test_informative_token_ranked_first(self):
        msgs = [message(f"spam/{i}", f"signal filler{i % 3}", SPAM) for i in range(6)]
        msgs += [message(f"legit/{i}", f"other filler{i % 3}", LEGIT) for i in range(6)]
        corpus = Corpus(tuple(msgs))
        attrs = select_attributes(corpus, 3)
        stats = collect_stats(corpus)
        scored = {t: mi_brute_force(s.n_x1_spam, s.n_x1_legit,
                                    s.n_x0_spam, s.n_x0_legit)
                  for t, s in stats.items()}
        best = max(scored, key=scored.get)
        assert attrs.attributes[0].token in ("signal", "other")
        assert scored[attrs.attributes[0].token] == pytest.approx(scored[best])

    def test_exact_count_on_larger_corpus(self):
        corpus = synthetic_corpus(40, 40, seed=5, spam_vocab=40, legit_vocab=40)
        attrs = select_attributes(corpus, 50)
        assert len(attrs) == 50
        assert not attrs.truncated

    def test_prefix_stability(self):
        corpus = synthetic_corpus(30, 30, seed=9, spam_vocab=25, legit_vocab=25,
                                  shared_vocab=10)
        small = select_attributes(corpus, 20)
        large = select_attributes(corpus, 35)
        assert large.tokens[:20] == small.tokens

    def test_numeric_tie_break_orders_by_code(self):
        # both tokens occur in the same single message: identical counts
        corpus = Corpus((message("spam/1", "10 9", SPAM),
                         message("legit/1", "z", LEGIT)))
        attrs = select_attributes(corpus, 3)
        scores = {a.token: a.score for a in attrs.attributes}
        assert scores["9"] == scores["10"]
        assert attrs.tokens.index("9") < attrs.tokens.index("10")

    def test_lexicographic_tie_break_for_words(self):
        corpus = Corpus((message("spam/1", "beta alpha", SPAM),
                         message("legit/1", "z", LEGIT)))
        attrs = select_attributes(corpus, 3)
        assert attrs.tokens.index("alpha") < attrs.tokens.index("beta")

    def test_min_df_filters_candidates(self):
        corpus = Corpus((message("spam/1", "rare common", SPAM),
                         message("spam/2", "common", SPAM),
                         message("legit/1", "common other", LEGIT),
                         message("legit/2", "other", LEGIT)))
        attrs = select_attributes(corpus, 10, min_df=2)
        assert "rare" not in attrs.tokens
        assert "common" in attrs.tokens

    def test_invalid_requests(self):
        corpus = Corpus((message("spam/1", "a", SPAM),
                         message("legit/1", "b", LEGIT)))
        with pytest.raises(ValueError):
            select_attributes(corpus, 0)
        empty = Corpus((Message("spam/1", (), (), SPAM),
                        Message("legit/1", (), (), LEGIT)))
        with pytest.raises(ValueError):
            select_attributes(empty, 1)

    def test_scores_match_brute_force_for_selected(self):
        corpus = synthetic_corpus(25, 25, seed=3, shared_vocab=8)
        attrs = select_attributes(corpus, 30)
        stats = collect_stats(corpus)
        for a in attrs.attributes:
            s = stats[a.token]
            want = mi_brute_force(s.n_x1_spam, s.n_x1_legit,
                                  s.n_x0_spam, s.n_x0_legit)
            assert a.score == pytest.approx(want, abs=1e-12)

    def test_save_load_round_trip(self, tmp_path):
        corpus = synthetic_corpus(20, 20, seed=1)
        attrs = select_attributes(corpus, 10)
        save_attribute_set(attrs, tmp_path / "attrs.txt")
        loaded = load_attribute_set(tmp_path / "attrs.txt")
        assert loaded.tokens == attrs.tokens
        for got, want in zip(loaded.attributes, attrs.attributes):
            assert got.index == want.index
            assert got.score == pytest.approx(want.score, abs=1e-6)
        first_line = (tmp_path / "attrs.txt").read_text().splitlines()[0]
        assert len(first_line.split()[2].split(".")[1]) == 6


class TestVectorize:
    def attrs(self):
        corpus = Corpus((message("spam/1", "cash win now", SPAM),
                         message("legit/1", "see you soon", LEGIT)))
        return select_attributes(corpus, 6)

    def test_no_attribute_tokens(self):
        attrs = self.attrs()
        vec = vectorize(Message("x", (), ("unrelated",), None), attrs)
        assert not vec.any()

    def test_every_attribute_token(self):
        attrs = self.attrs()
        vec = vectorize(Message("x", (), attrs.tokens, None), attrs)
        assert vec.all()

    def test_multiplicity_ignored(self):
        attrs = self.attrs()
        first = attrs.tokens[0]
        vec = vectorize(Message("x", (), (first,) * 5, None), attrs)
        assert vec.sum() == 1
        assert vec[0] == 1

    def test_order_invariance(self):
        attrs = self.attrs()
        toks = list(attrs.tokens[:3])
        a = vectorize(Message("x", (), tuple(toks), None), attrs)
        b = vectorize(Message("x", (), tuple(reversed(toks)), None), attrs)
        assert (a == b).all()

    def test_vectorize_docs_matches_vectorize(self):
        attrs = self.attrs()
        docs = [("cash", "you"), ("win", "win", "soon"), ()]
        X = vectorize_docs(docs, attrs.tokens)
        for i, doc in enumerate(docs):
            row = vectorize(Message("x", (), doc, None), attrs)
            assert (X[i] == row).all()


class TestMutualInfoSelector:
    def data(self):
        corpus = synthetic_corpus(20, 20, seed=2, shared_vocab=5)
        docs = [m.tokens for m in corpus.messages]
        y = [m.label for m in corpus.messages]
        return corpus, docs, y

    def test_fit_transform_shape(self):
        corpus, docs, y = self.data()
        sel = MutualInfoSelector(n_attributes=15).fit(docs, y)
        X = sel.transform(docs)
        assert X.shape == (len(docs), 15)
        assert set(np.unique(X)) <= {0, 1}

    def test_matches_select_attributes(self):
        corpus, docs, y = self.data()
        sel = MutualInfoSelector(n_attributes=15).fit(docs, y)
        assert sel.attributes_.tokens == select_attributes(corpus, 15).tokens

    def test_accepts_binary_labels(self):
        _, docs, y = self.data()
        y01 = [1 if lab == SPAM else 0 for lab in y]
        sel = MutualInfoSelector(n_attributes=8).fit(docs, y01)
        assert len(sel.attributes_) == 8

    def test_get_feature_names_out(self):
        _, docs, y = self.data()
        sel = MutualInfoSelector(n_attributes=5).fit(docs, y)
        assert list(sel.get_feature_names_out()) == list(sel.attributes_.tokens)

    def test_sklearn_clone_and_params(self):
        sel = MutualInfoSelector(n_attributes=7, min_df=2)
        assert sel.get_params() == {"n_attributes": 7, "min_df": 2}
        cloned = clone(sel)
        assert cloned.get_params() == sel.get_params()

    def test_single_class_rejected(self):
        _, docs, _ = self.data()
        with pytest.raises(ValueError):
            MutualInfoSelector().fit(docs, [SPAM] * len(docs))

    def test_unfitted_transform_raises(self):
        from sklearn.exceptions import NotFittedError
        with pytest.raises(NotFittedError):
            MutualInfoSelector().transform([("a",)])
