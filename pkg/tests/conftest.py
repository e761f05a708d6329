"""Shared synthetic-corpus builders and the acceptance summary hook."""

import random
from dataclasses import replace
from datetime import datetime, timedelta

from spamlab import Corpus, LEGIT, Message, RawMessage, SPAM


def synthetic_corpus(n_spam, n_legit, *, seed, spam_vocab=30, legit_vocab=30,
                     shared_vocab=0, tokens_per_msg=10, signal_rate=1.0,
                     confusable_legit=0, noise_tokens=0, noise_df=3):
    """Seeded corpus with class-specific vocabularies.

    Each token comes from the message's own-class pool with probability
    ``signal_rate``, otherwise from the shared pool, so lower rates give
    weaker class margins. ``confusable_legit`` legitimate messages draw from
    the spam pool (hard cases that any content-based filter blocks), and
    ``noise_tokens`` uninformative tokens are each sprinkled over
    ``noise_df`` random messages.
    """
    rng = random.Random(seed)
    spam_pool = [f"sw{i:02d}" for i in range(spam_vocab)]
    legit_pool = [f"lw{i:02d}" for i in range(legit_vocab)]
    shared_pool = [f"cw{i:02d}" for i in range(shared_vocab)]

    def make(label, idx, own_pool):
        toks = []
        for _ in range(tokens_per_msg):
            if not shared_pool or rng.random() < signal_rate:
                toks.append(rng.choice(own_pool))
            else:
                toks.append(rng.choice(shared_pool))
        return Message(f"{label}/{idx:04d}", tuple(toks[:2]), tuple(toks[2:]),
                       label)

    messages = [make(SPAM, i, spam_pool) for i in range(n_spam)]
    for i in range(n_legit):
        pool = spam_pool if i < confusable_legit else legit_pool
        messages.append(make(LEGIT, i, pool))
    if noise_tokens:
        for j in range(noise_tokens):
            tok = f"nz{j:04d}"
            for h in rng.sample(range(len(messages)), k=min(noise_df, len(messages))):
                m = messages[h]
                messages[h] = replace(m, body_tokens=m.body_tokens + (tok,))
    return Corpus(tuple(messages))


def corpus_to_raw(corpus, *, start=datetime(2001, 3, 1)):
    """Raw-message mirror of a tokenized corpus (same ids, joined tokens)."""
    raws = []
    for i, m in enumerate(corpus.messages):
        subject = " ".join(m.subject_tokens)
        body = " ".join(m.body_tokens)
        raws.append(RawMessage(
            id=m.id, sender=f"sender{i}@example.org",
            date=start + timedelta(hours=i), subject=subject, body=body,
            label=m.label,
            headers={"from": f"sender{i}@example.org", "subject": subject}))
    return raws


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _ACCEPTANCE[report.nodeid] = report.outcome
    elif report.when == "setup" and report.skipped \
            and "test_acceptance" in report.nodeid:
        _ACCEPTANCE[report.nodeid] = "skipped"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE):
        outcome = _ACCEPTANCE[nodeid]
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{outcome.upper():7s} {name}")
