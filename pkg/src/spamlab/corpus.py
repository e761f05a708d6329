"""Email corpus handling: tokenization, preprocessing, anonymization, disk formats.

A corpus on disk is one text file per message under ``spam/`` and ``legit/``
subdirectories. Each file starts with a ``Subject:`` line carrying the subject
tokens, then a blank line, then the body tokens separated by whitespace
(wrapped over any number of lines). Token "encryption" replaces every distinct
token with a small integer, the same integer everywhere, so a private mailbox
can be shared as a benchmark without exposing its text.
"""

import hashlib
import re
from dataclasses import dataclass, field, replace
from datetime import datetime
from email.utils import parsedate_to_datetime
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .errors import DataError

SPAM = "spam"
LEGIT = "legit"
LABELS = (SPAM, LEGIT)

# Word tokens are maximal letter runs, number tokens maximal digit runs, and
# every other non-whitespace character stands alone.
_TOKEN_RE = re.compile(r"[^\W\d_]+|\d+|[^\w\s]|_")


def tokenize(text: str, case_fold: bool = True) -> list[str]:
    """Split text into word, number, and punctuation tokens.

    Whitespace only separates and never appears inside a token. Empty input
    gives an empty list.
    """
    if case_fold:
        text = text.lower()
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class RawMessage:
    """An unprocessed message with its header metadata still attached."""

    id: str
    sender: str
    date: datetime | None
    subject: str
    body: str
    label: str | None = None
    headers: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Message:
    """A tokenized message; tokens may be words or numeric codes."""

    id: str
    subject_tokens: tuple[str, ...]
    body_tokens: tuple[str, ...]
    label: str | None = None

    def __post_init__(self):
        if self.label is not None and self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    @property
    def tokens(self) -> tuple[str, ...]:
        """Subject and body tokens pooled into one sequence."""
        return self.subject_tokens + self.body_tokens


@dataclass(frozen=True)
class PreprocessConfig:
    """Which optional preprocessing steps to run on tokenized messages."""

    lemmatize: bool = False
    stoplist: bool = False
    stoplist_words: frozenset[str] = frozenset()
    case_fold: bool = True

    def __post_init__(self):
        if self.stoplist and not self.stoplist_words:
            raise ValueError("stoplist enabled but stoplist_words is empty")

    @property
    def variant(self) -> str:
        """Short tag for this lemmatizer/stop-list combination."""
        return {
            (False, False): "bare",
            (False, True): "stop",
            (True, False): "lemm",
            (True, True): "lemm_stop",
        }[(self.lemmatize, self.stoplist)]

    def config_hash(self) -> str:
        """Stable digest used to detect train/classify preprocessing mismatches."""
        words = hashlib.sha256(
            "\n".join(sorted(self.stoplist_words)).encode("utf-8")
        ).hexdigest()
        blob = (
            f"lemmatize={self.lemmatize};stoplist={self.stoplist};"
            f"case_fold={self.case_fold};words={words}"
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


@dataclass
class TokenMap:
    """Bijection between token strings and the integer codes that replace them.

    Codes are dense, starting at 1, minted in first-occurrence order.
    """

    forward: dict[str, int] = field(default_factory=dict)
    next_code: int = 1

    def code(self, token: str) -> int:
        """Return the code for a token, minting a new one on first sight."""
        existing = self.forward.get(token)
        if existing is not None:
            return existing
        minted = self.next_code
        self.forward[token] = minted
        self.next_code = minted + 1
        return minted

    def copy(self) -> "TokenMap":
        return TokenMap(dict(self.forward), self.next_code)

    def __len__(self) -> int:
        return len(self.forward)


@dataclass(frozen=True)
class Corpus:
    """An immutable collection of tokenized messages."""

    messages: tuple[Message, ...]

    @cached_property
    def n_spam(self) -> int:
        return sum(1 for m in self.messages if m.label == SPAM)

    @cached_property
    def n_legit(self) -> int:
        return sum(1 for m in self.messages if m.label == LEGIT)

    def __len__(self) -> int:
        return len(self.messages)

    def ids(self) -> list[str]:
        return [m.id for m in self.messages]


def preprocess(msg: Message, cfg: PreprocessConfig,
               lemmatizer: Callable[[str], str] | None = None) -> Message:
    """Apply the configured lemmatizer and stop-list to one message.

    Lemmatization runs first, only on alphabetic tokens; the stop-list then
    drops matching tokens. With both toggles off the message is returned
    unchanged.
    """
    if not cfg.lemmatize and not cfg.stoplist:
        return msg
    if lemmatizer is None:
        from .lemmatizer import default_lemmatizer
        lemmatizer = default_lemmatizer

    def run(tokens: tuple[str, ...]) -> tuple[str, ...]:
        if cfg.lemmatize:
            tokens = tuple(lemmatizer(t) if t.isalpha() else t for t in tokens)
        if cfg.stoplist:
            tokens = tuple(t for t in tokens if t not in cfg.stoplist_words)
        return tokens

    return replace(msg, subject_tokens=run(msg.subject_tokens),
                   body_tokens=run(msg.body_tokens))


def preprocess_corpus(corpus: Corpus, cfg: PreprocessConfig,
                      lemmatizer: Callable[[str], str] | None = None) -> Corpus:
    if not cfg.lemmatize and not cfg.stoplist:
        return corpus
    return Corpus(tuple(preprocess(m, cfg, lemmatizer) for m in corpus.messages))


def encrypt_corpus(corpus: Corpus,
                   token_map: TokenMap | None = None) -> tuple[Corpus, TokenMap]:
    """Replace every token with its integer code, minting codes as needed.

    The returned map extends the one passed in (which is left untouched).
    Labels, message order, sequence lengths, and repetition patterns are all
    preserved.
    """
    mapping = TokenMap() if token_map is None else token_map.copy()
    encrypted = []
    for msg in corpus.messages:
        subject = tuple(str(mapping.code(t)) for t in msg.subject_tokens)
        body = tuple(str(mapping.code(t)) for t in msg.body_tokens)
        encrypted.append(replace(msg, subject_tokens=subject, body_tokens=body))
    return Corpus(tuple(encrypted)), mapping


def emulate_address_book(messages: Sequence[RawMessage],
                         keep: int = 5) -> list[RawMessage]:
    """Keep only each sender's earliest ``keep`` legitimate messages.

    Models senders being added to the recipient's address book after a few
    exchanges, after which their mail bypasses the filter. Spam messages pass
    through unchanged. Legitimate messages must carry a date.
    """
    if keep < 1:
        raise ValueError("keep must be at least 1")
    per_sender: dict[str, list[tuple[datetime, int]]] = {}
    for idx, msg in enumerate(messages):
        if msg.label != LEGIT:
            continue
        if msg.date is None:
            raise DataError(f"{msg.id}: legitimate message has no date")
        per_sender.setdefault(msg.sender, []).append((msg.date, idx))
    kept: set[int] = set()
    for entries in per_sender.values():
        entries.sort()
        kept.update(idx for _, idx in entries[:keep])
    return [m for i, m in enumerate(messages)
            if m.label != LEGIT or i in kept]


def dedup_spam(messages: Sequence[RawMessage]) -> list[RawMessage]:
    """Drop spam whose exact body was already seen on the same calendar day."""
    seen: set[tuple] = set()
    out = []
    for msg in messages:
        if msg.label == SPAM:
            day = msg.date.date() if msg.date is not None else None
            key = (day, hashlib.sha256(msg.body.encode("utf-8")).hexdigest())
            if key in seen:
                continue
            seen.add(key)
        out.append(msg)
    return out


def parse_raw_message(text: str, msg_id: str, label: str | None = None) -> RawMessage:
    """Parse a minimal RFC-822-style message: headers, blank line, body."""
    text = text.replace("\r\n", "\n")
    head, sep, body = text.partition("\n\n")
    if not sep:
        head, body = text.rstrip("\n"), ""
    headers: dict[str, str] = {}
    last: str | None = None
    for lineno, line in enumerate(head.splitlines(), 1):
        if not line.strip():
            continue
        if line[:1] in (" ", "\t") and last is not None:
            headers[last] += " " + line.strip()
            continue
        name, colon, value = line.partition(":")
        if not colon or not name.strip():
            raise DataError(f"{msg_id}: malformed header on line {lineno}: {line!r}")
        last = name.strip().lower()
        headers[last] = value.strip()
    date = None
    if "date" in headers:
        try:
            date = parsedate_to_datetime(headers["date"])
        except (TypeError, ValueError):
            date = None
    return RawMessage(id=msg_id, sender=headers.get("from", ""), date=date,
                      subject=headers.get("subject", ""), body=body,
                      label=label, headers=headers)


def raw_to_message(raw: RawMessage, case_fold: bool = True) -> Message:
    """Tokenize a raw message's subject and body."""
    return Message(id=raw.id,
                   subject_tokens=tuple(tokenize(raw.subject, case_fold)),
                   body_tokens=tuple(tokenize(raw.body, case_fold)),
                   label=raw.label)


def _label_dirs(root: Path) -> list[Path]:
    if not root.is_dir():
        raise DataError(f"not a corpus directory: {root}")
    subdirs = sorted(p for p in root.iterdir() if p.is_dir())
    for sub in subdirs:
        if sub.name not in LABELS:
            raise DataError(f"unknown label directory: {sub}")
    return subdirs


def load_raw_dir(path) -> list[RawMessage]:
    """Read raw RFC-822-style messages from ``<path>/spam`` and ``<path>/legit``."""
    root = Path(path)
    messages = []
    for sub in _label_dirs(root):
        for f in sorted(p for p in sub.iterdir() if p.is_file()):
            try:
                text = f.read_text(encoding="utf-8")
            except UnicodeDecodeError as exc:
                raise DataError(f"{f}: not valid UTF-8 ({exc})") from exc
            messages.append(parse_raw_message(text, f"{sub.name}/{f.stem}",
                                              label=sub.name))
    return messages


def _parse_corpus_file(path: Path, label: str) -> Message:
    msg = load_message_file(path)
    return replace(msg, id=f"{label}/{path.stem}", label=label)


def load_corpus(path) -> Corpus:
    """Load a tokenized corpus from its directory layout."""
    root = Path(path)
    messages = []
    for sub in _label_dirs(root):
        for f in sorted(sub.glob("*.txt")):
            messages.append(_parse_corpus_file(f, sub.name))
    return Corpus(tuple(messages))


def load_message_file(path) -> Message:
    """Load a single message file in the corpus format, without a label."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("Subject:"):
        raise DataError(f"{path}: first line must start with 'Subject:'")
    subject = tuple(lines[0][len("Subject:"):].split())
    if len(lines) > 1 and lines[1].strip():
        raise DataError(f"{path}: expected a blank line after the subject")
    body = tuple(tok for line in lines[2:] for tok in line.split())
    return Message(id=path.stem, subject_tokens=subject, body_tokens=body)


def _wrap_tokens(tokens: Iterable[str], width: int = 76) -> list[str]:
    lines: list[str] = []
    current = ""
    for tok in tokens:
        if current and len(current) + 1 + len(tok) > width:
            lines.append(current)
            current = tok
        else:
            current = tok if not current else current + " " + tok
    if current:
        lines.append(current)
    return lines


def save_corpus(corpus: Corpus, path) -> None:
    """Write a corpus in the directory layout that ``load_corpus`` reads.

    Saving and reloading yields an equal corpus provided message ids follow
    the canonical ``<label>/<stem>`` form that loaders produce.
    """
    root = Path(path)
    for label in LABELS:
        (root / label).mkdir(parents=True, exist_ok=True)
    used: set[str] = set()
    for i, msg in enumerate(corpus.messages):
        if msg.label not in LABELS:
            raise DataError(f"cannot save unlabeled message: {msg.id}")
        stem = msg.id.removeprefix(msg.label + "/") or f"msg{i:05d}"
        stem = re.sub(r"[^A-Za-z0-9._-]", "_", stem)
        key = f"{msg.label}/{stem}"
        if key in used:
            raise DataError(f"duplicate message file name: {key}")
        used.add(key)
        parts = ["Subject: " + " ".join(msg.subject_tokens) if msg.subject_tokens
                 else "Subject:", ""]
        parts.extend(_wrap_tokens(msg.body_tokens))
        (root / msg.label / f"{stem}.txt").write_text("\n".join(parts) + "\n",
                                                      encoding="utf-8")


def save_token_map(mapping: TokenMap, path) -> None:
    """Persist a token map as ``<code> <token>`` lines sorted by code."""
    rows = sorted((code, tok) for tok, code in mapping.forward.items())
    text = "".join(f"{code} {tok}\n" for code, tok in rows)
    Path(path).write_text(text, encoding="utf-8")


def load_token_map(path) -> TokenMap:
    forward: dict[str, int] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(" ", 1)
        if len(parts) != 2 or not parts[0].isdigit():
            raise DataError(f"{path}:{lineno}: expected '<code> <token>'")
        code, token = int(parts[0]), parts[1]
        if token in forward:
            raise DataError(f"{path}:{lineno}: duplicate token {token!r}")
        forward[token] = code
    next_code = max(forward.values(), default=0) + 1
    return TokenMap(forward, next_code)
