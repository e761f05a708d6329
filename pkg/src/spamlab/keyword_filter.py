"""Conjunctive keyword rules: the hand-tuned baseline filter.

A rule is a conjunction of field-contains-substring clauses; a rule set blocks
a message when at least one rule fully matches (disjunction of conjunctions).
Rules run on raw, untokenized messages.
"""

import re
from dataclasses import dataclass
from pathlib import Path

from .corpus import LEGIT, RawMessage, SPAM
from .errors import DataError


@dataclass(frozen=True)
class KeywordClause:
    field: str  # "subject", "body", or "header:<name>"
    substring: str

    def __post_init__(self):
        if not self.substring:
            raise ValueError("clause substring must be non-empty")
        if self.field not in ("subject", "body") and not self.field.startswith("header:"):
            raise ValueError(f"unknown field: {self.field!r}")


@dataclass(frozen=True)
class KeywordRule:
    clauses: tuple[KeywordClause, ...]

    def __post_init__(self):
        if not self.clauses:
            raise ValueError("a rule needs at least one clause")


@dataclass(frozen=True)
class RuleSet:
    rules: tuple[KeywordRule, ...]
    case_sensitive: bool = False


def _field_text(msg: RawMessage, field: str) -> str | None:
    if field == "subject":
        return msg.subject
    if field == "body":
        return msg.body
    return msg.headers.get(field[len("header:"):].lower())


def match(rule: KeywordRule, msg: RawMessage, case_sensitive: bool = False) -> bool:
    """True when every clause's substring occurs in its designated field.

    A clause referencing a header the message does not carry is false.
    """
    for clause in rule.clauses:
        text = _field_text(msg, clause.field)
        if text is None:
            return False
        needle = clause.substring
        if not case_sensitive:
            text = text.lower()
            needle = needle.lower()
        if needle not in text:
            return False
    return True


def classify_keyword(ruleset: RuleSet, msg: RawMessage) -> str:
    """Spam when any rule matches, legitimate otherwise."""
    for rule in ruleset.rules:
        if match(rule, msg, ruleset.case_sensitive):
            return SPAM
    return LEGIT


_CLAUSE_RE = re.compile(
    r'^(subject|body|header:[A-Za-z0-9_-]+)\s+contains\s+"([^"]+)"$')


def parse_rules(text: str, source: str = "<rules>") -> RuleSet:
    """Parse the rule file format.

    One rule per line, clauses joined by `` AND ``, clause syntax
    ``<field> contains "<substring>"``; ``#`` comments and a
    ``case_sensitive: true|false`` header line are allowed.
    """
    rules = []
    case_sensitive = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("case_sensitive:"):
            value = line.split(":", 1)[1].strip().lower()
            if value not in ("true", "false"):
                raise DataError(
                    f"{source}:{lineno}: case_sensitive must be true or false")
            case_sensitive = value == "true"
            continue
        clauses = []
        for part in line.split(" AND "):
            m = _CLAUSE_RE.match(part.strip())
            if m is None:
                raise DataError(f"{source}:{lineno}: bad clause: {part.strip()!r}")
            clauses.append(KeywordClause(m.group(1), m.group(2)))
        rules.append(KeywordRule(tuple(clauses)))
    return RuleSet(tuple(rules), case_sensitive)


def load_rules(path) -> RuleSet:
    path = Path(path)
    return parse_rules(path.read_text(encoding="utf-8"), str(path))
