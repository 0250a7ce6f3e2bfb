"""Inverse text normalization for domain terms.

Restores written forms ("w2", "covid-19", "ad&d") from their spoken
renderings in recognizer output.  Scope is deliberately narrow: only the
term dictionary is inverted — general number ITN ("twenty two" -> "22") is
out of scope, as is punctuation or case restoration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

from .textnorm import DEFAULT_RULES, NormRules, RuleError


@dataclass(frozen=True)
class ItnRules:
    """Spoken-phrase -> written-form table, keyed by word tuples.

    Built by inverting NormRules.special_terms; construction fails if two
    written forms share a spoken rendering, since the inverse would be
    ambiguous.
    """

    phrases: Mapping[Tuple[str, ...], str]
    max_phrase_len: int = field(init=False, default=0)

    def __post_init__(self):
        longest = 0
        for words, written in self.phrases.items():
            if not words:
                raise RuleError("empty spoken phrase")
            longest = max(longest, len(words))
        object.__setattr__(self, "max_phrase_len", longest)

    @classmethod
    def from_norm_rules(cls, rules: NormRules = DEFAULT_RULES) -> "ItnRules":
        phrases: Dict[Tuple[str, ...], str] = {}
        for written, spoken in rules.special_terms.items():
            key = tuple(spoken.split())
            if key in phrases:
                raise RuleError(
                    f"spoken form {spoken!r} maps to both "
                    f"{phrases[key]!r} and {written!r}")
            phrases[key] = written.lower()
        return cls(phrases)

    @classmethod
    def from_json(cls, path) -> "ItnRules":
        return cls.from_norm_rules(NormRules.from_json(path))


DEFAULT_ITN_RULES = ItnRules.from_norm_rules(DEFAULT_RULES)


def inverse_normalize(text: str, rules: ItnRules = DEFAULT_ITN_RULES) -> str:
    """Longest-match, left-to-right phrase replacement on word boundaries.

    Words outside any matched phrase pass through untouched.
    """
    words = text.split()
    out = []
    i = 0
    n = len(words)
    while i < n:
        for length in range(min(rules.max_phrase_len, n - i), 0, -1):
            written = rules.phrases.get(tuple(words[i:i + length]))
            if written is not None:
                out.append(written)
                i += length
                break
        else:
            out.append(words[i])
            i += 1
    return " ".join(out)
