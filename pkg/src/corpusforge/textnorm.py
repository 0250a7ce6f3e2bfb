"""Forward text normalization onto the acoustic-model character inventory.

Raw transcripts (digits, currency, ordinals, domain terms like "401k") are
rewritten into lowercase alphabetic words so every downstream consumer works
on one shared alphabet: a-z, space, and optionally the apostrophe.

Rule application order is fixed: lowercase, special terms, abbreviations,
currency, percent, ordinals, years, cardinals/digit strings, hyphen-to-space,
residual character cleanup, whitespace collapse.  Normalization is total; an
input it cannot expand is dropped with a warning record instead of raising.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Union

# The spoken-domain alphabet. NormalizedText is a plain str whose characters
# are confined to this inventory (apostrophe only when keep_apostrophe).
NormalizedText = str

WarningSink = Optional[Callable[[dict], None]]

_ONES = (
    "zero one two three four five six seven eight nine ten eleven twelve "
    "thirteen fourteen fifteen sixteen seventeen eighteen nineteen"
).split()
_TENS = [None, None, "twenty", "thirty", "forty", "fifty", "sixty", "seventy",
         "eighty", "ninety"]
_ORDINAL_SPECIAL = {
    "one": "first", "two": "second", "three": "third", "five": "fifth",
    "eight": "eighth", "nine": "ninth", "twelve": "twelfth",
}

_INVENTORY_RE = re.compile(r"[a-z' ]+")

# Terms whose written form carries digits or symbols; spoken forms must be
# unique so inverse normalization can restore the written form exactly.
DEFAULT_SPECIAL_TERMS = {
    "401k": "four o one k",
    "403b": "four o three b",
    "457b": "four five seven b",
    "529": "five twenty nine",
    "1099": "ten ninety nine",
    "w2": "w two",
    "w4": "w four",
    "i9": "i nine",
    "ad&d": "a d n d",
    "covid-19": "covid nineteen",
}

# Seed abbreviation set; extensible via the rules file. Ambiguous entries
# carry street and title readings plus the default used when no address
# signal is found nearby.
DEFAULT_ABBREVIATIONS: dict = {
    "dr": {"street": "drive", "title": "doctor", "default": "title"},
    "st": {"street": "street", "title": "saint", "default": "street"},
    "ave": "avenue",
    "blvd": "boulevard",
    "rd": "road",
    "apt": "apartment",
    "ste": "suite",
    "mr": "mister",
    "mrs": "missus",
}

_STREET_FOLLOWERS = {"apt", "apartment", "suite", "ste", "unit", "fl", "floor"}

_APOSTROPHE_VARIANTS = dict.fromkeys(map(ord, "‘’ʼ´`"), "'")

# Abbreviation-stage tokens: letter runs, digit runs, separator runs. Letter
# and digit runs are kept apart so "dr2" tokenizes the same way it will read
# after digit expansion inserts spaces — otherwise a second normalization
# pass would see tokens the first one never did.
_ABBREV_TOKEN_RE = re.compile(r"[a-z']+|[0-9]+|[^a-z0-9']+")


class RuleError(ValueError):
    """A rules table violates its invariants."""


def _check_inventory(owner: str, expansion) -> None:
    if not isinstance(expansion, str) or not _INVENTORY_RE.fullmatch(expansion):
        raise RuleError(
            f"{owner} expands to {expansion!r}, which leaves the character "
            "inventory")


@dataclass(frozen=True)
class NormRules:
    special_terms: Mapping[str, str] = field(
        default_factory=lambda: dict(DEFAULT_SPECIAL_TERMS))
    abbreviations: Mapping[str, Union[str, Mapping[str, str]]] = field(
        default_factory=lambda: dict(DEFAULT_ABBREVIATIONS))
    year_range: tuple = (1930, 2030)
    keep_apostrophe: bool = True

    def __post_init__(self):
        lo, hi = self.year_range
        if not lo < hi:
            raise RuleError(f"year_range low must be < high, got {self.year_range}")
        for raw, spoken in self.special_terms.items():
            _check_inventory(f"special term {raw!r}", spoken)
        for name, entry in self.abbreviations.items():
            if isinstance(entry, str):
                expansions = [entry]
            else:
                missing = {"street", "title"} - set(entry)
                if missing:
                    raise RuleError(
                        f"abbreviation {name!r} lacks {sorted(missing)} readings")
                if entry.get("default", "title") not in ("street", "title"):
                    raise RuleError(f"abbreviation {name!r} has a bad default")
                expansions = [entry["street"], entry["title"]]
            for expansion in expansions:
                _check_inventory(f"abbreviation {name!r}", expansion)
                # an expansion that is itself an abbreviation would make
                # normalization non-idempotent
                for word in expansion.split():
                    if word in self.abbreviations:
                        raise RuleError(
                            f"abbreviation {name!r} expands to the "
                            f"abbreviation {word!r}")

    @classmethod
    def from_json(cls, path) -> "NormRules":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        kwargs = {}
        if "special_terms" in data:
            kwargs["special_terms"] = dict(data["special_terms"])
        if "abbreviations" in data:
            kwargs["abbreviations"] = dict(data["abbreviations"])
        if "year_range" in data:
            kwargs["year_range"] = tuple(data["year_range"])
        if "keep_apostrophe" in data:
            kwargs["keep_apostrophe"] = bool(data["keep_apostrophe"])
        return cls(**kwargs)


DEFAULT_RULES = NormRules()


def is_normalized(text: str, keep_apostrophe: bool = True) -> bool:
    alphabet = r"[a-z' ]" if keep_apostrophe else r"[a-z ]"
    if not re.fullmatch(f"{alphabet}*", text):
        return False
    return text == " ".join(text.split())


# ---------------------------------------------------------------------------
# Number expansion primitives


def expand_cardinal(n: int) -> str:
    """American English cardinal words for 0..999999, no 'and'."""
    if not 0 <= n <= 999_999:
        raise ValueError(f"cardinal out of range: {n}")
    if n == 0:
        return "zero"
    words = []
    thousands, rest = divmod(n, 1000)
    if thousands:
        words += _under_1000(thousands) + ["thousand"]
    if rest:
        words += _under_1000(rest)
    return " ".join(words)


def _under_1000(n: int) -> list:
    words = []
    hundreds, rest = divmod(n, 100)
    if hundreds:
        words += [_ONES[hundreds], "hundred"]
    if rest:
        if rest < 20:
            words.append(_ONES[rest])
        else:
            tens, units = divmod(rest, 10)
            words.append(_TENS[tens])
            if units:
                words.append(_ONES[units])
    return words


def expand_digits(s: str) -> str:
    """Digit-by-digit reading for street/phone/SSN style numbers."""
    if not s or not (s.isascii() and s.isdigit()):
        raise ValueError(f"not a digit string: {s!r}")
    return " ".join(_ONES[int(c)] for c in s)


def expand_year(n: int) -> str:
    """Conventional year reading: 1995 -> nineteen ninety five,
    2022 -> two thousand twenty two."""
    if not 1000 <= n <= 2999:
        raise ValueError(f"year out of range: {n}")
    century, rest = divmod(n, 100)
    if century == 20:
        if rest == 0:
            return "two thousand"
        return "two thousand " + expand_cardinal(rest)
    if rest == 0:
        return expand_cardinal(century) + " hundred"
    if rest < 10:
        return expand_cardinal(century) + " oh " + _ONES[rest]
    return expand_cardinal(century) + " " + expand_cardinal(rest)


def expand_currency(amount: int, cents: int = 0) -> str:
    """Dollar amounts: singular at one, cents appended when nonzero."""
    if amount < 0:
        raise ValueError("negative amount")
    if not 0 <= cents <= 99:
        raise ValueError(f"cents out of range: {cents}")
    out = expand_cardinal(amount) + (" dollar" if amount == 1 else " dollars")
    if cents:
        out += " " + expand_cardinal(cents) + (" cent" if cents == 1 else " cents")
    return out


def expand_ordinal(n: int) -> str:
    """Ordinal words for 1..999 ('twenty first', 'one hundred third')."""
    if not 1 <= n <= 999:
        raise ValueError(f"ordinal out of range: {n}")
    words = expand_cardinal(n).split()
    last = words[-1]
    if last in _ORDINAL_SPECIAL:
        words[-1] = _ORDINAL_SPECIAL[last]
    elif last.endswith("y"):
        words[-1] = last[:-1] + "ieth"
    else:
        words[-1] = last + "th"
    return " ".join(words)


def _expected_ordinal_suffix(n: int) -> str:
    if n % 100 in (11, 12, 13):
        return "th"
    return {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")


# ---------------------------------------------------------------------------
# The normalization pipeline


def normalize(raw: str, rules: NormRules = DEFAULT_RULES,
              on_warning: WarningSink = None) -> NormalizedText:
    """Map raw text onto the spoken-domain alphabet.

    Total over any input string; tokens that cannot be expanded are dropped
    and reported through ``on_warning`` as dict records.
    """
    warn = on_warning or (lambda record: None)
    text = raw.translate(_APOSTROPHE_VARIANTS).lower()
    text = _fold_glyphs(text, warn)
    text = _apply_special_terms(text, rules)
    text = _apply_abbreviations(text, rules, warn)
    text = _apply_currency(text, warn)
    text = _apply_percent(text, warn)
    text = _apply_ordinals(text, warn)
    text = _apply_years(text, rules)
    text = _apply_numbers(text)
    text = text.replace("-", " ")
    text = _strip_residual(text, rules, warn)
    return " ".join(text.split())


def _term_pattern(term: str):
    return re.compile(r"(?<![a-z0-9])" + re.escape(term) + r"(?![a-z0-9])")


def _apply_special_terms(text: str, rules: NormRules) -> str:
    for raw, spoken in rules.special_terms.items():
        if raw in text:
            text = _term_pattern(raw).sub(spoken, text)
    return text


_ORDINAL_SUFFIXES = {"st", "nd", "rd", "th"}


def _apply_abbreviations(text: str, rules: NormRules, warn) -> str:
    parts = _ABBREV_TOKEN_RE.findall(text)
    digit_run = [("0" <= p[0] <= "9") for p in parts]
    tokens = []  # (index into parts, core) for letter and digit runs
    for i, part in enumerate(parts):
        first = part[0]
        if "a" <= first <= "z" or first == "'":
            tokens.append((i, part.strip("'")))
        elif digit_run[i]:
            tokens.append((i, part))
    for t, (pi, core) in enumerate(tokens):
        entry = rules.abbreviations.get(core) if core else None
        if entry is None:
            continue
        if (parts[pi] in _ORDINAL_SUFFIXES and pi > 0 and digit_run[pi - 1]
                and not (pi + 1 < len(parts) and digit_run[pi + 1])):
            # glued ordinal suffix ("21st"): the ordinal stage consumes it
            continue
        if isinstance(entry, str):
            parts[pi] = entry
            continue
        preceding = [tokens[u][1] for u in range(max(0, t - 3), t)]
        following = tokens[t + 1][1] if t + 1 < len(tokens) else ""
        parts[pi] = _resolve_ambiguous(entry, core, preceding, following, warn)
    return "".join(parts)


def _resolve_ambiguous(entry, core, preceding, following, warn) -> str:
    # Address signal: house number within the 3 preceding tokens, or a
    # street-context word / ZIP right after.
    is_street = (
        any(c.isascii() and c.isdigit() for c in preceding)
        or following in _STREET_FOLLOWERS
        or bool(re.fullmatch(r"[0-9]{5}", following))
    )
    if is_street:
        return entry["street"]
    chosen = entry[entry.get("default", "title")]
    warn({"event": "ambiguous_abbreviation", "token": core, "chosen": chosen})
    return chosen


def _cardinal_or_digits(s: str) -> str:
    # 1-3 digit numbers read as cardinals; longer ones (and anything with a
    # leading zero) digit by digit.
    if len(s) <= 3 and not (len(s) > 1 and s[0] == "0"):
        return expand_cardinal(int(s))
    return expand_digits(s)


def _pad(words: str) -> str:
    # keep expansions from gluing onto neighbouring letters; the final
    # whitespace collapse removes the slack
    return f" {words} "


def _apply_currency(text: str, warn) -> str:
    def repl(m):
        dollars_s, cents_s = m.group(1), m.group(2)
        cents = int(cents_s.ljust(2, "0")[:2]) if cents_s else 0
        dollars = int(dollars_s)
        if dollars > 999_999:
            warn({"event": "currency_overflow", "token": m.group(0)})
            out = expand_digits(dollars_s) + " dollars"
            if cents:
                out += " " + expand_cardinal(cents) + (
                    " cent" if cents == 1 else " cents")
            return _pad(out)
        return _pad(expand_currency(dollars, cents))

    return re.sub(r"\$([0-9]+)(?:\.([0-9]+))?", repl, text)


def _apply_percent(text: str, warn) -> str:
    def repl(m):
        s = m.group(1)
        if int(s) > 999_999:
            warn({"event": "percent_overflow", "token": m.group(0)})
            return _pad(expand_digits(s) + " percent")
        return _pad(_cardinal_or_digits(s) + " percent")

    return re.sub(r"([0-9]+)\s*%", repl, text)


def _apply_ordinals(text: str, warn) -> str:
    def repl(m):
        n = int(m.group(1))
        suffix = m.group(2)
        if not 1 <= n <= 999:
            warn({"event": "ordinal_out_of_range", "token": m.group(0)})
            if n <= 999_999:
                return _pad(expand_cardinal(n))
            return _pad(expand_digits(m.group(1)))
        if suffix != _expected_ordinal_suffix(n):
            warn({"event": "ordinal_suffix_mismatch", "token": m.group(0)})
        return _pad(expand_ordinal(n))

    return re.sub(r"(?<![0-9])([0-9]+)(st|nd|rd|th)(?![a-z0-9])", repl, text)


def _apply_years(text: str, rules: NormRules) -> str:
    lo, hi = rules.year_range

    def repl(m):
        n = int(m.group(0))
        if lo <= n <= hi and 1000 <= n <= 2999:
            return _pad(expand_year(n))
        return m.group(0)

    return re.sub(r"(?<![0-9])[0-9]{4}(?![0-9])", repl, text)


def _apply_numbers(text: str) -> str:
    return re.sub(r"[0-9]+", lambda m: _pad(_cardinal_or_digits(m.group(0))),
                  text)


def _fold_glyphs(text: str, warn) -> str:
    """Fold compatibility forms onto ASCII before any token rewriting.

    Ligatures and full-width forms must behave exactly like their plain
    spellings, and glyphs with no latin reading must disappear *before*
    tokens are matched — otherwise a second pass would see a different
    token stream than the first (e.g. the st-ligature only becoming "st"
    after the abbreviation stage already ran).
    """
    if text.isascii():
        return text
    out = []
    for raw_ch in text:
        if raw_ch.isascii():
            out.append(raw_ch)
            continue
        for ch in unicodedata.normalize("NFKD", raw_ch).lower():
            if ch.isascii():
                out.append(ch)
            elif unicodedata.combining(ch):
                pass  # accent marks split off by NFKD
            else:
                cat = unicodedata.category(ch)
                if cat != "So" and cat[0] in "PSZC":
                    out.append(" ")
                else:
                    # emoji, digits and letters with no latin reading
                    warn({"event": "dropped_glyph", "token": ch})
    return "".join(out)


def _strip_residual(text: str, rules: NormRules, warn) -> str:
    """Reduce to the inventory: NFKD-decompose, keep a-z / space / apostrophe,
    turn punctuation into spaces, drop the rest (warning for real glyphs)."""
    out = []
    for decomposed in unicodedata.normalize("NFKD", text):
        for ch in decomposed.lower():
            if "a" <= ch <= "z" or ch == " ":
                out.append(ch)
            elif ch == "'":
                if rules.keep_apostrophe:
                    out.append(ch)
            elif unicodedata.combining(ch):
                pass  # accent marks split off by NFKD
            else:
                cat = unicodedata.category(ch)
                if cat == "So":
                    # emoji, dingbats: real glyphs with no reading
                    warn({"event": "dropped_glyph", "token": ch})
                elif cat[0] in "PSZC":
                    out.append(" ")
                else:
                    # letters outside a-z, stray digit forms, anything else
                    warn({"event": "dropped_glyph", "token": ch})
    s = "".join(out)
    if rules.keep_apostrophe:
        # apostrophes survive only inside words (contractions)
        s = re.sub(r"'+", "'", s)
        s = re.sub(r"(?!(?<=[a-z])'(?=[a-z]))'", "", s)
    return s


def warning_writer(stream) -> Callable[[dict], None]:
    """Warning sink that emits one JSON object per line on ``stream``."""

    def write(record: dict) -> None:
        stream.write(json.dumps(record, ensure_ascii=False) + "\n")
        stream.flush()

    return write


def normalize_lines(lines: Iterable[str], rules: NormRules = DEFAULT_RULES,
                    on_warning: WarningSink = None):
    for line in lines:
        yield normalize(line, rules, on_warning)
