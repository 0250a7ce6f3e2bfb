"""Edit distance, WER and CER.

Two exact implementations live here on purpose:

* ``levenshtein`` is the corpus-scale fast path (Myers' bit-parallel
  algorithm, distance only).  Python integers are unbounded, so the bit
  vectors work for any sequence length; cost per hypothesis element is a
  handful of big-int operations.
* ``edit_distance`` is the full dynamic program with a backtrace, used when
  the substitution/insertion/deletion breakdown is needed.

Both must agree exactly; the test suite cross-checks them against each other
and against a brute-force recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, NamedTuple, Sequence, Tuple


class EmptyReferenceError(ValueError):
    """Reference side is empty, so the error rate denominator is undefined."""


@dataclass(frozen=True)
class ErrorBreakdown:
    """Counts from one optimal alignment, plus the reference length."""

    substitutions: int
    insertions: int
    deletions: int
    ref_len: int

    @property
    def distance(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def rate(self) -> float:
        if self.ref_len == 0:
            return 0.0 if self.distance == 0 else math.inf
        return self.distance / self.ref_len


def levenshtein(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Exact Levenshtein distance between two sequences (unit costs).

    Myers' bit-parallel algorithm: O(len(b)) iterations of O(len(a)/64)
    word operations.  Works on any hashable elements (characters or word
    tokens alike).
    """
    m, n = len(a), len(b)
    if m == 0:
        return n
    if n == 0:
        return m
    if m > n:
        a, b, m, n = b, a, n, m

    peq: dict[Hashable, int] = {}
    for i, c in enumerate(a):
        peq[c] = peq.get(c, 0) | (1 << i)

    full = (1 << m) - 1
    hibit = 1 << (m - 1)
    vp = full
    vn = 0
    score = m
    get = peq.get
    for c in b:
        x = get(c, 0) | vn
        d0 = (((vp + (x & vp)) ^ vp) | x) & full
        hp = (vn | ~(d0 | vp)) & full
        hn = vp & d0
        if hp & hibit:
            score += 1
        elif hn & hibit:
            score -= 1
        x = ((hp << 1) | 1) & full
        shifted_hn = (hn << 1) & full
        vn = x & d0
        vp = (shifted_hn | ~(x | d0)) & full
    return score


def edit_distance(
    a: Sequence[Hashable], b: Sequence[Hashable]
) -> Tuple[int, ErrorBreakdown]:
    """Minimal S+I+D between ``a`` (reference) and ``b`` (hypothesis).

    The breakdown comes from one optimal alignment with a deterministic
    tie-break: substitution over insertion over deletion.
    """
    m, n = len(a), len(b)
    # D[i][j]: distance between a[:i] and b[:j]
    dist = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(1, m + 1):
        dist[i][0] = i
    dist[0] = list(range(n + 1))
    for i in range(1, m + 1):
        row = dist[i]
        prev = dist[i - 1]
        ai = a[i - 1]
        for j in range(1, n + 1):
            cost = 0 if ai == b[j - 1] else 1
            row[j] = min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + cost)

    subs = ins = dels = 0
    i, j = m, n
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0:
            cost = 0 if a[i - 1] == b[j - 1] else 1
            if dist[i - 1][j - 1] + cost == here:
                subs += cost
                i -= 1
                j -= 1
                continue
        if j > 0 and dist[i][j - 1] + 1 == here:
            ins += 1
            j -= 1
            continue
        dels += 1
        i -= 1

    breakdown = ErrorBreakdown(subs, ins, dels, ref_len=m)
    return dist[m][n], breakdown


def wer(ref: str, hyp: str) -> float:
    """Word error rate over whitespace tokens; may exceed 1.0."""
    ref_tokens = ref.split()
    if not ref_tokens:
        raise EmptyReferenceError("reference has no words")
    return levenshtein(ref_tokens, hyp.split()) / len(ref_tokens)


def cer(ref: str, hyp: str) -> float:
    """Character error rate; whitespace runs collapse to single spaces."""
    ref_chars = " ".join(ref.split())
    if not ref_chars:
        raise EmptyReferenceError("reference has no characters")
    hyp_chars = " ".join(hyp.split())
    return levenshtein(ref_chars, hyp_chars) / len(ref_chars)


class CorpusRates(NamedTuple):
    wer: float
    cer: float


def corpus_rates(pairs: Sequence[Tuple[str, str]]) -> CorpusRates:
    """Pooled corpus rates: total edit distance over total reference length,
    words and characters separately."""
    word_errs = word_total = char_errs = char_total = 0
    for idx, (ref, hyp) in enumerate(pairs):
        ref_tokens = ref.split()
        if not ref_tokens:
            raise EmptyReferenceError(f"empty reference at index {idx}")
        hyp_tokens = hyp.split()
        word_errs += levenshtein(ref_tokens, hyp_tokens)
        word_total += len(ref_tokens)
        ref_chars = " ".join(ref_tokens)
        hyp_chars = " ".join(hyp_tokens)
        char_errs += levenshtein(ref_chars, hyp_chars)
        char_total += len(ref_chars)
    if word_total == 0:
        return CorpusRates(0.0, 0.0)
    return CorpusRates(word_errs / word_total, char_errs / char_total)
