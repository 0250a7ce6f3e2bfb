"""Committee annotation: cross-scoring recognizer hypotheses per clip.

Every recognizer's transcript is scored against every other's (each in turn
acting as the reference), the per-recognizer average word and character
error rates are min-max normalized across the committee, and their weighted
mean picks the winning transcript for the clip. No ground truth is needed —
agreement with the rest of the committee is the signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .adapters import RecognizerAdapter, RecognizerId
from .metrics import cer, wer
from .textnorm import DEFAULT_RULES, NormRules, normalize

FailureSink = Optional[Callable[[dict], None]]


class CommitteeError(ValueError):
    """The committee or its inputs are unusable as configured."""


class EmptyTranscriptError(CommitteeError):
    """A transcript that must serve as a reference is empty."""

    def __init__(self, clip_id: str, recognizers: Sequence[str]):
        self.clip_id = clip_id
        self.recognizers = list(recognizers)
        super().__init__(
            f"clip {clip_id}: empty transcript from {', '.join(recognizers)}")


@dataclass(frozen=True)
class HypothesisSet:
    clip_id: str
    transcripts: Mapping[RecognizerId, str]
    audio_path: str = ""
    duration_ms: int = 0


@dataclass(frozen=True)
class RelativeErrorReport:
    clip_id: str
    recognizers: Tuple[RecognizerId, ...]
    wer_matrix: Mapping[str, Mapping[str, float]]  # [target][prediction]
    cer_matrix: Mapping[str, Mapping[str, float]]
    avg_wer: Mapping[str, float]
    avg_cer: Mapping[str, float]
    norm_wer: Mapping[str, float]
    norm_cer: Mapping[str, float]
    combined: Mapping[str, float]
    alpha: float
    winner: RecognizerId

    @property
    def winner_er(self) -> float:
        """Combined normalized rate of the winning recognizer."""
        return self.combined[self.winner.name]

    @property
    def winner_avg_wer(self) -> float:
        """Normalized average WER of the winning recognizer."""
        return self.norm_wer[self.winner.name]

    @property
    def winner_avg_cer(self) -> float:
        """Normalized average CER of the winning recognizer."""
        return self.norm_cer[self.winner.name]


@dataclass(frozen=True)
class Utterance:
    clip_id: str
    audio: str
    transcript: str
    winner: RecognizerId
    report: RelativeErrorReport
    duration_ms: int
    char_len: int = field(init=False, default=0)
    word_len: int = field(init=False, default=0)

    def __post_init__(self):
        object.__setattr__(self, "char_len", len(self.transcript))
        object.__setattr__(self, "word_len", len(self.transcript.split()))


def _validate_committee(recognizers: Sequence[RecognizerId]) -> None:
    if len(recognizers) < 2:
        raise CommitteeError("committee needs at least 2 recognizers")
    names = [r.name for r in recognizers]
    if len(set(names)) != len(names):
        raise CommitteeError(f"duplicate recognizer names: {names}")
    priorities = [r.priority for r in recognizers]
    if len(set(priorities)) != len(priorities):
        raise CommitteeError(f"duplicate priorities: {priorities}")


def _minmax(values: Dict[str, float]) -> Dict[str, float]:
    lo, hi = min(values.values()), max(values.values())
    if hi == lo:
        return {k: 0.0 for k in values}
    return {k: (v - lo) / (hi - lo) for k, v in values.items()}


def relative_rates(h: HypothesisSet, alpha: float = 0.5) -> RelativeErrorReport:
    """Pairwise relative WER/CER, normalized averages, and the winner.

    Each recognizer's transcript serves as the reference against every other
    recognizer's as the prediction; row averages divide by J-1. avg_wer and
    avg_cer are min-max normalized separately across the committee (all
    equal collapses to zeros), then combined as
    alpha*norm_wer + (1-alpha)*norm_cer. The winner minimizes the combined
    rate, ties broken by lower priority rank.
    """
    if not 0.0 <= alpha <= 1.0:
        raise CommitteeError(f"alpha must be in [0, 1], got {alpha}")
    # Canonical priority order makes the report independent of the
    # insertion order of the hypothesis mapping, bit for bit.
    recognizers = tuple(sorted(h.transcripts.keys(), key=lambda r: r.priority))
    _validate_committee(recognizers)
    empty = [r.name for r in recognizers if not h.transcripts[r].strip()]
    if empty:
        raise EmptyTranscriptError(h.clip_id, empty)

    texts = {r.name: h.transcripts[r] for r in recognizers}
    names = [r.name for r in recognizers]
    wer_m: Dict[str, Dict[str, float]] = {j: {} for j in names}
    cer_m: Dict[str, Dict[str, float]] = {j: {} for j in names}
    for j in names:
        for k in names:
            if j == k:
                continue
            wer_m[j][k] = wer(texts[j], texts[k])
            cer_m[j][k] = cer(texts[j], texts[k])
    denom = len(names) - 1
    avg_wer = {j: sum(wer_m[j].values()) / denom for j in names}
    avg_cer = {j: sum(cer_m[j].values()) / denom for j in names}
    norm_wer = _minmax(avg_wer)
    norm_cer = _minmax(avg_cer)
    combined = {j: alpha * norm_wer[j] + (1.0 - alpha) * norm_cer[j]
                for j in names}
    by_name = {r.name: r for r in recognizers}
    winner = by_name[min(names, key=lambda j: (combined[j], by_name[j].priority))]
    return RelativeErrorReport(
        clip_id=h.clip_id, recognizers=recognizers,
        wer_matrix=wer_m, cer_matrix=cer_m,
        avg_wer=avg_wer, avg_cer=avg_cer,
        norm_wer=norm_wer, norm_cer=norm_cer,
        combined=combined, alpha=alpha, winner=winner)


def select_transcript(reports: Sequence[RelativeErrorReport],
                      hyps: Sequence[HypothesisSet]) -> List[Utterance]:
    """Assemble the mixed pseudo-labeled set from per-clip winners."""
    by_id = {h.clip_id: h for h in hyps}
    out = []
    for report in reports:
        h = by_id[report.clip_id]
        transcript = h.transcripts[report.winner]
        out.append(Utterance(
            clip_id=h.clip_id, audio=h.audio_path, transcript=transcript,
            winner=report.winner, report=report, duration_ms=h.duration_ms))
    return out


def _clip_items(clips) -> List[Tuple[str, str, int]]:
    items = []
    for clip in clips:
        path = getattr(clip, "source_path", "") or ""
        stem = Path(path).stem
        if not stem:
            raise CommitteeError("clip without a source_path cannot be keyed")
        items.append((stem, path, getattr(clip, "duration_ms", 0)))
    ids = [i[0] for i in items]
    if len(set(ids)) != len(ids):
        raise CommitteeError("duplicate clip ids derived from source paths")
    return items


def transcribe_all(clips, adapters: Sequence[RecognizerAdapter],
                   rules: NormRules = DEFAULT_RULES,
                   on_failure: FailureSink = None,
                   max_workers: int = 4) -> List[HypothesisSet]:
    """Run every adapter over every clip and normalize the outputs.

    A clip with any adapter failure is excluded (reported through
    ``on_failure``); an adapter returning an empty string keeps the clip but
    flags it, and the scoring stage will reject it with a reason.
    Results come back sorted by clip_id regardless of completion order.
    """
    _validate_committee([a.recognizer for a in adapters])
    report = on_failure or (lambda record: None)
    items = _clip_items(clips)
    batch = [(cid, path) for cid, path, _ in items]

    with ThreadPoolExecutor(max_workers=min(max_workers, len(adapters))) as pool:
        futures = {a.recognizer: pool.submit(a.transcribe, batch)
                   for a in adapters}
        outputs = {rec: fut.result() for rec, fut in futures.items()}

    sets: List[HypothesisSet] = []
    for clip_id, path, duration_ms in sorted(items):
        transcripts: Dict[RecognizerId, str] = {}
        failed = False
        for adapter in adapters:
            rec = adapter.recognizer
            result = outputs[rec].get(clip_id)
            if result is None or not result.ok:
                error = result.error if result else "no result returned"
                report({"event": "adapter_failure", "clip_id": clip_id,
                        "recognizer": rec.name, "error": error})
                failed = True
                continue
            text = normalize(result.text, rules)
            if not text:
                report({"event": "empty_transcript", "clip_id": clip_id,
                        "recognizer": rec.name})
            transcripts[rec] = text
        if not failed:
            sets.append(HypothesisSet(
                clip_id=clip_id, transcripts=transcripts,
                audio_path=path, duration_ms=duration_ms))
    return sets
