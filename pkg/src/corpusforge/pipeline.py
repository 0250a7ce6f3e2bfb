"""End-to-end corpus curation: segment, cross-score, filter, write manifest.

The flow is a sequential dataflow over one batch of audio:

    segmentation -> duration prefilter -> committee transcription ->
    relative-rate scoring -> f1 (error-rate thresholds) ->
    f2 (keyword-frequency cap) -> f3 (length window) -> manifest

Filters are pure list-to-list functions so they can be tested and reordered
in isolation; `run_iteration` wires them together, records why every clip
was rejected, and writes `manifest.jsonl`, `rejected.jsonl`, `stats.json`
and `report.txt` into the output directory.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import (Callable, Dict, Iterable, List, Mapping, Optional,
                    Sequence, Tuple, Union)

from .adapters import RecognizerAdapter
from .audio import AudioClip, SilenceConfig, decode_wav, write_segments
from .committee import (HypothesisSet, RelativeErrorReport, Utterance,
                        relative_rates, select_transcript, transcribe_all)
from .textnorm import DEFAULT_RULES, NormRules

EventSink = Optional[Callable[[dict], None]]

# Function words excluded from keyword signatures. Deliberately small and
# call-center flavored; override via FrequencyConfig(stopwords=...).
DEFAULT_STOPWORDS = frozenset("""
a an the and or but if then than so as of to in on at by for with from into
about over under up down out off i you he she it we they me him her us them
my your his its our their this that these those there here is am are was
were be been being do does did done have has had having will would can could
shall should may might must not no yes what which who whom whose how when
where why want need know think get got let say said see come go going just
like well now okay oh um uh yeah hi hello please thanks thank bye
""".split())


class PipelineError(RuntimeError):
    """The batch cannot produce a manifest; diagnostics carry stage counts."""

    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class ThresholdConfig:
    """Bounds for filter f1.

    Upper bounds apply to the winning transcript's normalized rates; the
    trainee lower bounds apply to the raw averaged rates of the recognizers
    flagged `trainee=True`, keeping clips the committee agrees on but the
    in-training models still get wrong. A lower bound of 0.0 disables it.
    """

    max_er: float = 0.2
    max_wer: float = 0.25
    max_cer: float = 0.15
    trainee_min_wer: float = 0.0
    trainee_min_cer: float = 0.0
    trainee_combine: str = "any"

    def __post_init__(self):
        for name in ("max_er", "max_wer", "max_cer",
                     "trainee_min_wer", "trainee_min_cer"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.trainee_combine not in ("any", "all"):
            raise ValueError(
                f"trainee_combine must be 'any' or 'all', "
                f"got {self.trainee_combine!r}")
        if self.trainee_min_wer > 0 and self.trainee_min_wer > self.max_wer:
            raise ValueError("trainee_min_wer exceeds max_wer")
        if self.trainee_min_cer > 0 and self.trainee_min_cer > self.max_cer:
            raise ValueError("trainee_min_cer exceeds max_cer")


@dataclass(frozen=True)
class FrequencyConfig:
    """Cap for filter f2: at most `max_per_signature` utterances may share a
    keyword signature (the sorted set of non-stopword tokens)."""

    stopwords: frozenset = DEFAULT_STOPWORDS
    max_per_signature: int = 20

    def __post_init__(self):
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))
        if self.max_per_signature < 1:
            raise ValueError("max_per_signature must be >= 1")

    def signature(self, text: str) -> str:
        return " ".join(sorted(set(text.split()) - self.stopwords))


@dataclass(frozen=True)
class LengthConfig:
    """Window for filter f3: transcript and clip-duration lower/upper bounds."""

    min_chars: int = 18
    min_s: float = 1.5
    max_s: float = 15.0

    def __post_init__(self):
        if self.min_chars < 0:
            raise ValueError("min_chars must be >= 0")
        if not 0 <= self.min_s <= self.max_s:
            raise ValueError("need 0 <= min_s <= max_s")


@dataclass(frozen=True)
class Manifest:
    records: Tuple[Utterance, ...]
    meta: Mapping[str, object]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        ids = [u.clip_id for u in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest clip_ids must be unique")


@dataclass(frozen=True)
class CorpusStats:
    total_duration_h: float = 0.0
    total_words: int = 0
    unique_words: int = 0
    n_sources: int = 0
    median_words: int = 0
    median_chars: int = 0
    median_duration_s: float = 0.0


# ---------------------------------------------------------------------------
# filters


def _f1_reason(u: Utterance, t: ThresholdConfig) -> Optional[str]:
    r = u.report
    if r.winner_er > t.max_er:
        return f"winner_er {r.winner_er:.4f} > max_er {t.max_er}"
    if r.winner_avg_wer > t.max_wer:
        return f"winner_avg_wer {r.winner_avg_wer:.4f} > max_wer {t.max_wer}"
    if r.winner_avg_cer > t.max_cer:
        return f"winner_avg_cer {r.winner_avg_cer:.4f} > max_cer {t.max_cer}"
    if t.trainee_min_wer == 0.0 and t.trainee_min_cer == 0.0:
        return None
    trainees = [rec for rec in r.recognizers if rec.trainee]
    if not trainees:
        return None

    def passes(rec):
        return (r.avg_wer[rec.name] >= t.trainee_min_wer
                and r.avg_cer[rec.name] >= t.trainee_min_cer)

    combine = any if t.trainee_combine == "any" else all
    if combine(passes(rec) for rec in trainees):
        return None
    return (f"trainee rates below min bounds "
            f"(combine={t.trainee_combine}, "
            f"min_wer={t.trainee_min_wer}, min_cer={t.trainee_min_cer})")


def filter_f1(utts: Sequence[Utterance],
              thresholds: ThresholdConfig = ThresholdConfig()
              ) -> List[Utterance]:
    """Keep utterances whose winning transcript clears the error bounds."""
    return [u for u in utts if _f1_reason(u, thresholds) is None]


def _f2_split(utts: Sequence[Utterance], freq: FrequencyConfig
              ) -> Tuple[List[Utterance], List[Tuple[Utterance, str]]]:
    groups: Dict[str, List[Utterance]] = defaultdict(list)
    for u in utts:
        groups[freq.signature(u.transcript)].append(u)
    keep_ids = set()
    for members in groups.values():
        ranked = sorted(members, key=lambda u: (u.report.winner_er, u.clip_id))
        keep_ids.update(u.clip_id for u in ranked[:freq.max_per_signature])
    kept, cut = [], []
    for u in utts:
        if u.clip_id in keep_ids:
            kept.append(u)
        else:
            cut.append((u, f"signature {freq.signature(u.transcript)!r} "
                           f"over cap {freq.max_per_signature}"))
    return kept, cut


def filter_f2(utts: Sequence[Utterance],
              freq: FrequencyConfig = FrequencyConfig()) -> List[Utterance]:
    """Cap near-duplicate utterances sharing a keyword signature.

    Within a signature group the `max_per_signature` lowest-error utterances
    survive (ties broken by clip_id); survivors keep their input order.
    """
    return _f2_split(utts, freq)[0]


def _f3_reason(u: Utterance, length: LengthConfig) -> Optional[str]:
    if u.char_len < length.min_chars:
        return f"transcript {u.char_len} chars < {length.min_chars}"
    seconds = u.duration_ms / 1000.0
    if not length.min_s <= seconds <= length.max_s:
        return (f"duration {seconds:.2f}s outside "
                f"[{length.min_s}, {length.max_s}]s")
    return None


def filter_f3(utts: Sequence[Utterance],
              length: LengthConfig = LengthConfig()) -> List[Utterance]:
    """Keep utterances long enough to train on, inside the duration window."""
    return [u for u in utts if _f3_reason(u, length) is None]


# ---------------------------------------------------------------------------
# manifest serialization


def _record_dict(u: Utterance) -> dict:
    return {
        "id": u.clip_id,
        "audio": u.audio,
        "text": u.transcript,
        "duration_ms": u.duration_ms,
        "winner": u.winner.name,
        "er": u.report.winner_er,
        "avg_wer": u.report.avg_wer[u.winner.name],
        "avg_cer": u.report.avg_cer[u.winner.name],
    }


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(manifest: Manifest, path) -> Path:
    """Write meta header plus one JSON record per line, atomically."""
    path = Path(path)
    lines = [json.dumps({"meta": dict(manifest.meta)}, sort_keys=True)]
    lines += [json.dumps(_record_dict(u), sort_keys=True)
              for u in manifest.records]
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def load_manifest(path) -> Tuple[dict, List[dict]]:
    """Read a manifest back as (meta, records); tolerates a missing header."""
    meta: dict = {}
    records: List[dict] = []
    for line_no, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{line_no}: bad JSON: {exc}") from exc
        if set(obj) == {"meta"}:
            meta = obj["meta"]
        else:
            records.append(obj)
    return meta, records


# ---------------------------------------------------------------------------
# statistics

_SEGMENT_STEM = re.compile(r"^(?P<source>.+)_\d+_\d+$")


def _source_of(audio_path: str) -> str:
    stem = Path(audio_path).stem
    m = _SEGMENT_STEM.match(stem)
    return m.group("source") if m else stem


def _lower_median(values: List) -> float:
    return sorted(values)[(len(values) - 1) // 2]


def corpus_stats(manifest: Union[Manifest, Iterable[dict]]) -> CorpusStats:
    """Summary statistics over manifest records (lower median throughout)."""
    if isinstance(manifest, Manifest):
        rows = [_record_dict(u) for u in manifest.records]
    else:
        rows = list(manifest)
    if not rows:
        return CorpusStats()
    texts = [r["text"] for r in rows]
    durations_ms = [int(r["duration_ms"]) for r in rows]
    word_counts = [len(t.split()) for t in texts]
    vocabulary = set()
    for t in texts:
        vocabulary.update(t.split())
    return CorpusStats(
        total_duration_h=sum(durations_ms) / 3_600_000.0,
        total_words=sum(word_counts),
        unique_words=len(vocabulary),
        n_sources=len({_source_of(r["audio"]) for r in rows}),
        median_words=_lower_median(word_counts),
        median_chars=_lower_median([len(t) for t in texts]),
        median_duration_s=_lower_median([ms / 1000.0 for ms in durations_ms]),
    )


# ---------------------------------------------------------------------------
# orchestration


def _config_hash(thresholds: ThresholdConfig, freq: FrequencyConfig,
                 length: LengthConfig, alpha: float,
                 silence: Optional[SilenceConfig],
                 rules: NormRules) -> str:
    payload = {
        "thresholds": asdict(thresholds),
        "frequency": {"stopwords": sorted(freq.stopwords),
                      "max_per_signature": freq.max_per_signature},
        "length": asdict(length),
        "alpha": alpha,
        "silence": asdict(silence) if silence else None,
        "rules": {"special_terms": dict(rules.special_terms),
                  "abbreviations": {k: v if isinstance(v, str) else dict(v)
                                    for k, v in rules.abbreviations.items()},
                  "year_range": list(rules.year_range),
                  "keep_apostrophe": rules.keep_apostrophe},
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class _Ref:
    """Minimal clip handle for committee transcription."""
    source_path: str
    duration_ms: int


def _gather_clips(source, silence: Optional[SilenceConfig],
                  out_dir: Optional[Path], emit) -> List[_Ref]:
    if isinstance(source, (str, Path)):
        paths = sorted(Path(source).glob("*.wav"))
        if not paths:
            raise PipelineError(f"no .wav files under {source}")
        decoded = [decode_wav(p) for p in paths]
    else:
        decoded = list(source)

    if silence is None:
        return [_Ref(c.source_path, c.duration_ms) for c in decoded]

    if out_dir is None:
        raise PipelineError("segmenting call audio requires an output "
                            "directory for the extracted clips")
    seg_dir = Path(out_dir) / "segments"
    refs: List[_Ref] = []
    for call in decoded:
        records = write_segments(call, seg_dir, silence)
        emit({"event": "segmented", "call": call.source_path,
              "segments": len(records)})
        refs.extend(_Ref(str(seg_dir / r["file"]), r["duration_ms"])
                    for r in records)
    return refs


def run_iteration(source, adapters: Sequence[RecognizerAdapter], *,
                  thresholds: ThresholdConfig = ThresholdConfig(),
                  frequency: FrequencyConfig = FrequencyConfig(),
                  length: LengthConfig = LengthConfig(),
                  rules: NormRules = DEFAULT_RULES,
                  silence: Optional[SilenceConfig] = None,
                  alpha: float = 0.5,
                  iteration: int = 0,
                  out_dir=None,
                  on_event: EventSink = None,
                  max_workers: int = 4) -> Manifest:
    """Run one annotation pass and return (and optionally write) the manifest.

    `source` is a directory of WAV files or an iterable of decoded clips;
    pass a SilenceConfig to treat inputs as long calls that need splitting
    first. Rejected clips are tracked per stage; zero survivors is a normal
    (if warned-about) outcome, while losing every clip to adapter failures
    aborts with diagnostics.
    """
    emit = on_event or (lambda event: None)
    out_path = Path(out_dir) if out_dir is not None else None

    clips = _gather_clips(source, silence, out_path, emit)
    counts = {"input": len(clips)}
    rejected: List[dict] = []

    inside, seconds = [], (length.min_s, length.max_s)
    for ref in clips:
        duration_s = ref.duration_ms / 1000.0
        if seconds[0] <= duration_s <= seconds[1]:
            inside.append(ref)
        else:
            rejected.append({"id": Path(ref.source_path).stem,
                             "stage": "duration",
                             "reason": f"duration {duration_s:.2f}s outside "
                                       f"[{seconds[0]}, {seconds[1]}]s"})
    counts["after_duration"] = len(inside)
    emit({"event": "duration_prefilter", "kept": len(inside),
          "dropped": len(clips) - len(inside)})

    failures: List[dict] = []
    hyps = transcribe_all(inside, adapters, rules=rules,
                          on_failure=failures.append, max_workers=max_workers)
    failed_ids = {f["clip_id"] for f in failures
                  if f["event"] == "adapter_failure"}
    for f in failures:
        emit(f)
        if f["event"] == "adapter_failure":
            rejected.append({"id": f["clip_id"], "stage": "transcription",
                             "reason": f"{f['recognizer']}: {f['error']}"})
    if inside and not hyps:
        raise PipelineError(
            "every clip failed transcription; check adapter configuration",
            diagnostics={"counts": counts,
                         "sample_failures": failures[:5]})

    scored: List[RelativeErrorReport] = []
    usable: List[HypothesisSet] = []
    for h in hyps:
        blank = [r.name for r, text in h.transcripts.items() if not text.strip()]
        if blank:
            rejected.append({"id": h.clip_id, "stage": "scoring",
                             "reason": "empty transcript from "
                                       + ", ".join(sorted(blank))})
            continue
        scored.append(relative_rates(h, alpha=alpha))
        usable.append(h)
    counts["scored"] = len(scored)
    utts = select_transcript(scored, usable)

    after_f1 = filter_f1(utts, thresholds)
    dropped = {u.clip_id for u in utts} - {u.clip_id for u in after_f1}
    for u in utts:
        if u.clip_id in dropped:
            rejected.append({"id": u.clip_id, "stage": "f1",
                             "reason": _f1_reason(u, thresholds)})
    counts["after_f1"] = len(after_f1)

    after_f2, cut = _f2_split(after_f1, frequency)
    for u, reason in cut:
        rejected.append({"id": u.clip_id, "stage": "f2", "reason": reason})
    counts["after_f2"] = len(after_f2)

    after_f3 = filter_f3(after_f2, length)
    dropped = {u.clip_id for u in after_f2} - {u.clip_id for u in after_f3}
    for u in after_f2:
        if u.clip_id in dropped:
            rejected.append({"id": u.clip_id, "stage": "f3",
                             "reason": _f3_reason(u, length)})
    counts["after_f3"] = len(after_f3)

    meta = {
        "config_hash": _config_hash(thresholds, frequency, length, alpha,
                                    silence, rules),
        "iteration": iteration,
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    manifest = Manifest(records=tuple(after_f3), meta=meta)
    if not manifest.records:
        emit({"event": "empty_manifest",
              "warning": "no utterances survived filtering"})

    if out_path is not None:
        _write_outputs(manifest, rejected, counts, out_path)
    emit({"event": "iteration_done", "counts": counts,
          "rejected": len(rejected)})
    return manifest


def _write_outputs(manifest: Manifest, rejected: List[dict],
                   counts: Dict[str, int], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, out_dir / "manifest.jsonl")
    _atomic_write(out_dir / "rejected.jsonl",
                  "".join(json.dumps(r, sort_keys=True) + "\n"
                          for r in rejected))
    stats = corpus_stats(manifest)
    _atomic_write(out_dir / "stats.json",
                  json.dumps(asdict(stats), indent=2, sort_keys=True) + "\n")
    _atomic_write(out_dir / "report.txt", _render_report(manifest, counts,
                                                         rejected, stats))


def _render_report(manifest: Manifest, counts: Dict[str, int],
                   rejected: List[dict], stats: CorpusStats) -> str:
    by_stage: Dict[str, int] = defaultdict(int)
    for r in rejected:
        by_stage[r["stage"]] += 1
    lines = [
        "corpus annotation report",
        f"config hash : {manifest.meta.get('config_hash', '?')}",
        f"iteration   : {manifest.meta.get('iteration', '?')}",
        f"created     : {manifest.meta.get('created_at', '?')}",
        "",
        "stage counts",
    ]
    for stage in ("input", "after_duration", "scored",
                  "after_f1", "after_f2", "after_f3"):
        if stage in counts:
            lines.append(f"  {stage:<15} {counts[stage]:>6}")
    lines += ["", "rejections by stage"]
    if by_stage:
        for stage in ("duration", "transcription", "scoring",
                      "f1", "f2", "f3"):
            if stage in by_stage:
                lines.append(f"  {stage:<15} {by_stage[stage]:>6}")
    else:
        lines.append("  none")
    lines += [
        "",
        "surviving corpus",
        f"  utterances      {len(manifest.records):>6}",
        f"  total hours     {stats.total_duration_h:>9.2f}",
        f"  total words     {stats.total_words:>6}",
        f"  unique words    {stats.unique_words:>6}",
        f"  sources         {stats.n_sources:>6}",
        f"  median words    {stats.median_words:>6}",
        f"  median chars    {stats.median_chars:>6}",
        f"  median duration {stats.median_duration_s:>8.2f}s",
        "",
    ]
    return "\n".join(lines)
