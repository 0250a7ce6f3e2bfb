"""WAV decoding, 16 kHz canonicalization, and silence-based call splitting.

Long call recordings are decoded to mono PCM16 at 16 kHz, scanned for
silence (frame RMS below a dBFS threshold sustained over a minimum run),
and split into the voiced complements with a little bounding silence kept
on each edge.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

CANONICAL_RATE = 16_000
_FULL_SCALE = 32_768.0


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono PCM16 audio. After canonicalization sample_rate is 16 kHz."""

    samples: np.ndarray
    sample_rate: int = CANONICAL_RATE
    source_path: str = ""
    source_offset_ms: int = 0

    @property
    def duration_ms(self) -> int:
        return round(1000 * len(self.samples) / self.sample_rate)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class SilenceConfig:
    threshold_dbfs: float = -43.0
    min_silence_ms: int = 800
    frame_ms: int = 10
    pad_ms: int = 150

    def __post_init__(self):
        if not self.min_silence_ms > self.frame_ms > 0:
            raise ValueError("need min_silence_ms > frame_ms > 0")
        if self.pad_ms < 0:
            raise ValueError("pad_ms must be >= 0")
        if self.threshold_dbfs >= 0:
            raise ValueError("threshold_dbfs must be negative")


class SegmentSpan(NamedTuple):
    start_ms: int
    end_ms: int


def _to_int16(data: np.ndarray) -> np.ndarray:
    if data.dtype == np.int16:
        return data
    if data.dtype == np.uint8:  # PCM8 is unsigned, midpoint 128
        return ((data.astype(np.int32) - 128) << 8).astype(np.int16)
    if data.dtype == np.int32:
        return (data >> 16).astype(np.int16)
    if data.dtype in (np.float32, np.float64):
        scaled = np.clip(data, -1.0, 1.0) * 32767.0
        return np.rint(scaled).astype(np.int16)
    raise ValueError(f"unsupported WAV sample format: {data.dtype}")


def decode_wav(path, linear_resample: bool = False) -> AudioClip:
    """Decode a RIFF/WAVE file to a mono 16 kHz clip.

    Stereo is downmixed by per-sample arithmetic mean. Resampling uses a
    windowed-sinc polyphase filter; ``linear_resample=True`` switches to
    plain linear interpolation, which is lossy (aliasing above ~7 kHz) but
    dependency-light.
    """
    rate, data = wavfile.read(path)
    if data.size == 0:
        raise ValueError(f"{path}: zero-length data chunk")
    if data.ndim == 2:
        if data.shape[1] > 2:
            raise ValueError(f"{path}: {data.shape[1]} channels, expected 1-2")
        mixed = np.rint(_to_int16(data).astype(np.float64).mean(axis=1))
        samples = mixed.astype(np.int16)
    else:
        samples = _to_int16(data)
    if rate != CANONICAL_RATE:
        samples = _resample(samples, rate, CANONICAL_RATE, linear_resample)
    return AudioClip(samples=samples, sample_rate=CANONICAL_RATE,
                     source_path=str(path), source_offset_ms=0)


def _resample(samples: np.ndarray, src: int, dst: int, linear: bool) -> np.ndarray:
    x = samples.astype(np.float64)
    if linear:
        n_out = int(round(len(x) * dst / src))
        t_out = np.arange(n_out) * (src / dst)
        y = np.interp(t_out, np.arange(len(x)), x)
    else:
        g = math.gcd(src, dst)
        y = resample_poly(x, dst // g, src // g, window=("kaiser", 8.0))
    return np.rint(np.clip(y, -32768, 32767)).astype(np.int16)


def write_wav(path, clip: AudioClip) -> None:
    wavfile.write(path, clip.sample_rate, np.asarray(clip.samples, np.int16))


def frame_dbfs(clip: AudioClip, frame_ms: int = 10) -> List[Tuple[int, float]]:
    """Per-frame RMS level in dBFS over non-overlapping frames.

    Level = 20*log10(rms/32768); an all-zero frame maps to -inf. A trailing
    partial frame is not analyzed.
    """
    if frame_ms < 1:
        raise ValueError("frame_ms must be >= 1")
    frame_len = clip.sample_rate * frame_ms // 1000
    n_frames = len(clip.samples) // frame_len if frame_len else 0
    if n_frames == 0:
        return []
    x = np.asarray(clip.samples[:n_frames * frame_len], np.float64)
    rms = np.sqrt((x * x).reshape(n_frames, frame_len).mean(axis=1))
    with np.errstate(divide="ignore"):
        levels = 20.0 * np.log10(rms / _FULL_SCALE)
    return list(enumerate(levels))


def detect_silence(clip: AudioClip, cfg: SilenceConfig = SilenceConfig()
                   ) -> List[SegmentSpan]:
    """Maximal runs of frames below threshold lasting >= min_silence_ms."""
    levels = frame_dbfs(clip, cfg.frame_ms)
    if not levels:
        return []
    n_frames = len(levels)
    silent = [dbfs < cfg.threshold_dbfs for _, dbfs in levels]
    runs = []
    start = None
    for i, s in enumerate(silent + [False]):
        if s and start is None:
            start = i
        elif not s and start is not None:
            runs.append((start, i))
            start = None
    spans = []
    for a, b in runs:
        if (b - a) * cfg.frame_ms >= cfg.min_silence_ms:
            end_ms = b * cfg.frame_ms
            if b == n_frames:
                # absorb the un-analyzed tail shorter than one frame
                end_ms = clip.duration_ms
            spans.append(SegmentSpan(a * cfg.frame_ms, end_ms))
    return spans


def voiced_spans(clip: AudioClip, cfg: SilenceConfig = SilenceConfig()
                 ) -> List[SegmentSpan]:
    """Complements of the detected silence runs, padded by up to pad_ms of
    the bounding silence on each side."""
    duration = clip.duration_ms
    if duration == 0:
        return []
    silences = detect_silence(clip, cfg)
    voiced = []
    cursor = 0
    for s in silences:
        if s.start_ms > cursor:
            voiced.append([cursor, s.start_ms])
        cursor = s.end_ms
    if cursor < duration:
        voiced.append([cursor, duration])
    if not voiced:
        return []

    # Pad into neighbouring silence. An interior silence run is shared by
    # two segments, so each side may claim at most half of it.
    bounds = {s.start_ms: s for s in silences}
    for region in voiced:
        left = next((s for s in silences if s.end_ms == region[0]), None)
        right = bounds.get(region[1])
        if left is not None:
            shared = left.start_ms > 0
            avail = left.end_ms - left.start_ms
            region[0] -= min(cfg.pad_ms, avail // 2 if shared else avail)
        if right is not None:
            shared = right.end_ms < duration
            avail = right.end_ms - right.start_ms
            region[1] += min(cfg.pad_ms, avail // 2 if shared else avail)
    return [SegmentSpan(a, b) for a, b in voiced]


def _slice_ms(clip: AudioClip, span: SegmentSpan) -> AudioClip:
    lo = span.start_ms * clip.sample_rate // 1000
    hi = span.end_ms * clip.sample_rate // 1000
    return replace(clip, samples=clip.samples[lo:hi],
                   source_offset_ms=clip.source_offset_ms + span.start_ms)


def split_on_silence(clip: AudioClip, cfg: SilenceConfig = SilenceConfig()
                     ) -> List[AudioClip]:
    """Voiced segments of the clip, in temporal order.

    A clip with no qualifying silence comes back whole; a fully silent clip
    yields no segments.
    """
    return [_slice_ms(clip, span) for span in voiced_spans(clip, cfg)]


def duration_filter(clips: Sequence[AudioClip], min_s: float = 1.5,
                    max_s: float = 15.0) -> List[AudioClip]:
    """Keep clips whose duration lies in the closed interval [min_s, max_s]."""
    if not min_s < max_s:
        raise ValueError("need min_s < max_s")
    return [c for c in clips if min_s <= c.duration_ms / 1000.0 <= max_s]


def write_segments(clip: AudioClip, out_dir, cfg: SilenceConfig = SilenceConfig()
                   ) -> List[dict]:
    """Split a clip and write `<stem>_<index>_<start_ms>.wav` files plus a
    JSON sidecar describing the spans. Returns the sidecar records."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(clip.source_path).stem or "clip"
    records = []
    for i, span in enumerate(voiced_spans(clip, cfg)):
        segment = _slice_ms(clip, span)
        name = f"{stem}_{i}_{span.start_ms}.wav"
        write_wav(out_dir / name, segment)
        records.append({
            "file": name,
            "start_ms": span.start_ms,
            "end_ms": span.end_ms,
            "duration_ms": segment.duration_ms,
        })
    sidecar = out_dir / f"{stem}_segments.json"
    sidecar.write_text(json.dumps(records, indent=2), encoding="utf-8")
    return records
