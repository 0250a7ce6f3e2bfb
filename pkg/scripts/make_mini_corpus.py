#!/usr/bin/env python3
"""Generate the synthetic mini corpus used by the pipeline tests.

Running this script rewrites the committed text fixtures under
tests/fixtures/mini_corpus/ (hypothesis manifests, clip table, pipeline
config). The WAV files themselves are synthesized on demand — tests call
`synthesize_wavs` to materialize them in a temp directory, so no audio
binaries live in the repository.

The clip table is hand-designed so that every pipeline stage rejects at
least one clip: two clips fall outside the duration window, one clip is
missing from a recognizer manifest, one clip has a blank hypothesis, two
clips trip the f1 error bounds, a five-clip near-duplicate cluster
overflows the f2 signature cap, and one transcript is too short for f3.
"""

import json
import sys
import zlib
from pathlib import Path

import numpy as np

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "mini_corpus"

RECOGNIZERS = [
    {"name": "aws", "priority": 0, "trainee": False},
    {"name": "google", "priority": 1, "trainee": False},
    {"name": "ds2", "priority": 2, "trainee": True},
    {"name": "wav2vec2", "priority": 3, "trainee": True},
]

# id -> (duration_ms, {recognizer: hypothesis})   A lone string means all
# four recognizers agree on it.
CLIPS = {
    "clip_001": (3200, "i would like to update my beneficiary information"),
    "clip_002": (2800, {
        "aws": "what is the remaining balance on my deductible",
        "google": "what is the remaining balance on my deductible",
        "ds2": "what is remaining balance on my deductible",
        "wav2vec2": "what is the remaining balance on my deductibles",
    }),
    "clip_003": (2400, {
        "aws": "please send me a new insurance card",
        "google": "please send me a new insurance card",
        "ds2": "please send me a new insurance card",
        "wav2vec2": "please send a new insurance card",
    }),
    "clip_004": (3600, {
        "aws": "my prescription needs prior authorization",
        "google": "my prescription needs prior authorizations",
        "ds2": "my prescription needs prior authorization",
        "wav2vec2": "my prescriptions need prior authorization",
    }),
    "clip_005": (4100, {
        "aws": "the subscriber identification number is missing",
        "google": "subscriber identification number missing",
        "ds2": "the subscriber identification number is missing today",
        "wav2vec2": "a subscriber id number is missing",
    }),
    # winner's combined rate lands above max_er -> f1 rejects
    "clip_006": (2900, {
        "aws": "copay applies after deductible met",
        "google": "the copay applies after your deductible is met",
        "ds2": "co pay apply after deduct able met",
        "wav2vec2": "copays applied after deductibles are met",
    }),
    # winner's normalized wer lands above max_wer -> f1 rejects
    "clip_007": (3300, {
        "aws": "coverage terminated on the fifth",
        "google": "coverage was terminated the fifth of march",
        "ds2": "the coverage terminates in march",
        "wav2vec2": "coverage termination march fifth",
    }),
    # five clips sharing the {check, dental, coverage} signature; the cap of
    # three keeps the lexicographically first ids (all tie at zero error)
    "clip_008": (2600, "i want to check my dental coverage please"),
    "clip_009": (2700, "i want to check my dental coverage"),
    "clip_010": (2500, "please i want to check my dental coverage"),
    "clip_011": (3000, "i would like to check my dental coverage"),
    "clip_012": (2750, "i do want to check my dental coverage"),
    "clip_013": (2000, "check my claim"),        # 14 chars -> f3 rejects
    "clip_014": (1200, "too short anyway"),       # duration prefilter rejects
    "clip_015": (16500, "runs far too long for the training window"),
    "clip_016": (2300, "this one never reaches the committee"),
    "clip_017": (2100, {
        "aws": "agent assistance requested for enrollment",
        "google": "agent assistance requested for enrollment",
        "ds2": "agent assistance requested for enrollment",
        "wav2vec2": " ",                          # blank -> scoring rejects
    }),
    "clip_018": (3900, "how do i file an appeal for a denied claim"),
    "clip_019": (2200, {
        "aws": "transfer me to a licensed agent please",
        "google": "transfer me to licensed agent please",
        "ds2": "transfer me to a license agent please",
        "wav2vec2": "transfer me to a licensed agent please",
    }),
    "clip_020": (4400, "enrollment window closes at the end of the month"),
}

# clip_016 is deliberately absent from google's manifest: the cached
# adapter reports a miss and the pipeline drops the clip at transcription.
HOLES = {"google": {"clip_016"}}

CONFIG = {
    "alpha": 0.5,
    "committee": [
        {**r, "kind": "cached", "manifest": f"hyps_{r['name']}.jsonl"}
        for r in RECOGNIZERS
    ],
    "thresholds": {
        "max_er": 0.2, "max_wer": 0.25, "max_cer": 0.15,
        "trainee_min_wer": 0.0, "trainee_min_cer": 0.0,
        "trainee_combine": "any",
    },
    "frequency": {
        "max_per_signature": 3,
        "stopwords": ["a", "an", "the", "and", "or", "to", "of", "in", "on",
                      "at", "is", "was", "i", "you", "my", "your", "me",
                      "we", "do", "did", "does", "for", "with", "please",
                      "want", "would", "like"],
    },
    "length": {"min_chars": 18, "min_s": 1.5, "max_s": 15.0},
}


def hypothesis(clip_id: str, name: str):
    duration_ms, hyp = CLIPS[clip_id]
    if clip_id in HOLES.get(name, ()):
        return None
    return hyp if isinstance(hyp, str) else hyp[name]


def write_fixtures(fixture_dir: Path = FIXTURE_DIR) -> None:
    fixture_dir.mkdir(parents=True, exist_ok=True)
    corpus = {"clips": [{"id": cid, "duration_ms": CLIPS[cid][0]}
                        for cid in sorted(CLIPS)]}
    (fixture_dir / "corpus.json").write_text(
        json.dumps(corpus, indent=2) + "\n", encoding="utf-8")
    (fixture_dir / "config.json").write_text(
        json.dumps(CONFIG, indent=2) + "\n", encoding="utf-8")
    for rec in RECOGNIZERS:
        lines = []
        for cid in sorted(CLIPS):
            text = hypothesis(cid, rec["name"])
            if text is not None:
                lines.append(json.dumps({"id": cid, "transcript": text}))
        (fixture_dir / f"hyps_{rec['name']}.jsonl").write_text(
            "\n".join(lines) + "\n", encoding="utf-8")


def synthesize_wavs(out_dir, fixture_dir: Path = FIXTURE_DIR) -> list:
    """Materialize one deterministic WAV per clip; returns the paths."""
    from scipy.io import wavfile

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus = json.loads((fixture_dir / "corpus.json").read_text("utf-8"))
    paths = []
    for clip in corpus["clips"]:
        n = 16 * clip["duration_ms"]  # 16 samples per ms at 16 kHz
        rng = np.random.default_rng(zlib.crc32(clip["id"].encode()))
        t = np.arange(n) / 16_000.0
        tone = 0.3 * np.sin(2 * np.pi * 220.0 * t)
        noise = 0.05 * rng.standard_normal(n)
        samples = np.rint((tone + noise).clip(-1, 1) * 20_000).astype(np.int16)
        path = out_dir / f"{clip['id']}.wav"
        wavfile.write(path, 16_000, samples)
        paths.append(path)
    return paths


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else FIXTURE_DIR
    write_fixtures(target)
    print(f"wrote fixtures to {target}")
