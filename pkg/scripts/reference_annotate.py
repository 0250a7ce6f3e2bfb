#!/usr/bin/env python3
"""Brute-force reference for the annotation pipeline, kept deliberately
independent of the package: plain quadratic edit distance, no shared code.

Reads a fixture directory (corpus.json, config.json, hyps_*.jsonl) and
writes expected.json with the survivor ids, per-clip rejection stages, and
corpus statistics. The pipeline tests compare their output against this
file; regenerate it only when the fixtures change.

Hypothesis texts must already be in normalized form (lowercase letters,
apostrophes, single spaces) so that no text-normalization logic needs to
be duplicated here; the script refuses to run otherwise.
"""

import json
import re
import sys
from pathlib import Path

NORMALIZED = re.compile(r"^[a-z' ]*$")
# tokens the normalizer would rewrite, so they may not appear in fixtures
FORBIDDEN = {"dr", "st", "ave", "blvd", "rd", "apt", "ste", "mr", "mrs"}


def edit_distance(a, b):
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1,
                           prev[j - 1] + (x != y)))
        prev = cur
    return prev[len(b)]


def rate(ref_tokens, hyp_tokens):
    return edit_distance(ref_tokens, hyp_tokens) / len(ref_tokens)


def minmax(values):
    lo, hi = min(values.values()), max(values.values())
    if hi == lo:
        return {k: 0.0 for k in values}
    return {k: (v - lo) / (hi - lo) for k, v in values.items()}


def score_clip(hyps, priorities, alpha):
    names = sorted(hyps, key=lambda n: priorities[n])
    avg_wer, avg_cer = {}, {}
    for j in names:
        wers = [rate(hyps[j].split(), hyps[k].split())
                for k in names if k != j]
        cers = [rate(list(hyps[j]), list(hyps[k]))
                for k in names if k != j]
        avg_wer[j] = sum(wers) / len(wers)
        avg_cer[j] = sum(cers) / len(cers)
    norm_wer, norm_cer = minmax(avg_wer), minmax(avg_cer)
    combined = {j: alpha * norm_wer[j] + (1 - alpha) * norm_cer[j]
                for j in names}
    winner = min(names, key=lambda j: (combined[j], priorities[j]))
    return {"winner": winner, "combined": combined,
            "norm_wer": norm_wer, "norm_cer": norm_cer,
            "avg_wer": avg_wer, "avg_cer": avg_cer}


def lower_median(values):
    return sorted(values)[(len(values) - 1) // 2]


def main(fixture_dir):
    fixture_dir = Path(fixture_dir)
    corpus = json.loads((fixture_dir / "corpus.json").read_text("utf-8"))
    config = json.loads((fixture_dir / "config.json").read_text("utf-8"))
    alpha = config["alpha"]
    thresholds = config["thresholds"]
    stopwords = set(config["frequency"]["stopwords"])
    cap = config["frequency"]["max_per_signature"]
    length = config["length"]

    priorities, trainees, tables = {}, set(), {}
    for member in config["committee"]:
        priorities[member["name"]] = member["priority"]
        if member.get("trainee"):
            trainees.add(member["name"])
        table = {}
        path = fixture_dir / member["manifest"]
        for line in path.read_text("utf-8").splitlines():
            if line.strip():
                rec = json.loads(line)
                table[rec["id"]] = rec["transcript"]
        tables[member["name"]] = table

    rejected = {}
    durations = {c["id"]: c["duration_ms"] for c in corpus["clips"]}
    stage1 = []
    for cid in sorted(durations):
        seconds = durations[cid] / 1000.0
        if length["min_s"] <= seconds <= length["max_s"]:
            stage1.append(cid)
        else:
            rejected[cid] = "duration"

    scored = {}
    for cid in stage1:
        hyps = {}
        missing = [n for n in priorities if cid not in tables[n]]
        if missing:
            rejected[cid] = "transcription"
            continue
        hyps = {n: tables[n][cid].strip() for n in priorities}
        for text in hyps.values():
            if not NORMALIZED.match(text):
                sys.exit(f"{cid}: hypothesis not in normalized form: {text!r}")
            if set(text.split()) & FORBIDDEN:
                sys.exit(f"{cid}: hypothesis uses a rewritten token: {text!r}")
        if any(not text for text in hyps.values()):
            rejected[cid] = "scoring"
            continue
        scored[cid] = (score_clip(hyps, priorities, alpha),
                       hyps, durations[cid])

    after_f1 = []
    for cid, (score, hyps, duration_ms) in scored.items():
        w = score["winner"]
        ok = (score["combined"][w] <= thresholds["max_er"]
              and score["norm_wer"][w] <= thresholds["max_wer"]
              and score["norm_cer"][w] <= thresholds["max_cer"])
        if ok and (thresholds["trainee_min_wer"] > 0
                   or thresholds["trainee_min_cer"] > 0) and trainees:
            passes = [score["avg_wer"][t] >= thresholds["trainee_min_wer"]
                      and score["avg_cer"][t] >= thresholds["trainee_min_cer"]
                      for t in sorted(trainees)]
            combine = any if thresholds["trainee_combine"] == "any" else all
            ok = combine(passes)
        if ok:
            after_f1.append(cid)
        else:
            rejected[cid] = "f1"

    groups = {}
    for cid in after_f1:
        score, hyps, _ = scored[cid]
        text = hyps[score["winner"]]
        signature = " ".join(sorted(set(text.split()) - stopwords))
        groups.setdefault(signature, []).append(cid)
    keep = set()
    for members in groups.values():
        ranked = sorted(members,
                        key=lambda cid: (scored[cid][0]["combined"]
                                         [scored[cid][0]["winner"]], cid))
        keep.update(ranked[:cap])
    after_f2 = [cid for cid in after_f1 if cid in keep]
    for cid in after_f1:
        if cid not in keep:
            rejected[cid] = "f2"

    survivors = []
    for cid in after_f2:
        score, hyps, duration_ms = scored[cid]
        text = hyps[score["winner"]]
        seconds = duration_ms / 1000.0
        if (len(text) >= length["min_chars"]
                and length["min_s"] <= seconds <= length["max_s"]):
            survivors.append(cid)
        else:
            rejected[cid] = "f3"

    texts = [scored[cid][1][scored[cid][0]["winner"]] for cid in survivors]
    durations_ms = [scored[cid][2] for cid in survivors]
    words = [len(t.split()) for t in texts]
    vocab = set()
    for t in texts:
        vocab.update(t.split())
    seg = re.compile(r"^(.+)_\d+_\d+$")
    sources = {seg.match(cid).group(1) if seg.match(cid) else cid
               for cid in survivors}
    stats = {
        "total_duration_h": sum(durations_ms) / 3_600_000.0,
        "total_words": sum(words),
        "unique_words": len(vocab),
        "n_sources": len(sources),
        "median_words": lower_median(words),
        "median_chars": lower_median([len(t) for t in texts]),
        "median_duration_s": lower_median([d / 1000.0 for d in durations_ms]),
    } if survivors else {
        "total_duration_h": 0.0, "total_words": 0, "unique_words": 0,
        "n_sources": 0, "median_words": 0, "median_chars": 0,
        "median_duration_s": 0.0,
    }

    expected = {
        "survivors": survivors,
        "winners": {cid: scored[cid][0]["winner"] for cid in survivors},
        "rejected": rejected,
        "stats": stats,
    }
    out = fixture_dir / "expected.json"
    out.write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    print(f"{len(survivors)} survivors, {len(rejected)} rejected "
          f"-> {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1
         else Path(__file__).resolve().parent.parent
         / "tests" / "fixtures" / "mini_corpus")
