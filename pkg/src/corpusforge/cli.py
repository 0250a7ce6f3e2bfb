"""Command-line front end: one executable, one subcommand per stage.

Exit codes: 0 success (an empty result is still success), 1 usage or
configuration error, 2 data or adapter error at runtime. Machine-readable
output goes to stdout; progress and warnings go to stderr via logging,
level picked by the CORPUSFORGE_LOG environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import tomli

from . import __version__
from .adapters import load_adapters
from .audio import SilenceConfig, decode_wav, write_segments
from .committee import transcribe_all
from .itn import DEFAULT_ITN_RULES, ItnRules, inverse_normalize
from .metrics import EmptyReferenceError, corpus_rates
from .pipeline import (FrequencyConfig, LengthConfig, PipelineError,
                       ThresholdConfig, corpus_stats, load_manifest,
                       run_iteration)
from .textnorm import DEFAULT_RULES, NormRules, RuleError, normalize

log = logging.getLogger("corpusforge")

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 1."""


class DataError(Exception):
    """Unusable input data or failing adapters; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; the contract reserves 2 for data
    # errors, so usage problems are rerouted through exit code 1.
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config file handling

_TOP_KEYS = {"alpha", "thresholds", "frequency", "length", "silence",
             "committee", "rules", "max_workers"}
_COMMITTEE_KEYS = {"name", "priority", "trainee", "kind", "manifest",
                   "argv", "url", "timeout_s"}


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        if p.suffix == ".toml":
            config = tomli.loads(text)
        elif p.suffix == ".json":
            config = json.loads(text)
        else:
            raise UsageError(f"config must be .toml or .json, got {p.name}")
    except (tomli.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise UsageError(f"config {path} does not parse: {exc}") from exc

    unknown = set(config) - _TOP_KEYS
    if unknown:
        raise UsageError(f"unknown config field {sorted(unknown)[0]!r} "
                         f"in {path}")
    for section, cls in (("thresholds", ThresholdConfig),
                         ("length", LengthConfig),
                         ("silence", SilenceConfig)):
        allowed = {f.name for f in fields(cls)}
        for key in config.get(section, {}):
            if key not in allowed:
                raise UsageError(
                    f"unknown config field {section}.{key} in {path}")
    for key in config.get("frequency", {}):
        if key not in {"stopwords", "max_per_signature"}:
            raise UsageError(f"unknown config field frequency.{key} in {path}")
    for i, member in enumerate(config.get("committee", [])):
        unknown = set(member) - _COMMITTEE_KEYS
        if unknown:
            raise UsageError(f"unknown config field "
                             f"committee[{i}].{sorted(unknown)[0]} in {path}")
    config["_dir"] = p.parent
    return config


def _build_section(cls, section: dict, overrides: dict):
    merged = dict(section)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return cls(**merged)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad {cls.__name__} settings: {exc}") from exc


def _build_adapters(config: dict):
    specs = config.get("committee", [])
    if len(specs) < 2:
        raise UsageError("config must define a committee of at least "
                         "two recognizers")
    base = config.get("_dir", Path("."))
    resolved = []
    for i, spec in enumerate(specs):
        spec = dict(spec)
        for key in ("name", "priority", "kind"):
            if key not in spec:
                raise UsageError(f"committee[{i}] is missing {key!r}")
        if spec["kind"] == "cached":
            if "manifest" not in spec:
                raise UsageError(f"committee[{i}] (cached) needs 'manifest'")
            spec["manifest"] = str(base / spec["manifest"])
        elif spec["kind"] == "subprocess":
            if "argv" not in spec:
                raise UsageError(f"committee[{i}] (subprocess) needs 'argv'")
        elif spec["kind"] == "http":
            if "url" not in spec:
                raise UsageError(f"committee[{i}] (http) needs 'url'")
        else:
            raise UsageError(f"committee[{i}] has unknown kind "
                             f"{spec['kind']!r}")
        resolved.append(spec)
    try:
        return load_adapters(resolved)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    except OSError as exc:
        raise DataError(f"cannot load adapter data: {exc}") from exc


def _load_rules(config: dict, flag: Optional[str]) -> NormRules:
    path = flag or config.get("rules")
    if path is None:
        return DEFAULT_RULES
    base = Path(".") if flag else config.get("_dir", Path("."))
    try:
        return NormRules.from_json(base / path)
    except OSError as exc:
        raise UsageError(f"cannot read rules {path}: {exc}") from exc
    except (RuleError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad rules {path}: {exc}") from exc


def _read_jsonl_texts(path: str) -> Dict[str, str]:
    table: Dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    for line_no, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{line_no}: bad JSON: {exc}") from exc
        if set(rec) == {"meta"}:
            continue
        if "id" not in rec:
            raise DataError(f"{path}:{line_no}: missing 'id'")
        if rec["id"] in table:
            raise DataError(f"{path}:{line_no}: duplicate id {rec['id']!r}")
        text = rec.get("transcript", rec.get("text"))
        if text is None:
            raise DataError(f"{path}:{line_no}: missing 'transcript'/'text'")
        table[rec["id"]] = text
    return table


# ---------------------------------------------------------------------------
# subcommands


def cmd_segment(args) -> int:
    silence = _build_section(SilenceConfig, {}, {
        "threshold_dbfs": args.threshold_dbfs,
        "min_silence_ms": args.min_silence_ms,
        "frame_ms": args.frame_ms,
        "pad_ms": args.pad_ms,
    })
    in_path = Path(args.in_dir)
    wavs = sorted(in_path.glob("*.wav")) if in_path.is_dir() else [in_path]
    if not wavs:
        raise DataError(f"no .wav files under {in_path}")
    for wav in wavs:
        try:
            clip = decode_wav(wav, linear_resample=args.linear_resample)
        except ValueError as exc:
            raise DataError(f"{wav}: {exc}") from exc
        records = write_segments(clip, args.out_dir, silence)
        log.info("%s: %d segments", wav.name, len(records))
        for rec in records:
            print(json.dumps({"call": str(wav), **rec}, sort_keys=True))
    return 0


def cmd_normalize(args) -> int:
    rules = _load_rules({}, args.rules)

    def warn(event: dict) -> None:
        log.warning("normalize: %s", event)

    for line in sys.stdin:
        print(normalize(line.rstrip("\n"), rules, on_warning=warn))
    return 0


def cmd_itn(args) -> int:
    if args.rules:
        itn_rules = ItnRules.from_norm_rules(_load_rules({}, args.rules))
    else:
        itn_rules = DEFAULT_ITN_RULES
    for line in sys.stdin:
        print(inverse_normalize(line.rstrip("\n"), itn_rules))
    return 0


def cmd_score(args) -> int:
    refs = _read_jsonl_texts(args.refs)
    hyps = _read_jsonl_texts(args.hyps)
    missing = sorted(set(refs) - set(hyps))
    extra = sorted(set(hyps) - set(refs))
    if missing or extra:
        raise DataError(f"id mismatch between refs and hyps "
                        f"(missing {missing[:3]}, extra {extra[:3]})")
    if not refs:
        raise DataError("no utterances to score")
    pairs = [(refs[i], hyps[i]) for i in sorted(refs)]
    try:
        rates = corpus_rates(pairs)
    except EmptyReferenceError as exc:
        raise DataError(str(exc)) from exc
    print(json.dumps({
        "n_utterances": len(pairs),
        "wer": rates.wer,
        "cer": rates.cer,
    }, sort_keys=True))
    return 0


def _decode_dir(in_dir: str) -> list:
    paths = sorted(Path(in_dir).glob("*.wav"))
    if not paths:
        raise DataError(f"no .wav files under {in_dir}")
    clips = []
    for p in paths:
        try:
            clips.append(decode_wav(p))
        except ValueError as exc:
            raise DataError(f"{p}: {exc}") from exc
    return clips


def cmd_transcribe(args) -> int:
    config = _load_config(args.config)
    adapters = _build_adapters(config)
    rules = _load_rules(config, args.rules)
    clips = _decode_dir(args.in_dir)
    failures: List[dict] = []
    hyps = transcribe_all(clips, adapters, rules=rules,
                          on_failure=failures.append,
                          max_workers=args.max_workers
                          or config.get("max_workers", 4))
    for f in failures:
        log.warning("%s: %s (%s)", f["clip_id"], f["event"],
                    f.get("error", f.get("recognizer", "")))
    for h in hyps:
        print(json.dumps({
            "id": h.clip_id,
            "audio": h.audio_path,
            "duration_ms": h.duration_ms,
            "transcripts": {r.name: t for r, t in sorted(
                h.transcripts.items(), key=lambda kv: kv[0].priority)},
        }, sort_keys=True))
    if clips and not hyps:
        raise DataError("every clip failed transcription")
    return 0


def cmd_annotate(args) -> int:
    config = _load_config(args.config)
    adapters = _build_adapters(config)
    rules = _load_rules(config, args.rules)
    thresholds = _build_section(ThresholdConfig, config.get("thresholds", {}), {
        "max_er": args.max_er, "max_wer": args.max_wer,
        "max_cer": args.max_cer,
    })
    freq_section = dict(config.get("frequency", {}))
    if "stopwords" in freq_section:
        freq_section["stopwords"] = frozenset(freq_section["stopwords"])
    frequency = _build_section(FrequencyConfig, freq_section, {
        "max_per_signature": args.max_per_signature,
    })
    length = _build_section(LengthConfig, config.get("length", {}), {
        "min_chars": args.min_chars, "min_s": args.min_s, "max_s": args.max_s,
    })
    silence = None
    if args.split or "silence" in config:
        silence = _build_section(SilenceConfig, config.get("silence", {}), {})

    counts: Dict[str, int] = {}

    def on_event(event: dict) -> None:
        if event["event"] == "iteration_done":
            counts.update(event["counts"])
        elif "warning" in event:
            log.warning("%s", event["warning"])
        else:
            log.info("%s", {k: v for k, v in event.items() if k != "event"})

    try:
        manifest = run_iteration(
            args.in_dir, adapters,
            thresholds=thresholds, frequency=frequency, length=length,
            rules=rules, silence=silence,
            alpha=args.alpha if args.alpha is not None
            else config.get("alpha", 0.5),
            iteration=args.iteration, out_dir=args.out_dir,
            on_event=on_event,
            max_workers=args.max_workers or config.get("max_workers", 4))
    except PipelineError as exc:
        raise DataError(f"{exc} {exc.diagnostics or ''}".strip()) from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(json.dumps({
        "manifest": str(Path(args.out_dir) / "manifest.jsonl"),
        "survivors": len(manifest.records),
        "counts": counts,
        "config_hash": manifest.meta["config_hash"],
        "iteration": manifest.meta["iteration"],
    }, sort_keys=True))
    return 0


def cmd_stats(args) -> int:
    try:
        _, records = load_manifest(args.manifest)
    except OSError as exc:
        raise DataError(f"cannot read {args.manifest}: {exc}") from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    print(json.dumps(asdict(corpus_stats(records)), sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="corpusforge",
                     description="semi-supervised speech corpus curation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("segment", help="split call audio on silence")
    p.add_argument("--in", dest="in_dir", required=True,
                   help="WAV file or directory of WAVs")
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--threshold-dbfs", type=float, default=None)
    p.add_argument("--min-silence-ms", type=int, default=None)
    p.add_argument("--frame-ms", type=int, default=None)
    p.add_argument("--pad-ms", type=int, default=None)
    p.add_argument("--linear-resample", action="store_true")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("normalize", help="normalize text lines from stdin")
    p.add_argument("--rules", default=None, help="rules JSON file")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("itn", help="invert special terms back to written form")
    p.add_argument("--rules", default=None, help="rules JSON file")
    p.set_defaults(func=cmd_itn)

    p = sub.add_parser("score", help="pooled WER/CER between two manifests")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyps", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("transcribe", help="collect committee hypotheses")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--max-workers", type=int, default=None)
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("annotate", help="run one full annotation iteration")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--split", action="store_true",
                   help="treat inputs as long calls and segment them first")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--iteration", type=int, default=0)
    p.add_argument("--max-er", type=float, default=None)
    p.add_argument("--max-wer", type=float, default=None)
    p.add_argument("--max-cer", type=float, default=None)
    p.add_argument("--max-per-signature", type=int, default=None)
    p.add_argument("--min-chars", type=int, default=None)
    p.add_argument("--min-s", type=float, default=None)
    p.add_argument("--max-s", type=float, default=None)
    p.add_argument("--max-workers", type=int, default=None)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("stats", help="summary statistics for a manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("CORPUSFORGE_LOG", "warn").lower()
    logging.basicConfig(stream=sys.stderr,
                        level=_LOG_LEVELS.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    if level not in _LOG_LEVELS and level:
        log.warning("unknown CORPUSFORGE_LOG level %r, using warn", level)
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"corpusforge: error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"corpusforge: data error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
