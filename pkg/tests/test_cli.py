import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "scripts"))
from make_mini_corpus import synthesize_wavs  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures" / "mini_corpus"


def forge(*argv, stdin=None, env=None):
    import os
    full_env = dict(os.environ)
    full_env.update(env or {})
    return subprocess.run(
        [sys.executable, "-m", "corpusforge.cli", *argv],
        input=stdin, capture_output=True, text=True, env=full_env,
        timeout=120)


@pytest.fixture(scope="session")
def mini_wavs(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_mini_wavs")
    synthesize_wavs(out)
    return out


# ---------------------------------------------------------------------------
# exit code contract


def test_no_subcommand_is_usage_error():
    proc = forge()
    assert proc.returncode == 1


def test_unknown_flag_is_usage_error():
    proc = forge("normalize", "--frobnicate")
    assert proc.returncode == 1
    assert "frobnicate" in proc.stderr


def test_version():
    proc = forge("--version")
    assert proc.returncode == 0


# ---------------------------------------------------------------------------
# normalize / itn


def test_normalize_currency_line():
    proc = forge("normalize", stdin="I owe $20.45\n")
    assert proc.returncode == 0
    assert proc.stdout == "i owe twenty dollars forty five cents\n"


def test_normalize_multiple_lines():
    proc = forge("normalize", stdin="The 21st call\nmy 401k\n")
    assert proc.stdout == "the twenty first call\nmy four o one k\n"


def test_normalize_warning_goes_to_stderr():
    proc = forge("normalize", stdin="hello ☃\n",
                 env={"CORPUSFORGE_LOG": "warn"})
    assert proc.returncode == 0
    assert proc.stdout == "hello\n"
    assert "normalize" in proc.stderr


def test_itn_round_trip():
    proc = forge("itn", stdin="i need my w two form\n")
    assert proc.returncode == 0
    assert proc.stdout == "i need my w2 form\n"


# ---------------------------------------------------------------------------
# score


def write_jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows),
                    encoding="utf-8")
    return path


def test_score_identical_manifests(tmp_path):
    rows = [{"id": "c1", "text": "hello world"},
            {"id": "c2", "text": "more words here"}]
    refs = write_jsonl(tmp_path / "refs.jsonl", rows)
    hyps = write_jsonl(tmp_path / "hyps.jsonl", rows)
    proc = forge("score", "--refs", str(refs), "--hyps", str(hyps))
    assert proc.returncode == 0
    payload = json.loads(proc.stdout)
    assert payload == {"cer": 0.0, "n_utterances": 2, "wer": 0.0}


def test_score_known_rates(tmp_path):
    refs = write_jsonl(tmp_path / "refs.jsonl",
                       [{"id": "c1", "text": "a b c d"}])
    hyps = write_jsonl(tmp_path / "hyps.jsonl",
                       [{"id": "c1", "transcript": "a b x d"}])
    proc = forge("score", "--refs", str(refs), "--hyps", str(hyps))
    assert json.loads(proc.stdout)["wer"] == 0.25


def test_score_id_mismatch_is_data_error(tmp_path):
    refs = write_jsonl(tmp_path / "refs.jsonl", [{"id": "c1", "text": "a"}])
    hyps = write_jsonl(tmp_path / "hyps.jsonl", [{"id": "c2", "text": "a"}])
    proc = forge("score", "--refs", str(refs), "--hyps", str(hyps))
    assert proc.returncode == 2
    assert "mismatch" in proc.stderr


def test_score_missing_file_is_data_error(tmp_path):
    refs = write_jsonl(tmp_path / "refs.jsonl", [{"id": "c1", "text": "a"}])
    proc = forge("score", "--refs", str(refs), "--hyps",
                 str(tmp_path / "nope.jsonl"))
    assert proc.returncode == 2


# ---------------------------------------------------------------------------
# segment


def test_segment_writes_wavs_and_jsonl(tmp_path):
    rate = 16_000
    t = np.arange(rate * 2) / rate
    tone = (0.4 * np.sin(2 * np.pi * 330 * t) * 32767).astype(np.int16)
    gap = np.zeros(int(rate * 0.9), dtype=np.int16)
    calls = tmp_path / "calls"
    calls.mkdir()
    wavfile.write(calls / "visit.wav", rate, np.concatenate([tone, gap, tone]))

    out = tmp_path / "segments"
    proc = forge("segment", "--in", str(calls), "--out", str(out))
    assert proc.returncode == 0
    rows = [json.loads(line) for line in proc.stdout.splitlines()]
    assert len(rows) == 2
    for row in rows:
        assert (out / row["file"]).exists()
        assert row["call"].endswith("visit.wav")
        assert row["end_ms"] > row["start_ms"]


def test_segment_rejects_garbage_wav(tmp_path):
    calls = tmp_path / "calls"
    calls.mkdir()
    (calls / "bad.wav").write_bytes(b"definitely not audio")
    proc = forge("segment", "--in", str(calls), "--out", str(tmp_path / "o"))
    assert proc.returncode == 2


# ---------------------------------------------------------------------------
# transcribe / annotate / stats on the mini corpus


def test_transcribe_outputs_jsonl(mini_wavs):
    proc = forge("transcribe", "--in", str(mini_wavs),
                 "--config", str(FIXTURES / "config.json"))
    assert proc.returncode == 0
    rows = [json.loads(line) for line in proc.stdout.splitlines()]
    by_id = {r["id"]: r for r in rows}
    # clip_016 is missing from one cached manifest, so it is dropped
    assert "clip_016" not in by_id
    assert by_id["clip_001"]["transcripts"] == {
        name: "i would like to update my beneficiary information"
        for name in ("aws", "google", "ds2", "wav2vec2")}
    # sort_keys makes the output byte-deterministic; keys are alphabetical
    assert list(by_id["clip_002"]["transcripts"]) == [
        "aws", "ds2", "google", "wav2vec2"]


def test_annotate_matches_reference(mini_wavs, tmp_path):
    expected = json.loads((FIXTURES / "expected.json").read_text("utf-8"))
    out = tmp_path / "out"
    proc = forge("annotate", "--in", str(mini_wavs), "--out", str(out),
                 "--config", str(FIXTURES / "config.json"),
                 env={"CORPUSFORGE_LOG": "info"})
    assert proc.returncode == 0, proc.stderr
    summary = json.loads(proc.stdout)
    assert summary["survivors"] == len(expected["survivors"])
    assert summary["counts"]["input"] == 20
    rows = [json.loads(line) for line in
            (out / "manifest.jsonl").read_text().splitlines()]
    ids = [r["id"] for r in rows if "meta" not in r]
    assert ids == expected["survivors"]
    assert (out / "report.txt").exists()
    assert proc.stderr  # progress was logged


def test_annotate_flag_overrides_config(mini_wavs, tmp_path):
    # cap of 1 keeps a single clip from the five-strong dental cluster
    proc = forge("annotate", "--in", str(mini_wavs),
                 "--out", str(tmp_path / "out"),
                 "--config", str(FIXTURES / "config.json"),
                 "--max-per-signature", "1")
    assert proc.returncode == 0
    summary = json.loads(proc.stdout)
    expected = json.loads((FIXTURES / "expected.json").read_text("utf-8"))
    assert summary["survivors"] == len(expected["survivors"]) - 2


def test_annotate_bad_config_field_names_it(mini_wavs, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[thresholds]\nmax_err = 0.2\n", encoding="utf-8")
    proc = forge("annotate", "--in", str(mini_wavs),
                 "--out", str(tmp_path / "out"), "--config", str(bad))
    assert proc.returncode == 1
    assert "thresholds.max_err" in proc.stderr


def test_annotate_unparseable_config(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("not valid = = toml", encoding="utf-8")
    proc = forge("annotate", "--in", str(tmp_path), "--out",
                 str(tmp_path / "out"), "--config", str(bad))
    assert proc.returncode == 1


def test_annotate_config_without_committee(mini_wavs, tmp_path):
    bad = tmp_path / "empty.toml"
    bad.write_text("alpha = 0.5\n", encoding="utf-8")
    proc = forge("annotate", "--in", str(mini_wavs),
                 "--out", str(tmp_path / "out"), "--config", str(bad))
    assert proc.returncode == 1
    assert "committee" in proc.stderr


def test_annotate_toml_config(mini_wavs, tmp_path):
    # same committee as the JSON config, expressed as TOML
    config = json.loads((FIXTURES / "config.json").read_text("utf-8"))
    lines = [f"alpha = {config['alpha']}"]
    for member in config["committee"]:
        lines += ["[[committee]]",
                  f"name = \"{member['name']}\"",
                  f"priority = {member['priority']}",
                  f"trainee = {str(member['trainee']).lower()}",
                  "kind = \"cached\"",
                  f"manifest = \"{FIXTURES / member['manifest']}\""]
    toml_path = tmp_path / "committee.toml"
    toml_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    proc = forge("annotate", "--in", str(mini_wavs),
                 "--out", str(tmp_path / "out"), "--config", str(toml_path))
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["survivors"] > 0


def test_stats_on_written_manifest(mini_wavs, tmp_path):
    out = tmp_path / "out"
    forge("annotate", "--in", str(mini_wavs), "--out", str(out),
          "--config", str(FIXTURES / "config.json"))
    proc = forge("stats", "--manifest", str(out / "manifest.jsonl"))
    assert proc.returncode == 0
    stats = json.loads(proc.stdout)
    expected = json.loads((FIXTURES / "expected.json").read_text("utf-8"))
    for key, value in expected["stats"].items():
        assert stats[key] == pytest.approx(value), key


def test_stats_missing_manifest(tmp_path):
    proc = forge("stats", "--manifest", str(tmp_path / "none.jsonl"))
    assert proc.returncode == 2
