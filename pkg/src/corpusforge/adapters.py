"""Recognizer adapters: uniform access to ASR systems for the committee.

Three built-ins cover the deployment shapes we need without cloud SDKs:
a cached-manifest adapter (pre-collected transcripts, e.g. commercial API
output), a subprocess adapter speaking one JSON object per line over
stdin/stdout, and an HTTP adapter POSTing audio bytes.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple


@dataclass(frozen=True, order=True)
class RecognizerId:
    """Committee member identity. Lower priority rank wins ties."""

    name: str
    priority: int
    trainee: bool = False


@dataclass(frozen=True)
class TranscriptResult:
    clip_id: str
    text: Optional[str] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.text is not None


# item = (clip_id, audio_path)
Item = Tuple[str, str]


class RecognizerAdapter:
    """Base contract: transcribe a batch of clips, never raise per-clip."""

    recognizer: RecognizerId

    def transcribe(self, items: Sequence[Item]) -> Dict[str, TranscriptResult]:
        raise NotImplementedError


class CachedManifestAdapter(RecognizerAdapter):
    """Serve transcripts from a JSON-lines file of {"id", "transcript"}.

    Stands in for commercial recognizers whose output was collected once
    and reused across pipeline iterations.
    """

    def __init__(self, recognizer: RecognizerId, manifest_path):
        self.recognizer = recognizer
        self.manifest_path = str(manifest_path)
        self._table: Dict[str, str] = {}
        for line_no, line in enumerate(
                Path(manifest_path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(
                    f"{manifest_path}:{line_no}: bad JSON: {exc}") from exc
            if set(rec) == {"meta"}:
                # header line of a pipeline output manifest reused as input
                continue
            if "id" not in rec:
                raise ValueError(f"{manifest_path}:{line_no}: missing 'id'")
            self._table[rec["id"]] = rec.get("transcript", rec.get("text", ""))

    def transcribe(self, items: Sequence[Item]) -> Dict[str, TranscriptResult]:
        out = {}
        for clip_id, _ in items:
            if clip_id in self._table:
                out[clip_id] = TranscriptResult(clip_id, text=self._table[clip_id])
            else:
                out[clip_id] = TranscriptResult(
                    clip_id, error="not in cached manifest")
        return out


class SubprocessAdapter(RecognizerAdapter):
    """Drive a recognizer child process over a JSON-lines pipe.

    Requests {"id", "audio_path"} go to its stdin one per line; responses
    {"id", "transcript"} or {"id", "error"} come back one per line in any
    order. Both sides flush per line. Each response must arrive within
    timeout_s of the previous one or the remaining clips are failed and the
    child is killed.
    """

    def __init__(self, recognizer: RecognizerId, argv: Sequence[str],
                 timeout_s: float = 60.0):
        self.recognizer = recognizer
        self.argv = list(argv)
        self.timeout_s = timeout_s

    def transcribe(self, items: Sequence[Item]) -> Dict[str, TranscriptResult]:
        if not items:
            return {}
        try:
            proc = subprocess.Popen(
                self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL, text=True, bufsize=1)
        except OSError as exc:
            return {cid: TranscriptResult(cid, error=f"spawn failed: {exc}")
                    for cid, _ in items}

        lines: "queue.Queue[Optional[str]]" = queue.Queue()

        def reader():
            for line in proc.stdout:
                lines.put(line)
            lines.put(None)

        def writer():
            try:
                for clip_id, audio_path in items:
                    proc.stdin.write(json.dumps(
                        {"id": clip_id, "audio_path": audio_path}) + "\n")
                    proc.stdin.flush()
                proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass

        threading.Thread(target=reader, daemon=True).start()
        threading.Thread(target=writer, daemon=True).start()

        pending = {cid for cid, _ in items}
        results: Dict[str, TranscriptResult] = {}
        failure = None
        while pending and failure is None:
            try:
                line = lines.get(timeout=self.timeout_s)
            except queue.Empty:
                failure = f"no response within {self.timeout_s}s"
                break
            if line is None:
                failure = "child closed stdout early"
                break
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                clip_id = rec["id"]
            except (json.JSONDecodeError, KeyError, TypeError):
                failure = f"malformed response line: {line[:200]}"
                break
            if clip_id not in pending:
                continue  # duplicate or unknown id; ignore
            pending.discard(clip_id)
            if "transcript" in rec:
                results[clip_id] = TranscriptResult(
                    clip_id, text=str(rec["transcript"]))
            else:
                results[clip_id] = TranscriptResult(
                    clip_id, error=str(rec.get("error", "unspecified error")))
        for clip_id in pending:
            results[clip_id] = TranscriptResult(
                clip_id, error=failure or "no response")
        if proc.poll() is None:
            proc.terminate()
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
        return results


class HttpAdapter(RecognizerAdapter):
    """POST audio bytes to a recognition endpoint.

    Expects a JSON response {"id", "transcript"} or {"id", "error"}.
    """

    def __init__(self, recognizer: RecognizerId, url: str,
                 timeout_s: float = 60.0):
        self.recognizer = recognizer
        self.url = url
        self.timeout_s = timeout_s

    def transcribe(self, items: Sequence[Item]) -> Dict[str, TranscriptResult]:
        results = {}
        for clip_id, audio_path in items:
            try:
                payload = Path(audio_path).read_bytes()
            except OSError as exc:
                results[clip_id] = TranscriptResult(
                    clip_id, error=f"unreadable audio: {exc}")
                continue
            req = urllib.request.Request(
                self.url, data=payload,
                headers={"Content-Type": "audio/wav",
                         "X-Clip-Id": clip_id},
                method="POST")
            try:
                with urllib.request.urlopen(req, timeout=self.timeout_s) as rsp:
                    rec = json.loads(rsp.read().decode("utf-8"))
            except (urllib.error.URLError, OSError, ValueError) as exc:
                results[clip_id] = TranscriptResult(clip_id, error=str(exc))
                continue
            if "transcript" in rec:
                results[clip_id] = TranscriptResult(
                    clip_id, text=str(rec["transcript"]))
            else:
                results[clip_id] = TranscriptResult(
                    clip_id, error=str(rec.get("error", "unspecified error")))
        return results


def load_adapters(specs: List[dict]) -> List[RecognizerAdapter]:
    """Build adapters from config records.

    Each spec: {"name", "priority", "trainee"?, "kind": "cached"|"subprocess"|"http",
    plus kind-specific fields "manifest" | "argv" (+"timeout_s") | "url"}.
    """
    adapters: List[RecognizerAdapter] = []
    for spec in specs:
        try:
            rec = RecognizerId(name=spec["name"], priority=int(spec["priority"]),
                               trainee=bool(spec.get("trainee", False)))
            kind = spec["kind"]
            if kind == "cached":
                adapters.append(CachedManifestAdapter(rec, spec["manifest"]))
            elif kind == "subprocess":
                adapters.append(SubprocessAdapter(
                    rec, spec["argv"], float(spec.get("timeout_s", 60.0))))
            elif kind == "http":
                adapters.append(HttpAdapter(
                    rec, spec["url"], float(spec.get("timeout_s", 60.0))))
            else:
                raise ValueError(f"unknown adapter kind: {kind!r}")
        except KeyError as exc:
            raise ValueError(f"adapter spec missing field {exc}") from exc
    names = [a.recognizer.name for a in adapters]
    priorities = [a.recognizer.priority for a in adapters]
    if len(set(names)) != len(names):
        raise ValueError("adapter names must be unique")
    if len(set(priorities)) != len(priorities):
        raise ValueError("adapter priorities must be unique")
    return adapters
