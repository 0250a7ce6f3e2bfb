#!/usr/bin/env python3
"""Table-driven recognizer stand-in speaking the JSON-lines pipe protocol.

Reads {"id", "audio_path"} objects from stdin, one per line, and answers
{"id", "transcript"} or {"id", "error"} per line, flushing each. Behavior
switches for exercising failure paths:

  --table FILE      JSON object mapping clip id -> transcript
  --default TEXT    transcript for ids missing from the table
  --error-on IDS    comma-separated ids answered with an error record
  --hang-on IDS     comma-separated ids that produce no response at all
  --crash-after N   exit(1) abruptly after N responses
  --suffix TEXT     appended to every transcript (distinguishes instances)
"""

import argparse
import json
import sys
import time


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--table")
    ap.add_argument("--default", default="")
    ap.add_argument("--error-on", default="")
    ap.add_argument("--hang-on", default="")
    ap.add_argument("--crash-after", type=int, default=0)
    ap.add_argument("--suffix", default="")
    args = ap.parse_args()

    table = {}
    if args.table:
        with open(args.table, encoding="utf-8") as fh:
            table = json.load(fh)
    error_ids = set(filter(None, args.error_on.split(",")))
    hang_ids = set(filter(None, args.hang_on.split(",")))

    answered = 0
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        clip_id = req["id"]
        if clip_id in hang_ids:
            while True:  # stall without responding; caller's timeout fires
                time.sleep(3600)
        if args.crash_after and answered >= args.crash_after:
            return 1
        if clip_id in error_ids:
            rsp = {"id": clip_id, "error": "injected failure"}
        else:
            text = table.get(clip_id, args.default or f"spoken {clip_id}")
            rsp = {"id": clip_id, "transcript": text + args.suffix}
        sys.stdout.write(json.dumps(rsp) + "\n")
        sys.stdout.flush()
        answered += 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
