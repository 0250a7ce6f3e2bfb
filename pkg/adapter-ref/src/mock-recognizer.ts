/**
 * Table-driven mock recognizer.
 *
 * Speaks the adapter wire protocol on stdin/stdout so driver code can be
 * tested without any model download: transcripts come from a JSON lookup
 * table keyed by audio basename (see table.ts), which doubles as the
 * failure-injection surface. Single-threaded on purpose — the driver owns
 * parallelism by running one process per committee member.
 *
 *   node dist/mock-recognizer.js --table fixtures/table.json
 */

import { accessSync, constants } from "node:fs";
import { basename } from "node:path";
import { createInterface } from "node:readline";
import { parseArgs } from "node:util";

import { parseRequest, serializeResponse, AdapterResponse } from "./protocol.js";
import { loadTable, MockTable } from "./table.js";

export function respond(table: MockTable, id: string, audioPath: string):
    AdapterResponse | null {
  const key = basename(audioPath);
  if (table.timeouts.has(key)) {
    return null; // injected hang: the driver's timeout must recover
  }
  const injected = table.errors[key];
  if (injected !== undefined) {
    return { id, error: injected };
  }
  const transcript = table.clips[key];
  if (transcript === undefined) {
    return { id, error: "no_entry" };
  }
  try {
    accessSync(audioPath, constants.R_OK);
  } catch {
    return { id, error: "missing_file" };
  }
  return { id, transcript };
}

function main(): void {
  const { values } = parseArgs({
    options: { table: { type: "string" } },
  });
  if (!values.table) {
    process.stderr.write("usage: mock-recognizer --table <table.json>\n");
    process.exit(2);
  }
  const table = loadTable(values.table);

  process.on("SIGTERM", () => process.exit(0));
  process.on("SIGINT", () => process.exit(0));

  const rl = createInterface({ input: process.stdin });
  rl.on("line", (line) => {
    if (line.trim() === "") return;
    const request = parseRequest(line);
    if (request === null) {
      // malformed input must not kill the process or desync the stream
      process.stderr.write(`mock-recognizer: ignoring bad request line\n`);
      return;
    }
    const response = respond(table, request.id, request.audio_path);
    if (response !== null) {
      process.stdout.write(serializeResponse(response));
    }
  });
  rl.on("close", () => process.exit(0));
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("mock-recognizer.js")) {
  main();
}
