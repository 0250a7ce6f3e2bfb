import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, afterEach, beforeAll, describe, expect, it } from "vitest";

import { parseRequest, serializeResponse } from "../src/protocol.js";
import { loadTable } from "../src/table.js";
import { respond } from "../src/mock-recognizer.js";
import { MockProcess } from "./helpers.js";

let dir: string;
let tablePath: string;
let wavPath: (name: string) => string;
let proc: MockProcess | null = null;

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "adapter-ref-"));
  wavPath = (name) => join(dir, name);
  for (let i = 1; i <= 10; i++) {
    writeFileSync(wavPath(`greet_${String(i).padStart(2, "0")}.wav`), "RIFF");
  }
  writeFileSync(wavPath("gone_01.wav"), "RIFF"); // deleted below
  tablePath = join(dir, "table.json");
  const clips: Record<string, string> = {
    "gone_01.wav": "this file will be unreadable",
  };
  for (let i = 1; i <= 10; i++) {
    clips[`greet_${String(i).padStart(2, "0")}.wav`] =
      `hello caller number ${i}`;
  }
  writeFileSync(
    tablePath,
    JSON.stringify({
      clips,
      errors: { "broken_03.wav": "decode_failed" },
      timeouts: ["hang_07.wav"],
    }),
  );
  rmSync(wavPath("gone_01.wav"));
});

afterEach(async () => {
  if (proc) {
    await proc.terminate().catch(() => undefined);
    proc = null;
  }
});

afterAll(() => {
  rmSync(dir, { recursive: true, force: true });
});

describe("protocol codec", () => {
  it("round-trips a request", () => {
    const line = JSON.stringify({ id: "c1", audio_path: "/a/c1.wav" });
    expect(parseRequest(line)).toEqual({ id: "c1", audio_path: "/a/c1.wav" });
  });

  it("rejects junk without throwing", () => {
    expect(parseRequest("not json")).toBeNull();
    expect(parseRequest("42")).toBeNull();
    expect(parseRequest('{"id": 7, "audio_path": "x"}')).toBeNull();
    expect(parseRequest('{"id": "c1"}')).toBeNull();
  });

  it("serializes one line per response", () => {
    expect(serializeResponse({ id: "c1", transcript: "hi" })).toBe(
      '{"id":"c1","transcript":"hi"}\n',
    );
  });
});

describe("table lookup", () => {
  it("answers from the table, injects errors, swallows timeouts", () => {
    const table = loadTable(tablePath);
    expect(respond(table, "a", wavPath("greet_01.wav"))).toEqual({
      id: "a",
      transcript: "hello caller number 1",
    });
    expect(respond(table, "b", wavPath("broken_03.wav"))).toEqual({
      id: "b",
      error: "decode_failed",
    });
    expect(respond(table, "c", wavPath("hang_07.wav"))).toBeNull();
    expect(respond(table, "d", wavPath("mystery.wav"))).toEqual({
      id: "d",
      error: "no_entry",
    });
    expect(respond(table, "e", wavPath("gone_01.wav"))).toEqual({
      id: "e",
      error: "missing_file",
    });
  });

  it("rejects malformed tables", () => {
    const bad = join(dir, "bad-table.json");
    writeFileSync(bad, JSON.stringify({ clips: { "x.wav": 7 } }));
    expect(() => loadTable(bad)).toThrow(/not a string/);
    writeFileSync(bad, JSON.stringify({ timeouts: "x.wav" }));
    expect(() => loadTable(bad)).toThrow(/array of strings/);
  });
});

describe("mock recognizer process", () => {
  it("answers 10 pipelined requests, ids matched, order-agnostic", async () => {
    proc = new MockProcess(tablePath);
    const ids = Array.from({ length: 10 }, (_, i) => `req_${i}`);
    proc.send(
      ...ids.map((id, i) => ({
        id,
        audio_path: wavPath(`greet_${String(i + 1).padStart(2, "0")}.wav`),
      })),
    );
    const responses = await proc.waitFor(10);
    expect(new Set(responses.map((r) => r.id))).toEqual(new Set(ids));
    for (const [i, id] of ids.entries()) {
      const match = responses.find((r) => r.id === id);
      expect(match?.transcript).toBe(`hello caller number ${i + 1}`);
    }
    expect(await proc.settled(10)).toBe(true); // exactly one response per id
  });

  it("recovers after an injected error response", async () => {
    proc = new MockProcess(tablePath);
    proc.send(
      { id: "bad", audio_path: wavPath("broken_03.wav") },
      { id: "good", audio_path: wavPath("greet_02.wav") },
    );
    const responses = await proc.waitFor(2);
    expect(responses).toContainEqual({ id: "bad", error: "decode_failed" });
    expect(responses).toContainEqual({
      id: "good",
      transcript: "hello caller number 2",
    });
  });

  it("never answers an injected timeout but keeps serving", async () => {
    proc = new MockProcess(tablePath);
    proc.send({ id: "hung", audio_path: wavPath("hang_07.wav") });
    expect(await proc.settled(0, 250)).toBe(true);
    proc.send({ id: "after", audio_path: wavPath("greet_05.wav") });
    const responses = await proc.waitFor(1);
    expect(responses[0]).toEqual({
      id: "after",
      transcript: "hello caller number 5",
    });
    expect(responses.some((r) => r.id === "hung")).toBe(false);
  });

  it("reports a missing audio file and stays up", async () => {
    proc = new MockProcess(tablePath);
    proc.send({ id: "m1", audio_path: wavPath("gone_01.wav") });
    const [first] = await proc.waitFor(1);
    expect(first).toEqual({ id: "m1", error: "missing_file" });
    proc.send({ id: "m2", audio_path: wavPath("greet_01.wav") });
    const responses = await proc.waitFor(2);
    expect(responses[1]).toEqual({
      id: "m2",
      transcript: "hello caller number 1",
    });
  });

  it("ignores malformed request lines without desyncing", async () => {
    proc = new MockProcess(tablePath);
    proc.sendRaw("this is not a request");
    proc.sendRaw('{"id": 99}');
    proc.send({ id: "ok", audio_path: wavPath("greet_09.wav") });
    const responses = await proc.waitFor(1);
    expect(responses).toEqual([
      { id: "ok", transcript: "hello caller number 9" },
    ]);
    expect(proc.stderrLines.length).toBe(2);
  });

  it("exits cleanly on SIGTERM", async () => {
    proc = new MockProcess(tablePath);
    proc.send({ id: "x", audio_path: wavPath("greet_01.wav") });
    await proc.waitFor(1);
    const { code } = await proc.terminate();
    expect(code).toBe(0);
    proc = null;
  });

  it("exits when stdin closes", async () => {
    proc = new MockProcess(tablePath);
    proc.send({ id: "x", audio_path: wavPath("greet_01.wav") });
    await proc.waitFor(1);
    await proc.endInput();
    expect(proc.child.exitCode).toBe(0);
    proc = null;
  });
});
