/**
 * The pipeline must not care whether committee hypotheses arrive from a
 * cached manifest or from live subprocess adapters: an annotate run driven
 * by mock recognizer processes (tables built from the same hypotheses) has
 * to produce the same manifest, stage decisions, and stats.
 */

import { execFileSync } from "node:child_process";
import {
  mkdtempSync,
  mkdirSync,
  readFileSync,
  rmSync,
  writeFileSync,
} from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { beforeAll, afterAll, describe, expect, it } from "vitest";

import { MOCK_JS, PKG_DIR } from "./helpers.js";

const REPO_ROOT = dirname(PKG_DIR);
const FIXTURES = join(REPO_ROOT, "tests", "fixtures", "mini_corpus");

interface CommitteeMember {
  name: string;
  priority: number;
  trainee?: boolean;
  [key: string]: unknown;
}

let dir: string;
let outCached: string;
let outSubprocess: string;

function python(...argv: string[]): void {
  execFileSync("python3", argv, { cwd: REPO_ROOT, stdio: "pipe" });
}

function readJsonl(path: string): Array<Record<string, unknown>> {
  return readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line));
}

beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "annotate-eq-"));
  const wavDir = join(dir, "wavs");
  mkdirSync(wavDir);
  python(
    "-c",
    'import sys; from pathlib import Path; sys.path.insert(0, "scripts"); ' +
      "from make_mini_corpus import synthesize_wavs; " +
      "synthesize_wavs(Path(sys.argv[1]))",
    wavDir,
  );

  const config = JSON.parse(readFileSync(join(FIXTURES, "config.json"), "utf-8"));
  const cachedMembers: CommitteeMember[] = config.committee;

  const subprocessMembers = cachedMembers.map((member) => {
    const hyps = readJsonl(join(FIXTURES, member.manifest as string));
    const clips: Record<string, string> = {};
    for (const row of hyps) {
      clips[`${row.id as string}.wav`] = row.transcript as string;
    }
    const tablePath = join(dir, `table_${member.name}.json`);
    writeFileSync(tablePath, JSON.stringify({ clips }));
    return {
      name: member.name,
      priority: member.priority,
      trainee: member.trainee ?? false,
      kind: "subprocess",
      argv: [process.execPath, MOCK_JS, "--table", tablePath],
      timeout_s: 30.0,
    };
  });

  const cachedConfig = {
    ...config,
    committee: cachedMembers.map((member) => ({
      ...member,
      manifest: join(FIXTURES, member.manifest as string),
    })),
  };
  const subprocessConfig = { ...config, committee: subprocessMembers };
  writeFileSync(join(dir, "cached.json"), JSON.stringify(cachedConfig));
  writeFileSync(join(dir, "subprocess.json"), JSON.stringify(subprocessConfig));

  outCached = join(dir, "out_cached");
  outSubprocess = join(dir, "out_subprocess");
  for (const [cfg, out] of [
    ["cached.json", outCached],
    ["subprocess.json", outSubprocess],
  ] as const) {
    python(
      "-m",
      "corpusforge.cli",
      "annotate",
      "--in",
      wavDir,
      "--out",
      out,
      "--config",
      join(dir, cfg),
    );
  }
});

afterAll(() => {
  rmSync(dir, { recursive: true, force: true });
});

describe("annotate with subprocess mocks vs cached manifests", () => {
  it("produces a byte-identical manifest modulo the header timestamp", () => {
    const cached = readFileSync(join(outCached, "manifest.jsonl"), "utf-8")
      .split("\n");
    const live = readFileSync(join(outSubprocess, "manifest.jsonl"), "utf-8")
      .split("\n");
    expect(live.slice(1)).toEqual(cached.slice(1));
    const metaCached = JSON.parse(cached[0]).meta;
    const metaLive = JSON.parse(live[0]).meta;
    expect(metaLive.config_hash).toBe(metaCached.config_hash);
    expect(metaLive.iteration).toBe(metaCached.iteration);
  });

  it("keeps the reference survivor set", () => {
    const expected = JSON.parse(
      readFileSync(join(FIXTURES, "expected.json"), "utf-8"),
    );
    const survivors = readJsonl(join(outSubprocess, "manifest.jsonl"))
      .slice(1)
      .map((row) => row.id);
    expect(survivors).toEqual(expected.survivors);
  });

  it("makes the same stage decision for every rejected clip", () => {
    const stageMap = (path: string) =>
      Object.fromEntries(
        readJsonl(path).map((row) => [row.id as string, row.stage as string]),
      );
    expect(stageMap(join(outSubprocess, "rejected.jsonl"))).toEqual(
      stageMap(join(outCached, "rejected.jsonl")),
    );
  });

  it("reports identical corpus stats", () => {
    const cached = readFileSync(join(outCached, "stats.json"), "utf-8");
    const live = readFileSync(join(outSubprocess, "stats.json"), "utf-8");
    expect(live).toBe(cached);
  });
});
