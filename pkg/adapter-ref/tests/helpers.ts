/**
 * Minimal driver for protocol tests: spawns one mock recognizer and lets a
 * test pipeline requests and await responses by id.
 */

import { ChildProcess, spawn } from "node:child_process";
import { once } from "node:events";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { createInterface } from "node:readline";

export const PKG_DIR = dirname(dirname(fileURLToPath(import.meta.url)));
export const MOCK_JS = join(PKG_DIR, "dist", "mock-recognizer.js");

export interface WireResponse {
  id?: string;
  transcript?: string;
  error?: string;
}

export class MockProcess {
  readonly child: ChildProcess;
  readonly responses: WireResponse[] = [];
  readonly stderrLines: string[] = [];
  private waiters: Array<() => void> = [];

  constructor(tablePath: string) {
    this.child = spawn(process.execPath, [MOCK_JS, "--table", tablePath], {
      stdio: ["pipe", "pipe", "pipe"],
    });
    createInterface({ input: this.child.stdout! }).on("line", (line) => {
      this.responses.push(JSON.parse(line));
      const waiters = this.waiters;
      this.waiters = [];
      for (const wake of waiters) wake();
    });
    createInterface({ input: this.child.stderr! }).on("line", (line) => {
      this.stderrLines.push(line);
    });
  }

  /** Write request lines without waiting for anything (pipelining). */
  send(...requests: Array<{ id: string; audio_path: string }>): void {
    for (const request of requests) {
      this.child.stdin!.write(JSON.stringify(request) + "\n");
    }
  }

  sendRaw(line: string): void {
    this.child.stdin!.write(line + "\n");
  }

  /** Resolve once n responses have arrived, or reject after timeoutMs. */
  waitFor(n: number, timeoutMs = 5000): Promise<WireResponse[]> {
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error(`timed out with ${this.responses.length}/${n}`)),
        timeoutMs,
      );
      const check = () => {
        if (this.responses.length >= n) {
          clearTimeout(timer);
          resolve(this.responses.slice());
        } else {
          this.waiters.push(check);
        }
      };
      check();
    });
  }

  /** True if no further response lands within graceMs. */
  async settled(n: number, graceMs = 300): Promise<boolean> {
    await new Promise((r) => setTimeout(r, graceMs));
    return this.responses.length === n;
  }

  async terminate(): Promise<{ code: number | null; signal: string | null }> {
    this.child.kill("SIGTERM");
    const [code, signal] = (await once(this.child, "exit")) as [
      number | null,
      string | null,
    ];
    return { code, signal };
  }

  async endInput(): Promise<void> {
    this.child.stdin!.end();
    if (this.child.exitCode === null) await once(this.child, "exit");
  }
}
