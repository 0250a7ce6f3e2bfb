/**
 * Recognizer-adapter wire protocol.
 *
 * One JSON object per line over stdin/stdout. The driver sends
 *   {"id": "...", "audio_path": "/abs/clip.wav"}
 * and gets back exactly one of
 *   {"id": "...", "transcript": "..."}
 *   {"id": "...", "error": "..."}
 * per request id, flushed per line, in any order. Requests may be
 * pipelined arbitrarily deep.
 */

export interface AdapterRequest {
  id: string;
  audio_path: string;
}

export type AdapterResponse =
  | { id: string; transcript: string }
  | { id: string; error: string };

/** Parse one request line; null for anything that is not a valid request. */
export function parseRequest(line: string): AdapterRequest | null {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof value !== "object" || value === null) return null;
  const rec = value as Record<string, unknown>;
  if (typeof rec.id !== "string" || typeof rec.audio_path !== "string") {
    return null;
  }
  return { id: rec.id, audio_path: rec.audio_path };
}

export function serializeResponse(response: AdapterResponse): string {
  return JSON.stringify(response) + "\n";
}
