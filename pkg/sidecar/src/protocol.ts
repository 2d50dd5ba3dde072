/**
 * Wire format: one JSON object per line, UTF-8, no pretty-printing.
 *
 * The process announces itself once with {"protocol": 1, "capabilities":
 * [...]}. After that every line is a request {id, kind, source, hypothesis}
 * and is answered by exactly one response carrying the same id: word and
 * gap probabilities for kind "tokens", a single score for kind "sentence",
 * or {id, code, message} when the request cannot be served. Responses may
 * be written in any order; the engine matches them by id.
 */

export const PROTOCOL_VERSION = 1;

export type Kind = "tokens" | "sentence";

export interface ScoreRequest {
  id: number;
  kind: Kind;
  /** Source tokens (whitespace-split from the wire string). */
  source: string[];
  /** Hypothesis tokens; their count fixes the response shape. */
  hypothesis: string[];
}

export interface TokenResponse {
  id: number;
  /** One probability per hypothesis token. */
  word_probs: number[];
  /** One probability per gap, including before the first token. */
  gap_probs: number[];
}

export interface SentenceResponse {
  id: number;
  /** Sentence-level quality in (0, 1]. */
  score: number;
}

export interface ErrorResponse {
  id: number;
  code: string;
  message: string;
}

export type ScoreResponse = TokenResponse | SentenceResponse | ErrorResponse;

/**
 * Request that could not be parsed or served. The id is the offending
 * request's id when it could be recovered, otherwise -1.
 */
export class ProtocolError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly id: number = -1,
  ) {
    super(message);
    this.name = "ProtocolError";
  }
}

/** Split on whitespace the way the engine tokenizes: no empty tokens. */
export function splitTokens(text: string): string[] {
  return text.split(/\s+/).filter((token) => token.length > 0);
}

function preview(line: string): string {
  return line.length > 80 ? line.slice(0, 77) + "..." : line;
}

/** Parse one request line, throwing ProtocolError on anything off-spec. */
export function parseRequest(line: string): ScoreRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch {
    throw new ProtocolError("bad-json", `not valid JSON: ${preview(line)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ProtocolError("bad-request", `expected a JSON object: ${preview(line)}`);
  }
  const msg = raw as Record<string, unknown>;

  const id = msg.id;
  if (typeof id !== "number" || !Number.isInteger(id)) {
    throw new ProtocolError("bad-request", `request id must be an integer: ${preview(line)}`);
  }

  const kind = msg.kind;
  if (kind !== "tokens" && kind !== "sentence") {
    throw new ProtocolError("bad-request", `unknown kind ${JSON.stringify(kind)}`, id);
  }
  if (typeof msg.source !== "string") {
    throw new ProtocolError("bad-request", "source must be a string", id);
  }
  if (typeof msg.hypothesis !== "string") {
    throw new ProtocolError("bad-request", "hypothesis must be a string", id);
  }

  return {
    id,
    kind,
    source: splitTokens(msg.source),
    hypothesis: splitTokens(msg.hypothesis),
  };
}

export function errorResponse(err: ProtocolError): ErrorResponse {
  return { id: err.id, code: err.code, message: err.message };
}

export function helloLine(capabilities: readonly Kind[]): string {
  return JSON.stringify({ protocol: PROTOCOL_VERSION, capabilities });
}
