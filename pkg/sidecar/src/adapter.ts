/**
 * Scoring adapters. An adapter owns the model side of the sidecar; the
 * server owns the wire. Requests reach the adapter already parsed and in
 * batches, so a model-backed implementation can run one forward pass per
 * batch instead of per sentence.
 *
 * A transformer adapter follows the same shape as the stub below: declare
 * the capabilities, then fill in word_probs and gap_probs per request.
 * Such a model usually segments words into subword pieces; collapse its
 * per-piece probabilities back to whole words with firstSubwordProbs
 * before putting them on the wire, since the protocol counts whitespace
 * tokens, not pieces.
 */

import {
  Kind,
  ProtocolError,
  ScoreRequest,
  ScoreResponse,
} from "./protocol.js";

export interface Adapter {
  /** Capabilities announced in the hello line; the engine prefers "tokens". */
  readonly capabilities: readonly Kind[];
  /** One response per request, in request order. */
  scoreBatch(batch: readonly ScoreRequest[]): ScoreResponse[];
}

export interface StubOptions {
  word?: number;
  gap?: number;
  score?: number;
}

/**
 * Deterministic constant scorer for integration tests. Every word gets
 * the same probability, every gap gets the same probability, and every
 * sentence request gets the same score, so the engine's aggregate values
 * can be computed by hand.
 */
export class StubAdapter implements Adapter {
  readonly capabilities: readonly Kind[] = ["tokens", "sentence"];
  private readonly word: number;
  private readonly gap: number;
  private readonly score: number;

  constructor(options: StubOptions = {}) {
    this.word = options.word ?? 0.7;
    this.gap = options.gap ?? 0.9;
    this.score = options.score ?? 0.5;
    for (const [name, value] of [
      ["word", this.word],
      ["gap", this.gap],
      ["score", this.score],
    ] as const) {
      if (!(value > 0 && value <= 1)) {
        throw new RangeError(`stub ${name} must be in (0, 1], got ${value}`);
      }
    }
  }

  scoreBatch(batch: readonly ScoreRequest[]): ScoreResponse[] {
    return batch.map((request) => {
      if (request.kind === "sentence") {
        return { id: request.id, score: this.score };
      }
      const m = request.hypothesis.length;
      return {
        id: request.id,
        word_probs: new Array<number>(m).fill(this.word),
        gap_probs: new Array<number>(m + 1).fill(this.gap),
      };
    });
  }
}

/** One subword piece as produced by a model tokenizer. */
export interface SubwordProb {
  /** True when this piece starts a new whitespace-level word. */
  wordStart: boolean;
  /** Model probability that the piece is correct. */
  prob: number;
}

/**
 * Collapse per-piece probabilities to per-word probabilities by keeping
 * the probability of each word's first piece and masking the rest. The
 * result has one entry per word-start piece, in order.
 */
export function firstSubwordProbs(pieces: readonly SubwordProb[]): number[] {
  if (pieces.length > 0 && !pieces[0].wordStart) {
    throw new ProtocolError("bad-segmentation", "first subword piece must start a word");
  }
  return pieces.filter((piece) => piece.wordStart).map((piece) => piece.prob);
}
