/**
 * Line-level server core, transport-agnostic: the caller feeds it input
 * lines and gives it a sink for output lines. Used by main.ts over stdio
 * and per-connection over TCP.
 *
 * Requests are queued and handed to the adapter in batches. A flush is
 * scheduled on the next event-loop turn, so requests that arrive together
 * (a pipelining client) share adapter calls up to the batch window, while
 * a lockstep client still gets an answer per turn. Malformed lines are
 * answered immediately with an error response and never stall the queue.
 */

import {
  Adapter,
} from "./adapter.js";
import {
  ProtocolError,
  ScoreRequest,
  errorResponse,
  helloLine,
  parseRequest,
} from "./protocol.js";

export interface ServerOptions {
  /** Largest batch handed to the adapter in one call. */
  batchWindow?: number;
  /** Log batch sizes and adapter latency to the given sink. */
  diagnostics?: (line: string) => void;
}

export const DEFAULT_BATCH_WINDOW = 32;

export class ScoreServer {
  private readonly adapter: Adapter;
  private readonly write: (line: string) => void;
  private readonly batchWindow: number;
  private readonly diagnostics?: (line: string) => void;
  private queue: ScoreRequest[] = [];
  private flushScheduled = false;

  constructor(adapter: Adapter, write: (line: string) => void, options: ServerOptions = {}) {
    this.adapter = adapter;
    this.write = write;
    this.batchWindow = options.batchWindow ?? DEFAULT_BATCH_WINDOW;
    if (!Number.isInteger(this.batchWindow) || this.batchWindow < 1) {
      throw new RangeError(`batch window must be a positive integer, got ${this.batchWindow}`);
    }
    this.diagnostics = options.diagnostics;
  }

  /** Announce protocol version and capabilities. Call once per stream. */
  start(): void {
    this.write(helloLine(this.adapter.capabilities));
  }

  /** Accept one input line; schedules an asynchronous flush. */
  handleLine(line: string): void {
    if (line.trim().length === 0) {
      return;
    }
    try {
      this.queue.push(parseRequest(line));
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.write(JSON.stringify(errorResponse(err)));
        return;
      }
      throw err;
    }
    if (!this.flushScheduled) {
      this.flushScheduled = true;
      setImmediate(() => {
        this.flushScheduled = false;
        this.flush();
      });
    }
  }

  /** Drain the queue now, in windows. Called on shutdown and by the scheduler. */
  flush(): void {
    while (this.queue.length > 0) {
      const batch = this.queue.splice(0, this.batchWindow);
      const started = process.hrtime.bigint();
      let responses;
      try {
        responses = this.adapter.scoreBatch(batch);
      } catch (err) {
        const message = err instanceof Error ? err.message : String(err);
        for (const request of batch) {
          this.write(
            JSON.stringify(errorResponse(new ProtocolError("adapter-error", message, request.id))),
          );
        }
        continue;
      }
      for (const response of responses) {
        this.write(JSON.stringify(response));
      }
      if (this.diagnostics) {
        const elapsedMs = Number(process.hrtime.bigint() - started) / 1e6;
        this.diagnostics(`batch=${batch.length} latency_ms=${elapsedMs.toFixed(3)}`);
      }
    }
  }

  /** End of input: answer whatever is still queued. */
  end(): void {
    this.flush();
  }
}
