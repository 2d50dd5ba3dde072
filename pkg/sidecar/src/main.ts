/**
 * Entry point. Serves an adapter over stdio (default) or TCP:
 *
 *     node dist/main.js stub
 *     node dist/main.js stub --word 0.6 --gap 0.8 --tcp 0
 *
 * Over stdio the protocol runs on stdout and logging stays on stderr.
 * Over TCP the process binds the loopback interface, prints a banner
 * ending in the bound port to stderr, and serves each connection
 * independently. Port 0 asks the kernel for a free port.
 */

import * as net from "node:net";
import * as readline from "node:readline";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { Adapter, StubAdapter } from "./adapter.js";
import { ScoreServer, ServerOptions } from "./server.js";

const USAGE = `usage: main.js <adapter> [options]

adapters:
  stub            constant probabilities, for tests and wiring checks

options:
  --word P        stub word probability (default 0.7)
  --gap P         stub gap probability (default 0.9)
  --score P       stub sentence score (default 0.5)
  --tcp PORT      serve over TCP on 127.0.0.1 instead of stdio (0 = any free port)
  --batch N       largest batch handed to the adapter (default 32)
  --diagnostics   log batch sizes and latency to stderr
`;

interface Cli {
  adapter: Adapter;
  tcpPort: number | null;
  server: ServerOptions;
}

function fail(message: string): never {
  process.stderr.write(`${message}\n${USAGE}`);
  process.exit(2);
}

function numberFlag(name: string, raw: string | undefined, fallback: number): number {
  if (raw === undefined) {
    return fallback;
  }
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    fail(`--${name} expects a number, got ${JSON.stringify(raw)}`);
  }
  return value;
}

export function parseCli(argv: string[]): Cli {
  const { values, positionals } = parseArgs({
    args: argv,
    allowPositionals: true,
    options: {
      word: { type: "string" },
      gap: { type: "string" },
      score: { type: "string" },
      tcp: { type: "string" },
      batch: { type: "string" },
      diagnostics: { type: "boolean", default: false },
    },
  });

  if (positionals.length !== 1) {
    fail("expected exactly one adapter name");
  }
  const name = positionals[0];
  if (name !== "stub") {
    fail(`unknown adapter ${JSON.stringify(name)}`);
  }

  let adapter: Adapter;
  try {
    adapter = new StubAdapter({
      word: values.word === undefined ? undefined : numberFlag("word", values.word, 0.7),
      gap: values.gap === undefined ? undefined : numberFlag("gap", values.gap, 0.9),
      score: values.score === undefined ? undefined : numberFlag("score", values.score, 0.5),
    });
  } catch (err) {
    fail(err instanceof Error ? err.message : String(err));
  }

  let tcpPort: number | null = null;
  if (values.tcp !== undefined) {
    tcpPort = numberFlag("tcp", values.tcp, 0);
    if (!Number.isInteger(tcpPort) || tcpPort < 0 || tcpPort > 65535) {
      fail(`--tcp expects a port in 0..65535, got ${values.tcp}`);
    }
  }

  const batchWindow = numberFlag("batch", values.batch, 32);
  if (!Number.isInteger(batchWindow) || batchWindow < 1) {
    fail(`--batch expects a positive integer, got ${values.batch}`);
  }

  const server: ServerOptions = { batchWindow };
  if (values.diagnostics) {
    server.diagnostics = (line) => process.stderr.write(line + "\n");
  }
  return { adapter, tcpPort, server };
}

function serveStream(
  cli: Cli,
  input: NodeJS.ReadableStream,
  write: (line: string) => void,
  onEnd: () => void,
): void {
  const server = new ScoreServer(cli.adapter, write, cli.server);
  server.start();
  const rl = readline.createInterface({ input, terminal: false });
  rl.on("line", (line) => server.handleLine(line));
  rl.on("close", () => {
    server.end();
    onEnd();
  });
}

function serveStdio(cli: Cli): void {
  serveStream(
    cli,
    process.stdin,
    (line) => process.stdout.write(line + "\n"),
    () => {
      // Nothing to do: with stdin closed and the queue drained the
      // event loop empties and the process exits on its own.
    },
  );
}

function serveTcp(cli: Cli, port: number): void {
  const listener = net.createServer((socket) => {
    socket.on("error", () => socket.destroy());
    serveStream(
      cli,
      socket,
      (line) => socket.write(line + "\n"),
      () => socket.end(),
    );
  });
  listener.listen(port, "127.0.0.1", () => {
    const address = listener.address() as net.AddressInfo;
    process.stderr.write(`listening on ${address.port}\n`);
  });
}

function main(): void {
  const cli = parseCli(process.argv.slice(2));
  if (cli.tcpPort === null) {
    serveStdio(cli);
  } else {
    serveTcp(cli, cli.tcpPort);
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
