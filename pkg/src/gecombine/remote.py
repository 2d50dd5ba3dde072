"""Client for external scorer processes speaking newline-delimited JSON.

On startup the scorer process announces itself with a hello line,
{"protocol": 1, "capabilities": [...]}, then answers each request

    {"id": 7, "kind": "tokens", "source": "...", "hypothesis": "..."}

with either token probabilities ({"id": 7, "word_probs": [...],
"gap_probs": [...]}), a sentence score ({"id": 7, "score": 0.5}), or an
error ({"id": 7, "code": "...", "message": "..."}). Responses may arrive
in any order; the client matches them by id. Anything that breaks the
protocol (dead process, unknown id, malformed JSON, bad shapes) raises
ScorerFailure rather than degrading silently.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from typing import Sequence

from gecombine.edits import LabelVector
from gecombine.errors import ScorerFailure
from gecombine.scoring import Scorer, aggregate_q

__all__ = ["ExternalScorer", "connect"]

PROTOCOL_VERSION = 1


class _StdioTransport:
    def __init__(self, command: Sequence[str]):
        self.name = f"stdio:{' '.join(command)}"
        try:
            self.proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ScorerFailure(f"cannot start scorer process {command!r}: {exc}") from exc

    def send_line(self, line: str) -> None:
        try:
            assert self.proc.stdin is not None
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise ScorerFailure(f"scorer process closed its input: {exc}") from exc

    def recv_line(self) -> str:
        assert self.proc.stdout is not None
        line = self.proc.stdout.readline()
        if not line:
            code = self.proc.poll()
            raise ScorerFailure(f"scorer process ended (exit status {code})")
        return line

    def close(self) -> None:
        if self.proc.stdin is not None:
            try:
                self.proc.stdin.close()
            except OSError:
                pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self.proc.kill()
            self.proc.wait()


class _TcpTransport:
    def __init__(self, host: str, port: int):
        self.name = f"tcp:{host}:{port}"
        try:
            self.sock = socket.create_connection((host, port), timeout=30)
        except OSError as exc:
            raise ScorerFailure(f"cannot connect to scorer at {host}:{port}: {exc}") from exc
        self.reader = self.sock.makefile("r", encoding="utf-8")
        self.writer = self.sock.makefile("w", encoding="utf-8")

    def send_line(self, line: str) -> None:
        try:
            self.writer.write(line + "\n")
            self.writer.flush()
        except OSError as exc:
            raise ScorerFailure(f"scorer connection closed: {exc}") from exc

    def recv_line(self) -> str:
        try:
            line = self.reader.readline()
        except OSError as exc:
            raise ScorerFailure(f"scorer connection broken: {exc}") from exc
        if not line:
            raise ScorerFailure("scorer connection closed")
        return line

    def close(self) -> None:
        for stream in (self.writer, self.reader):
            try:
                stream.close()
            except OSError:
                pass
        try:
            self.sock.close()
        except OSError:
            pass


class ExternalScorer(Scorer):
    """Scorer backed by a sidecar process; prefers its token capability."""

    def __init__(self, transport):
        self._transport = transport
        self._next_id = 0
        hello = self._parse(self._transport.recv_line())
        if hello.get("protocol") != PROTOCOL_VERSION:
            raise ScorerFailure(
                f"scorer speaks protocol {hello.get('protocol')!r}, need {PROTOCOL_VERSION}"
            )
        caps = hello.get("capabilities", [])
        if not isinstance(caps, list) or not caps:
            raise ScorerFailure(f"scorer announced no capabilities: {hello!r}")
        self.capabilities = tuple(caps)
        self.token_level = "tokens" in caps
        if not self.token_level and "sentence" not in caps:
            raise ScorerFailure(f"scorer supports neither tokens nor sentence: {caps!r}")

    @staticmethod
    def _parse(line: str) -> dict:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScorerFailure(f"scorer sent invalid JSON: {line!r}") from exc
        if not isinstance(msg, dict):
            raise ScorerFailure(f"scorer sent a non-object message: {line!r}")
        return msg

    def _roundtrip(self, requests: list[dict]) -> dict[int, dict]:
        for req in requests:
            self._transport.send_line(json.dumps(req))
        pending = {req["id"] for req in requests}
        responses: dict[int, dict] = {}
        while pending:
            msg = self._parse(self._transport.recv_line())
            if "code" in msg:
                raise ScorerFailure(
                    f"scorer error {msg.get('code')!r}: {msg.get('message')!r}"
                )
            mid = msg.get("id")
            if mid not in pending:
                raise ScorerFailure(f"scorer sent a response for unknown id {mid!r}")
            responses[mid] = msg
            pending.remove(mid)
        return responses

    def _take_ids(self, n: int) -> list[int]:
        ids = list(range(self._next_id, self._next_id + n))
        self._next_id += n
        return ids

    def label_probs(self, source: Sequence[str], hypothesis: Sequence[str]) -> LabelVector:
        if not self.token_level:
            raise ScorerFailure("external scorer has no token capability")
        (rid,) = self._take_ids(1)
        req = {
            "id": rid,
            "kind": "tokens",
            "source": " ".join(source),
            "hypothesis": " ".join(hypothesis),
        }
        msg = self._roundtrip([req])[rid]
        return self._to_labels(msg, len(hypothesis))

    @staticmethod
    def _to_labels(msg: dict, m: int) -> LabelVector:
        words = msg.get("word_probs")
        gaps = msg.get("gap_probs")
        if not isinstance(words, list) or not isinstance(gaps, list):
            raise ScorerFailure(f"token response missing probability lists: {msg!r}")
        if len(words) != m or len(gaps) != m + 1:
            raise ScorerFailure(
                f"probability shapes {len(words)}/{len(gaps)} do not fit {m} tokens"
            )
        try:
            return LabelVector(tuple(float(p) for p in words), tuple(float(p) for p in gaps))
        except (TypeError, ValueError) as exc:
            raise ScorerFailure(f"bad probabilities from scorer: {exc}") from exc

    def score_batch(
        self, pairs: Sequence[tuple[Sequence[str], Sequence[str]]]
    ) -> list[float]:
        if not pairs:
            return []
        kind = "tokens" if self.token_level else "sentence"
        ids = self._take_ids(len(pairs))
        requests = [
            {"id": rid, "kind": kind, "source": " ".join(s), "hypothesis": " ".join(h)}
            for rid, (s, h) in zip(ids, pairs)
        ]
        responses = self._roundtrip(requests)
        out = []
        for rid, (_s, h) in zip(ids, pairs):
            msg = responses[rid]
            if kind == "tokens":
                out.append(aggregate_q(self._to_labels(msg, len(h))))
            else:
                score = msg.get("score")
                if not isinstance(score, (int, float)) or not (0.0 < float(score) <= 1.0):
                    raise ScorerFailure(f"bad sentence score in {msg!r}")
                out.append(float(score))
        return out

    def score(self, source: Sequence[str], hypothesis: Sequence[str]) -> float:
        return self.score_batch([(source, hypothesis)])[0]

    def close(self) -> None:
        self._transport.close()


def connect(endpoint: str) -> ExternalScorer:
    """Open an external scorer from an endpoint string.

    "tcp:HOST:PORT" dials a listening scorer; anything else is treated as
    a command line to spawn with stdio pipes (an explicit "stdio:" prefix
    is allowed).
    """
    if endpoint.startswith("tcp:"):
        rest = endpoint[len("tcp:") :]
        host, sep, port = rest.rpartition(":")
        if not sep or not host:
            raise ScorerFailure(f"bad TCP endpoint {endpoint!r}, want tcp:HOST:PORT")
        try:
            port_no = int(port)
        except ValueError:
            raise ScorerFailure(f"bad TCP port in {endpoint!r}") from None
        return ExternalScorer(_TcpTransport(host, port_no))
    if endpoint.startswith("stdio:"):
        endpoint = endpoint[len("stdio:") :]
    command = shlex.split(endpoint)
    if not command:
        raise ScorerFailure("empty scorer command")
    return ExternalScorer(_StdioTransport(command))
