"""Client for external scorers speaking the line-delimited JSON protocol.

A scorer is a separate process (stdio) or service (TCP) that first sends a
handshake line declaring its name, kind, and served levels:

    {"hello": {"name": "...", "kind": "continuous", "levels": {"A": ["OFF", "NOT"]}}}

and then answers each request line

    {"req_id": 7, "level": "A", "texts": ["...", "..."]}

with a response carrying one confidence map per text, in order:

    {"req_id": 7, "confidences": [{"OFF": 0.93, "NOT": 0.07}, ...]}

Requests on one connection are strictly serialized; responses must arrive
in request order with matching req_ids. Any deviation aborts the batch
with a typed error.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import socket
import subprocess
import threading
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..corpus import Instance
from ..errors import ScorerProtocolError, ScorerTimeoutError, ScorerValueError
from ..labels import LEVEL_CLASSES, argmax_class
from .base import CONTINUOUS, DISCRETE, ModelPrediction

# Confidences may stray this far outside [0, 1] before the batch is aborted;
# smaller excursions are clipped.
RANGE_TOLERANCE = 1e-6

DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class ScorerInfo:
    name: str
    kind: str
    levels: dict[str, tuple[str, ...]]


class _LineReader:
    """Buffered line reader over a raw byte source with a deadline.

    `read_some(remaining)` returns bytes, b"" on EOF, or None when the poll
    expired without data (retried until the deadline).
    """

    def __init__(self, read_some):
        self._read_some = read_some
        self._buf = b""

    def readline(self, timeout: float) -> str:
        deadline = time.monotonic() + timeout
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise ScorerTimeoutError("timed out waiting for scorer reply")
            chunk = self._read_some(remaining)
            if chunk is None:
                continue
            if chunk == b"":
                raise ScorerProtocolError("scorer closed the connection")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode("utf-8", errors="replace")


def _fd_read_some(fd):
    def read_some(remaining: float):
        ready, _, _ = select.select([fd], [], [], remaining)
        if not ready:
            return None
        return os.read(fd, 65536)

    return read_some


def _sock_read_some(sock: socket.socket):
    def read_some(remaining: float):
        sock.settimeout(remaining)
        try:
            return sock.recv(65536)
        except socket.timeout:
            return None

    return read_some


class ExternalScorer:
    """Handle to one connected scorer; completes the handshake on creation."""

    def __init__(self, *, send_line, reader, close, timeout: float = DEFAULT_TIMEOUT):
        self._send_line = send_line
        self._reader = reader
        self._close = close
        self._timeout = timeout
        self._lock = threading.Lock()
        self._next_req_id = 0
        self.info = self._handshake()

    # -- constructors -------------------------------------------------

    @classmethod
    def from_command(cls, command: str | Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        """Spawn a scorer subprocess and talk to it over stdin/stdout."""
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0
        )

        def send_line(line: str):
            try:
                proc.stdin.write((line + "\n").encode("utf-8"))
                proc.stdin.flush()
            except (BrokenPipeError, ValueError) as exc:
                raise ScorerProtocolError(f"scorer pipe closed: {exc}") from exc

        def close():
            try:
                proc.stdin.close()
            except Exception:
                pass
            try:
                proc.terminate()
                proc.wait(timeout=5)
            except Exception:
                pass

        reader = _LineReader(_fd_read_some(proc.stdout.fileno()))
        try:
            handle = cls(send_line=send_line, reader=reader, close=close, timeout=timeout)
        except Exception:
            close()
            raise
        handle._proc = proc
        return handle

    @classmethod
    def from_tcp(cls, host: str, port: int, timeout: float = DEFAULT_TIMEOUT):
        sock = socket.create_connection((host, port), timeout=timeout)

        def send_line(line: str):
            try:
                sock.sendall((line + "\n").encode("utf-8"))
            except OSError as exc:
                raise ScorerProtocolError(f"scorer socket closed: {exc}") from exc

        reader = _LineReader(_sock_read_some(sock))
        try:
            return cls(send_line=send_line, reader=reader, close=sock.close, timeout=timeout)
        except Exception:
            sock.close()
            raise

    # -- protocol ------------------------------------------------------

    def _read_json(self) -> dict:
        line = self._reader.readline(self._timeout)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScorerProtocolError(f"scorer sent invalid JSON: {line[:200]!r}") from exc
        if not isinstance(obj, dict):
            raise ScorerProtocolError("scorer sent a non-object frame")
        return obj

    def _handshake(self) -> ScorerInfo:
        obj = self._read_json()
        hello = obj.get("hello")
        if not isinstance(hello, dict):
            raise ScorerProtocolError("expected a hello frame")
        name = hello.get("name")
        kind = hello.get("kind")
        levels_raw = hello.get("levels")
        if not isinstance(name, str) or kind not in (CONTINUOUS, DISCRETE):
            raise ScorerProtocolError("hello frame missing name/kind")
        if not isinstance(levels_raw, dict) or not levels_raw:
            raise ScorerProtocolError("hello frame missing served levels")
        levels: dict[str, tuple[str, ...]] = {}
        for level, classes in levels_raw.items():
            if level not in LEVEL_CLASSES:
                raise ScorerProtocolError(f"hello declares unknown level {level!r}")
            if tuple(classes) != LEVEL_CLASSES[level]:
                raise ScorerProtocolError(
                    f"hello declares wrong class set for level {level}: {classes!r}"
                )
            levels[level] = tuple(classes)
        return ScorerInfo(name=name, kind=kind, levels=levels)

    def close(self):
        self._close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- scoring -------------------------------------------------------

    def score(self, batch: Sequence[Instance], level: str) -> list[ModelPrediction]:
        """Score a non-empty batch at one level; order is preserved."""
        if not batch:
            raise ValueError("batch must be non-empty")
        if level not in self.info.levels:
            raise ScorerProtocolError(
                f"scorer {self.info.name!r} does not serve level {level}"
            )
        with self._lock:
            req_id = self._next_req_id
            self._next_req_id += 1
            request = {"req_id": req_id, "level": level, "texts": [i.text for i in batch]}
            self._send_line(json.dumps(request, ensure_ascii=False))
            reply = self._read_json()
        if "error" in reply:
            raise ScorerProtocolError(f"scorer error reply: {reply['error']}")
        if "req_id" not in reply:
            raise ScorerProtocolError("reply missing req_id")
        if reply["req_id"] != req_id:
            raise ScorerProtocolError(
                f"reply req_id {reply['req_id']!r} does not match request {req_id}"
            )
        raw = reply.get("confidences")
        if not isinstance(raw, list) or len(raw) != len(batch):
            raise ScorerProtocolError(
                f"expected {len(batch)} confidence maps, got {raw!r:.200}"
            )
        return [self._to_prediction(entry, level) for entry in raw]

    def _to_prediction(self, entry, level: str) -> ModelPrediction:
        classes = LEVEL_CLASSES[level]
        if not isinstance(entry, dict) or set(entry) != set(classes):
            raise ScorerProtocolError(
                f"confidence map must have exactly the level-{level} classes: {entry!r}"
            )
        conf = {}
        for cls in classes:
            value = entry[cls]
            if not isinstance(value, (int, float)):
                raise ScorerProtocolError(f"non-numeric confidence for {cls}: {value!r}")
            value = float(value)
            if value < -RANGE_TOLERANCE or value > 1.0 + RANGE_TOLERANCE:
                raise ScorerValueError(
                    f"confidence for {cls} outside [0, 1]: {value}"
                )
            conf[cls] = min(1.0, max(0.0, value))
        if self.info.kind == CONTINUOUS:
            total = sum(conf.values())
            if total <= 0:
                raise ScorerValueError("continuous confidences sum to zero")
            conf = {c: v / total for c, v in conf.items()}
        return ModelPrediction(
            model_name=self.info.name,
            kind=self.info.kind,
            level=level,
            confidences=conf,
            hard_label=argmax_class(level, conf),
        )


def external_score(
    endpoint: ExternalScorer, batch: Iterable[Instance], level: str
) -> list[ModelPrediction]:
    """Module-level convenience wrapper around ExternalScorer.score."""
    return endpoint.score(list(batch), level)
