"""Batch prediction against external models over a line-delimited JSON protocol.

Each request is one UTF-8 JSON object on one line::

    {"id": 0, "columns": ["x1", "x2"], "rows": [[0.1, 0.2], ...]}

and the model answers with::

    {"id": 0, "predictions": [0.14, ...]}

Over a subprocess the records travel on stdin/stdout, one request in
flight at a time. Over HTTP each record is the body of a POST and of its
response; several requests may be in flight and are reassembled by id.
"""
from __future__ import annotations

import collections
import json
import math
import queue
import shlex
import subprocess
import sys
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Sequence

import numpy as np

from .predictor import EvalLedger, PredictionError, Predictor


class BridgeError(PredictionError):
    """Transport or protocol failure talking to an external model."""


@dataclass(frozen=True)
class BridgeConfig:
    """How to reach an external model.

    ``target`` is a command line (string or argv list) for the subprocess
    transport or a URL for HTTP. ``headers`` are passed through verbatim on
    HTTP requests.
    """

    transport: str
    target: str | tuple[str, ...]
    batch_size: int = 4096
    timeout: float = 30.0
    max_in_flight: int = 4
    headers: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.transport not in ("subprocess", "http"):
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.timeout > 0:
            raise ValueError("timeout must be > 0")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    @classmethod
    def from_dict(cls, spec: dict) -> "BridgeConfig":
        spec = dict(spec)
        if isinstance(spec.get("target"), list):
            spec["target"] = tuple(spec["target"])
        return cls(**spec)


def encode_request(req_id: int, columns: Sequence[str], rows: np.ndarray) -> bytes:
    record = {"id": int(req_id), "columns": list(columns), "rows": np.asarray(rows, dtype=float).tolist()}
    return (json.dumps(record, allow_nan=False, separators=(",", ":")) + "\n").encode("utf-8")


def decode_response(raw: bytes | str, req_id: int, n_rows: int, first_row: int = 0) -> np.ndarray:
    """Validate one response record against the request it answers."""
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise BridgeError(f"request {req_id}: malformed response: {exc}") from None
    if not isinstance(record, dict) or "predictions" not in record:
        raise BridgeError(f"request {req_id}: response lacks 'predictions'")
    if record.get("id") != req_id:
        raise BridgeError(f"request {req_id}: response carries id {record.get('id')!r}")
    preds = record["predictions"]
    if not isinstance(preds, list) or len(preds) != n_rows:
        got = len(preds) if isinstance(preds, list) else type(preds).__name__
        raise BridgeError(f"request {req_id}: {got} predictions for {n_rows} rows")
    out = np.empty(n_rows)
    for i, p in enumerate(preds):
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not math.isfinite(p):
            raise BridgeError(f"request {req_id}: non-finite prediction {p!r} at row {first_row + i}")
        out[i] = p
    return out


class _SubprocessChannel:
    def __init__(self, cfg: BridgeConfig):
        argv = shlex.split(cfg.target) if isinstance(cfg.target, str) else list(cfg.target)
        self.cfg = cfg
        self.proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.PIPE
        )
        self.lines: queue.Queue = queue.Queue()
        self.stderr = collections.deque(maxlen=50)
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        self._err_thread = threading.Thread(target=self._pump_stderr, daemon=True)
        self._err_thread.start()

    def _pump_stdout(self):
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)

    def _pump_stderr(self):
        for line in self.proc.stderr:
            self.stderr.append(line.decode("utf-8", "replace").rstrip())

    def _diagnostics(self) -> str:
        try:
            code = self.proc.wait(timeout=1.0)
        except subprocess.TimeoutExpired:
            code = None
        else:
            self._err_thread.join(timeout=1.0)
        tail = "\n".join(self.stderr)
        return f"exit status {code}" + (f"; stderr:\n{tail}" if tail else "")

    def request(self, req_id: int, payload: bytes) -> bytes:
        try:
            self.proc.stdin.write(payload)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise BridgeError(f"request {req_id}: model process is gone ({self._diagnostics()})") from None
        try:
            line = self.lines.get(timeout=self.cfg.timeout)
        except queue.Empty:
            self.close()
            raise BridgeError(f"request {req_id}: timed out after {self.cfg.timeout}s") from None
        if line is None:
            raise BridgeError(f"request {req_id}: model process closed its output ({self._diagnostics()})")
        return line

    def close(self):
        if self.proc.poll() is None:
            try:
                self.proc.stdin.close()
                self.proc.wait(timeout=2.0)
            except (OSError, subprocess.TimeoutExpired):
                self.proc.kill()
                self.proc.wait()


class BridgePredictor(Predictor):
    """A :class:`Predictor` backed by an external model.

    The subprocess is started lazily and kept for the predictor's lifetime;
    call :meth:`close` (or use as a context manager) to stop it.
    """

    def __init__(self, cfg: BridgeConfig, columns: Sequence[str] | None = None,
                 ledger: EvalLedger | None = None):
        super().__init__(ledger)
        self.cfg = cfg
        self.columns = tuple(columns) if columns is not None else None
        self.label = f"bridge:{cfg.transport}"
        self._channel: _SubprocessChannel | None = None
        self._next_id = 0
        self.requests_sent: list[int] = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._channel is not None:
            self._channel.close()
            self._channel = None

    def _chunks(self, rows):
        b = self.cfg.batch_size
        return [(self._take_id(), start, rows[start:start + b]) for start in range(0, rows.shape[0], b)]

    def _take_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    def _predict(self, rows):
        # ids restart at 0 for every predict call
        self._next_id = 0
        columns = self.columns or tuple(f"x{j + 1}" for j in range(rows.shape[1]))
        if len(columns) != rows.shape[1]:
            raise BridgeError(f"{len(columns)} column names for {rows.shape[1]} columns")
        chunks = self._chunks(rows)
        if self.cfg.transport == "subprocess":
            return self._predict_subprocess(chunks, columns)
        return self._predict_http(chunks, columns)

    def _predict_subprocess(self, chunks, columns):
        if self._channel is None or self._channel.proc.poll() is not None:
            self._channel = _SubprocessChannel(self.cfg)
        out = []
        for req_id, start, block in chunks:
            self.requests_sent.append(req_id)
            line = self._channel.request(req_id, encode_request(req_id, columns, block))
            out.append(decode_response(line, req_id, block.shape[0], start))
        return np.concatenate(out) if out else np.empty(0)

    def _post(self, req_id, payload):
        headers = {"Content-Type": "application/json", **self.cfg.headers}
        req = urllib.request.Request(self.cfg.target, data=payload, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.cfg.timeout) as resp:
                return resp.read()
        except TimeoutError:
            raise BridgeError(f"request {req_id}: timed out after {self.cfg.timeout}s") from None
        except urllib.error.HTTPError as exc:
            raise BridgeError(f"request {req_id}: HTTP {exc.code}: {exc.read()[:500]!r}") from None
        except urllib.error.URLError as exc:
            if isinstance(exc.reason, TimeoutError):
                raise BridgeError(f"request {req_id}: timed out after {self.cfg.timeout}s") from None
            raise BridgeError(f"request {req_id}: {exc.reason}") from None

    def _predict_http(self, chunks, columns):
        def send(chunk):
            req_id, start, block = chunk
            body = self._post(req_id, encode_request(req_id, columns, block))
            return req_id, body

        by_id = {}
        with ThreadPoolExecutor(max_workers=self.cfg.max_in_flight) as pool:
            for req_id, body in pool.map(send, chunks):
                by_id[req_id] = body
        self.requests_sent.extend(sorted(by_id))
        out = [decode_response(by_id[req_id], req_id, block.shape[0], start)
               for req_id, start, block in chunks]
        return np.concatenate(out) if out else np.empty(0)


def external_predict(cfg: BridgeConfig, rows, columns: Sequence[str] | None = None,
                     ledger: EvalLedger | None = None) -> np.ndarray:
    """One-shot prediction through a fresh bridge."""
    with BridgePredictor(cfg, columns, ledger) as model:
        return model.predict(rows)


def serve_stdio(model: Predictor, stdin=None, stdout=None) -> None:
    """Answer protocol requests on stdin/stdout until EOF."""
    stdin = stdin or sys.stdin.buffer
    stdout = stdout or sys.stdout.buffer
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(_answer(model, line))
        stdout.flush()


def _answer(model: Predictor, raw: bytes) -> bytes:
    record = json.loads(raw)
    rows = np.asarray(record["rows"], dtype=float).reshape(len(record["rows"]), -1)
    preds = model.predict(rows) if rows.shape[0] else np.empty(0)
    reply = {"id": record["id"], "predictions": preds.tolist()}
    return (json.dumps(reply, separators=(",", ":")) + "\n").encode("utf-8")


def make_http_server(model: Predictor, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """An HTTP server answering protocol POSTs; call ``serve_forever()``."""
    lock = threading.Lock()

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
            try:
                with lock:
                    reply = _answer(model, body)
            except Exception as exc:  # report any model failure to the client
                msg = str(exc).encode("utf-8")
                self.send_response(500)
                self.send_header("Content-Length", str(len(msg)))
                self.end_headers()
                self.wfile.write(msg)
                return
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(reply)))
            self.end_headers()
            self.wfile.write(reply)

        def log_message(self, *args):
            pass

    return ThreadingHTTPServer((host, port), Handler)
