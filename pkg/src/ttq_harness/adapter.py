"""Adapters between the harness and the system under test.

Three kinds share one record schema: ``http`` POSTs each request to an
endpoint, ``process`` speaks one JSON object per line over a subprocess's
stdin/stdout, and ``replay`` answers from a recorded JSON-lines file keyed by
(case_id, turn_index, profile_id, paraphrase_index, sample_index).

SUT failures never abort a run: after retries the adapter returns a record
with an empty query and an error annotation, which downstream scoring counts
as incorrect.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import requests

AUTH_TOKEN_ENV = "TTQ_SUT_TOKEN"

KIND_HTTP = "http"
KIND_PROCESS = "process"
KIND_REPLAY = "replay"

ReplayKey = tuple[str, int, str, int, int]


class AdapterError(Exception):
    """Configuration or replay-file problem; SUT failures are not exceptions."""


@dataclass(frozen=True)
class GenerationRequest:
    suite_id: str
    case_id: str
    turn_index: int
    question: str
    schema_ddl: str
    history: tuple[tuple[str, str], ...]  # (question, query) per prior turn
    settings: tuple[tuple[str, Any], ...]
    profile_id: str
    sample_index: int = 0
    paraphrase_index: int = 0  # 0 is the canonical question

    def __post_init__(self) -> None:
        if len(self.history) != self.turn_index:
            raise ValueError("history must cover exactly the prior turns "
                             f"(turn_index={self.turn_index}, "
                             f"history length={len(self.history)})")
        if self.sample_index < 0 or self.paraphrase_index < 0:
            raise ValueError("sample_index and paraphrase_index must be >= 0")

    @property
    def replay_key(self) -> ReplayKey:
        return (self.case_id, self.turn_index, self.profile_id,
                self.paraphrase_index, self.sample_index)

    def to_dict(self) -> dict:
        return {
            "suite_id": self.suite_id,
            "case_id": self.case_id,
            "turn_index": self.turn_index,
            "question": self.question,
            "schema_ddl": self.schema_ddl,
            "history": [{"question": q, "query": s} for q, s in self.history],
            "settings": dict(self.settings),
            "profile_id": self.profile_id,
            "sample_index": self.sample_index,
            "paraphrase_index": self.paraphrase_index,
        }


@dataclass(frozen=True)
class TraceStep:
    step_index: int
    description: str
    query: str | None = None

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"step_index": self.step_index,
                               "description": self.description}
        if self.query is not None:
            out["query"] = self.query
        return out


@dataclass(frozen=True)
class GenerationRecord:
    request: GenerationRequest
    query: str
    explanation: str | None = None
    trace: tuple[TraceStep, ...] | None = None
    metadata: tuple[tuple[str, Any], ...] | None = None
    latency_s: float = 0.0
    adapter_kind: str = KIND_REPLAY
    error: str | None = None

    def __post_init__(self) -> None:
        if self.trace is not None:
            indices = [step.step_index for step in self.trace]
            if indices != list(range(1, len(indices) + 1)):
                raise ValueError("trace step_index values must be 1..n "
                                 f"contiguous, got {indices}")

    @property
    def failed(self) -> bool:
        return self.error is not None

    def stable_dict(self) -> dict:
        """Serialization without wall-clock fields; basis for log digests."""
        return {
            "request": self.request.to_dict(),
            "query": self.query,
            "explanation": self.explanation,
            "trace": (None if self.trace is None
                      else [step.to_dict() for step in self.trace]),
            "metadata": None if self.metadata is None else dict(self.metadata),
            "adapter_kind": self.adapter_kind,
            "error": self.error,
        }

    def to_dict(self) -> dict:
        out = self.stable_dict()
        out["latency_s"] = self.latency_s
        return out


@dataclass(frozen=True)
class SutDescriptor:
    kind: str
    endpoint: str | None = None
    command: tuple[str, ...] | None = None
    replay_path: str | None = None
    manifest_path: str | None = None
    max_in_flight: int = 1
    timeout_s: float = 30.0
    retries: int = 2

    def __post_init__(self) -> None:
        details = {
            KIND_HTTP: self.endpoint,
            KIND_PROCESS: self.command,
            KIND_REPLAY: self.replay_path,
        }
        if self.kind not in details:
            raise AdapterError(f"unknown SUT kind {self.kind!r}")
        populated = [k for k, v in details.items() if v]
        if populated != [self.kind]:
            raise AdapterError(
                f"descriptor of kind {self.kind!r} must populate exactly its "
                f"own connection details (got {populated or 'none'})")
        if self.max_in_flight < 1:
            raise AdapterError("max_in_flight must be >= 1")
        if self.timeout_s <= 0:
            raise AdapterError("timeout_s must be positive")
        if self.retries < 0:
            raise AdapterError("retries must be >= 0")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "kind": self.kind,
            "max_in_flight": self.max_in_flight,
            "timeout_s": self.timeout_s,
            "retries": self.retries,
        }
        if self.endpoint:
            out["endpoint"] = self.endpoint
        if self.command:
            out["command"] = list(self.command)
        if self.replay_path:
            out["replay_path"] = self.replay_path
        if self.manifest_path:
            out["manifest_path"] = self.manifest_path
        return out


def load_descriptor(path: str | Path, base_dir: str | Path | None = None
                    ) -> SutDescriptor:
    """Read a SUT descriptor JSON file; relative paths resolve against the
    descriptor's own directory unless base_dir overrides that."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise AdapterError(f"{path}: {exc}")
    if not isinstance(data, dict):
        raise AdapterError(f"{path}: descriptor must be a JSON object")
    return descriptor_from_dict(data, base_dir or path.parent)


def descriptor_from_dict(data: Mapping[str, Any],
                         base_dir: str | Path | None = None) -> SutDescriptor:
    base = Path(base_dir) if base_dir is not None else None

    def _resolve(value: str | None) -> str | None:
        if value is None or base is None:
            return value
        candidate = Path(value)
        return str(candidate if candidate.is_absolute() else base / candidate)

    command = data.get("command")
    if isinstance(command, str):
        command = tuple(shlex.split(command))
    elif isinstance(command, list):
        command = tuple(str(part) for part in command)
    elif command is not None:
        raise AdapterError("command must be a string or list of strings")
    return SutDescriptor(
        kind=data.get("kind", ""),
        endpoint=data.get("endpoint"),
        command=command,
        replay_path=_resolve(data.get("replay_path")),
        manifest_path=_resolve(data.get("manifest_path")),
        max_in_flight=int(data.get("max_in_flight", 1)),
        timeout_s=float(data.get("timeout_s", 30.0)),
        retries=int(data.get("retries", 2)),
    )


# --- response parsing (shared by all kinds) -----------------------------------


def _parse_response(req: GenerationRequest, body: Any, kind: str,
                    latency_s: float) -> GenerationRecord:
    """Map a wire response {query, explanation?, trace?, metadata?} to a
    record; malformed bodies become failure records."""

    def _failure(reason: str) -> GenerationRecord:
        return failure_record(req, kind, reason, latency_s)

    if not isinstance(body, dict):
        return _failure("malformed response: body is not a JSON object")
    query = body.get("query")
    if not isinstance(query, str):
        return _failure("malformed response: missing string field 'query'")
    explanation = body.get("explanation")
    if explanation is not None and not isinstance(explanation, str):
        return _failure("malformed response: 'explanation' must be a string")
    raw_trace = body.get("trace")
    trace: tuple[TraceStep, ...] | None = None
    if raw_trace is not None:
        if not isinstance(raw_trace, list):
            return _failure("malformed response: 'trace' must be a list")
        steps: list[TraceStep] = []
        for position, entry in enumerate(raw_trace):
            if not isinstance(entry, dict) \
                    or not isinstance(entry.get("description"), str):
                return _failure("malformed response: trace entries need a "
                                "string 'description'")
            step_query = entry.get("query")
            if step_query is not None and not isinstance(step_query, str):
                return _failure("malformed response: trace 'query' must be "
                                "a string")
            # Wire 'step' labels are advisory; steps are renumbered 1..n in
            # arrival order so the contiguity invariant always holds.
            steps.append(TraceStep(position + 1, entry["description"],
                                   step_query))
        trace = tuple(steps)
    metadata = body.get("metadata")
    if metadata is not None:
        if not isinstance(metadata, dict):
            return _failure("malformed response: 'metadata' must be an object")
        metadata = tuple(sorted(metadata.items()))
    return GenerationRecord(
        request=req,
        query=query,
        explanation=explanation,
        trace=trace,
        metadata=metadata,
        latency_s=latency_s,
        adapter_kind=kind,
    )


def failure_record(req: GenerationRequest, kind: str, reason: str,
                   latency_s: float = 0.0) -> GenerationRecord:
    return GenerationRecord(request=req, query="", latency_s=latency_s,
                            adapter_kind=kind, error=reason)


# --- replay -------------------------------------------------------------------


class ReplayAdapter:
    """Pure lookup over a recorded JSON-lines file; safe for concurrent use."""

    kind = KIND_REPLAY

    def __init__(self, entries: Mapping[ReplayKey, dict]):
        self._entries = dict(entries)

    def __len__(self) -> int:
        return len(self._entries)

    def generate(self, req: GenerationRequest) -> GenerationRecord:
        body = self._entries.get(req.replay_key)
        if body is None:
            return failure_record(req, self.kind, "no recorded sample")
        return _parse_response(req, body, self.kind, latency_s=0.0)

    def close(self) -> None:
        pass


_KEY_FIELDS = ("case_id", "turn_index", "profile_id", "paraphrase_index",
               "sample_index")


def record_replay(path: str | Path) -> ReplayAdapter:
    """Build a replay SUT from a JSON-lines file of
    {key:{case_id, turn_index, profile_id, paraphrase_index, sample_index},
    response:{query, ...}} entries."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise AdapterError(f"{path}: {exc}")
    entries: dict[ReplayKey, dict] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AdapterError(f"{path}:{lineno}: malformed JSON: {exc}")
        if not isinstance(entry, dict) or "key" not in entry \
                or "response" not in entry:
            raise AdapterError(
                f"{path}:{lineno}: entry needs 'key' and 'response' objects")
        raw_key = entry["key"]
        if not isinstance(raw_key, dict):
            raise AdapterError(f"{path}:{lineno}: 'key' must be an object")
        try:
            key: ReplayKey = (
                str(raw_key["case_id"]),
                int(raw_key["turn_index"]),
                str(raw_key["profile_id"]),
                int(raw_key["paraphrase_index"]),
                int(raw_key["sample_index"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise AdapterError(f"{path}:{lineno}: bad key: {exc}")
        if key in entries:
            raise AdapterError(f"{path}:{lineno}: duplicate key {key}")
        response = entry["response"]
        if not isinstance(response, dict):
            raise AdapterError(f"{path}:{lineno}: 'response' must be an object")
        entries[key] = response
    return ReplayAdapter(entries)


def write_replay(path: str | Path, entries: Mapping[ReplayKey, dict]) -> None:
    """Write replay entries as sorted JSON lines (deterministic bytes)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for key in sorted(entries):
        payload = {
            "key": dict(zip(_KEY_FIELDS, key)),
            "response": entries[key],
        }
        lines.append(json.dumps(payload, sort_keys=True, ensure_ascii=False))
    path.write_text("\n".join(lines) + ("\n" if lines else ""),
                    encoding="utf-8")


# --- http ---------------------------------------------------------------------


class HttpAdapter:
    kind = KIND_HTTP

    def __init__(self, descriptor: SutDescriptor):
        if descriptor.kind != KIND_HTTP or not descriptor.endpoint:
            raise AdapterError("http adapter needs an endpoint")
        self._descriptor = descriptor
        self._session = requests.Session()
        token = os.environ.get(AUTH_TOKEN_ENV)
        if token:
            self._session.headers["Authorization"] = f"Bearer {token}"

    def generate(self, req: GenerationRequest) -> GenerationRecord:
        descriptor = self._descriptor
        started = time.monotonic()
        last_reason = "unreachable endpoint"
        for _attempt in range(descriptor.retries + 1):
            try:
                response = self._session.post(
                    descriptor.endpoint,
                    json=req.to_dict(),
                    timeout=descriptor.timeout_s,
                )
            except requests.RequestException as exc:
                last_reason = f"request failed: {exc}"
                continue
            if response.status_code != 200:
                last_reason = f"HTTP {response.status_code}"
                continue
            try:
                body = response.json()
            except ValueError:
                last_reason = "malformed response: body is not JSON"
                continue
            return _parse_response(req, body, self.kind,
                                   time.monotonic() - started)
        return failure_record(req, self.kind, last_reason,
                              time.monotonic() - started)

    def close(self) -> None:
        self._session.close()


# --- process ------------------------------------------------------------------


class ProcessAdapter:
    """One JSON request per stdin line, one JSON response per stdout line.

    Calls are serialized with a lock: interleaved writes on a single byte
    stream cannot be attributed to callers. A timed-out or dead subprocess is
    killed and respawned so one stuck response cannot desynchronize the
    stream for every later request.
    """

    kind = KIND_PROCESS

    def __init__(self, descriptor: SutDescriptor):
        if descriptor.kind != KIND_PROCESS or not descriptor.command:
            raise AdapterError("process adapter needs a command")
        self._descriptor = descriptor
        self._lock = threading.Lock()
        self._proc: subprocess.Popen | None = None
        self._buffer = b""

    def _ensure_proc(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._buffer = b""
            self._proc = subprocess.Popen(
                list(self._descriptor.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        return self._proc

    def _kill_proc(self) -> None:
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None
        self._buffer = b""

    def _read_line(self, proc: subprocess.Popen, deadline: float) -> bytes:
        stdout = proc.stdout
        assert stdout is not None
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("timed out waiting for response line")
            ready, _, _ = select.select([stdout], [], [], remaining)
            if not ready:
                raise TimeoutError("timed out waiting for response line")
            chunk = os.read(stdout.fileno(), 65536)
            if not chunk:
                raise EOFError("subprocess closed stdout")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return line

    def _round_trip(self, req: GenerationRequest) -> Any:
        proc = self._ensure_proc()
        stdin = proc.stdin
        assert stdin is not None
        payload = json.dumps(req.to_dict(), ensure_ascii=False) + "\n"
        stdin.write(payload.encode("utf-8"))
        stdin.flush()
        line = self._read_line(proc, time.monotonic()
                               + self._descriptor.timeout_s)
        return json.loads(line.decode("utf-8"))

    def generate(self, req: GenerationRequest) -> GenerationRecord:
        started = time.monotonic()
        last_reason = "dead process"
        with self._lock:
            for _attempt in range(self._descriptor.retries + 1):
                try:
                    body = self._round_trip(req)
                except TimeoutError:
                    last_reason = (f"no response within "
                                   f"{self._descriptor.timeout_s}s")
                    self._kill_proc()
                    continue
                except (OSError, EOFError, ValueError) as exc:
                    last_reason = f"process failure: {exc}"
                    self._kill_proc()
                    continue
                return _parse_response(req, body, self.kind,
                                       time.monotonic() - started)
        return failure_record(req, self.kind, last_reason,
                              time.monotonic() - started)

    def close(self) -> None:
        with self._lock:
            if self._proc is not None and self._proc.stdin is not None:
                try:
                    self._proc.stdin.close()
                except OSError:
                    pass
            self._kill_proc()


def build_adapter(descriptor: SutDescriptor):
    if descriptor.kind == KIND_REPLAY:
        assert descriptor.replay_path is not None
        return record_replay(descriptor.replay_path)
    if descriptor.kind == KIND_HTTP:
        return HttpAdapter(descriptor)
    if descriptor.kind == KIND_PROCESS:
        return ProcessAdapter(descriptor)
    raise AdapterError(f"unknown SUT kind {descriptor.kind!r}")


def generate(sut, req: GenerationRequest) -> GenerationRecord:
    """Run one generation through an adapter or a raw descriptor."""
    if isinstance(sut, SutDescriptor):
        adapter = build_adapter(sut)
        try:
            return adapter.generate(req)
        finally:
            adapter.close()
    return sut.generate(req)
