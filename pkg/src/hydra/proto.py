"""Checker wire protocol: message types, framing, and codec.

Frame format: a 4-byte big-endian unsigned length N followed by exactly N
bytes of UTF-8 JSON. The JSON object carries a top-level "type" field naming
the message kind plus one field per payload member. Optional fields (meta,
the submit eos flag) are omitted when absent. See docs/protocol.md for hex
examples.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Union

MAX_FRAME_BYTES = 1 << 24

_HEADER = struct.Struct(">I")


class ProtocolError(Exception):
    """Malformed frame or unknown message type; the session must be aborted."""


class IncompleteFrame(Exception):
    """Not enough bytes for a full frame; the caller retries with more input."""


class EncodingError(Exception):
    """Message cannot be encoded (oversize frame)."""


@dataclass(frozen=True)
class Submit:
    """Incremental code fragment pushed to an active session.

    An empty delta is legal (a no-op). ``eos=True`` marks end-of-stream and
    triggers final validation on the checker side.
    """

    delta: str
    eos: bool = False

    kind = "submit"


@dataclass(frozen=True)
class Init:
    """Active session announcing itself; pid is the parent checkpoint id."""

    id: int
    pid: Optional[int] = None

    kind = "init"


@dataclass(frozen=True)
class Progress:
    """Acceptance up to a byte offset tied to a semantic boundary."""

    off: int
    cat: str
    meta: Optional[dict] = None

    kind = "progress"


@dataclass(frozen=True)
class Error:
    """Rejection at a byte offset with a coarse category and diagnostic."""

    off: int
    cat: str
    diag: str
    meta: Optional[dict] = None

    kind = "error"


@dataclass(frozen=True)
class Resume:
    """Ask a checkpoint session to spawn an active session on a channel."""

    chan: str

    kind = "resume"


@dataclass(frozen=True)
class Chkpt:
    """Checkpoint session announcing itself: offset, own id, parent id."""

    off: int
    id: int
    pid: int

    kind = "chkpt"


Msg = Union[Submit, Init, Progress, Error, Resume, Chkpt]

_MSG_TYPES = {cls.kind: cls for cls in (Submit, Init, Progress, Error, Resume, Chkpt)}


def _to_payload(msg: Msg) -> dict:
    body: dict[str, Any] = {"type": msg.kind}
    if isinstance(msg, Submit):
        body["delta"] = msg.delta
        if msg.eos:
            body["eos"] = True
    elif isinstance(msg, Init):
        body["id"] = msg.id
        body["pid"] = msg.pid
    elif isinstance(msg, (Progress, Error)):
        body["off"] = msg.off
        body["cat"] = msg.cat
        if isinstance(msg, Error):
            body["diag"] = msg.diag
        if msg.meta is not None:
            body["meta"] = msg.meta
    elif isinstance(msg, Resume):
        body["chan"] = msg.chan
    elif isinstance(msg, Chkpt):
        body["off"] = msg.off
        body["id"] = msg.id
        body["pid"] = msg.pid
    else:  # pragma: no cover - exhaustive over Msg
        raise EncodingError(f"unknown message {msg!r}")
    return body


def _from_payload(body: dict) -> Msg:
    kind = body.get("type")
    if kind not in _MSG_TYPES:
        raise ProtocolError(f"unknown message type {kind!r}")
    try:
        if kind == "submit":
            return Submit(delta=body["delta"], eos=bool(body.get("eos", False)))
        if kind == "init":
            return Init(id=body["id"], pid=body.get("pid"))
        if kind == "progress":
            return Progress(off=body["off"], cat=body["cat"], meta=body.get("meta"))
        if kind == "error":
            return Error(
                off=body["off"],
                cat=body["cat"],
                diag=body["diag"],
                meta=body.get("meta"),
            )
        if kind == "resume":
            return Resume(chan=body["chan"])
        return Chkpt(off=body["off"], id=body["id"], pid=body["pid"])
    except KeyError as exc:
        raise ProtocolError(f"{kind} frame missing field {exc}") from exc


def encode_frame(msg: Msg) -> bytes:
    """Encode one message as a length-prefixed JSON frame."""
    raw = json.dumps(_to_payload(msg), separators=(",", ":"), ensure_ascii=False)
    body = raw.encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise EncodingError(f"frame of {len(body)} bytes exceeds {MAX_FRAME_BYTES}")
    return _HEADER.pack(len(body)) + body


def decode_frame(buf: bytes) -> tuple[Msg, int]:
    """Decode one frame from the start of ``buf``.

    Returns the message and the number of bytes consumed. Raises
    IncompleteFrame when the buffer holds less than one full frame and
    ProtocolError on malformed JSON or an unknown type.
    """
    if len(buf) < _HEADER.size:
        raise IncompleteFrame(f"need {_HEADER.size} header bytes, have {len(buf)}")
    (length,) = _HEADER.unpack_from(buf)
    if length > MAX_FRAME_BYTES:
        raise ProtocolError(f"advertised frame length {length} exceeds maximum")
    end = _HEADER.size + length
    if len(buf) < end:
        raise IncompleteFrame(f"need {end} bytes, have {len(buf)}")
    try:
        body = json.loads(buf[_HEADER.size : end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed frame body: {exc}") from exc
    if not isinstance(body, dict):
        raise ProtocolError("frame body is not a JSON object")
    return _from_payload(body), end


def decode_all(buf: bytes) -> list[Msg]:
    """Decode a concatenation of complete frames, in order."""
    msgs = []
    pos = 0
    while pos < len(buf):
        msg, used = decode_frame(buf[pos:])
        msgs.append(msg)
        pos += used
    return msgs


class FrameReader:
    """Incremental frame decoder for a byte stream.

    Feed arbitrary byte slices; complete messages come out in order.
    """

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Msg]:
        self._buf.extend(data)
        out = []
        while True:
            try:
                msg, used = decode_frame(bytes(self._buf))
            except IncompleteFrame:
                break
            del self._buf[:used]
            out.append(msg)
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)


@dataclass
class StreamValidator:
    """Checks the event-ordering invariants of a single session's stream.

    Progress offsets must be non-decreasing; error offsets may go backwards
    (retroactive errors) but nothing may follow the first error.
    """

    last_progress: int = -1
    errored: bool = False
    violations: list[str] = field(default_factory=list)

    def observe(self, msg: Msg) -> None:
        if self.errored and isinstance(msg, (Progress, Error)):
            self.violations.append(f"event after error: {msg!r}")
            return
        if isinstance(msg, Progress):
            if msg.off < self.last_progress:
                self.violations.append(
                    f"progress offset went backwards: {self.last_progress} -> {msg.off}"
                )
            self.last_progress = max(self.last_progress, msg.off)
        elif isinstance(msg, Error):
            self.errored = True

    def observe_all(self, msgs: Iterator[Msg]) -> "StreamValidator":
        for msg in msgs:
            self.observe(msg)
        return self

    @property
    def ok(self) -> bool:
        return not self.violations
