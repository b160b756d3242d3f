"""Framing codec and stream-validator tests."""

from __future__ import annotations

import json
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hydra import proto

MSGS = [
    proto.Submit(delta="let x: int = 1;"),
    proto.Submit(delta="", eos=True),
    proto.Init(id=4, pid=None),
    proto.Init(id=9, pid=2),
    proto.Progress(off=15, cat="let_stmt"),
    proto.Progress(off=31, cat="if_open", meta={"max_entropy": 1.5}),
    proto.Error(off=31, cat="undeclared_identifier", diag="use of undeclared identifier y"),
    proto.Resume(chan="chk.17"),
    proto.Chkpt(off=240, id=7, pid=3),
]


def body_of(frame: bytes) -> dict:
    (length,) = struct.unpack_from(">I", frame)
    assert length == len(frame) - 4
    return json.loads(frame[4:].decode("utf-8"))


def test_progress_frame_schema():
    frame = proto.encode_frame(proto.Progress(off=15, cat="let_stmt"))
    assert body_of(frame) == {"type": "progress", "off": 15, "cat": "let_stmt"}


def test_empty_submit_is_legal():
    frame = proto.encode_frame(proto.Submit(delta=""))
    assert body_of(frame) == {"type": "submit", "delta": ""}


def test_chkpt_frame_schema():
    frame = proto.encode_frame(proto.Chkpt(off=240, id=7, pid=3))
    assert body_of(frame) == {"type": "chkpt", "off": 240, "id": 7, "pid": 3}


def test_meta_omitted_when_absent():
    frame = proto.encode_frame(proto.Error(off=3, cat="syntax_error", diag="x"))
    assert "meta" not in body_of(frame)


@pytest.mark.parametrize("msg", MSGS, ids=lambda m: m.kind + str(MSGS.index(m) if m in MSGS else ""))
def test_round_trip_examples(msg):
    decoded, used = proto.decode_frame(proto.encode_frame(msg))
    assert decoded == msg
    assert used == len(proto.encode_frame(msg))


_meta = st.none() | st.dictionaries(
    st.text(min_size=1, max_size=8),
    st.one_of(st.integers(-10, 10), st.floats(allow_nan=False, allow_infinity=False), st.text(max_size=8)),
    max_size=3,
)

_any_msg = st.one_of(
    st.builds(proto.Submit, delta=st.text(max_size=64), eos=st.booleans()),
    st.builds(proto.Init, id=st.integers(0, 2**63), pid=st.none() | st.integers(0, 2**63)),
    st.builds(proto.Progress, off=st.integers(0, 2**32), cat=st.text(min_size=1, max_size=16), meta=_meta),
    st.builds(
        proto.Error,
        off=st.integers(0, 2**32),
        cat=st.text(min_size=1, max_size=16),
        diag=st.text(max_size=64),
        meta=_meta,
    ),
    st.builds(proto.Resume, chan=st.text(max_size=32)),
    st.builds(proto.Chkpt, off=st.integers(0, 2**32), id=st.integers(0, 2**63), pid=st.integers(0, 2**63)),
)


@settings(max_examples=300, deadline=None)
@given(_any_msg)
def test_round_trip_property(msg):
    decoded, _ = proto.decode_frame(proto.encode_frame(msg))
    assert decoded == msg


@settings(max_examples=50, deadline=None)
@given(st.lists(_any_msg, min_size=0, max_size=8))
def test_concatenated_frames_self_synchronize(msgs):
    blob = b"".join(proto.encode_frame(m) for m in msgs)
    assert proto.decode_all(blob) == msgs


def test_truncated_frame():
    frame = proto.encode_frame(proto.Progress(off=1, cat="let_stmt"))
    assert len(frame) >= 20
    with pytest.raises(proto.IncompleteFrame):
        proto.decode_frame(frame[:3])
    with pytest.raises(proto.IncompleteFrame):
        proto.decode_frame(frame[:-1])


def test_unknown_type_is_protocol_error():
    body = json.dumps({"type": "bogus"}).encode()
    frame = struct.pack(">I", len(body)) + body
    with pytest.raises(proto.ProtocolError):
        proto.decode_frame(frame)


def test_malformed_json_is_protocol_error():
    body = b"{nope"
    frame = struct.pack(">I", len(body)) + body
    with pytest.raises(proto.ProtocolError):
        proto.decode_frame(frame)


def test_missing_field_is_protocol_error():
    body = json.dumps({"type": "progress", "off": 3}).encode()
    frame = struct.pack(">I", len(body)) + body
    with pytest.raises(proto.ProtocolError):
        proto.decode_frame(frame)


def test_oversize_frame_rejected():
    big = proto.Submit(delta="x" * (proto.MAX_FRAME_BYTES + 1))
    with pytest.raises(proto.EncodingError):
        proto.encode_frame(big)


def test_frame_reader_incremental():
    msgs = [proto.Progress(off=i, cat="let_stmt") for i in range(5)]
    blob = b"".join(proto.encode_frame(m) for m in msgs)
    reader = proto.FrameReader()
    seen = []
    for i in range(len(blob)):
        seen.extend(reader.feed(blob[i : i + 1]))
    assert seen == msgs
    assert reader.pending == 0


def test_stream_validator_flags_backward_progress():
    v = proto.StreamValidator()
    v.observe(proto.Progress(off=10, cat="let_stmt"))
    v.observe(proto.Progress(off=5, cat="let_stmt"))
    assert not v.ok


def test_stream_validator_accepts_retroactive_error_then_stops():
    v = proto.StreamValidator()
    v.observe(proto.Progress(off=10, cat="rec_field"))
    v.observe(proto.Error(off=4, cat="duplicate_field", diag="dup"))
    assert v.ok
    v.observe(proto.Progress(off=12, cat="let_stmt"))
    assert not v.ok
