"""Incremental MiniLang checker: active sessions, snapshots, and the host.

An active session consumes submitted deltas, emits progress events at safe
statement boundaries, and stops at the first error. All scope and construct
state mutates only at those boundaries, so a partially received statement is
simply re-parsed once more input arrives; nothing is ever guessed.

Checkpoints are dormant deep snapshots of session state truncated to the
checkpointed offset. Resuming copies the snapshot into a fresh active
session; a snapshot can be resumed any number of times.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .. import proto
from ..channels import ChannelHub
from .lexer import NEED_MORE, Token, next_token, skip_trivia

logger = logging.getLogger(__name__)

BOUNDARY_CATEGORIES = (
    "prologue",
    "let_stmt",
    "assign_stmt",
    "if_open",
    "if_close",
    "rec_field",
    "rec_close",
)

ERROR_CATEGORIES = (
    "syntax_error",
    "undeclared_identifier",
    "type_mismatch",
    "redeclaration",
    "unknown_type",
    "duplicate_field",
)

DEFAULT_INTERVAL = 256


@dataclass
class CheckerState:
    """Complete resumable state of one checker session."""

    buf: bytes = b""
    cursor: int = 0
    eos: bool = False
    scopes: list[dict[str, str]] = field(default_factory=lambda: [{}])
    rec_names: list[set[str]] = field(default_factory=lambda: [set()])
    # open constructs: ("if",) or ("rec", [(field_name, field_off), ...])
    open_stack: list[tuple] = field(default_factory=list)
    last_accepted: int = 0
    first_token_seen: bool = False
    last_ckpt_off: int = 0
    ckpt_count: int = 0
    did_prologue_ckpt: bool = False
    halted: bool = False
    finished: bool = False

    def clone(self, truncate_to: Optional[int] = None) -> "CheckerState":
        buf = self.buf if truncate_to is None else self.buf[:truncate_to]
        return CheckerState(
            buf=buf,
            cursor=self.cursor if truncate_to is None else truncate_to,
            eos=False if truncate_to is not None else self.eos,
            scopes=[dict(s) for s in self.scopes],
            rec_names=[set(s) for s in self.rec_names],
            open_stack=[
                (kind, list(rest[0])) if kind == "rec" else (kind,)
                for kind, *rest in self.open_stack
            ],
            last_accepted=self.last_accepted
            if truncate_to is None
            else truncate_to,
            first_token_seen=self.first_token_seen,
            last_ckpt_off=self.last_ckpt_off,
            ckpt_count=self.ckpt_count,
            did_prologue_ckpt=self.did_prologue_ckpt,
            halted=self.halted,
            finished=self.finished,
        )


class _Cursor:
    """Pull-based token reader over the session buffer; purely local."""

    __slots__ = ("buf", "eos", "pos")

    def __init__(self, buf: bytes, eos: bool, pos: int) -> None:
        self.buf = buf
        self.eos = eos
        self.pos = pos

    def _lex(self):
        pos, blocked = skip_trivia(self.buf, self.pos, self.eos)
        if blocked:
            return NEED_MORE
        return next_token(self.buf, pos, self.eos)

    def next(self):
        t = self._lex()
        if t is not NEED_MORE:
            self.pos = t.end
        return t

    def peek(self):
        return self._lex()


class Snapshot:
    """A dormant checkpoint session."""

    def __init__(self, sid: int, pid: int, offset: int, state: CheckerState) -> None:
        self.id = sid
        self.pid = pid
        self.offset = offset
        self.state = state


class ActiveSession:
    def __init__(
        self,
        host: "CheckerHost",
        sid: int,
        pid: Optional[int],
        state: CheckerState,
        channel_name: str,
    ) -> None:
        self.host = host
        self.id = sid
        self.pid = pid
        self.state = state
        self.channel = host.hub.open(channel_name)
        self.channel.send(proto.Init(id=sid, pid=pid))

    # -- event emission -------------------------------------------------

    def _emit_progress(self, off: int, cat: str) -> None:
        self.state.last_accepted = off
        self.channel.send(proto.Progress(off=off, cat=cat))

    def _emit_error(self, off: int, cat: str, diag: str) -> bool:
        self.state.halted = True
        self.channel.send(proto.Error(off=off, cat=cat, diag=diag))
        return False

    def _commit(self, pos: int, cat: str) -> bool:
        self.state.cursor = pos
        self._emit_progress(pos, cat)
        self._maybe_checkpoint(pos)
        return True

    # -- checkpointing ---------------------------------------------------

    def _maybe_checkpoint(self, off: int) -> None:
        host = self.host
        st = self.state
        if host.interval is None:
            return
        if host.prologue_checkpoint and not st.did_prologue_ckpt:
            self.request_checkpoint()
            return
        if off - st.last_ckpt_off >= host.interval:
            self.request_checkpoint()

    def request_checkpoint(self) -> Optional[int]:
        """Materialize a snapshot at the current safe boundary.

        Suppressed when a checkpoint already exists at this offset. Returns
        the snapshot session id, or None when skipped.
        """
        st = self.state
        off = st.last_accepted
        if st.cursor != off:
            raise RuntimeError(
                f"checkpoint requested away from a safe boundary "
                f"(cursor={st.cursor}, accepted={off})"
            )
        if st.ckpt_count > 0 and st.last_ckpt_off == off:
            return None
        st.last_ckpt_off = off
        st.ckpt_count += 1
        st.did_prologue_ckpt = True
        try:
            snap_state = st.clone(truncate_to=off)
        except MemoryError:  # pragma: no cover - resource exhaustion guard
            logger.warning("checkpoint at %d skipped: out of memory", off)
            return None
        return self.host._register_snapshot(self, off, snap_state)

    # -- input -----------------------------------------------------------

    def submit(self, delta: str, eos: bool = False) -> None:
        st = self.state
        if st.halted or st.finished:
            logger.debug("session %d ignoring submit after terminal event", self.id)
            return
        if delta:
            st.buf += delta.encode("utf-8")
        if eos:
            st.eos = True
        self._pump()

    def _pump(self) -> None:
        st = self.state
        while not st.halted and not st.finished:
            pos, blocked = skip_trivia(st.buf, st.cursor, st.eos)
            st.cursor = pos
            if blocked:
                return
            if pos >= len(st.buf):
                if st.eos:
                    self._finalize()
                return
            if not st.first_token_seen:
                st.first_token_seen = True
                if pos > 0:
                    self._emit_progress(pos, "prologue")
                    self._maybe_checkpoint(pos)
            step = self._parse_step()
            if step is NEED_MORE:
                return

    def _finalize(self) -> None:
        st = self.state
        end = len(st.buf)
        if st.open_stack:
            self._emit_error(
                end,
                "syntax_error",
                f"unexpected end of input: {len(st.open_stack)} unclosed block(s)",
            )
            return
        st.finished = True
        self._emit_progress(end, "eos")

    # -- parsing ---------------------------------------------------------

    def _parse_step(self):
        st = self.state
        if st.open_stack and st.open_stack[-1][0] == "rec":
            return self._parse_rec_member()
        return self._parse_stmt()

    def _unexpected(self, t: Token) -> bool:
        if t.kind == "eos":
            diag = "unexpected end of input"
        elif t.kind == "bad" and t.text == '"':
            diag = "unterminated string literal"
        elif t.kind == "bad":
            diag = f"unexpected character {t.text!r}"
        else:
            diag = f"unexpected token {t.text!r}"
        return self._emit_error(t.off, "syntax_error", diag)

    def _expect_punct(self, cur: _Cursor, text: str):
        t = cur.next()
        if t is NEED_MORE:
            return NEED_MORE
        if t.kind != "punct" or t.text != text:
            return self._unexpected(t)
        return t

    def _lookup(self, name: str) -> Optional[str]:
        for scope in reversed(self.state.scopes):
            if name in scope:
                return scope[name]
        return None

    def _parse_stmt(self):
        st = self.state
        cur = _Cursor(st.buf, st.eos, st.cursor)
        t = cur.next()
        if t is NEED_MORE:
            return NEED_MORE

        if t.kind == "punct" and t.text == "}":
            if st.open_stack and st.open_stack[-1][0] == "if":
                st.open_stack.pop()
                st.scopes.pop()
                st.rec_names.pop()
                return self._commit(cur.pos, "if_close")
            return self._unexpected(t)

        if t.kind == "let":
            name = cur.next()
            if name is NEED_MORE:
                return NEED_MORE
            if name.kind != "ident":
                return self._unexpected(name)
            if name.text in st.scopes[-1]:
                return self._emit_error(
                    name.off, "redeclaration", f"redeclaration of {name.text}"
                )
            colon = self._expect_punct(cur, ":")
            if colon is NEED_MORE or colon is False:
                return colon
            ty = cur.next()
            if ty is NEED_MORE:
                return NEED_MORE
            if ty.kind == "ident":
                return self._emit_error(
                    ty.off, "unknown_type", f"unknown type {ty.text}"
                )
            if ty.kind != "type":
                return self._unexpected(ty)
            eq = cur.next()
            if eq is NEED_MORE:
                return NEED_MORE
            if eq.kind != "punct" or eq.text != "=":
                return self._unexpected(eq)
            expr = self._parse_expr(cur)
            if expr is NEED_MORE or expr is False:
                return expr
            etype, estart = expr
            if etype != ty.text:
                return self._emit_error(
                    estart, "type_mismatch", f"expected {ty.text}, got {etype}"
                )
            semi = self._expect_punct(cur, ";")
            if semi is NEED_MORE or semi is False:
                return semi
            st.scopes[-1][name.text] = ty.text
            return self._commit(cur.pos, "let_stmt")

        if t.kind == "ident":
            vtype = self._lookup(t.text)
            if vtype is None:
                return self._emit_error(
                    t.off,
                    "undeclared_identifier",
                    f"use of undeclared identifier {t.text}",
                )
            eq = cur.next()
            if eq is NEED_MORE:
                return NEED_MORE
            if eq.kind != "punct" or eq.text != "=":
                return self._unexpected(eq)
            expr = self._parse_expr(cur)
            if expr is NEED_MORE or expr is False:
                return expr
            etype, estart = expr
            if etype != vtype:
                return self._emit_error(
                    estart, "type_mismatch", f"expected {vtype}, got {etype}"
                )
            semi = self._expect_punct(cur, ";")
            if semi is NEED_MORE or semi is False:
                return semi
            return self._commit(cur.pos, "assign_stmt")

        if t.kind == "if":
            expr = self._parse_expr(cur)
            if expr is NEED_MORE or expr is False:
                return expr
            etype, estart = expr
            if etype != "bool":
                return self._emit_error(
                    estart, "type_mismatch", f"expected bool, got {etype}"
                )
            brace = self._expect_punct(cur, "{")
            if brace is NEED_MORE or brace is False:
                return brace
            st.open_stack.append(("if",))
            st.scopes.append({})
            st.rec_names.append(set())
            return self._commit(cur.pos, "if_open")

        if t.kind == "rec":
            name = cur.next()
            if name is NEED_MORE:
                return NEED_MORE
            if name.kind != "ident":
                return self._unexpected(name)
            if name.text in st.rec_names[-1]:
                return self._emit_error(
                    name.off, "redeclaration", f"redeclaration of record {name.text}"
                )
            brace = self._expect_punct(cur, "{")
            if brace is NEED_MORE or brace is False:
                return brace
            # Silent commit: the record header is irrevocable but emits no
            # boundary; the first boundary inside a record is its first field.
            st.rec_names[-1].add(name.text)
            st.open_stack.append(("rec", []))
            st.cursor = cur.pos
            return True

        return self._unexpected(t)

    def _parse_rec_member(self):
        st = self.state
        cur = _Cursor(st.buf, st.eos, st.cursor)
        t = cur.next()
        if t is NEED_MORE:
            return NEED_MORE

        if t.kind == "punct" and t.text == "}":
            fields = st.open_stack[-1][1]
            seen: set[str] = set()
            for fname, foff in fields:
                if fname in seen:
                    return self._emit_error(
                        foff, "duplicate_field", f"duplicate field {fname}"
                    )
                seen.add(fname)
            st.open_stack.pop()
            return self._commit(cur.pos, "rec_close")

        if t.kind == "ident":
            colon = self._expect_punct(cur, ":")
            if colon is NEED_MORE or colon is False:
                return colon
            ty = cur.next()
            if ty is NEED_MORE:
                return NEED_MORE
            if ty.kind == "ident":
                return self._emit_error(
                    ty.off, "unknown_type", f"unknown type {ty.text}"
                )
            if ty.kind != "type":
                return self._unexpected(ty)
            semi = self._expect_punct(cur, ";")
            if semi is NEED_MORE or semi is False:
                return semi
            st.open_stack[-1][1].append((t.text, t.off))
            return self._commit(cur.pos, "rec_field")

        return self._unexpected(t)

    def _parse_expr(self, cur: _Cursor):
        first = self._parse_primary(cur)
        if first is NEED_MORE or first is False:
            return first
        etype, estart = first
        while True:
            op = cur.peek()
            if op is NEED_MORE:
                return NEED_MORE
            if op.kind != "punct" or op.text not in ("+", "=="):
                return etype, estart
            cur.next()
            rhs = self._parse_primary(cur)
            if rhs is NEED_MORE or rhs is False:
                return rhs
            rtype, rstart = rhs
            if op.text == "+":
                if etype != rtype or etype not in ("int", "str"):
                    return self._emit_error(
                        rstart,
                        "type_mismatch",
                        f"operator + cannot combine {etype} and {rtype}",
                    )
            else:
                if etype != rtype:
                    return self._emit_error(
                        rstart,
                        "type_mismatch",
                        f"operator == requires equal types, got {etype} and {rtype}",
                    )
                etype = "bool"

    def _parse_primary(self, cur: _Cursor):
        t = cur.next()
        if t is NEED_MORE:
            return NEED_MORE
        if t.kind == "int":
            return "int", t.off
        if t.kind == "string":
            return "str", t.off
        if t.kind == "ident":
            vtype = self._lookup(t.text)
            if vtype is None:
                return self._emit_error(
                    t.off,
                    "undeclared_identifier",
                    f"use of undeclared identifier {t.text}",
                )
            return vtype, t.off
        return self._unexpected(t)


class CheckerHost:
    """Owns sessions and snapshots, and routes their events.

    Every session and snapshot speaks over its own channel in an in-process
    hub. ``submit``/``start_session``/``resume`` return the (owner session
    id, message) pairs produced by that call, in emission order.
    """

    def __init__(
        self,
        interval: Optional[int] = DEFAULT_INTERVAL,
        prologue_checkpoint: bool = True,
        hub: Optional[ChannelHub] = None,
    ) -> None:
        if interval is not None and interval <= 0:
            raise ValueError("checkpoint interval must be positive")
        self.interval = interval
        self.prologue_checkpoint = prologue_checkpoint
        self.hub = hub or ChannelHub()
        self.sessions: dict[int, ActiveSession] = {}
        self.snapshots: dict[int, Snapshot] = {}
        self._chan_owner: dict[str, int] = {}
        self._next_id = 1
        self.checkpoints_created = 0
        self.checkpoints_resumed = 0

    def _alloc_id(self) -> int:
        sid = self._next_id
        self._next_id += 1
        return sid

    def _register_channel(self, name: str, sid: int) -> None:
        self._chan_owner[name] = sid

    def _drain(self) -> list[tuple[int, proto.Msg]]:
        return [
            (self._chan_owner[chan], msg) for chan, msg in self.hub.drain()
        ]

    def _register_snapshot(
        self, session: ActiveSession, off: int, state: CheckerState
    ) -> int:
        sid = self._alloc_id()
        snap = Snapshot(sid, session.id, off, state)
        self.snapshots[sid] = snap
        chan_name = f"chk.{sid}"
        self._register_channel(chan_name, sid)
        chan = self.hub.open(chan_name)
        chan.send(proto.Chkpt(off=off, id=sid, pid=session.id))
        self.checkpoints_created += 1
        return sid

    def start_session(
        self, chan: Optional[str] = None
    ) -> tuple[int, list[tuple[int, proto.Msg]]]:
        sid = self._alloc_id()
        chan_name = chan or f"chk.{sid}"
        self._register_channel(chan_name, sid)
        session = ActiveSession(self, sid, None, CheckerState(), chan_name)
        self.sessions[sid] = session
        return sid, self._drain()

    def resume(
        self, snapshot_id: int, chan: Optional[str] = None
    ) -> tuple[int, list[tuple[int, proto.Msg]]]:
        snap = self.snapshots.get(snapshot_id)
        if snap is None:
            raise proto.ProtocolError(f"unknown snapshot {snapshot_id}")
        sid = self._alloc_id()
        chan_name = chan or f"chk.{sid}"
        self._register_channel(chan_name, sid)
        session = ActiveSession(
            self, sid, snapshot_id, snap.state.clone(), chan_name
        )
        self.sessions[sid] = session
        self.checkpoints_resumed += 1
        return sid, self._drain()

    def submit(
        self, sid: int, delta: str, eos: bool = False
    ) -> list[tuple[int, proto.Msg]]:
        session = self.sessions.get(sid)
        if session is None:
            raise proto.ProtocolError(f"unknown session {sid}")
        session.submit(delta, eos=eos)
        return self._drain()

    def close_session(self, sid: int) -> None:
        session = self.sessions.pop(sid, None)
        if session is not None:
            session.channel.close()

    def destroy_snapshot(self, sid: int) -> None:
        snap = self.snapshots.pop(sid, None)
        if snap is not None:
            chan = self.hub.get(f"chk.{sid}")
            if chan is not None:
                chan.close()
