"""Whole-program MiniLang checker used as the non-incremental oracle.

Deliberately independent of the streaming session implementation: it
tokenizes the entire source up front and walks it with a plain recursive
checker. Agreement between this path and the streaming path on first error
(offset, category) and on the boundary sequence is what the equivalence
suite asserts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

_TOKEN_RE = re.compile(
    rb"(?P<trivia>[ \t\r\n]+|//[^\n]*\n?)"
    rb"|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    rb"|(?P<num>[0-9]+)"
    rb'|(?P<string>"[^"\n]*")'
    rb"|(?P<eq2>==)"
    rb"|(?P<punct>[;:={}+])"
    rb"|(?P<other>.)",
    re.DOTALL,
)

_KEYWORDS = {"let", "if", "rec"}
_TYPES = {"int", "str", "bool"}


@dataclass(frozen=True)
class _Tok:
    kind: str  # keyword | type | ident | int | string | punct | other | eof
    text: str
    off: int
    end: int


@dataclass
class BatchResult:
    status: str  # "accepted" | "error"
    boundaries: list[tuple[int, str]] = field(default_factory=list)
    error: Optional[tuple[int, str, str]] = None  # (off, cat, diag)

    def to_json(self) -> dict:
        out: dict = {
            "status": self.status,
            "boundaries": [{"off": o, "cat": c} for o, c in self.boundaries],
        }
        if self.error is not None:
            off, cat, diag = self.error
            out["error"] = {"off": off, "cat": cat, "diag": diag}
        return out


class _CheckError(Exception):
    def __init__(self, off: int, cat: str, diag: str) -> None:
        super().__init__(f"{cat}@{off}: {diag}")
        self.payload = (off, cat, diag)


def _tokenize(data: bytes) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(data)
    while pos < n:
        m = _TOKEN_RE.match(data, pos)
        assert m is not None  # "other" matches any byte
        pos = m.end()
        kind = m.lastgroup
        if kind == "trivia":
            continue
        text = m.group().decode("utf-8", errors="replace")
        if kind == "word":
            if text in _KEYWORDS:
                toks.append(_Tok("keyword", text, m.start(), m.end()))
            elif text in _TYPES:
                toks.append(_Tok("type", text, m.start(), m.end()))
            else:
                toks.append(_Tok("ident", text, m.start(), m.end()))
        elif kind == "num":
            toks.append(_Tok("int", text, m.start(), m.end()))
        elif kind == "string":
            toks.append(_Tok("string", text[1:-1], m.start(), m.end()))
        elif kind == "eq2":
            toks.append(_Tok("punct", "==", m.start(), m.end()))
        elif kind == "punct":
            toks.append(_Tok("punct", text, m.start(), m.end()))
        else:
            toks.append(_Tok("other", text, m.start(), m.end()))
    return toks


class _Oracle:
    def __init__(self, toks: list[_Tok], total: int) -> None:
        self.toks = toks
        self.total = total
        self.i = 0
        self.scopes: list[dict[str, str]] = [{}]
        self.recs: list[set[str]] = [set()]
        self.boundaries: list[tuple[int, str]] = []

    def peek(self) -> _Tok:
        if self.i < len(self.toks):
            return self.toks[self.i]
        return _Tok("eof", "", self.total, self.total)

    def take(self) -> _Tok:
        t = self.peek()
        if t.kind != "eof":
            self.i += 1
        return t

    def fail_unexpected(self, t: _Tok) -> None:
        if t.kind == "eof":
            raise _CheckError(t.off, "syntax_error", "unexpected end of input")
        if t.kind == "other" and t.text == '"':
            raise _CheckError(t.off, "syntax_error", "unterminated string literal")
        if t.kind == "other":
            raise _CheckError(
                t.off, "syntax_error", f"unexpected character {t.text!r}"
            )
        raise _CheckError(t.off, "syntax_error", f"unexpected token {t.text!r}")

    def expect_punct(self, text: str) -> _Tok:
        t = self.take()
        if t.kind != "punct" or t.text != text:
            self.fail_unexpected(t)
        return t

    def lookup(self, name: str) -> Optional[str]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def run(self) -> None:
        if self.toks and self.toks[0].off > 0:
            self.boundaries.append((self.toks[0].off, "prologue"))
        self.stmts(top=True)
        self.boundaries.append((self.total, "eos"))

    def stmts(self, top: bool) -> None:
        while True:
            t = self.peek()
            if t.kind == "eof":
                if not top:
                    raise _CheckError(
                        self.total,
                        "syntax_error",
                        "unexpected end of input: unclosed block(s)",
                    )
                return
            if t.kind == "punct" and t.text == "}":
                if top:
                    self.fail_unexpected(t)
                self.take()
                self.scopes.pop()
                self.recs.pop()
                self.boundaries.append((t.end, "if_close"))
                return
            self.stmt()

    def stmt(self) -> None:
        t = self.take()
        if t.kind == "keyword" and t.text == "let":
            name = self.take()
            if name.kind != "ident":
                self.fail_unexpected(name)
            if name.text in self.scopes[-1]:
                raise _CheckError(
                    name.off, "redeclaration", f"redeclaration of {name.text}"
                )
            self.expect_punct(":")
            ty = self.take()
            if ty.kind == "ident":
                raise _CheckError(ty.off, "unknown_type", f"unknown type {ty.text}")
            if ty.kind != "type":
                self.fail_unexpected(ty)
            eq = self.take()
            if eq.kind != "punct" or eq.text != "=":
                self.fail_unexpected(eq)
            etype, estart = self.expr()
            if etype != ty.text:
                raise _CheckError(
                    estart, "type_mismatch", f"expected {ty.text}, got {etype}"
                )
            semi = self.expect_punct(";")
            self.scopes[-1][name.text] = ty.text
            self.boundaries.append((semi.end, "let_stmt"))
            return

        if t.kind == "ident":
            vtype = self.lookup(t.text)
            if vtype is None:
                raise _CheckError(
                    t.off,
                    "undeclared_identifier",
                    f"use of undeclared identifier {t.text}",
                )
            eq = self.take()
            if eq.kind != "punct" or eq.text != "=":
                self.fail_unexpected(eq)
            etype, estart = self.expr()
            if etype != vtype:
                raise _CheckError(
                    estart, "type_mismatch", f"expected {vtype}, got {etype}"
                )
            semi = self.expect_punct(";")
            self.boundaries.append((semi.end, "assign_stmt"))
            return

        if t.kind == "keyword" and t.text == "if":
            etype, estart = self.expr()
            if etype != "bool":
                raise _CheckError(
                    estart, "type_mismatch", f"expected bool, got {etype}"
                )
            brace = self.expect_punct("{")
            self.scopes.append({})
            self.recs.append(set())
            self.boundaries.append((brace.end, "if_open"))
            self.stmts(top=False)
            return

        if t.kind == "keyword" and t.text == "rec":
            name = self.take()
            if name.kind != "ident":
                self.fail_unexpected(name)
            if name.text in self.recs[-1]:
                raise _CheckError(
                    name.off,
                    "redeclaration",
                    f"redeclaration of record {name.text}",
                )
            self.expect_punct("{")
            self.recs[-1].add(name.text)
            self.rec_body()
            return

        self.fail_unexpected(t)

    def rec_body(self) -> None:
        fields: list[tuple[str, int]] = []
        while True:
            t = self.take()
            if t.kind == "punct" and t.text == "}":
                seen: set[str] = set()
                for fname, foff in fields:
                    if fname in seen:
                        raise _CheckError(
                            foff, "duplicate_field", f"duplicate field {fname}"
                        )
                    seen.add(fname)
                self.boundaries.append((t.end, "rec_close"))
                return
            if t.kind != "ident":
                self.fail_unexpected(t)
            self.expect_punct(":")
            ty = self.take()
            if ty.kind == "ident":
                raise _CheckError(ty.off, "unknown_type", f"unknown type {ty.text}")
            if ty.kind != "type":
                self.fail_unexpected(ty)
            semi = self.expect_punct(";")
            fields.append((t.text, t.off))
            self.boundaries.append((semi.end, "rec_field"))

    def expr(self) -> tuple[str, int]:
        etype, estart = self.primary()
        while True:
            t = self.peek()
            if t.kind != "punct" or t.text not in ("+", "=="):
                return etype, estart
            self.take()
            rtype, rstart = self.primary()
            if t.text == "+":
                if etype != rtype or etype not in ("int", "str"):
                    raise _CheckError(
                        rstart,
                        "type_mismatch",
                        f"operator + cannot combine {etype} and {rtype}",
                    )
            else:
                if etype != rtype:
                    raise _CheckError(
                        rstart,
                        "type_mismatch",
                        f"operator == requires equal types, got {etype} and {rtype}",
                    )
                etype = "bool"

    def primary(self) -> tuple[str, int]:
        t = self.take()
        if t.kind == "int":
            return "int", t.off
        if t.kind == "string":
            return "str", t.off
        if t.kind == "ident":
            vtype = self.lookup(t.text)
            if vtype is None:
                raise _CheckError(
                    t.off,
                    "undeclared_identifier",
                    f"use of undeclared identifier {t.text}",
                )
            return vtype, t.off
        self.fail_unexpected(t)
        raise AssertionError("unreachable")


def batch_check(source: str) -> BatchResult:
    """Check a complete program; errors are return values, never raised."""
    data = source.encode("utf-8")
    oracle = _Oracle(_tokenize(data), len(data))
    try:
        oracle.run()
    except _CheckError as exc:
        return BatchResult(
            status="error", boundaries=oracle.boundaries, error=exc.payload
        )
    return BatchResult(status="accepted", boundaries=oracle.boundaries)
