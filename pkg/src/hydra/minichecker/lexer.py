"""Streaming lexer for MiniLang.

Operates on UTF-8 bytes so every offset is a true byte offset. The lexer
never guesses at a token that could still grow: when the buffer ends inside
a possibly-extensible token (identifier, integer, ``=`` that may become
``==``, an open comment or string) and end-of-stream has not been signalled,
it reports NEED_MORE and the caller retries after the next delta.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_IDENT_RE = re.compile(rb"[A-Za-z_][A-Za-z0-9_]*")
_INT_RE = re.compile(rb"[0-9]+")
_STRING_RE = re.compile(rb'"[^"\n]*"')
_WS = b" \t\r\n"

KEYWORDS = {b"let": "let", b"if": "if", b"rec": "rec"}
TYPE_NAMES = {b"int": "int", b"str": "str", b"bool": "bool"}

# Sentinel: the buffer may still extend the next token; wait for more input.
NEED_MORE = object()


@dataclass(frozen=True)
class Token:
    kind: str  # let | if | rec | type | ident | int | string | punct | bad | eos
    text: str
    off: int
    end: int


def skip_trivia(buf: bytes, pos: int, eos: bool) -> tuple[int, bool]:
    """Advance past whitespace and // comments.

    Returns (new position, blocked). ``blocked`` means the scan parked on a
    potential or unterminated comment and needs more input; the position
    then points at the ``/`` so the rescan is cheap.
    """
    n = len(buf)
    while pos < n:
        b = buf[pos]
        if b in (0x20, 0x09, 0x0D, 0x0A):
            pos += 1
            continue
        if b == 0x2F:  # '/'
            if pos + 1 >= n:
                if eos:
                    return pos, False  # lone '/' at eos: a real (bad) token
                return pos, True
            if buf[pos + 1] != 0x2F:
                return pos, False  # lone '/': not trivia
            nl = buf.find(b"\n", pos + 2)
            if nl >= 0:
                pos = nl + 1
                continue
            if eos:
                return n, False  # comment runs to end of stream
            return pos, True
        break
    return pos, False


def next_token(buf: bytes, pos: int, eos: bool):
    """Lex one token at ``pos`` (trivia already skipped).

    Returns a Token or NEED_MORE. At end of input with eos set, returns a
    zero-width ``eos`` token.
    """
    n = len(buf)
    if pos >= n:
        if eos:
            return Token("eos", "", n, n)
        return NEED_MORE

    b = buf[pos]

    if b == 0x22:  # '"'
        m = _STRING_RE.match(buf, pos)
        if m:
            return Token("string", m.group()[1:-1].decode("utf-8"), pos, m.end())
        # No closing quote yet: a newline or eos makes it definitively bad.
        nl = buf.find(b"\n", pos + 1)
        if nl >= 0 or eos:
            return Token("bad", '"', pos, pos + 1)
        return NEED_MORE

    m = _IDENT_RE.match(buf, pos)
    if m:
        if m.end() == n and not eos:
            return NEED_MORE
        word = m.group()
        if word in KEYWORDS:
            return Token(KEYWORDS[word], word.decode(), pos, m.end())
        if word in TYPE_NAMES:
            return Token("type", word.decode(), pos, m.end())
        return Token("ident", word.decode(), pos, m.end())

    m = _INT_RE.match(buf, pos)
    if m:
        if m.end() == n and not eos:
            return NEED_MORE
        return Token("int", m.group().decode(), pos, m.end())

    if b == 0x3D:  # '='
        if pos + 1 < n:
            if buf[pos + 1] == 0x3D:
                return Token("punct", "==", pos, pos + 2)
            return Token("punct", "=", pos, pos + 1)
        if eos:
            return Token("punct", "=", pos, pos + 1)
        return NEED_MORE

    if b in (0x3B, 0x3A, 0x7B, 0x7D, 0x2B):  # ; : { } +
        return Token("punct", chr(b), pos, pos + 1)

    # Anything else (including a lone '/') is a bad single byte.
    return Token("bad", chr(b) if b < 128 else f"\\x{b:02x}", pos, pos + 1)
