"""Seeded random MiniLang program generator for the equivalence suites.

Generates mostly-valid programs with optional injected errors of a chosen
category. Expected first-error positions are never computed here; the batch
oracle is the reference for that.
"""

from __future__ import annotations

import random

TYPES = ("int", "str", "bool")

ERROR_KINDS = (
    "undeclared_identifier",
    "type_mismatch",
    "redeclaration",
    "unknown_type",
    "duplicate_field",
    "syntax_error",
    "unclosed_block",
)

_STR_POOL = ("a", "b", "xyz", "data", "héllo", "wörld", "")
_COMMENTS = ("// note", "// setup", "// càfé", "//", "// block start")


class ProgramGen:
    def __init__(self, rng: random.Random) -> None:
        self.rng = rng
        self.scopes: list[dict[str, str]] = [{}]
        self.recs: list[set[str]] = [set()]
        self.counter = 0
        self.pieces: list[str] = []

    # -- helpers ----------------------------------------------------------

    def fresh_name(self, prefix: str = "v") -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def visible_vars(self, ty: str | None = None) -> list[tuple[str, str]]:
        out = []
        for scope in self.scopes:
            for name, t in scope.items():
                if ty is None or t == ty:
                    out.append((name, t))
        return out

    def literal(self, ty: str) -> str:
        if ty == "int":
            return str(self.rng.randrange(1000))
        if ty == "str":
            return '"' + self.rng.choice(_STR_POOL) + '"'
        a = self.rng.randrange(10)
        b = self.rng.randrange(10)
        return f"{a} == {b}"

    def operand(self, ty: str) -> str:
        choices = self.visible_vars(ty)
        if choices and self.rng.random() < 0.5:
            return self.rng.choice(choices)[0]
        return self.literal(ty)

    def expr(self, ty: str) -> str:
        if ty == "bool":
            bvars = self.visible_vars("bool")
            if bvars and self.rng.random() < 0.3:
                return self.rng.choice(bvars)[0]
            base = self.rng.choice(("int", "str"))
            return f"{self.operand(base)} == {self.operand(base)}"
        terms = [self.operand(ty)]
        while self.rng.random() < 0.3 and len(terms) < 3:
            terms.append(self.operand(ty))
        return " + ".join(terms)

    def sep(self) -> str:
        r = self.rng.random()
        if r < 0.70:
            return "\n"
        if r < 0.85:
            return " "
        if r < 0.95:
            return "\n" + self.rng.choice(_COMMENTS) + "\n"
        return "\n\n"

    # -- statements --------------------------------------------------------

    def stmt_let(self) -> str:
        ty = self.rng.choice(TYPES)
        name = self.fresh_name()
        init = self.expr(ty)  # built before the name becomes visible
        self.scopes[-1][name] = ty
        return f"let {name}: {ty} = {init};"

    def stmt_assign(self) -> str | None:
        choices = self.visible_vars()
        if not choices:
            return None
        name, ty = self.rng.choice(choices)
        return f"{name} = {self.expr(ty)};"

    def stmt_if_open(self) -> str:
        self.scopes.append({})
        self.recs.append(set())
        return f"if {self.expr('bool')} {{"

    def stmt_if_close(self) -> str:
        self.scopes.pop()
        self.recs.pop()
        return "}"

    def stmt_rec(self, duplicate_field: bool = False) -> str:
        name = self.fresh_name("R")
        self.recs[-1].add(name)
        n_fields = self.rng.randrange(1, 4)
        fields = [
            (self.fresh_name("f"), self.rng.choice(TYPES)) for _ in range(n_fields)
        ]
        if duplicate_field:
            dup = self.rng.choice(fields)[0]
            fields.append((dup, self.rng.choice(TYPES)))
        body = " ".join(f"{fn}: {ft};" for fn, ft in fields)
        return f"rec {name} {{ {body} }}"

    def error_stmt(self, kind: str) -> str | None:
        if kind == "undeclared_identifier":
            return f"{self.fresh_name('no')} = 1;"
        if kind == "type_mismatch":
            ty, other = self.rng.sample(["int", "str"], 2)
            return f"let {self.fresh_name()}: {ty} = {self.literal(other)};"
        if kind == "redeclaration":
            if not self.scopes[-1]:
                return None
            name = self.rng.choice(sorted(self.scopes[-1]))
            return f"let {name}: int = 1;"
        if kind == "unknown_type":
            return f"let {self.fresh_name()}: flt = 1;"
        if kind == "duplicate_field":
            return self.stmt_rec(duplicate_field=True)
        if kind == "syntax_error":
            return self.rng.choice(
                ("let ;", "let x int = 1;", "$", "let q: int = ;", "} ", "1 + 2;")
            )
        return None

    @property
    def depth(self) -> int:
        return len(self.scopes) - 1


def gen_program(
    rng: random.Random,
    n_stmts: int = 12,
    error: str | None = None,
    prologue_comment: bool | None = None,
) -> str:
    """Generate one program; ``error`` picks an injected failure category."""
    g = ProgramGen(rng)
    if prologue_comment is None:
        prologue_comment = rng.random() < 0.4
    if prologue_comment:
        g.pieces.append(rng.choice(_COMMENTS) + "\n")

    inject_at = rng.randrange(1, n_stmts) if error else None
    injected = False

    for i in range(n_stmts):
        if inject_at is not None and i == inject_at and not injected:
            if error == "unclosed_block":
                g.pieces.append(g.stmt_if_open())
                g.pieces.append(g.sep())
                injected = True
                continue
            stmt = g.error_stmt(error)
            if stmt is not None:
                g.pieces.append(stmt)
                g.pieces.append(g.sep())
                injected = True
                # A little trailing content past the first error.
                for _ in range(rng.randrange(0, 3)):
                    g.pieces.append(g.stmt_let())
                    g.pieces.append(g.sep())
                break
        r = rng.random()
        if r < 0.40:
            stmt = g.stmt_let()
        elif r < 0.58:
            stmt = g.stmt_assign() or g.stmt_let()
        elif r < 0.72 and g.depth < 3:
            stmt = g.stmt_if_open()
        elif r < 0.84 and g.depth > 0:
            stmt = g.stmt_if_close()
        else:
            stmt = g.stmt_rec()
        g.pieces.append(stmt)
        g.pieces.append(g.sep())

    if error != "unclosed_block" or not injected:
        while g.depth > 0:
            g.pieces.append(g.stmt_if_close())
            g.pieces.append(g.sep())
    return "".join(g.pieces)


def char_safe_chunks(source: str, rng: random.Random, max_chunk: int = 40) -> list[str]:
    """Split a program into random submit deltas at character boundaries."""
    data = source.encode("utf-8")
    chunks = []
    pos = 0
    while pos < len(data):
        step = rng.randrange(1, max_chunk + 1)
        end = min(len(data), pos + step)
        while end < len(data) and (data[end] & 0xC0) == 0x80:
            end += 1
        chunks.append(data[pos:end].decode("utf-8"))
        pos = end
    return chunks
