"""Minimal preprocessor: object-like #define and project-local #include.

Anything else that starts with '#' is reported as an unsupported construct.
The compatibility header rtt_annotations.h is recognized by name and
skipped, because the contract annotations are first-class syntax here; the
shipped header only matters when an ordinary C compiler builds the same
sources.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from ..errors import ParseError, UnsupportedConstruct
from .lexer import Token, lex

COMPAT_HEADER = "rtt_annotations.h"


@dataclass
class MacroTable:
    macros: dict[str, list[Token]] = field(default_factory=dict)


def strip_comments(text: str) -> str:
    """Blank out comments, preserving newlines so line numbers survive."""
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == '"' or c == "'":
            quote = c
            out.append(c)
            i += 1
            while i < n and text[i] != quote:
                if text[i] == "\\" and i + 1 < n:
                    out.append(text[i:i + 2])
                    i += 2
                    continue
                out.append(text[i])
                i += 1
            if i < n:
                out.append(quote)
                i += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise ParseError("unterminated comment", text.count("\n", 0, i) + 1)
            out.append("\n" * text.count("\n", i, j + 2))
            i = j + 2
            continue
        out.append(c)
        i += 1
    return "".join(out)


def preprocess(text: str, file_name: str = "<input>", include_dir: str | None = None,
               table: MacroTable | None = None) -> list[Token]:
    """Expand directives and macros; return the token stream without EOF."""
    if table is None:
        table = MacroTable()
    if include_dir is None:
        include_dir = os.path.dirname(os.path.abspath(file_name)) if os.path.sep in file_name else "."
    text = strip_comments(text)
    tokens: list[Token] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        stripped = raw.strip()
        if stripped.startswith("#"):
            _directive(stripped, lineno, include_dir, table, tokens)
            continue
        if stripped:
            tokens.extend(lex(raw, first_line=lineno)[:-1])
    return _expand(tokens, table)


def preprocess_and_lex(text: str, file_name: str = "<input>",
                       include_dir: str | None = None) -> list[Token]:
    tokens = preprocess(text, file_name, include_dir)
    last_line = tokens[-1].line if tokens else 1
    return tokens + [Token("eof", "", None, last_line, 1)]


def _directive(line: str, lineno: int, include_dir: str, table: MacroTable,
               out: list[Token]) -> None:
    body = line[1:].strip()
    if body.startswith("define"):
        rest = body[len("define"):].strip()
        toks = lex(rest, first_line=lineno)[:-1]
        if not toks or toks[0].kind not in ("ident", "keyword"):
            raise ParseError("malformed #define", lineno)
        name = toks[0].text
        if len(toks) > 1 and toks[1].text == "(" and toks[1].col == toks[0].col + len(name):
            raise UnsupportedConstruct("function-like macro", lineno)
        table.macros[name] = toks[1:]
        return
    if body.startswith("include"):
        rest = body[len("include"):].strip()
        if rest.startswith("<"):
            raise UnsupportedConstruct(f"system include {rest}", lineno)
        if not (rest.startswith('"') and rest.endswith('"')):
            raise ParseError("malformed #include", lineno)
        name = rest[1:-1]
        if os.path.basename(name) == COMPAT_HEADER:
            return
        path = os.path.join(include_dir, name)
        if not os.path.exists(path):
            raise ParseError(f"include file not found: {name}", lineno)
        with open(path, "r", encoding="utf-8") as fh:
            included = fh.read()
        out.extend(preprocess(included, path, os.path.dirname(path), table))
        return
    word = body.split()[0] if body else ""
    raise UnsupportedConstruct(f"preprocessor directive #{word}", lineno)


def _expand(tokens: list[Token], table: MacroTable) -> list[Token]:
    out: list[Token] = []
    for tok in tokens:
        _expand_one(tok, table, out, frozenset())
    return out


def _expand_one(tok: Token, table: MacroTable, out: list[Token], active: frozenset[str]) -> None:
    if tok.kind == "ident" and tok.text in table.macros and tok.text not in active:
        inner = active | {tok.text}
        for rep in table.macros[tok.text]:
            relined = Token(rep.kind, rep.text, rep.value, tok.line, tok.col)
            _expand_one(relined, table, out, inner)
        return
    out.append(tok)
