"""Syntactic and semantic checking of generated queries.

Canonicalization is token-level (comments stripped, whitespace collapsed,
keywords uppercased, identifier quoting normalized) and is therefore
semantics-preserving by construction. Syntax truth is delegated to the
embedded SQLite engine: a statement is prepared against a scratch database
under a deny-all authorizer, so grammar rejections ("syntax error",
"incomplete input") are cleanly separable from name-resolution or
authorization errors, which imply a successful parse.

Correctness is execution-based: both queries run on a freshly provisioned
fixture and their result-set fingerprints are compared, order-insensitively
unless the case says row order matters.
"""

from __future__ import annotations

import enum
import hashlib
import math
import re
import sqlite3
import time
from dataclasses import dataclass
from typing import Callable, Iterator, Protocol

DEFAULT_TIMEOUT_S = 5.0
DEFAULT_ROW_CAP = 10_000
CELL_ENCODING = "ttq-cells-v1"

# Progress-handler granularity: VM instructions between deadline checks.
_PROGRESS_INSTRUCTIONS = 2000


class SqlCheckError(Exception):
    """Harness-side failure (bad gold query, broken fixture)."""


# --- tokenizer --------------------------------------------------------------

class TokenKind(enum.Enum):
    WORD = "word"
    QUOTED = "quoted"     # quoted identifier; text is the unescaped inner name
    STRING = "string"     # text is the literal token, quotes included
    NUMBER = "number"
    BLOB = "blob"
    PARAM = "param"
    OP = "op"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str


class TokenizeError(ValueError):
    pass


# SQLite reserved and non-reserved keywords; used only for display casing.
KEYWORDS = frozenset(
    """
    ABORT ACTION ADD AFTER ALL ALTER ALWAYS ANALYZE AND AS ASC ATTACH
    AUTOINCREMENT BEFORE BEGIN BETWEEN BY CASCADE CASE CAST CHECK COLLATE
    COLUMN COMMIT CONFLICT CONSTRAINT CREATE CROSS CURRENT CURRENT_DATE
    CURRENT_TIME CURRENT_TIMESTAMP DATABASE DEFAULT DEFERRABLE DEFERRED
    DELETE DESC DETACH DISTINCT DO DROP EACH ELSE END ESCAPE EXCEPT EXCLUDE
    EXCLUSIVE EXISTS EXPLAIN FAIL FILTER FIRST FOLLOWING FOR FOREIGN FROM
    FULL GENERATED GLOB GROUP GROUPS HAVING IF IGNORE IMMEDIATE IN INDEX
    INDEXED INITIALLY INNER INSERT INSTEAD INTERSECT INTO IS ISNULL JOIN KEY
    LAST LEFT LIKE LIMIT MATCH MATERIALIZED NATURAL NO NOT NOTHING NOTNULL
    NULL NULLS OF OFFSET ON OR ORDER OTHERS OUTER OVER PARTITION PLAN PRAGMA
    PRECEDING PRIMARY QUERY RAISE RANGE RECURSIVE REFERENCES REGEXP REINDEX
    RELEASE RENAME REPLACE RESTRICT RETURNING RIGHT ROLLBACK ROW ROWS
    SAVEPOINT SELECT SET TABLE TEMP TEMPORARY THEN TIES TO TRANSACTION
    TRIGGER UNBOUNDED UNION UNIQUE UPDATE USING VACUUM VALUES VIEW VIRTUAL
    WHEN WHERE WINDOW WITH WITHOUT
    """.split()
)

_NUMBER_RE = re.compile(r"0[xX][0-9A-Fa-f]+|(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*")
_PARAM_RE = re.compile(r"\?\d*|[:@$][A-Za-z0-9_]+")
_BARE_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
# Longest operators first.
_OPERATORS = ("->>", "->", "||", "<<", ">>", "<=", ">=", "==", "!=", "<>",
              "<", ">", "=", "+", "-", "*", "/", "%", "&", "|", "~",
              "(", ")", ",", ";", ".")


def tokenize(sql: str) -> list[Token]:
    """Lex SQL into tokens, dropping whitespace and comments."""
    tokens: list[Token] = []
    i, n = 0, len(sql)
    while i < n:
        ch = sql[i]
        if ch in " \t\r\n\f\v":
            i += 1
            continue
        if sql.startswith("--", i):
            end = sql.find("\n", i)
            i = n if end == -1 else end + 1
            continue
        if sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            if end == -1:
                raise TokenizeError("unterminated block comment")
            i = end + 2
            continue
        if ch == "'" or (ch in "xX" and i + 1 < n and sql[i + 1] == "'"):
            is_blob = ch in "xX"
            start = i
            j = i + (2 if is_blob else 1)
            while True:
                j = sql.find("'", j)
                if j == -1:
                    raise TokenizeError("unterminated string literal")
                if j + 1 < n and sql[j + 1] == "'":
                    j += 2
                    continue
                break
            if is_blob:
                content = sql[start + 2:j]
                if len(content) % 2 or not all(
                        c in "0123456789abcdefABCDEF" for c in content):
                    raise TokenizeError(f"malformed blob literal at offset {start}")
                tokens.append(Token(TokenKind.BLOB, f"X'{content.upper()}'"))
            else:
                tokens.append(Token(TokenKind.STRING, sql[start:j + 1]))
            i = j + 1
            continue
        if ch in '"`':
            j = i + 1
            parts: list[str] = []
            while True:
                k = sql.find(ch, j)
                if k == -1:
                    raise TokenizeError("unterminated quoted identifier")
                if k + 1 < n and sql[k + 1] == ch:
                    parts.append(sql[j:k] + ch)
                    j = k + 2
                    continue
                parts.append(sql[j:k])
                break
            tokens.append(Token(TokenKind.QUOTED, "".join(parts)))
            i = k + 1
            continue
        if ch == "[":
            k = sql.find("]", i + 1)
            if k == -1:
                raise TokenizeError("unterminated bracketed identifier")
            tokens.append(Token(TokenKind.QUOTED, sql[i + 1:k]))
            i = k + 1
            continue
        if ch.isdigit() or ch == ".":
            m = _NUMBER_RE.match(sql, i)
            if m:
                tokens.append(Token(TokenKind.NUMBER, m.group()))
                i = m.end()
                continue
        m = _WORD_RE.match(sql, i)
        if m:
            tokens.append(Token(TokenKind.WORD, m.group()))
            i = m.end()
            continue
        m = _PARAM_RE.match(sql, i)
        if m:
            tokens.append(Token(TokenKind.PARAM, m.group()))
            i = m.end()
            continue
        for op in _OPERATORS:
            if sql.startswith(op, i):
                tokens.append(Token(TokenKind.OP, op))
                i += len(op)
                break
        else:
            raise TokenizeError(f"unexpected character {ch!r} at offset {i}")
    return tokens


def _render(tokens: list[Token]) -> str:
    """Rebuild token stream with canonical spacing, casing, and quoting."""
    out: list[str] = []
    prev: Token | None = None
    for tok in tokens:
        if tok.kind is TokenKind.WORD:
            text = tok.text.upper() if tok.text.upper() in KEYWORDS else tok.text
        elif tok.kind is TokenKind.QUOTED:
            if _BARE_IDENT_RE.match(tok.text) and tok.text.upper() not in KEYWORDS:
                text = tok.text
            else:
                text = '"' + tok.text.replace('"', '""') + '"'
        else:
            text = tok.text

        if prev is None:
            glue = ""
        elif text in (",", ")", ";", "."):
            glue = ""
        elif prev.text in ("(", ".") and prev.kind is TokenKind.OP:
            glue = ""
        elif text == "(" and prev.kind in (TokenKind.WORD, TokenKind.QUOTED) \
                and prev.text.upper() not in KEYWORDS:
            glue = ""  # function call
        else:
            glue = " "
        out.append(glue + text)
        prev = tok
    return "".join(out)


def split_statements(script: str) -> list[str]:
    """Split a script on top-level semicolons (common-core scripts only;
    statements with embedded semicolon bodies, e.g. triggers, are out of
    dialect scope)."""
    tokens = tokenize(script)
    statements: list[list[Token]] = [[]]
    for tok in tokens:
        if tok.kind is TokenKind.OP and tok.text == ";":
            statements.append([])
        else:
            statements[-1].append(tok)
    return [_render(group) for group in statements if group]


def has_top_level_order_by(sql: str) -> bool:
    """True when the statement carries an ORDER BY outside any parentheses."""
    try:
        tokens = tokenize(sql)
    except TokenizeError:
        return False
    depth = 0
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.OP:
            if tok.text == "(":
                depth += 1
            elif tok.text == ")":
                depth = max(0, depth - 1)
        elif (depth == 0 and tok.kind is TokenKind.WORD
              and tok.text.upper() == "ORDER"
              and i + 1 < len(tokens)
              and tokens[i + 1].kind is TokenKind.WORD
              and tokens[i + 1].text.upper() == "BY"):
            return True
    return False


# --- canonicalization -------------------------------------------------------

PARSE_OK = "ok"
PARSE_ERROR = "parse-error"

_SYNTAX_MARKERS = ("syntax error", "unrecognized token", "incomplete input")


@dataclass(frozen=True)
class CanonicalQuery:
    original: str
    canonical: str
    status: str
    detail: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == PARSE_OK


def _engine_parse_detail(sql: str) -> str | None:
    """Prepare against a scratch db under a deny-all authorizer.

    Returns None when the engine parsed the statement (even if it then failed
    name resolution or authorization), else the engine's rejection message.
    """
    conn = sqlite3.connect(":memory:")
    try:
        conn.set_authorizer(lambda *_args: sqlite3.SQLITE_DENY)
        try:
            conn.execute(sql)
        except sqlite3.Error as exc:
            message = str(exc)
            if any(marker in message.lower() for marker in _SYNTAX_MARKERS):
                return message
        return None
    finally:
        conn.close()


def canonicalize(query: str) -> CanonicalQuery:
    """Normalize query text; status is parse-error when the dialect rejects it."""
    try:
        tokens = tokenize(query)
    except TokenizeError as exc:
        return CanonicalQuery(query, "", PARSE_ERROR, str(exc))
    while tokens and tokens[-1] == Token(TokenKind.OP, ";"):
        tokens.pop()
    if not tokens:
        return CanonicalQuery(query, "", PARSE_ERROR, "empty statement")
    if any(t == Token(TokenKind.OP, ";") for t in tokens):
        return CanonicalQuery(query, "", PARSE_ERROR,
                              "multiple statements in one generation")
    canonical = _render(tokens)
    detail = _engine_parse_detail(canonical)
    if detail is not None:
        return CanonicalQuery(query, "", PARSE_ERROR, detail)
    return CanonicalQuery(query, canonical, PARSE_OK)


# --- execution and fingerprints ---------------------------------------------

class ExecutionError(Exception):
    """A checked query failed to run: mutation attempt, runtime error,
    timeout, or row-cap overflow."""

    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail


def _normalize_cell(value: object) -> str:
    if value is None:
        return "z"
    if isinstance(value, int):
        return f"n:{value}"
    if isinstance(value, float):
        if math.isnan(value):
            return "f:nan"
        if math.isinf(value):
            return "f:inf" if value > 0 else "f:-inf"
        text = format(value, ".9g")
        rounded = float(text)
        if rounded.is_integer():
            return f"n:{int(rounded)}"
        return f"n:{text}"
    if isinstance(value, bytes):
        return "b:" + value.hex()
    return "t:" + str(value)


def _digest(parts: list[str], header: str) -> str:
    h = hashlib.sha256()
    h.update(header.encode("utf-8"))
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x1e")
    return h.hexdigest()


@dataclass(frozen=True)
class ResultFingerprint:
    column_count: int
    row_count: int
    multiset_digest: str
    sequence_digest: str
    encoding: str = CELL_ENCODING

    def digest(self, order_sensitive: bool) -> str:
        return self.sequence_digest if order_sensitive else self.multiset_digest

    def to_dict(self) -> dict:
        return {
            "column_count": self.column_count,
            "row_count": self.row_count,
            "multiset_digest": self.multiset_digest,
            "sequence_digest": self.sequence_digest,
            "encoding": self.encoding,
        }


def fingerprint_rows(column_count: int, rows: list[tuple]) -> ResultFingerprint:
    encoded = ["\x1f".join(_normalize_cell(cell) for cell in row) for row in rows]
    header = f"{CELL_ENCODING};cols={column_count};rows={len(encoded)};"
    return ResultFingerprint(
        column_count=column_count,
        row_count=len(encoded),
        multiset_digest=_digest(sorted(encoded), header),
        sequence_digest=_digest(encoded, header),
    )


_READ_ACTIONS = frozenset({
    sqlite3.SQLITE_SELECT,
    sqlite3.SQLITE_READ,
    sqlite3.SQLITE_FUNCTION,
    sqlite3.SQLITE_RECURSIVE,
})


def _read_only_authorizer(action: int, *_rest: object) -> int:
    return sqlite3.SQLITE_OK if action in _READ_ACTIONS else sqlite3.SQLITE_DENY


def _allow_all_authorizer(*_args: object) -> int:
    return sqlite3.SQLITE_OK


def execute(
    conn: sqlite3.Connection,
    query: str,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    row_cap: int = DEFAULT_ROW_CAP,
) -> ResultFingerprint:
    """Run one read-only statement and fingerprint its full result set.

    Mutating statements are rejected by a read-only authorizer; long runs are
    interrupted after ``timeout_s``; results larger than ``row_cap`` rows are
    refused rather than truncated.
    """
    deadline = time.monotonic() + timeout_s
    timed_out = False

    def _progress() -> int:
        nonlocal timed_out
        if time.monotonic() > deadline:
            timed_out = True
            return 1
        return 0

    conn.set_authorizer(_read_only_authorizer)
    conn.set_progress_handler(_progress, _PROGRESS_INSTRUCTIONS)
    try:
        try:
            cursor = conn.execute(query)
        except sqlite3.Error as exc:
            message = str(exc)
            if timed_out or "interrupted" in message:
                raise ExecutionError("timeout", f"exceeded {timeout_s}s") from exc
            if "not authorized" in message:
                raise ExecutionError("mutation", "statement attempts mutation "
                                     "or non-read action") from exc
            raise ExecutionError("runtime", message) from exc
        try:
            columns = len(cursor.description) if cursor.description else 0
            rows: list[tuple] = []
            while True:
                chunk = cursor.fetchmany(256)
                if not chunk:
                    break
                rows.extend(chunk)
                if len(rows) > row_cap:
                    raise ExecutionError("row-cap", f"result exceeds {row_cap} rows")
        except sqlite3.Error as exc:
            if timed_out or "interrupted" in str(exc):
                raise ExecutionError("timeout", f"exceeded {timeout_s}s") from exc
            raise ExecutionError("runtime", str(exc)) from exc
        finally:
            cursor.close()
    finally:
        conn.set_progress_handler(None, 0)
        # Passing None only clears the authorizer on Python >= 3.11; install
        # a permissive callback so the connection stays usable everywhere.
        conn.set_authorizer(_allow_all_authorizer)
    return fingerprint_rows(columns, rows)


# --- equivalence verdicts ---------------------------------------------------

class VerdictStatus(str, enum.Enum):
    EQUIVALENT = "equivalent"
    NOT_EQUIVALENT = "not-equivalent"
    GEN_PARSE_ERROR = "gen-parse-error"
    GEN_EXEC_ERROR = "gen-exec-error"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class EquivalenceVerdict:
    status: VerdictStatus
    generated_fingerprint: ResultFingerprint | None = None
    gold_fingerprint: ResultFingerprint | None = None
    diagnostics: str | None = None

    @property
    def is_equivalent(self) -> bool:
        return self.status is VerdictStatus.EQUIVALENT

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "generated_fingerprint": (
                None if self.generated_fingerprint is None
                else self.generated_fingerprint.to_dict()
            ),
            "gold_fingerprint": (
                None if self.gold_fingerprint is None
                else self.gold_fingerprint.to_dict()
            ),
            "diagnostics": self.diagnostics,
        }


class Provisionable(Protocol):
    def provision(self) -> sqlite3.Connection: ...


def equivalent(
    fixture: Provisionable,
    generated: str,
    gold: str,
    order_sensitive: bool,
    timeout_s: float = DEFAULT_TIMEOUT_S,
    row_cap: int = DEFAULT_ROW_CAP,
) -> EquivalenceVerdict:
    """Execution-based equivalence of a generated query against gold.

    Provisions a private database, runs both queries, and compares result-set
    fingerprints: row multisets normally, row sequences when the gold query's
    semantics depend on order.
    """
    canon_gen = canonicalize(generated)
    if not canon_gen.ok:
        return EquivalenceVerdict(VerdictStatus.GEN_PARSE_ERROR,
                                  diagnostics=canon_gen.detail)
    canon_gold = canonicalize(gold)
    if not canon_gold.ok:
        raise SqlCheckError(f"gold query fails to parse: {canon_gold.detail}")

    conn = fixture.provision()
    try:
        try:
            gold_fp = execute(conn, canon_gold.canonical, timeout_s, row_cap)
        except ExecutionError as exc:
            raise SqlCheckError(f"gold query failed to execute: {exc}") from exc
        try:
            gen_fp = execute(conn, canon_gen.canonical, timeout_s, row_cap)
        except ExecutionError as exc:
            return EquivalenceVerdict(VerdictStatus.GEN_EXEC_ERROR,
                                      gold_fingerprint=gold_fp,
                                      diagnostics=f"{exc.kind}: {exc.detail}")
    finally:
        conn.close()

    matched = (gen_fp.column_count == gold_fp.column_count
               and gen_fp.digest(order_sensitive) == gold_fp.digest(order_sensitive))
    status = VerdictStatus.EQUIVALENT if matched else VerdictStatus.NOT_EQUIVALENT
    return EquivalenceVerdict(status, generated_fingerprint=gen_fp,
                              gold_fingerprint=gold_fp)


def run_rows(conn: sqlite3.Connection, query: str,
             timeout_s: float = DEFAULT_TIMEOUT_S,
             row_cap: int = DEFAULT_ROW_CAP) -> list[tuple]:
    """Read-only execution returning raw rows (used by suite validation)."""
    deadline = time.monotonic() + timeout_s
    conn.set_authorizer(_read_only_authorizer)
    conn.set_progress_handler(lambda: 1 if time.monotonic() > deadline else 0,
                              _PROGRESS_INSTRUCTIONS)
    try:
        cursor = conn.execute(query)
        try:
            rows = cursor.fetchmany(row_cap + 1)
        finally:
            cursor.close()
        return rows
    finally:
        conn.set_progress_handler(None, 0)
        # Passing None only clears the authorizer on Python >= 3.11; install
        # a permissive callback so the connection stays usable everywhere.
        conn.set_authorizer(_allow_all_authorizer)
