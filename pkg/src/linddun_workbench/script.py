"""The analyst operation script: one statement per line, whitespace-insensitive.

Grammar:

    line  := fid ":=" expr
           | fid ":=" "carry(" pid ")"
           | "discard(" id ["," string] ")"
           | "profile(" pid "," "{" [prop ("," prop)*] "}" ")"
           | "map(" fid "," nodeset "," nodeid ")"
           | "safety(" fid "," nodeset ")"
    expr  := pid
           | "embrace(" id ("," id)* ["; rep=" id] ")"
           | "rename(" expr "," quoted-label ")"

"#" starts a comment that runs to the end of the line. Quoted labels use
backslash escapes for the quote and the backslash, and may carry
*asterisk-delimited* domain-specific spans.

A bare preliminary id on the right of ":=" is shorthand for carry(); the
canonical printer always writes the carry() form, so printing then parsing
any statement list reproduces it exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError
from .model import Label, LinddunProfile, ThreatId
from .trees import NodeId

_KEYWORDS = ("discard", "profile", "map", "safety", "embrace", "rename", "carry", "rep")

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<assign>:=)
      | (?P<string>"(?:[^"\\\n]|\\.)*")
      | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
      | (?P<punct>[(){},;=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class ExprRef:
    id: ThreatId


@dataclass(frozen=True)
class ExprEmbrace:
    ids: tuple[ThreatId, ...]
    representative: ThreatId | None = None


@dataclass(frozen=True)
class ExprRename:
    inner: "Expr"
    label: Label


Expr = ExprRef | ExprEmbrace | ExprRename


@dataclass(frozen=True)
class AssignStmt:
    """``fid := expr`` where expr is an embrace, a rename, or a final-id ref."""

    target: ThreatId
    expr: Expr


@dataclass(frozen=True)
class CarryStmt:
    target: ThreatId
    source: ThreatId


@dataclass(frozen=True)
class DiscardStmt:
    id: ThreatId
    reason: str = ""


@dataclass(frozen=True)
class ProfileStmt:
    id: ThreatId
    profile: LinddunProfile


@dataclass(frozen=True)
class MapStmt:
    final_id: ThreatId
    nodes: tuple[NodeId, ...]
    representative: NodeId


@dataclass(frozen=True)
class SafetyStmt:
    final_id: ThreatId
    nodes: tuple[NodeId, ...]


Statement = AssignStmt | CarryStmt | DiscardStmt | ProfileStmt | MapStmt | SafetyStmt


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    column: int


def _tokenize(line: str, line_no: int) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(line):
        if line[pos] == "#":
            break
        m = _TOKEN_RE.match(line, pos)
        if not m:
            raise ParseError(f"unexpected character {line[pos]!r}", line=line_no, column=pos + 1)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos + 1))
        pos = m.end()
    return tokens


def _unescape(raw: str, line_no: int, column: int) -> str:
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            i += 1
            if i >= len(body) or body[i] not in ('"', "\\"):
                raise ParseError("bad escape in string", line=line_no, column=column)
            out.append(body[i])
        else:
            out.append(ch)
        i += 1
    return "".join(out)


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


class _LineParser:
    def __init__(self, tokens: list[_Token], line_no: int, length: int):
        self.tokens = tokens
        self.line_no = line_no
        self.length = length
        self.pos = 0

    def error(self, message: str) -> ParseError:
        column = self.tokens[self.pos].column if self.pos < len(self.tokens) else self.length + 1
        return ParseError(message, line=self.line_no, column=column)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(
        self,
        kind: str | None = None,
        literal: str | None = None,
        describe: str | None = None,
    ) -> _Token:
        tok = self.peek()
        want = describe or (repr(literal) if literal is not None else kind)
        if tok is None:
            raise self.error(f"expected {want}, found end of line")
        if (kind is not None and tok.kind != kind) or (
            literal is not None and tok.text != literal
        ):
            raise self.error(f"expected {want}, found {tok.text!r}")
        self.pos += 1
        return tok

    def threat_id(self, prefixes: str = "pfm", role: str = "threat id") -> ThreatId:
        tok = self.next("ident", describe=f"a {role}")
        try:
            parsed = ThreatId.parse(tok.text)
        except ParseError as exc:
            raise ParseError(str(exc), line=self.line_no, column=tok.column) from exc
        if parsed.prefix not in prefixes:
            raise ParseError(
                f"expected a {role}, found {tok.text!r}", line=self.line_no, column=tok.column
            )
        return parsed

    def node_id(self) -> NodeId:
        tok = self.next("ident", describe="a tree node id")
        try:
            return NodeId.parse(tok.text)
        except ParseError as exc:
            raise ParseError(str(exc), line=self.line_no, column=tok.column) from exc

    def label(self) -> Label:
        tok = self.next("string", describe="a quoted label")
        try:
            return Label.parse(_unescape(tok.text, self.line_no, tok.column))
        except ParseError as exc:
            raise ParseError(str(exc), line=self.line_no, column=tok.column) from exc

    def node_set(self) -> tuple[NodeId, ...]:
        self.next("punct", "{")
        nodes: list[NodeId] = []
        if self.peek() and self.peek().text == "}":
            self.next()
            return ()
        nodes.append(self.node_id())
        while self.peek() and self.peek().text == ",":
            self.next()
            nodes.append(self.node_id())
        self.next("punct", "}")
        return tuple(nodes)

    def props(self) -> LinddunProfile:
        self.next("punct", "{")
        letters: list[str] = []
        if self.peek() and self.peek().text == "}":
            self.next()
            return LinddunProfile()
        while True:
            tok = self.next("ident", describe="a LINDDUN property letter")
            letters.append(tok.text)
            if self.peek() and self.peek().text == ",":
                self.next()
                continue
            break
        self.next("punct", "}")
        try:
            return LinddunProfile.of(*letters)
        except Exception as exc:
            raise self.error(str(exc)) from exc

    def expr(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise self.error("expected an expression, found end of line")
        if tok.kind == "ident" and tok.text == "embrace":
            return self.embrace_expr()
        if tok.kind == "ident" and tok.text == "rename":
            return self.rename_expr()
        return ExprRef(self.threat_id("pf", "preliminary or final id"))

    def embrace_expr(self) -> ExprEmbrace:
        self.next("ident", "embrace")
        self.next("punct", "(")
        ids = [self.threat_id("pf", "preliminary or final id")]
        while self.peek() and self.peek().text == ",":
            self.next()
            ids.append(self.threat_id("pf", "preliminary or final id"))
        representative = None
        if self.peek() and self.peek().text == ";":
            self.next()
            self.next("ident", "rep")
            self.next("punct", "=")
            representative = self.threat_id("pf", "preliminary or final id")
        self.next("punct", ")")
        return ExprEmbrace(tuple(ids), representative)

    def rename_expr(self) -> ExprRename:
        self.next("ident", "rename")
        self.next("punct", "(")
        inner = self.expr()
        self.next("punct", ",")
        label = self.label()
        self.next("punct", ")")
        return ExprRename(inner, label)

    def statement(self) -> Statement:
        tok = self.peek()
        if tok is None:
            raise self.error("empty statement")
        if tok.kind != "ident":
            raise self.error(f"expected a statement, found {tok.text!r}")
        if tok.text == "discard":
            return self.discard_stmt()
        if tok.text == "profile":
            return self.profile_stmt()
        if tok.text == "map":
            return self.map_stmt()
        if tok.text == "safety":
            return self.safety_stmt()
        if tok.text in _KEYWORDS:
            raise self.error(f"keyword {tok.text!r} cannot start a statement")
        target = self.threat_id("f", "final id")
        self.next("assign", describe="':='")
        nxt = self.peek()
        if nxt is not None and nxt.kind == "ident" and nxt.text == "carry":
            self.next()
            self.next("punct", "(")
            source = self.threat_id("p", "preliminary id")
            self.next("punct", ")")
            return CarryStmt(target, source)
        expr = self.expr()
        if isinstance(expr, ExprRef):
            if expr.id.prefix == "p":
                return CarryStmt(target, expr.id)
            raise self.error("a bare id on the right of := must be a preliminary id")
        return AssignStmt(target, expr)

    def discard_stmt(self) -> DiscardStmt:
        self.next("ident", "discard")
        self.next("punct", "(")
        target = self.threat_id("pf", "preliminary or final id")
        reason = ""
        if self.peek() and self.peek().text == ",":
            self.next()
            tok = self.next("string", describe="a quoted reason")
            reason = _unescape(tok.text, self.line_no, tok.column)
        self.next("punct", ")")
        return DiscardStmt(target, reason)

    def profile_stmt(self) -> ProfileStmt:
        self.next("ident", "profile")
        self.next("punct", "(")
        target = self.threat_id("p", "preliminary id")
        self.next("punct", ",")
        profile = self.props()
        self.next("punct", ")")
        return ProfileStmt(target, profile)

    def map_stmt(self) -> MapStmt:
        self.next("ident", "map")
        self.next("punct", "(")
        target = self.threat_id("f", "final id")
        self.next("punct", ",")
        nodes = self.node_set()
        self.next("punct", ",")
        representative = self.node_id()
        self.next("punct", ")")
        return MapStmt(target, nodes, representative)

    def safety_stmt(self) -> SafetyStmt:
        self.next("ident", "safety")
        self.next("punct", "(")
        target = self.threat_id("f", "final id")
        self.next("punct", ",")
        nodes = self.node_set()
        self.next("punct", ")")
        return SafetyStmt(target, nodes)

    def finish(self):
        if self.pos != len(self.tokens):
            raise self.error("trailing tokens after statement")


def parse_script_lines(text: str) -> list[tuple[int, Statement]]:
    """Parse a script, keeping each statement's 1-based line number."""
    out: list[tuple[int, Statement]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize(line, line_no)
        if not tokens:
            continue
        parser = _LineParser(tokens, line_no, len(line))
        stmt = parser.statement()
        parser.finish()
        out.append((line_no, stmt))
    return out


def parse_script(text: str) -> list[Statement]:
    return [stmt for _, stmt in parse_script_lines(text)]


def parse_statement(text: str) -> Statement:
    """Parse exactly one statement, as submitted over the wire."""
    stmts = parse_script(text)
    if len(stmts) != 1:
        raise ParseError(f"expected exactly one statement, found {len(stmts)}")
    return stmts[0]


def print_expr(expr: Expr) -> str:
    if isinstance(expr, ExprRef):
        return expr.id.render()
    if isinstance(expr, ExprEmbrace):
        body = ", ".join(i.render() for i in expr.ids)
        if expr.representative is not None:
            body += f"; rep={expr.representative.render()}"
        return f"embrace({body})"
    if isinstance(expr, ExprRename):
        return f'rename({print_expr(expr.inner)}, "{_escape(expr.label.render())}")'
    raise ParseError(f"unknown expression {expr!r}")


def print_statement(stmt: Statement) -> str:
    if isinstance(stmt, AssignStmt):
        return f"{stmt.target} := {print_expr(stmt.expr)}"
    if isinstance(stmt, CarryStmt):
        return f"{stmt.target} := carry({stmt.source})"
    if isinstance(stmt, DiscardStmt):
        return f'discard({stmt.id}, "{_escape(stmt.reason)}")'
    if isinstance(stmt, ProfileStmt):
        return f"profile({stmt.id}, {stmt.profile.render()})"
    if isinstance(stmt, MapStmt):
        nodes = ", ".join(n.render() for n in stmt.nodes)
        return f"map({stmt.final_id}, {{{nodes}}}, {stmt.representative.render()})"
    if isinstance(stmt, SafetyStmt):
        nodes = ", ".join(n.render() for n in stmt.nodes)
        return f"safety({stmt.final_id}, {{{nodes}}})"
    raise ParseError(f"unknown statement {stmt!r}")


def print_script(stmts: list[Statement]) -> str:
    if not stmts:
        return ""
    return "\n".join(print_statement(s) for s in stmts) + "\n"
