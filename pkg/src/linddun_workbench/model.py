"""Core domain values: threat ids, labels, sources, LINDDUN profiles, tables.

Everything here is an immutable value object. State transitions live in the
replay module; parsing and rendering of the external text formats live in the
script and catalog_io modules. Keeping the values frozen is what makes replay
snapshots safe to hand between threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .errors import ParseError, PreconditionError
from .trees import PROPERTY_LETTERS, NodeId

_THREAT_ID_RE = re.compile(r"^([pfm])([1-9][0-9]*)([aw])?$")
_SUFFIX_RANK = {"": 0, "a": 1, "w": 2}


class Stage(str, Enum):
    PRELIMINARY = "preliminary"
    FINAL = "final"
    RESERVE = "reserve"


@dataclass(frozen=True)
class ThreatId:
    """A threat identity such as p30a, f13w, or m1.

    The prefix tells the stage the id belongs to (preliminary, final, mapped),
    the optional suffix tells the import batch domain. Indexes start at 1 and
    are assigned sequentially per (prefix, suffix) pair.
    """

    prefix: str
    index: int
    suffix: str = ""

    def __post_init__(self):
        if self.prefix not in ("p", "f", "m"):
            raise PreconditionError(f"bad threat id prefix {self.prefix!r}", code="invalid-argument")
        if not isinstance(self.index, int) or self.index < 1:
            raise PreconditionError("threat id index must be a positive integer", code="invalid-argument")
        if self.suffix not in ("", "a", "w"):
            raise PreconditionError(f"bad threat id suffix {self.suffix!r}", code="invalid-argument")

    @classmethod
    def parse(cls, text: str) -> ThreatId:
        m = _THREAT_ID_RE.match(text)
        if not m:
            raise ParseError(f"malformed threat id {text!r}")
        return cls(m.group(1), int(m.group(2)), m.group(3) or "")

    def render(self) -> str:
        return f"{self.prefix}{self.index}{self.suffix}"

    def __str__(self) -> str:
        return self.render()

    @property
    def sort_key(self) -> tuple[str, int, int]:
        return (self.prefix, _SUFFIX_RANK[self.suffix], self.index)


def _squash_ws(text: str) -> str:
    return " ".join(text.split())


@dataclass(frozen=True)
class LabelSegment:
    """One run of label text; domain-specific runs are the asterisk-marked ones."""

    text: str
    domain_specific: bool = False

    def __post_init__(self):
        if not self.text or self.text != _squash_ws(self.text):
            raise PreconditionError(
                f"label segment text must be non-empty and space-normalized: {self.text!r}",
                code="invalid-argument",
            )
        if "*" in self.text or any(ord(ch) < 0x20 for ch in self.text):
            raise PreconditionError(
                "label segment text may not contain asterisks or control characters",
                code="invalid-argument",
            )


@dataclass(frozen=True)
class Label:
    segments: tuple[LabelSegment, ...]

    def __post_init__(self):
        if not self.segments:
            raise PreconditionError("a label needs at least one segment", code="invalid-argument")

    @classmethod
    def parse(cls, text: str) -> Label:
        """Read a label with *asterisk-delimited* domain-specific spans."""
        if text.count("*") % 2 != 0:
            raise ParseError(f"unbalanced asterisks in label {text!r}")
        segments = []
        for i, chunk in enumerate(text.split("*")):
            chunk = _squash_ws(chunk)
            if chunk:
                if any(ord(ch) < 0x20 for ch in chunk):
                    raise ParseError(f"label {text!r} contains control characters")
                segments.append(LabelSegment(chunk, domain_specific=bool(i % 2)))
        if not segments:
            raise ParseError(f"label {text!r} has no text")
        return cls(tuple(segments))

    def render(self) -> str:
        return " ".join(
            f"*{seg.text}*" if seg.domain_specific else seg.text for seg in self.segments
        )

    @property
    def text(self) -> str:
        """Full text with the markup dropped."""
        return " ".join(seg.text for seg in self.segments)

    def generalized(self) -> str:
        """Generic segments only; the candidate-extension form of the label."""
        parts = [seg.text for seg in self.segments if not seg.domain_specific]
        if not parts:
            raise PreconditionError(
                f"label {self.render()!r} has no generic segments to keep",
                code="empty-result",
            )
        return " ".join(parts)

    @property
    def has_domain_segments(self) -> bool:
        return any(seg.domain_specific for seg in self.segments)


_PROFILE_FIELDS = {
    "L": "linkability",
    "I": "identifiability",
    "N": "non_repudiation",
    "D": "detectability",
    "Di": "disclosure",
    "U": "unawareness",
    "Nc": "non_compliance",
}


@dataclass(frozen=True)
class LinddunProfile:
    """The seven LINDDUN property ticks of one threat."""

    linkability: bool = False
    identifiability: bool = False
    non_repudiation: bool = False
    detectability: bool = False
    disclosure: bool = False
    unawareness: bool = False
    non_compliance: bool = False

    @classmethod
    def of(cls, *letters: str) -> LinddunProfile:
        fields = {}
        for letter in letters:
            if letter not in _PROFILE_FIELDS:
                raise PreconditionError(f"unknown LINDDUN property {letter!r}", code="invalid-argument")
            fields[_PROFILE_FIELDS[letter]] = True
        return cls(**fields)

    @classmethod
    def from_text(cls, text: str) -> LinddunProfile:
        """Parse forms like "L,I,Di", "{L, I, Di}", or "" (all false)."""
        body = text.strip()
        if body.startswith("{") and body.endswith("}"):
            body = body[1:-1]
        letters = [part.strip() for part in body.split(",") if part.strip()]
        return cls.of(*letters)

    def has(self, letter: str) -> bool:
        if letter not in _PROFILE_FIELDS:
            raise PreconditionError(f"unknown LINDDUN property {letter!r}", code="invalid-argument")
        return getattr(self, _PROFILE_FIELDS[letter])

    def letters(self) -> tuple[str, ...]:
        return tuple(letter for letter in PROPERTY_LETTERS if self.has(letter))

    def flags(self) -> tuple[bool, ...]:
        return tuple(self.has(letter) for letter in PROPERTY_LETTERS)

    def __or__(self, other: LinddunProfile) -> LinddunProfile:
        return LinddunProfile.of(*(set(self.letters()) | set(other.letters())))

    def render(self) -> str:
        return "{" + ", ".join(self.letters()) + "}"


# --- provenance expressions -------------------------------------------------
#
# A final threat's source records how it came to be, at the id level: which
# threats an embrace consumed, whether the result was renamed, whether a
# preliminary threat was carried over verbatim. Rendering follows the table
# notation: embraces list ids, renames wrap, carry-overs show the bare id.


@dataclass(frozen=True)
class ProvRef:
    id: ThreatId


@dataclass(frozen=True)
class ProvEmbrace:
    children: tuple["ProvenanceExpr", ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise PreconditionError("an embrace records at least two inputs", code="invalid-arity")


@dataclass(frozen=True)
class ProvRename:
    inner: "ProvenanceExpr"


@dataclass(frozen=True)
class ProvCarryOver:
    inner: ProvRef


@dataclass(frozen=True)
class ProvDiscard:
    inner: ProvRef


ProvenanceExpr = ProvRef | ProvEmbrace | ProvRename | ProvCarryOver | ProvDiscard


def render_provenance(expr: ProvenanceExpr) -> str:
    if isinstance(expr, ProvRef):
        return expr.id.render()
    if isinstance(expr, ProvEmbrace):
        return "embrace(" + ", ".join(render_provenance(c) for c in expr.children) + ")"
    if isinstance(expr, ProvRename):
        return f"rename({render_provenance(expr.inner)})"
    if isinstance(expr, ProvCarryOver):
        return expr.inner.id.render()
    if isinstance(expr, ProvDiscard):
        return f"discard({render_provenance(expr.inner)})"
    raise PreconditionError(f"unknown provenance node {expr!r}", code="invalid-argument")


class _ProvenanceReader:
    """Tiny recursive-descent reader for rendered provenance text."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str) -> ParseError:
        return ParseError(f"{message} in source expression {self.text!r}")

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def take_word(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            raise self.error("expected an identifier")
        return self.text[start : self.pos]

    def expect(self, ch: str):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse_expr(self, top: bool) -> ProvenanceExpr:
        word = self.take_word()
        if word == "embrace":
            self.expect("(")
            children = [self.parse_expr(top=False)]
            while self.peek() == ",":
                self.expect(",")
                children.append(self.parse_expr(top=False))
            self.expect(")")
            return ProvEmbrace(tuple(children))
        if word == "rename":
            self.expect("(")
            inner = self.parse_expr(top=True)
            self.expect(")")
            return ProvRename(inner)
        if word == "discard":
            self.expect("(")
            ref = ProvRef(ThreatId.parse(self.take_word()))
            self.expect(")")
            return ProvDiscard(ref)
        ref = ProvRef(ThreatId.parse(word))
        # A bare preliminary id at the top of a final threat's source, or
        # directly under a rename, is a carry-over; embrace children are refs.
        if top and ref.id.prefix == "p":
            return ProvCarryOver(ref)
        return ref


def parse_provenance(text: str) -> ProvenanceExpr:
    reader = _ProvenanceReader(text)
    expr = reader.parse_expr(top=True)
    reader.skip_ws()
    if reader.pos != len(text):
        raise reader.error("trailing text")
    return expr


@dataclass(frozen=True)
class SourceRef:
    """Origin of a threat: a source document tag or a derivation expression."""

    kind: str
    document_tag: str = ""
    expr: ProvenanceExpr | None = None

    def __post_init__(self):
        if self.kind == "document":
            if not self.document_tag or self.expr is not None:
                raise PreconditionError("document source needs a tag and no expression", code="invalid-argument")
        elif self.kind == "derivation":
            if self.expr is None or self.document_tag:
                raise PreconditionError("derivation source needs an expression and no tag", code="invalid-argument")
        else:
            raise PreconditionError(f"bad source kind {self.kind!r}", code="invalid-argument")

    @classmethod
    def document(cls, tag: str) -> SourceRef:
        return cls("document", document_tag=tag)

    @classmethod
    def derivation(cls, expr: ProvenanceExpr) -> SourceRef:
        return cls("derivation", expr=expr)

    def render(self) -> str:
        return self.document_tag if self.kind == "document" else render_provenance(self.expr)


@dataclass(frozen=True)
class Threat:
    id: ThreatId
    label: Label
    source: SourceRef
    profile: LinddunProfile
    stage: Stage

    def __post_init__(self):
        if self.stage is Stage.PRELIMINARY and self.id.prefix != "p":
            raise PreconditionError(f"{self.id} cannot be a preliminary threat", code="invalid-argument")
        if self.stage is Stage.FINAL and self.id.prefix != "f":
            raise PreconditionError(f"{self.id} cannot be a final threat", code="invalid-argument")
        if self.id.prefix == "m":
            raise PreconditionError("mapped threats are MappingRecord rows", code="invalid-argument")


@dataclass(frozen=True)
class MappingRecord:
    """Outcome of mapping one final threat onto tree nodes.

    The embrace at this stage always yields a LINDDUN threat: the
    representative is a tree node, never the final threat itself. The
    composed field caches the representative's composed reading.
    """

    m_id: ThreatId
    final_id: ThreatId
    embraced_nodes: tuple[NodeId, ...]
    representative: NodeId
    composed: str
    step5_extended: bool = False

    def __post_init__(self):
        if self.m_id.prefix != "m":
            raise PreconditionError("mapping ids use the m prefix", code="invalid-argument")
        if self.representative not in self.embraced_nodes:
            raise PreconditionError(
                f"representative {self.representative} is not among the embraced nodes",
                code="invalid-representative",
            )
        if len(set(self.embraced_nodes)) != len(self.embraced_nodes):
            raise PreconditionError("embraced node set has duplicates", code="invalid-argument")


@dataclass(frozen=True)
class GapRecord:
    """A final threat no tree node embraces; a candidate catalog extension."""

    final_id: ThreatId
    original_label: Label
    generalized_label: str
    provenance: ProvenanceExpr
    confirmed: bool = False


def render_mapping_source(record: MappingRecord) -> str:
    """Table notation for a mapping row: the node embrace and its outcome."""
    parts = [record.final_id.render()] + [n.render() for n in record.embraced_nodes]
    return f"embrace({', '.join(parts)}) = {record.representative.render()}"


@dataclass(frozen=True)
class Table:
    """An ordered step table: P and F hold threats, M holds mapping records."""

    stage: str
    rows: tuple

    def __post_init__(self):
        if self.stage not in ("P", "F", "M"):
            raise PreconditionError(f"bad table stage {self.stage!r}", code="invalid-argument")

    @property
    def n(self) -> int:
        return len(self.rows)


def project_column(table: Table, k: int) -> list:
    """The k-th column of a step table, 1-based, in rendered form.

    Columns 1 to 3 are id, label, source as strings; 4 to 10 are the LINDDUN
    booleans in acronym order. Mapping tables stop at column 3.
    """
    top = 3 if table.stage == "M" else 10
    if not isinstance(k, int) or not 1 <= k <= top:
        raise PreconditionError(
            f"column {k} out of range for a {table.stage} table", code="invalid-argument"
        )
    if table.stage == "M":
        if k == 1:
            return [str(row.m_id) for row in table.rows]
        if k == 2:
            return [row.composed for row in table.rows]
        return [render_mapping_source(row) for row in table.rows]
    if k == 1:
        return [str(row.id) for row in table.rows]
    if k == 2:
        return [row.label.render() for row in table.rows]
    if k == 3:
        return [row.source.render() for row in table.rows]
    return [row.profile.has(PROPERTY_LETTERS[k - 4]) for row in table.rows]
