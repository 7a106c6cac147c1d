"""Deterministic replay of a project's operation log.

The log is the sole source of truth. A ProjectState is never mutated in
place by callers: every reader replays the entries it cares about and gets
an independent snapshot, so two replays of the same entries are structurally
identical and safe to compare byte-for-byte after rendering.

Log entries are either catalog imports (which append preliminary threats)
or single statements in the operation script. Statements are validated
against the state built so far; the first violation aborts the replay with
the offending sequence number.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import NotFoundError, PreconditionError, ReplayError, WorkbenchError
from .model import (
    GapRecord,
    Label,
    LinddunProfile,
    MappingRecord,
    ProvCarryOver,
    ProvEmbrace,
    ProvRef,
    ProvRename,
    SourceRef,
    Stage,
    Table,
    Threat,
    ThreatId,
)
from .script import (
    AssignStmt,
    CarryStmt,
    DiscardStmt,
    Expr,
    ExprEmbrace,
    ExprRef,
    ExprRename,
    MapStmt,
    ProfileStmt,
    SafetyStmt,
    Statement,
)
from .trees import NodeId, TreeCatalog, TreeNode

PROPERTY_LETTERS = ("L", "I", "N", "D", "Di", "U", "Nc")


@dataclass(frozen=True)
class ImportRow:
    """One catalog row as recorded in an import log entry."""

    label: Label
    source_tag: str


@dataclass(frozen=True)
class LogEntry:
    """One persisted log line: an import batch or a single statement."""

    seq: int
    ts: str
    actor: str
    statement: Statement | None = None
    import_suffix: str | None = None
    import_rows: tuple[ImportRow, ...] = ()

    @property
    def kind(self) -> str:
        return "statement" if self.statement is not None else "import"


@dataclass
class PrelimEntry:
    threat: Threat
    consumed_by: ThreatId | None = None
    discard_reason: str | None = None

    @property
    def available(self) -> bool:
        return self.consumed_by is None and self.threat.stage is Stage.PRELIMINARY


@dataclass
class FinalEntry:
    threat: Threat
    superseded_by: ThreatId | None = None
    discard_reason: str | None = None

    @property
    def active(self) -> bool:
        return self.superseded_by is None and self.threat.stage is Stage.FINAL


@dataclass
class ProjectState:
    """Everything derivable from one project's log, in insertion order."""

    prelims: dict[ThreatId, PrelimEntry] = field(default_factory=dict)
    finals: dict[ThreatId, FinalEntry] = field(default_factory=dict)
    mappings: dict[ThreatId, MappingRecord] = field(default_factory=dict)
    mapping_order: list[ThreatId] = field(default_factory=list)
    gap_confirmed: set[ThreatId] = field(default_factory=set)
    batches: list[str] = field(default_factory=list)
    next_index: dict[tuple[str, str], int] = field(default_factory=dict)
    log_length: int = 0

    # -- id sequencing ------------------------------------------------------

    def peek_index(self, prefix: str, suffix: str) -> int:
        return self.next_index.get((prefix, suffix), 1)

    def take_id(self, prefix: str, suffix: str) -> ThreatId:
        index = self.peek_index(prefix, suffix)
        self.next_index[(prefix, suffix)] = index + 1
        return ThreatId(prefix, index, suffix)

    def claim_id(self, target: ThreatId):
        """Accept an explicitly written id iff it is the next in its sequence."""
        expected = self.peek_index(target.prefix, target.suffix)
        if target.index != expected:
            raise PreconditionError(
                f"{target} is out of sequence, the next "
                f"{target.prefix}-id for suffix {target.suffix or 'none'} is "
                f"{ThreatId(target.prefix, expected, target.suffix)}",
                code="id-out-of-sequence",
            )
        self.next_index[(target.prefix, target.suffix)] = expected + 1

    # -- lookups -------------------------------------------------------------

    def prelim(self, threat_id: ThreatId) -> PrelimEntry:
        entry = self.prelims.get(threat_id)
        if entry is None:
            raise NotFoundError(f"unknown preliminary threat {threat_id}")
        return entry

    def final(self, threat_id: ThreatId) -> FinalEntry:
        entry = self.finals.get(threat_id)
        if entry is None:
            raise NotFoundError(f"unknown final threat {threat_id}")
        return entry

    def available_prelim(self, threat_id: ThreatId) -> PrelimEntry:
        entry = self.prelim(threat_id)
        if entry.threat.stage is Stage.RESERVE:
            raise PreconditionError(f"{threat_id} has been discarded", code="already-consumed")
        if entry.consumed_by is not None:
            raise PreconditionError(
                f"{threat_id} was already consumed by {entry.consumed_by}",
                code="already-consumed",
            )
        return entry

    def active_final(self, threat_id: ThreatId) -> FinalEntry:
        entry = self.final(threat_id)
        if entry.superseded_by is not None:
            raise PreconditionError(
                f"{threat_id} was superseded by {entry.superseded_by}",
                code="already-consumed",
            )
        if entry.threat.stage is Stage.RESERVE:
            raise PreconditionError(f"{threat_id} has been discarded", code="already-consumed")
        return entry

    # -- derived tables ------------------------------------------------------

    def table(self, stage: str) -> Table:
        if stage == "P":
            return Table("P", tuple(e.threat for e in self.prelims.values()))
        if stage == "F":
            return Table("F", tuple(e.threat for e in self.finals.values() if e.active))
        if stage == "M":
            return Table(
                "M", tuple(self.mappings[fid] for fid in self.mapping_order)
            )
        raise PreconditionError(f"bad table stage {stage!r}", code="invalid-argument")

    def reserve(self) -> list[tuple[Threat, str]]:
        out = [
            (e.threat, e.discard_reason or "")
            for e in self.prelims.values()
            if e.threat.stage is Stage.RESERVE
        ]
        out.extend(
            (e.threat, e.discard_reason or "")
            for e in self.finals.values()
            if e.threat.stage is Stage.RESERVE
        )
        return out

    def consumed_ids(self) -> set[ThreatId]:
        return {i for i, e in self.prelims.items() if e.consumed_by is not None}


def _own_label(state: ProjectState, threat_id: ThreatId) -> Label:
    if threat_id.prefix == "p":
        return state.prelim(threat_id).threat.label
    return state.final(threat_id).threat.label


def _apply_import(state: ProjectState, suffix: str, rows: tuple[ImportRow, ...]):
    if suffix not in ("", "a", "w"):
        raise PreconditionError(f"bad import suffix {suffix!r}", code="invalid-argument")
    for row in rows:
        if not row.source_tag:
            raise PreconditionError(
                "imported rows need a source document tag", code="invalid-argument"
            )
        new_id = state.take_id("p", suffix)
        state.prelims[new_id] = PrelimEntry(
            Threat(
                id=new_id,
                label=row.label,
                source=SourceRef.document(row.source_tag),
                profile=LinddunProfile(),
                stage=Stage.PRELIMINARY,
            )
        )
    if suffix not in state.batches:
        state.batches.append(suffix)


def _eval_assign_expr(state: ProjectState, target: ThreatId, expr: Expr) -> ThreatId:
    """Evaluate the right side of an assignment, returning the final id it denotes."""
    if isinstance(expr, ExprEmbrace):
        return _apply_embrace(state, target, expr)
    if isinstance(expr, ExprRename):
        final_id = _eval_assign_expr(state, target, expr.inner)
        entry = state.active_final(final_id)
        old = entry.threat
        entry.threat = replace(
            old,
            label=expr.label,
            source=SourceRef.derivation(ProvRename(old.source.expr)),
        )
        return final_id
    if isinstance(expr, ExprRef):
        if expr.id.prefix == "p":
            raise PreconditionError(
                f"rename applies to final threats, {expr.id} is preliminary",
                code="invalid-stage",
            )
        if expr.id != target:
            raise PreconditionError(
                f"rename of {expr.id} must be assigned back to {expr.id}, not {target}",
                code="invalid-argument",
            )
        state.active_final(expr.id)
        return expr.id
    raise PreconditionError(f"unknown expression {expr!r}", code="invalid-argument")


def _apply_embrace(state: ProjectState, target: ThreatId, expr: ExprEmbrace) -> ThreatId:
    if len(expr.ids) < 2:
        raise PreconditionError("embrace needs at least two threats", code="invalid-arity")
    if len(set(expr.ids)) != len(expr.ids):
        raise PreconditionError("embrace lists a threat twice", code="invalid-argument")
    representative = expr.representative or expr.ids[0]
    if representative not in expr.ids:
        raise PreconditionError(
            f"representative {representative} is not among the embraced threats",
            code="invalid-representative",
        )
    prelim_inputs: list[PrelimEntry] = []
    final_inputs: list[FinalEntry] = []
    profile = LinddunProfile()
    for input_id in expr.ids:
        if input_id.prefix == "p":
            entry = state.available_prelim(input_id)
            prelim_inputs.append(entry)
            profile = profile | entry.threat.profile
        else:
            entry = state.active_final(input_id)
            final_inputs.append(entry)
            profile = profile | entry.threat.profile
    label = _own_label(state, representative)
    state.claim_id(target)
    state.finals[target] = FinalEntry(
        Threat(
            id=target,
            label=label,
            source=SourceRef.derivation(ProvEmbrace(tuple(ProvRef(i) for i in expr.ids))),
            profile=profile,
            stage=Stage.FINAL,
        )
    )
    for entry in prelim_inputs:
        entry.consumed_by = target
    for entry in final_inputs:
        entry.superseded_by = target
    return target


def _apply_statement(state: ProjectState, stmt: Statement, trees: TreeCatalog | None):
    if isinstance(stmt, ProfileStmt):
        entry = state.available_prelim(stmt.id)
        entry.threat = replace(entry.threat, profile=stmt.profile)
    elif isinstance(stmt, CarryStmt):
        entry = state.available_prelim(stmt.source)
        state.claim_id(stmt.target)
        state.finals[stmt.target] = FinalEntry(
            Threat(
                id=stmt.target,
                label=entry.threat.label,
                source=SourceRef.derivation(ProvCarryOver(ProvRef(stmt.source))),
                profile=entry.threat.profile,
                stage=Stage.FINAL,
            )
        )
        entry.consumed_by = stmt.target
    elif isinstance(stmt, AssignStmt):
        _eval_assign_expr(state, stmt.target, stmt.expr)
    elif isinstance(stmt, DiscardStmt):
        _apply_discard(state, stmt)
    elif isinstance(stmt, MapStmt):
        _apply_map(state, stmt, trees)
    elif isinstance(stmt, SafetyStmt):
        _apply_safety(state, stmt, trees)
    else:
        raise PreconditionError(f"unknown statement {stmt!r}", code="invalid-argument")


def _apply_discard(state: ProjectState, stmt: DiscardStmt):
    if stmt.id.prefix == "p":
        entry = state.prelim(stmt.id)
        if entry.threat.stage is Stage.RESERVE:
            raise PreconditionError(f"{stmt.id} is already on the reserve list", code="double-discard")
        if entry.consumed_by is not None:
            raise PreconditionError(
                f"{stmt.id} was already consumed by {entry.consumed_by}", code="already-consumed"
            )
        entry.threat = replace(entry.threat, stage=Stage.RESERVE)
        entry.discard_reason = stmt.reason
    else:
        entry = state.final(stmt.id)
        if entry.threat.stage is Stage.RESERVE:
            raise PreconditionError(f"{stmt.id} is already on the reserve list", code="double-discard")
        if entry.superseded_by is not None:
            raise PreconditionError(
                f"{stmt.id} was already superseded by {entry.superseded_by}", code="already-consumed"
            )
        entry.threat = replace(entry.threat, stage=Stage.RESERVE)
        entry.discard_reason = stmt.reason


def _require_trees(trees: TreeCatalog | None) -> TreeCatalog:
    if trees is None:
        raise PreconditionError(
            "no tree catalog is attached to this project", code="precondition-failed"
        )
    return trees


def _node_profile(nodes: tuple[NodeId, ...]) -> LinddunProfile:
    return LinddunProfile.of(*{n.property_letter for n in nodes})


def _apply_map(state: ProjectState, stmt: MapStmt, trees: TreeCatalog | None):
    catalog = _require_trees(trees)
    entry = state.active_final(stmt.final_id)
    if stmt.final_id in state.mappings:
        raise PreconditionError(f"{stmt.final_id} is already mapped", code="already-mapped")
    if not stmt.nodes:
        raise PreconditionError("map needs at least one tree node", code="invalid-argument")
    nodes = _dedup(stmt.nodes)
    for node_id in nodes:
        catalog.resolve(node_id)
        if not entry.threat.profile.has(node_id.property_letter):
            raise PreconditionError(
                f"{node_id} is outside the ticked properties of {stmt.final_id}; "
                "widening needs a safety check",
                code="scope-violation",
            )
    if stmt.representative not in nodes:
        raise PreconditionError(
            f"representative {stmt.representative} is not among the mapped nodes",
            code="invalid-representative",
        )
    m_id = state.take_id("m", "")
    state.mappings[stmt.final_id] = MappingRecord(
        m_id=m_id,
        final_id=stmt.final_id,
        embraced_nodes=nodes,
        representative=stmt.representative,
        composed=catalog.composed_label(stmt.representative),
        step5_extended=False,
    )
    state.mapping_order.append(stmt.final_id)
    state.gap_confirmed.discard(stmt.final_id)


def _apply_safety(state: ProjectState, stmt: SafetyStmt, trees: TreeCatalog | None):
    catalog = _require_trees(trees)
    entry = state.active_final(stmt.final_id)
    nodes = _dedup(stmt.nodes)
    for node_id in nodes:
        catalog.resolve(node_id)
    record = state.mappings.get(stmt.final_id)
    if record is None:
        if not nodes:
            state.gap_confirmed.add(stmt.final_id)
            return
        m_id = state.take_id("m", "")
        state.mappings[stmt.final_id] = MappingRecord(
            m_id=m_id,
            final_id=stmt.final_id,
            embraced_nodes=nodes,
            representative=nodes[0],
            composed=catalog.composed_label(nodes[0]),
            step5_extended=True,
        )
        state.mapping_order.append(stmt.final_id)
        state.gap_confirmed.discard(stmt.final_id)
        entry.threat = replace(
            entry.threat, profile=entry.threat.profile | _node_profile(nodes)
        )
        return
    added = tuple(n for n in nodes if n not in record.embraced_nodes)
    if not added:
        return
    grown = record.embraced_nodes + added
    state.mappings[stmt.final_id] = replace(
        record, embraced_nodes=grown, step5_extended=True
    )
    entry.threat = replace(
        entry.threat, profile=entry.threat.profile | _node_profile(grown)
    )


def _dedup(nodes: tuple[NodeId, ...]) -> tuple[NodeId, ...]:
    return tuple(dict.fromkeys(nodes))


def apply_statement(state: ProjectState, stmt: Statement, trees: TreeCatalog | None = None):
    """Apply one statement in place; raises without touching the log length."""
    _apply_statement(state, stmt, trees)
    state.log_length += 1


def apply_import(state: ProjectState, suffix: str, rows: tuple[ImportRow, ...]):
    _apply_import(state, suffix, rows)
    state.log_length += 1


def replay(entries: list[LogEntry], trees: TreeCatalog | None = None) -> ProjectState:
    """Fold a persisted log into a fresh state; failures carry the seq."""
    state = ProjectState()
    for entry in entries:
        try:
            if entry.statement is not None:
                apply_statement(state, entry.statement, trees)
            else:
                apply_import(state, entry.import_suffix or "", entry.import_rows)
        except WorkbenchError as exc:
            raise ReplayError(str(exc), seq=entry.seq, code=exc.code) from exc
    return state


def replay_step3(statements: list[Statement], preliminary: Table) -> tuple[Table, list[tuple[Threat, str]]]:
    """Replay refinement statements over an existing preliminary table.

    Convenience for callers that hold a table rather than a log: builds a
    state whose P rows match the given table, applies the statements, and
    returns the final table plus the reserve list.
    """
    state = ProjectState()
    for threat in preliminary.rows:
        state.claim_id(threat.id)
        state.prelims[threat.id] = PrelimEntry(threat)
        if threat.id.suffix not in state.batches:
            state.batches.append(threat.id.suffix)
    for stmt in statements:
        apply_statement(state, stmt, None)
    return state.table("F"), state.reserve()


# --- statistics and consistency ----------------------------------------------


@dataclass(frozen=True)
class Stats:
    """Operation counts in the shape of the per-domain summary tables."""

    step2_total: int
    step3_total: int
    embrace_count: int
    rename_count: int
    discard_count: int
    final_discard_count: int = 0

    def render(self) -> str:
        return (
            f"{self.step2_total} → {self.step3_total} "
            f"(embrace {self.embrace_count}, rename {self.rename_count}, "
            f"discard {self.discard_count})"
        )


def _expr_counts(expr: Expr) -> tuple[int, int]:
    """(embrace, rename) operation applications inside an assignment expression."""
    if isinstance(expr, ExprEmbrace):
        return 1, 0
    if isinstance(expr, ExprRename):
        e, r = _expr_counts(expr.inner)
        return e, r + 1
    return 0, 0


def _stmt_suffix(stmt: Statement) -> str:
    if isinstance(stmt, (AssignStmt, CarryStmt)):
        return stmt.target.suffix
    if isinstance(stmt, (MapStmt, SafetyStmt)):
        return stmt.final_id.suffix
    return stmt.id.suffix


def op_stats(
    entries: list[LogEntry],
    trees: TreeCatalog | None = None,
    suffix: str | None = None,
) -> Stats:
    """Count refinement operations and totals, optionally for one domain batch."""
    state = replay(entries, trees)
    embrace = rename = discard = final_discard = 0
    for entry in entries:
        stmt = entry.statement
        if stmt is None:
            continue
        if suffix is not None and _stmt_suffix(stmt) != suffix:
            continue
        if isinstance(stmt, AssignStmt):
            e, r = _expr_counts(stmt.expr)
            embrace += e
            rename += r
        elif isinstance(stmt, DiscardStmt):
            if stmt.id.prefix == "p":
                discard += 1
            else:
                final_discard += 1
    def in_batch(threat_id: ThreatId) -> bool:
        return suffix is None or threat_id.suffix == suffix

    step2_total = sum(1 for i in state.prelims if in_batch(i))
    step3_total = sum(1 for i, e in state.finals.items() if e.active and in_batch(i))
    return Stats(step2_total, step3_total, embrace, rename, discard, final_discard)


def embrace_arities(entries: list[LogEntry], suffix: str | None = None) -> list[int]:
    """Arity of every embrace in the log, in order, optionally per batch."""
    out = []
    for entry in entries:
        stmt = entry.statement
        if not isinstance(stmt, AssignStmt):
            continue
        if suffix is not None and stmt.target.suffix != suffix:
            continue
        expr = stmt.expr
        while isinstance(expr, ExprRename):
            expr = expr.inner
        if isinstance(expr, ExprEmbrace):
            out.append(len(expr.ids))
    return out


def check_cardinality(stats: Stats, arities: list[int], n_prelim: int, n_final: int) -> bool:
    """The counting law of a fully processed refinement pass.

    Each embrace of arity k folds k threats into one, each discard removes
    one, and everything else is carried over 1:1, so the final count must be
    the preliminary count minus the sum of (arity - 1) minus the discards.
    """
    for arity in arities:
        if arity < 2:
            raise PreconditionError(f"embrace arity {arity} is impossible", code="invalid-argument")
    return n_final == n_prelim - sum(a - 1 for a in arities) - stats.discard_count


# --- step 4/5 queries ---------------------------------------------------------


def candidate_nodes(
    state: ProjectState,
    trees: TreeCatalog | None,
    final_id: ThreatId,
    scope: str = "ticked",
) -> list[TreeNode]:
    """Tree nodes an analyst may map a final threat onto.

    scope="ticked" walks only the trees of the properties ticked for the
    threat (step 4); scope="all" walks all seven trees (step 5).
    """
    catalog = _require_trees(trees)
    entry = state.active_final(final_id)
    if scope == "ticked":
        letters = entry.threat.profile.letters()
    elif scope == "all":
        letters = PROPERTY_LETTERS
    else:
        raise PreconditionError(f"bad scope {scope!r}", code="invalid-argument")
    out: list[TreeNode] = []
    for letter in letters:
        out.extend(catalog.nodes_of_property(letter))
    return out


def gap_report(state: ProjectState) -> tuple[bool, list[GapRecord]]:
    """Unmapped final threats with generalized labels, ordered by id.

    The report is provisional until every active final threat is either
    mapped or has a confirmed empty safety check.
    """
    actives = [e.threat for e in state.finals.values() if e.active]
    records = []
    provisional = False
    for threat in sorted(actives, key=lambda t: t.id.sort_key):
        if threat.id in state.mappings:
            continue
        confirmed = threat.id in state.gap_confirmed
        if not confirmed:
            provisional = True
        records.append(
            GapRecord(
                final_id=threat.id,
                original_label=threat.label,
                generalized_label=threat.label.generalized(),
                provenance=threat.source.expr,
                confirmed=confirmed,
            )
        )
    return provisional, records
