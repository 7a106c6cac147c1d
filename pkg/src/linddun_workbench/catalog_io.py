"""Delimited catalog parsing and table rendering.

The machine format is comma-delimited UTF-8 with LF line endings. Tick
cells hold "1" or nothing; the check-mark glyph appears only in the
human-readable doc-table format. Domain-specific label phrases travel
inside asterisks so a label stays on one line.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError
from .model import (
    Label,
    LinddunProfile,
    MappingRecord,
    SourceRef,
    Table,
    Threat,
    ThreatId,
    parse_provenance,
    render_mapping_source,
)
from .replay import ProjectState, gap_report
from .trees import PROPERTY_LETTERS

CATALOG_HEADER = ("id", "label", "source") + PROPERTY_LETTERS
GAP_HEADER = ("F", "LB", "S", "generalized")
MAPPING_HEADER = ("id", "composed", "source")
TICK = "\N{CHECK MARK}"


@dataclass(frozen=True)
class CatalogRow:
    """One parsed catalog line; id is None when the file omits ids."""

    id: ThreatId | None
    label: Label
    source: SourceRef
    profile: LinddunProfile


def _decode(data: bytes | str) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"catalog is not valid UTF-8: {exc.reason}", line=1, column=1) from None


def _cell_error(message: str, line: int, column: int) -> ParseError:
    return ParseError(message, line=line, column=column)


def parse_catalog(data: bytes | str, default_source_tag: str | None = None) -> list[CatalogRow]:
    """Parse a delimited catalog into ordered rows.

    Error coordinates are (file line, cell ordinal). The id column is
    all-or-none across the file; explicit p-ids form one gapless run per
    suffix, explicit f-ids strictly increasing.
    """
    text = _decode(data)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader, None)
    except csv.Error as exc:
        raise ParseError(f"malformed delimited text: {exc}", line=reader.line_num or 1, column=1) from None
    if header is None:
        raise ParseError("missing header row", line=1, column=1)
    if tuple(header) != CATALOG_HEADER:
        raise ParseError(
            "header row must be exactly " + ",".join(CATALOG_HEADER),
            line=1,
            column=1,
        )
    rows: list[CatalogRow] = []
    ids_seen: bool | None = None
    next_p: dict[str, int] = {}
    last_f: dict[str, int] = {}
    while True:
        try:
            raw = next(reader, None)
        except csv.Error as exc:
            raise ParseError(f"malformed delimited text: {exc}", line=reader.line_num, column=1) from None
        if raw is None:
            break
        line = reader.line_num
        if not raw or (len(raw) == 1 and raw[0].strip() == ""):
            continue
        if len(raw) != len(CATALOG_HEADER):
            raise _cell_error(
                f"expected {len(CATALOG_HEADER)} cells, found {len(raw)}", line, len(raw) or 1
            )
        id_cell = raw[0].strip()
        if ids_seen is None:
            ids_seen = bool(id_cell)
        elif ids_seen != bool(id_cell):
            raise _cell_error("the id column must be filled for every row or for none", line, 1)
        row_id: ThreatId | None = None
        if id_cell:
            try:
                row_id = ThreatId.parse(id_cell)
            except ParseError as exc:
                raise _cell_error(f"bad id {id_cell!r}: {exc.args[0]}", line, 1) from None
            if row_id.prefix == "p":
                # The first p-id of a suffix may start anywhere so a file can
                # continue an earlier batch; after that the run is gapless.
                expected = next_p.get(row_id.suffix)
                if expected is not None and row_id.index != expected:
                    raise _cell_error(
                        f"p-ids must be sequential, expected index {expected}", line, 1
                    )
                next_p[row_id.suffix] = row_id.index + 1
            elif row_id.prefix == "f":
                if row_id.index <= last_f.get(row_id.suffix, 0):
                    raise _cell_error("f-ids must be strictly increasing", line, 1)
                last_f[row_id.suffix] = row_id.index
            else:
                raise _cell_error("mapping ids do not belong in a catalog", line, 1)
        try:
            label = Label.parse(raw[1])
        except ParseError as exc:
            raise _cell_error(f"bad label: {exc.args[0]}", line, 2) from None
        source_cell = raw[2].strip()
        if row_id is not None and row_id.prefix == "f":
            try:
                source = SourceRef.derivation(parse_provenance(source_cell))
            except ParseError as exc:
                raise _cell_error(f"bad provenance: {exc.args[0]}", line, 3) from None
        else:
            tag = source_cell or (default_source_tag or "")
            if not tag:
                raise _cell_error("empty source cell and no default source tag", line, 3)
            source = SourceRef.document(tag)
        flags = {}
        for offset, letter in enumerate(PROPERTY_LETTERS):
            cell = raw[3 + offset]
            if cell == "1":
                flags[letter] = True
            elif cell == "":
                flags[letter] = False
            else:
                raise _cell_error(
                    f"tick cells contain \"1\" or are empty, found {cell!r}", line, 4 + offset
                )
        profile = LinddunProfile.of(*(letter for letter, on in flags.items() if on))
        rows.append(CatalogRow(row_id, label, source, profile))
    return rows


# --- rendering ----------------------------------------------------------------


def _threat_cells(threat: Threat) -> list[str]:
    cells = [str(threat.id), threat.label.render(), threat.source.render()]
    cells.extend("1" if threat.profile.has(letter) else "" for letter in PROPERTY_LETTERS)
    return cells


def _mapping_cells(record: MappingRecord) -> list[str]:
    return [str(record.m_id), record.composed, render_mapping_source(record)]


def _table_grid(table: Table) -> tuple[tuple[str, ...], list[list[str]]]:
    if table.stage == "M":
        return MAPPING_HEADER, [_mapping_cells(r) for r in table.rows]
    return CATALOG_HEADER, [_threat_cells(r) for r in table.rows]


def _delimited(header: tuple[str, ...], grid: list[list[str]]) -> bytes:
    sink = io.StringIO()
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(grid)
    return sink.getvalue().encode("utf-8")


def _doc_table(header: tuple[str, ...], grid: list[list[str]], tick_from: int | None) -> bytes:
    lines = [" | ".join(header)]
    for cells in grid:
        shown = list(cells)
        if tick_from is not None:
            shown[tick_from:] = [TICK if c == "1" else "" for c in shown[tick_from:]]
        lines.append(" | ".join(shown))
    return ("\n".join(lines) + "\n").encode("utf-8")


def render_table(table: Table, format: str = "delimited") -> bytes:
    header, grid = _table_grid(table)
    if format == "delimited":
        return _delimited(header, grid)
    if format == "doc-table":
        tick_from = None if table.stage == "M" else 3
        return _doc_table(header, grid, tick_from)
    raise ParseError(f"unknown table format {format!r}", line=1, column=1)


def render_gap_report(records, format: str = "delimited") -> bytes:
    grid = [
        [
            str(r.final_id),
            r.original_label.render(),
            # Gapped threats reached the final table, so their source is
            # always a derivation expression.
            _render_prov(r.provenance),
            r.generalized_label,
        ]
        for r in records
    ]
    if format == "delimited":
        return _delimited(GAP_HEADER, grid)
    if format == "doc-table":
        return _doc_table(GAP_HEADER, grid, None)
    raise ParseError(f"unknown table format {format!r}", line=1, column=1)


def _render_prov(expr) -> str:
    from .model import render_provenance

    return render_provenance(expr)


# --- per-step export ----------------------------------------------------------

STEP_FILES = ("step1", "step2", "step3", "step4", "step5")
STEP5_HEADER = ("id", "status", "m_id", "step5_extended")


def _step1(state: ProjectState, suffix: str) -> bytes:
    grid = [
        [str(e.threat.id), e.threat.label.render(), e.threat.source.render()]
        for i, e in state.prelims.items()
        if i.suffix == suffix
    ]
    return _delimited(("id", "label", "source"), grid)


def _filtered_table(table: Table, suffix: str) -> Table:
    if table.stage == "M":
        rows = tuple(r for r in table.rows if r.final_id.suffix == suffix)
    else:
        rows = tuple(r for r in table.rows if r.id.suffix == suffix)
    return Table(table.stage, rows)


def _step5(state: ProjectState, suffix: str) -> bytes:
    grid = []
    for threat_id, entry in state.finals.items():
        if threat_id.suffix != suffix or not entry.active:
            continue
        record = state.mappings.get(threat_id)
        if record is not None:
            grid.append(
                [
                    str(threat_id),
                    "mapped",
                    str(record.m_id),
                    "1" if record.step5_extended else "",
                ]
            )
        elif threat_id in state.gap_confirmed:
            grid.append([str(threat_id), "gap-confirmed", "", ""])
        else:
            grid.append([str(threat_id), "unchecked", "", ""])
    return _delimited(STEP5_HEADER, grid)


def export_step_files(state: ProjectState, out_dir: str | Path) -> list[Path]:
    """Write the five per-step delimited files for every domain batch.

    A single-batch project uses the bare step names; with several batches
    each file carries its batch suffix, so batches never overwrite each
    other.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    batches = state.batches or [""]
    multi = len(batches) > 1
    written: list[Path] = []

    def emit(name: str, payload: bytes):
        path = out / name
        path.write_bytes(payload)
        written.append(path)

    for suffix in batches:
        tag = f"-{suffix}" if multi and suffix else ""
        emit(f"step1{tag}", _step1(state, suffix))
        emit(f"step2{tag}", render_table(_filtered_table(state.table("P"), suffix)))
        emit(f"step3{tag}", render_table(_filtered_table(state.table("F"), suffix)))
        emit(f"step4{tag}", render_table(_filtered_table(state.table("M"), suffix)))
        emit(f"step5{tag}", _step5(state, suffix))
    return written


def export_reports(state: ProjectState, out_dir: str | Path) -> list[Path]:
    """Doc-table views plus the gap report, alongside the step files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for stage in ("P", "F", "M"):
        path = out / f"table-{stage}.txt"
        path.write_bytes(render_table(state.table(stage), "doc-table"))
        written.append(path)
    provisional, records = gap_report(state)
    csv_path = out / "gap-report.csv"
    csv_path.write_bytes(render_gap_report(records))
    written.append(csv_path)
    txt_path = out / "gap-report.txt"
    banner = b"" if not provisional else b"# provisional: unchecked final threats remain\n"
    txt_path.write_bytes(banner + render_gap_report(records, "doc-table"))
    written.append(txt_path)
    return written
