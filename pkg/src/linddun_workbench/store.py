"""Project directories, append-only logs, and the single-writer discipline.

Layout under the store root:

    <root>/<project-id>/project.json   name, creation time, config overrides
    <root>/<project-id>/ops.jsonl      one log entry per line, append-only
    <root>/<project-id>/trees.json     optional attached tree catalog
    <root>/<project-id>/.lock          advisory write lock
    <root>/.last-project               id of the most recently used project

Every mutation takes the project's file lock, replays the current log,
validates the whole batch against that snapshot, and only then appends.
Readers never lock; they parse whatever prefix of the log is on disk.
"""

from __future__ import annotations

import fcntl
import json
import os
import uuid
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConflictError, NotFoundError, PreconditionError, ReplayError
from .model import Label
from .replay import ImportRow, LogEntry, ProjectState, apply_import, apply_statement, replay
from .script import ProfileStmt, Statement, parse_statement, print_statement
from .suggest import DEFAULT_PROTECTED_TERMS
from .trees import TreeCatalog, load_trees

DEFAULT_CONFIG = {
    "protected_terms": list(DEFAULT_PROTECTED_TERMS),
    "suggest_threshold": 0.1,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _fsync_write(path: Path, data: str):
    with open(path, "w", encoding="utf-8") as sink:
        sink.write(data)
        sink.flush()
        os.fsync(sink.fileno())


def entry_to_json(entry: LogEntry) -> dict:
    body: dict = {"seq": entry.seq, "ts": entry.ts, "actor": entry.actor}
    if entry.statement is not None:
        body["stmt"] = print_statement(entry.statement)
    else:
        body["import"] = {
            "suffix": entry.import_suffix or "",
            "rows": [[row.label.render(), row.source_tag] for row in entry.import_rows],
        }
    return body


def entry_from_json(body: dict, seq: int) -> LogEntry:
    ts = body.get("ts", "")
    actor = body.get("actor", "")
    if "stmt" in body:
        return LogEntry(seq=seq, ts=ts, actor=actor, statement=parse_statement(body["stmt"]))
    if "import" in body:
        block = body["import"]
        rows = tuple(
            ImportRow(Label.parse(markup), tag) for markup, tag in block.get("rows", [])
        )
        return LogEntry(
            seq=seq, ts=ts, actor=actor,
            import_suffix=block.get("suffix", ""), import_rows=rows,
        )
    raise ValueError("log entry is neither a statement nor an import")


class ProjectHandle:
    """One project's files plus replay helpers."""

    def __init__(self, store: "ProjectStore", project_id: str, meta: dict):
        self.store = store
        self.id = project_id
        self.dir = store.root / project_id
        self.meta = meta

    @property
    def name(self) -> str:
        return self.meta["name"]

    @property
    def log_path(self) -> Path:
        return self.dir / "ops.jsonl"

    @property
    def trees_path(self) -> Path:
        return self.dir / "trees.json"

    # -- reading -------------------------------------------------------------

    def entries(self) -> list[LogEntry]:
        out: list[LogEntry] = []
        if not self.log_path.exists():
            return out
        with open(self.log_path, encoding="utf-8") as source:
            for seq, line in enumerate(source, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(entry_from_json(json.loads(line), seq))
                except Exception as exc:
                    raise ReplayError(f"unreadable log entry: {exc}", seq=seq) from exc
        return out

    def trees(self) -> TreeCatalog | None:
        if self.trees_path.exists():
            return load_trees(self.trees_path)
        return None

    def config(self) -> dict:
        merged = dict(DEFAULT_CONFIG)
        merged.update(self.meta.get("config", {}))
        return merged

    def state(self) -> ProjectState:
        return replay(self.entries(), self.trees())

    # -- writing -------------------------------------------------------------

    @contextmanager
    def _locked(self):
        lock_path = self.dir / ".lock"
        with open(lock_path, "w") as lock:
            fcntl.flock(lock.fileno(), fcntl.LOCK_EX)
            try:
                yield
            finally:
                fcntl.flock(lock.fileno(), fcntl.LOCK_UN)

    def _append(self, entries: list[LogEntry]):
        with open(self.log_path, "a", encoding="utf-8") as sink:
            for entry in entries:
                sink.write(json.dumps(entry_to_json(entry), ensure_ascii=False) + "\n")
            sink.flush()
            os.fsync(sink.fileno())

    def apply_statements(
        self, statements: list[Statement], actor: str = "analyst"
    ) -> tuple[int, ProjectState]:
        """Validate a batch against the current snapshot, then append it whole.

        Any failure leaves the log untouched; nothing from a bad batch is
        visible to later readers.
        """
        with self._locked():
            existing = self.entries()
            trees = self.trees()
            state = replay(existing, trees)
            seq = len(existing)
            batch = []
            for stmt in statements:
                apply_statement(state, stmt, trees)
                seq += 1
                batch.append(LogEntry(seq=seq, ts=_now(), actor=actor, statement=stmt))
            self._append(batch)
        self.store.mark_last(self.id)
        return len(batch), state

    def import_catalog(
        self,
        data: bytes | str,
        suffix: str = "",
        source_tag: str | None = None,
        actor: str = "analyst",
    ) -> tuple[int, ProjectState]:
        """Append one import entry plus the profile statements it implies.

        Returns (count of new preliminary threats, resulting state). Rows
        arrive unprofiled in the tables; a ticked row is immediately followed
        by the equivalent profile statement so the log stays statement-shaped.
        """
        from .catalog_io import parse_catalog

        if suffix not in ("", "a", "w"):
            raise PreconditionError(f"bad import suffix {suffix!r}", code="invalid-argument")
        rows = parse_catalog(data, default_source_tag=source_tag)
        with self._locked():
            existing = self.entries()
            trees = self.trees()
            state = replay(existing, trees)
            start = state.peek_index("p", suffix)
            import_rows = []
            profile_stmts = []
            for offset, row in enumerate(rows):
                assigned = start + offset
                if row.id is not None:
                    if row.id.prefix != "p":
                        raise PreconditionError(
                            f"only preliminary rows can be imported, got {row.id}",
                            code="invalid-argument",
                        )
                    if row.id.suffix != suffix:
                        raise PreconditionError(
                            f"{row.id} does not carry the import suffix {suffix or 'none'!r}",
                            code="invalid-argument",
                        )
                    if row.id.index != assigned:
                        raise PreconditionError(
                            f"{row.id} is out of sequence, this import starts at index {start}",
                            code="id-out-of-sequence",
                        )
                if row.source.kind != "document":
                    raise PreconditionError(
                        "imported rows must cite a source document", code="invalid-argument"
                    )
                import_rows.append(ImportRow(row.label, row.source.document_tag))
                if row.profile.letters():
                    from .model import ThreatId

                    profile_stmts.append(
                        ProfileStmt(ThreatId("p", assigned, suffix), row.profile)
                    )
            seq = len(existing)
            batch = [
                LogEntry(
                    seq=seq + 1,
                    ts=_now(),
                    actor=actor,
                    import_suffix=suffix,
                    import_rows=tuple(import_rows),
                )
            ]
            apply_import(state, suffix, tuple(import_rows))
            seq += 1
            for stmt in profile_stmts:
                apply_statement(state, stmt, trees)
                seq += 1
                batch.append(LogEntry(seq=seq, ts=_now(), actor=actor, statement=stmt))
            self._append(batch)
        self.store.mark_last(self.id)
        return len(import_rows), state

    def attach_trees(self, source: str | Path):
        """Copy a validated tree catalog file into the project."""
        catalog = load_trees(Path(source))
        _fsync_write(self.trees_path, catalog.serialize())
        return catalog


class ProjectStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def _meta_path(self, project_id: str) -> Path:
        return self.root / project_id / "project.json"

    def _iter_meta(self):
        if not self.root.exists():
            return
        for child in sorted(self.root.iterdir()):
            meta_path = child / "project.json"
            if child.is_dir() and meta_path.exists():
                with open(meta_path, encoding="utf-8") as source:
                    yield child.name, json.load(source)

    def create(self, name: str) -> ProjectHandle:
        if not name or not name.strip():
            raise PreconditionError("a project needs a non-empty name", code="invalid-argument")
        name = name.strip()
        for _, meta in self._iter_meta():
            if meta.get("name") == name:
                raise ConflictError(f"a project named {name!r} already exists")
        project_id = uuid.uuid4().hex[:12]
        project_dir = self.root / project_id
        project_dir.mkdir(parents=True)
        meta = {"id": project_id, "name": name, "created": _now()}
        _fsync_write(project_dir / "project.json", json.dumps(meta, indent=2) + "\n")
        (project_dir / "ops.jsonl").touch()
        self.mark_last(project_id)
        return ProjectHandle(self, project_id, meta)

    def get(self, key: str) -> ProjectHandle:
        """Look a project up by id first, then by exact name."""
        meta_path = self._meta_path(key)
        if meta_path.exists():
            with open(meta_path, encoding="utf-8") as source:
                return ProjectHandle(self, key, json.load(source))
        for project_id, meta in self._iter_meta():
            if meta.get("name") == key:
                return ProjectHandle(self, project_id, meta)
        raise NotFoundError(f"no project with id or name {key!r}")

    def list(self) -> list[dict]:
        out = []
        for project_id, meta in self._iter_meta():
            handle = ProjectHandle(self, project_id, meta)
            out.append(
                {
                    "id": project_id,
                    "name": meta.get("name", ""),
                    "created": meta.get("created", ""),
                    "log_length": len(handle.entries()),
                }
            )
        return out

    # -- the convenience marker ----------------------------------------------

    def mark_last(self, project_id: str):
        self.root.mkdir(parents=True, exist_ok=True)
        _fsync_write(self.root / ".last-project", project_id + "\n")

    def last(self) -> str | None:
        marker = self.root / ".last-project"
        if marker.exists():
            value = marker.read_text(encoding="utf-8").strip()
            return value or None
        return None
