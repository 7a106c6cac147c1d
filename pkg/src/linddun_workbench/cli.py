"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 parse error in an input file or
argument, 3 a violated operation precondition (including replay failures).
Every error path prints one located message to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

from .catalog_io import export_reports, export_step_files
from .errors import ParseError, PreconditionError, WorkbenchError
from .model import LinddunProfile, ThreatId
from .replay import op_stats
from .script import MapStmt, ProfileStmt, SafetyStmt, parse_script
from .store import ProjectHandle, ProjectStore
from .suggest import suggest_embraces


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--root",
        default=None,
        help="project store directory (default: $TM_PROJECT_DIR or ./projects)",
    )
    common.add_argument(
        "--project",
        default=None,
        help="project name or id (default: the most recently used project)",
    )

    parser = _Parser(prog="linddun-wb", description="privacy threat refinement workbench")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_init = sub.add_parser("init", parents=[common], help="create a project")
    p_init.add_argument("name")
    p_init.add_argument("--trees", default=None, help="tree catalog JSON to attach")

    p_import = sub.add_parser("import", parents=[common], help="import a preliminary catalog")
    p_import.add_argument("--catalog", required=True)
    p_import.add_argument("--source-tag", default=None, dest="source_tag")
    p_import.add_argument("--suffix", default="", choices=["a", "w"])

    p_profile = sub.add_parser("profile", parents=[common], help="set a preliminary threat's properties")
    p_profile.add_argument("id")
    p_profile.add_argument("props", nargs="?", default="")

    p_apply = sub.add_parser("apply", parents=[common], help="run a script transactionally")
    p_apply.add_argument("script")

    p_suggest = sub.add_parser("suggest", parents=[common], help="print embrace candidates")
    p_suggest.add_argument("--threshold", type=float, default=None)
    p_suggest.add_argument("--max", type=int, default=None, dest="max_results")

    p_map = sub.add_parser("map", parents=[common], help="run a map-only script")
    p_map.add_argument("script")
    p_map.add_argument("--trees", default=None)

    p_safety = sub.add_parser("safety-check", parents=[common], help="run a safety-only script")
    p_safety.add_argument("script")
    p_safety.add_argument("--trees", default=None)

    p_report = sub.add_parser("report", parents=[common], help="write step files and reports")
    p_report.add_argument("--out", required=True)

    p_stats = sub.add_parser("stats", parents=[common], help="print refinement totals")
    p_stats.add_argument("--suffix", default=None, choices=["a", "w"])

    p_serve = sub.add_parser("serve", parents=[common], help="start the HTTP service")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--host", default="127.0.0.1")

    return parser


def _store(args) -> ProjectStore:
    root = args.root or os.environ.get("TM_PROJECT_DIR") or "projects"
    return ProjectStore(root)


def _project(args, store: ProjectStore) -> ProjectHandle:
    key = args.project or store.last()
    if not key:
        raise PreconditionError(
            "no project selected; pass --project or create one with init",
            code="no-project",
        )
    return store.get(key)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _attach_trees(handle: ProjectHandle, trees_arg: str | None):
    if trees_arg:
        handle.attach_trees(trees_arg)


def _cmd_init(args) -> int:
    store = _store(args)
    handle = store.create(args.name)
    _attach_trees(handle, args.trees)
    print(f"created project {handle.name} ({handle.id})")
    return 0


def _cmd_import(args) -> int:
    handle = _project(args, _store(args))
    count, state = handle.import_catalog(
        _read_bytes(args.catalog), suffix=args.suffix, source_tag=args.source_tag
    )
    print(f"imported {count} preliminary threats (log length {state.log_length})")
    return 0


def _cmd_profile(args) -> int:
    stmt = ProfileStmt(ThreatId.parse(args.id), LinddunProfile.from_text(args.props))
    handle = _project(args, _store(args))
    _, state = handle.apply_statements([stmt])
    print(f"profiled {args.id} (log length {state.log_length})")
    return 0


def _apply_script(args, restrict: type | None = None, kind: str = "") -> int:
    handle = _project(args, _store(args))
    if getattr(args, "trees", None):
        _attach_trees(handle, args.trees)
    statements = parse_script(_read_text(args.script))
    if restrict is not None:
        for stmt in statements:
            if not isinstance(stmt, restrict):
                raise PreconditionError(
                    f"this command accepts only {kind} statements",
                    code="invalid-argument",
                )
    applied, state = handle.apply_statements(statements)
    print(f"applied {applied} statements (log length {state.log_length})")
    return 0


def _cmd_suggest(args) -> int:
    handle = _project(args, _store(args))
    config = handle.config()
    threshold = config["suggest_threshold"] if args.threshold is None else args.threshold
    candidates = suggest_embraces(
        handle.state(),
        threshold=Fraction(threshold).limit_denominator(10**9),
        max_results=args.max_results,
        protected=tuple(config["protected_terms"]),
    )
    for candidate in candidates:
        ids = " + ".join(str(i) for i in candidate.ids)
        shared = ", ".join(candidate.shared_tokens) or "-"
        print(f"{ids}  score={float(candidate.score):.3f}  shared: {shared}")
    if not candidates:
        print("no candidates at this threshold")
    return 0


def _cmd_report(args) -> int:
    handle = _project(args, _store(args))
    state = handle.state()
    try:
        written = export_step_files(state, args.out)
        written.extend(export_reports(state, args.out))
    except OSError as exc:
        raise WorkbenchError(f"cannot write report: {exc}", code="io-error") from None
    for path in written:
        print(path)
    return 0


def _cmd_stats(args) -> int:
    handle = _project(args, _store(args))
    stats = op_stats(handle.entries(), handle.trees(), suffix=args.suffix)
    print(stats.render())
    return 0


def _cmd_serve(args) -> int:
    from .service import serve

    serve(_store(args), port=args.port, host=args.host)
    return 0


_COMMANDS = {
    "init": _cmd_init,
    "import": _cmd_import,
    "profile": _cmd_profile,
    "apply": lambda args: _apply_script(args),
    "suggest": _cmd_suggest,
    "map": lambda args: _apply_script(args, MapStmt, "map"),
    "safety-check": lambda args: _apply_script(args, SafetyStmt, "safety"),
    "report": _cmd_report,
    "stats": _cmd_stats,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except WorkbenchError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
