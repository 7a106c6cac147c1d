"""Analyst workbench for LINDDUN privacy threat elicitation.

The package models a five-stage workflow: collect preliminary threats from
source catalogs, tick their LINDDUN profiles, refine them into final threats
with embrace/rename/discard operations, map the finals onto LINDDUN threat
trees, and run a full-tree safety check. Every decision is appended to a
per-project operation log; all tables are derived from the log by replay.
"""

from pathlib import Path

__version__ = "0.1.0"


def fixture_path(name: str) -> Path:
    """Path of a bundled demo corpus file."""
    return Path(__file__).parent / "fixtures" / name
