"""LINDDUN property trees: node identities, loading, queries, composed readings.

A tree catalog is data, not code. It is loaded from a JSON document whose
top-level keys are the seven property letters, each holding a list of root
nodes; a node is an object {id, label, composes, children}. The catalog is
immutable once loaded and safe to share between threads.

Some node labels are meant to be read together with their ancestors: a node
whose ``composes`` flag is true contributes its label as a prefix to the
reading of every descendant. ``composed_label`` produces that reading.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import NotFoundError, ParseError

PROPERTY_LETTERS = ("L", "I", "N", "D", "Di", "U", "Nc")

_PROPERTY_RANK = {letter: rank for rank, letter in enumerate(PROPERTY_LETTERS)}

# Longer letters first so "Di"/"Nc" are not read as "D"/"N".
_NODE_ID_RE = re.compile(r"^(Di|Nc|L|I|N|D|U)_([a-z]+)([1-9][0-9]*)$")


@dataclass(frozen=True)
class NodeId:
    """Identity of a tree node, e.g. L_df10: property letter, locus token, index."""

    property_letter: str
    locus: str
    index: int

    @classmethod
    def parse(cls, text: str) -> NodeId:
        m = _NODE_ID_RE.match(text)
        if not m:
            raise ParseError(f"malformed tree node id {text!r}")
        return cls(m.group(1), m.group(2), int(m.group(3)))

    def render(self) -> str:
        return f"{self.property_letter}_{self.locus}{self.index}"

    def __str__(self) -> str:
        return self.render()

    @property
    def sort_key(self) -> tuple[int, str, int]:
        return (_PROPERTY_RANK[self.property_letter], self.locus, self.index)


@dataclass(frozen=True)
class TreeNode:
    id: NodeId
    label: str
    composes: bool = False
    children: tuple[NodeId, ...] = ()


def _decapitalize(text: str) -> str:
    return text[0].lower() + text[1:] if text else text


@dataclass(frozen=True)
class TreeCatalog:
    """The seven property trees, indexed every way the workbench needs."""

    roots: dict[str, tuple[NodeId, ...]]
    nodes: dict[NodeId, TreeNode]
    parents: dict[NodeId, NodeId] = field(default_factory=dict)
    origin: str = ""

    def resolve(self, node_id: NodeId) -> TreeNode:
        node = self.nodes.get(node_id)
        if node is None:
            raise NotFoundError(f"unknown tree node {node_id}")
        return node

    def composed_label(self, node_id: NodeId) -> str:
        """Human reading of a node: composing ancestor labels, then its own.

        The chain is the maximal unbroken run of composes-flagged ancestors
        ending at the immediate parent. Every component after the first is
        decapitalized so the concatenation reads as one sentence.
        """
        node = self.resolve(node_id)
        chain: list[str] = []
        cursor = self.parents.get(node_id)
        while cursor is not None and self.nodes[cursor].composes:
            chain.append(self.nodes[cursor].label)
            cursor = self.parents.get(cursor)
        chain.reverse()
        parts = chain + [node.label]
        return " ".join([parts[0], *(_decapitalize(p) for p in parts[1:])])

    def nodes_of_property(self, letter: str) -> list[TreeNode]:
        """Preorder traversal of one property's trees."""
        if letter not in PROPERTY_LETTERS:
            raise NotFoundError(f"unknown LINDDUN property {letter!r}")
        out: list[TreeNode] = []
        stack = list(reversed(self.roots.get(letter, ())))
        while stack:
            node = self.nodes[stack.pop()]
            out.append(node)
            stack.extend(reversed(node.children))
        return out

    def all_nodes(self) -> list[TreeNode]:
        """Preorder per property, properties in acronym order."""
        out: list[TreeNode] = []
        for letter in PROPERTY_LETTERS:
            out.extend(self.nodes_of_property(letter))
        return out

    def serialize(self) -> str:
        """Canonical JSON rendering; load_trees of the result is an identity."""

        def node_obj(node_id: NodeId) -> dict:
            node = self.nodes[node_id]
            return {
                "id": node.id.render(),
                "label": node.label,
                "composes": node.composes,
                "children": [node_obj(child) for child in node.children],
            }

        doc = {
            letter: [node_obj(root) for root in self.roots.get(letter, ())]
            for letter in PROPERTY_LETTERS
        }
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _parse_node(obj, letter: str, path: str, nodes: dict, parents: dict, parent: NodeId | None) -> NodeId:
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: node must be an object")
    unknown = set(obj) - {"id", "label", "composes", "children"}
    if unknown:
        raise ParseError(f"{path}: unknown node keys {sorted(unknown)}")
    if "id" not in obj or "label" not in obj:
        raise ParseError(f"{path}: node needs id and label")
    node_id = NodeId.parse(obj["id"]) if isinstance(obj["id"], str) else None
    if node_id is None:
        raise ParseError(f"{path}: node id must be a string")
    if node_id.property_letter != letter:
        raise ParseError(
            f"{path}: node {node_id} filed under property {letter!r}"
        )
    if node_id in nodes:
        raise ParseError(f"{path}: duplicate node id {node_id}")
    label = obj["label"]
    if not isinstance(label, str) or not label.strip():
        raise ParseError(f"{path}: node {node_id} needs a non-empty label")
    composes = obj.get("composes", False)
    if not isinstance(composes, bool):
        raise ParseError(f"{path}: node {node_id} composes flag must be a boolean")
    raw_children = obj.get("children", [])
    if not isinstance(raw_children, list):
        raise ParseError(f"{path}: node {node_id} children must be a list")
    # Claim the id before descending so duplicates anywhere below are caught.
    nodes[node_id] = None
    child_ids = tuple(
        _parse_node(child, letter, f"{path}.children[{i}]", nodes, parents, node_id)
        for i, child in enumerate(raw_children)
    )
    nodes[node_id] = TreeNode(node_id, label, composes, child_ids)
    if parent is not None:
        parents[node_id] = parent
    return node_id


def load_trees_text(text: str, origin: str = "") -> TreeCatalog:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid tree document: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("tree document must be an object keyed by property letter")
    missing = [letter for letter in PROPERTY_LETTERS if letter not in doc]
    if missing:
        raise ParseError(f"tree document missing properties {missing}")
    unknown = set(doc) - set(PROPERTY_LETTERS)
    if unknown:
        raise ParseError(f"tree document has unknown keys {sorted(unknown)}")
    nodes: dict[NodeId, TreeNode] = {}
    parents: dict[NodeId, NodeId] = {}
    roots: dict[str, tuple[NodeId, ...]] = {}
    for letter in PROPERTY_LETTERS:
        raw_roots = doc[letter]
        if not isinstance(raw_roots, list):
            raise ParseError(f"property {letter!r} must hold a list of root nodes")
        roots[letter] = tuple(
            _parse_node(obj, letter, f"{letter}[{i}]", nodes, parents, None)
            for i, obj in enumerate(raw_roots)
        )
    return TreeCatalog(roots=roots, nodes=nodes, parents=parents, origin=origin)


def load_trees(path: str | Path) -> TreeCatalog:
    path = Path(path)
    return load_trees_text(path.read_text(encoding="utf-8"), origin=str(path))


def fixture_tree_path() -> Path:
    """Path of the bundled tree subset used by tests and demo projects."""
    return Path(__file__).parent / "fixtures" / "linddun-paper-subset.json"
