"""Leaf-node catalog, decomposition operators and lexical retrieval.

A library maps definition names to condition/action leaf definitions.  Each
definition binds a scenario primitive (a condition predicate or an action
schema) by name; resolution is checked when a library meets a scenario,
not at load time, so the same library file can serve several worlds.

Retrieval is deliberately lexical: Jaccard overlap between lowercase token
sets, split on every non-alphanumeric character, no stemming.  It is
deterministic, dependency-free and hand-checkable, and the ``retrieve``
signature is the seam where an embedding backend could be substituted.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DuplicateNameError, SchemaViolationError, UnknownNodeTypeError

CONDITION_TYPE = "condition"
ACTION_TYPE = "action"

# Operator kinds (the Ops catalog is built in, not file-configurable).
BIND_LEAF = "BindLeaf"
SEQ_DECOMPOSE = "SeqDecompose"
FB_DECOMPOSE = "FbDecompose"
PAR_DECOMPOSE = "ParDecompose"
GUARD_PATTERN = "GuardPattern"


@dataclass(frozen=True)
class NodeDefinition:
    node_type: str  # "condition" | "action"
    name: str
    description: str
    implementation: str
    binding: str  # scenario primitive this leaf executes

    @property
    def retrieval_text(self) -> str:
        return f"{self.name} {self.description}"


@dataclass(frozen=True)
class OperatorDef:
    kind: str
    min_children: int
    max_children: int


DEFAULT_OPERATORS: tuple[OperatorDef, ...] = (
    OperatorDef(BIND_LEAF, 1, 1),
    OperatorDef(SEQ_DECOMPOSE, 1, 16),
    OperatorDef(FB_DECOMPOSE, 1, 16),
    OperatorDef(PAR_DECOMPOSE, 1, 16),
    OperatorDef(GUARD_PATTERN, 2, 2),
)

OPERATOR_KINDS = frozenset(op.kind for op in DEFAULT_OPERATORS)


def operator_def(kind: str) -> OperatorDef:
    for op in DEFAULT_OPERATORS:
        if op.kind == kind:
            return op
    raise SchemaViolationError(f"unknown operator kind {kind!r}")


class NodeLibrary:
    """Immutable name-indexed collection of leaf definitions."""

    def __init__(self, definitions, operators: tuple[OperatorDef, ...] = DEFAULT_OPERATORS):
        by_name: dict[str, NodeDefinition] = {}
        for d in definitions:
            if d.name in by_name:
                raise DuplicateNameError(f"duplicate node definition {d.name!r}")
            by_name[d.name] = d
        # Stable iteration order: lexicographic by name.
        self._defs = {name: by_name[name] for name in sorted(by_name)}
        self.operators = operators

    def __len__(self) -> int:
        return len(self._defs)

    def __iter__(self):
        return iter(self._defs.values())

    def get(self, name: str) -> NodeDefinition | None:
        return self._defs.get(name)

    def names(self) -> list[str]:
        return list(self._defs)

    def conditions(self) -> list[NodeDefinition]:
        return [d for d in self if d.node_type == CONDITION_TYPE]

    def actions(self) -> list[NodeDefinition]:
        return [d for d in self if d.node_type == ACTION_TYPE]


_REQUIRED_KEYS = {"type", "name", "description", "implementation", "binding"}


def load_library(doc: str | dict) -> NodeLibrary:
    """Load a library from its JSON document (text or parsed)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except ValueError as exc:
            raise SchemaViolationError(f"library is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "nodes" not in doc or not isinstance(doc["nodes"], list):
        raise SchemaViolationError("library document must be an object with a 'nodes' list")
    defs = []
    for i, entry in enumerate(doc["nodes"]):
        if not isinstance(entry, dict) or set(entry) != _REQUIRED_KEYS:
            raise SchemaViolationError(
                f"nodes[{i}] must have keys exactly {sorted(_REQUIRED_KEYS)}"
            )
        if not all(isinstance(entry[k], str) for k in _REQUIRED_KEYS):
            raise SchemaViolationError(f"nodes[{i}] values must all be strings")
        if entry["type"] not in (CONDITION_TYPE, ACTION_TYPE):
            raise UnknownNodeTypeError(f"nodes[{i}] has unknown type {entry['type']!r}")
        defs.append(
            NodeDefinition(
                entry["type"], entry["name"], entry["description"], entry["implementation"], entry["binding"]
            )
        )
    return NodeLibrary(defs)


def load_library_file(path: str | Path) -> NodeLibrary:
    return load_library(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text.lower()))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def retrieve(query: str, k: int, library: NodeLibrary) -> list[tuple[NodeDefinition, float]]:
    """Rank definitions by token overlap with ``query``, best first.

    Ties break lexicographically by name; at most min(k, len(library))
    entries are returned, zero-score entries included.
    """
    if k < 1:
        raise SchemaViolationError(f"k must be >= 1, got {k}")
    query_tokens = tokenize(query)
    scored = [(d, jaccard(query_tokens, tokenize(d.retrieval_text))) for d in library]
    scored.sort(key=lambda pair: (-pair[1], pair[0].name))
    return scored[: min(k, len(scored))]
