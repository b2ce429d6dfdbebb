"""Behavior-tree data model and deterministic control-node semantics.

Trees are immutable values: every node is a frozen dataclass and edits build
new trees.  One synchronous tick walks the tree from the root:

* ``Sequence`` ticks children left to right and returns Failure or Running at
  the first child returning it; Success only if every child succeeds.
* ``Fallback`` returns Success or Running at the first child returning it;
  Failure only if every child fails.
* ``Parallel`` ticks *all* children (left to right, within the one tick, so
  execution stays deterministic) and succeeds when at least ``threshold``
  children succeed, fails once more than ``len(children) - threshold`` have
  failed, and reports Running otherwise.

Ticks are memoryless: the tree is re-evaluated from the root every time, so
condition changes redirect flow immediately (the reactive convention).  Leaf
execution is pluggable through ``tick_with`` so the same control semantics
drive the production simulator, the always-failure stubs used during
synthesis rollouts, and fixed-status stubs in tests.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Iterator

from .predicates import Literal, Value, literals_text

FALLBACK = "Fallback"
SEQUENCE = "Sequence"
PARALLEL = "Parallel"
CONDITION = "Condition"
ACTION = "Action"
OPEN = "Open"

CONTROL_KINDS = (FALLBACK, SEQUENCE, PARALLEL)
LEAF_KINDS = (CONDITION, ACTION, OPEN)


class NodeStatus(enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    RUNNING = "Running"

    def __str__(self) -> str:  # pragma: no cover - repr sugar
        return self.value


@dataclass(frozen=True)
class SubGoal:
    """Payload of an Open placeholder: literals still to achieve.

    ``assumptions`` are variable values the surrounding tree guarantees when
    this subtree runs (e.g. the guard condition that leads into it); goal
    regression evaluates "unmet" relative to the scenario init overlaid with
    these.
    """

    literals: tuple[Literal, ...]
    description: str = ""
    assumptions: tuple[tuple[str, Value], ...] = ()

    def text(self) -> str:
        return literals_text(self.literals)


@dataclass(frozen=True)
class BTNode:
    """One tree node; ``kind`` is one of the element names of the XML dialect.

    Construction is deliberately permissive: structural invariants (child
    counts, thresholds, unique names) are checked by ``validate_structure``
    so that broken inputs can be parsed and reported rather than crashing.
    """

    kind: str
    instance_name: str
    children: tuple["BTNode", ...] = ()
    threshold: int | None = None  # Parallel only
    binding: str | None = None  # Condition/Action: node-definition name
    subgoal: SubGoal | None = None  # Open only

    @property
    def is_control(self) -> bool:
        return self.kind in CONTROL_KINDS

    @property
    def is_leaf(self) -> bool:
        return self.kind in LEAF_KINDS


def fallback(name: str, children) -> BTNode:
    return BTNode(FALLBACK, name, tuple(children))


def sequence(name: str, children) -> BTNode:
    return BTNode(SEQUENCE, name, tuple(children))


def parallel(name: str, threshold: int, children) -> BTNode:
    return BTNode(PARALLEL, name, tuple(children), threshold=threshold)


def condition(name: str, binding: str | None = None) -> BTNode:
    return BTNode(CONDITION, name, binding=binding or name)


def action(name: str, binding: str | None = None) -> BTNode:
    return BTNode(ACTION, name, binding=binding or name)


def open_node(name: str, subgoal: SubGoal) -> BTNode:
    return BTNode(OPEN, name, subgoal=subgoal)


def iter_nodes(node: BTNode) -> Iterator[BTNode]:
    """Preorder traversal."""
    yield node
    for child in node.children:
        yield from iter_nodes(child)


def count_nodes(node: BTNode) -> int:
    return sum(1 for _ in iter_nodes(node))


def depth_of(node: BTNode) -> int:
    """Longest root-to-leaf path, counted in nodes (a bare leaf has depth 1)."""
    if not node.children:
        return 1
    return 1 + max(depth_of(c) for c in node.children)


def open_nodes(node: BTNode) -> list[BTNode]:
    return [n for n in iter_nodes(node) if n.kind == OPEN]


def replace_node(root: BTNode, target_name: str, replacement: BTNode) -> BTNode:
    """Return a new tree with the node named ``target_name`` swapped out."""
    if root.instance_name == target_name:
        return replacement
    if not root.children:
        return root
    new_children = tuple(replace_node(c, target_name, replacement) for c in root.children)
    if new_children == root.children:
        return root
    return BTNode(
        root.kind,
        root.instance_name,
        new_children,
        threshold=root.threshold,
        binding=root.binding,
        subgoal=root.subgoal,
    )


@dataclass(frozen=True)
class BehaviorTree:
    """A rooted tree with cached size and depth."""

    root: BTNode
    node_count: int = field(init=False)
    depth: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "node_count", count_nodes(self.root))
        object.__setattr__(self, "depth", depth_of(self.root))


# ---------------------------------------------------------------------------
# Tick semantics
# ---------------------------------------------------------------------------

# A leaf executor turns (leaf node, world) into (status, new world).  The
# world value is opaque to the control semantics; it is threaded through
# children left to right so sequenced effects see each other within one tick.
LeafExec = Callable[[BTNode, object], tuple[NodeStatus, object]]


def tick_with(node: BTNode, world, leaf_exec: LeafExec) -> tuple[NodeStatus, object]:
    """Tick a subtree once, delegating leaf execution to ``leaf_exec``."""
    if node.kind == SEQUENCE:
        for child in node.children:
            status, world = tick_with(child, world, leaf_exec)
            if status is not NodeStatus.SUCCESS:
                return status, world
        return NodeStatus.SUCCESS, world
    if node.kind == FALLBACK:
        for child in node.children:
            status, world = tick_with(child, world, leaf_exec)
            if status is not NodeStatus.FAILURE:
                return status, world
        return NodeStatus.FAILURE, world
    if node.kind == PARALLEL:
        statuses = []
        for child in node.children:
            status, world = tick_with(child, world, leaf_exec)
            statuses.append(status)
        succeeded = sum(s is NodeStatus.SUCCESS for s in statuses)
        failed = sum(s is NodeStatus.FAILURE for s in statuses)
        threshold = node.threshold or 1
        if succeeded >= threshold:
            return NodeStatus.SUCCESS, world
        if failed > len(node.children) - threshold:
            return NodeStatus.FAILURE, world
        return NodeStatus.RUNNING, world
    return leaf_exec(node, world)


# ---------------------------------------------------------------------------
# Structural validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    code: str
    node: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding]

    @property
    def ok(self) -> bool:
        return not self.findings

    @property
    def has_open_nodes(self) -> bool:
        return any(f.code == "open-node" for f in self.findings)

    def lines(self) -> list[str]:
        return [f"{f.code} [{f.node}] {f.message}" for f in self.findings]


def validate_structure(tree: BehaviorTree, library=None) -> ValidationReport:
    """Report every violated node invariant and unresolved binding.

    All problems are report entries, never exceptions, so degenerate parses
    can be inspected.  ``library`` may be None to skip binding resolution.
    """
    findings: list[Finding] = []
    seen: set[str] = set()
    for node in iter_nodes(tree.root):
        name = node.instance_name
        if not name:
            findings.append(Finding("missing-name", "?", "node without instance_name"))
        elif name in seen:
            findings.append(Finding("duplicate-name", name, "instance_name reused"))
        else:
            seen.add(name)
        if node.kind in CONTROL_KINDS:
            if not node.children:
                findings.append(Finding("empty-control", name, f"{node.kind} has no children"))
            if node.kind == PARALLEL:
                m = node.threshold
                if m is None or not (1 <= m <= max(len(node.children), 1)):
                    findings.append(
                        Finding("bad-threshold", name, f"threshold {m!r} not in 1..{len(node.children)}")
                    )
        elif node.kind in LEAF_KINDS:
            if node.children:
                findings.append(Finding("leaf-children", name, f"{node.kind} leaf has children"))
            if node.kind == OPEN:
                findings.append(Finding("open-node", name, "unexpanded placeholder remains"))
            elif node.binding is None:
                findings.append(Finding("missing-binding", name, f"{node.kind} leaf without binding"))
            elif library is not None and library.get(node.binding) is None:
                findings.append(
                    Finding("unresolved-binding", name, f"binding {node.binding!r} not in library")
                )
        else:
            findings.append(Finding("unknown-kind", name, f"unknown node kind {node.kind!r}"))
    return ValidationReport(findings)
