"""Parsing and canonical serialization of the behavior-tree XML dialect.

The dialect has six elements: ``Fallback``, ``Sequence``, ``Parallel``,
``Condition``, ``Action`` and ``Open``.  Every element carries an
``instance_name`` attribute; ``Parallel`` additionally needs an integer
``threshold``; ``Condition``/``Action`` may carry ``binding`` (defaulting to
the instance name, which is how published trees name their leaves); ``Open``
carries ``subgoal`` plus optional ``desc`` and ``assume``.

Parsing is lenient about surface syntax (single or double quotes, whitespace
around ``=``) and strict about the dialect; any byte string yields either a
tree or a diagnostic with line/column, never a crash.  Parsing does *not*
check structural invariants such as child counts - that is
``validate_structure``'s job - so degenerate trees can be loaded and
reported.

Serialization is canonical: two-space indentation, double quotes, no spaces
around ``=``, self-closing leaf elements, LF line endings and a trailing
newline, so identical trees always produce identical bytes.
"""

from __future__ import annotations

import json
from xml.parsers import expat

from .core import (
    ACTION,
    CONDITION,
    CONTROL_KINDS,
    OPEN,
    PARALLEL,
    BTNode,
    BehaviorTree,
    SubGoal,
)
from .errors import (
    DuplicateInstanceNameError,
    MalformedXmlError,
    MissingAttributeError,
    UnknownElementError,
)
from .predicates import literals_text, parse_literals_text

_DIALECT = frozenset({"Fallback", "Sequence", "Parallel", "Condition", "Action", "Open"})


class _Builder:
    """Expat callbacks that assemble BTNode values with position info."""

    def __init__(self, parser):
        self.parser = parser
        self.stack: list[list] = []  # [kind, attrs, children]
        self.root: BTNode | None = None
        self.seen_names: set[str] = set()

    def _pos(self) -> tuple[int, int]:
        return self.parser.CurrentLineNumber, self.parser.CurrentColumnNumber + 1

    def start(self, name: str, attrs: dict):
        line, col = self._pos()
        if name not in _DIALECT:
            raise UnknownElementError(f"element {name!r} is not in the dialect", line, col)
        instance = attrs.get("instance_name")
        if instance is None:
            raise MissingAttributeError(f"<{name}> lacks instance_name", line, col)
        if instance in self.seen_names:
            raise DuplicateInstanceNameError(f"instance_name {instance!r} reused", line, col)
        self.seen_names.add(instance)
        self.stack.append([name, attrs, [], (line, col)])

    def end(self, name: str):
        kind, attrs, children, pos = self.stack.pop()
        node = self._make_node(kind, attrs, tuple(children), pos)
        if self.stack:
            self.stack[-1][2].append(node)
        else:
            self.root = node

    def text(self, data: str):
        if data.strip():
            line, col = self._pos()
            raise MalformedXmlError(f"unexpected text content {data.strip()!r}", line, col)

    def _make_node(self, kind: str, attrs: dict, children: tuple, pos) -> BTNode:
        line, col = pos
        instance = attrs["instance_name"]
        threshold = None
        binding = None
        subgoal = None
        if kind == PARALLEL:
            raw = attrs.get("threshold")
            if raw is None:
                raise MissingAttributeError(f"<Parallel {instance!r}> lacks threshold", line, col)
            try:
                threshold = int(raw)
            except ValueError:
                raise MissingAttributeError(
                    f"<Parallel {instance!r}> threshold {raw!r} is not an integer", line, col
                ) from None
        elif kind in (CONDITION, ACTION):
            binding = attrs.get("binding", instance)
        elif kind == OPEN:
            raw = attrs.get("subgoal")
            if raw is None:
                raise MissingAttributeError(f"<Open {instance!r}> lacks subgoal", line, col)
            try:
                literals = parse_literals_text(raw)
            except Exception:
                raise MissingAttributeError(
                    f"<Open {instance!r}> subgoal {raw!r} is not a literal conjunction", line, col
                ) from None
            assume_raw = attrs.get("assume", "")
            if assume_raw:
                try:
                    pairs = tuple(sorted(json.loads(assume_raw).items()))
                except (ValueError, AttributeError):
                    raise MissingAttributeError(
                        f"<Open {instance!r}> assume is not a JSON object", line, col
                    ) from None
            else:
                pairs = ()
            subgoal = SubGoal(literals, attrs.get("desc", ""), pairs)
        return BTNode(kind, instance, children, threshold=threshold, binding=binding, subgoal=subgoal)


def parse_bt_xml(text: str | bytes) -> BehaviorTree:
    """Parse dialect XML into a tree, or raise a positioned diagnostic."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedXmlError(f"input is not UTF-8: {exc}") from None
    parser = expat.ParserCreate("utf-8")
    builder = _Builder(parser)
    parser.StartElementHandler = builder.start
    parser.EndElementHandler = builder.end
    parser.CharacterDataHandler = builder.text
    try:
        parser.Parse(text, True)
    except expat.ExpatError as exc:
        raise MalformedXmlError(expat.errors.messages[exc.code], exc.lineno, exc.offset + 1) from None
    if builder.root is None:
        raise MalformedXmlError("document contains no element", 1, 1)
    return BehaviorTree(builder.root)


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------


def _escape(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _attrs(node: BTNode) -> str:
    parts = [f'instance_name="{_escape(node.instance_name)}"']
    if node.kind == PARALLEL:
        parts.append(f'threshold="{node.threshold}"')
    if node.kind in (CONDITION, ACTION) and node.binding not in (None, node.instance_name):
        parts.append(f'binding="{_escape(node.binding)}"')
    if node.kind == OPEN and node.subgoal is not None:
        sg = node.subgoal
        parts.append(f'subgoal="{_escape(literals_text(sg.literals))}"')
        if sg.description:
            parts.append(f'desc="{_escape(sg.description)}"')
        if sg.assumptions:
            blob = json.dumps(dict(sg.assumptions), sort_keys=True, separators=(",", ":"))
            parts.append(f'assume="{_escape(blob)}"')
    return " ".join(parts)


def _write(node: BTNode, indent: int, out: list[str]):
    pad = "  " * indent
    if node.kind in CONTROL_KINDS and node.children:
        out.append(f"{pad}<{node.kind} {_attrs(node)}>")
        for child in node.children:
            _write(child, indent + 1, out)
        out.append(f"{pad}</{node.kind}>")
    else:
        out.append(f"{pad}<{node.kind} {_attrs(node)} />")


def serialize_bt_xml(tree: BehaviorTree) -> str:
    """Render the canonical form; ``parse_bt_xml`` inverts it structurally."""
    out: list[str] = []
    _write(tree.root, 0, out)
    return "\n".join(out) + "\n"
