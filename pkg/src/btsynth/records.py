"""Dataset records: the five-field corpus entry, stored as JSON Lines.

Each record pairs a tree's canonical XML with human-readable metadata for
every leaf it uses: {name, description, xml, nodes, implementations}, where
``nodes`` and ``implementations`` are lists of [leaf name, text] pairs.
One record per line supports streaming corpus generation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .btxml import parse_bt_xml
from .core import ACTION, CONDITION, iter_nodes
from .errors import CrossRefViolationError, SchemaViolationError

RECORD_KEYS = ("name", "description", "xml", "nodes", "implementations")


@dataclass(frozen=True)
class DatasetRecord:
    name: str
    description: str
    xml: str
    nodes_meta: tuple[tuple[str, str], ...]
    implementations: tuple[tuple[str, str], ...]

    def bindings(self) -> list[str]:
        """Distinct leaf bindings appearing in the XML, in first-use order."""
        tree = parse_bt_xml(self.xml)
        seen: list[str] = []
        for node in iter_nodes(tree.root):
            if node.kind in (CONDITION, ACTION) and node.binding not in seen:
                seen.append(node.binding)
        return seen

    def check_cross_refs(self):
        """Every binding must have exactly one metadata and one implementation entry."""
        for label, pairs in (("nodes", self.nodes_meta), ("implementations", self.implementations)):
            names = [n for n, _ in pairs]
            dupes = sorted({n for n in names if names.count(n) > 1})
            if dupes:
                raise CrossRefViolationError(f"record {self.name!r}: duplicate {label} entries {dupes}")
        meta_names = {n for n, _ in self.nodes_meta}
        impl_names = {n for n, _ in self.implementations}
        for binding in self.bindings():
            if binding not in meta_names:
                raise CrossRefViolationError(
                    f"record {self.name!r}: binding {binding!r} has no nodes entry"
                )
            if binding not in impl_names:
                raise CrossRefViolationError(
                    f"record {self.name!r}: binding {binding!r} has no implementations entry"
                )


def _pairs(obj, where: str) -> tuple[tuple[str, str], ...]:
    if not isinstance(obj, list):
        raise SchemaViolationError(f"{where} must be a list of [name, text] pairs")
    out = []
    for entry in obj:
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(isinstance(x, str) for x in entry)
        ):
            raise SchemaViolationError(f"{where} entries must be [name, text] string pairs")
        out.append((entry[0], entry[1]))
    return tuple(out)


def record_from_dict(obj: dict) -> DatasetRecord:
    if not isinstance(obj, dict) or set(obj) != set(RECORD_KEYS):
        raise SchemaViolationError(f"record must have keys exactly {list(RECORD_KEYS)}")
    if not all(isinstance(obj[k], str) for k in ("name", "description", "xml")):
        raise SchemaViolationError("record name/description/xml must be strings")
    record = DatasetRecord(
        name=obj["name"],
        description=obj["description"],
        xml=obj["xml"],
        nodes_meta=_pairs(obj["nodes"], "nodes"),
        implementations=_pairs(obj["implementations"], "implementations"),
    )
    record.check_cross_refs()  # also verifies the xml parses
    return record


def record_to_dict(record: DatasetRecord) -> dict:
    return {
        "name": record.name,
        "description": record.description,
        "xml": record.xml,
        "nodes": [[n, t] for n, t in record.nodes_meta],
        "implementations": [[n, t] for n, t in record.implementations],
    }


def write_record(record: DatasetRecord) -> str:
    """One JSON line, no trailing newline."""
    return json.dumps(record_to_dict(record), ensure_ascii=False)


def read_record(text: str) -> DatasetRecord:
    try:
        obj = json.loads(text)
    except ValueError as exc:
        raise SchemaViolationError(f"record is not valid JSON: {exc}") from None
    return record_from_dict(obj)


def read_records(text: str) -> list[DatasetRecord]:
    """Parse a JSONL corpus; blank lines are skipped."""
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(read_record(line))
        except (SchemaViolationError, CrossRefViolationError) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    return records


def write_records(records) -> str:
    return "".join(write_record(r) + "\n" for r in records)
