"""Expansion candidates: one-shot subtree templates applied to Open nodes.

A template is a small tree whose leaves are either concrete library leaves
or fresh Open placeholders; applying a candidate splices the built subtree
over the targeted Open node.  The same structure round-trips through the
remote wire format, so in-process and remote policies speak one language.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .core import FALLBACK, PARALLEL, SEQUENCE, SubGoal
from .errors import SchemaViolationError
from .library import (
    BIND_LEAF,
    FB_DECOMPOSE,
    GUARD_PATTERN,
    OPERATOR_KINDS,
    PAR_DECOMPOSE,
    SEQ_DECOMPOSE,
    operator_def,
)
from .predicates import literals_text, parse_literals_text


@dataclass(frozen=True)
class LeafSpec:
    """A concrete leaf: the named library definition decides condition/action."""

    definition: str


@dataclass(frozen=True)
class OpenSpec:
    """A fresh placeholder carrying the subgoal its subtree must achieve."""

    subgoal: SubGoal


@dataclass(frozen=True)
class BranchSpec:
    kind: str  # Sequence | Fallback | Parallel
    children: tuple["TemplateSpec", ...]
    threshold: int | None = None


TemplateSpec = Union[LeafSpec, OpenSpec, BranchSpec]


def describe_spec(spec: TemplateSpec) -> str:
    if isinstance(spec, LeafSpec):
        return f"leaf:{spec.definition}"
    if isinstance(spec, OpenSpec):
        return f"open({literals_text(spec.subgoal.literals)})"
    inner = ", ".join(describe_spec(c) for c in spec.children)
    suffix = f"({spec.threshold})" if spec.kind == PARALLEL else ""
    return f"{spec.kind}{suffix}[{inner}]"


def leaf_names_in(spec: TemplateSpec) -> list[str]:
    if isinstance(spec, LeafSpec):
        return [spec.definition]
    if isinstance(spec, OpenSpec):
        return []
    out: list[str] = []
    for child in spec.children:
        out.extend(leaf_names_in(child))
    return out


@dataclass(frozen=True)
class ExpansionCandidate:
    operator: str  # one of the five operator kinds
    target: str  # frontier instance_name this candidate applies to
    template: TemplateSpec

    def describe(self) -> str:
        return describe_spec(self.template)

    def check_arity(self):
        op = operator_def(self.operator)
        if self.operator == BIND_LEAF:
            if not isinstance(self.template, LeafSpec):
                raise SchemaViolationError("BindLeaf must carry a single leaf")
            return
        if not isinstance(self.template, BranchSpec):
            raise SchemaViolationError(f"{self.operator} must carry a control-node template")
        n = len(self.template.children)
        if not (op.min_children <= n <= op.max_children):
            raise SchemaViolationError(
                f"{self.operator} produced {n} children, allowed {op.min_children}..{op.max_children}"
            )


# ---------------------------------------------------------------------------
# Wire encoding (shared by the remote policy and its in-process mocks)
# ---------------------------------------------------------------------------


def _subgoal_to_wire(subgoal: SubGoal) -> dict:
    return {
        "literals": [literals_text((g,)) for g in subgoal.literals],
        "description": subgoal.description,
        "assumptions": dict(subgoal.assumptions),
    }


def _subgoal_from_wire(obj) -> SubGoal:
    if not isinstance(obj, dict) or "literals" not in obj:
        raise SchemaViolationError(f"bad subgoal object: {obj!r}")
    literals = []
    for text in obj["literals"]:
        literals.extend(parse_literals_text(text))
    assumptions = obj.get("assumptions", {})
    if not isinstance(assumptions, dict):
        raise SchemaViolationError("subgoal assumptions must be an object")
    return SubGoal(tuple(literals), obj.get("description", ""), tuple(sorted(assumptions.items())))


def _spec_to_wire(spec: TemplateSpec) -> dict:
    if isinstance(spec, LeafSpec):
        return {"leaf": spec.definition}
    if isinstance(spec, OpenSpec):
        return {"open": _subgoal_to_wire(spec.subgoal)}
    branch = {"kind": spec.kind, "children": [_spec_to_wire(c) for c in spec.children]}
    if spec.threshold is not None:
        branch["threshold"] = spec.threshold
    return {"branch": branch}


def _spec_from_wire(obj) -> TemplateSpec:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise SchemaViolationError(f"bad template node: {obj!r}")
    if "leaf" in obj:
        if not isinstance(obj["leaf"], str):
            raise SchemaViolationError("leaf name must be a string")
        return LeafSpec(obj["leaf"])
    if "open" in obj:
        return OpenSpec(_subgoal_from_wire(obj["open"]))
    if "branch" in obj:
        branch = obj["branch"]
        kind = branch.get("kind")
        if kind not in (SEQUENCE, FALLBACK, PARALLEL):
            raise SchemaViolationError(f"bad branch kind {kind!r}")
        children = tuple(_spec_from_wire(c) for c in branch.get("children", []))
        if not children:
            raise SchemaViolationError("branch without children")
        threshold = branch.get("threshold")
        if kind == PARALLEL and not (isinstance(threshold, int) and 1 <= threshold <= len(children)):
            raise SchemaViolationError(f"bad Parallel threshold {threshold!r}")
        return BranchSpec(kind, children, threshold if kind == PARALLEL else None)
    raise SchemaViolationError(f"bad template node: {obj!r}")


def candidate_to_wire(cand: ExpansionCandidate) -> dict:
    if cand.operator == BIND_LEAF:
        payload = {"leaf": cand.template.definition}
    elif cand.operator == GUARD_PATTERN:
        guard, handler = cand.template.children
        payload = {"condition": guard.definition, "handler": _subgoal_to_wire(handler.subgoal)}
    else:
        payload = {"children": [_spec_to_wire(c) for c in cand.template.children]}
        if cand.operator == PAR_DECOMPOSE:
            payload["threshold"] = cand.template.threshold
    return {"operator": cand.operator, "target": cand.target, "payload": payload}


def candidate_from_wire(obj, default_target: str) -> ExpansionCandidate:
    """Decode one wire candidate; raises SchemaViolationError on any defect."""
    if not isinstance(obj, dict):
        raise SchemaViolationError(f"candidate must be an object, got {obj!r}")
    operator = obj.get("operator")
    if operator not in OPERATOR_KINDS:
        raise SchemaViolationError(f"unknown operator {operator!r}")
    target = obj.get("target", default_target)
    if not isinstance(target, str):
        raise SchemaViolationError("candidate target must be a string")
    payload = obj.get("payload")
    if not isinstance(payload, dict):
        raise SchemaViolationError("candidate payload must be an object")
    if operator == BIND_LEAF:
        if not isinstance(payload.get("leaf"), str):
            raise SchemaViolationError("BindLeaf payload needs a 'leaf' name")
        template: TemplateSpec = LeafSpec(payload["leaf"])
    elif operator == GUARD_PATTERN:
        if not isinstance(payload.get("condition"), str):
            raise SchemaViolationError("GuardPattern payload needs a 'condition' name")
        handler = OpenSpec(_subgoal_from_wire(payload.get("handler")))
        template = BranchSpec(SEQUENCE, (LeafSpec(payload["condition"]), handler))
    else:
        children = tuple(_spec_from_wire(c) for c in payload.get("children", []))
        if not children:
            raise SchemaViolationError(f"{operator} payload needs children")
        kind = {SEQ_DECOMPOSE: SEQUENCE, FB_DECOMPOSE: FALLBACK, PAR_DECOMPOSE: PARALLEL}[operator]
        threshold = payload.get("threshold") if operator == PAR_DECOMPOSE else None
        if operator == PAR_DECOMPOSE and not (
            isinstance(threshold, int) and 1 <= threshold <= len(children)
        ):
            raise SchemaViolationError(f"bad ParDecompose threshold {threshold!r}")
        template = BranchSpec(kind, children, threshold)
    cand = ExpansionCandidate(operator, target, template)
    cand.check_arity()
    return cand
