"""Literal and predicate language shared by scenarios, goals and subgoals.

A literal compares one variable against a constant.  Predicates combine
literals with conjunction, disjunction and negation.  Goals and subgoals are
restricted to conjunctions of literals; scenario conditions and action
preconditions may use the full language.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import SchemaViolationError, UnknownVariableError

Value = Union[bool, int, str]

_OPS = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "lt": lambda a, b: a < b,
    "le": lambda a, b: a <= b,
    "gt": lambda a, b: a > b,
    "ge": lambda a, b: a >= b,
}

_OP_SYMBOL = {"eq": "=", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">="}
_SYMBOL_OP = {v: k for k, v in _OP_SYMBOL.items()}

ORDER_OPS = frozenset({"lt", "le", "gt", "ge"})


@dataclass(frozen=True)
class Literal:
    var: str
    op: str
    value: Value

    def __post_init__(self):
        if self.op not in _OPS:
            raise SchemaViolationError(f"unknown comparison op {self.op!r}")


@dataclass(frozen=True)
class Conj:
    parts: tuple["Predicate", ...]


@dataclass(frozen=True)
class Disj:
    parts: tuple["Predicate", ...]


@dataclass(frozen=True)
class Neg:
    inner: "Predicate"


# ``True`` is accepted as the always-true predicate.
Predicate = Union[bool, Literal, Conj, Disj, Neg]


def holds(literal: Literal, assignment: dict) -> bool:
    if literal.var not in assignment:
        raise UnknownVariableError(f"predicate references undeclared variable {literal.var!r}")
    return _OPS[literal.op](assignment[literal.var], literal.value)


def evaluate(pred: Predicate, assignment: dict) -> bool:
    if pred is True:
        return True
    if pred is False:
        return False
    if isinstance(pred, Literal):
        return holds(pred, assignment)
    if isinstance(pred, Conj):
        return all(evaluate(p, assignment) for p in pred.parts)
    if isinstance(pred, Disj):
        return any(evaluate(p, assignment) for p in pred.parts)
    if isinstance(pred, Neg):
        return not evaluate(pred.inner, assignment)
    raise SchemaViolationError(f"not a predicate: {pred!r}")


def variables_of(pred: Predicate) -> set[str]:
    if isinstance(pred, bool):
        return set()
    if isinstance(pred, Literal):
        return {pred.var}
    if isinstance(pred, Conj) or isinstance(pred, Disj):
        out: set[str] = set()
        for p in pred.parts:
            out |= variables_of(p)
        return out
    if isinstance(pred, Neg):
        return variables_of(pred.inner)
    raise SchemaViolationError(f"not a predicate: {pred!r}")


# ---------------------------------------------------------------------------
# JSON encoding (scenario files)
# ---------------------------------------------------------------------------


def parse_literal(obj) -> Literal:
    if not isinstance(obj, dict) or set(obj) != {"var", "op", "value"}:
        raise SchemaViolationError(f"literal must have keys var/op/value, got {obj!r}")
    if not isinstance(obj["var"], str):
        raise SchemaViolationError("literal 'var' must be a string")
    return Literal(obj["var"], obj["op"], obj["value"])


def parse_predicate(obj) -> Predicate:
    if obj is True or obj is False:
        return obj
    if isinstance(obj, dict):
        if "all" in obj:
            return Conj(tuple(parse_predicate(p) for p in _part_list(obj, "all")))
        if "any" in obj:
            return Disj(tuple(parse_predicate(p) for p in _part_list(obj, "any")))
        if "not" in obj:
            if set(obj) != {"not"}:
                raise SchemaViolationError(f"bad negation: {obj!r}")
            return Neg(parse_predicate(obj["not"]))
        return parse_literal(obj)
    raise SchemaViolationError(f"not a predicate: {obj!r}")


def _part_list(obj: dict, key: str) -> list:
    if set(obj) != {key} or not isinstance(obj[key], list):
        raise SchemaViolationError(f"bad {key!r} predicate: {obj!r}")
    return obj[key]


def predicate_to_json(pred: Predicate):
    if isinstance(pred, bool):
        return pred
    if isinstance(pred, Literal):
        return {"var": pred.var, "op": pred.op, "value": pred.value}
    if isinstance(pred, Conj):
        return {"all": [predicate_to_json(p) for p in pred.parts]}
    if isinstance(pred, Disj):
        return {"any": [predicate_to_json(p) for p in pred.parts]}
    if isinstance(pred, Neg):
        return {"not": predicate_to_json(pred.inner)}
    raise SchemaViolationError(f"not a predicate: {pred!r}")


# ---------------------------------------------------------------------------
# Compact text form (XML subgoal attributes, log lines)
# ---------------------------------------------------------------------------

_LITERAL_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_-]*)\s*(!=|<=|>=|=|<|>)\s*(.+?)\s*$")


def literal_text(literal: Literal) -> str:
    return f"{literal.var}{_OP_SYMBOL[literal.op]}{value_text(literal.value)}"


def value_text(value: Value) -> str:
    if value is True:
        return "true"
    if value is False:
        return "false"
    return str(value)


def parse_value_text(text: str) -> Value:
    if text == "true":
        return True
    if text == "false":
        return False
    if re.fullmatch(r"-?\d+", text):
        return int(text)
    return text


def parse_literal_text(text: str) -> Literal:
    m = _LITERAL_RE.match(text)
    if m is None:
        raise SchemaViolationError(f"cannot parse literal {text!r}")
    var, sym, raw = m.groups()
    return Literal(var, _SYMBOL_OP[sym], parse_value_text(raw))


def literals_text(literals: tuple[Literal, ...]) -> str:
    return " & ".join(literal_text(g) for g in literals)


def parse_literals_text(text: str) -> tuple[Literal, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(parse_literal_text(part) for part in text.split("&"))


# ---------------------------------------------------------------------------
# Structural comparison helpers (used by goal regression)
# ---------------------------------------------------------------------------


def normalize(pred: Predicate) -> Predicate:
    """Unwrap singleton conjunctions/disjunctions so shapes compare cleanly."""
    if isinstance(pred, Conj):
        parts = tuple(normalize(p) for p in pred.parts)
        if len(parts) == 1:
            return parts[0]
        return Conj(parts)
    if isinstance(pred, Disj):
        parts = tuple(normalize(p) for p in pred.parts)
        if len(parts) == 1:
            return parts[0]
        return Disj(parts)
    if isinstance(pred, Neg):
        return Neg(normalize(pred.inner))
    return pred


def conjunction_literals(pred: Predicate) -> tuple[Literal, ...] | None:
    """Flatten a predicate into literals if it is a pure conjunction, else None."""
    pred = normalize(pred)
    if pred is True:
        return ()
    if isinstance(pred, Literal):
        return (pred,)
    if isinstance(pred, Conj):
        out: list[Literal] = []
        for p in pred.parts:
            sub = conjunction_literals(p)
            if sub is None:
                return None
            out.extend(sub)
        return tuple(out)
    return None


def same_literal_set(a: tuple[Literal, ...], b: tuple[Literal, ...]) -> bool:
    return set(a) == set(b)
