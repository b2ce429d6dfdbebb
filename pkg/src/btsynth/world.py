"""Deterministic discrete-world simulator.

A scenario declares typed variables, named condition predicates, action
schemas (precondition, ordered effects, duration in ticks) and a scripted
event schedule.  Episodes tick a behavior tree against this world:

* events scheduled for a tick are applied *before* the tree is ticked;
* the goal (a conjunction of literals) is checked *after* each tick;
* the episode succeeds at the first tick where the goal holds and fails
  when ``max_ticks`` is exhausted.

Action semantics: an action whose precondition fails returns Failure without
touching the world.  An action with duration d > 1 returns Running for the
first d-1 ticks of its execution and applies its effects on the completing
tick; the single in-progress slot means that starting a different multi-tick
action abandons the previous one (the reactive convention - flow that moved
elsewhere loses its progress).  Increment effects clamp to the variable's
integer range.

World states are immutable values; ticking returns a new state, so any
number of episodes may run concurrently on copies.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Union

from . import core
from .core import ACTION, CONDITION, OPEN, BTNode, BehaviorTree, NodeStatus
from .errors import (
    DomainViolationError,
    SchemaViolationError,
    UnboundLeafError,
    UnknownNodeError,
    UnknownVariableError,
)
from .library import ACTION_TYPE, CONDITION_TYPE, NodeLibrary
from .predicates import (
    ORDER_OPS,
    Literal,
    Predicate,
    Value,
    evaluate,
    parse_literal,
    parse_predicate,
    variables_of,
)

# ---------------------------------------------------------------------------
# Domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoolDomain:
    def contains(self, value) -> bool:
        return isinstance(value, bool)


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def contains(self, value) -> bool:
        return isinstance(value, int) and not isinstance(value, bool) and self.lo <= value <= self.hi

    def clamp(self, value: int) -> int:
        return max(self.lo, min(self.hi, value))


@dataclass(frozen=True)
class EnumDomain:
    values: tuple[str, ...]

    def contains(self, value) -> bool:
        return value in self.values


Domain = Union[BoolDomain, IntRange, EnumDomain]


@dataclass(frozen=True)
class Effect:
    var: str
    op: str  # "set" | "inc"
    value: Value


@dataclass(frozen=True)
class ActionSchema:
    name: str
    precondition: Predicate
    effects: tuple[Effect, ...]
    duration: int = 1


@dataclass(frozen=True)
class Event:
    tick: int
    var: str
    value: Value


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    variables: dict[str, Domain]
    init: dict[str, Value]
    goal: tuple[Literal, ...]
    conditions: dict[str, Predicate]
    actions: dict[str, ActionSchema]
    events: tuple[Event, ...]
    max_ticks: int

    def initial_world(self, overrides: dict[str, Value] | None = None) -> "WorldState":
        assignment = dict(self.init)
        if overrides:
            for var, value in overrides.items():
                if var not in self.variables:
                    raise UnknownVariableError(f"override names undeclared variable {var!r}")
                if not self.variables[var].contains(value):
                    raise DomainViolationError(f"override {var}={value!r} out of domain")
                assignment[var] = value
        return WorldState(self, assignment, 0, None)

    def goal_fraction(self, assignment: dict[str, Value]) -> float:
        if not self.goal:
            return 1.0
        satisfied = sum(1 for g in self.goal if evaluate(g, assignment))
        return satisfied / len(self.goal)

    def goal_holds(self, assignment: dict[str, Value]) -> bool:
        return all(evaluate(g, assignment) for g in self.goal)

    def with_events(self, events) -> "Scenario":
        return replace(self, events=tuple(events))


@dataclass(frozen=True)
class WorldState:
    """Total variable assignment plus tick bookkeeping; treat as immutable."""

    scenario: Scenario
    assignment: dict[str, Value]
    tick_index: int = 0
    in_progress: tuple[str, int] | None = None  # (action name, remaining ticks >= 1)

    def with_assignment(self, updates: dict[str, Value], in_progress=...) -> "WorldState":
        new_assignment = dict(self.assignment)
        new_assignment.update(updates)
        new_progress = self.in_progress if in_progress is ... else in_progress
        return WorldState(self.scenario, new_assignment, self.tick_index, new_progress)

    def digest(self) -> str:
        blob = json.dumps(
            {"assignment": self.assignment, "in_progress": list(self.in_progress or ())},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Scenario loading
# ---------------------------------------------------------------------------

_SCENARIO_KEYS = {"variables", "init", "goal", "conditions", "actions", "events", "max_ticks"}
_OPTIONAL_KEYS = {"name", "description"}


def load_scenario(doc: str | dict, name: str = "") -> Scenario:
    """Load and fully validate a scenario document (JSON text or parsed)."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except ValueError as exc:
            raise SchemaViolationError(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SchemaViolationError("scenario document must be a JSON object")
    missing = _SCENARIO_KEYS - set(doc)
    if missing:
        raise SchemaViolationError(f"scenario lacks keys: {sorted(missing)}")
    extra = set(doc) - _SCENARIO_KEYS - _OPTIONAL_KEYS
    if extra:
        raise SchemaViolationError(f"scenario has unknown keys: {sorted(extra)}")

    variables = _load_variables(doc["variables"])
    init = _load_init(doc["init"], variables)
    goal = _load_goal(doc["goal"], variables)
    conditions = _load_conditions(doc["conditions"], variables)
    max_ticks = doc["max_ticks"]
    if not isinstance(max_ticks, int) or max_ticks < 1:
        raise SchemaViolationError(f"max_ticks must be a positive integer, got {max_ticks!r}")
    actions = _load_actions(doc["actions"], variables)
    events = _load_events(doc["events"], variables, max_ticks)
    return Scenario(
        name=doc.get("name", name),
        description=doc.get("description", ""),
        variables=variables,
        init=init,
        goal=goal,
        conditions=conditions,
        actions=actions,
        events=events,
        max_ticks=max_ticks,
    )


def load_scenario_file(path: str | Path) -> Scenario:
    path = Path(path)
    return load_scenario(path.read_text(encoding="utf-8"), name=path.stem)


def _load_variables(obj) -> dict[str, Domain]:
    if not isinstance(obj, dict) or not obj:
        raise SchemaViolationError("'variables' must be a nonempty object")
    out: dict[str, Domain] = {}
    for var, spec in obj.items():
        if not isinstance(spec, dict) or "type" not in spec:
            raise SchemaViolationError(f"variable {var!r} needs a 'type'")
        kind = spec["type"]
        if kind == "bool":
            out[var] = BoolDomain()
        elif kind == "int":
            if not (isinstance(spec.get("min"), int) and isinstance(spec.get("max"), int)):
                raise SchemaViolationError(f"int variable {var!r} needs integer min/max")
            if spec["min"] > spec["max"]:
                raise SchemaViolationError(f"int variable {var!r} has min > max")
            out[var] = IntRange(spec["min"], spec["max"])
        elif kind == "enum":
            values = spec.get("values")
            if not isinstance(values, list) or not values or len(set(values)) != len(values):
                raise SchemaViolationError(f"enum variable {var!r} needs distinct values")
            out[var] = EnumDomain(tuple(values))
        else:
            raise SchemaViolationError(f"variable {var!r} has unknown type {kind!r}")
    return out


def _load_init(obj, variables) -> dict[str, Value]:
    if not isinstance(obj, dict):
        raise SchemaViolationError("'init' must be an object")
    missing = set(variables) - set(obj)
    if missing:
        raise SchemaViolationError(f"init lacks variables: {sorted(missing)}")
    for var, value in obj.items():
        if var not in variables:
            raise UnknownVariableError(f"init assigns undeclared variable {var!r}")
        if not variables[var].contains(value):
            raise DomainViolationError(f"init {var}={value!r} out of domain")
    return dict(obj)


def _check_predicate(pred: Predicate, variables, where: str):
    for var in variables_of(pred):
        if var not in variables:
            raise UnknownVariableError(f"{where} references undeclared variable {var!r}")
    for lit in _literals_in(pred):
        if lit.op in ORDER_OPS and not isinstance(variables[lit.var], IntRange):
            raise SchemaViolationError(f"{where}: ordered comparison on non-int {lit.var!r}")
        if lit.op in ("eq", "ne") and not variables[lit.var].contains(lit.value):
            raise DomainViolationError(f"{where}: {lit.var}={lit.value!r} out of domain")


def _literals_in(pred: Predicate):
    if isinstance(pred, Literal):
        yield pred
    elif isinstance(pred, (list, tuple)):
        for p in pred:
            yield from _literals_in(p)
    elif hasattr(pred, "parts"):
        yield from _literals_in(pred.parts)
    elif hasattr(pred, "inner"):
        yield from _literals_in(pred.inner)


def _load_goal(obj, variables) -> tuple[Literal, ...]:
    if not isinstance(obj, list):
        raise SchemaViolationError("'goal' must be a list of literals")
    goal = tuple(parse_literal(entry) for entry in obj)
    for lit in goal:
        _check_predicate(lit, variables, "goal")
    return goal


def _load_conditions(obj, variables) -> dict[str, Predicate]:
    if not isinstance(obj, dict):
        raise SchemaViolationError("'conditions' must be an object")
    out = {}
    for cname, spec in obj.items():
        pred = parse_predicate(spec)
        _check_predicate(pred, variables, f"condition {cname!r}")
        out[cname] = pred
    return out


def _load_actions(obj, variables) -> dict[str, ActionSchema]:
    if not isinstance(obj, dict):
        raise SchemaViolationError("'actions' must be an object")
    out = {}
    for aname, spec in obj.items():
        if not isinstance(spec, dict) or not {"precondition", "effects"} <= set(spec):
            raise SchemaViolationError(f"action {aname!r} needs precondition and effects")
        pred = parse_predicate(spec["precondition"])
        _check_predicate(pred, variables, f"action {aname!r} precondition")
        effects = []
        for j, eff in enumerate(spec["effects"]):
            effects.append(_load_effect(eff, variables, f"action {aname!r} effects[{j}]"))
        duration = spec.get("duration", 1)
        if not isinstance(duration, int) or duration < 1:
            raise SchemaViolationError(f"action {aname!r} duration must be >= 1")
        out[aname] = ActionSchema(aname, pred, tuple(effects), duration)
    return out


def _load_effect(obj, variables, where: str) -> Effect:
    if not isinstance(obj, dict) or set(obj) != {"var", "op", "value"}:
        raise SchemaViolationError(f"{where} must have keys var/op/value")
    var, op, value = obj["var"], obj["op"], obj["value"]
    if var not in variables:
        raise UnknownVariableError(f"{where} writes undeclared variable {var!r}")
    if op == "set":
        if not variables[var].contains(value):
            raise DomainViolationError(f"{where}: {var}={value!r} out of domain")
    elif op == "inc":
        if not isinstance(variables[var], IntRange):
            raise SchemaViolationError(f"{where}: increment on non-int variable {var!r}")
        if not isinstance(value, int) or isinstance(value, bool):
            raise SchemaViolationError(f"{where}: increment amount must be an integer")
    else:
        raise SchemaViolationError(f"{where}: unknown effect op {op!r}")
    return Effect(var, op, value)


def _load_events(obj, variables, max_ticks: int) -> tuple[Event, ...]:
    if not isinstance(obj, list):
        raise SchemaViolationError("'events' must be a list")
    events = []
    for j, entry in enumerate(obj):
        if not isinstance(entry, dict) or set(entry) != {"tick", "var", "value"}:
            raise SchemaViolationError(f"events[{j}] must have keys tick/var/value")
        tick, var, value = entry["tick"], entry["var"], entry["value"]
        if not isinstance(tick, int) or not (1 <= tick <= max_ticks):
            raise SchemaViolationError(f"events[{j}] tick {tick!r} not in 1..{max_ticks}")
        if var not in variables:
            raise UnknownVariableError(f"events[{j}] writes undeclared variable {var!r}")
        if not variables[var].contains(value):
            raise DomainViolationError(f"events[{j}] {var}={value!r} out of domain")
        events.append(Event(tick, var, value))
    return tuple(events)


# ---------------------------------------------------------------------------
# Leaf execution and ticking
# ---------------------------------------------------------------------------


def apply_effects(scenario: Scenario, assignment: dict[str, Value], effects) -> dict[str, Value]:
    """Apply an ordered effect list, clamping increments to their range."""
    out = dict(assignment)
    for eff in effects:
        if eff.op == "set":
            out[eff.var] = eff.value
        else:
            domain = scenario.variables[eff.var]
            out[eff.var] = domain.clamp(out[eff.var] + eff.value)
    return out


def execute_condition(scenario: Scenario, pred: Predicate, world: WorldState):
    status = NodeStatus.SUCCESS if evaluate(pred, world.assignment) else NodeStatus.FAILURE
    return status, world  # conditions never touch the world


def execute_action(scenario: Scenario, schema: ActionSchema, world: WorldState):
    if world.in_progress is not None and world.in_progress[0] == schema.name:
        name, remaining = world.in_progress
        if remaining == 1:
            updated = apply_effects(scenario, world.assignment, schema.effects)
            return NodeStatus.SUCCESS, WorldState(scenario, updated, world.tick_index, None)
        return NodeStatus.RUNNING, replace(world, in_progress=(name, remaining - 1))
    if not evaluate(schema.precondition, world.assignment):
        return NodeStatus.FAILURE, world
    if schema.duration == 1:
        updated = apply_effects(scenario, world.assignment, schema.effects)
        return NodeStatus.SUCCESS, WorldState(scenario, updated, world.tick_index, world.in_progress)
    return NodeStatus.RUNNING, replace(world, in_progress=(schema.name, schema.duration - 1))


def resolve_leaf(leaf: BTNode, library: NodeLibrary, scenario: Scenario):
    """Map a leaf through the library to its scenario primitive."""
    definition = library.get(leaf.binding or "")
    if definition is None:
        raise UnboundLeafError(
            f"leaf {leaf.instance_name!r}: binding {leaf.binding!r} not in library"
        )
    if leaf.kind == CONDITION:
        if definition.node_type != CONDITION_TYPE:
            raise UnboundLeafError(
                f"leaf {leaf.instance_name!r}: {definition.name!r} is not a condition definition"
            )
        pred = scenario.conditions.get(definition.binding)
        if pred is None:
            raise UnboundLeafError(
                f"definition {definition.name!r}: no scenario condition {definition.binding!r}"
            )
        return pred
    if definition.node_type != ACTION_TYPE:
        raise UnboundLeafError(
            f"leaf {leaf.instance_name!r}: {definition.name!r} is not an action definition"
        )
    schema = scenario.actions.get(definition.binding)
    if schema is None:
        raise UnboundLeafError(
            f"definition {definition.name!r}: no scenario action {definition.binding!r}"
        )
    return schema


def make_leaf_executor(library: NodeLibrary, scenario: Scenario, open_nodes_fail: bool = False):
    """Build the production leaf executor; optionally stub Open nodes as Failure.

    Failing stubs are what the synthesis engine uses for partial-tree
    rollouts: partial credit can then only come from already-realized
    behavior.
    """

    def leaf_exec(leaf: BTNode, world: WorldState):
        if leaf.kind == OPEN:
            if open_nodes_fail:
                return NodeStatus.FAILURE, world
            raise UnboundLeafError(f"cannot execute unexpanded node {leaf.instance_name!r}")
        target = resolve_leaf(leaf, library, scenario)
        if leaf.kind == CONDITION:
            return execute_condition(scenario, target, world)
        return execute_action(scenario, target, world)

    return leaf_exec


def tick(tree: BehaviorTree, world: WorldState, library: NodeLibrary):
    """One synchronous tick of a finalized tree against the world."""
    return core.tick_with(tree.root, world, make_leaf_executor(library, world.scenario))


# ---------------------------------------------------------------------------
# Episodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceEntry:
    tick: int
    leaf: str  # instance name
    binding: str  # definition name ("" for stubbed Open nodes)
    status: NodeStatus
    digest: str


@dataclass
class EpisodeResult:
    success: bool
    ticks_used: int
    trace: list[TraceEntry]
    final_goal_fraction: float
    final_world: WorldState

    def signature(self) -> list[tuple[int, str, str]]:
        """Order of leaf executions, robust to instance renaming."""
        return [(e.tick, e.binding, e.status.value) for e in self.trace]

    def to_json_dict(self, include_trace: bool = True) -> dict:
        out = {
            "success": self.success,
            "ticks_used": self.ticks_used,
            "final_goal_fraction": self.final_goal_fraction,
        }
        if include_trace:
            out["trace"] = [
                {
                    "tick": e.tick,
                    "leaf": e.leaf,
                    "binding": e.binding,
                    "status": e.status.value,
                    "digest": e.digest,
                }
                for e in self.trace
            ]
        return out


def run_episode(
    tree: BehaviorTree,
    scenario: Scenario,
    library: NodeLibrary,
    seed: int = 0,
    open_nodes_fail: bool = False,
    collect_states: list | None = None,
) -> EpisodeResult:
    """Run one episode; deterministic for fixed inputs.

    ``seed`` is reserved for scenario-declared stochastic events; the bundled
    scenarios are deterministic, so it does not influence the result here
    (schedule variants are generated by the caller).  ``collect_states``
    optionally receives the full world after every leaf execution, mirroring
    the trace.
    """
    del seed  # reserved
    base_exec = make_leaf_executor(library, scenario, open_nodes_fail=open_nodes_fail)
    trace: list[TraceEntry] = []

    def recording_exec(leaf: BTNode, world: WorldState):
        status, new_world = base_exec(leaf, world)
        trace.append(
            TraceEntry(new_world.tick_index, leaf.instance_name, leaf.binding or "", status, new_world.digest())
        )
        if collect_states is not None:
            collect_states.append(new_world)
        return status, new_world

    events_by_tick: dict[int, list[Event]] = {}
    for ev in scenario.events:
        events_by_tick.setdefault(ev.tick, []).append(ev)

    world = scenario.initial_world()
    for t in range(1, scenario.max_ticks + 1):
        world = replace(world, tick_index=t)
        scheduled = events_by_tick.get(t)
        if scheduled:
            world = world.with_assignment({ev.var: ev.value for ev in scheduled})
        _, world = core.tick_with(tree.root, world, recording_exec)
        if scenario.goal_holds(world.assignment):
            return EpisodeResult(True, t, trace, 1.0, world)
    return EpisodeResult(
        False, scenario.max_ticks, trace, scenario.goal_fraction(world.assignment), world
    )


# ---------------------------------------------------------------------------
# Node-level testing (each leaf as an isolated unit)
# ---------------------------------------------------------------------------


@dataclass
class NodeCaseResult:
    node: str
    passed: bool
    actual_status: NodeStatus
    actual_assignment: dict[str, Value]
    message: str = ""


@dataclass
class NodeTestReport:
    results: list[NodeCaseResult]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)


def unit_test_nodes(library: NodeLibrary, scenario: Scenario, cases) -> NodeTestReport:
    """Execute leaves in isolation against per-case worlds.

    Each case is ``(node name, world overrides, expected status, expected
    assignment)``; the case world is the scenario init overlaid with the
    overrides.  An expected assignment of None asserts the world is
    unchanged; otherwise the named variables must match and all others
    must be unchanged.
    """
    results = []
    for name, overrides, expected_status, expected_assignment in cases:
        definition = library.get(name)
        if definition is None:
            raise UnknownNodeError(f"no definition named {name!r} in library")
        world = scenario.initial_world(dict(overrides or {}))
        kind = CONDITION if definition.node_type == CONDITION_TYPE else ACTION
        leaf = BTNode(kind, name, binding=name)
        status, new_world = make_leaf_executor(library, scenario)(leaf, world)
        problems = []
        if status is not expected_status:
            problems.append(f"status {status.value} != {expected_status.value}")
        expected = dict(world.assignment)
        expected.update(expected_assignment or {})
        if new_world.assignment != expected:
            problems.append(f"assignment {new_world.assignment!r} != {expected!r}")
        results.append(
            NodeCaseResult(name, not problems, status, dict(new_world.assignment), "; ".join(problems))
        )
    return NodeTestReport(results)
