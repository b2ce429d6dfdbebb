"""Deterministic expansion proposals via goal regression.

This is the built-in stand-in for a remote generation policy: given an Open
node's subgoal, it works backward from unmet literals to the actions whose
effects establish them, recursing on unmet preconditions, and packages the
results as one-shot subtree templates.

Three idioms shape the emitted templates:

* check-then-act - when the library has a condition observing a goal
  literal, the achiever is wrapped as ``Fallback[check, act]`` so memoryless
  re-ticks skip work that is already done (required once actions span
  multiple ticks);
* guarded handler - a goal literal that scripted events can break gets
  ``Sequence[trigger-condition, handler]``, placed ahead of the progress
  subtree in a Fallback: the reactive patrol idiom;
* split - several unmet literals decompose into per-literal placeholders
  under Sequence or Parallel.

Establishment is a heuristic (an increment "aims at" an equality without
arithmetic proof); the simulator-backed validation levels have the final
say, so optimistic candidates are cheap.
"""

from __future__ import annotations

from .candidates import BranchSpec, ExpansionCandidate, LeafSpec, OpenSpec, leaf_names_in
from .core import FALLBACK, PARALLEL, SEQUENCE, SubGoal
from .errors import NoCandidatesError
from .library import (
    ACTION_TYPE,
    BIND_LEAF,
    CONDITION_TYPE,
    FB_DECOMPOSE,
    GUARD_PATTERN,
    PAR_DECOMPOSE,
    SEQ_DECOMPOSE,
    NodeDefinition,
    NodeLibrary,
    jaccard,
    tokenize,
)
from .predicates import (
    Literal,
    conjunction_literals,
    holds,
    same_literal_set,
)
from .world import ActionSchema, Scenario


def _establishes(schema: ActionSchema, literal: Literal, scenario: Scenario) -> bool:
    """Could executing this action make the literal true?  Optimistic."""
    for eff in schema.effects:
        if eff.var != literal.var:
            continue
        if eff.op == "set":
            if holds(literal, {literal.var: eff.value}):
                return True
        else:  # inc: direction must point toward the literal
            amount = eff.value
            if literal.op in ("eq", "ge", "gt") and amount > 0:
                return True
            if literal.op in ("eq", "le", "lt") and amount < 0:
                return True
            if literal.op == "ne" and amount != 0:
                return True
    return False


def _achievers(literal: Literal, scenario: Scenario) -> list[ActionSchema]:
    return [
        scenario.actions[name]
        for name in sorted(scenario.actions)
        if _establishes(scenario.actions[name], literal, scenario)
    ]


def _action_defs(schema: ActionSchema, library: NodeLibrary) -> list[NodeDefinition]:
    return [
        d for d in library if d.node_type == ACTION_TYPE and d.binding == schema.name
    ]


def condition_def_matching(literals, scenario: Scenario, library: NodeLibrary):
    """Library condition whose scenario predicate is exactly this conjunction."""
    wanted = tuple(literals)
    for definition in library:
        if definition.node_type != CONDITION_TYPE:
            continue
        pred = scenario.conditions.get(definition.binding)
        if pred is None:
            continue
        flat = conjunction_literals(pred)
        if flat is not None and same_literal_set(flat, wanted):
            return definition
    return None


def _unmet_preconditions(schema: ActionSchema, ctx: dict) -> tuple[Literal, ...]:
    flat = conjunction_literals(schema.precondition)
    if flat is None:
        # Not a pure conjunction: nothing to regress on; the simulator will
        # veto the candidate if the precondition never holds.
        return ()
    return tuple(g for g in flat if not holds(g, ctx))


def _breaking_event_writes(literal: Literal, scenario: Scenario) -> dict | None:
    """Writes co-scheduled with the earliest event that violates the literal."""
    for tick in sorted({e.tick for e in scenario.events}):
        group = [e for e in scenario.events if e.tick == tick]
        violated = any(
            e.var == literal.var and not holds(literal, {literal.var: e.value}) for e in group
        )
        if violated:
            return {e.var: e.value for e in group}
    return None


def _achiever_template(
    schema: ActionSchema,
    goal_literal: Literal,
    subgoal: SubGoal,
    ctx: dict,
    scenario: Scenario,
    library: NodeLibrary,
):
    """leaf(a), or Sequence[open(preconds), leaf(a)] when preconditions are unmet."""
    defs = _action_defs(schema, library)
    if not defs:
        return None
    leaf = LeafSpec(defs[0].name)
    pre = _unmet_preconditions(schema, ctx)
    if not pre:
        return leaf
    pre_open = OpenSpec(SubGoal(pre, subgoal.description, subgoal.assumptions))
    return BranchSpec(SEQUENCE, (pre_open, leaf))


def _guarded(core, check_def):
    if check_def is None:
        return core
    return BranchSpec(FALLBACK, (LeafSpec(check_def.name), core))


def propose(
    target_name: str,
    subgoal: SubGoal,
    scenario: Scenario,
    library: NodeLibrary,
    k: int,
    extra_terms: tuple[str, ...] = (),
) -> list[ExpansionCandidate]:
    """Candidates for one Open node, ranked, at most ``k``.

    Raises NoCandidatesError when no action or condition relates to any
    unmet literal.
    """
    ctx = dict(scenario.init)
    ctx.update(dict(subgoal.assumptions))
    unmet = tuple(g for g in subgoal.literals if not holds(g, ctx))
    toggled = tuple(
        g
        for g in subgoal.literals
        if holds(g, ctx) and _breaking_event_writes(g, scenario) is not None
    )

    out: list[ExpansionCandidate] = []

    def emit(template):
        if isinstance(template, LeafSpec):
            operator = BIND_LEAF
        elif template.kind == SEQUENCE:
            operator = SEQ_DECOMPOSE
        elif template.kind == FALLBACK:
            operator = FB_DECOMPOSE
        else:
            operator = PAR_DECOMPOSE
        out.append(ExpansionCandidate(operator, target_name, template))

    if not unmet and not toggled:
        # Vacuous subgoal: close it with the condition that observes it.
        check = condition_def_matching(subgoal.literals, scenario, library)
        if check is not None:
            emit(LeafSpec(check.name))
    elif len(unmet) == 1 and not toggled:
        _propose_single(unmet[0], subgoal, ctx, scenario, library, emit)
    elif len(unmet) >= 2 and not toggled:
        _propose_split(unmet, subgoal, emit)
    else:
        _propose_guards(toggled, unmet, subgoal, ctx, scenario, library, emit, target_name, out)
        if len(unmet) == 1:
            _propose_single(unmet[0], subgoal, ctx, scenario, library, emit)
        elif len(unmet) >= 2:
            _propose_split(unmet, subgoal, emit)

    if not out:
        raise NoCandidatesError(
            f"no action or condition relates to subgoal '{subgoal.text()}' of {target_name!r}"
        )

    query = tokenize(subgoal.description + " " + " ".join(extra_terms))

    def rank_key(cand: ExpansionCandidate):
        names = leaf_names_in(cand.template)
        score = max(
            (jaccard(query, tokenize(library.get(n).retrieval_text)) for n in names if library.get(n)),
            default=0.0,
        )
        return (-score, cand.describe())

    out.sort(key=rank_key)
    return out[: max(1, k)]


def _propose_single(goal_literal, subgoal, ctx, scenario, library, emit):
    achievers = _achievers(goal_literal, scenario)
    check = condition_def_matching((goal_literal,), scenario, library)
    cores = []
    for schema in achievers:
        core = _achiever_template(schema, goal_literal, subgoal, ctx, scenario, library)
        if core is not None:
            cores.append(core)
            emit(_guarded(core, check))
    if len(cores) > 1:
        prefix = (LeafSpec(check.name),) if check is not None else ()
        emit(BranchSpec(FALLBACK, prefix + tuple(cores)))


def _propose_split(unmet, subgoal, emit):
    opens = tuple(OpenSpec(SubGoal((g,), subgoal.description, subgoal.assumptions)) for g in unmet)
    emit(BranchSpec(SEQUENCE, opens))
    emit(BranchSpec(PARALLEL, opens, threshold=len(opens)))


def _propose_guards(toggled, unmet, subgoal, ctx, scenario, library, emit, target_name, out):
    for g in toggled:
        writes = _breaking_event_writes(g, scenario)
        handlers = _achievers(g, scenario)
        for schema in handlers:
            trigger_literals = conjunction_literals(schema.precondition)
            if trigger_literals is None or not trigger_literals:
                continue
            trigger = condition_def_matching(trigger_literals, scenario, library)
            if trigger is None:
                continue
            assume = dict(subgoal.assumptions)
            assume.update(writes)
            handler_open = OpenSpec(
                SubGoal((g,), subgoal.description, tuple(sorted(assume.items())))
            )
            guard = BranchSpec(SEQUENCE, (LeafSpec(trigger.name), handler_open))
            if unmet:
                rest = OpenSpec(SubGoal(unmet, subgoal.description, subgoal.assumptions))
                emit(BranchSpec(FALLBACK, (guard, rest)))
            else:
                # Maintenance-only goal: the guard pattern itself, plus the
                # fallback to its observing condition when one exists.
                out.append(ExpansionCandidate(GUARD_PATTERN, target_name, guard))
                check = condition_def_matching(subgoal.literals, scenario, library)
                if check is not None:
                    emit(BranchSpec(FALLBACK, (guard, LeafSpec(check.name))))
