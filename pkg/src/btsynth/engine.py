"""Synthesis engine: search over partial trees with validation feedback.

A synthesis state is a tree that may contain Open placeholders; its frontier
lists them in preorder.  The loop repeats four stages until a fully expanded
tree survives simulation:

* selection - descend the search tree by UCT score (unvisited children
  first, ties broken by candidate description) and pick the leftmost Open
  node of the chosen state;
* expansion - ask the policy (goal regression or a remote endpoint) for
  subtree templates and apply the next untried one;
* validation - three levels: structural checks and size bounds; a stub
  rollout with remaining placeholders forced to Failure (partial credit can
  only come from realized behavior); and, for completed trees, a batch of
  episodes over event-schedule variants that must all reach the goal;
* refinement - back-propagate the reward, prune rejected states for good,
  and feed unmet goal literals into the parent's retrieval query.

The greedy ``oracle`` policy mode uses the same expansion and validation
machinery but walks depth-first, taking the first accepted candidate and
backtracking out of dead ends; it doubles as a fast deterministic baseline
and a differential-testing oracle for the UCT mode.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import regression
from .candidates import ExpansionCandidate, LeafSpec, OpenSpec, TemplateSpec
from .core import (
    ACTION,
    CONDITION,
    OPEN,
    BTNode,
    BehaviorTree,
    SubGoal,
    condition as condition_leaf,
    iter_nodes,
    open_node,
    open_nodes,
    replace_node,
    validate_structure,
)
from .errors import (
    BudgetExhaustedError,
    ExhaustedError,
    InvalidArgsError,
    NoCandidatesError,
    UnsolvableError,
)
from .library import CONDITION_TYPE, NodeLibrary
from .predicates import Literal, evaluate, literal_text
from .world import EpisodeResult, Scenario, run_episode

POLICIES = ("oracle", "mcts-oracle", "remote")

Observer = Callable[[str, dict], None]


@dataclass(frozen=True)
class Task:
    """What to synthesize: goal literals plus free-text description."""

    goal: tuple[Literal, ...]
    description: str = ""

    @classmethod
    def for_scenario(cls, scenario: Scenario) -> "Task":
        return cls(scenario.goal, scenario.description)


@dataclass
class SearchConfig:
    budget: int = 10000
    c_uct: float = math.sqrt(2)
    max_depth: int = 8
    max_nodes: int = 64
    rollout_episodes: int = 5
    levels: tuple[int, ...] = (1, 2, 3)
    seed: int = 0
    policy: str = "mcts-oracle"
    k_candidates: int = 8
    role: str = "planner"

    def __post_init__(self):
        if self.budget < 1:
            raise InvalidArgsError(f"budget must be >= 1, got {self.budget}")
        for name in ("max_depth", "max_nodes", "rollout_episodes", "k_candidates"):
            if getattr(self, name) < 1:
                raise InvalidArgsError(f"{name} must be positive, got {getattr(self, name)}")
        if self.c_uct < 0:
            raise InvalidArgsError(f"c_uct must be >= 0, got {self.c_uct}")
        if self.policy not in POLICIES:
            raise InvalidArgsError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not set(self.levels) <= {1, 2, 3}:
            raise InvalidArgsError(f"levels must be a subset of (1, 2, 3), got {self.levels!r}")

    def to_json_dict(self) -> dict:
        return {
            "budget": self.budget,
            "c_uct": self.c_uct,
            "max_depth": self.max_depth,
            "max_nodes": self.max_nodes,
            "rollout_episodes": self.rollout_episodes,
            "levels": list(self.levels),
            "seed": self.seed,
            "policy": self.policy,
            "k_candidates": self.k_candidates,
            "role": self.role,
        }


@dataclass
class Feedback:
    verdict: str  # "accept" | "reject"
    level: int  # validation level that decided
    reward: float  # in [0, 1]
    failing_trace: Optional[EpisodeResult] = None
    unmet_goals: tuple[Literal, ...] = ()


class SynthState:
    """One node of the search tree: an immutable partial BT plus UCT stats."""

    __slots__ = (
        "tree",
        "frontier",
        "parent",
        "candidate",
        "next_id",
        "visits",
        "reward_sum",
        "pruned",
        "dead",
        "children",
        "untried",
        "feedback_terms",
    )

    def __init__(self, tree: BehaviorTree, parent=None, candidate=None, next_id: int = 1):
        self.tree = tree
        self.frontier = tuple(n.instance_name for n in open_nodes(tree.root))
        self.parent: SynthState | None = parent
        self.candidate: ExpansionCandidate | None = candidate
        self.next_id = next_id
        self.visits = 0
        self.reward_sum = 0.0
        self.pruned = False
        self.dead = False
        self.children: list[SynthState] = []
        self.untried: list[ExpansionCandidate] | None = None
        self.feedback_terms: list[str] = []

    @property
    def terminal(self) -> bool:
        return not self.frontier

    def ancestors(self):
        node = self
        while node is not None:
            yield node
            node = node.parent


def initial_state(task: Task) -> SynthState:
    """A single Open root carrying the task; stats zeroed."""
    root = open_node("open_0", SubGoal(task.goal, task.description))
    return SynthState(BehaviorTree(root), next_id=1)


@dataclass
class ExpandContext:
    scenario: Scenario
    library: NodeLibrary
    config: SearchConfig


class GoalRegressionPolicy:
    """In-process expansion via goal regression over the scenario model."""

    def propose(self, state: SynthState, target_name: str, ctx: ExpandContext):
        target = _find_open(state.tree.root, target_name)
        return regression.propose(
            target_name,
            target.subgoal,
            ctx.scenario,
            ctx.library,
            ctx.config.k_candidates,
            tuple(state.feedback_terms),
        )


def _find_open(root: BTNode, name: str) -> BTNode:
    for node in iter_nodes(root):
        if node.instance_name == name:
            if node.kind != OPEN:
                raise InvalidArgsError(f"node {name!r} is not an Open placeholder")
            return node
    raise InvalidArgsError(f"no node named {name!r} in tree")


# ---------------------------------------------------------------------------
# Applying candidates
# ---------------------------------------------------------------------------


def build_subtree(spec: TemplateSpec, library: NodeLibrary, used_names: set[str], counter: list[int]) -> BTNode:
    """Materialize a template with fresh, deterministic instance names."""

    def fresh(base: str) -> str:
        if base not in used_names:
            used_names.add(base)
            return base
        name = f"{base}_{counter[0]}"
        counter[0] += 1
        used_names.add(name)
        return name

    def numbered(prefix: str) -> str:
        name = f"{prefix}_{counter[0]}"
        counter[0] += 1
        used_names.add(name)
        return name

    def build(node_spec: TemplateSpec) -> BTNode:
        if isinstance(node_spec, LeafSpec):
            definition = library.get(node_spec.definition)
            kind = CONDITION if definition is not None and definition.node_type == CONDITION_TYPE else ACTION
            return BTNode(kind, fresh(node_spec.definition), binding=node_spec.definition)
        if isinstance(node_spec, OpenSpec):
            return BTNode(OPEN, numbered("open"), subgoal=node_spec.subgoal)
        children = tuple(build(c) for c in node_spec.children)
        return BTNode(
            node_spec.kind,
            numbered(node_spec.kind.lower()),
            children,
            threshold=node_spec.threshold,
        )

    return build(spec)


def apply_candidate(state: SynthState, cand: ExpansionCandidate, library: NodeLibrary) -> SynthState:
    """Splice the candidate's subtree over its target Open node."""
    if cand.target not in state.frontier:
        raise InvalidArgsError(f"candidate targets {cand.target!r}, not on frontier {state.frontier}")
    used = {n.instance_name for n in iter_nodes(state.tree.root)}
    used.discard(cand.target)
    counter = [state.next_id]
    subtree = build_subtree(cand.template, library, used, counter)
    new_root = replace_node(state.tree.root, cand.target, subtree)
    child = SynthState(BehaviorTree(new_root), parent=state, candidate=cand, next_id=counter[0])
    state.children.append(child)
    return child


# ---------------------------------------------------------------------------
# Selection (UCT)
# ---------------------------------------------------------------------------


def uct_score(state: SynthState, parent_visits: int, c_uct: float) -> float:
    if state.visits == 0:
        return math.inf
    exploit = state.reward_sum / state.visits
    explore = c_uct * math.sqrt(math.log(max(parent_visits, 1)) / state.visits)
    return exploit + explore


def select(root: SynthState, c_uct: float) -> tuple[SynthState, str]:
    """Descend to a state that still has untried candidates; leftmost Open."""
    if root.dead:
        raise ExhaustedError("all states are terminal or pruned")
    state = root
    while True:
        if not state.terminal and (state.untried is None or state.untried):
            return state, state.frontier[0]
        live = [c for c in state.children if not c.dead]
        if not live:
            _mark_dead(state)
            if state.parent is None:
                raise ExhaustedError("all states are terminal or pruned")
            state = root
            if root.dead:
                raise ExhaustedError("all states are terminal or pruned")
            continue
        unvisited = [c for c in live if c.visits == 0]
        if unvisited:
            state = min(unvisited, key=lambda s: s.candidate.describe())
            continue
        state = min(
            live,
            key=lambda s: (-uct_score(s, state.visits, c_uct), s.candidate.describe()),
        )


def _state_is_dead(state: SynthState) -> bool:
    if state.pruned:
        return True
    if state.terminal:
        return True
    if state.untried is None or state.untried:
        return False
    return all(c.dead for c in state.children) if state.children else True


def _mark_dead(state: SynthState):
    node = state
    while node is not None:
        was = node.dead
        node.dead = _state_is_dead(node)
        if node.dead == was:
            break
        node = node.parent


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def schedule_variants(scenario: Scenario, episodes: int, seed: int) -> list[Scenario]:
    """Event schedules for final validation: authored, quiet, then re-drawn.

    Events that share an authored tick are one incident and stay co-scheduled
    when their tick is re-drawn.  Scenarios without events validate on the
    authored schedule alone (the variants would all be identical).
    """
    if not scenario.events:
        return [scenario]
    variants = [scenario]
    if episodes >= 2:
        variants.append(scenario.with_events(()))
    rng = random.Random(f"{seed}:schedule")
    groups: dict[int, list] = {}
    for ev in scenario.events:
        groups.setdefault(ev.tick, []).append(ev)
    window = max(1, scenario.max_ticks // 2)
    while len(variants) < episodes:
        events = []
        for tick in sorted(groups):
            new_tick = rng.randint(1, window)
            for ev in groups[tick]:
                events.append(type(ev)(new_tick, ev.var, ev.value))
        variants.append(scenario.with_events(events))
    return variants[:episodes]


def validate_state(
    state: SynthState, scenario: Scenario, library: NodeLibrary, config: SearchConfig
) -> Feedback:
    """Multi-level check; every outcome is a Feedback, never an exception."""
    if 1 in config.levels:
        report = validate_structure(state.tree, library)
        findings = [f for f in report.findings if f.code != "open-node"]
        if state.tree.depth > config.max_depth:
            findings.append(_bound_finding("depth", state.tree.depth, config.max_depth))
        if state.tree.node_count > config.max_nodes:
            findings.append(_bound_finding("nodes", state.tree.node_count, config.max_nodes))
        if findings:
            return Feedback("reject", 1, 0.0)

    if state.terminal:
        if 3 not in config.levels:
            return Feedback("accept", 1, 1.0)
        results = [
            run_episode(state.tree, variant, library, seed=config.seed)
            for variant in schedule_variants(scenario, config.rollout_episodes, config.seed)
        ]
        rewards = [1.0 if r.success else r.final_goal_fraction for r in results]
        reward = sum(rewards) / len(rewards)
        if reward == 1.0:
            return Feedback("accept", 3, 1.0)
        failing = next(r for r in results if not r.success)
        unmet = tuple(
            g for g in scenario.goal if not evaluate(g, failing.final_world.assignment)
        )
        return Feedback("reject", 3, reward, failing_trace=failing, unmet_goals=unmet)

    if 2 not in config.levels:
        return Feedback("accept", 1, 0.0)
    result = run_episode(state.tree, scenario, library, seed=config.seed, open_nodes_fail=True)
    reward = 1.0 if result.success else result.final_goal_fraction
    unmet = tuple(g for g in scenario.goal if not evaluate(g, result.final_world.assignment))
    return Feedback("accept", 2, reward, unmet_goals=unmet)


def _bound_finding(which: str, got: int, bound: int):
    from .core import Finding

    return Finding(f"max-{which}", "<tree>", f"{which} {got} exceeds bound {bound}")


# ---------------------------------------------------------------------------
# Refinement
# ---------------------------------------------------------------------------


def refine(state: SynthState, feedback: Feedback, observer: Observer | None = None):
    """Back-propagate reward; prune rejected states permanently.

    Unmet goal literals from a rejection are appended to the parent's
    retrieval terms so later expansions of the same parent are conditioned
    on what failed.
    """
    if feedback.verdict == "reject":
        state.pruned = True
        if state.parent is not None:
            for g in feedback.unmet_goals:
                term = literal_text(g)
                if term not in state.parent.feedback_terms:
                    state.parent.feedback_terms.append(term)
        start = state.parent
    else:
        start = state
    node = start
    while node is not None:
        node.visits += 1
        node.reward_sum += feedback.reward
        node = node.parent
    _mark_dead(state)
    if observer is not None:
        observer("backprop", {"state": state, "feedback": feedback})


# ---------------------------------------------------------------------------
# Reports and the top-level loop
# ---------------------------------------------------------------------------


@dataclass
class SynthesisReport:
    policy: str
    seed: int
    expansions: int = 0
    best_reward: float = 0.0
    accepted: bool = False
    rejections: dict = field(default_factory=lambda: {"level1": 0, "level3": 0})
    dead_ends: int = 0
    config: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "policy": self.policy,
            "seed": self.seed,
            "expansions": self.expansions,
            "best_reward": self.best_reward,
            "accepted": self.accepted,
            "rejections": dict(self.rejections),
            "dead_ends": self.dead_ends,
            "config": dict(self.config),
        }


class _Run:
    """Mutable bookkeeping shared by the greedy and UCT loops."""

    def __init__(self, task, scenario, library, config, policy, observer):
        self.task = task
        self.scenario = scenario
        self.library = library
        self.config = config
        self.policy = policy
        self.observer = observer
        self.ctx = ExpandContext(scenario, library, config)
        self.report = SynthesisReport(
            policy=config.policy, seed=config.seed, config=config.to_json_dict()
        )
        self.best_tree: BehaviorTree | None = None
        self.best_reward = -1.0

    def emit(self, event: str, data: dict):
        if self.observer is not None:
            self.observer(event, data)

    def expand(self, state: SynthState, cand: ExpansionCandidate) -> SynthState:
        child = apply_candidate(state, cand, self.library)
        self.report.expansions += 1
        self.emit("expanded", {"parent": state, "child": child, "candidate": cand})
        return child

    def validate(self, child: SynthState) -> Feedback:
        fb = validate_state(child, self.scenario, self.library, self.config)
        self.emit("validated", {"state": child, "feedback": fb})
        if fb.verdict == "reject":
            key = f"level{fb.level}"
            self.report.rejections[key] = self.report.rejections.get(key, 0) + 1
        if fb.reward > self.best_reward:
            self.best_reward = fb.reward
            self.best_tree = child.tree
            self.report.best_reward = fb.reward
        refine(child, fb, self.observer)
        return fb

    def propose_for(self, state: SynthState, target_name: str):
        try:
            cands = list(self.policy.propose(state, target_name, self.ctx))
        except NoCandidatesError:
            self.report.dead_ends += 1
            return []
        return cands

    def out_of_budget(self) -> bool:
        return self.report.expansions >= self.config.budget


def synthesize(
    task: Task,
    scenario: Scenario,
    library: NodeLibrary,
    config: SearchConfig | None = None,
    policy=None,
    observer: Observer | None = None,
) -> tuple[BehaviorTree, SynthesisReport]:
    """Search for a tree that reaches the task goal in every validation episode.

    Returns the accepted tree and a run report.  Raises UnsolvableError when
    the candidate space is exhausted (in particular when the root cannot
    expand at all) and BudgetExhaustedError - carrying the best partial tree
    and the report - when the expansion budget runs out first.
    """
    if len(library) == 0:
        raise UnsolvableError("node library is empty")
    config = config or SearchConfig()
    if policy is None:
        if config.policy == "remote":
            raise InvalidArgsError("policy 'remote' needs an explicit policy object (see btsynth.remote)")
        policy = GoalRegressionPolicy()

    run = _Run(task, scenario, library, config, policy, observer)

    # Goals that already hold at init short-circuit to a pure goal check.
    if all(evaluate(g, scenario.init) for g in task.goal):
        check = regression.condition_def_matching(task.goal, scenario, library)
        if check is None:
            raise UnsolvableError(
                "goal already holds at init but the library has no condition observing it"
            )
        run.report.accepted = True
        run.report.best_reward = 1.0
        return BehaviorTree(condition_leaf(check.name)), run.report

    root = initial_state(task)
    if config.policy == "oracle":
        found = _greedy(run, root)
    else:
        found = _uct_loop(run, root)

    if found is not None:
        run.report.accepted = True
        return found.tree, run.report
    if run.out_of_budget():
        raise BudgetExhaustedError(
            f"no accepted tree within {config.budget} expansions",
            tree=run.best_tree,
            report=run.report,
        )
    if not root.children:
        err = UnsolvableError("root goal cannot be expanded with this library")
    else:
        err = UnsolvableError("candidate space exhausted without an accepted tree")
    err.report = run.report
    raise err


def _greedy(run: _Run, state: SynthState) -> SynthState | None:
    """Depth-first, first-accepted regression with backtracking."""
    state.untried = run.propose_for(state, state.frontier[0])
    while state.untried:
        if run.out_of_budget():
            return None
        cand = state.untried.pop(0)
        child = run.expand(state, cand)
        fb = run.validate(child)
        if fb.verdict == "reject":
            continue
        if child.terminal:
            return child
        found = _greedy(run, child)
        if found is not None:
            return found
        child.pruned = True
        _mark_dead(child)
    _mark_dead(state)
    return None


def _uct_loop(run: _Run, root: SynthState) -> SynthState | None:
    while not run.out_of_budget():
        try:
            state, target_name = select(root, run.config.c_uct)
        except ExhaustedError:
            return None
        if state.untried is None:
            state.untried = run.propose_for(state, target_name)
            if not state.untried:
                _mark_dead(state)
                continue
        cand = state.untried.pop(0)
        child = run.expand(state, cand)
        fb = run.validate(child)
        if fb.verdict == "accept" and child.terminal:
            return child
    return None
