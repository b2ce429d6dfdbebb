"""Shared test utilities: independent reference evaluators and generators.

Everything here is written from first principles against the documented
semantics, never by calling back into the code paths under test, so these
functions can serve as oracles.
"""

from __future__ import annotations

import math
import random
from itertools import combinations, product

from btsynth.core import BTNode, BehaviorTree, NodeStatus, condition, parallel

S, F, R = NodeStatus.SUCCESS, NodeStatus.FAILURE, NodeStatus.RUNNING


# ---------------------------------------------------------------------------
# Reference tick evaluator (independent recursion over child statuses)
# ---------------------------------------------------------------------------


def reference_status(node: BTNode, leaf_status: dict[str, NodeStatus]) -> NodeStatus:
    if node.kind == "Sequence":
        for child in node.children:
            status = reference_status(child, leaf_status)
            if status is not S:
                return status
        return S
    if node.kind == "Fallback":
        for child in node.children:
            status = reference_status(child, leaf_status)
            if status is not F:
                return status
        return F
    if node.kind == "Parallel":
        statuses = [reference_status(child, leaf_status) for child in node.children]
        if sum(s is S for s in statuses) >= node.threshold:
            return S
        if sum(s is F for s in statuses) > len(statuses) - node.threshold:
            return F
        return R
    return leaf_status[node.binding]


def stub_executor(leaf_status: dict[str, NodeStatus]):
    def leaf_exec(leaf, world):
        return leaf_status[leaf.binding], world

    return leaf_exec


def enumerate_stub_trees(max_leaves: int = 4):
    """All control trees of depth <= 3 over at most ``max_leaves`` stub leaves.

    Yields (tree root, number of leaves).  Stub leaves are Condition nodes
    bound to stub0..stubN; every Parallel node is emitted once per legal
    threshold.
    """
    counter = [0]

    def leaf():
        i = counter[0]
        counter[0] += 1
        return condition(f"leaf{i}", binding=f"stub{i}")

    def inner_subtrees(n_leaves: int):
        """Height <= 2 subtrees consuming exactly n_leaves leaves."""
        if n_leaves == 1:
            yield lambda: leaf()
        for kind in ("Sequence", "Fallback"):
            yield lambda k=kind, n=n_leaves: BTNode(
                k, f"{k.lower()}{counter[0]}", tuple(leaf() for _ in range(n))
            )
        for m in range(1, n_leaves + 1):
            yield lambda m=m, n=n_leaves: parallel(
                f"par{counter[0]}{m}", m, tuple(leaf() for _ in range(n))
            )

    def compositions(total: int):
        if total == 0:
            yield ()
            return
        for first in range(1, total + 1):
            for rest in compositions(total - first):
                yield (first,) + rest

    for total in range(1, max_leaves + 1):
        for parts in compositions(total):
            child_choices = [list(inner_subtrees(p)) for p in parts]
            for combo in product(*child_choices):
                for root_kind in ("Sequence", "Fallback"):
                    counter[0] = 0
                    children = tuple(make() for make in combo)
                    yield BTNode(root_kind, "root", children), total
                for m in range(1, len(parts) + 1):
                    counter[0] = 0
                    children = tuple(make() for make in combo)
                    yield BTNode("Parallel", "root", children, threshold=m), total


def all_status_assignments(n_leaves: int):
    for statuses in product((S, F, R), repeat=n_leaves):
        yield {f"stub{i}": statuses[i] for i in range(n_leaves)}


# ---------------------------------------------------------------------------
# pass@k enumeration oracle
# ---------------------------------------------------------------------------


def pass_at_k_by_enumeration(n: int, c: int, k: int) -> float:
    """Count k-subsets of n samples containing at least one of c correct."""
    correct = set(range(c))
    hits = sum(1 for subset in combinations(range(n), k) if correct & set(subset))
    return hits / math.comb(n, k)


def pass_at_k_monte_carlo(n: int, c: int, k: int, trials: int, rng: random.Random) -> float:
    hits = 0
    samples = list(range(n))
    for _ in range(trials):
        drawn = rng.sample(samples, k)
        if any(x < c for x in drawn):
            hits += 1
    return hits / trials


# ---------------------------------------------------------------------------
# Random tree generator (round-trip inputs)
# ---------------------------------------------------------------------------

_NAME_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789_-"


def random_tree(seed: int, max_depth: int = 6, max_nodes: int = 50) -> BehaviorTree:
    rng = random.Random(seed)
    budget = [rng.randint(1, max_nodes)]
    used: set[str] = set()

    def name(prefix: str) -> str:
        while True:
            suffix = "".join(rng.choice(_NAME_ALPHABET) for _ in range(rng.randint(1, 6)))
            candidate = f"{prefix}{suffix}"
            if candidate not in used:
                used.add(candidate)
                return candidate

    def build(depth: int) -> BTNode:
        budget[0] -= 1
        make_leaf = depth >= max_depth or budget[0] < 1 or rng.random() < 0.35
        if make_leaf:
            kind = rng.choice(("Condition", "Action"))
            leaf_name = name("n")
            binding = leaf_name if rng.random() < 0.5 else name("b")
            return BTNode(kind, leaf_name, binding=binding)
        n_children = rng.randint(1, min(4, budget[0]))
        children = []
        for _ in range(n_children):
            if budget[0] < 1:
                break
            children.append(build(depth + 1))
        kind = rng.choice(("Sequence", "Fallback", "Parallel"))
        threshold = rng.randint(1, len(children)) if kind == "Parallel" else None
        return BTNode(kind, name("c"), tuple(children), threshold=threshold)

    return BehaviorTree(build(1))


# ---------------------------------------------------------------------------
# Inline scenario fixtures
# ---------------------------------------------------------------------------


def tiny_scenario_doc(goal_value: bool = False) -> dict:
    """One-variable world; goal already holds at init when goal_value=False."""
    return {
        "name": "tiny",
        "description": "toggle a flag",
        "variables": {"flag": {"type": "bool"}},
        "init": {"flag": False},
        "goal": [{"var": "flag", "op": "eq", "value": goal_value}],
        "conditions": {
            "flag_set": {"var": "flag", "op": "eq", "value": True},
            "flag_clear": {"var": "flag", "op": "eq", "value": False},
        },
        "actions": {
            "set_flag": {
                "precondition": True,
                "effects": [{"var": "flag", "op": "set", "value": True}],
                "duration": 1,
            }
        },
        "events": [],
        "max_ticks": 5,
    }


def tiny_library_doc() -> dict:
    return {
        "nodes": [
            {
                "type": "condition",
                "name": "check-flag",
                "description": "Check the flag is set.",
                "implementation": "if (flag) return Success; return Failure;",
                "binding": "flag_set",
            },
            {
                "type": "condition",
                "name": "check-flag-clear",
                "description": "Check the flag is clear.",
                "implementation": "if (!flag) return Success; return Failure;",
                "binding": "flag_clear",
            },
            {
                "type": "action",
                "name": "set-flag",
                "description": "Set the flag.",
                "implementation": "flag = true; return Success;",
                "binding": "set_flag",
            },
        ]
    }
