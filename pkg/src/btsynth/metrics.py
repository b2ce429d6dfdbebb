"""Evaluation metrics and the batch generation harness.

pass@k uses the unbiased estimator 1 - C(n-c, k)/C(n, k), computed in the
numerically stable product form; perplexity is the inverse geometric mean of
token probabilities, computed in log space; prompt sensitivity is the
population standard deviation of an accuracy list (defined - as zero - even
for a single element).
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field

from .engine import SearchConfig, Task, synthesize
from .errors import BTSynthError, InvalidArgsError

# container for one problem's sampling outcome


@dataclass(frozen=True)
class SampleOutcome:
    n: int  # samples generated
    c: int  # samples passing validation

    def __post_init__(self):
        if self.n < 1 or not (0 <= self.c <= self.n):
            raise InvalidArgsError(f"need 0 <= c <= n and n >= 1, got n={self.n}, c={self.c}")


def pass_at_k(n: int, c: int, k: int) -> float:
    """Probability that at least one of k drawn samples is correct."""
    if n < 1 or k < 1 or k > n:
        raise InvalidArgsError(f"need 1 <= k <= n, got n={n}, k={k}")
    if not 0 <= c <= n:
        raise InvalidArgsError(f"need 0 <= c <= n, got n={n}, c={c}")
    if n - c < k:
        return 1.0
    prod = 1.0
    for i in range(n - c + 1, n + 1):
        prod *= 1.0 - k / i
    return 1.0 - prod


def perplexity(token_probabilities) -> float:
    """Inverse geometric mean of the probabilities; >= 1."""
    probs = list(token_probabilities)
    if not probs:
        raise InvalidArgsError("perplexity needs at least one probability")
    total = 0.0
    for p in probs:
        if not 0.0 < p <= 1.0:
            raise InvalidArgsError(f"probabilities must be in (0, 1], got {p!r}")
        total += math.log(p)
    return math.exp(-total / len(probs))


def accuracy(outcomes) -> float:
    """Fraction of successful samples."""
    outcomes = list(outcomes)
    if not outcomes:
        raise InvalidArgsError("accuracy needs at least one outcome")
    return sum(bool(o) for o in outcomes) / len(outcomes)


def sensitivity(accuracies) -> float:
    """Population standard deviation of an accuracy list."""
    values = list(accuracies)
    if not values:
        raise InvalidArgsError("sensitivity needs at least one accuracy")
    return statistics.pstdev(values)


# ---------------------------------------------------------------------------
# Batch harness
# ---------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    name: str
    n: int
    c: int
    pass_at_k: dict[int, float]


@dataclass
class MetricReport:
    scenarios: list[ScenarioResult] = field(default_factory=list)
    mean_pass_at_k: dict[int, float] = field(default_factory=dict)
    accuracy: float = 0.0
    sensitivity: float = 0.0
    perplexity: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "scenarios": [
                {
                    "name": row.name,
                    "n": row.n,
                    "c": row.c,
                    "pass_at_k": {str(k): v for k, v in sorted(row.pass_at_k.items())},
                }
                for row in self.scenarios
            ],
            "mean_pass_at_k": {str(k): v for k, v in sorted(self.mean_pass_at_k.items())},
            "accuracy": self.accuracy,
            "sensitivity": self.sensitivity,
            "perplexity": self.perplexity,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, ensure_ascii=False) + "\n"

    def render_table(self) -> str:
        ks = sorted(self.mean_pass_at_k)
        header = ["scenario", "n", "c"] + [f"pass@{k}" for k in ks]
        rows = [header]
        for row in self.scenarios:
            rows.append(
                [row.name, str(row.n), str(row.c)]
                + [f"{row.pass_at_k.get(k, 0.0):.4f}" for k in ks]
            )
        rows.append(
            ["(mean)", "", ""] + [f"{self.mean_pass_at_k[k]:.4f}" for k in ks]
        )
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
        lines.append(f"accuracy={self.accuracy:.4f}  sensitivity={self.sensitivity:.4f}")
        return "\n".join(lines) + "\n"


def evaluate_generator(policy, scenarios, n: int, ks, config: SearchConfig) -> MetricReport:
    """Generate n trees per scenario with distinct seeds; score pass@k.

    ``scenarios`` is a list of (Scenario, NodeLibrary) pairs.  ``policy`` is
    either None (use the configured policy name) or a factory called as
    ``policy(scenario, library, config)`` returning an expansion policy
    object for one sample.  A sample counts as correct when synthesis
    returns a tree that survives full (Level-3) validation; synthesis errors
    count toward n - c and never abort the suite.
    """
    ks = sorted(set(ks))
    if not ks or n < max(ks):
        raise InvalidArgsError(f"need n >= max(k); got n={n}, ks={ks}")
    rows: list[ScenarioResult] = []
    for scenario, library in sorted(scenarios, key=lambda pair: pair[0].name):
        correct = 0
        for i in range(n):
            sample_config = SearchConfig(
                budget=config.budget,
                c_uct=config.c_uct,
                max_depth=config.max_depth,
                max_nodes=config.max_nodes,
                rollout_episodes=config.rollout_episodes,
                levels=config.levels,
                seed=config.seed + i,
                policy=config.policy,
                k_candidates=config.k_candidates,
                role=config.role,
            )
            try:
                policy_obj = policy(scenario, library, sample_config) if policy else None
                synthesize(Task.for_scenario(scenario), scenario, library, sample_config, policy=policy_obj)
            except BTSynthError:
                continue
            correct += 1
        rows.append(
            ScenarioResult(scenario.name, n, correct, {k: pass_at_k(n, correct, k) for k in ks})
        )
    report = MetricReport(scenarios=rows)
    report.mean_pass_at_k = {
        k: sum(r.pass_at_k[k] for r in rows) / len(rows) if rows else 0.0 for k in ks
    }
    total = sum(r.n for r in rows)
    report.accuracy = (sum(r.c for r in rows) / total) if total else 0.0
    report.sensitivity = sensitivity([r.c / r.n for r in rows]) if rows else 0.0
    return report
