"""Behavior-tree synthesis, simulation and evaluation toolkit."""

from .core import (
    BTNode,
    BehaviorTree,
    NodeStatus,
    SubGoal,
    ValidationReport,
    tick_with,
    validate_structure,
)
from .btxml import parse_bt_xml, serialize_bt_xml
from .records import DatasetRecord, read_record, read_records, write_record, write_records
from .library import NodeDefinition, NodeLibrary, load_library, retrieve
from .world import (
    EpisodeResult,
    Scenario,
    WorldState,
    load_scenario,
    run_episode,
    tick,
    unit_test_nodes,
)
from .engine import (
    Feedback,
    SearchConfig,
    SynthesisReport,
    SynthState,
    Task,
    initial_state,
    select,
    synthesize,
    validate_state,
)
from .metrics import (
    MetricReport,
    SampleOutcome,
    accuracy,
    evaluate_generator,
    pass_at_k,
    perplexity,
    sensitivity,
)

__version__ = "0.1.0"
