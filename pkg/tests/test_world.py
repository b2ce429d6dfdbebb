"""Scenario loading, episode execution, node-level unit testing."""

import pytest

from btsynth.core import BTNode, BehaviorTree, NodeStatus, condition
from btsynth.errors import (
    DomainViolationError,
    SchemaViolationError,
    UnknownNodeError,
    UnknownVariableError,
)
from btsynth.library import load_library
from btsynth.world import apply_effects, load_scenario, run_episode, unit_test_nodes

from .helpers import tiny_library_doc, tiny_scenario_doc

S, F, R = NodeStatus.SUCCESS, NodeStatus.FAILURE, NodeStatus.RUNNING


class TestLoadScenario:
    def test_bundled_uav_loads(self, uav):
        scenario, _ = uav
        assert set(scenario.variables) == {"position", "target_detected", "target_warned"}
        assert scenario.max_ticks == 20
        assert len(scenario.goal) == 2

    def test_event_at_tick_zero(self):
        doc = tiny_scenario_doc()
        doc["events"] = [{"tick": 0, "var": "flag", "value": True}]
        with pytest.raises(SchemaViolationError, match="tick"):
            load_scenario(doc)

    def test_event_beyond_max_ticks(self):
        doc = tiny_scenario_doc()
        doc["events"] = [{"tick": 99, "var": "flag", "value": True}]
        with pytest.raises(SchemaViolationError):
            load_scenario(doc)

    def test_effect_out_of_enum_domain(self):
        doc = tiny_scenario_doc()
        doc["variables"]["mode"] = {"type": "enum", "values": ["idle", "active"]}
        doc["init"]["mode"] = "idle"
        doc["actions"]["set_flag"]["effects"].append(
            {"var": "mode", "op": "set", "value": "haywire"}
        )
        with pytest.raises(DomainViolationError):
            load_scenario(doc)

    def test_init_must_cover_every_variable(self):
        doc = tiny_scenario_doc()
        del doc["init"]["flag"]
        with pytest.raises(SchemaViolationError, match="init"):
            load_scenario(doc)

    def test_init_out_of_domain(self):
        doc = tiny_scenario_doc()
        doc["variables"]["count"] = {"type": "int", "min": 0, "max": 3}
        doc["init"]["count"] = 7
        with pytest.raises(DomainViolationError):
            load_scenario(doc)

    def test_predicate_on_undeclared_variable(self):
        doc = tiny_scenario_doc()
        doc["conditions"]["ghost"] = {"var": "ghost", "op": "eq", "value": True}
        with pytest.raises(UnknownVariableError):
            load_scenario(doc)

    def test_ordered_comparison_needs_int(self):
        doc = tiny_scenario_doc()
        doc["conditions"]["weird"] = {"var": "flag", "op": "lt", "value": True}
        with pytest.raises(SchemaViolationError):
            load_scenario(doc)

    def test_increment_clamps_are_declared_int_only(self):
        doc = tiny_scenario_doc()
        doc["actions"]["set_flag"]["effects"] = [{"var": "flag", "op": "inc", "value": 1}]
        with pytest.raises(SchemaViolationError):
            load_scenario(doc)


class TestEpisodes:
    def test_uav_no_events_reaches_goal(self, uav, table2_tree):
        scenario, library = uav
        quiet = scenario.with_events(())
        result = run_episode(table2_tree, quiet, library)
        assert result.success
        assert result.ticks_used == 4  # one move per tick from position 0 to 4
        moves = [e for e in result.trace if e.binding == "move-to_next-pos"]
        assert [e.status for e in moves] == [S, S, S, S]

    def test_uav_event_triggers_warn_then_patrol_resumes(self, uav, table2_tree):
        scenario, library = uav
        result = run_episode(table2_tree, scenario, library)
        assert result.success
        warned = [e for e in result.trace if e.binding == "warn-target"]
        assert [(e.tick, e.status) for e in warned] == [(3, S)]
        # patrol resumes after the interruption, so one extra tick overall
        assert result.ticks_used == 5

    def test_vacuous_goal_succeeds_at_tick_one(self):
        doc = tiny_scenario_doc()
        doc["goal"] = []
        scenario = load_scenario(doc)
        library = load_library(tiny_library_doc())
        tree = BehaviorTree(condition("check-flag-clear"))
        result = run_episode(tree, scenario, library)
        assert result.success and result.ticks_used == 1

    def test_determinism_trace_digests(self, uav, table2_tree):
        scenario, library = uav
        a = run_episode(table2_tree, scenario, library, seed=0)
        b = run_episode(table2_tree, scenario, library, seed=0)
        assert a.trace == b.trace
        assert a.final_world.assignment == b.final_world.assignment

    def test_failure_reports_goal_fraction(self, uav, table2_tree):
        import dataclasses

        scenario, library = uav
        # two ticks are never enough to cross the route
        hopeless = dataclasses.replace(scenario.with_events(()), max_ticks=2)
        result = run_episode(table2_tree, hopeless, library)
        assert not result.success
        assert result.ticks_used == 2
        assert result.final_goal_fraction == pytest.approx(0.5)

    def test_raising_max_ticks_never_flips_success(self, uav, table2_tree):
        import dataclasses

        scenario, library = uav
        short = dataclasses.replace(scenario, max_ticks=3)
        longer = dataclasses.replace(scenario, max_ticks=9)
        assert not run_episode(table2_tree, short, library).success
        assert run_episode(table2_tree, longer, library).success

    def test_condition_only_tree_never_moves_goal_fraction(self, uav):
        scenario, library = uav
        watcher = BehaviorTree(condition("check-target_detected"))
        quiet = scenario.with_events(())
        result = run_episode(watcher, quiet, library)
        assert not result.success
        assert result.final_goal_fraction == scenario.goal_fraction(scenario.init)
        assert result.final_world.assignment == scenario.init

    def test_enum_variables_run_end_to_end(self):
        doc = {
            "name": "modes",
            "description": "drive the mode machine to done",
            "variables": {"mode": {"type": "enum", "values": ["idle", "busy", "done"]}},
            "init": {"mode": "idle"},
            "goal": [{"var": "mode", "op": "eq", "value": "done"}],
            "conditions": {"is_done": {"var": "mode", "op": "eq", "value": "done"}},
            "actions": {
                "advance": {
                    "precondition": {"var": "mode", "op": "ne", "value": "done"},
                    "effects": [{"var": "mode", "op": "set", "value": "done"}],
                    "duration": 1,
                }
            },
            "events": [],
            "max_ticks": 4,
        }
        scenario = load_scenario(doc)
        library = load_library(
            {
                "nodes": [
                    {
                        "type": "action",
                        "name": "advance-mode",
                        "description": "advance the mode machine",
                        "implementation": "-",
                        "binding": "advance",
                    }
                ]
            }
        )
        tree = BehaviorTree(BTNode("Action", "advance-mode", binding="advance-mode"))
        result = run_episode(tree, scenario, library)
        assert result.success and result.final_world.assignment["mode"] == "done"

    def test_frame_property_replay(self, uav, table2_tree):
        """init + applied events + effects of successful actions = final world."""
        scenario, library = uav
        result = run_episode(table2_tree, scenario, library)
        state = dict(scenario.init)
        events_by_tick = {}
        for ev in scenario.events:
            events_by_tick.setdefault(ev.tick, []).append(ev)
        entries_by_tick = {}
        for entry in result.trace:
            entries_by_tick.setdefault(entry.tick, []).append(entry)
        for t in range(1, result.ticks_used + 1):
            for ev in events_by_tick.get(t, []):
                state[ev.var] = ev.value
            for entry in entries_by_tick.get(t, []):
                definition = library.get(entry.binding)
                if definition.node_type == "action" and entry.status is S:
                    schema = scenario.actions[definition.binding]
                    state = apply_effects(scenario, state, schema.effects)
        assert state == result.final_world.assignment


class TestDurations:
    def test_multi_tick_action_runs_then_completes(self):
        scenario, library = _dock_fixture()
        tree = BehaviorTree(BTNode("Action", "dock-at-station", binding="dock-at-station"))
        world = scenario.initial_world()
        from btsynth.world import tick

        status1, w1 = tick(tree, world, library)
        assert status1 is R and w1.in_progress == ("dock", 1)
        assert w1.assignment["at_dock"] is False  # effects apply on completion
        status2, w2 = tick(tree, w1, library)
        assert status2 is S and w2.in_progress is None
        assert w2.assignment["at_dock"] is True

    def test_switching_actions_abandons_progress(self):
        scenario, library = _dock_fixture()
        from btsynth.world import tick

        dock = BehaviorTree(BTNode("Action", "dock-at-station", binding="dock-at-station"))
        wander = BehaviorTree(BTNode("Action", "wander-away", binding="wander-away"))
        _, w1 = tick(dock, scenario.initial_world(), library)
        assert w1.in_progress == ("dock", 1)
        status, w2 = tick(wander, w1, library)
        assert status is R and w2.in_progress == ("wander", 1)


def _dock_fixture():
    from btsynth import bundled

    scenario, _ = bundled.load("recharge_dock")
    import dataclasses

    from btsynth.world import ActionSchema

    actions = dict(scenario.actions)
    actions["wander"] = ActionSchema("wander", True, (), duration=2)
    scenario = dataclasses.replace(scenario, actions=actions)
    library = load_library(
        {
            "nodes": [
                {
                    "type": "action",
                    "name": "dock-at-station",
                    "description": "dock",
                    "implementation": "-",
                    "binding": "dock",
                },
                {
                    "type": "action",
                    "name": "wander-away",
                    "description": "wander",
                    "implementation": "-",
                    "binding": "wander",
                },
            ]
        }
    )
    return scenario, library


class TestUnitTestNodes:
    def test_condition_case_passes(self, uav):
        scenario, library = uav
        report = unit_test_nodes(
            library,
            scenario,
            [("check-target_detected", {"target_detected": True}, S, None)],
        )
        assert report.ok

    def test_precondition_failure_case(self, uav):
        scenario, library = uav
        report = unit_test_nodes(
            library,
            scenario,
            [("warn-target", {"target_detected": False}, F, None)],
        )
        assert report.ok

    def test_increment_clamps_at_range_edge(self, uav):
        scenario, library = uav
        report = unit_test_nodes(
            library,
            scenario,
            [("move-to_next-pos", {"position": 4}, S, {"position": 4})],
        )
        assert report.ok

    def test_failing_case_is_reported_not_raised(self, uav):
        scenario, library = uav
        report = unit_test_nodes(
            library,
            scenario,
            [("check-target_detected", {"target_detected": True}, F, None)],
        )
        assert not report.ok
        assert "status" in report.results[0].message

    def test_unknown_node(self, uav):
        scenario, library = uav
        with pytest.raises(UnknownNodeError):
            unit_test_nodes(library, scenario, [("no-such-node", {}, S, None)])
