"""Dataset record schema, cross-references, JSONL round-trips."""

import pytest

from btsynth.errors import CrossRefViolationError, SchemaViolationError
from btsynth.records import (
    DatasetRecord,
    read_record,
    read_records,
    record_to_dict,
    write_record,
    write_records,
)

TABLE2_CANONICAL_XML = (
    '<Fallback instance_name="fallback_node">\n'
    '  <Sequence instance_name="sequence_node">\n'
    '    <Condition instance_name="check-target_detected" />\n'
    '    <Action instance_name="warn-target" />\n'
    "  </Sequence>\n"
    '  <Action instance_name="move-to_next-pos" />\n'
    "</Fallback>\n"
)


def table2_record() -> DatasetRecord:
    return DatasetRecord(
        name="UAV_Patrol_Campsite",
        description=(
            "The tree describes the UAV patrolling based on a predetermined route. "
            "If a suspicious target is detected, the UAV will warn the target, "
            "otherwise, the UAV will move to the next location in the route."
        ),
        xml=TABLE2_CANONICAL_XML,
        nodes_meta=(
            ("check-target_detected", "Check if any suspicious targets have been detected."),
            ("warn-target", "Warn the target."),
            ("move-to_next-pos", "Move to the next location in the route."),
        ),
        implementations=(
            ("check-target_detected", "if (targetDetected) return Success; else return Failure;"),
            ("warn-target", "warn_target(getTarget()); return Success;"),
            ("move-to_next-pos", "fly_to(getNextWaypoint(route)); return Success;"),
        ),
    )


class TestRoundTrip:
    def test_table2_record_round_trips_losslessly(self):
        record = table2_record()
        assert read_record(write_record(record)) == record

    def test_line_is_single_line(self):
        assert "\n" not in write_record(table2_record())

    def test_corpus_round_trip(self):
        records = [table2_record()]
        assert read_records(write_records(records)) == records

    def test_empty_input_yields_no_records(self):
        assert read_records("") == []
        assert read_records("\n\n  \n") == []


class TestCrossRefs:
    def test_missing_nodes_entry(self):
        record = table2_record()
        broken = record_to_dict(record)
        broken["nodes"] = [p for p in broken["nodes"] if p[0] != "warn-target"]
        with pytest.raises(CrossRefViolationError, match="warn-target"):
            read_record(write_line(broken))

    def test_missing_implementation_entry(self):
        broken = record_to_dict(table2_record())
        broken["implementations"] = broken["implementations"][:1]
        with pytest.raises(CrossRefViolationError):
            read_record(write_line(broken))

    def test_duplicate_metadata_entry(self):
        broken = record_to_dict(table2_record())
        broken["nodes"].append(["warn-target", "again"])
        with pytest.raises(CrossRefViolationError, match="duplicate"):
            read_record(write_line(broken))

    def test_extra_unused_entries_are_allowed(self):
        extended = record_to_dict(table2_record())
        extended["nodes"].append(["spare-node", "never used"])
        extended["implementations"].append(["spare-node", "return Success;"])
        record = read_record(write_line(extended))
        assert ("spare-node", "never used") in record.nodes_meta


class TestSchema:
    def test_missing_key(self):
        broken = record_to_dict(table2_record())
        del broken["description"]
        with pytest.raises(SchemaViolationError, match="keys exactly"):
            read_record(write_line(broken))

    def test_extra_key(self):
        broken = record_to_dict(table2_record())
        broken["surprise"] = 1
        with pytest.raises(SchemaViolationError):
            read_record(write_line(broken))

    def test_wrong_pair_shape(self):
        broken = record_to_dict(table2_record())
        broken["nodes"] = [["lonely"]]
        with pytest.raises(SchemaViolationError, match="pairs"):
            read_record(write_line(broken))

    def test_invalid_json_line_reports_line_number(self):
        good = write_record(table2_record())
        with pytest.raises(SchemaViolationError, match="line 2"):
            read_records(good + "\n{nope\n")

    def test_record_xml_must_parse(self):
        broken = record_to_dict(table2_record())
        broken["xml"] = "<Robot instance_name='x'/>"
        with pytest.raises(Exception):
            read_record(write_line(broken))


def write_line(obj) -> str:
    import json

    return json.dumps(obj, ensure_ascii=False)
