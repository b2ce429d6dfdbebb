"""End-to-end CLI runs in temporary directories."""

import json
import shutil

import pytest

from btsynth import bundled
from btsynth.cli import main
from btsynth.records import read_records


@pytest.fixture()
def workdir(tmp_path):
    for name in bundled.names():
        shutil.copy(bundled.scenario_path(name), tmp_path)
        shutil.copy(bundled.library_path(name), tmp_path)
    return tmp_path


def run(*args) -> int:
    return main([str(a) for a in args])


class TestSynth:
    def test_byte_identical_outputs(self, workdir, capsys):
        out1, out2 = workdir / "a.xml", workdir / "b.xml"
        for out in (out1, out2):
            code = run(
                "synth",
                "--scenario", workdir / "uav_patrol.json",
                "--library", workdir / "uav_patrol.library.json",
                "--policy", "oracle",
                "--seed", 0,
                "--out", out,
            )
            assert code == 0
        assert out1.read_bytes() == out2.read_bytes()
        report1 = (workdir / "a.xml.report.json").read_bytes()
        report2 = (workdir / "b.xml.report.json").read_bytes()
        assert report1 == report2
        assert b'"accepted": true' in report1

    def test_emitted_tree_reparses(self, workdir):
        from btsynth.btxml import parse_bt_xml

        out = workdir / "tree.xml"
        assert run(
            "synth",
            "--scenario", workdir / "pick_place.json",
            "--library", workdir / "pick_place.library.json",
            "--policy", "mcts-oracle",
            "--out", out,
        ) == 0
        tree = parse_bt_xml(out.read_text())
        assert tree.node_count >= 1

    def test_unsolvable_goal_exits_one(self, workdir, capsys):
        scenario = json.loads((workdir / "uav_patrol.json").read_text())
        scenario["goal"] = [{"var": "target_detected", "op": "eq", "value": True}]
        bad = workdir / "impossible.json"
        bad.write_text(json.dumps(scenario))
        code = run(
            "synth",
            "--scenario", bad,
            "--library", workdir / "uav_patrol.library.json",
            "--policy", "oracle",
            "--out", workdir / "nope.xml",
        )
        assert code == 1
        assert "impossible.json" in capsys.readouterr().err

    def test_missing_file_exits_two(self, workdir, capsys):
        code = run(
            "synth",
            "--scenario", workdir / "ghost.json",
            "--library", workdir / "uav_patrol.library.json",
            "--out", workdir / "x.xml",
        )
        assert code == 2
        assert "ghost.json" in capsys.readouterr().err

    def test_config_file_with_flag_precedence(self, workdir):
        config = workdir / "run.json"
        config.write_text(json.dumps({"policy": "oracle", "seed": 42, "budget": 50}))
        out = workdir / "tree.xml"
        assert run(
            "synth",
            "--scenario", workdir / "uav_patrol.json",
            "--library", workdir / "uav_patrol.library.json",
            "--config", config,
            "--seed", 7,
            "--out", out,
        ) == 0
        report = json.loads((workdir / "tree.xml.report.json").read_text())
        assert report["config"]["budget"] == 50  # from file
        assert report["config"]["seed"] == 7  # flag wins
        assert report["config"]["policy"] == "oracle"

    def test_remote_mock_policy(self, workdir):
        out = workdir / "tree.xml"
        assert run(
            "synth",
            "--scenario", workdir / "uav_patrol.json",
            "--library", workdir / "uav_patrol.library.json",
            "--policy", "remote",
            "--remote-mock", "oracle",
            "--out", out,
        ) == 0
        direct = workdir / "direct.xml"
        assert run(
            "synth",
            "--scenario", workdir / "uav_patrol.json",
            "--library", workdir / "uav_patrol.library.json",
            "--policy", "mcts-oracle",
            "--out", direct,
        ) == 0
        assert out.read_text() == direct.read_text()

    def test_remote_without_endpoint_is_usage_error(self, workdir, capsys):
        code = run(
            "synth",
            "--scenario", workdir / "uav_patrol.json",
            "--library", workdir / "uav_patrol.library.json",
            "--policy", "remote",
            "--out", workdir / "x.xml",
        )
        assert code == 2

    def test_remote_endpoint_env_var_is_honored(self, workdir, monkeypatch, capsys):
        from btsynth.remote import ENDPOINT_ENV_VAR

        monkeypatch.setenv(ENDPOINT_ENV_VAR, "http://127.0.0.1:1/expand")
        code = run(
            "synth",
            "--scenario", workdir / "uav_patrol.json",
            "--library", workdir / "uav_patrol.library.json",
            "--policy", "remote",
            "--out", workdir / "x.xml",
        )
        # the endpoint was taken from the environment and is unreachable
        assert code == 2
        assert "unreachable" in capsys.readouterr().err


class TestSimulateAndValidate:
    @pytest.fixture()
    def tree_path(self, workdir):
        out = workdir / "tree.xml"
        run(
            "synth",
            "--scenario", workdir / "uav_patrol.json",
            "--library", workdir / "uav_patrol.library.json",
            "--policy", "oracle",
            "--out", out,
        )
        return out

    def test_simulate_writes_episode_and_trace(self, workdir, tree_path):
        episode = workdir / "episode.json"
        trace = workdir / "trace.jsonl"
        code = run(
            "simulate",
            "--tree", tree_path,
            "--scenario", workdir / "uav_patrol.json",
            "--library", workdir / "uav_patrol.library.json",
            "--out", episode,
            "--trace", trace,
        )
        assert code == 0
        payload = json.loads(episode.read_text())
        assert payload["success"] is True
        lines = [json.loads(line) for line in trace.read_text().splitlines()]
        assert all(set(line) == {"tick", "leaf", "binding", "status", "digest"} for line in lines)

    def test_simulate_dump_states(self, workdir, tree_path):
        trace = workdir / "trace.jsonl"
        run(
            "simulate",
            "--tree", tree_path,
            "--scenario", workdir / "uav_patrol.json",
            "--library", workdir / "uav_patrol.library.json",
            "--trace", trace,
            "--dump-states",
        )
        first = json.loads(trace.read_text().splitlines()[0])
        assert "state" in first and "position" in first["state"]

    def test_simulate_failure_exits_one(self, workdir, tree_path):
        scenario = json.loads((workdir / "uav_patrol.json").read_text())
        scenario["max_ticks"] = 2
        scenario["events"] = []
        short = workdir / "short.json"
        short.write_text(json.dumps(scenario))
        code = run(
            "simulate",
            "--tree", tree_path,
            "--scenario", short,
            "--library", workdir / "uav_patrol.library.json",
        )
        assert code == 1

    def test_validate_clean_tree(self, workdir, tree_path, capsys):
        code = run("validate", "--tree", tree_path, "--library", workdir / "uav_patrol.library.json")
        assert code == 0
        assert "ok:" in capsys.readouterr().out

    def test_validate_broken_tree_exits_one(self, workdir, capsys):
        broken = workdir / "broken.xml"
        broken.write_text('<Sequence instance_name="s" />\n')
        code = run("validate", "--tree", broken, "--library", workdir / "uav_patrol.library.json")
        assert code == 1
        assert "empty-control" in capsys.readouterr().out

    def test_validate_unparseable_tree_exits_two(self, workdir, capsys):
        broken = workdir / "broken.xml"
        broken.write_text("<Robot instance_name='x'/>")
        assert run("validate", "--tree", broken, "--library", workdir / "uav_patrol.library.json") == 2


class TestEvalAndDataset:
    def test_eval_writes_report(self, workdir, capsys):
        out = workdir / "metrics.json"
        code = run(
            "eval",
            "--scenarios", workdir,
            "--n", 3,
            "--pass-k", "1,3",
            "--policy", "oracle",
            "--out", out,
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["accuracy"] == 1.0
        assert [row["name"] for row in payload["scenarios"]] == sorted(
            row["name"] for row in payload["scenarios"]
        )
        assert "pass@1" in capsys.readouterr().out

    def test_dataset_corpus_round_trips(self, workdir):
        corpus = workdir / "corpus.jsonl"
        code = run("dataset", "--scenarios", workdir, "--policy", "oracle", "--out", corpus)
        assert code == 0
        records = read_records(corpus.read_text())
        assert [r.name for r in records] == sorted(bundled.names())
        for record in records:
            record.check_cross_refs()

    def test_dataset_is_deterministic(self, workdir):
        a, b = workdir / "a.jsonl", workdir / "b.jsonl"
        run("dataset", "--scenarios", workdir, "--out", a)
        run("dataset", "--scenarios", workdir, "--out", b)
        assert a.read_bytes() == b.read_bytes()
