"""Command-line pipeline: synth, simulate, validate, eval, dataset.

Outputs are byte-deterministic for identical inputs: reports echo the
configuration and never embed timestamps unless --timestamps is given.
Exit codes: 0 success, 1 findings or failures, 2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .btxml import parse_bt_xml, serialize_bt_xml
from .engine import SearchConfig, Task, synthesize
from .errors import BTSynthError, BudgetExhaustedError, UnsolvableError
from .library import load_library_file
from .metrics import evaluate_generator
from .records import DatasetRecord, write_record
from .remote import ENDPOINT_ENV_VAR, HttpTransport, RemotePolicy, transport_from_name
from .world import load_scenario_file, run_episode
from .core import iter_nodes, validate_structure

log = logging.getLogger("btsynth.cli")

CONFIG_FIELDS = (
    "budget",
    "c_uct",
    "max_depth",
    "max_nodes",
    "rollout_episodes",
    "seed",
    "policy",
    "k_candidates",
    "role",
)


def _add_search_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--budget", type=int, default=None, help="max expansions")
    parser.add_argument("--c-uct", dest="c_uct", type=float, default=None, help="UCT exploration constant")
    parser.add_argument("--max-depth", dest="max_depth", type=int, default=None)
    parser.add_argument("--max-nodes", dest="max_nodes", type=int, default=None)
    parser.add_argument("--episodes", dest="rollout_episodes", type=int, default=None, help="episodes per final validation")
    parser.add_argument("--policy", choices=("oracle", "mcts-oracle", "remote"), default=None)
    parser.add_argument("--k", dest="k_candidates", type=int, default=None, help="retrieval/candidate breadth")
    parser.add_argument("--role", default=None, help="remote prompt role (planner/validator)")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except BTSynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btsynth", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("--config", type=Path, default=None, help="JSON file of flag defaults")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--timestamps", action="store_true", help="embed wall-clock times in reports")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a tree for a scenario goal", parents=[common])
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--library", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="tree XML output path")
    p.add_argument("--report", type=Path, default=None, help="report path (default: <out>.report.json)")
    p.add_argument("--remote-url", default=None, help=f"remote endpoint (or ${ENDPOINT_ENV_VAR})")
    p.add_argument("--remote-mock", choices=("echo", "oracle"), default=None)
    _add_search_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="run one episode of a tree on a scenario", parents=[common])
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--scenario", type=Path, required=True)
    p.add_argument("--library", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None, help="episode result JSON")
    p.add_argument("--trace", type=Path, default=None, help="trace JSONL, one leaf execution per line")
    p.add_argument("--dump-states", action="store_true", help="include full world states in the trace")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="structural and binding checks for a tree", parents=[common])
    p.add_argument("--tree", type=Path, required=True)
    p.add_argument("--library", type=Path, required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("eval", help="pass@k evaluation over a scenario directory", parents=[common])
    p.add_argument("--scenarios", type=Path, required=True, help="directory of scenario JSON files")
    p.add_argument("--library", type=Path, default=None, help="override the per-scenario libraries")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--pass-k", dest="pass_k", default="1,5", help="comma-separated k values")
    p.add_argument("--out", type=Path, default=None, help="metric report JSON")
    _add_search_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("dataset", help="generate a validated JSONL corpus from scenarios", parents=[common])
    p.add_argument("--scenarios", type=Path, required=True)
    p.add_argument("--library", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    _add_search_flags(p)
    p.set_defaults(func=cmd_dataset)

    return parser


def load_run_config(args) -> SearchConfig:
    """Flags > config file > built-in defaults."""
    file_values = {}
    if args.config is not None:
        try:
            file_values = json.loads(args.config.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise BTSynthError(f"{args.config}: not valid JSON: {exc}") from None
        unknown = set(file_values) - set(CONFIG_FIELDS)
        if unknown:
            raise BTSynthError(f"{args.config}: unknown config keys {sorted(unknown)}")
    values = {}
    for name in CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
        elif name in file_values:
            values[name] = file_values[name]
    values.setdefault("seed", 0)
    return SearchConfig(**values)


def _write_text(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="\n")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _load_pair(scenario_path: Path, library_path: Path):
    scenario = load_scenario_file(scenario_path)
    library = load_library_file(library_path)
    return scenario, library


def _build_policy(args, config, scenario, library):
    if config.policy != "remote":
        return None
    if args.remote_mock:
        transport = transport_from_name(args.remote_mock, scenario, library, config.k_candidates)
    else:
        url = args.remote_url or os.environ.get(ENDPOINT_ENV_VAR)
        if not url:
            raise BTSynthError(
                f"policy 'remote' needs --remote-url, ${ENDPOINT_ENV_VAR} or --remote-mock"
            )
        transport = HttpTransport(url)
    return RemotePolicy(transport)


def cmd_synth(args) -> int:
    config = load_run_config(args)
    scenario, library = _load_pair(args.scenario, args.library)
    policy = _build_policy(args, config, scenario, library)
    started = time.time()
    try:
        tree, report = synthesize(Task.for_scenario(scenario), scenario, library, config, policy=policy)
    except (BudgetExhaustedError, UnsolvableError) as exc:
        print(f"synthesis failed for {args.scenario}: {exc}", file=sys.stderr)
        report = getattr(exc, "report", None)
        if report is not None and args.report:
            _write_text(args.report, _json_text(report.to_json_dict()))
        return 1
    _write_text(args.out, serialize_bt_xml(tree))
    report_path = args.report or args.out.with_suffix(args.out.suffix + ".report.json")
    payload = report.to_json_dict()
    payload["scenario"] = scenario.name
    if args.timestamps:
        payload["elapsed_s"] = round(time.time() - started, 3)
    _write_text(report_path, _json_text(payload))
    print(f"wrote {args.out} ({report.expansions} expansions, reward {report.best_reward})")
    return 0


def cmd_simulate(args) -> int:
    scenario, library = _load_pair(args.scenario, args.library)
    try:
        tree = parse_bt_xml(args.tree.read_text(encoding="utf-8"))
    except BTSynthError as exc:
        print(f"error: {args.tree}: {exc}", file=sys.stderr)
        return 2
    states = [] if args.dump_states else None
    result = run_episode(tree, scenario, library, collect_states=states)
    if args.out:
        _write_text(args.out, _json_text(result.to_json_dict()))
    if args.trace:
        lines = []
        for i, entry in enumerate(result.trace):
            row = {
                "tick": entry.tick,
                "leaf": entry.leaf,
                "binding": entry.binding,
                "status": entry.status.value,
                "digest": entry.digest,
            }
            if states is not None:
                row["state"] = dict(states[i].assignment)
            lines.append(json.dumps(row, ensure_ascii=False))
        _write_text(args.trace, "".join(line + "\n" for line in lines))
    verdict = "success" if result.success else "failure"
    print(
        f"{verdict} after {result.ticks_used} ticks "
        f"(goal fraction {result.final_goal_fraction:.3f})"
    )
    return 0 if result.success else 1


def cmd_validate(args) -> int:
    library = load_library_file(args.library)
    try:
        tree = parse_bt_xml(args.tree.read_text(encoding="utf-8"))
    except BTSynthError as exc:
        print(f"error: {args.tree}: {exc}", file=sys.stderr)
        return 2
    report = validate_structure(tree, library)
    for line in report.lines():
        print(line)
    if report.ok:
        print(f"ok: {args.tree} ({tree.node_count} nodes, depth {tree.depth})")
        return 0
    return 1


def _scenario_dir_pairs(args):
    directory = args.scenarios
    if not directory.is_dir():
        raise BTSynthError(f"{directory}: not a directory")
    pairs = []
    for path in sorted(directory.glob("*.json")):
        if path.name.endswith(".library.json"):
            continue
        if args.library is not None:
            library_path = args.library
        else:
            library_path = path.with_name(path.stem + ".library.json")
            if not library_path.exists():
                raise BTSynthError(f"{path}: no sibling {library_path.name} and no --library given")
        pairs.append(_load_pair(path, library_path))
    if not pairs:
        raise BTSynthError(f"{directory}: no scenario files found")
    return pairs


def cmd_eval(args) -> int:
    config = load_run_config(args)
    pairs = _scenario_dir_pairs(args)
    try:
        ks = [int(part) for part in str(args.pass_k).split(",") if part.strip()]
    except ValueError:
        raise BTSynthError(f"--pass-k must be comma-separated integers, got {args.pass_k!r}") from None
    report = evaluate_generator(None, pairs, args.n, ks, config)
    if args.out:
        _write_text(args.out, report.to_json())
    print(report.render_table(), end="")
    return 0


def cmd_dataset(args) -> int:
    config = load_run_config(args)
    pairs = _scenario_dir_pairs(args)
    lines = []
    skipped = 0
    for scenario, library in pairs:
        try:
            tree, _ = synthesize(Task.for_scenario(scenario), scenario, library, config)
        except BTSynthError as exc:
            log.warning("skipping %s: %s", scenario.name, exc)
            skipped += 1
            continue
        used = sorted(
            {n.binding for n in iter_nodes(tree.root) if n.binding is not None}
        )
        record = DatasetRecord(
            name=scenario.name,
            description=scenario.description,
            xml=serialize_bt_xml(tree),
            nodes_meta=tuple((name, library.get(name).description) for name in used),
            implementations=tuple((name, library.get(name).implementation) for name in used),
        )
        record.check_cross_refs()
        lines.append(write_record(record))
    _write_text(args.out, "".join(line + "\n" for line in lines))
    print(f"wrote {len(lines)} records to {args.out}" + (f" ({skipped} skipped)" if skipped else ""))
    return 1 if skipped else 0


if __name__ == "__main__":
    sys.exit(main())
