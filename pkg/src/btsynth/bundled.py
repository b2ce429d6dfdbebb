"""Access to the scenario fixtures shipped inside the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .library import NodeLibrary, load_library
from .world import Scenario, load_scenario

_LIBRARY_SUFFIX = ".library.json"


def _root():
    return resources.files("btsynth").joinpath("scenarios")


def names() -> list[str]:
    out = []
    for entry in _root().iterdir():
        if entry.name.endswith(".json") and not entry.name.endswith(_LIBRARY_SUFFIX):
            out.append(entry.name[: -len(".json")])
    return sorted(out)


def scenario_path(name: str) -> Path:
    return Path(str(_root().joinpath(f"{name}.json")))


def library_path(name: str) -> Path:
    return Path(str(_root().joinpath(f"{name}{_LIBRARY_SUFFIX}")))


def load(name: str) -> tuple[Scenario, NodeLibrary]:
    scenario = load_scenario(scenario_path(name).read_text(encoding="utf-8"), name=name)
    library = load_library(library_path(name).read_text(encoding="utf-8"))
    return scenario, library


def load_all() -> list[tuple[Scenario, NodeLibrary]]:
    return [load(name) for name in names()]
