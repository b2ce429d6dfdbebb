"""Remote expansion policy: wire contract, transport, and in-process mocks.

One endpoint, request/response over UTF-8 JSON.  The request carries the
task, the serialized partial tree, the targeted Open node and its subgoal,
the top-k retrieved definitions, the operator catalog, a role-tagged prompt
(rendered from a named template file) and accumulated feedback terms:

    {"task": {...}, "tree_xml": "...", "target": "...", "subgoal": {...},
     "retrieved_nodes": [...], "operators": [...], "role": {...},
     "feedback": [...]}

The response is ``{"candidates": [{"operator", "target", "payload"}, ...]}``.
Every candidate is schema-validated and any candidate referencing a
definition outside the library is dropped with a logged warning - results
stay confined to the pre-established node set, so no out-of-library leaf can
ever enter a synthesized tree.  Transport failures and unusable payloads are
retried once, then surface as RemoteUnavailable / MalformedResponse.

Mocks implement the same contract in process: EchoMock binds the first
retrieved definition, RegressionBridgeMock answers with the deterministic
regression policy (useful for differential tests of the wire path), and
ScriptedMock replays canned responses.
"""

from __future__ import annotations

import json
import logging
import string
import urllib.error
import urllib.request
from importlib import resources

from .btxml import parse_bt_xml, serialize_bt_xml
from .candidates import (
    ExpansionCandidate,
    candidate_from_wire,
    candidate_to_wire,
    leaf_names_in,
)
from .core import SubGoal
from .errors import (
    EmptyAfterFilteringError,
    MalformedResponseError,
    RemoteUnavailableError,
    SchemaViolationError,
)
from .library import NodeLibrary, retrieve
from .predicates import literals_text
from . import regression

log = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "BTSYNTH_REMOTE_URL"


def load_role_prompt(role: str) -> str:
    path = resources.files("btsynth").joinpath(f"templates/{role}.txt")
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SchemaViolationError(f"no prompt template for role {role!r}") from None


def render_prompt(role: str, task_description: str, subgoal_text: str) -> str:
    template = string.Template(load_role_prompt(role))
    return template.safe_substitute(task=task_description, subgoal=subgoal_text)


def encode_request(state, target_name: str, subgoal: SubGoal, ctx) -> dict:
    """Build the wire request for one expansion call."""
    query_parts = [subgoal.description] + state.feedback_terms
    query = " ".join(p for p in query_parts if p)
    retrieved = retrieve(query or subgoal.text(), ctx.config.k_candidates, ctx.library)
    subgoal_text = subgoal.text()
    return {
        "task": {
            "goal": literals_text(ctx.scenario.goal),
            "description": ctx.scenario.description,
        },
        "tree_xml": serialize_bt_xml(state.tree),
        "target": target_name,
        "subgoal": {
            "literals": [literals_text((g,)) for g in subgoal.literals],
            "description": subgoal.description,
            "assumptions": dict(subgoal.assumptions),
        },
        "retrieved_nodes": [
            {
                "type": d.node_type,
                "name": d.name,
                "description": d.description,
                "binding": d.binding,
                "score": score,
            }
            for d, score in retrieved
        ],
        "operators": [
            {"kind": op.kind, "min_children": op.min_children, "max_children": op.max_children}
            for op in ctx.library.operators
        ],
        "role": {
            "name": ctx.config.role,
            "prompt": render_prompt(ctx.config.role, ctx.scenario.description, subgoal_text),
        },
        "feedback": list(state.feedback_terms),
    }


def parse_response(payload, library: NodeLibrary, target: str):
    """Decode and filter candidates; returns (kept, dropped-reason pairs).

    Raises MalformedResponseError when the payload shape is unusable at the
    top level; individual bad candidates are dropped, not fatal.
    """
    if not isinstance(payload, dict) or not isinstance(payload.get("candidates"), list):
        raise MalformedResponseError("response must be an object with a 'candidates' list")
    kept: list[ExpansionCandidate] = []
    dropped: list[tuple[dict, str]] = []
    for obj in payload["candidates"]:
        try:
            cand = candidate_from_wire(obj, target)
        except SchemaViolationError as exc:
            dropped.append((obj, str(exc)))
            continue
        if cand.target != target:
            dropped.append((obj, f"candidate targets {cand.target!r}, expected {target!r}"))
            continue
        unknown = sorted({n for n in leaf_names_in(cand.template) if library.get(n) is None})
        if unknown:
            dropped.append((obj, f"unknown definitions {unknown}"))
            continue
        kept.append(cand)
    return kept, dropped


class RemotePolicy:
    """Expansion policy backed by a request/response transport.

    ``transport`` is any callable taking the request dict and returning the
    response dict; HttpTransport and the mocks below all qualify.  Transport
    errors and malformed payloads are retried once.
    """

    def __init__(self, transport):
        self.transport = transport

    def propose(self, state, target_name: str, ctx):
        from .engine import _find_open  # local import to avoid a cycle

        target = _find_open(state.tree.root, target_name)
        request = encode_request(state, target_name, target.subgoal, ctx)
        payload = self._call(request)
        try:
            kept, dropped = parse_response(payload, ctx.library, target_name)
        except MalformedResponseError:
            payload = self._call(request)  # one retry on bad payload
            kept, dropped = parse_response(payload, ctx.library, target_name)
        for obj, reason in dropped:
            log.warning("dropped remote candidate (%s): %s", reason, json.dumps(obj, sort_keys=True))
        if not kept:
            raise EmptyAfterFilteringError(
                f"all {len(dropped)} remote candidates were dropped for {target_name!r}"
            )
        return kept

    def _call(self, request: dict) -> dict:
        try:
            return self.transport(request)
        except (RemoteUnavailableError, MalformedResponseError):
            raise
        except Exception as first:
            log.warning("remote transport failed (%s); retrying once", first)
            try:
                return self.transport(request)
            except Exception as second:
                raise RemoteUnavailableError(f"remote endpoint unreachable: {second}") from None


class HttpTransport:
    """POST the request JSON to a single endpoint; JSON comes back."""

    def __init__(self, url: str, timeout: float = 10.0):
        self.url = url
        self.timeout = timeout

    def __call__(self, request: dict) -> dict:
        data = json.dumps(request).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=data, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as response:
                body = response.read()
        except (urllib.error.URLError, OSError) as exc:
            raise ConnectionError(str(exc)) from None
        try:
            return json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, ValueError) as exc:
            raise MalformedResponseError(f"endpoint returned non-JSON body: {exc}") from None


# ---------------------------------------------------------------------------
# In-process mocks (same contract, no network)
# ---------------------------------------------------------------------------


class EchoMock:
    """Bind the first retrieved definition as a leaf; deterministic."""

    def __call__(self, request: dict) -> dict:
        retrieved = request.get("retrieved_nodes") or []
        if not retrieved:
            return {"candidates": []}
        return {
            "candidates": [
                {
                    "operator": "BindLeaf",
                    "target": request["target"],
                    "payload": {"leaf": retrieved[0]["name"]},
                }
            ]
        }


class RegressionBridgeMock:
    """Answer with the regression policy, round-tripped through the wire.

    Reconstructs the subgoal from the request alone, so responses depend
    only on what actually crossed the wire; with the same candidate breadth
    as the in-process policy this makes remote runs reproduce oracle runs.
    """

    def __init__(self, scenario, library, k_candidates: int = 8):
        self.scenario = scenario
        self.library = library
        self.k_candidates = k_candidates

    def __call__(self, request: dict) -> dict:
        tree = parse_bt_xml(request["tree_xml"])
        target_name = request["target"]
        target = next(
            n
            for n in _walk(tree.root)
            if n.instance_name == target_name and n.kind == "Open"
        )
        try:
            cands = regression.propose(
                target_name,
                target.subgoal,
                self.scenario,
                self.library,
                self.k_candidates,
                tuple(request.get("feedback") or ()),
            )
        except Exception:
            return {"candidates": []}
        return {"candidates": [candidate_to_wire(c) for c in cands]}


def _walk(node):
    yield node
    for child in node.children:
        yield from _walk(child)


class ScriptedMock:
    """Replay canned responses (a list reused cyclically, or a callable)."""

    def __init__(self, responses):
        self.responses = responses
        self.calls = 0

    def __call__(self, request: dict) -> dict:
        self.calls += 1
        if callable(self.responses):
            return self.responses(request)
        return self.responses[(self.calls - 1) % len(self.responses)]


def transport_from_name(name: str, scenario=None, library=None, k_candidates: int = 8):
    """CLI helper: 'echo' and 'oracle' mocks by name."""
    if name == "echo":
        return EchoMock()
    if name == "oracle":
        return RegressionBridgeMock(scenario, library, k_candidates)
    raise SchemaViolationError(f"unknown remote mock {name!r}")
