"""JSON persistence for every kit artifact, keyed by a "kind" tag.

Serialization is canonical (sorted keys, two-space indent, trailing newline)
so artifacts diff cleanly.  Deserialization is strict: unknown kinds, missing
fields and unexpected fields all raise TmError(E_SCHEMA) rather than being
silently dropped.
"""

from __future__ import annotations

import json
from typing import Union

from .diagnostics import TmError
from .events import (
    FIELD_EQ,
    FIELD_NEQ,
    SCRIPTED,
    BehaviorModel,
    Edge,
    Event,
    EventCatalog,
    Guard,
    NegativeEventRef,
    Region,
)
from .eventgrammar import TraceGraph, TraceNode
from .fluents import FluentTimeline
from .sim import Trace
from .statics import STAGE_ORDER, Arc, StageKind, StageRef, StaticModel, Thimac

Artifact = Union[
    StaticModel, EventCatalog, Trace, TraceGraph, FluentTimeline
]


def _need(doc: dict, keys: set[str], optional: set[str], where: str) -> None:
    if not isinstance(doc, dict):
        raise TmError("E_SCHEMA", f"{where}: expected an object")
    missing = keys - set(doc)
    if missing:
        raise TmError("E_SCHEMA", f"{where}: missing field(s) {sorted(missing)}")
    extra = set(doc) - keys - optional
    if extra:
        raise TmError("E_SCHEMA", f"{where}: unexpected field(s) {sorted(extra)}")


def _stage_ref(text: str, where: str) -> StageRef:
    path, dot, stage = str(text).rpartition(".")
    if not dot or stage not in [k.value for k in StageKind]:
        raise TmError("E_SCHEMA", f"{where}: malformed stage reference {text!r}")
    return StageRef(path, StageKind(stage))


# ---------------------------------------------------------------------------
# static models


def _thimac_doc(t: Thimac) -> dict:
    doc: dict = {"name": t.name}
    if t.stages:
        doc["stages"] = [k.value for k in STAGE_ORDER if k in t.stages]
    if t.children:
        doc["children"] = [_thimac_doc(c) for c in t.children]
    return doc


def _thimac_from(doc: dict, where: str) -> Thimac:
    _need(doc, {"name"}, {"stages", "children"}, where)
    stages = set()
    for s in doc.get("stages", []):
        if s not in [k.value for k in StageKind]:
            raise TmError("E_SCHEMA", f"{where}: unknown stage {s!r}")
        stages.add(StageKind(s))
    return Thimac(
        name=doc["name"],
        stages=stages,
        children=[
            _thimac_from(c, f"{where}.children[{i}]")
            for i, c in enumerate(doc.get("children", []))
        ],
    )


def model_to_document(model: StaticModel) -> dict:
    arcs = []
    for a in model.arcs:
        arc_doc = {"id": a.id, "kind": a.kind, "src": str(a.src), "dst": str(a.dst)}
        if a.label is not None:
            arc_doc["label"] = a.label
        arcs.append(arc_doc)
    return {
        "kind": "static_model",
        "name": model.name,
        "thimacs": [_thimac_doc(t) for t in model.roots],
        "arcs": arcs,
    }


def model_from_document(doc: dict) -> StaticModel:
    _need(doc, {"kind", "name", "thimacs", "arcs"}, set(), "static_model")
    roots = [_thimac_from(t, f"thimacs[{i}]") for i, t in enumerate(doc["thimacs"])]
    arcs = []
    for i, a in enumerate(doc["arcs"]):
        where = f"arcs[{i}]"
        _need(a, {"id", "kind", "src", "dst"}, {"label"}, where)
        if a["kind"] not in ("flow", "trigger"):
            raise TmError("E_SCHEMA", f"{where}: unknown arc kind {a['kind']!r}")
        arcs.append(
            Arc(
                id=int(a["id"]),
                kind=a["kind"],
                src=_stage_ref(a["src"], where),
                dst=_stage_ref(a["dst"], where),
                label=a.get("label"),
            )
        )
    return StaticModel(name=doc["name"], roots=roots, arcs=arcs)


# ---------------------------------------------------------------------------
# catalogs


def _guard_doc(g: Guard) -> dict:
    if g.kind == SCRIPTED:
        return {"kind": "scripted", "key": g.script_key}
    op = "eq" if g.kind == FIELD_EQ else "neq"
    return {"kind": op, "field": g.field, "value": g.value}


def _guard_from(doc: dict, where: str) -> Guard:
    if doc.get("kind") == "scripted":
        _need(doc, {"kind", "key"}, set(), where)
        return Guard(kind=SCRIPTED, script_key=doc["key"])
    if doc.get("kind") in ("eq", "neq"):
        _need(doc, {"kind", "field", "value"}, set(), where)
        if not isinstance(doc["value"], (str, int)):
            raise TmError("E_SCHEMA", f"{where}: guard value must be string or int")
        kind = FIELD_EQ if doc["kind"] == "eq" else FIELD_NEQ
        return Guard(kind=kind, field=doc["field"], value=doc["value"])
    raise TmError("E_SCHEMA", f"{where}: unknown guard kind {doc.get('kind')!r}")


def catalog_to_document(catalog: EventCatalog) -> dict:
    events = []
    for eid in sorted(catalog.events):
        e = catalog.events[eid]
        e_doc: dict = {"id": e.id, "description": e.description}
        if e.time_slot is not None:
            e_doc["time"] = e.time_slot
        if e.region is not None:
            e_doc["region"] = {
                "stages": [str(s) for s in e.region.sorted_stages()],
                "arcs": sorted(e.region.arcs),
            }
        events.append(e_doc)
    negatives = [
        {"id": n.id, "target": n.target}
        for n in sorted(catalog.negatives.values(), key=lambda n: n.id)
    ]
    behaviors = []
    for name in sorted(catalog.behaviors):
        b = catalog.behaviors[name]
        edges = []
        for e in b.edges:
            e_doc = {"src": e.src, "dst": e.dst}
            if e.guard is not None:
                e_doc["guard"] = _guard_doc(e.guard)
            edges.append(e_doc)
        behaviors.append(
            {
                "name": b.name,
                "nodes": sorted(b.nodes),
                "initial": sorted(b.initial),
                "edges": edges,
            }
        )
    return {
        "kind": "catalog",
        "events": events,
        "negatives": negatives,
        "behaviors": behaviors,
    }


def catalog_from_document(doc: dict) -> EventCatalog:
    _need(doc, {"kind", "events", "negatives", "behaviors"}, set(), "catalog")
    catalog = EventCatalog()
    for i, e in enumerate(doc["events"]):
        where = f"events[{i}]"
        _need(e, {"id", "description"}, {"time", "region"}, where)
        region = None
        if "region" in e:
            _need(e["region"], {"stages", "arcs"}, set(), f"{where}.region")
            region = Region(
                stages=frozenset(
                    _stage_ref(s, f"{where}.region") for s in e["region"]["stages"]
                ),
                arcs=frozenset(int(a) for a in e["region"]["arcs"]),
            )
        catalog.events[e["id"]] = Event(
            id=e["id"],
            description=e["description"],
            time_slot=e.get("time"),
            region=region,
        )
    for i, n in enumerate(doc["negatives"]):
        _need(n, {"id", "target"}, set(), f"negatives[{i}]")
        catalog.negatives[n["id"]] = NegativeEventRef(id=n["id"], target=n["target"])
    for i, b in enumerate(doc["behaviors"]):
        where = f"behaviors[{i}]"
        _need(b, {"name", "nodes", "initial", "edges"}, set(), where)
        edges = []
        for j, e in enumerate(b["edges"]):
            _need(e, {"src", "dst"}, {"guard"}, f"{where}.edges[{j}]")
            guard = None
            if "guard" in e:
                guard = _guard_from(e["guard"], f"{where}.edges[{j}].guard")
            edges.append(Edge(src=e["src"], dst=e["dst"], guard=guard))
        catalog.behaviors[b["name"]] = BehaviorModel(
            name=b["name"],
            nodes=set(b["nodes"]),
            edges=edges,
            initial=set(b["initial"]),
        )
    return catalog


# ---------------------------------------------------------------------------
# traces, trace graphs, timelines


def trace_from_document(doc: dict) -> Trace:
    _need(
        doc,
        {"kind", "model", "behavior", "policy", "entries", "final_state_digest"},
        {"flags"},
        "trace",
    )
    entries = []
    for i, e in enumerate(doc["entries"]):
        _need(e, {"tick", "node", "deltas"}, set(), f"entries[{i}]")
        entries.append({"tick": int(e["tick"]), "node": e["node"], "deltas": e["deltas"]})
    return Trace(
        model=doc["model"],
        behavior=doc["behavior"],
        policy=doc["policy"],
        entries=entries,
        final_state_digest=doc["final_state_digest"],
        flags=list(doc.get("flags", [])),
    )


def trace_graph_from_document(doc: dict) -> TraceGraph:
    _need(doc, {"kind", "name", "nodes", "precedes"}, set(), "trace_graph")
    nodes = []
    for i, n in enumerate(doc["nodes"]):
        _need(n, {"id", "name"}, {"parent", "label"}, f"nodes[{i}]")
        nodes.append(
            TraceNode(
                id=int(n["id"]),
                name=n["name"],
                parent=n.get("parent"),
                label=n.get("label"),
            )
        )
    precedes = []
    for i, p in enumerate(doc["precedes"]):
        if not isinstance(p, list) or len(p) != 2:
            raise TmError("E_SCHEMA", f"precedes[{i}]: expected a [src, dst] pair")
        precedes.append((int(p[0]), int(p[1])))
    return TraceGraph(name=doc["name"], nodes=nodes, precedes=precedes)


def timeline_from_document(doc: dict) -> FluentTimeline:
    _need(doc, {"kind", "states"}, set(), "timeline")
    return FluentTimeline(states=tuple(frozenset(s) for s in doc["states"]))


# ---------------------------------------------------------------------------
# front door


def to_document(obj: Artifact) -> dict:
    if isinstance(obj, StaticModel):
        return model_to_document(obj)
    if isinstance(obj, EventCatalog):
        return catalog_to_document(obj)
    if isinstance(obj, (Trace, TraceGraph, FluentTimeline)):
        return obj.to_document()
    raise TmError("E_SCHEMA", f"cannot serialize {type(obj).__name__}")


def serialize(obj: Artifact) -> str:
    return json.dumps(to_document(obj), indent=2, sort_keys=True) + "\n"


_LOADERS = {
    "static_model": model_from_document,
    "catalog": catalog_from_document,
    "trace": trace_from_document,
    "trace_graph": trace_graph_from_document,
    "timeline": timeline_from_document,
}


def from_document(doc: dict) -> Artifact:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise TmError("E_SCHEMA", "artifact documents need a 'kind' field")
    loader = _LOADERS.get(doc["kind"])
    if loader is None:
        raise TmError("E_SCHEMA", f"unknown artifact kind {doc['kind']!r}")
    return loader(doc)


def deserialize(text: str) -> Artifact:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TmError("E_SCHEMA", f"not valid JSON: {exc}") from exc
    return from_document(doc)
