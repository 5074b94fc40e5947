"""Graphviz DOT rendering for models, behaviors, trace graphs and timelines.

Output is byte-deterministic: nodes and edges are emitted in declaration or
sorted order, never in hash order, so renders can be committed and diffed.
"""

from __future__ import annotations

from .events import BehaviorModel, EventCatalog
from .eventgrammar import TraceGraph
from .fluents import FluentTimeline
from .statics import FLOW, STAGE_ORDER, StaticModel, Thimac


def _q(text: str) -> str:
    return '"' + str(text).replace('"', '\\"') + '"'


def static_to_dot(model: StaticModel) -> str:
    """One cluster per thimac (nested), one node per effective stage.

    Flow arcs are solid, trigger arcs dashed.
    """
    lines = [f"digraph {_q(model.name)} {{", "  rankdir=LR;", "  node [shape=box];"]
    counter = [0]

    def emit(t: Thimac, path: str, indent: str):
        n = counter[0]
        counter[0] += 1
        lines.append(f"{indent}subgraph cluster_{n} {{")
        lines.append(f"{indent}  label={_q(t.name)};")
        for kind in STAGE_ORDER:
            if kind in t.effective_stages():
                ref = f"{path}.{kind.value}"
                lines.append(f"{indent}  {_q(ref)} [label={_q(kind.value)}];")
        for child in t.children:
            emit(child, f"{path}/{child.name}", indent + "  ")
        lines.append(f"{indent}}}")

    for root in model.roots:
        emit(root, root.name, "  ")
    for arc in model.arcs:
        style = "solid" if arc.kind == FLOW else "dashed"
        attrs = [f"style={style}"]
        if arc.label is not None:
            attrs.append(f"label={_q(arc.label)}")
        lines.append(f"  {_q(str(arc.src))} -> {_q(str(arc.dst))} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def behavior_to_dot(catalog: EventCatalog, behavior: BehaviorModel) -> str:
    """Events as ellipses, reversion nodes as dashed boxes, initial doubled.

    Edges into reversion nodes get diamond arrowheads; guards label edges.
    """
    lines = [f"digraph {_q(behavior.name)} {{", "  rankdir=LR;"]
    for node in sorted(behavior.nodes):
        attrs = []
        if node in catalog.negatives:
            attrs.append("shape=box")
            attrs.append("style=dashed")
        else:
            attrs.append("shape=ellipse")
        if node in behavior.initial:
            attrs.append("peripheries=2")
        event = catalog.events.get(node)
        if event is not None and event.description:
            attrs.append(f"tooltip={_q(event.description)}")
        lines.append(f"  {_q(node)} [{', '.join(attrs)}];")
    for edge in behavior.edges:
        attrs = []
        if edge.dst in catalog.negatives:
            attrs.append("arrowhead=diamond")
        if edge.guard is not None:
            attrs.append(f"label={_q(edge.guard.describe())}")
        suffix = f" [{', '.join(attrs)}]" if attrs else ""
        lines.append(f"  {_q(edge.src)} -> {_q(edge.dst)}{suffix};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def trace_graph_to_dot(graph: TraceGraph) -> str:
    """One cluster per root instance; precedes edges connect the leaves."""
    lines = [f"digraph {_q(graph.name)} {{", "  rankdir=LR;", "  node [shape=box];"]
    for i, root in enumerate(graph.roots()):
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f"    label={_q(root.name)};")
        for leaf in graph.children(root.id):
            label = leaf.name if leaf.label is None else f"{leaf.name} ${leaf.label}"
            lines.append(f"    n{leaf.id} [label={_q(label)}];")
        lines.append("  }")
    for a, b in graph.precedes:
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def timeline_to_dot(timeline: FluentTimeline) -> str:
    """A chain of time steps, each labeled with the fluents then holding."""
    lines = ["digraph timeline {", "  rankdir=LR;", "  node [shape=record];"]
    for i, state in enumerate(timeline.states):
        body = "\\n".join(sorted(state)) if state else "(none)"
        lines.append(f"  t{i} [label={_q(f't{i}|{body}')}];")
    for i in range(len(timeline.states) - 1):
        lines.append(f"  t{i} -> t{i + 1};")
    lines.append("}")
    return "\n".join(lines) + "\n"
