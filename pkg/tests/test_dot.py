"""Graphviz rendering: structure markers and byte determinism."""

from tmkit import (
    behavior_to_dot,
    derive_trace,
    parse_ec,
    parse_grammar,
    run_narrative,
    static_to_dot,
    timeline_to_dot,
    trace_graph_to_dot,
)
from tmkit.eventgrammar import TraceGraph, TraceNode
from tmkit.fluents import FluentTimeline

from conftest import corpus_text, load_catalog, load_model


def test_static_dot_nests_thimacs_as_clusters():
    dot = static_to_dot(load_model("phone/phone.tm"))
    # 3 roots + 9 children, plus Digits appearing under Caller and Exchange
    assert dot.count("subgraph cluster_") == 12
    assert dot.count("style=solid") == 15  # one per flow arc
    assert dot.count("style=dashed") == 4  # one per trigger arc
    assert '"Caller/Hook.process"' in dot
    assert dot.startswith('digraph "phone" {')


def test_static_dot_carries_arc_labels():
    dot = static_to_dot(load_model("atm/atm.tm"))
    assert "label=" in dot
    assert dot.count("subgraph cluster_") == 23


def test_behavior_dot_marks_the_structure():
    model = load_model("phone/phone.tm")
    catalog = load_catalog("phone/phone.ev", model)
    dot = behavior_to_dot(catalog, catalog.behaviors["call"])
    assert dot.count("arrowhead=diamond") == 2  # one per edge into a reversion
    assert dot.count("peripheries=2") == 1  # the single initial node
    assert dot.count("shape=box") == 2  # R1 and R2
    assert '"R1" [shape=box, style=dashed];' in dot
    assert '"E2" -> "E5" [label="script next"];' in dot
    assert 'tooltip="the caller lifts the receiver"' in dot


def test_behavior_dot_shows_field_guards():
    model = load_model("department/department.tm")
    catalog = load_catalog("department/delete.ev", model)
    dot = behavior_to_dot(catalog, catalog.behaviors["delete_b"])
    assert "name == 'B'" in dot.replace('\\"', "'") or "name ==" in dot


def test_trace_graph_dot_groups_roots_and_labels_leaves():
    g = parse_grammar(corpus_text("car_race/steward.eg")).unwrap()
    graph, _ = derive_trace(g, seed=1)
    dot = trace_graph_to_dot(graph)
    assert 'label="Car"' in dot and 'label="Steward"' in dot
    assert '[label="start $s"]' in dot  # coordination labels ride along
    assert "n2 -> n3;" in dot


def test_timeline_dot_renders_every_tick():
    domain = parse_ec(corpus_text("phone/phone.ec")).unwrap()
    timeline = run_narrative(domain, [[0, "PickUp(A, P1)"], [1, "Dial(A, P1, P2)"]])
    dot = timeline_to_dot(timeline)
    assert 't0 [label="t0|Idle(P1)\\nIdle(P2)"];' in dot
    assert "t1 -> t2;" in dot


def test_timeline_dot_marks_empty_states():
    timeline = FluentTimeline(states=(frozenset(), frozenset({"At(A)"})))
    dot = timeline_to_dot(timeline)
    assert 't0 [label="t0|(none)"];' in dot


def test_quotes_are_escaped():
    graph = TraceGraph(
        name='say "go"',
        nodes=[
            TraceNode(id=0, name="Root"),
            TraceNode(id=1, name='he said "stop"', parent=0, label="x"),
        ],
    )
    dot = trace_graph_to_dot(graph)
    assert 'digraph "say \\"go\\""' in dot
    assert 'n1 [label="he said \\"stop\\" $x"];' in dot


def test_rendering_is_byte_deterministic():
    model = load_model("phone/phone.tm")
    catalog = load_catalog("phone/phone.ev", model)
    again_model = load_model("phone/phone.tm")
    again_catalog = load_catalog("phone/phone.ev", again_model)
    assert static_to_dot(model) == static_to_dot(again_model)
    assert behavior_to_dot(catalog, catalog.behaviors["call"]) == behavior_to_dot(
        again_catalog, again_catalog.behaviors["call"]
    )
    assert static_to_dot(model) == static_to_dot(model)  # and on repeat calls
