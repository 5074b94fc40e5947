"""Event-sequence schemas: parsing, derivation, membership, behavior compile."""

import copy

import pytest

from tmkit import (
    TmError,
    check_membership,
    derive_trace,
    grammar_to_behavior,
    parse_grammar,
    serialize,
)
from tmkit.eventgrammar import TraceNode, atom_names, root_automaton

from conftest import corpus_text


def _grammar(rel):
    return parse_grammar(corpus_text(rel)).unwrap()


def _leaves(graph):
    parents = {n.parent for n in graph.nodes if n.parent is not None}
    return [n for n in graph.nodes if n.id not in parents]


# -- parsing and validation -------------------------------------------------------


def test_single_root_grammar_shape():
    g = _grammar("car_race/car_race.eg")
    assert [r.name for r in g.roots()] == ["car_race"]
    assert {r.name for r in g.rules} == {"car_race", "driving_a_car", "go_straight"}
    assert g.shares == [] and g.coordinates == []


def test_schema_grammar_shape():
    g = _grammar("car_race/steward.eg")
    assert [r.name for r in g.roots()] == ["Car", "Steward"]
    assert len(g.coordinates) == 2
    first = g.coordinates[0]
    assert (first.left_root, first.left_label) == ("Steward", "f")
    assert (first.right_root, first.right_label) == ("Car", "s")


def test_atom_alphabet_flattens_rule_references():
    g = _grammar("car_race/car_race.eg")
    assert atom_names(g, "car_race") == {
        "accelerate",
        "cruise",
        "decelerate",
        "stop",
        "turn_left",
        "turn_right",
    }


def test_first_rule_acts_as_root_when_none_is_marked():
    g = parse_grammar("schema s\nrule only : a , b ;\n").unwrap()
    assert [r.name for r in g.roots()] == ["only"]


@pytest.mark.parametrize(
    "text, code, fragment",
    [
        ("schema s\nROOT loop : a , loop ;\n", "E_VALIDATION", "recursive"),
        (
            "schema s\nROOT top : helper $x ;\nrule helper : a , b ;\n",
            "E_VALIDATION",
            "rule reference",
        ),
        ("schema s\nROOT t : a ;\nrule r : b ;\nrule r : c ;\n", "E_DUP_NAME", "twice"),
        (
            "schema s\nROOT A : a ;\nrule B : a ;\nSHARE ALL A B ;\n",
            "E_UNRESOLVED",
            "not a root",
        ),
        (
            "schema s\nROOT A : a $x ;\nROOT B : b $y ;\nCOORDINATE A $z PRECEDES B $y ;\n",
            "E_UNRESOLVED",
            "does not occur",
        ),
    ],
)
def test_grammar_diagnostics(text, code, fragment):
    result = parse_grammar(text)
    hits = [d for d in result.diagnostics if d.code == code]
    assert hits and fragment in hits[0].message


# -- the sentence automaton ---------------------------------------------------------


def test_automaton_accepts_and_rejects():
    g = _grammar("car_race/car_race.eg")
    auto = root_automaton(g, "car_race")
    assert auto.accepts(["accelerate", "stop"])
    assert auto.accepts(["cruise", "turn_left", "stop", "decelerate", "stop"])
    assert not auto.accepts(["stop"])  # a block must open with a speed action
    assert not auto.accepts([])  # at least one driving block
    assert not auto.accepts(["accelerate", "stop", "stop"])


# -- derivation ---------------------------------------------------------------------


def test_same_seed_yields_identical_bytes():
    g = _grammar("car_race/car_race.eg")
    a, _ = derive_trace(g, seed=3)
    b, _ = derive_trace(g, seed=3)
    assert serialize(a) == serialize(b)
    c, _ = derive_trace(g, seed=4)
    assert serialize(a) != serialize(c)


def test_repeat_bounds_pin_down_the_shape():
    g = _grammar("car_race/car_race.eg")
    graph, _ = derive_trace(g, seed=1, star_max=0, plus_max=1)
    names = [n.name for n in _leaves(graph)]
    assert len(names) == 2 and names[-1] == "stop"


def test_derivations_are_members():
    g = _grammar("car_race/car_race.eg")
    for seed in range(6):
        graph, _ = derive_trace(g, seed=seed)
        assert check_membership(g, graph).ok


def test_coordination_shortfall_warns_but_passes():
    g = _grammar("car_race/steward.eg")
    graph, diags = derive_trace(g, seed=0)
    assert [d.code for d in diags] == ["W_COORD_UNMATCHED"]
    report = check_membership(g, graph)
    assert report.ok
    assert [d.code for d in report.warnings] == ["W_COORD_UNMATCHED"]


def test_fully_matched_coordination_is_silent():
    g = _grammar("car_race/steward.eg")
    graph, diags = derive_trace(g, seed=1)
    assert diags == []
    report = check_membership(g, graph)
    assert report.ok and report.warnings == []


def test_derive_rejects_an_invalid_grammar():
    bad = parse_grammar("schema s\nROOT loop : a , loop ;\n").value
    with pytest.raises(TmError) as exc:
        derive_trace(bad, seed=0)
    assert exc.value.code == "E_VALIDATION"


def test_hard_coordinate_tangle_exhausts_attempts():
    g = parse_grammar(
        "schema knot\n"
        "ROOT A : x $a , y $b ;\n"
        "ROOT B : p $c , q $d ;\n"
        "COORDINATE A $b PRECEDES B $c ;\n"
        "COORDINATE B $d PRECEDES A $a ;\n"
    ).unwrap()
    with pytest.raises(TmError) as exc:
        derive_trace(g, seed=0, max_attempts=5)
    assert exc.value.code == "E_COORD_CYCLE"
    assert "after 5 attempts" in str(exc.value)


def test_opposite_order_share_exhausts_attempts():
    g = parse_grammar(
        "schema mirror\nROOT A : m , n ;\nROOT B : n , m ;\nSHARE ALL A B ;\n"
    ).unwrap()
    with pytest.raises(TmError) as exc:
        derive_trace(g, seed=0, max_attempts=4)
    assert exc.value.code == "E_SHARE_MISMATCH"


def test_resampling_recovers_from_a_bad_interleaving():
    # half of A's samples would close a cycle with the two coordinates;
    # rejection resampling must land on the other half for every seed
    g = parse_grammar(
        "schema wobble\n"
        "ROOT A : ( x $a , y $b | y $b , x $a ) ;\n"
        "ROOT B : p $c ;\n"
        "COORDINATE A $a PRECEDES B $c ;\n"
        "COORDINATE B $c PRECEDES A $b ;\n"
    ).unwrap()
    for seed in range(8):
        graph, _ = derive_trace(g, seed=seed)
        assert check_membership(g, graph).ok
        ordered = [n.name for n in sorted(graph.nodes, key=lambda n: n.id) if n.parent]
        assert ordered == ["x", "y", "p"]


def test_share_partner_row_is_a_projection():
    g = parse_grammar(
        "schema filtered\n"
        "ROOT Left : a , b , c ;\n"
        "ROOT Right : a , c ;\n"
        "SHARE ALL Left Right ;\n"
    ).unwrap()
    graph, _ = derive_trace(g, seed=0)
    by_root = {}
    for n in graph.nodes:
        if n.parent is not None:
            by_root.setdefault(graph.node(n.parent).name, []).append(n.name)
    assert by_root["Left"] == ["a", "b", "c"]
    assert by_root["Right"] == ["a", "c"]
    assert check_membership(g, graph).ok


# -- membership checking on tampered graphs ------------------------------------------


@pytest.fixture()
def race_member():
    g = _grammar("car_race/car_race.eg")
    graph, _ = derive_trace(g, seed=7)
    return g, graph


def test_dropped_order_edge_breaks_the_sequence(race_member):
    g, graph = race_member
    graph.precedes = graph.precedes[1:]
    report = check_membership(g, graph)
    assert not report.ok
    assert report.constraint == "sequence:car_race"
    assert "totally ordered" in report.reason


def test_foreign_leaf_name_breaks_the_sentence(race_member):
    g, graph = race_member
    _leaves(graph)[0].name = "teleport"
    report = check_membership(g, graph)
    assert not report.ok
    assert report.constraint == "sequence:car_race"
    assert "not a sentence" in report.reason


def test_duplicate_root_instance_is_rejected(race_member):
    g, graph = race_member
    graph.nodes.append(
        TraceNode(id=max(n.id for n in graph.nodes) + 1, name="car_race")
    )
    report = check_membership(g, graph)
    assert not report.ok
    assert "exactly one" in report.reason


def test_grandchild_depth_breaks_nesting(race_member):
    g, graph = race_member
    leaf = _leaves(graph)[0]
    graph.nodes.append(
        TraceNode(id=max(n.id for n in graph.nodes) + 1, name="stop", parent=leaf.id)
    )
    report = check_membership(g, graph)
    assert not report.ok
    assert report.constraint == "nesting"
    assert "deeper" in report.reason


def test_stray_top_level_node_breaks_nesting(race_member):
    g, graph = race_member
    graph.nodes.append(
        TraceNode(id=max(n.id for n in graph.nodes) + 1, name="stop")
    )
    report = check_membership(g, graph)
    assert not report.ok
    assert report.constraint == "nesting"
    assert "not a root" in report.reason


def test_reversed_coordination_is_pinned_to_the_clause():
    g = _grammar("car_race/steward.eg")
    graph, _ = derive_trace(g, seed=1)
    names = {n.id: n.name for n in graph.nodes}
    graph.precedes = [
        (a, b)
        for a, b in graph.precedes
        if not (names[a] == "wave_flag" and names[b] == "start")
    ]
    report = check_membership(g, graph)
    assert not report.ok
    assert report.constraint == "coordinate:0"
    assert "$f" in report.reason and "$s" in report.reason


# -- compiling a root to a behavior skeleton -----------------------------------------


def test_steward_car_root_compiles_to_a_lap_loop():
    g = _grammar("car_race/steward.eg")
    catalog, behavior = grammar_to_behavior(g, root_name="Car")
    assert behavior.nodes == {"line_up", "start", "lap", "finish", "crash"}
    assert behavior.initial == {"line_up"}
    assert sorted((e.src, e.dst) for e in behavior.edges) == [
        ("lap", "crash"),
        ("lap", "finish"),
        ("lap", "lap"),
        ("line_up", "start"),
        ("start", "lap"),
    ]
    # skeleton events carry no region yet
    assert set(catalog.events) == behavior.nodes
    assert all(ev.region is None for ev in catalog.events.values())


def test_duplicated_atoms_get_positional_names():
    g = _grammar("car_race/car_race.eg")
    _, behavior = grammar_to_behavior(g)
    assert len(behavior.nodes) == 9
    assert behavior.initial == {"accelerate_1", "cruise_1", "decelerate_1"}
    edges = {(e.src, e.dst) for e in behavior.edges}
    # closing a block loops back to the block openers, not the mid-block names
    assert {("stop", "accelerate_1"), ("stop", "cruise_1"), ("stop", "decelerate_1")} <= edges
    assert ("stop", "accelerate_2") not in edges
    assert ("turn_left", "stop") in edges


def test_behavior_compile_rejects_unknown_root():
    g = _grammar("car_race/car_race.eg")
    with pytest.raises(TmError) as exc:
        grammar_to_behavior(g, root_name="bicycle_race")
    assert exc.value.code == "E_UNRESOLVED"
