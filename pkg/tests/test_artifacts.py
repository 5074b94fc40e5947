"""JSON artifacts: canonical form, identity round trips, schema rejection."""

import json

import pytest

from tmkit import (
    Simulation,
    TmError,
    derive_trace,
    deserialize,
    from_document,
    parse_ec,
    parse_grammar,
    run_narrative,
    serialize,
)

from conftest import corpus_text, load_catalog, load_model, load_sim


@pytest.mark.parametrize(
    "rel",
    [
        "john/john.tm",
        "phone/phone.tm",
        "department/department.tm",
        "battlefield/battlefield.tm",
        "car_race/car_race.tm",
        "atm/atm.tm",
    ],
)
def test_static_model_survives_the_round_trip(rel):
    model = load_model(rel)
    assert deserialize(serialize(model)) == model


def test_catalog_survives_the_round_trip():
    model = load_model("phone/phone.tm")
    catalog = load_catalog("phone/phone.ev", model)
    assert deserialize(serialize(catalog)) == catalog


def test_trace_survives_the_round_trip():
    sim = load_sim("john/john.tm", "john/john.ev", "main")
    trace = sim.run()
    assert deserialize(serialize(trace)) == trace


def test_trace_graph_survives_the_round_trip():
    grammar = parse_grammar(corpus_text("car_race/car_race.eg")).unwrap()
    graph, _ = derive_trace(grammar, seed=3)
    assert deserialize(serialize(graph)) == graph


def test_timeline_survives_the_round_trip():
    domain = parse_ec(corpus_text("phone/phone.ec")).unwrap()
    narrative = json.loads(corpus_text("phone/calls.json"))["narrative"]
    timeline = run_narrative(domain, narrative)
    assert deserialize(serialize(timeline)) == timeline


def test_serialized_form_is_canonical_json():
    model = load_model("john/john.tm")
    text = serialize(model)
    assert text == json.dumps(json.loads(text), indent=2, sort_keys=True) + "\n"
    assert text.endswith("\n") and not text.endswith("\n\n")


def test_kind_field_is_required_and_checked():
    with pytest.raises(TmError) as exc:
        from_document({"name": "x"})
    assert exc.value.code == "E_SCHEMA"
    with pytest.raises(TmError) as exc:
        from_document({"kind": "mystery"})
    assert exc.value.code == "E_SCHEMA"


def test_broken_json_is_a_schema_error():
    with pytest.raises(TmError) as exc:
        deserialize("{nope")
    assert exc.value.code == "E_SCHEMA"


def test_missing_field_is_named_in_the_error():
    doc = json.loads(serialize(load_model("john/john.tm")))
    del doc["arcs"]
    with pytest.raises(TmError) as exc:
        from_document(doc)
    assert exc.value.code == "E_SCHEMA" and "arcs" in str(exc.value)


def test_unexpected_field_is_named_in_the_error():
    doc = json.loads(serialize(load_model("john/john.tm")))
    doc["extra"] = 1
    with pytest.raises(TmError) as exc:
        from_document(doc)
    assert exc.value.code == "E_SCHEMA" and "extra" in str(exc.value)


def test_malformed_stage_reference_is_located():
    doc = json.loads(serialize(load_model("john/john.tm")))
    doc["arcs"][0]["src"] = "no-dot-here"
    with pytest.raises(TmError) as exc:
        from_document(doc)
    assert exc.value.code == "E_SCHEMA" and "arcs[0]" in str(exc.value)


def test_foreign_objects_are_rejected():
    with pytest.raises(TmError) as exc:
        serialize(42)
    assert exc.value.code == "E_SCHEMA"
