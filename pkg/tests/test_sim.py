"""Token-flow simulation: firings, policies, reversions, trace conformance."""

import pytest

from tmkit import (
    ACTUAL,
    POLICY_FIRST,
    POLICY_SCRIPT,
    POTENTIAL,
    BehaviorModel,
    Effect,
    SimConfig,
    Simulation,
    TmError,
    check_trace,
    parse_events,
    parse_model,
    refine,
)

from conftest import load_catalog, load_config, load_model, load_sim


def _locations(sim):
    return sorted(str(t.location) for t in sim.state.tokens.values())


# -- walking the corpus ---------------------------------------------------------


def test_john_walk_fires_three_events():
    sim = load_sim("john/john.tm", "john/john.ev", "main")
    trace = sim.run()
    assert trace.firing_order() == ["EW", "EM", "ES"]
    assert trace.flags == []
    assert _locations(sim) == ["John/Walk.process", "Street/Move.process"]
    for event_id in ("EW", "EM", "ES"):
        assert sim.holds(event_id).state == ACTUAL


def test_john_trace_conforms_to_its_behavior():
    sim = load_sim("john/john.tm", "john/john.ev", "main")
    trace = sim.run()
    report = check_trace(trace, sim.catalog, sim.behavior)
    assert report.ok and report.violation_index is None


def test_atm_withdrawal_chain():
    sim = load_sim("atm/atm.tm", "atm/atm.ev", "withdrawal")
    trace = sim.run(policy=POLICY_FIRST)
    assert trace.firing_order() == [f"E{i}" for i in range(1, 11)]
    # one thing per leg, each resting at the end of its journey
    assert len(sim.state.tokens) == 10
    assert "Customer/Cash.receive" in _locations(sim)


def test_department_create_chain():
    sim = load_sim("department/department.tm", "department/create.ev", "create_dept")
    trace = sim.run()
    assert trace.firing_order() == ["E1a", "E1b", "E1c", "E1d"]
    assert _locations(sim) == ["Department/Kept.receive"]


def test_department_delete_loop():
    sim = load_sim(
        "department/department.tm",
        "department/delete.ev",
        "delete_b",
        "department/delete_config.json",
    )
    trace = sim.run(max_ticks=40)
    order = trace.firing_order()
    assert order.count("E2e") == 1  # the targeted record is dropped once
    assert order.count("E2f") == 2  # the other two are kept
    assert len(order) == 13 and trace.flags == []
    new_file = [
        t
        for t in sim.state.tokens.values()
        if str(t.location) == "Department/NewDeptFile.process"
    ]
    assert [t.payload["records"] for t in new_file] == ["A,C"]
    old_file = [
        t
        for t in sim.state.tokens.values()
        if str(t.location) == "Department/DeptFile.process"
    ]
    assert [t.payload["records"] for t in old_file] == [""]


def test_department_delete_digest_is_frozen():
    sim = load_sim(
        "department/department.tm",
        "department/delete.ev",
        "delete_b",
        "department/delete_config.json",
    )
    trace = sim.run(max_ticks=40)
    assert trace.final_state_digest == (
        "a6e4db39d620c63aa1424a08f62e16d6346c5e9ef31f6700754cb0e9a6df6cf1"
    )
    assert check_trace(trace, sim.catalog, sim.behavior).ok


# -- battlefield: coarse event vs its refinement ----------------------------------


def test_coarse_event_leaves_triggered_things_unmoved():
    sim = load_sim("battlefield/battlefield.tm", "battlefield/battlefield.ev", "advance")
    trace = sim.run()
    assert trace.firing_order() == ["B1", "B2", "B3"]
    # the barrage is triggered into being after B2's arcs have run, so it
    # rests at its create stage; the advance moved because B3 ran later
    assert _locations(sim) == [
        "Artillery/Barrage.create",
        "Artillery/Order.process",
        "Infantry/Advance.process",
    ]


def test_refined_run_advances_the_barrage():
    model = load_model("battlefield/battlefield.tm")
    catalog = load_catalog("battlefield/battlefield.ev", model)
    refined, diags = refine(catalog, "advance", "B2", "assault_detail")
    assert diags == []
    catalog.behaviors[refined.name] = refined
    sim = Simulation(model, catalog, refined.name)
    trace = sim.run()
    assert trace.firing_order() == ["B1", "B2a", "B2b", "B3"]
    assert _locations(sim) == [
        "Artillery/Barrage.process",
        "Artillery/Order.process",
        "Infantry/Advance.process",
    ]


# -- scripted choice --------------------------------------------------------------


def test_scripted_branch_fires_the_popped_node():
    sim = load_sim(
        "car_race/car_race.tm",
        "car_race/car_race.ev",
        "race",
        "car_race/race_config.json",
    )
    trace = sim.run(policy=POLICY_SCRIPT)
    assert trace.firing_order() == ["C1", "C2", "C2", "C3"]
    # one lap token per C2 pass, piled at the lap counter stage
    laps = [t for t in sim.state.tokens.values() if str(t.location) == "Car/Lap.process"]
    assert len(laps) == 2


def test_phone_dial_script_with_reversion():
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call", "phone/dial_config.json")
    trace = sim.run(policy=POLICY_SCRIPT)
    assert trace.firing_order() == ["E4", "E1", "R1", "E2", "E5", "E6", "E7", "E8"]
    assert sim.holds("E4").state == POTENTIAL  # reverted by R1
    assert sim.holds("E4").occurrences == 1  # the occurrence is history, kept
    assert sim.holds("E8").state == ACTUAL


def test_phone_hangup_script_reactualizes_the_hook():
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call", "phone/hangup_config.json")
    trace = sim.run(policy=POLICY_SCRIPT, max_ticks=6)
    assert trace.firing_order() == ["E4", "E1", "E2", "E3", "R2", "E4"]
    assert trace.flags == ["E_TICK_LIMIT"]
    assert sim.holds("E4").state == ACTUAL
    assert sim.holds("E4").occurrences == 2  # re-actualization counts again
    assert sim.holds("E2").state == POTENTIAL


def test_script_exhaustion_with_a_real_choice_raises():
    model = load_model("phone/phone.tm")
    catalog = load_catalog("phone/phone.ev", model)
    config = SimConfig(choice_script={"policy": ["E4", "E1"]})
    sim = Simulation(model, catalog, "call", config)
    with pytest.raises(TmError) as exc:
        sim.run(policy=POLICY_SCRIPT)
    assert exc.value.code == "E_SCRIPT_EXHAUSTED"


def test_first_policy_without_script_stops_deterministically():
    # E2's branch guards find no scripted choice, so no mark is produced and
    # the run drains after the reversion
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call")
    trace = sim.run(policy=POLICY_FIRST)
    assert trace.firing_order() == ["E4", "E1", "E2", "R1"]


def test_unknown_policy_rejected():
    sim = load_sim("john/john.tm", "john/john.ev", "main")
    with pytest.raises(TmError) as exc:
        sim.run(policy="zigzag")
    assert exc.value.code == "E_VALIDATION"


# -- firing discipline -------------------------------------------------------------


def test_fire_requires_an_activation_when_strict():
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call")
    with pytest.raises(TmError) as exc:
        sim.fire("E8")
    assert exc.value.code == "E_NOT_ENABLED"


def test_fire_unknown_node():
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call")
    with pytest.raises(TmError) as exc:
        sim.fire("ZZ")
    assert exc.value.code == "E_UNKNOWN_EVENT"
    with pytest.raises(TmError) as exc:
        sim.holds("ZZ")
    assert exc.value.code == "E_UNKNOWN_EVENT"


def test_reverting_a_potential_region():
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call")
    with pytest.raises(TmError) as exc:
        sim.fire("R1")  # strict: target is still potential, nothing to undo
    assert exc.value.code == "E_NOT_ENABLED"
    # non-strict reversion of a potential region is a recorded no-op
    entry = sim.fire("R1", strict=False)
    assert [d["kind"] for d in entry["deltas"]] == ["noop_reversion"]


def test_reversion_preserves_the_token_multiset():
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call")
    sim.fire("E4")
    sim.fire("E1")
    before = sim.token_multiset()
    entry = sim.fire("R1")
    assert sim.token_multiset() == before
    assert entry["deltas"] == [{"kind": "region_potentialized", "event": "E4"}]
    assert sim.holds("E4").state == POTENTIAL


def test_every_region_state_is_two_valued():
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call", "phone/dial_config.json")
    sim.run(policy=POLICY_SCRIPT)
    assert {rs.state for rs in sim.state.region_states.values()} <= {POTENTIAL, ACTUAL}


def test_durations_stretch_the_clock():
    model = load_model("john/john.tm")
    catalog = load_catalog("john/john.ev", model)
    sim = Simulation(model, catalog, "main", SimConfig(durations={"EW": 5}))
    trace = sim.run()
    assert [e["tick"] for e in trace.entries] == [0, 5, 6]


def test_tick_limit_flag_stops_the_run():
    sim = load_sim("john/john.tm", "john/john.ev", "main")
    trace = sim.run(max_ticks=2)
    assert trace.firing_order() == ["EW", "EM"]
    assert trace.flags == ["E_TICK_LIMIT"]


# -- enabledness and tokens ----------------------------------------------------------


def test_events_wait_for_inbound_things():
    model = load_model("john/john.tm")
    catalog = load_catalog("john/john.ev", model)
    catalog.behaviors["street_only"] = BehaviorModel(
        name="street_only", nodes={"ES"}, initial={"ES"}
    )
    sim = Simulation(model, catalog, "street_only")
    assert sim.enabled() == set()  # nothing to pull into the street yet
    trace = sim.run()
    assert trace.firing_order() == []


def test_strict_fire_without_inbound_token_raises():
    model = load_model("john/john.tm")
    catalog = load_catalog("john/john.ev", model)
    catalog.behaviors["street_only"] = BehaviorModel(
        name="street_only", nodes={"ES"}, initial={"ES"}
    )
    sim = Simulation(model, catalog, "street_only")
    with pytest.raises(TmError) as exc:
        sim.fire("ES")  # initially marked, but the walk never reached the street
    assert exc.value.code == "E_NO_TOKEN"


def test_lenient_mode_mints_at_the_boundary():
    model = load_model("john/john.tm")
    catalog = load_catalog("john/john.ev", model)
    catalog.behaviors["street_only"] = BehaviorModel(
        name="street_only", nodes={"ES"}, initial={"ES"}
    )
    sim = Simulation(model, catalog, "street_only", SimConfig(lenient=True))
    trace = sim.run()
    assert trace.firing_order() == ["ES"]
    assert "Street/Move.process" in _locations(sim)


def test_inputs_materialize_at_their_tick():
    config = load_config("department/delete_config.json")
    sim = load_sim(
        "department/department.tm",
        "department/delete.ev",
        "delete_b",
        "department/delete_config.json",
    )
    # the delete request is staged as an input, not an initial token
    assert len(sim.state.tokens) == len(config.initial_tokens)
    entry = sim.fire("E2a")
    created = [d for d in entry["deltas"] if d["kind"] == "token_created"]
    assert created[0]["stage"] == "Department/DeleteRequest.receive"
    assert created[0]["payload"] == {"target": "B"}


def test_occupied_create_stage_is_not_reminted():
    sim = load_sim(
        "car_race/car_race.tm",
        "car_race/car_race.ev",
        "race",
        "car_race/race_config.json",
    )
    sim.run(policy=POLICY_SCRIPT)
    grid = [t for t in sim.state.tokens.values() if str(t.location) == "Car/Grid.create"]
    assert len(grid) == 1  # C1 fired once; later firings leave it alone


# -- construction errors ----------------------------------------------------------


def test_unknown_behavior_name_rejected():
    model = load_model("john/john.tm")
    catalog = load_catalog("john/john.ev", model)
    with pytest.raises(TmError) as exc:
        Simulation(model, catalog, "stroll")
    assert exc.value.code == "E_UNRESOLVED"


def test_invalid_model_rejected_at_construction():
    model = parse_model(
        "model bad\n"
        "thimac A { machine: process, receive }\n"
        "flow A.process -> A.receive\n"
    ).unwrap()
    catalog = parse_events(
        'event X1 "a" { include A.process ; }\nbehavior b { initial X1 ; }\n', model
    ).unwrap()
    with pytest.raises(TmError) as exc:
        Simulation(model, catalog, "b")
    assert exc.value.code == "E_VALIDATION"


def test_initial_token_stage_must_resolve():
    model = load_model("john/john.tm")
    catalog = load_catalog("john/john.ev", model)
    config = SimConfig(initial_tokens=[("John/Hat.create", {})])
    with pytest.raises(TmError) as exc:
        Simulation(model, catalog, "main", config)
    assert exc.value.code == "E_UNRESOLVED"


def test_unknown_effect_op_rejected_at_fire_time():
    model = load_model("john/john.tm")
    catalog = load_catalog("john/john.ev", model)
    config = SimConfig(
        effects=[Effect(event="EW", op="bogus", field="x", to="John/Walk.process", to_field="y")]
    )
    sim = Simulation(model, catalog, "main", config)
    with pytest.raises(TmError) as exc:
        sim.fire("EW")
    assert exc.value.code == "E_VALIDATION"


# -- digests and trace checking -----------------------------------------------------


def test_digest_is_deterministic_per_state():
    first = load_sim("john/john.tm", "john/john.ev", "main")
    second = load_sim("john/john.tm", "john/john.ev", "main")
    assert first.digest() == second.digest()
    first.run()
    second.run()
    assert first.digest() == second.digest()
    third = load_sim("john/john.tm", "john/john.ev", "main")
    assert third.digest() != first.digest()


def test_tampered_trace_is_rejected_with_an_index():
    sim = load_sim("john/john.tm", "john/john.ev", "main")
    trace = sim.run()
    trace.entries[1]["node"] = "ES"  # ES had no activated edge at that point
    report = check_trace(trace, sim.catalog, sim.behavior)
    assert not report.ok
    assert report.violation_index == 1
    assert "ES" in report.reason


def test_trace_with_impossible_reversion_is_rejected():
    sim = load_sim("phone/phone.tm", "phone/phone.ev", "call", "phone/dial_config.json")
    trace = sim.run(policy=POLICY_SCRIPT)
    trace.entries[0]["node"] = "R1"  # reverting before E4 ever actualized
    report = check_trace(trace, sim.catalog, sim.behavior)
    assert not report.ok and report.violation_index == 0


def test_trace_against_the_wrong_behavior_is_rejected():
    sim = load_sim("john/john.tm", "john/john.ev", "main")
    trace = sim.run()
    other = BehaviorModel(name="other", nodes={"EW"}, initial={"EW"})
    report = check_trace(trace, sim.catalog, other)
    assert not report.ok
    assert "EM" in report.reason
