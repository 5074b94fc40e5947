"""Events, negative events and behavior graphs over a static model.

An event pairs a region (a sub-diagram of the static model: stages plus the
arcs between them) with an optional coarse time slot.  A negative event R_i
is the Lupascian reversion of event E_i: firing it returns E_i's region to
potentiality without destroying any tokens.  Behaviors are directed graphs
(cycles allowed) over event and negative-event ids with guarded edges.

Events file (.ev) shape:

    event E1 "Creating a new department" time "this morning" {
      include Department.create, Department/Name.create ;
      include flow Department/Name.create -> Department/Name.release ;
    }
    negative R1 of E1
    behavior main {
      initial E1 ;
      E1 -> E2 ;
      E2 -> E3 when name == "B" ;
      E2 -> E4 when name != "B" ;
      E4 -> E1 when script retry ;
    }
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .diagnostics import Diagnostic, ParseResult, TmError, WARNING, sort_diagnostics
from .lex import (
    IDENT,
    NUMBER,
    STRING,
    SYMBOL,
    SyntaxProblem,
    TokenStream,
    tokenize,
)
from .statics import Arc, StageRef, StaticModel
from . import dsl

SYMBOLS = ["->", "==", "!=", "{", "}", ":", ",", ".", "/", ";"]

FIELD_EQ = "field_eq"
FIELD_NEQ = "field_neq"
SCRIPTED = "scripted"

# scripted guard keys with this prefix are resolved against region states
# (all listed event ids actual) instead of consuming the choice script
HOLDS_PREFIX = "holds:"


@dataclass(frozen=True)
class Guard:
    kind: str
    field: Optional[str] = None
    value: Union[str, int, None] = None
    script_key: Optional[str] = None

    def describe(self) -> str:
        if self.kind == FIELD_EQ:
            return f"{self.field} == {self.value!r}"
        if self.kind == FIELD_NEQ:
            return f"{self.field} != {self.value!r}"
        return f"script {self.script_key}"


@dataclass(frozen=True)
class Region:
    stages: frozenset[StageRef] = frozenset()
    arcs: frozenset[int] = frozenset()

    def sorted_stages(self) -> list[StageRef]:
        return sorted(self.stages, key=str)


@dataclass
class Event:
    id: str
    description: str = ""
    time_slot: Optional[str] = None
    region: Optional[Region] = None  # None = unbound skeleton event


@dataclass
class NegativeEventRef:
    id: str
    target: str  # id of the reverted event


@dataclass
class Edge:
    src: str
    dst: str
    guard: Optional[Guard] = None


@dataclass
class BehaviorModel:
    name: str
    nodes: set[str] = field(default_factory=set)
    edges: list[Edge] = field(default_factory=list)
    initial: set[str] = field(default_factory=set)

    def out_edges(self, node: str) -> list[Edge]:
        return [e for e in self.edges if e.src == node]

    def in_edges(self, node: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == node]

    def terminals(self) -> list[str]:
        srcs = {e.src for e in self.edges}
        return sorted(n for n in self.nodes if n not in srcs)


@dataclass
class EventCatalog:
    events: dict[str, Event] = field(default_factory=dict)
    negatives: dict[str, NegativeEventRef] = field(default_factory=dict)
    behaviors: dict[str, BehaviorModel] = field(default_factory=dict)

    def node_exists(self, node_id: str) -> bool:
        return node_id in self.events or node_id in self.negatives

    def event_for_node(self, node_id: str) -> Event:
        """The event whose region a behavior node acts on (R follows target)."""
        if node_id in self.events:
            return self.events[node_id]
        neg = self.negatives[node_id]
        return self.events[neg.target]


# ---------------------------------------------------------------------------
# parsing


def _find_arc(model: StaticModel, kind: str, src: StageRef, dst: StageRef) -> Optional[Arc]:
    for arc in model.arcs:
        if arc.kind == kind and arc.src == src and arc.dst == dst:
            return arc
    return None


def _parse_region_block(ts: TokenStream, model: StaticModel, diags: list[Diagnostic]) -> Region:
    stages: set[StageRef] = set()
    arcs: set[int] = set()
    ts.expect(SYMBOL, "{")
    while not ts.check(SYMBOL, "}"):
        ts.expect_keyword("include")
        if ts.check(IDENT, "flow") or ts.check(IDENT, "trigger"):
            kind_tok = ts.next()
            src, src_tok = dsl._parse_stage_ref(ts)
            ts.expect(SYMBOL, "->")
            dst, _ = dsl._parse_stage_ref(ts)
            arc = _find_arc(model, kind_tok.text, src, dst)
            if arc is None:
                diags.append(
                    Diagnostic(
                        "E_UNRESOLVED",
                        f"no {kind_tok.text} arc {src} -> {dst} in model",
                        span=src_tok.span,
                    )
                )
            else:
                arcs.add(arc.id)
        else:
            while True:
                ref, ref_tok = dsl._parse_stage_ref(ts)
                if not model.has_stage(ref):
                    diags.append(
                        Diagnostic(
                            "E_UNRESOLVED",
                            f"region stage {ref} does not resolve",
                            span=ref_tok.span,
                        )
                    )
                else:
                    stages.add(ref)
                if not ts.accept(SYMBOL, ","):
                    break
        ts.expect(SYMBOL, ";")
    ts.expect(SYMBOL, "}")
    return Region(stages=frozenset(stages), arcs=frozenset(arcs))


def _parse_guard(ts: TokenStream) -> Guard:
    if ts.accept_keyword("script"):
        return Guard(kind=SCRIPTED, script_key=ts.expect(IDENT).text)
    field_tok = ts.expect(IDENT)
    if ts.accept(SYMBOL, "=="):
        op = FIELD_EQ
    else:
        ts.expect(SYMBOL, "!=")
        op = FIELD_NEQ
    val_tok = ts.next()
    if val_tok.kind == STRING:
        value: Union[str, int] = val_tok.text
    elif val_tok.kind == NUMBER:
        value = int(val_tok.text)
    else:
        raise SyntaxProblem(
            f"guard value must be a string or number, found {val_tok.text!r}",
            val_tok.line,
            val_tok.col,
        )
    return Guard(kind=op, field=field_tok.text, value=value)


def _parse_behavior(ts: TokenStream, catalog: EventCatalog, diags: list[Diagnostic]) -> BehaviorModel:
    name_tok = ts.expect(IDENT)
    behavior = BehaviorModel(name=name_tok.text)
    ts.expect(SYMBOL, "{")
    ts.expect_keyword("initial")
    while True:
        node_tok = ts.expect(IDENT)
        behavior.initial.add(node_tok.text)
        behavior.nodes.add(node_tok.text)
        if not ts.accept(SYMBOL, ","):
            break
    ts.expect(SYMBOL, ";")
    while not ts.check(SYMBOL, "}"):
        src = ts.expect(IDENT).text
        ts.expect(SYMBOL, "->")
        dst = ts.expect(IDENT).text
        guard = None
        if ts.accept_keyword("when"):
            guard = _parse_guard(ts)
        ts.expect(SYMBOL, ";")
        behavior.nodes.update((src, dst))
        behavior.edges.append(Edge(src=src, dst=dst, guard=guard))
    ts.expect(SYMBOL, "}")
    return behavior


def parse_events(text: str, model: StaticModel) -> ParseResult:
    """Parse an events file against a static model.

    Diagnostics: E_SYNTAX, E_UNRESOLVED (stage/arc/event refs), E_DUP_NAME
    (duplicate event or negative ids), E_REGION_EMPTY, E_REGION_CLOSURE,
    E_DOUBLE_NEG, plus behavior-level warnings from validate_behavior.
    """
    catalog = EventCatalog()
    diags: list[Diagnostic] = []
    try:
        ts = TokenStream(tokenize(text, SYMBOLS))
        while not ts.at_end():
            if ts.accept_keyword("event"):
                id_tok = ts.expect(IDENT)
                desc = ts.expect(STRING).text
                time_slot = None
                if ts.accept_keyword("time"):
                    time_slot = ts.expect(STRING).text
                region = _parse_region_block(ts, model, diags)
                if id_tok.text in catalog.events or id_tok.text in catalog.negatives:
                    diags.append(
                        Diagnostic(
                            "E_DUP_NAME",
                            f"duplicate event id {id_tok.text!r}",
                            span=id_tok.span,
                        )
                    )
                    continue
                catalog.events[id_tok.text] = Event(
                    id=id_tok.text, description=desc, time_slot=time_slot, region=region
                )
            elif ts.accept_keyword("negative"):
                id_tok = ts.expect(IDENT)
                ts.expect_keyword("of")
                target_tok = ts.expect(IDENT)
                if id_tok.text in catalog.negatives or id_tok.text in catalog.events:
                    diags.append(
                        Diagnostic(
                            "E_DUP_NAME",
                            f"duplicate negative id {id_tok.text!r}",
                            span=id_tok.span,
                        )
                    )
                elif target_tok.text in catalog.negatives:
                    diags.append(
                        Diagnostic(
                            "E_DOUBLE_NEG",
                            f"cannot negate negative event {target_tok.text!r}",
                            span=target_tok.span,
                        )
                    )
                elif target_tok.text not in catalog.events:
                    diags.append(
                        Diagnostic(
                            "E_UNRESOLVED",
                            f"negative of unknown event {target_tok.text!r}",
                            span=target_tok.span,
                        )
                    )
                else:
                    catalog.negatives[id_tok.text] = NegativeEventRef(
                        id=id_tok.text, target=target_tok.text
                    )
            elif ts.accept_keyword("behavior"):
                behavior = _parse_behavior(ts, catalog, diags)
                if behavior.name in catalog.behaviors:
                    diags.append(
                        Diagnostic(
                            "E_DUP_NAME",
                            f"duplicate behavior {behavior.name!r}",
                            path=behavior.name,
                        )
                    )
                else:
                    catalog.behaviors[behavior.name] = behavior
            else:
                tok = ts.peek()
                raise SyntaxProblem(
                    f"expected 'event', 'negative' or 'behavior', found {tok.text!r}",
                    tok.line,
                    tok.col,
                )
    except SyntaxProblem as exc:
        return ParseResult(value=None, diagnostics=diags + [exc.diagnostic])

    for event in catalog.events.values():
        diags.extend(validate_region(event.region, model, owner=event.id))
    for name in catalog.behaviors:
        diags.extend(validate_behavior(catalog, name))
    return ParseResult(value=catalog, diagnostics=sort_diagnostics(diags))


# ---------------------------------------------------------------------------
# validation


def validate_region(
    region: Optional[Region], model: StaticModel, owner: str = "region"
) -> list[Diagnostic]:
    """A bound region must be non-empty and closed over its arcs."""
    if region is None:
        return []  # unbound skeleton regions are fine until bound
    diags: list[Diagnostic] = []
    if not region.stages:
        diags.append(
            Diagnostic("E_REGION_EMPTY", f"region of {owner} has no stages", path=owner)
        )
    by_id = {a.id: a for a in model.arcs}
    for arc_id in sorted(region.arcs):
        arc = by_id.get(arc_id)
        if arc is None:
            diags.append(
                Diagnostic(
                    "E_UNRESOLVED", f"region of {owner} references arc {arc_id}", path=owner
                )
            )
            continue
        for ref in (arc.src, arc.dst):
            if ref not in region.stages:
                diags.append(
                    Diagnostic(
                        "E_REGION_CLOSURE",
                        f"region of {owner} includes arc {arc} but omits stage {ref}",
                        path=owner,
                    )
                )
    return diags


def _guards_overlap(a: Optional[Guard], b: Optional[Guard]) -> bool:
    if a is None and b is None:
        return True
    if a is None or b is None:
        return False
    if a.kind in (FIELD_EQ, FIELD_NEQ) and a.kind == b.kind:
        return a.field == b.field and a.value == b.value
    return False


def validate_behavior(catalog: EventCatalog, name: str) -> list[Diagnostic]:
    """Referential integrity plus guard-overlap warnings for one behavior."""
    behavior = catalog.behaviors.get(name)
    if behavior is None:
        return [Diagnostic("E_UNRESOLVED", f"no behavior named {name!r}", path=name)]
    diags: list[Diagnostic] = []
    for node in sorted(behavior.nodes):
        if not catalog.node_exists(node):
            diags.append(
                Diagnostic(
                    "E_UNRESOLVED",
                    f"behavior {name!r} references unknown node {node!r}",
                    path=f"{name}/{node}",
                )
            )
    if not behavior.initial:
        diags.append(
            Diagnostic("E_VALIDATION", f"behavior {name!r} has no initial nodes", path=name)
        )
    for node in sorted({e.src for e in behavior.edges}):
        out = behavior.out_edges(node)
        for i in range(len(out)):
            for j in range(i + 1, len(out)):
                if _guards_overlap(out[i].guard, out[j].guard):
                    what = (
                        "unguarded edges"
                        if out[i].guard is None
                        else f"identical guards ({out[i].guard.describe()})"
                    )
                    diags.append(
                        Diagnostic(
                            "W_GUARD_OVERLAP",
                            f"{node!r} has {what} to {out[i].dst!r} and {out[j].dst!r}",
                            severity=WARNING,
                            path=f"{name}/{node}",
                        )
                    )
    return sort_diagnostics(diags)


def validate_events(catalog: EventCatalog, model: StaticModel) -> list[Diagnostic]:
    """Run all region and behavior checks over a catalog."""
    diags: list[Diagnostic] = []
    for event in catalog.events.values():
        diags.extend(validate_region(event.region, model, owner=event.id))
    for neg in catalog.negatives.values():
        if neg.target not in catalog.events:
            diags.append(
                Diagnostic(
                    "E_UNRESOLVED",
                    f"negative {neg.id!r} targets unknown event {neg.target!r}",
                    path=neg.id,
                )
            )
    for name in sorted(catalog.behaviors):
        diags.extend(validate_behavior(catalog, name))
    return sort_diagnostics(diags)


# ---------------------------------------------------------------------------
# negation and refinement


def negate(catalog: EventCatalog, event_id: str) -> NegativeEventRef:
    """Create (or return the existing) Lupascian reversion node for an event.

    Negating a negative raises E_DOUBLE_NEG; the operation is idempotent.
    """
    if event_id in catalog.negatives:
        raise TmError("E_DOUBLE_NEG", f"{event_id!r} is already a negative event")
    if event_id not in catalog.events:
        raise TmError("E_UNRESOLVED", f"no event {event_id!r} to negate")
    for neg in catalog.negatives.values():
        if neg.target == event_id:
            return neg
    base = "R" + event_id[1:] if event_id.startswith("E") and len(event_id) > 1 else f"R_{event_id}"
    neg_id = base
    n = 2
    while catalog.node_exists(neg_id):
        neg_id = f"{base}_{n}"
        n += 1
    ref = NegativeEventRef(id=neg_id, target=event_id)
    catalog.negatives[neg_id] = ref
    return ref


def _region_escapes(sub: Optional[Region], outer: Optional[Region]) -> bool:
    if sub is None:
        return False
    if outer is None:
        return bool(sub.stages or sub.arcs)
    return not (sub.stages <= outer.stages and sub.arcs <= outer.arcs)


def refine(
    catalog: EventCatalog,
    behavior_name: str,
    event_id: str,
    sub_behavior_name: str,
) -> tuple[BehaviorModel, list[Diagnostic]]:
    """Replace one node with a whole sub-behavior, splicing edges.

    Incoming edges are rerouted to the sub-behavior's initial nodes; edges
    out of the refined node are re-grown from the sub-behavior's terminal
    (out-degree zero) nodes.  Guards on spliced edges are preserved.  Returns
    the refined behavior (a new value) plus warnings; W_REGION_ESCAPE flags
    sub-events whose regions are not contained in the refined event's region.
    """
    behavior = catalog.behaviors.get(behavior_name)
    if behavior is None:
        raise TmError("E_UNRESOLVED", f"no behavior named {behavior_name!r}")
    sub = catalog.behaviors.get(sub_behavior_name)
    if sub is None:
        raise TmError("E_UNRESOLVED", f"no behavior named {sub_behavior_name!r}")
    if event_id not in behavior.nodes:
        raise TmError(
            "E_UNRESOLVED", f"{event_id!r} is not a node of behavior {behavior_name!r}"
        )
    if not sub.nodes:
        raise TmError("E_EMPTY_SUB", f"sub-behavior {sub_behavior_name!r} is empty")
    clash = (sub.nodes & behavior.nodes) - {event_id}
    if clash:
        raise TmError(
            "E_DUP_NAME",
            f"sub-behavior nodes {sorted(clash)} already appear in {behavior_name!r}",
        )

    diags: list[Diagnostic] = []
    if event_id in catalog.events:
        outer_region = catalog.events[event_id].region
        for node in sorted(sub.nodes):
            if node in catalog.events and _region_escapes(
                catalog.events[node].region, outer_region
            ):
                diags.append(
                    Diagnostic(
                        "W_REGION_ESCAPE",
                        f"region of {node!r} is not contained in region of {event_id!r}",
                        severity=WARNING,
                        path=node,
                    )
                )

    refined = BehaviorModel(name=f"{behavior_name}__refine_{event_id}")
    refined.nodes = (behavior.nodes - {event_id}) | set(sub.nodes)
    sub_terminals = sub.terminals()
    for edge in behavior.edges:
        if edge.src == event_id and edge.dst == event_id:
            continue  # a self loop cannot survive the splice
        if edge.dst == event_id:
            for entry in sorted(sub.initial):
                refined.edges.append(replace(edge, dst=entry))
        elif edge.src == event_id:
            for terminal in sub_terminals:
                refined.edges.append(replace(edge, src=terminal))
        else:
            refined.edges.append(replace(edge))
    refined.edges.extend(replace(e) for e in sub.edges)
    if event_id in behavior.initial:
        refined.initial = (behavior.initial - {event_id}) | set(sub.initial)
    else:
        refined.initial = set(behavior.initial)
    return refined, diags
