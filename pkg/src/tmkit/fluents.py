"""Fluent axioms: an event-calculus layer cross-checkable against the core.

An axiom file (.ec) declares a flat constant pool, axioms keyed by event
terms, and the initially-holding fluents::

    domain phone

    constants A ;
    constants P1, P2 ;

    axiom PickUp(a, p) when Idle(p) initiates DialTone(p) terminates Idle(p) ;
    axiom Dial(a, p, q) when DialTone(p), Idle(q)
        initiates Connected(p, q) terminates DialTone(p), Idle(q) ;

    initially Idle(P1), Idle(P2) ;

Identifiers starting lowercase are variables, capitalized ones constants.
`run_narrative` evaluates a timed event list directly (inertia between
times, effects landing at t+1, initiation winning over termination within
one time step).  `axioms_to_tm` compiles the same axioms into a static
model, catalog and behavior so `replay_narrative` can drive the token-flow
core and the two timelines can be compared event for event.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Optional

from .diagnostics import Diagnostic, ParseResult, TmError, sort_diagnostics
from .events import (
    HOLDS_PREFIX,
    BehaviorModel,
    Edge,
    Event,
    EventCatalog,
    Guard,
    NegativeEventRef,
    Region,
    SCRIPTED,
)
from .lex import IDENT, SYMBOL, SyntaxProblem, TokenStream, tokenize
from .sim import Simulation
from .statics import StageKind, StageRef, StaticModel, Thimac

SYMBOLS = ["(", ")", ",", ";"]


@dataclass(frozen=True)
class Term:
    name: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({','.join(self.args)})"

    @property
    def is_ground(self) -> bool:
        return all(not _is_var(a) for a in self.args)

    def variables(self) -> set[str]:
        return {a for a in self.args if _is_var(a)}

    def substitute(self, binding: dict[str, str]) -> "Term":
        return Term(self.name, tuple(binding.get(a, a) for a in self.args))


def _is_var(symbol: str) -> bool:
    return symbol[:1].islower()


_TERM_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*(?:\(\s*(.*?)\s*\))?\s*$")


def parse_term(text: str) -> Term:
    m = _TERM_RE.match(text)
    if m is None:
        raise TmError("E_SYNTAX", f"malformed term {text!r}")
    name, argstr = m.group(1), m.group(2)
    if argstr is None or argstr == "":
        return Term(name)
    args = []
    for piece in argstr.split(","):
        piece = piece.strip()
        if not re.fullmatch(r"[A-Za-z_]\w*", piece):
            raise TmError("E_SYNTAX", f"malformed term argument {piece!r} in {text!r}")
        args.append(piece)
    return Term(name, tuple(args))


@dataclass
class Axiom:
    event: Term
    conditions: list[Term] = field(default_factory=list)
    initiates: list[Term] = field(default_factory=list)
    terminates: list[Term] = field(default_factory=list)

    def variables(self) -> set[str]:
        out = set(self.event.variables())
        for c in self.conditions:
            out |= c.variables()
        return out


@dataclass
class EcDomain:
    name: str
    constants: list[str] = field(default_factory=list)
    axioms: list[Axiom] = field(default_factory=list)
    initially: list[Term] = field(default_factory=list)


@dataclass(frozen=True)
class FluentTimeline:
    """states[t] is the set of rendered ground fluents holding at time t."""

    states: tuple[frozenset, ...]

    def at(self, t: int) -> frozenset:
        return self.states[min(t, len(self.states) - 1)]

    def to_document(self) -> dict:
        return {
            "kind": "timeline",
            "states": [sorted(s) for s in self.states],
        }


# ---------------------------------------------------------------------------
# parsing


def _parse_term_tokens(ts: TokenStream) -> Term:
    name = ts.expect(IDENT).text
    args: list[str] = []
    if ts.accept(SYMBOL, "("):
        while True:
            args.append(ts.expect(IDENT).text)
            if not ts.accept(SYMBOL, ","):
                break
        ts.expect(SYMBOL, ")")
    return Term(name, tuple(args))


def _parse_term_list(ts: TokenStream) -> list[Term]:
    terms = [_parse_term_tokens(ts)]
    while ts.accept(SYMBOL, ","):
        terms.append(_parse_term_tokens(ts))
    return terms


def parse_ec(text: str) -> ParseResult:
    """Parse axiom text; diagnostics cover syntax, safety and groundness.

    E_UNSAFE_VAR: an effect mentions a variable bound by neither the event
    nor a condition.  E_GROUNDING: an initially-clause contains a variable.
    """
    diags: list[Diagnostic] = []
    domain: Optional[EcDomain] = None
    try:
        ts = TokenStream(tokenize(text, SYMBOLS))
        ts.expect_keyword("domain")
        domain = EcDomain(name=ts.expect(IDENT).text)
        while not ts.at_end():
            if ts.accept_keyword("constants"):
                while True:
                    tok = ts.expect(IDENT)
                    if _is_var(tok.text):
                        diags.append(
                            Diagnostic(
                                "E_VALIDATION",
                                f"constant {tok.text!r} must be capitalized",
                                span=tok.span,
                            )
                        )
                    elif tok.text in domain.constants:
                        diags.append(
                            Diagnostic(
                                "E_DUP_NAME",
                                f"constant {tok.text!r} declared twice",
                                span=tok.span,
                            )
                        )
                    else:
                        domain.constants.append(tok.text)
                    if not ts.accept(SYMBOL, ","):
                        break
                ts.expect(SYMBOL, ";")
            elif ts.accept_keyword("axiom"):
                event_tok = ts.peek()
                axiom = Axiom(event=_parse_term_tokens(ts))
                if ts.accept_keyword("when"):
                    axiom.conditions = _parse_term_list(ts)
                if ts.accept_keyword("initiates"):
                    axiom.initiates = _parse_term_list(ts)
                if ts.accept_keyword("terminates"):
                    axiom.terminates = _parse_term_list(ts)
                ts.expect(SYMBOL, ";")
                if not axiom.initiates and not axiom.terminates:
                    diags.append(
                        Diagnostic(
                            "E_VALIDATION",
                            f"axiom for {axiom.event} initiates or terminates nothing",
                            span=event_tok.span,
                        )
                    )
                    continue
                bound = axiom.variables()
                for effect in axiom.initiates + axiom.terminates:
                    for unsafe in sorted(effect.variables() - bound):
                        diags.append(
                            Diagnostic(
                                "E_UNSAFE_VAR",
                                f"effect {effect} uses unbound variable {unsafe!r}",
                                span=event_tok.span,
                            )
                        )
                domain.axioms.append(axiom)
            elif ts.accept_keyword("initially"):
                for term in _parse_term_list(ts):
                    if not term.is_ground:
                        diags.append(
                            Diagnostic(
                                "E_GROUNDING",
                                f"initially-clause {term} is not ground",
                                path=str(term),
                            )
                        )
                    else:
                        domain.initially.append(term)
                ts.expect(SYMBOL, ";")
            else:
                tok = ts.peek()
                raise SyntaxProblem(
                    f"expected 'constants', 'axiom' or 'initially', found {tok.text!r}",
                    tok.line,
                    tok.col,
                )
    except SyntaxProblem as exc:
        return ParseResult(value=None, diagnostics=diags + [exc.diagnostic])
    # one arity per fluent name across the whole domain
    arities: dict[str, int] = {}
    for term in _all_fluent_terms(domain):
        if term.name in arities and arities[term.name] != len(term.args):
            diags.append(
                Diagnostic(
                    "E_VALIDATION",
                    f"fluent {term.name!r} used with arities "
                    f"{arities[term.name]} and {len(term.args)}",
                    path=term.name,
                )
            )
        arities.setdefault(term.name, len(term.args))
    return ParseResult(value=domain, diagnostics=sort_diagnostics(diags))


def _all_fluent_terms(domain: EcDomain):
    for axiom in domain.axioms:
        yield from axiom.conditions
        yield from axiom.initiates
        yield from axiom.terminates
    yield from domain.initially


# ---------------------------------------------------------------------------
# grounding


def _groundings(variables: list[str], constants: list[str]):
    if not variables:
        yield {}
        return
    if not constants:
        raise TmError(
            "E_EMPTY_DOMAIN", f"cannot ground variables {variables} without constants"
        )
    for combo in itertools.product(constants, repeat=len(variables)):
        yield dict(zip(variables, combo))


def ground_fluents(domain: EcDomain) -> list[Term]:
    """Every ground instance of every fluent shape, in first-use order."""
    shapes: list[tuple[str, int]] = []
    for term in _all_fluent_terms(domain):
        shape = (term.name, len(term.args))
        if shape not in shapes:
            shapes.append(shape)
    out: list[Term] = []
    for name, arity in shapes:
        if arity == 0:
            out.append(Term(name))
            continue
        if not domain.constants:
            raise TmError(
                "E_EMPTY_DOMAIN", f"fluent {name!r} needs constants to ground"
            )
        for combo in itertools.product(domain.constants, repeat=arity):
            out.append(Term(name, combo))
    return out


def _match_event(pattern: Term, ground: Term) -> Optional[dict[str, str]]:
    if pattern.name != ground.name or len(pattern.args) != len(ground.args):
        return None
    binding: dict[str, str] = {}
    for p, g in zip(pattern.args, ground.args):
        if _is_var(p):
            if binding.get(p, g) != g:
                return None
            binding[p] = g
        elif p != g:
            return None
    return binding


# ---------------------------------------------------------------------------
# direct evaluation


def _effects_at(
    domain: EcDomain, event: Term, state: frozenset
) -> tuple[set[str], set[str]]:
    """Ground initiations and terminations a single event causes in a state."""
    initiated: set[str] = set()
    terminated: set[str] = set()
    for axiom in domain.axioms:
        binding = _match_event(axiom.event, event)
        if binding is None:
            continue
        free = sorted(axiom.variables() - set(binding))
        for extra in _groundings(free, domain.constants):
            full = {**binding, **extra}
            if all(str(c.substitute(full)) in state for c in axiom.conditions):
                initiated.update(str(t.substitute(full)) for t in axiom.initiates)
                terminated.update(str(t.substitute(full)) for t in axiom.terminates)
    return initiated, terminated


def run_narrative(domain: EcDomain, narrative: list[tuple[int, str]]) -> FluentTimeline:
    """Evaluate a timed narrative; returns states for times 0..T+1.

    Between occurrences fluents persist (inertia).  An event at time t lands
    its effects at t+1; within one event initiation wins over termination.
    Distinct events at the same time apply jointly, but if one initiates what
    another terminates the step is ambiguous and E_CLASH is raised.
    """
    events: list[tuple[int, Term]] = []
    for t, text in narrative:
        term = parse_term(text)
        if not term.is_ground:
            raise TmError("E_GROUNDING", f"narrative event {term} is not ground")
        for arg in term.args:
            if arg not in domain.constants:
                raise TmError(
                    "E_GROUNDING", f"narrative event {term} uses unknown constant {arg!r}"
                )
        events.append((int(t), term))
    if any(t < 0 for t, _ in events):
        raise TmError("E_VALIDATION", "narrative times must be non-negative")
    horizon = max((t for t, _ in events), default=-1)
    states = [frozenset(str(f) for f in domain.initially)]
    for now in range(horizon + 1):
        state = states[now]
        contributions = [
            (term, _effects_at(domain, term, state)) for t, term in events if t == now
        ]
        all_init: set[str] = set()
        all_term: set[str] = set()
        for term, (initiated, terminated) in contributions:
            for other, (o_init, _) in contributions:
                if other is term:
                    continue
                conflicted = terminated & o_init
                if conflicted:
                    raise TmError(
                        "E_CLASH",
                        f"{sorted(conflicted)} terminated by {term} and initiated "
                        f"by {other} at time {now}",
                    )
            all_init |= initiated
            all_term |= terminated
        states.append((state - all_term) | all_init)
    return FluentTimeline(states=tuple(states))


# ---------------------------------------------------------------------------
# compilation onto the token-flow core


def mangle(term: Term) -> str:
    return "_".join((term.name,) + term.args)


@dataclass
class GroundAxiom:
    node_id: str
    event: Term
    conditions: list[Term]
    initiates: list[Term]
    terminates: list[Term]


def ground_axioms(domain: EcDomain) -> list[GroundAxiom]:
    """All ground axiom instances, node ids uniqued in enumeration order."""
    out: list[GroundAxiom] = []
    used: dict[str, int] = {}
    for axiom in domain.axioms:
        variables = sorted(axiom.variables())
        for binding in _groundings(variables, domain.constants):
            base = "E_" + mangle(axiom.event.substitute(binding))
            used[base] = used.get(base, 0) + 1
            node_id = base if used[base] == 1 else f"{base}_{used[base]}"
            out.append(
                GroundAxiom(
                    node_id=node_id,
                    event=axiom.event.substitute(binding),
                    conditions=[c.substitute(binding) for c in axiom.conditions],
                    initiates=[t.substitute(binding) for t in axiom.initiates],
                    terminates=[t.substitute(binding) for t in axiom.terminates],
                )
            )
    return out


BEHAVIOR_NAME = "fluents"


def axioms_to_tm(domain: EcDomain) -> tuple[StaticModel, EventCatalog, BehaviorModel]:
    """Compile a domain into (model, catalog, behavior) for the core.

    Each ground fluent F becomes a one-stage thimac plus an event E_F (its
    region is the thimac's create stage) and a reversion node R_F; holding is
    represented by E_F's region being actual.  Each ground axiom instance
    becomes an event node whose outgoing edges initiate (to E_F) or terminate
    (to R_F) fluents, guarded by the instance's conditions via a holds-guard.
    Every node is initial, so fluents can be set before any event runs, and
    axiom nodes carry a self loop so they stay refirable.
    """
    model = StaticModel(name=domain.name)
    catalog = EventCatalog()
    behavior = BehaviorModel(name=BEHAVIOR_NAME)

    def add_singleton(name: str) -> StageRef:
        model.roots.append(Thimac(name=name, stages={StageKind.CREATE}))
        return StageRef(name, StageKind.CREATE)

    fluent_event: dict[str, str] = {}
    fluent_neg: dict[str, str] = {}
    for term in ground_fluents(domain):
        stage = add_singleton(mangle(term))
        eid = f"E_{mangle(term)}"
        rid = f"R_{mangle(term)}"
        catalog.events[eid] = Event(
            id=eid, description=f"fluent {term} holds", region=Region(frozenset([stage]))
        )
        catalog.negatives[rid] = NegativeEventRef(id=rid, target=eid)
        fluent_event[str(term)] = eid
        fluent_neg[str(term)] = rid
        behavior.nodes.update((eid, rid))
    for inst in ground_axioms(domain):
        stage = add_singleton(inst.node_id[2:])  # thimac named after the event term
        catalog.events[inst.node_id] = Event(
            id=inst.node_id,
            description=f"occurrence of {inst.event}",
            region=Region(frozenset([stage])),
        )
        behavior.nodes.add(inst.node_id)
        guard = None
        if inst.conditions:
            key = HOLDS_PREFIX + "+".join(
                sorted(fluent_event[str(c)] for c in inst.conditions)
            )
            guard = Guard(kind=SCRIPTED, script_key=key)
        behavior.edges.append(Edge(src=inst.node_id, dst=inst.node_id, guard=None))
        for term in inst.terminates:
            behavior.edges.append(
                Edge(src=inst.node_id, dst=fluent_neg[str(term)], guard=guard)
            )
        for term in inst.initiates:
            behavior.edges.append(
                Edge(src=inst.node_id, dst=fluent_event[str(term)], guard=guard)
            )
    behavior.initial = set(behavior.nodes)
    catalog.behaviors[BEHAVIOR_NAME] = behavior
    return model, catalog, behavior


def replay_narrative(domain: EcDomain, narrative: list[tuple[int, str]]) -> FluentTimeline:
    """Drive the compiled model through a narrative and read the timeline back.

    Narrative times must be strictly increasing: the core fires events one at
    a time, so simultaneous events would see each other's effects instead of
    a common pre-state.  For each event every matching axiom node fires, then
    its marked consequences run, reversions first (so initiation wins within
    the event, as in direct evaluation).
    """
    times = [t for t, _ in narrative]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise TmError("E_VALIDATION", "narrative times must be strictly increasing")
    model, catalog, behavior = axioms_to_tm(domain)
    sim = Simulation(model, catalog, BEHAVIOR_NAME)
    fluents = ground_fluents(domain)
    instances = ground_axioms(domain)
    by_event: dict[str, list[str]] = {}
    for inst in instances:
        by_event.setdefault(str(inst.event), []).append(inst.node_id)

    def snapshot() -> frozenset:
        return frozenset(
            str(f) for f in fluents if sim.holds(f"E_{mangle(f)}").is_actual
        )

    for term in domain.initially:
        sim.fire(f"E_{mangle(term)}")
    states = [snapshot()]
    horizon = max(times, default=-1)
    occurrences = {t: text for t, text in narrative}
    for now in range(horizon + 1):
        text = occurrences.get(now)
        if text is not None:
            term = parse_term(text)
            if not term.is_ground:
                raise TmError("E_GROUNDING", f"narrative event {term} is not ground")
            for arg in term.args:
                if arg not in domain.constants:
                    raise TmError(
                        "E_GROUNDING",
                        f"narrative event {term} uses unknown constant {arg!r}",
                    )
            fired_nodes = []
            for node_id in by_event.get(str(term), []):
                sim.fire(node_id)
                fired_nodes.append(node_id)
            pending: list[str] = []
            for idx, edge in enumerate(behavior.edges):
                if edge.src in fired_nodes and edge.dst not in fired_nodes:
                    if sim.state.marks.get(idx, 0) > 0:
                        pending.append(edge.dst)
            for dst in sorted(pending, key=lambda n: (0 if n in catalog.negatives else 1, n)):
                sim.fire(dst, strict=False)
        states.append(snapshot())
    return FluentTimeline(states=tuple(states))
