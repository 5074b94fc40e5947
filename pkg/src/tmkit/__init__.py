"""Thinging-machine modeling kit.

Static models (things-that-are-machines with create/process/release/
transfer/receive stages), events and Lupascian negative events over their
regions, guarded behavior graphs, a deterministic token-flow simulator,
event-trace grammars, and a fluent (event-calculus) layer that compiles
onto the same core so the two semantics can be cross-checked.
"""

from .artifacts import deserialize, from_document, serialize, to_document
from .diagnostics import (
    Diagnostic,
    ParseResult,
    SourceSpan,
    TmError,
    has_errors,
    sort_diagnostics,
)
from .dot import behavior_to_dot, static_to_dot, timeline_to_dot, trace_graph_to_dot
from .dsl import parse_model
from .eventgrammar import (
    Grammar,
    MembershipReport,
    TraceGraph,
    check_membership,
    derive_trace,
    grammar_to_behavior,
    parse_grammar,
    validate_grammar,
)
from .events import (
    BehaviorModel,
    Edge,
    Event,
    EventCatalog,
    Guard,
    NegativeEventRef,
    Region,
    negate,
    parse_events,
    refine,
    validate_behavior,
    validate_events,
    validate_region,
)
from .fluents import (
    Axiom,
    EcDomain,
    FluentTimeline,
    Term,
    axioms_to_tm,
    parse_ec,
    replay_narrative,
    run_narrative,
)
from .sim import (
    ACTUAL,
    POLICY_FIRST,
    POLICY_SCRIPT,
    POTENTIAL,
    Effect,
    RegionState,
    SimConfig,
    Simulation,
    Token,
    Trace,
    TraceReport,
    check_trace,
)
from .statics import (
    Arc,
    StageKind,
    StageRef,
    StaticModel,
    Thimac,
    ThimacRef,
    flow_is_legal,
    pretty_print,
    resolve_path,
    validate_static,
)

__version__ = "0.1.0"

__all__ = [
    "ACTUAL",
    "Arc",
    "Axiom",
    "BehaviorModel",
    "Diagnostic",
    "EcDomain",
    "Edge",
    "Effect",
    "Event",
    "EventCatalog",
    "FluentTimeline",
    "Grammar",
    "Guard",
    "MembershipReport",
    "NegativeEventRef",
    "POLICY_FIRST",
    "POLICY_SCRIPT",
    "POTENTIAL",
    "ParseResult",
    "Region",
    "RegionState",
    "SimConfig",
    "Simulation",
    "SourceSpan",
    "StageKind",
    "StageRef",
    "StaticModel",
    "Term",
    "Thimac",
    "ThimacRef",
    "TmError",
    "Token",
    "Trace",
    "TraceGraph",
    "TraceReport",
    "axioms_to_tm",
    "behavior_to_dot",
    "check_membership",
    "check_trace",
    "derive_trace",
    "deserialize",
    "flow_is_legal",
    "from_document",
    "grammar_to_behavior",
    "has_errors",
    "negate",
    "parse_ec",
    "parse_events",
    "parse_grammar",
    "parse_model",
    "pretty_print",
    "refine",
    "replay_narrative",
    "resolve_path",
    "run_narrative",
    "serialize",
    "sort_diagnostics",
    "static_to_dot",
    "timeline_to_dot",
    "to_document",
    "trace_graph_to_dot",
    "validate_behavior",
    "validate_events",
    "validate_grammar",
    "validate_region",
    "validate_static",
]
