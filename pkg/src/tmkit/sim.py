"""Token-flow simulation of behavior models.

Firing semantics, in one paragraph: a node is enabled when it is initial and
never fired, or when some incoming edge carries a pending activation mark.
Marks are produced when the edge's source fires, and edge guards are
evaluated at production time against the tokens then sitting in the firing
node's region (so a branch decision is atomic with the state that made it).
Firing an event executes its region: queued external inputs materialize,
in-region create stages mint fresh tokens, flow arcs (including pulls along
arcs entering the region from outside) move tokens one hop each in a stable
topology-then-declaration order, and trigger arcs whose source stage executed
schedule their in-region destinations within the same firing.  Firing a
negative node R_i reverts event E_i's region to Potential; tokens are never
destroyed by any firing ("still there").

Tick bookkeeping is discrete: each firing advances the clock by the node's
configured duration (default 1).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import TmError, has_errors
from .events import (
    FIELD_EQ,
    FIELD_NEQ,
    HOLDS_PREFIX,
    SCRIPTED,
    BehaviorModel,
    Edge,
    EventCatalog,
    Guard,
    Region,
    validate_events,
)
from .statics import FLOW, StageKind, StageRef, StaticModel, resolve_path, validate_static

POTENTIAL = "potential"
ACTUAL = "actual"

POLICY_FIRST = "first"
POLICY_SCRIPT = "script"

# choice-script key consumed by the scripted run policy
POLICY_KEY = "policy"

Payload = dict[str, Union[str, int]]


@dataclass(frozen=True)
class RegionState:
    state: str = POTENTIAL
    since: Optional[int] = None
    occurrences: int = 0

    @property
    def is_actual(self) -> bool:
        return self.state == ACTUAL


@dataclass
class Token:
    id: int
    home: str  # thimac path the token was minted at
    location: StageRef
    payload: Payload = field(default_factory=dict)

    def sort_key(self):
        return (str(self.location), self.id)


@dataclass
class Effect:
    """Declarative payload computation attached to an event firing.

    Two operations cover list-like payload fields (comma-separated strings):

    - split_head: pop the first element of `field` on the first token found
      under thimac `src`, and write it as `{to_field: head}` on the token
      minted this firing at stage `to` (minting one there if needed).
    - append_moved: take the token that moved during this firing carrying
      `field`, and append its value to `to_field` of the first token found
      under thimac `to`.
    """

    event: str
    op: str  # "split_head" | "append_moved"
    field: str
    to: str
    to_field: str
    src: Optional[str] = None


@dataclass
class SimConfig:
    initial_tokens: list[tuple[str, Payload]] = field(default_factory=list)
    inputs: list[tuple[int, str, Payload]] = field(default_factory=list)
    choice_script: dict[str, list[str]] = field(default_factory=dict)
    durations: dict[str, int] = field(default_factory=dict)
    effects: list[Effect] = field(default_factory=list)
    lenient: bool = False

    @classmethod
    def from_document(cls, doc: dict) -> "SimConfig":
        cfg = cls()
        for item in doc.get("initial_tokens", []):
            cfg.initial_tokens.append((item["stage"], dict(item.get("payload", {}))))
        for item in doc.get("inputs", []):
            cfg.inputs.append((int(item["tick"]), item["stage"], dict(item.get("payload", {}))))
        cfg.choice_script = {k: list(v) for k, v in doc.get("script", {}).items()}
        cfg.durations = {k: int(v) for k, v in doc.get("durations", {}).items()}
        for item in doc.get("effects", []):
            cfg.effects.append(
                Effect(
                    event=item["event"],
                    op=item["op"],
                    field=item["field"],
                    to=item["to"],
                    to_field=item["to_field"],
                    src=item.get("src"),
                )
            )
        cfg.lenient = bool(doc.get("lenient", False))
        return cfg


@dataclass
class SimState:
    tick: int = 0
    tokens: dict[int, Token] = field(default_factory=dict)
    region_states: dict[str, RegionState] = field(default_factory=dict)
    fired_log: list[tuple[int, str]] = field(default_factory=list)
    fired_nodes: set[str] = field(default_factory=set)
    marks: dict[int, int] = field(default_factory=dict)  # edge index -> pending marks
    choice_script: dict[str, list[str]] = field(default_factory=dict)
    inputs: list[tuple[int, StageRef, Payload]] = field(default_factory=list)
    next_token_id: int = 1
    flags: list[str] = field(default_factory=list)


@dataclass
class Trace:
    model: str
    behavior: str
    policy: str
    entries: list[dict] = field(default_factory=list)
    final_state_digest: str = ""
    flags: list[str] = field(default_factory=list)

    def firing_order(self) -> list[str]:
        return [e["node"] for e in self.entries]

    def to_document(self) -> dict:
        doc = {
            "kind": "trace",
            "model": self.model,
            "behavior": self.behavior,
            "policy": self.policy,
            "entries": self.entries,
            "final_state_digest": self.final_state_digest,
        }
        if self.flags:
            doc["flags"] = list(self.flags)
        return doc


@dataclass
class TraceReport:
    ok: bool
    violation_index: Optional[int] = None
    reason: Optional[str] = None


def _under(path: str, thimac: str) -> bool:
    return path == thimac or path.startswith(thimac + "/")


class Simulation:
    """One run context binding a model, a catalog and one behavior."""

    def __init__(
        self,
        model: StaticModel,
        catalog: EventCatalog,
        behavior_name: str,
        config: Optional[SimConfig] = None,
    ):
        config = config or SimConfig()
        diags = validate_static(model, lenient=config.lenient or None)
        diags += validate_events(catalog, model)
        if has_errors(diags):
            first = next(d for d in diags if d.is_error)
            raise TmError("E_VALIDATION", f"upstream validation failed: {first.render()}")
        if behavior_name not in catalog.behaviors:
            raise TmError("E_UNRESOLVED", f"no behavior named {behavior_name!r}")
        self.model = model
        self.catalog = catalog
        self.behavior = catalog.behaviors[behavior_name]
        self.config = config
        self.state = SimState()
        for event_id in catalog.events:
            self.state.region_states[event_id] = RegionState()
        self.state.choice_script = {k: list(v) for k, v in config.choice_script.items()}
        for stage_path, payload in config.initial_tokens:
            ref = self._stage(stage_path)
            self._mint(ref, dict(payload))
        for tick, stage_path, payload in config.inputs:
            self.state.inputs.append((tick, self._stage(stage_path), dict(payload)))
        self._deltas: list[dict] = []  # scratch, valid during one firing

    # -- small helpers ----------------------------------------------------

    def _stage(self, path: str) -> StageRef:
        ref = resolve_path(self.model, path)
        if not isinstance(ref, StageRef):
            raise TmError("E_UNRESOLVED", f"{path!r} names a thimac, not a stage")
        return ref

    def _mint(self, ref: StageRef, payload: Payload) -> Token:
        tok = Token(id=self.state.next_token_id, home=ref.path, location=ref, payload=payload)
        self.state.next_token_id += 1
        self.state.tokens[tok.id] = tok
        return tok

    def _tokens_at(self, ref: StageRef) -> list[Token]:
        return sorted(
            (t for t in self.state.tokens.values() if t.location == ref),
            key=Token.sort_key,
        )

    def _region_of(self, node_id: str) -> Optional[Region]:
        return self.catalog.event_for_node(node_id).region

    def holds(self, event_id: str) -> RegionState:
        if event_id not in self.state.region_states:
            raise TmError("E_UNKNOWN_EVENT", f"no event {event_id!r} in catalog")
        return self.state.region_states[event_id]

    def token_multiset(self) -> list[tuple]:
        return sorted(
            (t.home, str(t.location), tuple(sorted(t.payload.items())))
            for t in self.state.tokens.values()
        )

    def digest(self) -> str:
        body = {
            "regions": [
                [eid, rs.state, rs.since, rs.occurrences]
                for eid, rs in sorted(self.state.region_states.items())
            ],
            "tokens": [list(map(str, entry[:2])) + [list(map(list, entry[2]))]
                       for entry in self.token_multiset()],
        }
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    # -- enabledness -------------------------------------------------------

    def _boundary_needs(self, region: Region) -> list[tuple[StageRef, list[StageRef]]]:
        """In-region pull targets: (stage, outside source stages feeding it)."""
        needs = []
        pullable = (StageKind.RECEIVE, StageKind.TRANSFER, StageKind.PROCESS)
        for stage in region.sorted_stages():
            if stage.stage not in pullable:
                continue
            sources = [
                a.src
                for a in self.model.flow_arcs()
                if a.dst == stage and a.src not in region.stages
            ]
            if sources:
                needs.append((stage, sources))
        return needs

    def _tokens_satisfy(self, node_id: str) -> bool:
        region = self._region_of(node_id)
        if region is None or self.config.lenient:
            return True
        for stage, sources in self._boundary_needs(region):
            if self._tokens_at(stage):
                continue  # the thing already arrived; nothing to pull
            if any(self._tokens_at(src) for src in sources):
                continue
            if any(t <= self.state.tick and ref == stage for t, ref, _ in self.state.inputs):
                continue
            return False
        return True

    def _graph_enabled(self, node_id: str) -> bool:
        if node_id in self.behavior.initial and node_id not in self.state.fired_nodes:
            return True
        for idx, edge in enumerate(self.behavior.edges):
            if edge.dst == node_id and self.state.marks.get(idx, 0) > 0:
                return True
        return False

    def enabled(self) -> set[str]:
        out = set()
        for node in self.behavior.nodes:
            if not self._graph_enabled(node):
                continue
            if node in self.catalog.negatives:
                target = self.catalog.negatives[node].target
                if not self.state.region_states[target].is_actual:
                    continue  # firing would be a no-op reversion
            elif not self._tokens_satisfy(node):
                continue
            out.add(node)
        return out

    # -- guard evaluation (at mark production time) ------------------------

    def _read_guard_field(self, region: Optional[Region], name: str):
        if region is None:
            return None, False
        candidates = sorted(
            (
                t
                for t in self.state.tokens.values()
                if t.location in region.stages and name in t.payload
            ),
            key=Token.sort_key,
        )
        if not candidates:
            return None, False
        return candidates[0].payload[name], True

    def _holds_all(self, key: str) -> bool:
        ids = key[len(HOLDS_PREFIX):].split("+")
        return all(
            self.state.region_states.get(i, RegionState()).is_actual for i in ids
        )

    def _produce_marks(self, node_id: str):
        region = self._region_of(node_id)
        out = [(i, e) for i, e in enumerate(self.behavior.edges) if e.src == node_id]
        # one script pop per key per firing, shared by all its edges
        popped: dict[str, Optional[str]] = {}
        for _, edge in out:
            g = edge.guard
            if g and g.kind == SCRIPTED and not g.script_key.startswith(HOLDS_PREFIX):
                if g.script_key not in popped:
                    queue = self.state.choice_script.get(g.script_key, [])
                    popped[g.script_key] = queue.pop(0) if queue else None
        for idx, edge in out:
            g = edge.guard
            if g is None:
                ok = True
            elif g.kind in (FIELD_EQ, FIELD_NEQ):
                value, found = self._read_guard_field(region, g.field)
                if not found:
                    ok = False
                else:
                    ok = (value == g.value) if g.kind == FIELD_EQ else (value != g.value)
            elif g.script_key.startswith(HOLDS_PREFIX):
                ok = self._holds_all(g.script_key)
            else:
                ok = popped.get(g.script_key) == edge.dst
            if ok:
                self.state.marks[idx] = self.state.marks.get(idx, 0) + 1

    def _consume_activation(self, node_id: str):
        for idx, edge in enumerate(self.behavior.edges):
            if edge.dst == node_id and self.state.marks.get(idx, 0) > 0:
                self.state.marks[idx] -= 1
                return
        # otherwise the initial-and-never-fired credit is being used

    # -- region execution ---------------------------------------------------

    def _delta(self, **kw):
        self._deltas.append(kw)

    def _move(self, tok: Token, dst: StageRef, moved: list[Token]):
        src = tok.location
        tok.location = dst
        moved.append(tok)
        self._delta(kind="token_moved", token=tok.id, **{"from": str(src)}, to=str(dst))

    def _execute_region(self, event_id: str, region: Region):
        minted_at: set[StageRef] = set()
        moved: list[Token] = []
        executed: list[StageRef] = []

        def mark_executed(ref: StageRef):
            if ref not in executed:
                executed.append(ref)

        # external inputs whose time has come materialize at their stages
        remaining = []
        for tick, ref, payload in self.state.inputs:
            if tick <= self.state.tick and ref in region.stages:
                tok = self._mint(ref, dict(payload))
                self._delta(kind="token_created", token=tok.id, stage=str(ref), payload=dict(tok.payload))
                minted_at.add(ref)
                mark_executed(ref)
            else:
                remaining.append((tick, ref, payload))
        self.state.inputs = remaining

        # in-region create stages mint, unless an in-region trigger will or a
        # previously minted token still rests there (already brought about)
        trigger_fed = {
            a.dst
            for a in self.model.trigger_arcs()
            if a.dst in region.stages and a.src in region.stages
        }
        for stage in region.sorted_stages():
            if stage.stage != StageKind.CREATE:
                continue
            if stage in minted_at or stage in trigger_fed:
                continue
            if self._tokens_at(stage):
                continue  # occupied; the resident token moves via arcs instead
            tok = self._mint(stage, {})
            self._delta(kind="token_created", token=tok.id, stage=str(stage), payload={})
            minted_at.add(stage)
            mark_executed(stage)

        # order arcs: pulls from outside first, then region flows in a
        # topological order (declaration order inside cycles)
        arc_by_id = {a.id: a for a in self.model.arcs}
        region_arcs = [
            arc_by_id[i]
            for i in sorted(region.arcs)
            if arc_by_id[i].kind == FLOW
        ]
        boundary = [
            a
            for a in self.model.flow_arcs()
            if a.dst in region.stages and a.src not in region.stages
        ]
        indeg = {s: 0 for s in region.stages}
        for a in region_arcs:
            if a.dst in indeg:
                indeg[a.dst] += 1
        order: dict[StageRef, int] = {}
        frontier = sorted((s for s, d in indeg.items() if d == 0), key=str)
        seen = 0
        while frontier:
            s = frontier.pop(0)
            order[s] = seen
            seen += 1
            for a in region_arcs:
                if a.src == s and a.dst in indeg:
                    indeg[a.dst] -= 1
                    if indeg[a.dst] == 0 and a.dst not in order:
                        frontier.append(a.dst)
            frontier.sort(key=str)
        big = len(region.stages) + 1
        ordered_arcs = sorted(boundary, key=lambda a: a.id) + sorted(
            region_arcs, key=lambda a: (order.get(a.src, big), a.id)
        )
        for arc in ordered_arcs:
            at_src = self._tokens_at(arc.src)
            if not at_src and self.config.lenient and arc in boundary:
                tok = self._mint(arc.src, {})
                self._delta(kind="token_created", token=tok.id, stage=str(arc.src), payload={})
                at_src = [tok]
            if at_src:
                mark_executed(arc.src)
                self._move(at_src[0], arc.dst, moved)
                mark_executed(arc.dst)

        # process stages act on whatever rests in them
        for stage in region.sorted_stages():
            if stage.stage == StageKind.PROCESS and self._tokens_at(stage):
                mark_executed(stage)

        # synchronous trigger cascade, cycle-guarded by a visited set
        visited: set[StageRef] = set()
        queue = list(executed)
        while queue:
            src_stage = queue.pop(0)
            for arc in sorted(self.model.trigger_arcs(), key=lambda a: a.id):
                if arc.src != src_stage or arc.dst not in region.stages:
                    continue
                if arc.dst in visited:
                    continue
                visited.add(arc.dst)
                if arc.dst.stage == StageKind.CREATE:
                    source_tokens = self._tokens_at(arc.src)
                    payload = dict(source_tokens[0].payload) if source_tokens else {}
                    if arc.dst in minted_at:
                        for tok in self._tokens_at(arc.dst):
                            if not tok.payload and payload:
                                tok.payload = dict(payload)
                                self._delta(kind="token_updated", token=tok.id, payload=dict(payload))
                                break
                    elif self._tokens_at(arc.dst):
                        continue  # occupied; nothing new comes into being
                    else:
                        tok = self._mint(arc.dst, payload)
                        self._delta(kind="token_created", token=tok.id, stage=str(arc.dst), payload=dict(payload))
                        minted_at.add(arc.dst)
                        moved.append(tok)
                if arc.dst not in executed:
                    executed.append(arc.dst)
                    queue.append(arc.dst)

        self._apply_effects(event_id, minted_at, moved)

    def _apply_effects(self, event_id: str, minted_at: set[StageRef], moved: list[Token]):
        for eff in self.config.effects:
            if eff.event != event_id:
                continue
            if eff.op == "split_head":
                src_toks = sorted(
                    (
                        t
                        for t in self.state.tokens.values()
                        if _under(t.location.path, eff.src or "") and eff.field in t.payload
                    ),
                    key=Token.sort_key,
                )
                if not src_toks:
                    continue
                src = src_toks[0]
                csv = str(src.payload[eff.field])
                if csv == "":
                    continue
                head, _, rest = csv.partition(",")
                src.payload[eff.field] = rest
                self._delta(kind="token_updated", token=src.id, payload=dict(src.payload))
                target_ref = self._stage(eff.to)
                target = None
                if target_ref in minted_at:
                    at = self._tokens_at(target_ref)
                    target = at[-1] if at else None
                if target is None:
                    target = self._mint(target_ref, {})
                    self._delta(kind="token_created", token=target.id, stage=str(target_ref), payload={})
                target.payload = {eff.to_field: head}
                self._delta(kind="token_updated", token=target.id, payload=dict(target.payload))
            elif eff.op == "append_moved":
                carriers = [t for t in moved if eff.field in t.payload]
                if not carriers:
                    continue
                mover = carriers[-1]
                dst_toks = sorted(
                    (
                        t
                        for t in self.state.tokens.values()
                        if _under(t.location.path, eff.to) and eff.to_field in t.payload
                    ),
                    key=Token.sort_key,
                )
                if not dst_toks:
                    continue
                dst = dst_toks[0]
                cur = str(dst.payload[eff.to_field])
                piece = str(mover.payload[eff.field])
                dst.payload[eff.to_field] = piece if cur == "" else f"{cur},{piece}"
                self._delta(kind="token_updated", token=dst.id, payload=dict(dst.payload))
            else:
                raise TmError("E_VALIDATION", f"unknown effect op {eff.op!r}")

    # -- firing --------------------------------------------------------------

    def fire(self, node_id: str, strict: bool = True) -> dict:
        """Fire one node; returns the trace entry {tick, node, deltas}."""
        if node_id not in self.behavior.nodes:
            raise TmError("E_UNKNOWN_EVENT", f"{node_id!r} is not a behavior node")
        graph_ok = self._graph_enabled(node_id)
        if strict and not graph_ok:
            raise TmError("E_NOT_ENABLED", f"{node_id!r} has no pending activation")
        self._deltas = []
        entry_tick = self.state.tick
        if node_id in self.catalog.negatives:
            target = self.catalog.negatives[node_id].target
            prev = self.state.region_states[target]
            if prev.is_actual:
                # back to potentiality; the occurrence count is history, keep it
                self.state.region_states[target] = RegionState(occurrences=prev.occurrences)
                self._delta(kind="region_potentialized", event=target)
            else:
                if strict:
                    raise TmError(
                        "E_NOT_ENABLED", f"reverting {target!r} while already potential"
                    )
                self._delta(kind="noop_reversion", event=target)
        else:
            if not self._tokens_satisfy(node_id):
                if strict:
                    raise TmError("E_NO_TOKEN", f"inbound token missing for {node_id!r}")
            else:
                region = self.catalog.events[node_id].region
                if region is not None:
                    self._execute_region(node_id, region)
            prev = self.state.region_states[node_id]
            nxt = RegionState(
                state=ACTUAL, since=entry_tick, occurrences=prev.occurrences + 1
            )
            self.state.region_states[node_id] = nxt
            self._delta(kind="region_actualized", event=node_id, occurrences=nxt.occurrences)
        self._consume_activation(node_id)
        self.state.fired_nodes.add(node_id)
        self.state.fired_log.append((entry_tick, node_id))
        self._produce_marks(node_id)
        self.state.tick += self.config.durations.get(node_id, 1)
        entry = {"tick": entry_tick, "node": node_id, "deltas": self._deltas}
        self._deltas = []
        return entry

    def run(self, policy: str = POLICY_FIRST, max_ticks: int = 100) -> Trace:
        """Fire until quiescence or the tick limit; deterministic per policy."""
        trace = Trace(model=self.model.name, behavior=self.behavior.name, policy=policy)
        while True:
            if self.state.tick >= max_ticks:
                if "E_TICK_LIMIT" not in trace.flags:
                    trace.flags.append("E_TICK_LIMIT")
                break
            en = sorted(self.enabled())
            if policy == POLICY_FIRST:
                if not en:
                    break
                trace.entries.append(self.fire(en[0]))
            elif policy == POLICY_SCRIPT:
                queue = self.state.choice_script.setdefault(POLICY_KEY, [])
                if queue:
                    trace.entries.append(self.fire(queue.pop(0)))
                elif not en:
                    break
                elif len(en) == 1:
                    trace.entries.append(self.fire(en[0]))
                else:
                    raise TmError(
                        "E_SCRIPT_EXHAUSTED",
                        f"script ran out with {len(en)} nodes enabled: {en}",
                    )
            else:
                raise TmError("E_VALIDATION", f"unknown policy {policy!r}")
        trace.final_state_digest = self.digest()
        return trace


def init(
    model: StaticModel,
    catalog: EventCatalog,
    behavior_name: str,
    config: Optional[SimConfig] = None,
) -> Simulation:
    return Simulation(model, catalog, behavior_name, config)


# ---------------------------------------------------------------------------
# trace conformance


def check_trace(trace: Trace, catalog: EventCatalog, behavior: BehaviorModel) -> TraceReport:
    """Replay a trace against a behavior, reporting the first violation.

    A firing conforms when its node is an initial node not yet fired, or
    some previously fired node has an edge to it whose guard is consistent
    with the token state reconstructed from the recorded deltas.  Reversions
    of regions that were never actual are violations.
    """
    fired: set[str] = set()
    actual: set[str] = set()
    token_loc: dict[int, str] = {}
    token_payload: dict[int, dict] = {}

    def guard_consistent(edge: Edge) -> bool:
        g = edge.guard
        if g is None or g.kind == SCRIPTED:
            return True  # script choices are not reconstructible from a trace
        region = catalog.event_for_node(edge.src).region
        if region is None:
            return False
        stage_names = {str(s) for s in region.stages}
        values = [
            token_payload[tid][g.field]
            for tid, loc in sorted(token_loc.items(), key=lambda kv: (kv[1], kv[0]))
            if loc in stage_names and g.field in token_payload[tid]
        ]
        if not values:
            return False
        first = values[0]
        return (first == g.value) if g.kind == FIELD_EQ else (first != g.value)

    for i, entry in enumerate(trace.entries):
        node = entry["node"]
        if node not in behavior.nodes:
            return TraceReport(False, i, f"{node!r} is not a node of {behavior.name!r}")
        ok = node in behavior.initial and node not in fired
        if not ok:
            for edge in behavior.edges:
                if edge.dst == node and edge.src in fired and guard_consistent(edge):
                    ok = True
                    break
        if not ok:
            return TraceReport(False, i, f"{node!r} fired without an activated edge")
        if node in catalog.negatives:
            target = catalog.negatives[node].target
            noop = any(d.get("kind") == "noop_reversion" for d in entry["deltas"])
            if target not in actual and not noop:
                return TraceReport(
                    False, i, f"reversion of {target!r} which was never actual"
                )
            actual.discard(target)
        fired.add(node)
        for d in entry["deltas"]:
            kind = d.get("kind")
            if kind == "token_created":
                token_loc[d["token"]] = d["stage"]
                token_payload[d["token"]] = dict(d.get("payload", {}))
            elif kind == "token_moved":
                token_loc[d["token"]] = d["to"]
            elif kind == "token_updated":
                token_payload[d["token"]] = dict(d.get("payload", {}))
            elif kind == "region_actualized":
                actual.add(d["event"])
            elif kind == "region_potentialized":
                actual.discard(d["event"])
    return TraceReport(True)
