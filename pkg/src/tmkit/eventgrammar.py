"""Event schemas: grammars whose sentences are partially ordered event traces.

A schema declares one or more root rules.  Deriving a schema produces a trace
graph: a two-level forest (one instance node per root, leaf nodes for the
derived events) plus a `precedes` partial order.  Within one root the leaves
form a chain; COORDINATE clauses add cross-root ordering edges between the
i-th occurrences of two labels; SHARE ALL declares that two roots narrate the
same underlying occurrences for every atom name they have in common.

Pattern syntax, by example::

    schema deposit

    ROOT Customer:
        insert_card , (* put_item $d *) , take_receipt ;

    rule put_item: select_slot , drop ;

    SHARE ALL Customer Terminal ;
    COORDINATE Customer $d PRECEDES Bank $b ;

`,` sequences, `|` alternates, `(* p *)` repeats zero or more times,
`{+ p +}` one or more times, `( p )` groups, and `$x` labels the atom to its
left.  An identifier naming another rule is inlined; anything else is a
terminal event atom.  Without an explicit ROOT marker the first rule is the
sole root.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Union

from .diagnostics import Diagnostic, ERROR, ParseResult, TmError, WARNING, sort_diagnostics
from .events import BehaviorModel, Edge, Event, EventCatalog
from .lex import IDENT, SYMBOL, SyntaxProblem, Token, TokenStream, tokenize

SYMBOLS = ["(*", "*)", "{+", "+}", "(", ")", "|", ",", ";", ":", "$"]

STAR_DEFAULT = 2


# ---------------------------------------------------------------------------
# pattern AST


@dataclass(frozen=True)
class Atom:
    name: str
    label: Optional[str] = None


@dataclass(frozen=True)
class Seq:
    items: tuple

    def __init__(self, items):
        object.__setattr__(self, "items", tuple(items))


@dataclass(frozen=True)
class Alt:
    options: tuple

    def __init__(self, options):
        object.__setattr__(self, "options", tuple(options))


@dataclass(frozen=True)
class Star:
    item: "Pattern"


@dataclass(frozen=True)
class Plus:
    item: "Pattern"


Pattern = Union[Atom, Seq, Alt, Star, Plus]


@dataclass
class Rule:
    name: str
    pattern: Pattern
    is_root: bool = False


@dataclass
class Coordinate:
    left_root: str
    left_label: str
    right_root: str
    right_label: str


@dataclass
class Grammar:
    name: str
    rules: list[Rule] = field(default_factory=list)
    shares: list[tuple[str, str]] = field(default_factory=list)
    coordinates: list[Coordinate] = field(default_factory=list)

    def rule(self, name: str) -> Optional[Rule]:
        for r in self.rules:
            if r.name == name:
                return r
        return None

    def roots(self) -> list[Rule]:
        marked = [r for r in self.rules if r.is_root]
        if marked:
            return marked
        return self.rules[:1]


# ---------------------------------------------------------------------------
# parsing


def _ident(ts: TokenStream, what: str) -> Token:
    tok = ts.peek()
    if tok.kind != IDENT:
        raise SyntaxProblem(
            f"expected {what}, found {tok.text or tok.kind!r}", tok.line, tok.col
        )
    return ts.next()


def _parse_pattern(ts: TokenStream) -> Pattern:
    return _parse_alt(ts)


def _parse_alt(ts: TokenStream) -> Pattern:
    options = [_parse_seq(ts)]
    while ts.accept(SYMBOL, "|"):
        options.append(_parse_seq(ts))
    return options[0] if len(options) == 1 else Alt(options)


def _parse_seq(ts: TokenStream) -> Pattern:
    items = [_parse_item(ts)]
    while ts.accept(SYMBOL, ","):
        items.append(_parse_item(ts))
    return items[0] if len(items) == 1 else Seq(items)


def _parse_item(ts: TokenStream) -> Pattern:
    if ts.accept(SYMBOL, "(*"):
        inner = _parse_alt(ts)
        ts.expect(SYMBOL, "*)")
        return Star(inner)
    if ts.accept(SYMBOL, "{+"):
        inner = _parse_alt(ts)
        ts.expect(SYMBOL, "+}")
        return Plus(inner)
    if ts.accept(SYMBOL, "("):
        inner = _parse_alt(ts)
        ts.expect(SYMBOL, ")")
        return inner
    name_tok = _ident(ts, "event or rule name")
    label = None
    if ts.accept(SYMBOL, "$"):
        label = _ident(ts, "label name").text
    return Atom(name_tok.text, label)


def parse_grammar(text: str) -> ParseResult:
    diags: list[Diagnostic] = []
    try:
        ts = TokenStream(tokenize(text, SYMBOLS))
        ts.expect_keyword("schema")
        name = _ident(ts, "schema name").text
        grammar = Grammar(name=name)
        while not ts.at_end():
            tok = ts.peek()
            if tok.kind == IDENT and tok.text in ("ROOT", "rule"):
                ts.next()
                rule_tok = _ident(ts, "rule name")
                ts.expect(SYMBOL, ":")
                pattern = _parse_pattern(ts)
                ts.expect(SYMBOL, ";")
                if grammar.rule(rule_tok.text) is not None:
                    diags.append(
                        Diagnostic(
                            "E_DUP_NAME",
                            f"rule {rule_tok.text!r} declared twice",
                            ERROR,
                            span=rule_tok.span,
                        )
                    )
                    continue
                grammar.rules.append(Rule(rule_tok.text, pattern, is_root=tok.text == "ROOT"))
            elif tok.kind == IDENT and tok.text == "SHARE":
                ts.next()
                ts.expect_keyword("ALL")
                a = _ident(ts, "root name")
                b = _ident(ts, "root name")
                ts.expect(SYMBOL, ";")
                grammar.shares.append((a.text, b.text))
            elif tok.kind == IDENT and tok.text == "COORDINATE":
                ts.next()
                a = _ident(ts, "root name")
                ts.expect(SYMBOL, "$")
                x = _ident(ts, "label name")
                ts.expect_keyword("PRECEDES")
                b = _ident(ts, "root name")
                ts.expect(SYMBOL, "$")
                y = _ident(ts, "label name")
                ts.expect(SYMBOL, ";")
                grammar.coordinates.append(Coordinate(a.text, x.text, b.text, y.text))
            else:
                raise SyntaxProblem(
                    "expected ROOT, rule, SHARE or COORDINATE", tok.line, tok.col
                )
    except SyntaxProblem as sp:
        diags.append(sp.diagnostic)
        return ParseResult(None, sort_diagnostics(diags))
    diags += validate_grammar(grammar)
    return ParseResult(grammar, sort_diagnostics(diags))


# ---------------------------------------------------------------------------
# structural queries


def _inline(grammar: Grammar, pattern: Pattern, active: tuple = ()) -> Pattern:
    """Replace rule references with their patterns; rejects recursion."""
    if isinstance(pattern, Atom):
        target = grammar.rule(pattern.name)
        if target is None:
            return pattern
        if pattern.name in active:
            raise TmError("E_VALIDATION", f"rule {pattern.name!r} is recursive")
        return _inline(grammar, target.pattern, active + (pattern.name,))
    if isinstance(pattern, Seq):
        return Seq([_inline(grammar, p, active) for p in pattern.items])
    if isinstance(pattern, Alt):
        return Alt([_inline(grammar, p, active) for p in pattern.options])
    if isinstance(pattern, Star):
        return Star(_inline(grammar, pattern.item, active))
    return Plus(_inline(grammar, pattern.item, active))


def _walk_atoms(pattern: Pattern):
    if isinstance(pattern, Atom):
        yield pattern
    elif isinstance(pattern, Seq):
        for p in pattern.items:
            yield from _walk_atoms(p)
    elif isinstance(pattern, Alt):
        for p in pattern.options:
            yield from _walk_atoms(p)
    else:
        yield from _walk_atoms(pattern.item)


def atom_names(grammar: Grammar, root_name: str) -> set[str]:
    rule = grammar.rule(root_name)
    if rule is None:
        raise TmError("E_UNRESOLVED", f"no rule named {root_name!r}")
    return {a.name for a in _walk_atoms(_inline(grammar, rule.pattern))}


def label_names(grammar: Grammar, root_name: str, label: str) -> set[str]:
    """Atom names carrying a given label anywhere in the root's pattern."""
    rule = grammar.rule(root_name)
    if rule is None:
        raise TmError("E_UNRESOLVED", f"no rule named {root_name!r}")
    return {
        a.name for a in _walk_atoms(_inline(grammar, rule.pattern)) if a.label == label
    }


def validate_grammar(grammar: Grammar) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    root_names = {r.name for r in grammar.roots()}
    for rule in grammar.rules:
        try:
            inlined = _inline(grammar, rule.pattern)
        except TmError as err:
            diags.append(err.as_diagnostic(path=rule.name))
            continue
        for atom in _walk_atoms(rule.pattern):
            if grammar.rule(atom.name) is not None and atom.label is not None:
                diags.append(
                    Diagnostic(
                        "E_VALIDATION",
                        f"label ${atom.label} attached to rule reference {atom.name!r}",
                        ERROR,
                        path=rule.name,
                    )
                )
        del inlined
    def check_root(name: str, where: str):
        if name not in root_names:
            diags.append(
                Diagnostic(
                    "E_UNRESOLVED",
                    f"{where} refers to {name!r}, which is not a root rule",
                    ERROR,
                    path=where,
                )
            )
            return False
        return True

    for a, b in grammar.shares:
        check_root(a, "SHARE ALL")
        check_root(b, "SHARE ALL")
    for k, coord in enumerate(grammar.coordinates):
        where = f"COORDINATE[{k}]"
        if check_root(coord.left_root, where):
            if not label_names(grammar, coord.left_root, coord.left_label):
                diags.append(
                    Diagnostic(
                        "E_UNRESOLVED",
                        f"label ${coord.left_label} does not occur in {coord.left_root!r}",
                        ERROR,
                        path=where,
                    )
                )
        if check_root(coord.right_root, where):
            if not label_names(grammar, coord.right_root, coord.right_label):
                diags.append(
                    Diagnostic(
                        "E_UNRESOLVED",
                        f"label ${coord.right_label} does not occur in {coord.right_root!r}",
                        ERROR,
                        path=where,
                    )
                )
    return sort_diagnostics(diags)


# ---------------------------------------------------------------------------
# Glushkov construction: positions, first/last/follow, NFA membership


@dataclass
class PatternAutomaton:
    atoms: list[Atom]  # position -> atom
    nullable: bool
    first: set[int]
    last: set[int]
    follow: dict[int, set[int]]

    def accepts(self, names: list[str]) -> bool:
        states = set(self.first)
        if not names:
            return self.nullable
        for i, name in enumerate(names):
            states = {p for p in states if self.atoms[p].name == name}
            if not states:
                return False
            if i == len(names) - 1:
                return any(p in self.last for p in states)
            states = {q for p in states for q in self.follow[p]}
        return False


def build_automaton(pattern: Pattern) -> PatternAutomaton:
    atoms: list[Atom] = []
    follow: dict[int, set[int]] = {}

    def walk(p: Pattern) -> tuple[bool, set[int], set[int]]:
        if isinstance(p, Atom):
            pos = len(atoms)
            atoms.append(p)
            follow[pos] = set()
            return False, {pos}, {pos}
        if isinstance(p, Alt):
            nullable, first, last = False, set(), set()
            for opt in p.options:
                n, f, l = walk(opt)
                nullable, first, last = nullable or n, first | f, last | l
            return nullable, first, last
        if isinstance(p, Seq):
            nullable, first, last = True, set(), set()
            for item in p.items:
                n, f, l = walk(item)
                for a in last:
                    follow[a] |= f
                if nullable:
                    first |= f
                last = l if not n else last | l
                nullable = nullable and n
            return nullable, first, last
        # Star and Plus both loop last back to first
        n, f, l = walk(p.item)
        for a in l:
            follow[a] |= f
        return (True, f, l) if isinstance(p, Star) else (n, f, l)

    nullable, first, last = walk(pattern)
    return PatternAutomaton(atoms, nullable, first, last, follow)


def root_automaton(grammar: Grammar, root_name: str) -> PatternAutomaton:
    rule = grammar.rule(root_name)
    if rule is None:
        raise TmError("E_UNRESOLVED", f"no rule named {root_name!r}")
    return build_automaton(_inline(grammar, rule.pattern))


# ---------------------------------------------------------------------------
# trace graphs


@dataclass
class TraceNode:
    id: int
    name: str
    parent: Optional[int] = None
    label: Optional[str] = None


@dataclass
class TraceGraph:
    name: str
    nodes: list[TraceNode] = field(default_factory=list)
    precedes: list[tuple[int, int]] = field(default_factory=list)

    def roots(self) -> list[TraceNode]:
        return [n for n in self.nodes if n.parent is None]

    def children(self, parent_id: int) -> list[TraceNode]:
        return [n for n in self.nodes if n.parent == parent_id]

    def node(self, node_id: int) -> TraceNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise TmError("E_UNRESOLVED", f"no trace node {node_id}")

    def has_cycle(self) -> bool:
        adj: dict[int, list[int]] = {}
        for a, b in self.precedes:
            adj.setdefault(a, []).append(b)
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {n.id: WHITE for n in self.nodes}

        def visit(v: int) -> bool:
            color[v] = GRAY
            for w in adj.get(v, []):
                if color[w] == GRAY:
                    return True
                if color[w] == WHITE and visit(w):
                    return True
            color[v] = BLACK
            return False

        return any(color[n.id] == WHITE and visit(n.id) for n in self.nodes)

    def reaches(self, src: int, dst: int) -> bool:
        adj: dict[int, list[int]] = {}
        for a, b in self.precedes:
            adj.setdefault(a, []).append(b)
        seen, stack = set(), [src]
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj.get(v, []))
        return False

    def to_document(self) -> dict:
        return {
            "kind": "trace_graph",
            "name": self.name,
            "nodes": [
                {
                    "id": n.id,
                    "name": n.name,
                    **({"parent": n.parent} if n.parent is not None else {}),
                    **({"label": n.label} if n.label is not None else {}),
                }
                for n in self.nodes
            ],
            "precedes": [list(p) for p in self.precedes],
        }


# ---------------------------------------------------------------------------
# derivation


def _derive_leaves(
    pattern: Pattern, rng: random.Random, star_max: int, plus_max: int
) -> list[Atom]:
    if isinstance(pattern, Atom):
        return [pattern]
    if isinstance(pattern, Seq):
        out = []
        for item in pattern.items:
            out += _derive_leaves(item, rng, star_max, plus_max)
        return out
    if isinstance(pattern, Alt):
        choice = rng.randrange(len(pattern.options))
        return _derive_leaves(pattern.options[choice], rng, star_max, plus_max)
    if isinstance(pattern, Star):
        reps = rng.randint(0, star_max)
    else:
        reps = rng.randint(1, max(1, plus_max))
    out = []
    for _ in range(reps):
        out += _derive_leaves(pattern.item, rng, star_max, plus_max)
    return out


def _occurrences(graph: TraceGraph, grammar: Grammar, root: str, label: str) -> list[int]:
    """Leaf ids for the i-th occurrences of a label under a root, in order."""
    instance = next((n for n in graph.roots() if n.name == root), None)
    if instance is None:
        return []
    names = label_names(grammar, root, label)
    out = []
    for leaf in graph.children(instance.id):
        if leaf.label is not None:
            if leaf.label == label:
                out.append(leaf.id)
        elif leaf.name in names:
            out.append(leaf.id)
    return out


def derive_trace(
    grammar: Grammar,
    seed: int = 0,
    star_max: int = STAR_DEFAULT,
    plus_max: Optional[int] = None,
    max_attempts: int = 1000,
) -> tuple[TraceGraph, list[Diagnostic]]:
    """Sample one trace graph from the schema, deterministically per seed.

    `star_max` bounds `(* *)` repeats from above; `plus_max` bounds `{+ +}`
    repeats (defaults to `star_max`).  Coordinate edges can close a cycle
    when the independent per-root samples happen to interleave badly; such
    samples are rejected and redrawn with a seed derived from (seed,
    attempt).  Share partners whose alphabet is a subset of the other's are
    not sampled at all: their leaf row is the projection of the partner's
    row, checked against their own pattern.
    """
    if plus_max is None:
        plus_max = star_max
    errors = [d for d in validate_grammar(grammar) if d.is_error]
    if errors:
        raise TmError("E_VALIDATION", f"invalid grammar: {errors[0].render()}")
    projected: dict[str, str] = {}  # derived root -> source root
    for a, b in grammar.shares:
        if atom_names(grammar, b) <= atom_names(grammar, a):
            projected[b] = a
        elif atom_names(grammar, a) <= atom_names(grammar, b):
            projected[a] = b
    last_err: Optional[TmError] = None
    for attempt in range(max_attempts):
        rng = random.Random(seed if attempt == 0 else seed * 1_000_003 + attempt)
        graph = TraceGraph(name=grammar.name)
        diags: list[Diagnostic] = []
        next_id = 1
        rows: dict[str, list[TraceNode]] = {}

        def add_root(name: str) -> TraceNode:
            nonlocal next_id
            node = TraceNode(id=next_id, name=name)
            next_id += 1
            graph.nodes.append(node)
            return node

        def add_leaf(parent: int, atom: Atom) -> TraceNode:
            nonlocal next_id
            node = TraceNode(id=next_id, name=atom.name, parent=parent, label=atom.label)
            next_id += 1
            graph.nodes.append(node)
            return node

        try:
            for rule in grammar.roots():
                if rule.name in projected:
                    continue
                inst = add_root(rule.name)
                leaves = _derive_leaves(
                    _inline(grammar, rule.pattern), rng, star_max, plus_max
                )
                rows[rule.name] = [add_leaf(inst.id, a) for a in leaves]
            for derived, source in projected.items():
                inst = add_root(derived)
                keep = atom_names(grammar, derived)
                names = [n.name for n in rows.get(source, []) if n.name in keep]
                if not root_automaton(grammar, derived).accepts(names):
                    raise TmError(
                        "E_SHARE_MISMATCH",
                        f"projection of {source!r} onto {derived!r} is not derivable: {names}",
                    )
                rows[derived] = [add_leaf(inst.id, Atom(n)) for n in names]
        except TmError as err:
            if err.code == "E_SHARE_MISMATCH":
                last_err = err
                continue
            raise
        for a, b in grammar.shares:
            if a in projected or b in projected:
                continue
            shared = atom_names(grammar, a) & atom_names(grammar, b)
            left = [n.name for n in rows.get(a, []) if n.name in shared]
            right = [n.name for n in rows.get(b, []) if n.name in shared]
            if left != right:
                last_err = TmError(
                    "E_SHARE_MISMATCH",
                    f"{a!r} and {b!r} disagree on shared events: {left} vs {right}",
                )
                break
        else:
            last_err = None
        if last_err is not None:
            continue
        for row in rows.values():
            for prev, nxt in zip(row, row[1:]):
                graph.precedes.append((prev.id, nxt.id))
        for k, coord in enumerate(grammar.coordinates):
            lefts = _occurrences(graph, grammar, coord.left_root, coord.left_label)
            rights = _occurrences(graph, grammar, coord.right_root, coord.right_label)
            for li, ri in zip(lefts, rights):
                graph.precedes.append((li, ri))
            extra = abs(len(lefts) - len(rights))
            if extra:
                side = coord.left_label if len(lefts) > len(rights) else coord.right_label
                diags.append(
                    Diagnostic(
                        "W_COORD_UNMATCHED",
                        f"{extra} occurrence(s) of ${side} left unpaired",
                        WARNING,
                        path=f"COORDINATE[{k}]",
                    )
                )
        if graph.has_cycle():
            last_err = TmError("E_COORD_CYCLE", "coordination closed a precedence cycle")
            continue
        return graph, sort_diagnostics(diags)
    assert last_err is not None
    raise TmError(last_err.code, f"{last_err.message} (after {max_attempts} attempts)")


# ---------------------------------------------------------------------------
# membership


@dataclass
class MembershipReport:
    ok: bool
    constraint: Optional[str] = None
    reason: Optional[str] = None
    warnings: list[Diagnostic] = field(default_factory=list)


def _chain_order(graph: TraceGraph, leaves: list[TraceNode]) -> Optional[list[TraceNode]]:
    """Topological order of the leaves under their direct edges; None unless total."""
    ids = {n.id for n in leaves}
    edges = [(a, b) for a, b in graph.precedes if a in ids and b in ids]
    indeg = {n.id: 0 for n in leaves}
    for _, b in edges:
        indeg[b] += 1
    by_id = {n.id: n for n in leaves}
    out: list[TraceNode] = []
    remaining = set(ids)
    while remaining:
        # a unique source at every step is exactly a unique topological order
        sources = [i for i in remaining if indeg[i] == 0]
        if len(sources) != 1:
            return None
        src = sources[0]
        out.append(by_id[src])
        remaining.discard(src)
        for a, b in edges:
            if a == src:
                indeg[b] -= 1
    return out


def check_membership(grammar: Grammar, graph: TraceGraph) -> MembershipReport:
    """Check a trace graph against the schema, reporting the first failure.

    Constraints are checked in a fixed order: each root's leaf row must be a
    totally ordered sentence of the root's pattern, coordinated occurrences
    must be ordered in the stated direction, and the forest must be exactly
    two levels deep.
    """
    errors = [d for d in validate_grammar(grammar) if d.is_error]
    if errors:
        raise TmError("E_VALIDATION", f"invalid grammar: {errors[0].render()}")
    warnings: list[Diagnostic] = []
    root_names = [r.name for r in grammar.roots()]
    for name in root_names:
        instances = [n for n in graph.roots() if n.name == name]
        if len(instances) != 1:
            return MembershipReport(
                False,
                f"sequence:{name}",
                f"expected exactly one {name!r} instance, found {len(instances)}",
                warnings,
            )
        leaves = graph.children(instances[0].id)
        ordered = _chain_order(graph, leaves) if leaves else []
        if ordered is None:
            return MembershipReport(
                False,
                f"sequence:{name}",
                f"leaves of {name!r} are not totally ordered",
                warnings,
            )
        names = [n.name for n in ordered]
        if not root_automaton(grammar, name).accepts(names):
            return MembershipReport(
                False,
                f"sequence:{name}",
                f"{names} is not a sentence of {name!r}",
                warnings,
            )
    for k, coord in enumerate(grammar.coordinates):
        lefts = _occurrences(graph, grammar, coord.left_root, coord.left_label)
        rights = _occurrences(graph, grammar, coord.right_root, coord.right_label)
        for i, (li, ri) in enumerate(zip(lefts, rights)):
            if not graph.reaches(li, ri):
                return MembershipReport(
                    False,
                    f"coordinate:{k}",
                    f"occurrence {i} of ${coord.left_label} does not precede "
                    f"${coord.right_label}",
                    warnings,
                )
        extra = abs(len(lefts) - len(rights))
        if extra:
            side = coord.left_label if len(lefts) > len(rights) else coord.right_label
            warnings.append(
                Diagnostic(
                    "W_COORD_UNMATCHED",
                    f"{extra} occurrence(s) of ${side} left unpaired",
                    WARNING,
                    path=f"COORDINATE[{k}]",
                )
            )
    for node in graph.nodes:
        if node.parent is None:
            if node.name not in root_names:
                return MembershipReport(
                    False, "nesting", f"top-level node {node.name!r} is not a root", warnings
                )
        else:
            parent = graph.node(node.parent)
            if parent.parent is not None:
                return MembershipReport(
                    False,
                    "nesting",
                    f"node {node.id} nests deeper than one level",
                    warnings,
                )
    return MembershipReport(True, warnings=warnings)


# ---------------------------------------------------------------------------
# compiling a root pattern to a behavior skeleton


def grammar_to_behavior(
    grammar: Grammar, root_name: Optional[str] = None
) -> tuple[EventCatalog, BehaviorModel]:
    """Compile one root's pattern into an unbound behavior model.

    Each atom occurrence becomes an event node with no region (a skeleton to
    be bound to a static model later); edges mirror the pattern's follow
    relation, so repetition shows up as back edges.
    """
    roots = grammar.roots()
    if not roots:
        raise TmError("E_VALIDATION", "grammar has no rules")
    if root_name is None:
        root_name = roots[0].name
    elif root_name not in {r.name for r in roots}:
        raise TmError("E_UNRESOLVED", f"no root named {root_name!r}")
    auto = root_automaton(grammar, root_name)
    counts: dict[str, int] = {}
    for atom in auto.atoms:
        counts[atom.name] = counts.get(atom.name, 0) + 1
    node_ids: list[str] = []
    seen: dict[str, int] = {}
    for atom in auto.atoms:
        if counts[atom.name] == 1:
            node_ids.append(atom.name)
        else:
            seen[atom.name] = seen.get(atom.name, 0) + 1
            node_ids.append(f"{atom.name}_{seen[atom.name]}")
    catalog = EventCatalog()
    for pos, node_id in enumerate(node_ids):
        catalog.events[node_id] = Event(
            id=node_id, description=auto.atoms[pos].name, time_slot=None, region=None
        )
    edges = []
    seen_pairs = set()
    for pos in sorted(auto.follow):
        for nxt in sorted(auto.follow[pos]):
            pair = (node_ids[pos], node_ids[nxt])
            if pair not in seen_pairs:
                seen_pairs.add(pair)
                edges.append(Edge(src=pair[0], dst=pair[1], guard=None))
    behavior = BehaviorModel(
        name=root_name,
        nodes=set(node_ids),
        edges=edges,
        initial={node_ids[p] for p in auto.first},
    )
    catalog.behaviors[root_name] = behavior
    return catalog, behavior
