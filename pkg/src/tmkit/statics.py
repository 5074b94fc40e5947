"""Static thinging-machine models.

A model is a tree of thimacs (thing/machine duals).  Each thimac's machine
declares a subset of the five stages; `create` is implicitly present on every
thimac even when not declared.  Arcs connect stages: `flow` arcs move things,
`trigger` arcs jump between otherwise unconnected flows and are exempt from
the flow legality table.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

from .diagnostics import Diagnostic, ERROR, TmError, sort_diagnostics


class StageKind(str, Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"

    def __str__(self) -> str:
        return self.value


# Canonical stage ordering used by the pretty-printer and DOT export.
STAGE_ORDER = [
    StageKind.CREATE,
    StageKind.PROCESS,
    StageKind.RELEASE,
    StageKind.TRANSFER,
    StageKind.RECEIVE,
]

FLOW = "flow"
TRIGGER = "trigger"

# Legal flow successions inside one machine.  Receive folds arrive+accept.
SAME_MACHINE_FLOWS = {
    (StageKind.CREATE, StageKind.PROCESS),
    (StageKind.CREATE, StageKind.RELEASE),
    (StageKind.RECEIVE, StageKind.PROCESS),
    (StageKind.RECEIVE, StageKind.RELEASE),
    (StageKind.PROCESS, StageKind.RELEASE),
    (StageKind.RELEASE, StageKind.TRANSFER),
    (StageKind.TRANSFER, StageKind.RECEIVE),
}

# Lenient mode lets a transfer feed a process directly (skipping receive).
LENIENT_EXTRA_FLOWS = {
    (StageKind.TRANSFER, StageKind.PROCESS),
}

# Across two machines the only legal flow is transfer-to-transfer.
CROSS_MACHINE_FLOWS = {
    (StageKind.TRANSFER, StageKind.TRANSFER),
}


def lenient_mode_default() -> bool:
    return os.environ.get("TMK_LENIENT", "") == "1"


@dataclass(frozen=True)
class StageRef:
    """A stage addressed by thimac path, e.g. Customer/Card.release."""

    path: str
    stage: StageKind

    def __str__(self) -> str:
        return f"{self.path}.{self.stage.value}"


@dataclass(frozen=True)
class ThimacRef:
    path: str

    def __str__(self) -> str:
        return self.path


@dataclass
class Arc:
    id: int
    kind: str  # FLOW or TRIGGER
    src: StageRef
    dst: StageRef
    label: Optional[str] = None

    def __str__(self) -> str:
        return f"{self.kind} {self.src} -> {self.dst}"


@dataclass
class Thimac:
    name: str
    stages: set[StageKind] = field(default_factory=set)
    children: list["Thimac"] = field(default_factory=list)

    def effective_stages(self) -> set[StageKind]:
        # create is always available even when not declared
        return self.stages | {StageKind.CREATE}


@dataclass
class StaticModel:
    name: str
    roots: list[Thimac] = field(default_factory=list)
    arcs: list[Arc] = field(default_factory=list)

    # -- structure walking ------------------------------------------------

    def walk(self) -> Iterator[tuple[str, Thimac]]:
        """Yield (path, thimac) in declaration order, parents first."""

        def rec(prefix: str, nodes: list[Thimac]):
            for t in nodes:
                path = f"{prefix}/{t.name}" if prefix else t.name
                yield path, t
                yield from rec(path, t.children)

        yield from rec("", self.roots)

    def thimac_at(self, path: str) -> Optional[Thimac]:
        for p, t in self.walk():
            if p == path:
                return t
        return None

    def has_stage(self, ref: StageRef) -> bool:
        t = self.thimac_at(ref.path)
        return t is not None and ref.stage in t.effective_stages()

    def flow_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if a.kind == FLOW]

    def trigger_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if a.kind == TRIGGER]


def resolve_path(model: StaticModel, text: str) -> Union[StageRef, ThimacRef]:
    """Resolve "A/B.release" to a StageRef or "A/B" to a ThimacRef.

    Raises TmError(E_UNRESOLVED) when the thimac path or the stage does not
    exist.  The create stage resolves on every thimac.
    """
    path, dot, stage_name = text.rpartition(".")
    if dot and stage_name in [k.value for k in StageKind]:
        thimac = model.thimac_at(path)
        if thimac is None:
            raise TmError("E_UNRESOLVED", f"no thimac at path {path!r}", path=text)
        kind = StageKind(stage_name)
        if kind not in thimac.effective_stages():
            raise TmError(
                "E_UNRESOLVED",
                f"thimac {path!r} does not declare stage {stage_name!r}",
                path=text,
            )
        return StageRef(path, kind)
    thimac = model.thimac_at(text)
    if thimac is None:
        raise TmError("E_UNRESOLVED", f"no thimac at path {text!r}", path=text)
    return ThimacRef(text)


def flow_is_legal(src: StageRef, dst: StageRef, lenient: bool = False) -> bool:
    pair = (src.stage, dst.stage)
    if src.path == dst.path:
        if pair in SAME_MACHINE_FLOWS:
            return True
        return lenient and pair in LENIENT_EXTRA_FLOWS
    return pair in CROSS_MACHINE_FLOWS


def validate_static(
    model: StaticModel, lenient: Optional[bool] = None
) -> list[Diagnostic]:
    """Check name uniqueness, arc resolution and flow legality.

    Returns diagnostics sorted by location; empty list means the model is
    well formed.  Trigger arcs are exempt from the flow table.
    """
    if lenient is None:
        lenient = lenient_mode_default()
    diags: list[Diagnostic] = []

    # sibling thimac names must be unique (same name under different parents
    # is fine, e.g. Customer/Card vs ATM/Card)
    def check_siblings(prefix: str, nodes: list[Thimac]):
        seen: set[str] = set()
        for t in nodes:
            path = f"{prefix}/{t.name}" if prefix else t.name
            if t.name in seen:
                diags.append(
                    Diagnostic(
                        "E_DUP_NAME",
                        f"duplicate sibling thimac {t.name!r}",
                        path=path,
                    )
                )
            seen.add(t.name)
            check_siblings(path, t.children)

    check_siblings("", model.roots)

    for arc in model.arcs:
        loc = f"arcs[{arc.id}]"
        bad_endpoint = False
        for end, ref in (("source", arc.src), ("destination", arc.dst)):
            if not model.has_stage(ref):
                diags.append(
                    Diagnostic(
                        "E_UNRESOLVED",
                        f"{arc.kind} arc {end} {ref} does not resolve",
                        path=loc,
                    )
                )
                bad_endpoint = True
        if bad_endpoint or arc.kind != FLOW:
            continue
        if not flow_is_legal(arc.src, arc.dst, lenient=lenient):
            where = (
                "within one machine"
                if arc.src.path == arc.dst.path
                else "across machines"
            )
            diags.append(
                Diagnostic(
                    "E_FLOW_ILLEGAL",
                    f"flow {arc.src} -> {arc.dst} is illegal {where}",
                    path=loc,
                )
            )

    return sort_diagnostics(diags)


def pretty_print(model: StaticModel) -> str:
    """Emit canonical DSL text; parse(pretty_print(m)) == m structurally."""
    lines: list[str] = [f"model {model.name}", ""]

    def emit_thimac(t: Thimac, indent: int):
        pad = "  " * indent
        lines.append(f"{pad}thimac {t.name} {{")
        if t.stages:
            ordered = [k.value for k in STAGE_ORDER if k in t.stages]
            lines.append(f"{pad}  machine: {', '.join(ordered)}")
        for child in t.children:
            emit_thimac(child, indent + 1)
        lines.append(f"{pad}}}")

    for root in model.roots:
        emit_thimac(root, 0)
    if model.arcs:
        lines.append("")
    for arc in model.arcs:
        line = f"{arc.kind} {arc.src} -> {arc.dst}"
        if arc.label is not None:
            line += f' label "{arc.label}"'
        lines.append(line)
    return "\n".join(lines) + "\n"
