"""Parser for the textual static-model notation (.tm files).

    model atm
    thimac Customer {
      machine: release, transfer
      thimac Card { machine: release, transfer }
    }
    flow Customer/Card.release -> ATM/Card.transfer label "card"
    trigger ATM/Card.process -> ATM/ID.create

Parsing is total: the result carries either a model or diagnostics.  Name
duplication and dangling arc endpoints are reported here with line/column
spans; flow legality lives in validate_static.
"""

from __future__ import annotations

from .diagnostics import Diagnostic, ParseResult, SourceSpan
from .lex import IDENT, STRING, SYMBOL, SyntaxProblem, Token, TokenStream, tokenize
from .statics import FLOW, TRIGGER, Arc, StageKind, StageRef, StaticModel, Thimac

SYMBOLS = ["->", "{", "}", ":", ",", ".", "/"]

STAGE_NAMES = {k.value for k in StageKind}


def _parse_stage_ref(ts: TokenStream) -> tuple[StageRef, Token]:
    first = ts.expect(IDENT)
    parts = [first.text]
    while ts.accept(SYMBOL, "/"):
        parts.append(ts.expect(IDENT).text)
    ts.expect(SYMBOL, ".")
    stage_tok = ts.expect(IDENT)
    if stage_tok.text not in STAGE_NAMES:
        raise SyntaxProblem(
            f"unknown stage kind {stage_tok.text!r}", stage_tok.line, stage_tok.col
        )
    return StageRef("/".join(parts), StageKind(stage_tok.text)), first


def _parse_thimac(ts: TokenStream) -> Thimac:
    name_tok = ts.expect(IDENT)
    thimac = Thimac(name=name_tok.text)
    ts.expect(SYMBOL, "{")
    if ts.accept_keyword("machine"):
        ts.expect(SYMBOL, ":")
        while True:
            stage_tok = ts.expect(IDENT)
            if stage_tok.text not in STAGE_NAMES:
                raise SyntaxProblem(
                    f"unknown stage kind {stage_tok.text!r}",
                    stage_tok.line,
                    stage_tok.col,
                )
            thimac.stages.add(StageKind(stage_tok.text))
            if not ts.accept(SYMBOL, ","):
                break
    while ts.accept_keyword("thimac"):
        thimac.children.append(_parse_thimac(ts))
    ts.expect(SYMBOL, "}")
    return thimac


def parse_model(text: str) -> ParseResult:
    """Parse DSL text into a StaticModel.

    Diagnostics: E_SYNTAX (malformed text), E_DUP_NAME (duplicate sibling
    thimacs), E_UNRESOLVED (arc endpoint that does not exist).
    """
    try:
        ts = TokenStream(tokenize(text, SYMBOLS))
        ts.expect_keyword("model")
        model = StaticModel(name=ts.expect(IDENT).text)
        spans: dict[int, tuple[SourceSpan, SourceSpan]] = {}
        while not ts.at_end():
            if ts.accept_keyword("thimac"):
                model.roots.append(_parse_thimac(ts))
                continue
            kw = ts.peek()
            if kw.kind == IDENT and kw.text in (FLOW, TRIGGER):
                ts.next()
                src, src_tok = _parse_stage_ref(ts)
                ts.expect(SYMBOL, "->")
                dst, dst_tok = _parse_stage_ref(ts)
                label = None
                if ts.accept_keyword("label"):
                    label = ts.expect(STRING).text
                arc = Arc(id=len(model.arcs), kind=kw.text, src=src, dst=dst, label=label)
                spans[arc.id] = (src_tok.span, dst_tok.span)
                model.arcs.append(arc)
                continue
            raise SyntaxProblem(
                f"expected 'thimac', 'flow' or 'trigger', found {kw.text or 'end of file'!r}",
                kw.line,
                kw.col,
            )
    except SyntaxProblem as exc:
        return ParseResult(value=None, diagnostics=[exc.diagnostic])

    diags: list[Diagnostic] = []

    def check_siblings(prefix: str, nodes: list[Thimac]):
        seen: set[str] = set()
        for t in nodes:
            path = f"{prefix}/{t.name}" if prefix else t.name
            if t.name in seen:
                diags.append(
                    Diagnostic("E_DUP_NAME", f"duplicate sibling thimac {t.name!r}", path=path)
                )
            seen.add(t.name)
            check_siblings(path, t.children)

    check_siblings("", model.roots)

    for arc in model.arcs:
        src_span, dst_span = spans[arc.id]
        for ref, span in ((arc.src, src_span), (arc.dst, dst_span)):
            if not model.has_stage(ref):
                diags.append(
                    Diagnostic(
                        "E_UNRESOLVED",
                        f"arc endpoint {ref} does not resolve",
                        span=span,
                    )
                )
    return ParseResult(value=model, diagnostics=diags)
