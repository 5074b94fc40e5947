"""Tiny tokenizer shared by the model, events, grammar and axiom parsers.

Each parser hands in its own symbol table (multi-char symbols first).  The
stream tracks 1-based line/column so diagnostics can point into the source.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, SourceSpan

IDENT = "ident"
NUMBER = "number"
STRING = "string"
SYMBOL = "symbol"
EOF = "eof"


class SyntaxProblem(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.diagnostic = Diagnostic(
            "E_SYNTAX", message, span=SourceSpan(line, col)
        )


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.col)


def tokenize(text: str, symbols: list[str]) -> list[Token]:
    """Split text into tokens; '#' starts a comment running to end of line."""
    # longest symbols first so '->' wins over '-' style prefixes
    symbols = sorted(symbols, key=len, reverse=True)
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)

    def bump(s: str):
        nonlocal line, col
        for ch in s:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            bump(ch)
            i += 1
            continue
        if ch == "#":
            j = text.find("\n", i)
            j = n if j < 0 else j
            bump(text[i:j])
            i = j
            continue
        if ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise SyntaxProblem("unterminated string", line, col)
                j += 1
            if j >= n:
                raise SyntaxProblem("unterminated string", line, col)
            tokens.append(Token(STRING, text[i + 1 : j], line, col))
            bump(text[i : j + 1])
            i = j + 1
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token(NUMBER, text[i:j], line, col))
            bump(text[i:j])
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token(IDENT, text[i:j], line, col))
            bump(text[i:j])
            i = j
            continue
        for sym in symbols:
            if text.startswith(sym, i):
                tokens.append(Token(SYMBOL, sym, line, col))
                bump(sym)
                i += len(sym)
                break
        else:
            raise SyntaxProblem(f"unexpected character {ch!r}", line, col)
    tokens.append(Token(EOF, "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.peek().kind == EOF

    def check(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.check(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.check(kind, text):
            want = text if text is not None else kind
            got = tok.text or tok.kind
            raise SyntaxProblem(
                f"expected {want!r}, found {got!r}", tok.line, tok.col
            )
        return self.next()

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != IDENT or tok.text != word:
            raise SyntaxProblem(
                f"expected keyword {word!r}, found {tok.text or tok.kind!r}",
                tok.line,
                tok.col,
            )
        return self.next()

    def accept_keyword(self, word: str) -> Token | None:
        if self.check(IDENT, word):
            return self.next()
        return None
