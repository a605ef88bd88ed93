"""Tokenizer shared by the specification language and the model file format."""

from __future__ import annotations

from dataclasses import dataclass


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, REAL, STRING, a keyword, an operator, or EOF
    value: object
    line: int
    col: int

    def __repr__(self):
        return f"Token({self.kind}, {self.value!r}, {self.line}:{self.col})"


# Longest first so '->' wins over '-', '<=' over '<', etc.
_OPERATORS = (
    "->", ":=", "<=", ">=", "==", "!=", "::",
    "{", "}", "(", ")", ":", ";", ",", ".", "|", "&", "!",
    "<", ">", "=", "+", "-", "*", "/",
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


def tokenize(text: str, keywords: frozenset[str] = frozenset()) -> list[Token]:
    """Split `text` into tokens. `//` starts a comment running to end of line.

    Identifiers listed in `keywords` are emitted with their own kind so the
    parser can match them directly.
    """
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf = []
            while i < n and text[i] != '"':
                c = text[i]
                if c == "\n":
                    raise LexError("unterminated string", start_line, start_col)
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in _ESCAPES:
                        raise LexError("bad escape in string", line, col)
                    buf.append(_ESCAPES[text[i + 1]])
                    i += 2
                    col += 2
                    continue
                buf.append(c)
                i += 1
                col += 1
            if i >= n:
                raise LexError("unterminated string", start_line, start_col)
            i += 1
            col += 1
            tokens.append(Token("STRING", "".join(buf), start_line, start_col))
            continue
        if ch.isdigit():
            start_col = col
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_real = False
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                is_real = True
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    is_real = True
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lexeme = text[i:j]
            if is_real:
                tokens.append(Token("REAL", float(lexeme), line, start_col))
            else:
                tokens.append(Token("INT", int(lexeme), line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            start_col = col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word if word in keywords else "IDENT"
            tokens.append(Token(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        for op in _OPERATORS:
            if text.startswith(op, i):
                tokens.append(Token(op, op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", None, line, col))
    return tokens


class TokenStream:
    """Cursor over a token list with error reporting helpers."""

    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    @property
    def current(self) -> Token:
        return self._tokens[self._pos]

    def peek(self, ahead: int = 1) -> Token:
        return self._tokens[min(self._pos + ahead, len(self._tokens) - 1)]

    def at(self, *kinds: str) -> bool:
        return self.current.kind in kinds

    def advance(self) -> Token:
        tok = self.current
        if tok.kind != "EOF":
            self._pos += 1
        return tok

    def accept(self, *kinds: str) -> Token | None:
        if self.at(*kinds):
            return self.advance()
        return None

    def expect(self, *kinds: str, error: type[Exception]) -> Token:
        if self.at(*kinds):
            return self.advance()
        tok = self.current
        expected = " or ".join(f"'{k}'" if k not in ("IDENT", "INT", "REAL", "STRING", "EOF") else k
                               for k in kinds)
        got = tok.kind if tok.kind in ("IDENT", "INT", "REAL", "STRING", "EOF") else f"'{tok.kind}'"
        raise error(f"expected {expected}, got {got}", tok.line, tok.col)
