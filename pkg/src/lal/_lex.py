"""Shared tokenizer for the formula/term/source-file grammars."""

import re

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<lolli>-o)
  | (?P<bangdoor>~!)
  | (?P<pardoor>~\$)
  | (?P<sym>[!$*.\\()=:;])
  | (?P<ident>[A-Za-z0-9_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)


class Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind, text, pos):
        self.kind = kind
        self.text = text
        self.pos = pos

    def __repr__(self):
        return f"Token({self.kind!r}, {self.text!r}, {self.pos})"


class SyntaxIssue(ValueError):
    """Parse failure with a character position."""

    def __init__(self, message, pos):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


def tokenize(text):
    toks = []
    i = 0
    n = len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise SyntaxIssue(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        if kind != "ws":
            if kind == "sym":
                kind = m.group()
            elif kind == "lolli":
                kind = "-o"
            elif kind == "bangdoor":
                kind = "~!"
            elif kind == "pardoor":
                kind = "~$"
            toks.append(Token(kind, m.group(), i))
        i = m.end()
    toks.append(Token("eof", "", n))
    return toks


class TokenStream:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, kind):
        t = self.peek()
        if t.kind != kind:
            raise SyntaxIssue(f"expected {kind!r}, found {t.text!r}", t.pos)
        return self.next()

    def at(self, kind):
        return self.peek().kind == kind
