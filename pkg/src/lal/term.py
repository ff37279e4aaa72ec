"""The concrete term syntax: constructors, alpha-equality, parsing, printing.

Terms are the tagged tuples of `lal._termkernel`; this module is the
friendly face over them.  ASCII surface syntax:

    \\p. M        pattern abstraction (several binders: \\x y. M)
    M N           application, left-associative
    M * N         tensor, right-associative, looser than application
    !M  $M        boxes
    ~!M ~$M       door markers

Identifiers may contain letters, digits, underscores and primes, and
may start with a digit (the machine encodings use tape symbols such as
0 and 1 as variable names).
"""

from __future__ import annotations

from lal import _termkernel as _tk
from lal._lex import SyntaxIssue, TokenStream

VAR = _tk.VAR
LAM = _tk.LAM
APP = _tk.APP
TNS = _tk.TNS
BANG = _tk.BANG
BANGD = _tk.BANGD
PAR = _tk.PAR
PARD = _tk.PARD


def Var(name: str):
    return (VAR, name)


def Lam(pat, body):
    return (LAM, pat, body)


def lam(*args):
    """lam(p1, p2, ..., body) sugars nested abstractions."""
    *pats, body = args
    for p in reversed(pats):
        body = (LAM, p, body)
    return body


def App(f, a):
    return (APP, f, a)


def app(f, *args):
    for a in args:
        f = (APP, f, a)
    return f


def Tensor(l, r):
    return (TNS, l, r)


def tensor_chain(parts):
    parts = list(parts)
    if not parts:
        raise ValueError("empty tensor")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = (TNS, p, out)
    return out


def Bang(m):
    return (BANG, m)


def BangDoor(m):
    return (BANGD, m)


def Par(m):
    return (PAR, m)


def ParDoor(m):
    return (PARD, m)


def boxes(tag, n, m):
    for _ in range(n):
        m = (tag, m)
    return m


# Patterns reuse the Var/Tensor constructors.
PVar = Var
PTensor = Tensor

free_vars = _tk.free_vars
pattern_vars = _tk.pat_vars
substitute = _tk.substitute
alpha_eq = _tk.alpha_eq
term_size = _tk.term_size


def check_pattern_linear(p):
    """Patterns must bind pairwise distinct names."""
    names = []
    stack = [p]
    while stack:
        q = stack.pop()
        if q[0] == VAR:
            names.append(q[1])
        else:
            stack.append(q[1])
            stack.append(q[2])
    if len(names) != len(set(names)):
        raise ValueError(f"pattern binds a name twice: {names}")
    return p


# ---------------------------------------------------------------------------
# Parsing

def parse_term(text: str):
    ts = TokenStream(text)
    t = _parse(ts)
    tok = ts.peek()
    if tok.kind != "eof":
        raise SyntaxIssue(f"trailing input {tok.text!r}", tok.pos)
    return t


def _parse(ts: TokenStream):
    if ts.at("\\"):
        ts.next()
        pats = [check_pattern_linear(_parse_pattern(ts))]
        while not ts.at("."):
            pats.append(check_pattern_linear(_parse_pattern(ts)))
        ts.expect(".")
        body = _parse(ts)
        for p in reversed(pats):
            body = Lam(p, body)
        return body
    return _parse_tensor(ts)


def _parse_tensor(ts):
    left = _parse_app(ts)
    if ts.at("*"):
        ts.next()
        return Tensor(left, _parse_tensor(ts))
    return left


_ATOM_STARTS = ("ident", "(", "!", "$", "~!", "~$", "\\")


def _parse_app(ts):
    t = _parse_prefix(ts)
    while ts.peek().kind in _ATOM_STARTS:
        if ts.at("\\"):
            # allow a trailing unparenthesized lambda argument:  f \x. M
            t = App(t, _parse(ts))
            break
        t = App(t, _parse_prefix(ts))
    return t


def _parse_prefix(ts):
    tok = ts.peek()
    if tok.kind == "\\":
        # a lambda directly under a prefix or in argument position
        return _parse(ts)
    if tok.kind == "!":
        ts.next()
        return Bang(_parse_prefix(ts))
    if tok.kind == "$":
        ts.next()
        return Par(_parse_prefix(ts))
    if tok.kind == "~!":
        ts.next()
        return BangDoor(_parse_prefix(ts))
    if tok.kind == "~$":
        ts.next()
        return ParDoor(_parse_prefix(ts))
    if tok.kind == "(":
        ts.next()
        t = _parse(ts)
        ts.expect(")")
        return t
    if tok.kind == "ident":
        ts.next()
        return Var(tok.text)
    raise SyntaxIssue(f"expected a term, found {tok.text!r}", tok.pos)


def _parse_pattern(ts):
    tok = ts.peek()
    if tok.kind == "(":
        ts.next()
        p = _parse_pattern(ts)
        ts.expect(")")
        left = p
    elif tok.kind == "ident":
        ts.next()
        left = PVar(tok.text)
    else:
        raise SyntaxIssue(f"expected a pattern, found {tok.text!r}", tok.pos)
    if ts.at("*"):
        ts.next()
        return PTensor(left, _parse_pattern(ts))
    return left


# ---------------------------------------------------------------------------
# Printing

_P_LAM = 0
_P_TNS = 1
_P_APP = 2
_P_PRE = 3


def print_term(t) -> str:
    return _show(t, _P_LAM)


def print_pattern(p) -> str:
    if p[0] == VAR:
        return str(p[1])
    return f"{_show_pat_part(p[1])} * {_show_pat_part(p[2])}"


def _show_pat_part(p):
    if p[0] == VAR:
        return str(p[1])
    return f"({print_pattern(p)})"


def _show(t, ctx):
    tag = t[0]
    if tag == VAR:
        return str(t[1])
    if tag == LAM:
        pats = []
        while t[0] == LAM:
            pats.append(print_pattern(t[1]))
            t = t[2]
        s = "\\" + " ".join(pats) + ". " + _show(t, _P_LAM)
        return f"({s})" if ctx > _P_LAM else s
    if tag == TNS:
        s = f"{_show(t[1], _P_APP)} * {_show(t[2], _P_TNS)}"
        return f"({s})" if ctx > _P_TNS else s
    if tag == APP:
        s = f"{_show(t[1], _P_APP)} {_show(t[2], _P_PRE)}"
        return f"({s})" if ctx > _P_APP else s
    mark = {BANG: "!", BANGD: "~!", PAR: "$", PARD: "~$"}[tag]
    inner = _show(t[1], _P_PRE)
    return f"{mark}{inner}"


# ---------------------------------------------------------------------------
# .lal source files: `name = term ;` definitions and `name : formula ;`
# annotations.  Later definitions may reference earlier names; the
# expanded field has those references macro-expanded away.

class Program:
    def __init__(self):
        self.order: list[str] = []
        self.raw: dict[str, tuple] = {}
        self.expanded: dict[str, tuple] = {}
        self.types: dict[str, tuple] = {}

    def define(self, name: str, raw):
        if name in self.raw:
            raise ValueError(f"duplicate definition of {name}")
        mapping = {n: self.expanded[n] for n in free_vars(raw) if n in self.expanded}
        self.order.append(name)
        self.raw[name] = raw
        self.expanded[name] = substitute(raw, mapping)

    def expand(self, t):
        mapping = {n: self.expanded[n] for n in free_vars(t) if n in self.expanded}
        return substitute(t, mapping)


def parse_program(text: str) -> Program:
    from lal.formula import parse_formula

    prog = Program()
    for chunk in _split_statements(text):
        head, sep, rest = _split_head(chunk)
        if sep == "=":
            prog.define(head, parse_term(rest))
        else:
            prog.types[head] = parse_formula(rest)
    return prog


def _split_statements(text):
    # strip comments, then split on ';'
    lines = []
    for line in text.splitlines():
        hash_at = line.find("#")
        lines.append(line if hash_at < 0 else line[:hash_at])
    body = "\n".join(lines)
    for chunk in body.split(";"):
        if chunk.strip():
            yield chunk


def _split_head(chunk: str):
    eq = chunk.find("=")
    colon = chunk.find(":")
    if eq >= 0 and (colon < 0 or eq < colon):
        head, rest = chunk[:eq], chunk[eq + 1:]
        sep = "="
    elif colon >= 0:
        head, rest = chunk[:colon], chunk[colon + 1:]
        sep = ":"
    else:
        raise ValueError(f"statement is neither a definition nor a type: {chunk.strip()!r}")
    head = head.strip()
    if not head or any(c.isspace() for c in head):
        raise ValueError(f"bad statement head: {head!r}")
    return head, sep, rest
