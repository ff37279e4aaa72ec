"""Type language: literals, -o, *, !, $ and forall.

Formulas are immutable tagged tuples, so syntactic equality, hashing
and use as dict keys come for free; alpha-equality is a separate
operation.
"""

from __future__ import annotations

from lal._lex import SyntaxIssue, TokenStream

V = "v"
LOLLI = "-o"
TENSOR = "*"
BANG = "!"
PAR = "$"
FORALL = "forall"


def TVar(name: str):
    return (V, name)


def Lolli(a, b):
    return (LOLLI, a, b)


def Tensor(a, b):
    return (TENSOR, a, b)


def Bang(a):
    return (BANG, a)


def Par(a):
    return (PAR, a)


def Forall(name: str, a):
    return (FORALL, name, a)


def tensor_chain(parts):
    """Right-associated tensor of one or more formulas."""
    parts = list(parts)
    if not parts:
        raise ValueError("empty tensor")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Tensor(p, out)
    return out


def modal(box: str, n: int, a):
    for _ in range(n):
        a = (box, a)
    return a


def free_type_vars(f) -> set:
    tag = f[0]
    if tag == V:
        return {f[1]}
    if tag == FORALL:
        return free_type_vars(f[2]) - {f[1]}
    if tag in (BANG, PAR):
        return free_type_vars(f[1])
    if tag in (LOLLI, TENSOR):
        return free_type_vars(f[1]) | free_type_vars(f[2])
    return set()  # foreign leaves (the checker's metavariables)


def _fresh(base: str, used) -> str:
    cand = base + "'"
    while cand in used:
        cand += "'"
    return cand


def subst_type(a, v: str, b):
    """Capture-avoiding replacement of free occurrences of v in a by b."""
    tag = a[0]
    if tag == V:
        return b if a[1] == v else a
    if tag in (BANG, PAR):
        return (tag, subst_type(a[1], v, b))
    if tag in (LOLLI, TENSOR):
        return (tag, subst_type(a[1], v, b), subst_type(a[2], v, b))
    # forall
    bound = a[1]
    if bound == v or v not in free_type_vars(a[2]):
        return a
    if bound in free_type_vars(b):
        used = free_type_vars(a[2]) | free_type_vars(b) | {v}
        nb = _fresh(bound, used)
        body = subst_type(a[2], bound, TVar(nb))
        return (FORALL, nb, subst_type(body, v, b))
    return (FORALL, bound, subst_type(a[2], v, b))


def subst_type_many(a, mapping: dict):
    for v, b in mapping.items():
        a = subst_type(a, v, b)
    return a


def alpha_canon_formula(f, level=0, env=None):
    """Bound variables renamed to levels; the basis of alpha-equality."""
    if env is None:
        env = {}
    tag = f[0]
    if tag == V:
        lvl = env.get(f[1])
        return (V, f[1]) if lvl is None else (V, lvl)
    if tag in (BANG, PAR):
        return (tag, alpha_canon_formula(f[1], level, env))
    if tag in (LOLLI, TENSOR):
        return (tag, alpha_canon_formula(f[1], level, env), alpha_canon_formula(f[2], level, env))
    env2 = dict(env)
    env2[f[1]] = level
    return (FORALL, level, alpha_canon_formula(f[2], level + 1, env2))


def alpha_eq_formula(a, b) -> bool:
    """True iff a and b agree up to renaming of forall-bound variables."""
    return alpha_canon_formula(a) == alpha_canon_formula(b)


# ---------------------------------------------------------------------------
# Concrete syntax.
#
#   forall binds weakest, then -o (right-assoc), then * (right-assoc),
#   then the prefixes ! and $.

def parse_formula(text: str):
    ts = TokenStream(text)
    f = _parse(ts)
    t = ts.peek()
    if t.kind != "eof":
        raise SyntaxIssue(f"trailing input {t.text!r}", t.pos)
    return f


def _parse(ts: TokenStream):
    t = ts.peek()
    if t.kind == "ident" and t.text == "forall":
        ts.next()
        name = ts.expect("ident").text
        ts.expect(".")
        return Forall(name, _parse(ts))
    left = _parse_tensor(ts)
    if ts.at("-o"):
        ts.next()
        return Lolli(left, _parse(ts))
    return left


def _parse_tensor(ts):
    left = _parse_prefix(ts)
    if ts.at("*"):
        ts.next()
        return Tensor(left, _parse_tensor(ts))
    return left


def _parse_prefix(ts):
    t = ts.peek()
    if t.kind == "!":
        ts.next()
        return Bang(_parse_prefix(ts))
    if t.kind == "$":
        ts.next()
        return Par(_parse_prefix(ts))
    if t.kind == "(":
        ts.next()
        f = _parse(ts)
        ts.expect(")")
        return f
    if t.kind == "ident":
        if t.text == "forall":
            raise SyntaxIssue("forall needs to be parenthesized here", t.pos)
        ts.next()
        return TVar(t.text)
    raise SyntaxIssue(f"expected a formula, found {t.text!r}", t.pos)


_PREC_FORALL = 0
_PREC_LOLLI = 1
_PREC_TENSOR = 2
_PREC_PREFIX = 3


def print_formula(f) -> str:
    return _show(f, _PREC_FORALL)


def _show(f, ctx):
    tag = f[0]
    if tag == V:
        return str(f[1])
    if tag == FORALL:
        s = f"forall {f[1]}. {_show(f[2], _PREC_FORALL)}"
        return f"({s})" if ctx > _PREC_FORALL else s
    if tag == LOLLI:
        s = f"{_show(f[1], _PREC_TENSOR)} -o {_show(f[2], _PREC_LOLLI)}"
        return f"({s})" if ctx > _PREC_LOLLI else s
    if tag == TENSOR:
        s = f"{_show(f[1], _PREC_PREFIX)} * {_show(f[2], _PREC_TENSOR)}"
        return f"({s})" if ctx > _PREC_TENSOR else s
    mark = "!" if tag == BANG else "$"
    return f"{mark}{_show(f[1], _PREC_PREFIX)}"
