"""The decorated sequent calculus as a checker.

Derivations are the source of truth: `check_derivation` validates a
full tree against the twelve rule schemas, including the term
decorations (substitution for cut and left-arrow, door marking for the
boxes, pattern formation).  `check_term` is a best-effort bidirectional
elaborator that produces such derivations for annotated terms: it
introduces quantifiers eagerly, instantiates them by first-order
unification, fires box rules at the box constructors, splits contexts
by free-variable ownership, contracts repeated !-typed variables and
weakens the rest.  It may answer needs-annotation; it never accepts
wrongly (everything it accepts passes check_derivation).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from lal import formula as F
from lal import term as T
from lal._termkernel import APP, BANG, BANGD, LAM, PAR, PARD, TNS, VAR

META = "?"


def Meta(k: int):
    return (META, k)


# ---------------------------------------------------------------------------
# Derivations


@dataclass(frozen=True)
class Judgement:
    ctx: tuple          # ((pattern-term, formula), ...) in order
    subject: tuple      # term
    formula: tuple      # formula

    def show(self) -> str:
        parts = []
        for pat, f in self.ctx:
            parts.append(f"{T.print_pattern(pat)} : {F.print_formula(f)}")
        left = ", ".join(parts)
        return f"{left} |- {T.print_term(self.subject)} : {F.print_formula(self.formula)}"


@dataclass
class Derivation:
    rule: str
    premises: list
    conclusion: Judgement
    data: dict = field(default_factory=dict)

    def show(self, indent: int = 0) -> str:
        extra = ""
        if self.data:
            extra = "[" + ", ".join(f"{k}={_show_datum(v)}" for k, v in sorted(self.data.items())) + "]"
        lines = ["  " * indent + f"{self.rule}{extra}: {self.conclusion.show()}"]
        for p in self.premises:
            lines.append(p.show(indent + 1))
        return "\n".join(lines)


def _show_datum(v):
    if isinstance(v, tuple) and v and v[0] in (F.V, F.LOLLI, F.TENSOR, F.BANG, F.PAR, F.FORALL):
        return F.print_formula(v)
    return str(v)


@dataclass(frozen=True)
class DerivationIssue:
    rule: str
    code: str
    detail: str

    def __str__(self):
        return f"{self.code} in ({self.rule}): {self.detail}"


def _ctx_names(ctx) -> list:
    out = []
    for pat, _ in ctx:
        out.extend(sorted(T.pattern_vars(pat)))
    return out


def _ctx_map(ctx) -> dict:
    out = {}
    for pat, f in ctx:
        out[T.print_pattern(pat)] = f
    return out


def check_derivation(d: Derivation) -> list:
    """Empty iff every node instantiates its rule schema exactly."""
    out = []
    _check_node(d, out)
    return out


def _bad(out, d, code, detail):
    out.append(DerivationIssue(d.rule, code, detail))


def _check_node(d: Derivation, out: list):
    for p in d.premises:
        _check_node(p, out)
    names = _ctx_names(d.conclusion.ctx)
    if len(names) != len(set(names)):
        _bad(out, d, "DuplicateName", f"context binds {names}")
    checker = _RULES.get(d.rule)
    if checker is None:
        _bad(out, d, "UnknownRule", d.rule)
        return
    checker(d, out)


def _aeq(a, b) -> bool:
    return F.alpha_eq_formula(a, b)


def _teq(a, b) -> bool:
    return T.alpha_eq(a, b)


def _same_ctx(a, b) -> bool:
    if len(a) != len(b):
        return False
    am = sorted((T.print_pattern(p), F.alpha_canon_formula(f)) for p, f in a)
    bm = sorted((T.print_pattern(p), F.alpha_canon_formula(f)) for p, f in b)
    return am == bm


def _check_ax(d, out):
    if d.premises:
        _bad(out, d, "Arity", "axiom has no premises")
        return
    c = d.conclusion
    if len(c.ctx) != 1 or c.ctx[0][0][0] != VAR:
        _bad(out, d, "AxShape", "context is one variable assumption")
        return
    (pat, f) = c.ctx[0]
    if c.subject != pat or not _aeq(f, c.formula):
        _bad(out, d, "AxShape", "x : B proves x : B")


def _check_cut(d, out):
    if len(d.premises) != 2:
        _bad(out, d, "Arity", "cut has two premises")
        return
    left, right = d.premises[0].conclusion, d.premises[1].conclusion
    x = d.data.get("var")
    c = d.conclusion
    entry = [e for e in right.ctx if e[0] == (VAR, x)]
    if len(entry) != 1 or not _aeq(entry[0][1], left.formula):
        _bad(out, d, "CutVar", f"{x} : {F.print_formula(left.formula)} in the right premise")
        return
    want_ctx = tuple(e for e in right.ctx if e[0] != (VAR, x)) + tuple(left.ctx)
    if not _same_ctx(c.ctx, want_ctx):
        _bad(out, d, "CutCtx", "conclusion context is the union minus the cut variable")
    want = T.substitute(right.subject, {x: left.subject})
    if not _teq(c.subject, want) or not _aeq(c.formula, right.formula):
        _bad(out, d, "CutSubject", "conclusion is the substituted right subject")


def _check_weak(d, out):
    if len(d.premises) != 1:
        _bad(out, d, "Arity", "weakening has one premise")
        return
    p = d.premises[0].conclusion
    c = d.conclusion
    extra = [e for e in c.ctx if e not in p.ctx]
    if len(extra) != 1 or not _same_ctx(tuple(e for e in c.ctx if e != extra[0]), p.ctx):
        _bad(out, d, "WeakCtx", "adds exactly one assumption")
        return
    if not _teq(c.subject, p.subject) or not _aeq(c.formula, p.formula):
        _bad(out, d, "WeakSubject", "subject and formula unchanged")


def _check_contr(d, out):
    if len(d.premises) != 1:
        _bad(out, d, "Arity", "contraction has one premise")
        return
    p = d.premises[0].conclusion
    c = d.conclusion
    x, y, z = d.data.get("x"), d.data.get("y"), d.data.get("z")
    ex = [e for e in p.ctx if e[0] == (VAR, x)]
    ey = [e for e in p.ctx if e[0] == (VAR, y)]
    if not ex or not ey:
        _bad(out, d, "ContrVars", f"premise must assume {x} and {y}")
        return
    fx, fy = ex[0][1], ey[0][1]
    if fx[0] != F.BANG or not _aeq(fx, fy):
        _bad(out, d, "ContrBang", "contracted assumptions share one !-formula")
    ez = [e for e in c.ctx if e[0] == (VAR, z)]
    if not ez or not _aeq(ez[0][1], fx):
        _bad(out, d, "ContrCtx", f"conclusion assumes {z} at the same !-formula")
        return
    rest_p = tuple(e for e in p.ctx if e[0] not in ((VAR, x), (VAR, y)))
    rest_c = tuple(e for e in c.ctx if e[0] != (VAR, z))
    if not _same_ctx(rest_p, rest_c):
        _bad(out, d, "ContrCtx", "other assumptions unchanged")
    want = T.substitute(p.subject, {x: (VAR, z), y: (VAR, z)})
    if not _teq(c.subject, want):
        _bad(out, d, "ContrSubject", "both variables merge into the new one")


def _check_lolli_r(d, out):
    if len(d.premises) != 1:
        _bad(out, d, "Arity", "right arrow has one premise")
        return
    p = d.premises[0].conclusion
    c = d.conclusion
    if c.formula[0] != F.LOLLI or c.subject[0] != LAM:
        _bad(out, d, "LolliRShape", "concludes a lambda at an arrow")
        return
    dom, cod = c.formula[1], c.formula[2]
    pat = c.subject[1]
    entry = [e for e in p.ctx if T.print_pattern(e[0]) == T.print_pattern(pat)]
    if len(entry) != 1 or not _aeq(entry[0][1], dom):
        _bad(out, d, "LolliRPattern", "premise assumes the pattern at the domain")
        return
    rest = tuple(e for e in p.ctx if e is not entry[0])
    if not _same_ctx(rest, c.ctx):
        _bad(out, d, "LolliRCtx", "context unchanged besides the pattern")
    if not _teq(p.subject, c.subject[2]) or not _aeq(p.formula, cod):
        _bad(out, d, "LolliRSubject", "premise proves the body at the codomain")


def _check_lolli_l(d, out):
    if len(d.premises) != 2:
        _bad(out, d, "Arity", "left arrow has two premises")
        return
    pl, pr = d.premises[0].conclusion, d.premises[1].conclusion
    c = d.conclusion
    x, y = d.data.get("x"), d.data.get("y")
    ey = [e for e in pr.ctx if e[0] == (VAR, y)]
    if len(ey) != 1:
        _bad(out, d, "LolliLVar", f"right premise assumes {y}")
        return
    b = ey[0][1]
    ex = [e for e in c.ctx if e[0] == (VAR, x)]
    want_f = F.Lolli(pl.formula, b)
    if len(ex) != 1 or not _aeq(ex[0][1], want_f):
        _bad(out, d, "LolliLCtx", f"conclusion assumes {x} : {F.print_formula(want_f)}")
        return
    rest = tuple(e for e in c.ctx if e is not ex[0])
    want_rest = tuple(pl.ctx) + tuple(e for e in pr.ctx if e is not ey[0])
    if not _same_ctx(rest, want_rest):
        _bad(out, d, "LolliLCtx", "context is the premise union plus the arrow")
    want = T.substitute(pr.subject, {y: T.App((VAR, x), pl.subject)})
    if not _teq(c.subject, want) or not _aeq(c.formula, pr.formula):
        _bad(out, d, "LolliLSubject", "right subject with x applied to the left subject")


def _check_tensor_l(d, out):
    if len(d.premises) != 1:
        _bad(out, d, "Arity", "left tensor has one premise")
        return
    p = d.premises[0].conclusion
    c = d.conclusion
    pat = d.data.get("pattern")
    entry = [e for e in c.ctx if e[0] == pat]
    if len(entry) != 1 or pat[0] != TNS or entry[0][1][0] != F.TENSOR:
        _bad(out, d, "TensorLShape", "conclusion assumes a tensor pattern")
        return
    f = entry[0][1]
    want_premise = tuple(e for e in c.ctx if e is not entry[0]) + ((pat[1], f[1]), (pat[2], f[2]))
    if not _same_ctx(p.ctx, want_premise):
        _bad(out, d, "TensorLCtx", "premise assumes the two components")
    if not _teq(p.subject, c.subject) or not _aeq(p.formula, c.formula):
        _bad(out, d, "TensorLSubject", "subject and formula unchanged")


def _check_tensor_r(d, out):
    if len(d.premises) != 2:
        _bad(out, d, "Arity", "right tensor has two premises")
        return
    pl, pr = d.premises[0].conclusion, d.premises[1].conclusion
    c = d.conclusion
    ok = (
        c.subject[0] == TNS
        and _teq(c.subject[1], pl.subject)
        and _teq(c.subject[2], pr.subject)
        and c.formula[0] == F.TENSOR
        and _aeq(c.formula[1], pl.formula)
        and _aeq(c.formula[2], pr.formula)
        and _same_ctx(c.ctx, tuple(pl.ctx) + tuple(pr.ctx))
    )
    if not ok:
        _bad(out, d, "TensorRShape", "pairs the premises")


def _door_subject(subject, marks: dict):
    sub = {}
    for x, mark in marks.items():
        ctor = T.BangDoor if mark == "!" else T.ParDoor
        sub[x] = ctor((VAR, x))
    return T.substitute(subject, sub)


def _check_bang(d, out):
    if len(d.premises) != 1:
        _bad(out, d, "Arity", "! has one premise")
        return
    p = d.premises[0].conclusion
    c = d.conclusion
    if len(p.ctx) > 1:
        _bad(out, d, "BangArity", "at most one assumption crosses a !-box")
        return
    if c.formula[0] != F.BANG or not _aeq(c.formula[1], p.formula):
        _bad(out, d, "BangFormula", "concludes ! of the premise formula")
    marks = {}
    for pat, f in p.ctx:
        if pat[0] != VAR:
            _bad(out, d, "BangPattern", "box assumptions are variables")
            return
        marks[pat[1]] = "!"
        ce = [e for e in c.ctx if e[0] == pat]
        if len(ce) != 1 or ce[0][1][0] != F.BANG or not _aeq(ce[0][1][1], f):
            _bad(out, d, "BangCtx", "the crossing assumption gains a !")
    if len(c.ctx) != len(p.ctx):
        _bad(out, d, "BangCtx", "no other assumptions")
    want = T.Bang(_door_subject(p.subject, marks))
    if not _teq(c.subject, want):
        _bad(out, d, "BangSubject", "body marked with !-doors")


def _check_par(d, out):
    if len(d.premises) != 1:
        _bad(out, d, "Arity", "$ has one premise")
        return
    p = d.premises[0].conclusion
    c = d.conclusion
    if c.formula[0] != F.PAR or not _aeq(c.formula[1], p.formula):
        _bad(out, d, "ParFormula", "concludes $ of the premise formula")
    bang_names = set(d.data.get("bang", ()))
    marks = {}
    if len(c.ctx) != len(p.ctx):
        _bad(out, d, "ParCtx", "assumption count unchanged")
        return
    for pat, f in p.ctx:
        if pat[0] != VAR:
            _bad(out, d, "ParPattern", "box assumptions are variables")
            return
        name = pat[1]
        marks[name] = "!" if name in bang_names else "$"
        ce = [e for e in c.ctx if e[0] == pat]
        want = F.Bang(f) if name in bang_names else F.Par(f)
        if len(ce) != 1 or not _aeq(ce[0][1], want):
            _bad(out, d, "ParCtx", f"{name} crosses as {F.print_formula(want)}")
    want = T.Par(_door_subject(p.subject, marks))
    if not _teq(c.subject, want):
        _bad(out, d, "ParSubject", "body marked with the door spelling")


def _check_forall_l(d, out):
    if len(d.premises) != 1:
        _bad(out, d, "Arity", "left forall has one premise")
        return
    p = d.premises[0].conclusion
    c = d.conclusion
    x = d.data.get("var")
    inst = d.data.get("inst")
    ec = [e for e in c.ctx if e[0] == (VAR, x)]
    ep = [e for e in p.ctx if e[0] == (VAR, x)]
    if len(ec) != 1 or len(ep) != 1 or ec[0][1][0] != F.FORALL:
        _bad(out, d, "ForallLShape", f"{x} is assumed at a forall")
        return
    alpha, body = ec[0][1][1], ec[0][1][2]
    if not _aeq(ep[0][1], F.subst_type(body, alpha, inst)):
        _bad(out, d, "ForallLInst", "premise assumes the instantiated formula")
    if not _same_ctx(
        tuple(e for e in p.ctx if e is not ep[0]), tuple(e for e in c.ctx if e is not ec[0])
    ):
        _bad(out, d, "ForallLCtx", "other assumptions unchanged")
    if not _teq(c.subject, p.subject) or not _aeq(c.formula, p.formula):
        _bad(out, d, "ForallLSubject", "subject unchanged")


def _check_forall_r(d, out):
    if len(d.premises) != 1:
        _bad(out, d, "Arity", "right forall has one premise")
        return
    p = d.premises[0].conclusion
    c = d.conclusion
    if c.formula[0] != F.FORALL:
        _bad(out, d, "ForallRShape", "concludes a forall")
        return
    alpha = c.formula[1]
    if not _aeq(p.formula, c.formula[2]) and not _aeq(F.Forall(alpha, p.formula), c.formula):
        _bad(out, d, "ForallRBody", "premise proves the body")
    free = set()
    for _, f in c.ctx:
        free |= F.free_type_vars(f)
    if alpha in free:
        _bad(out, d, "EigenvariableViolation", f"{alpha} occurs free in the context")
    if not _teq(c.subject, p.subject):
        _bad(out, d, "ForallRSubject", "subject unchanged")
    if not _same_ctx(c.ctx, p.ctx):
        _bad(out, d, "ForallRCtx", "context unchanged")


_RULES = {
    "Ax": _check_ax,
    "Cut": _check_cut,
    "Weak": _check_weak,
    "Contr": _check_contr,
    "LolliR": _check_lolli_r,
    "LolliL": _check_lolli_l,
    "TensorL": _check_tensor_l,
    "TensorR": _check_tensor_r,
    "Bang": _check_bang,
    "Par": _check_par,
    "ForallL": _check_forall_l,
    "ForallR": _check_forall_r,
}


# ---------------------------------------------------------------------------
# Unification with ranked metavariables (skolems block escaping solutions)


class UnifyError(Exception):
    pass


class Uni:
    def __init__(self):
        self.sol: dict = {}
        self.meta_rank: dict = {}
        self.skolem_rank: dict = {}
        self.counter = 0
        self.rank = 0

    def fresh_meta(self):
        self.counter += 1
        m = Meta(self.counter)
        self.meta_rank[m] = self.rank
        return m

    def fresh_skolem(self, base: str) -> str:
        self.counter += 1
        name = f"{base}%{self.counter}"
        self.skolem_rank[name] = self.rank
        return name

    def resolve(self, f):
        while f[0] == META and f in self.sol:
            f = self.sol[f]
        return f

    def zonk(self, f, default_unsolved=True):
        f = self.resolve(f)
        tag = f[0]
        if tag == META:
            if not default_unsolved:
                raise UnifyError("unsolved metavariable")
            return F.TVar(f"u{f[1]}")
        if tag == F.V:
            return f
        if tag in (F.BANG, F.PAR):
            return (tag, self.zonk(f[1], default_unsolved))
        if tag in (F.LOLLI, F.TENSOR):
            return (tag, self.zonk(f[1], default_unsolved), self.zonk(f[2], default_unsolved))
        return (F.FORALL, f[1], self.zonk(f[2], default_unsolved))

    def _check_solution(self, m, f):
        rank = self.meta_rank[m]
        stack = [f]
        while stack:
            g = self.resolve(stack.pop())
            tag = g[0]
            if tag == META:
                if g == m:
                    raise UnifyError("occurs check")
                continue
            if tag == F.V:
                if self.skolem_rank.get(g[1], -1) > rank:
                    raise UnifyError(f"eigenvariable {g[1]} would escape")
            elif tag in (F.BANG, F.PAR):
                stack.append(g[1])
            elif tag in (F.LOLLI, F.TENSOR):
                stack.append(g[1])
                stack.append(g[2])
            else:
                stack.append(g[2])

    def unify(self, a, b):
        a, b = self.resolve(a), self.resolve(b)
        if a == b:
            return
        if a[0] == META:
            self._check_solution(a, b)
            self.sol[a] = b
            return
        if b[0] == META:
            self._check_solution(b, a)
            self.sol[b] = a
            return
        if a[0] != b[0]:
            raise UnifyError(f"{F.print_formula(self.zonk(a))} vs {F.print_formula(self.zonk(b))}")
        if a[0] == F.V:
            raise UnifyError(f"distinct literals {a[1]} vs {b[1]}")
        if a[0] in (F.BANG, F.PAR):
            self.unify(a[1], b[1])
            return
        if a[0] in (F.LOLLI, F.TENSOR):
            self.unify(a[1], b[1])
            self.unify(a[2], b[2])
            return
        # forall vs forall: rename both binders to one fresh rigid name
        s = self.fresh_skolem(a[1])
        self.unify(F.subst_type(a[2], a[1], F.TVar(s)), F.subst_type(b[2], b[1], F.TVar(s)))


# ---------------------------------------------------------------------------
# Goal-directed elaboration


class Reject(Exception):
    pass


class NeedsAnnotation(Exception):
    pass


class Status(Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    NEEDS_ANNOTATION = "needs-annotation"


@dataclass
class CheckResult:
    status: Status
    derivation: Derivation | None = None
    reason: str = ""

    def __bool__(self):
        return self.status is Status.ACCEPT


class ConstEnv:
    """Typed, closed constants: each use site splices the constant's own
    derivation with a cut, so nonlinear use never needs a !-type."""

    def __init__(self, types: dict | None = None, defs: dict | None = None):
        self.types = dict(types or {})
        self.defs = dict(defs or {})
        self._cache: dict = {}

    @classmethod
    def from_program(cls, program) -> "ConstEnv":
        return cls(types=program.types, defs=program.raw)

    def has(self, name: str) -> bool:
        return name in self.types

    def formula(self, name: str):
        return self.types[name]

    def derivation(self, name: str) -> Derivation:
        if name not in self._cache:
            if name not in self.defs:
                raise NeedsAnnotation(f"no definition for constant {name}")
            self._cache[name] = None  # cycle guard
            res = check_term(self.defs[name], self.types[name], self)
            if not res:
                raise Reject(f"constant {name} fails at its declared type: {res.reason}")
            self._cache[name] = res.derivation
        d = self._cache[name]
        if d is None:
            raise Reject(f"recursive constant {name}")
        return d

    def expand(self, t):
        from lal._termkernel import free_vars

        mapping = {}
        for n in free_vars(t):
            if n in self.defs:
                mapping[n] = self.expand(self.defs[n])
        return T.substitute(t, mapping) if mapping else t


def _j(ctx_map: dict, subject, formula) -> Judgement:
    ctx = tuple(((VAR, x), f) for x, f in sorted(ctx_map.items()))
    return Judgement(ctx, subject, formula)


class _Elab:
    def __init__(self, env: ConstEnv):
        self.uni = Uni()
        self.env = env
        self.salt = 0
        self.pending: list[list] = [[]]  # per box level: (salted name, const name)

    def fresh_name(self, base: str) -> str:
        self.salt += 1
        return f"{base}@{self.salt}"

    # -- derivation builders --------------------------------------------------

    def d_ax(self, x: str, f) -> Derivation:
        return Derivation("Ax", [], _j({x: f}, (VAR, x), f))

    def d_cut(self, left: Derivation, right: Derivation, x: str) -> Derivation:
        lc, rc = left.conclusion, right.conclusion
        ctx = {n[1]: f for n, f in rc.ctx if n != (VAR, x)}
        ctx.update({n[1]: f for n, f in lc.ctx})
        subject = T.substitute(rc.subject, {x: lc.subject})
        return Derivation("Cut", [left, right], _j(ctx, subject, rc.formula), {"var": x})

    def d_weak(self, d: Derivation, x: str, f) -> Derivation:
        c = d.conclusion
        ctx = {n[1]: g for n, g in c.ctx}
        ctx[x] = f
        return Derivation("Weak", [d], _j(ctx, c.subject, c.formula))

    def d_contr(self, d: Derivation, z: str, x: str, y: str) -> Derivation:
        c = d.conclusion
        ctx = {n[1]: g for n, g in c.ctx}
        f = ctx.pop(x)
        ctx.pop(y)
        ctx[z] = f
        subject = T.substitute(c.subject, {x: (VAR, z), y: (VAR, z)})
        return Derivation("Contr", [d], _j(ctx, subject, c.formula), {"x": x, "y": y, "z": z})

    def d_forall_l(self, d: Derivation, x: str, alpha: str, body, inst) -> Derivation:
        c = d.conclusion
        ctx = {n[1]: g for n, g in c.ctx}
        ctx[x] = F.Forall(alpha, body)
        return Derivation(
            "ForallL", [d], _j(ctx, c.subject, c.formula), {"var": x, "inst": inst}
        )

    # -- context splitting -----------------------------------------------------

    def split(self, ctx: dict, parts: list):
        """Split assumptions among subterms by free-variable ownership;
        shared names must be !-typed and are renamed apart, to be merged
        back with contractions.  Returns (sub-ctxs, renamed parts, merges)."""
        from lal._termkernel import free_vars

        fvs = [free_vars(p) & set(ctx) for p in parts]
        owners: dict[str, list] = {}
        for i, fv in enumerate(fvs):
            for x in fv:
                owners.setdefault(x, []).append(i)
        sub = [dict() for _ in parts]
        renamed = list(parts)
        merges = []  # (z, [aliases]) applied outermost-last
        for x, wh in owners.items():
            f = self.uni.resolve(ctx[x])
            if len(wh) == 1:
                sub[wh[0]][x] = f
                continue
            if f[0] == META:
                raise NeedsAnnotation(f"duplicated {x} needs a concrete !-type")
            if f[0] != F.BANG:
                raise Reject(f"{x} is used {len(wh)} times at non-! type {F.print_formula(f)}")
            aliases = []
            for i in wh:
                a = self.fresh_name(x)
                aliases.append(a)
                sub[i][x + "###"] = None  # placeholder removed below
                del sub[i][x + "###"]
                sub[i][a] = f
                renamed[i] = T.substitute(renamed[i], {x: (VAR, a)})
            merges.append((x, aliases))
        return sub, renamed, merges

    def apply_merges(self, d: Derivation, merges) -> Derivation:
        for z, aliases in merges:
            cur = aliases[0]
            for nxt in aliases[1:]:
                tmp = z if nxt is aliases[-1] else self.fresh_name(z)
                d = self.d_contr(d, tmp, cur, nxt)
                cur = tmp
        return d

    # -- main ------------------------------------------------------------------

    def check(self, ctx: dict, m, a) -> Derivation:
        a = self.uni.resolve(a)
        if a[0] == F.FORALL:
            # synthesizable subjects may already carry the quantifier
            if m[0] in (VAR, APP):
                t, d = self.synth(ctx, m)
                t_r = self.uni.resolve(t)
                if t_r[0] in (META, F.FORALL):
                    try:
                        self.uni.unify(t, a)
                    except UnifyError as e:
                        raise Reject(f"{T.print_term(m)} : {e}") from e
                    return d
                self.uni.rank += 1
                sk = self.uni.fresh_skolem(a[1])
                body = F.subst_type(a[2], a[1], F.TVar(sk))
                try:
                    self.uni.unify(t, body)
                except UnifyError as e:
                    raise Reject(f"{T.print_term(m)} : {e}") from e
                self.uni.rank -= 1
                c = d.conclusion
                return Derivation(
                    "ForallR", [d], Judgement(c.ctx, c.subject, F.Forall(sk, body))
                )
            self.uni.rank += 1
            sk = self.uni.fresh_skolem(a[1])
            body = F.subst_type(a[2], a[1], F.TVar(sk))
            d = self.check(ctx, m, body)
            self.uni.rank -= 1
            c = d.conclusion
            return Derivation(
                "ForallR", [d], Judgement(c.ctx, c.subject, F.Forall(sk, c.formula))
            )
        tag = m[0]
        if tag == LAM:
            if a[0] == META:
                raise NeedsAnnotation("a lambda needs an arrow type")
            if a[0] != F.LOLLI:
                raise Reject(f"lambda against {F.print_formula(self.uni.zonk(a))}")
            leaves = self._pattern_split(m[1], a[1])
            inner = {x: f for x, f in ctx.items() if x not in {n for n, _ in leaves}}
            for x, f in leaves:
                inner[x] = f
            d = self.check(inner, m[2], a[2])
            have = {n[1] for n, _ in d.conclusion.ctx}
            for x, f in leaves:
                if x not in have:
                    d = self.d_weak(d, x, f)
            d = self._fold_pattern(d, m[1], a[1])
            c = d.conclusion
            ctx_out = {n[1]: g for n, g in c.ctx if T.print_pattern(n) != T.print_pattern(m[1])}
            return Derivation(
                "LolliR", [d], _j(ctx_out, (LAM, m[1], c.subject), F.Lolli(a[1], a[2]))
            )
        if tag in (BANG, PAR):
            want = F.BANG if tag == BANG else F.PAR
            if a[0] == META:
                inner_t = self.uni.fresh_meta()
                self.uni.unify(a, (want, inner_t))
            elif a[0] == want:
                inner_t = a[1]
            else:
                raise Reject(
                    f"a {'!' if tag == BANG else '$'}-box against {F.print_formula(self.uni.zonk(a))}"
                )
            return self._box(ctx, m, inner_t)
        if tag == TNS and a[0] == F.TENSOR:
            sub, renamed, merges = self.split(ctx, [m[1], m[2]])
            dl = self.check(sub[0], renamed[0], a[1])
            dr = self.check(sub[1], renamed[1], a[2])
            d = self._tensor_r(dl, dr)
            return self.apply_merges(d, merges)
        t, d = self.synth(ctx, m)
        # instantiate only when the target cannot hold the quantifier
        if self.uni.resolve(t)[0] == F.FORALL and self.uni.resolve(a)[0] not in (META, F.FORALL):
            t, d = self.instantiate(t, d)
        try:
            self.uni.unify(t, a)
        except UnifyError as e:
            raise Reject(f"{T.print_term(m)} : {e}") from e
        return d

    def synth(self, ctx: dict, m):
        tag = m[0]
        if tag == VAR:
            x = m[1]
            if x in ctx:
                return ctx[x], self.d_ax(x, ctx[x])
            if self.env.has(x):
                salted = self.fresh_name(x)
                self.pending[-1].append((salted, x))
                f = self.env.formula(x)
                return f, self.d_ax(salted, f)
            raise Reject(f"unbound variable {x}")
        if tag == APP:
            sub, renamed, merges = self.split(ctx, [m[1], m[2]])
            tf, df = self.synth(sub[0], renamed[0])
            tf, df = self.instantiate(tf, df)
            tf = self.uni.resolve(tf)
            if tf[0] == META:
                dom, cod = self.uni.fresh_meta(), self.uni.fresh_meta()
                self.uni.unify(tf, F.Lolli(dom, cod))
            elif tf[0] == F.LOLLI:
                dom, cod = tf[1], tf[2]
            else:
                raise Reject(
                    f"applying a non-function: {T.print_term(m[1])} : {F.print_formula(self.uni.zonk(tf))}"
                )
            da = self.check(sub[1], renamed[1], dom)
            d = self._apply(df, da, cod)
            return cod, self.apply_merges(d, merges)
        if tag == TNS:
            sub, renamed, merges = self.split(ctx, [m[1], m[2]])
            tl, dl = self.synth(sub[0], renamed[0])
            tr, dr = self.synth(sub[1], renamed[1])
            d = self._tensor_r(dl, dr)
            return F.Tensor(tl, tr), self.apply_merges(d, merges)
        if tag in (BANG, PAR):
            inner_t = self.uni.fresh_meta()
            d = self._box(ctx, m, inner_t)
            return d.conclusion.formula, d
        if tag in (BANGD, PARD):
            raise Reject("door marker outside any box")
        raise NeedsAnnotation(f"cannot infer a type for {T.print_term(m)}")

    def instantiate(self, t, d: Derivation):
        """Strip top-level quantifiers with fresh metavariables.  On an
        axiom the left rule applies directly; otherwise through a cut."""
        t = self.uni.resolve(t)
        while t[0] == F.FORALL:
            alpha, body = t[1], t[2]
            mv = self.uni.fresh_meta()
            inst = F.subst_type(body, alpha, mv)
            if d.rule == "Ax":
                x = d.conclusion.ctx[0][0][1]
                d = self.d_forall_l(self.d_ax(x, inst), x, alpha, body, mv)
            else:
                x = self.fresh_name("inst")
                right = self.d_forall_l(self.d_ax(x, inst), x, alpha, body, mv)
                d = self.d_cut(d, right, x)
            t = self.uni.resolve(inst)
        return t, d

    def _apply(self, df: Derivation, da: Derivation, cod) -> Derivation:
        y = self.fresh_name("y")
        lolli = Derivation(
            "LolliL",
            [da, self.d_ax(y, cod)],
            None,
            {"x": None, "y": y},
        )
        x = self.fresh_name("f")
        actx = {n[1]: f for n, f in da.conclusion.ctx}
        actx[x] = F.Lolli(da.conclusion.formula, cod)
        lolli.data["x"] = x
        lolli.conclusion = _j(actx, T.App((VAR, x), da.conclusion.subject), cod)
        return self.d_cut(df, lolli, x)

    def _tensor_r(self, dl: Derivation, dr: Derivation) -> Derivation:
        lc, rc = dl.conclusion, dr.conclusion
        ctx = {n[1]: f for n, f in lc.ctx}
        ctx.update({n[1]: f for n, f in rc.ctx})
        return Derivation(
            "TensorR",
            [dl, dr],
            _j(ctx, T.Tensor(lc.subject, rc.subject), F.Tensor(lc.formula, rc.formula)),
        )

    def _pattern_split(self, pat, formula):
        """Leaves of the pattern tree against the tensor tree; a leaf
        absorbs a whole subtree (the extended-assumption allowance)."""
        f = self.uni.resolve(formula)
        if pat[0] == VAR:
            return [(pat[1], f)]
        if f[0] == META:
            raise NeedsAnnotation("tensor pattern against an unknown type")
        if f[0] != F.TENSOR:
            raise Reject(
                f"pattern {T.print_pattern(pat)} against {F.print_formula(self.uni.zonk(f))}"
            )
        return self._pattern_split(pat[1], f[1]) + self._pattern_split(pat[2], f[2])

    def _fold_pattern(self, d: Derivation, pat, formula) -> Derivation:
        if pat[0] == VAR:
            return d
        f = self.uni.resolve(formula)
        d = self._fold_pattern(d, pat[1], f[1])
        d = self._fold_pattern(d, pat[2], f[2])
        c = d.conclusion
        ctx = []
        for n, g in c.ctx:
            if T.print_pattern(n) in (T.print_pattern(pat[1]), T.print_pattern(pat[2])):
                continue
            ctx.append((n, g))
        ctx.append((pat, (F.TENSOR, f[1], f[2])))
        return Derivation(
            "TensorL",
            [d],
            Judgement(tuple(sorted(ctx, key=lambda e: T.print_pattern(e[0]))), c.subject, c.formula),
            {"pattern": pat},
        )

    # -- boxes -------------------------------------------------------------------

    def _box(self, ctx: dict, m, inner_target) -> Derivation:
        from lal._termkernel import free_vars

        tag = m[0]
        body = m[1]
        # a variable used twice at box level (crossing twice, or crossing
        # and feeding a payload) is duplicated here: rename the uses
        # apart and contract them below the box
        ctx = dict(ctx)
        pre_merges = []
        for x in sorted(set(ctx) & free_vars(body)):
            k = _count_occurrences(body, x)
            if k < 2:
                continue
            f = self.uni.resolve(ctx[x])
            if f[0] == META:
                raise NeedsAnnotation(f"duplicated {x} needs a concrete !-type")
            if f[0] != F.BANG:
                raise Reject(f"{x} is used {k} times at non-! type {F.print_formula(self.uni.zonk(f))}")
            aliases = [self.fresh_name(x) for _ in range(k)]
            body = _rename_occurrences(body, x, iter(aliases))
            del ctx[x]
            for a in aliases:
                ctx[a] = f
            pre_merges.append((x, aliases))
        strip = _DoorStripper(self, tag, ctx)
        stripped = strip.walk(body)
        inner_ctx = dict(strip.inner_bindings)
        payload_parts = [n for _, n, _ in strip.payloads]
        # split the rest of the outer context among the non-variable payloads
        marked = {x for x in strip.marks if x in ctx}
        if payload_parts:
            sub, renamed, merges = self.split(
                {x: f for x, f in ctx.items() if x not in marked}, payload_parts
            )
        else:
            sub, renamed, merges = [], [], []
        self.pending.append([])
        d_in = self.check(inner_ctx, stripped, inner_target)
        d_in = self._splice_pending(d_in)
        self.pending.pop()
        # premise assumptions must sit exactly at the inner bindings
        have = {n[1] for n, _ in d_in.conclusion.ctx}
        for x, f in inner_ctx.items():
            if x not in have and x in strip.must_assume:
                d_in = self.d_weak(d_in, x, f)
        if tag == BANG and len(d_in.conclusion.ctx) > 1:
            raise Reject("a !-box admits at most one crossing assumption")
        marks = dict(strip.marks)
        bang_names = {x for x, mk in marks.items() if mk == "!"}
        c = d_in.conclusion
        out_ctx = {}
        for n, f in c.ctx:
            x = n[1]
            if x not in marks:
                raise Reject(f"{x} crosses a box boundary without a door marker")
            out_ctx[x] = F.Bang(f) if marks[x] == "!" else F.Par(f)
            self.uni.unify(strip.outer_types[x], out_ctx[x])
        box_ctor = T.Bang if tag == BANG else T.Par
        subject = box_ctor(_door_subject(c.subject, {x: marks[x] for n, f in c.ctx for x in [n[1]]}))
        rule = "Bang" if tag == BANG else "Par"
        data = {} if tag == BANG else {"bang": tuple(sorted(bang_names & {n[1] for n, _ in c.ctx}))}
        d = Derivation(
            rule,
            [d_in],
            _j(out_ctx, subject, (F.BANG if tag == BANG else F.PAR, c.formula)),
            data,
        )
        # cut each non-variable payload into its door assumption
        for (v, _n, _mk), sub_ctx, part in zip(strip.payloads, sub, renamed):
            d_pay = self.check(sub_ctx, part, self.uni.resolve(strip.outer_types[v]))
            d = self.d_cut(d_pay, d, v)
        d = self.apply_merges(d, merges)
        return self.apply_merges(d, pre_merges)

    def _splice_pending(self, d: Derivation) -> Derivation:
        for salted, cname in self.pending[-1]:
            d = self.d_cut(self.env.derivation(cname), d, salted)
        return d


class _DoorStripper:
    """Rewrite a box body for the premise: door-marked variables become
    plain inner variables, non-variable payloads become fresh ones."""

    def __init__(self, elab: _Elab, boxtag, ctx):
        self.elab = elab
        self.boxtag = boxtag
        self.ctx = ctx
        self.marks: dict[str, str] = {}
        self.inner_bindings: dict = {}
        self.outer_types: dict = {}
        self.payloads: list = []  # (inner name, payload term, mark)
        self.must_assume: set = set()

    def walk(self, t):
        tag = t[0]
        if tag in (BANGD, PARD):
            mark = "!" if tag == BANGD else "$"
            if mark == "$" and self.boxtag == BANG:
                raise Reject("a $-door can only mark $-box inputs")
            payload = t[1]
            if payload[0] == VAR and payload[1] in self.ctx:
                return self._var_door(payload[1], mark)
            inner = self.elab.fresh_name("door")
            meta = self.elab.uni.fresh_meta()
            outer = (F.BANG, meta) if mark == "!" else (F.PAR, meta)
            self.inner_bindings[inner] = meta
            self.outer_types[inner] = outer
            self.marks[inner] = mark
            self.payloads.append((inner, payload, mark))
            return (VAR, inner)
        if tag == VAR:
            return t
        if tag == LAM:
            return (LAM, t[1], self.walk(t[2]))
        if tag in (APP, TNS):
            return (tag, self.walk(t[1]), self.walk(t[2]))
        # nested boxes keep their own doors
        return t

    def _var_door(self, x: str, mark: str):
        # box-level duplicates were renamed apart: each name crosses once
        if x in self.marks:
            raise Reject(f"{x} crosses one box twice")
        inner_t = self.elab.uni.fresh_meta()
        outer_t = (F.BANG, inner_t) if mark == "!" else (F.PAR, inner_t)
        self.marks[x] = mark
        self.inner_bindings[x] = inner_t
        self.outer_types[x] = outer_t
        self.must_assume.add(x)
        try:
            self.elab.uni.unify(self.ctx[x], outer_t)
        except UnifyError as e:
            raise Reject(f"door on {x}: {e}") from e
        return (VAR, x)


def _count_occurrences(t, x: str) -> int:
    tag = t[0]
    if tag == VAR:
        return 1 if t[1] == x else 0
    if tag == LAM:
        if x in T.pattern_vars(t[1]):
            return 0
        return _count_occurrences(t[2], x)
    if tag in (APP, TNS):
        return _count_occurrences(t[1], x) + _count_occurrences(t[2], x)
    return _count_occurrences(t[1], x)


def _rename_occurrences(t, x: str, names):
    tag = t[0]
    if tag == VAR:
        return (VAR, next(names)) if t[1] == x else t
    if tag == LAM:
        if x in T.pattern_vars(t[1]):
            return t
        return (LAM, t[1], _rename_occurrences(t[2], x, names))
    if tag in (APP, TNS):
        a = _rename_occurrences(t[1], x, names)
        b = _rename_occurrences(t[2], x, names)
        return (tag, a, b)
    return (tag, _rename_occurrences(t[1], x, names))


def check_term(m, target, env: ConstEnv | dict | None = None) -> CheckResult:
    """Elaborate m against the target formula; free constants come from
    env.  Accepting results carry a derivation that check_derivation
    validates and whose subject alpha-equals the expanded input."""
    if env is None:
        env = ConstEnv()
    elif isinstance(env, dict):
        env = ConstEnv(types=env)
    elab = _Elab(env)
    try:
        d = elab.check({}, m, target)
        d = elab._splice_pending(d)
        d = _zonk_derivation(elab.uni, d)
    except Reject as e:
        return CheckResult(Status.REJECT, reason=str(e))
    except NeedsAnnotation as e:
        return CheckResult(Status.NEEDS_ANNOTATION, reason=str(e))
    except UnifyError as e:
        return CheckResult(Status.REJECT, reason=str(e))
    issues = check_derivation(d)
    if issues:
        raise AssertionError(f"elaborator produced an invalid derivation: {issues[:3]}")
    if d.conclusion.ctx:
        return CheckResult(Status.REJECT, reason="free variables remain untyped")
    if not T.alpha_eq(d.conclusion.subject, env.expand(m)):
        raise AssertionError("derivation subject does not match the input term")
    return CheckResult(Status.ACCEPT, derivation=d)


def _zonk_derivation(uni: Uni, d: Derivation) -> Derivation:
    ctx = tuple((p, uni.zonk(f)) for p, f in d.conclusion.ctx)
    conclusion = Judgement(ctx, d.conclusion.subject, uni.zonk(d.conclusion.formula))
    data = dict(d.data)
    if "inst" in data:
        data["inst"] = uni.zonk(data["inst"])
    return Derivation(d.rule, [_zonk_derivation(uni, p) for p in d.premises], conclusion, data)
