# cython: language_level=3, boundscheck=False, binding=True
"""Reduction kernel for the concrete term syntax.

Terms are immutable tagged tuples:

    (VAR, name)          variable occurrence
    (LAM, pat, body)     pattern abstraction; pat is a VAR/TNS tree
    (APP, f, a)          application
    (TNS, l, r)          tensor pair
    (BANG, m)  (PAR, m)  box constructors  !M  and  $M
    (BANGD, m) (PARD, m) door markers      ~!M and ~$M

The module is dependency-free on purpose: the same source runs under
CPython and compiles unchanged with Cython into `lal._termkernel_c`,
which `lal.reduce` prefers when present.

Contractions are the three rewrite rules: pattern beta, !-door against
!-box, $-door against $-box.  The normalizer is an explicit-stack
machine implementing a deterministic leftmost-outermost strategy; the
one refinement over naive outermost search is that matching a tensor
pattern reduces the argument's spine positions on demand before the
beta fires.  Both orders reach the same normal form (the rules are
confluent); the machine order is what `step` and `reduce` report.
"""

VAR = 0
LAM = 1
APP = 2
TNS = 3
BANG = 4
BANGD = 5
PAR = 6
PARD = 7

TAG_NAMES = ("var", "lam", "app", "tns", "bang", "bangd", "par", "pard")

# match / spine status
_OK = 0
_STUCK = 1
_OUT = 2

# rebuild frame kinds for the normalizer stack
_F_LAM = 0
_F_APPF = 1
_F_APPA = 2
_F_TNSL = 3
_F_TNSR = 4
_F_BOX = 5


class Budget(object):
    """Mutable contraction budget shared across the machine layers."""

    __slots__ = ("left",)

    def __init__(self, n):
        self.left = n


def pat_vars(p):
    """Set of variable names bound by a pattern tree."""
    out = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if q[0] == VAR:
            out.add(q[1])
        else:
            stack.append(q[1])
            stack.append(q[2])
    return out


def free_vars(t):
    """Free variables; lambda binds its pattern's names, nothing else binds."""
    out = set()
    stack = [(t, frozenset())]
    while stack:
        t, bound = stack.pop()
        tag = t[0]
        if tag == VAR:
            if t[1] not in bound:
                out.add(t[1])
        elif tag == LAM:
            stack.append((t[2], bound | pat_vars(t[1])))
        elif tag == APP or tag == TNS:
            stack.append((t[1], bound))
            stack.append((t[2], bound))
        else:
            stack.append((t[1], bound))
    return out


def term_size(t):
    """Number of constructors in the term tree."""
    n = 0
    stack = [t]
    while stack:
        t = stack.pop()
        n += 1
        tag = t[0]
        if tag == LAM:
            stack.append(t[2])
        elif tag == APP or tag == TNS:
            stack.append(t[1])
            stack.append(t[2])
        elif tag != VAR:
            stack.append(t[1])
    return n


def _fresh(base, used):
    root = base.rstrip("'")
    if not root:
        root = "v"
    cand = root + "'"
    while cand in used:
        cand = cand + "'"
    return cand


def _rename_pattern(p, ren):
    if p[0] == VAR:
        new = ren.get(p[1])
        return (VAR, new) if new is not None else p
    return (TNS, _rename_pattern(p[1], ren), _rename_pattern(p[2], ren))


def substitute(t, sub):
    """Capture-avoiding simultaneous substitution of terms for names."""
    if not sub:
        return t
    avoid = set()
    for v in sub.values():
        avoid |= free_vars(v)
    return _subst(t, sub, avoid)


def _subst(t, sub, avoid):
    tag = t[0]
    if tag == VAR:
        return sub.get(t[1], t)
    if tag == LAM:
        pat, body = t[1], t[2]
        pv = pat_vars(pat)
        live = {k: v for k, v in sub.items() if k not in pv and k in free_vars(body)}
        if not live:
            return t
        clash = pv & avoid
        if clash:
            used = set(avoid)
            used |= free_vars(body)
            used |= pv
            used |= set(live)
            ren = {}
            for name in sorted(clash):
                f = _fresh(name, used)
                used.add(f)
                ren[name] = f
            pat = _rename_pattern(pat, ren)
            body = _subst(body, {k: (VAR, v) for k, v in ren.items()}, frozenset(ren.values()))
        return (LAM, pat, _subst(body, live, avoid))
    if tag == APP or tag == TNS:
        return (tag, _subst(t[1], sub, avoid), _subst(t[2], sub, avoid))
    return (tag, _subst(t[1], sub, avoid))


def _refold(t, frames):
    while frames:
        isdoor, x = frames.pop()
        t = (x, t) if isdoor else (APP, t, x)
    return t


def _spine(t, bud):
    """Contract redexes at the root chain until the root constructor is stable.

    Returns (term, steps, exhausted).  A stable root is one no further
    contraction anywhere can change: Var, Tns, boxes, a door over a
    stable non-box, a Lam, or an application whose head is stable and
    either not a Lam or a Lam whose pattern can never match.
    """
    frames = []
    steps = 0
    while True:
        tag = t[0]
        if tag == APP:
            frames.append((False, t[2]))
            t = t[1]
            continue
        if tag == BANGD or tag == PARD:
            frames.append((True, tag))
            t = t[1]
            continue
        if not frames:
            return t, steps, False
        isdoor, x = frames[-1]
        if isdoor:
            if (x == BANGD and tag == BANG) or (x == PARD and tag == PAR):
                if bud.left <= 0:
                    return _refold(t, frames), steps, True
                bud.left -= 1
                steps += 1
                frames.pop()
                t = t[1]
                continue
            return _refold(t, frames), steps, False
        if tag == LAM:
            binds = {}
            st, x2, s2 = _match(t[1], x, binds, bud)
            steps += s2
            frames[-1] = (False, x2)
            if st == _OK:
                if bud.left <= 0:
                    return _refold(t, frames), steps, True
                bud.left -= 1
                steps += 1
                frames.pop()
                t = substitute(t[2], binds)
                continue
            if st == _STUCK:
                return _refold(t, frames), steps, False
            return _refold(t, frames), steps, True
        # head is Var/Tns/Bang/Par: application can never fire
        return _refold(t, frames), steps, False


def _match(p, a, binds, bud):
    """Match a pattern tree against an argument, spining just enough of the
    argument to expose the tensors the pattern demands.

    A pattern variable takes any subterm; a tensor pattern needs the
    argument position to reduce to a literal tensor.  Returns
    (status, updated argument, steps).
    """
    if p[0] == VAR:
        binds[p[1]] = a
        return _OK, a, 0
    a, s, exhausted = _spine(a, bud)
    if exhausted:
        return _OUT, a, s
    if a[0] != TNS:
        return _STUCK, a, s
    st, l2, s2 = _match(p[1], a[1], binds, bud)
    if st != _OK:
        return st, (TNS, l2, a[2]), s + s2
    st, r2, s3 = _match(p[2], a[2], binds, bud)
    return st, (TNS, l2, r2), s + s2 + s3


def _rebuild(t, stack):
    while stack:
        f = stack.pop()
        k = f[0]
        if k == _F_LAM:
            t = (LAM, f[1], t)
        elif k == _F_APPF:
            t = (APP, t, f[1])
        elif k == _F_APPA:
            t = (APP, f[1], t)
        elif k == _F_TNSL:
            t = (TNS, t, f[1])
        elif k == _F_TNSR:
            t = (TNS, f[1], t)
        else:
            t = (f[1], t)
    return t


def normalize(t, limit):
    """Reduce toward normal form with at most `limit` contractions.

    Returns (term, steps, normal).  When the budget runs out the term
    returned is the exact reduct after `steps` contractions.
    """
    bud = Budget(limit)
    total = 0
    stack = []
    down = True
    while True:
        if down:
            t, s, exhausted = _spine(t, bud)
            total += s
            if exhausted:
                return _rebuild(t, stack), total, False
            tag = t[0]
            if tag == VAR:
                down = False
            elif tag == LAM:
                stack.append((_F_LAM, t[1]))
                t = t[2]
            elif tag == APP:
                stack.append((_F_APPF, t[2]))
                t = t[1]
            elif tag == TNS:
                stack.append((_F_TNSL, t[2]))
                t = t[1]
            else:
                stack.append((_F_BOX, tag))
                t = t[1]
        else:
            if not stack:
                return t, total, True
            f = stack.pop()
            k = f[0]
            if k == _F_LAM:
                t = (LAM, f[1], t)
            elif k == _F_APPF:
                stack.append((_F_APPA, t))
                t = f[1]
                down = True
            elif k == _F_APPA:
                t = (APP, f[1], t)
            elif k == _F_TNSL:
                stack.append((_F_TNSR, t))
                t = f[1]
                down = True
            elif k == _F_TNSR:
                t = (TNS, f[1], t)
            else:
                t = (f[1], t)


def step(t):
    """One contraction in machine order, or None when t is normal."""
    t2, steps, _ = normalize(t, 1)
    return t2 if steps == 1 else None


def alpha_canon(t, level=0, env=None):
    """Alpha-canonical form: bound names become de Bruijn levels.

    Two terms are alpha-equivalent iff their canonical forms are equal;
    the renaming doubles as the independent oracle for the substitution
    tests (a capture bug shows up as a canon mismatch after round-trip).
    """
    if env is None:
        env = {}
    tag = t[0]
    if tag == VAR:
        lvl = env.get(t[1])
        return (VAR, t[1]) if lvl is None else (VAR, lvl)
    if tag == LAM:
        names = _pattern_names(t[1])
        env2 = dict(env)
        k = level
        for name in names:
            env2[name] = k
            k += 1
        return (LAM, _canon_pattern(t[1], env2), alpha_canon(t[2], k, env2))
    if tag == APP or tag == TNS:
        return (tag, alpha_canon(t[1], level, env), alpha_canon(t[2], level, env))
    return (tag, alpha_canon(t[1], level, env))


def _pattern_names(p):
    if p[0] == VAR:
        return [p[1]]
    return _pattern_names(p[1]) + _pattern_names(p[2])


def _canon_pattern(p, env):
    if p[0] == VAR:
        return (VAR, env[p[1]])
    return (TNS, _canon_pattern(p[1], env), _canon_pattern(p[2], env))


def alpha_eq(a, b):
    return alpha_canon(a) == alpha_canon(b)
