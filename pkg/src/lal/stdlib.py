"""The programming corpus: numerals, arithmetic combinators, the
predecessor family, generalized operations and the polynomial encoder.

Fixed combinators are written in the surface syntax (which keeps them
readable and exercises the parser); parametric families are built with
the term constructors.  `REGISTRY` keeps the unexpanded definitions in
dependency order together with their declared types, which is what the
type checker consumes; `DEFS` holds the closed, macro-expanded terms
the reduction and net engines consume.
"""

from __future__ import annotations

from dataclasses import dataclass

from lal.formula import parse_formula
from lal.term import (
    App,
    Bang,
    BangDoor,
    Lam,
    PVar,
    Par,
    ParDoor,
    Program,
    Var,
    app,
    parse_term,
    tensor_chain,
)

INT = parse_formula("forall a. !(a -o a) -o $(a -o a)")


def int_tuple_type(n: int):
    from lal.formula import tensor_chain as ftensor

    return ftensor([INT] * n)


# name, definition (may reference earlier names), declared type (None: untyped)
_SOURCE = [
    ("I", r"\x. x", "forall a. a -o a"),
    # The predecessor's projection must be heterogeneous: it extracts the
    # Int component of an (Int -o Int) * Int pair.
    ("pi2", r"\x * y. y", "forall a. forall b. a * b -o b"),
    (
        "T",
        r"\f. \g * h. f * (g h)",
        "forall a. (a -o a) -o ((a -o a) * a) -o (a -o a) * a",
    ),
    (
        "step_fn",
        r"\z. T z",
        "(Int -o Int) -o ((Int -o Int) * Int) -o (Int -o Int) * Int",
    ),
    ("base_fn", r"\y. T I (I * y)", "Int -o (Int -o Int) * Int"),
    ("zero", r"\x. $\y. y", "Int"),
    ("succ", r"\z x. $(\y. ~!x (~$(z x) y))", "Int -o Int"),
    ("sum", r"\w z x. $(\y. ~$(w x) (~$(z x) y))", "Int -o Int -o Int"),
    ("iter", r"\x y z. $(~$(x y) ~$z)", "forall a. Int -o !(a -o a) -o $a -o $a"),
    ("mult", r"\x y. iter x !(\w. sum ~!y w) $zero", "Int -o !Int -o $Int"),
    ("coerc", r"\x. $(~$(x !succ) zero)", "Int -o $Int"),
    (
        "pred",
        r"\w x. $(\y. pi2 (~$(w !(step_fn ~!x)) (base_fn y)))",
        "Int -o Int",
    ),
]


def _build():
    prog = Program()
    types = {}
    for name, src, ty in _SOURCE:
        prog.define(name, parse_term(src))
        if ty is not None:
            types[name] = parse_formula(ty.replace("Int", "(forall a. !(a -o a) -o $(a -o a))"))
            prog.types[name] = types[name]
    return prog


PRELUDE: Program = _build()
RAW = PRELUDE.raw
DEFS = PRELUDE.expanded
TYPES = PRELUDE.types


def numeral(n: int):
    """The tally integer: \\x. $(\\y. ~!x (... (~!x y)))."""
    if n < 0:
        raise ValueError("numerals are nonnegative")
    body = Var("y")
    for _ in range(n):
        body = App(BangDoor(Var("x")), body)
    return Lam(PVar("x"), Par(Lam(PVar("y"), body)))


def zero_tuple(n: int):
    return tensor_chain([numeral(0)] * n)


def _pars(n, t):
    for _ in range(n):
        t = Par(t)
    return t


def _bangs(n, t):
    for _ in range(n):
        t = Bang(t)
    return t


def _pardoors(n, t):
    for _ in range(n):
        t = ParDoor(t)
    return t


def _bangdoors(n, t):
    for _ in range(n):
        t = BangDoor(t)
    return t


def zero_pq(p: int, q: int):
    """$^p !^q zero."""
    return _pars(p, _bangs(q, numeral(0)))


def sum_n(n: int):
    """n-ary sum: one $-box collecting the n unary chains."""
    if n < 1:
        raise ValueError("sum_n needs n >= 1")
    xs = [f"x{i}" for i in range(1, n + 1)]
    body = Var("y")
    for x in reversed(xs):
        body = App(ParDoor(App(Var(x), Var("z"))), body)
    pat = tensor_chain([PVar(x) for x in xs])
    return Lam(pat, Lam(PVar("z"), Par(Lam(PVar("y"), body))))


def sum_pn(p: int, n: int):
    """Summing n integers that sit p $-boxes deep."""
    xs = [f"x{i}" for i in range(1, n + 1)]
    pat = tensor_chain([PVar(x) for x in xs])
    arg = tensor_chain([_pardoors(p, Var(x)) for x in xs])
    return Lam(pat, _pars(p, App(sum_n(n), arg)))


def succ_pq(p: int, q: int):
    return Lam(
        PVar("x"),
        _pars(p, _bangs(q, App(DEFS["succ"], _bangdoors(q, _pardoors(p, Var("x")))))),
    )


def coerc_pq(p: int, q: int):
    return Lam(
        PVar("x"),
        Par(App(ParDoor(App(Var("x"), Bang(succ_pq(p, q)))), zero_pq(p, q))),
    )


def mult_p(p: int):
    return Lam(
        PVar("x"),
        Lam(PVar("y"), _pars(p, app(DEFS["mult"], _pardoors(p, Var("x")), _pardoors(p, Var("y"))))),
    )


def tuple_n(n: int):
    """Fan a numeral out into n copies, inside one $-box."""
    if n < 1:
        raise ValueError("tuple_n needs n >= 1")
    xs = [f"x{i}" for i in range(1, n + 1)]
    stepper = Lam(
        tensor_chain([PVar(x) for x in xs]),
        tensor_chain([App(DEFS["succ"], Var(x)) for x in xs]),
    )
    return Lam(
        PVar("x"),
        Par(App(ParDoor(App(Var("x"), Bang(stepper))), zero_tuple(n))),
    )


def iter_p(p: int):
    """The iterator generalized to a $^p-deep integer.

    The verbatim parametric shape; reduction-correct for all arguments,
    door-disciplined only when the step argument is a closed term placed
    at its use level (which is how the machine encoding uses it).
    """
    return Lam(
        PVar("x"),
        Lam(
            PVar("y"),
            Lam(
                PVar("z"),
                _pars(p, Par(App(ParDoor(App(_pardoors(p, Var("x")), Var("y"))), ParDoor(Var("z"))))),
            ),
        ),
    )


@dataclass(frozen=True)
class PolySpec:
    """A polynomial with nonnegative coefficients, a0 + a1 x + ... + at x^t."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(int(c) for c in self.coeffs)
        if not cs:
            raise ValueError("need at least a constant coefficient")
        if any(c < 0 for c in cs):
            raise ValueError("coefficients are nonnegative")
        if len(cs) > 1 and cs[-1] == 0:
            raise ValueError("leading coefficient must be positive")
        object.__setattr__(self, "coeffs", cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, n: int) -> int:
        out = 0
        for c in reversed(self.coeffs):
            out = out * n + c
        return out


def deepen_int(t, k: int):
    """Push a $^k-deep integer one level deeper, value preserved."""
    return _pars(k, App(DEFS["coerc"], _pardoors(k, t)))


def _row_vars(j: int):
    return [f"y{j}_{i}" for i in range(j)]


def _vec(row, n: int):
    if n == 0:
        return App(coerc_pq(0, 0), Var(row[0]))
    return app(mult_p(n), _vec(row, n - 1), App(coerc_pq(n - 1, 1), Var(row[n])))


def _factor(i: int, a: int):
    if i == 0:
        return App(coerc_pq(0, 0), numeral(a))
    row = _row_vars(i)
    return app(mult_p(i), _vec(row, i - 1), App(coerc_pq(i - 1, 1), numeral(a)))


def poly_encode(spec: PolySpec):
    """The polynomial as a term of type Int -o $^(degree+3) Int."""
    theta = spec.degree
    if theta == 0:
        value = App(DEFS["coerc"], numeral(spec.coeffs[0]))
        value = deepen_int(value, 1)
        value = deepen_int(value, 2)
        return Lam(PVar("x"), value)
    kappa = theta * (theta + 1) // 2
    flat = []
    for j in range(1, theta + 1):
        flat.extend(_row_vars(j))
    pattern = tensor_chain([PVar(v) for v in flat])
    comps = []
    for i in range(theta + 1):
        comps.append(
            _pars(i + 1, App(coerc_pq(theta - i, 0), _pardoors(i + 1, _factor(i, spec.coeffs[i]))))
        )
    inner = App(
        Lam(pattern, App(sum_pn(theta + 2, theta + 1), tensor_chain(comps))),
        ParDoor(App(tuple_n(kappa), Var("x"))),
    )
    return Lam(PVar("x"), Par(inner))


def poly_type(theta: int):
    from lal.formula import Lolli, Par as FPar

    out = INT
    for _ in range(theta + 3):
        out = FPar(out)
    return Lolli(INT, out)


def prelude_text() -> str:
    """The shipped .lal prelude: fixed combinators plus small numerals."""
    from lal.term import print_term

    lines = ["# combinators on the tally integers"]
    for name, src, ty in _SOURCE:
        lines.append(f"{name} = {src} ;")
        if ty is not None:
            lines.append(f"{name} : {ty} ;")
    lines.append("# small numerals")
    for k, word in enumerate(["one", "two", "three", "four"], start=1):
        lines.append(f"{word} = {print_term(numeral(k))} ;")
    return "\n".join(lines) + "\n"
