"""The arithmetic corpus against the reduction oracle, including the
worked reduction traces the source figures spell out."""

import pytest

from lal import stdlib as L
from lal.reduce import reduce_term, trace
from lal.term import App, Par, ParDoor, Var, alpha_eq, app, parse_term
from lal.translate import decode_numeral, decode_tape


def run(t, fuel=2_000_000):
    return reduce_term(t, fuel)


def num(n):
    return L.numeral(n)


def dec(t):
    got = decode_numeral(t)
    assert got is not None, "not a numeral shape"
    return got


def test_numeral_shapes():
    assert alpha_eq(num(0), parse_term(r"\x. $\y. y"))
    assert alpha_eq(num(3), parse_term(r"\x. $(\y. ~!x (~!x (~!x y)))"))
    assert decode_numeral(num(0)) == (0, 0)
    assert decode_numeral(parse_term(r"\x. x")) is None


def test_decode_generator():
    for n in range(0, 51):
        assert decode_numeral(num(n)) == (n, 0)


def test_zero_pq_shape():
    assert alpha_eq(L.zero_pq(2, 1), parse_term(r"$$!(\x. $\y. y)"))


# --- the successor trace, step for step -------------------------------------

def test_succ_trace_matches_figure():
    # succ applied to the numeral 1: four contractions, each matching the
    # displayed intermediate line.
    start = App(L.DEFS["succ"], num(1))
    tr = trace(start)
    expected = [
        start,
        parse_term(r"\x. $(\y. ~!x (~$((\x. $(\y. ~!x y)) x) y))"),
        parse_term(r"\x. $(\y. ~!x (~$$(\w. ~!x w) y))"),
        parse_term(r"\x. $(\y. ~!x ((\w. ~!x w) y))"),
        parse_term(r"\x. $(\y. ~!x (~!x y))"),
    ]
    assert len(tr) == len(expected)
    for got, want in zip(tr, expected):
        assert alpha_eq(got, want)
    assert alpha_eq(tr[-1], num(2))


@pytest.mark.parametrize("n", range(0, 11))
def test_succ_table(n):
    assert dec(run(App(L.DEFS["succ"], num(n)))) == (n + 1, 0)


# --- coercion trace ----------------------------------------------------------

def test_coerc_trace_endpoint():
    got = run(App(L.DEFS["coerc"], num(2)))
    assert alpha_eq(got, Par(num(2)))
    assert dec(got) == (2, 1)


def test_coerc_first_step_opens_box():
    start = App(L.DEFS["coerc"], num(2))
    one = trace(start, 1_000)[1]
    want = Par(App(ParDoor(App(num(2), parse_term("!succ"))), Var("zero")))
    # the displayed first line has succ/zero as names; expand them the same way
    want = L.PRELUDE.expand(want)
    assert alpha_eq(one, want)


@pytest.mark.parametrize("n", range(0, 8))
def test_coerc_table(n):
    assert dec(run(App(L.DEFS["coerc"], num(n)))) == (n, 1)


# --- sum / mult / pred -------------------------------------------------------

def test_sum_example():
    assert dec(run(app(L.DEFS["sum"], num(2), num(3)))) == (5, 0)


@pytest.mark.parametrize("a", range(0, 7))
@pytest.mark.parametrize("b", [0, 1, 3, 6])
def test_sum_table(a, b):
    assert dec(run(app(L.DEFS["sum"], num(a), num(b)))) == (a + b, 0)


def test_mult_example():
    from lal.term import Bang

    got = run(app(L.DEFS["mult"], num(2), Bang(num(3))))
    assert dec(got) == (6, 1)


@pytest.mark.parametrize("a", range(0, 7))
@pytest.mark.parametrize("b", [0, 1, 2, 5, 6])
def test_mult_table(a, b):
    from lal.term import Bang

    assert dec(run(app(L.DEFS["mult"], num(a), Bang(num(b))))) == (a * b, 1)


def test_pred_zero():
    assert dec(run(App(L.DEFS["pred"], num(0)))) == (0, 0)


@pytest.mark.parametrize("n", range(1, 11))
def test_pred_table(n):
    assert dec(run(App(L.DEFS["pred"], num(n)))) == (n - 1, 0)


def test_pred_type_shape_is_linear():
    # syntactically linear up to weakening: no variable occurs twice
    from lal._termkernel import APP, LAM, TNS, VAR

    seen = {}

    def walk(t, binder_stack):
        tag = t[0]
        if tag == VAR:
            seen[t[1]] = seen.get(t[1], 0) + 1
        elif tag == LAM:
            walk(t[2], binder_stack)
        elif tag in (APP, TNS):
            walk(t[1], binder_stack)
            walk(t[2], binder_stack)
        else:
            walk(t[1], binder_stack)

    walk(L.RAW["pred"], [])
    assert all(k <= 1 for k in seen.values()), seen


# --- generalized operations --------------------------------------------------

def test_tuple3_example():
    got = run(App(L.tuple_n(3), num(2)))
    want = Par(L.zero_tuple(3))  # shape check only: $ of a 3-tensor
    assert got[0] == want[0]
    inner = got[1]
    vals = []
    while inner[0] == 3:  # TNS
        vals.append(dec(inner[1]))
        inner = inner[2]
    vals.append(dec(inner))
    assert vals == [(2, 0)] * 3


def test_coerc_pq_20():
    got = run(App(L.coerc_pq(2, 0), num(3)))
    assert dec(got) == (3, 3)


def test_coerc_pq_11():
    got = run(App(L.coerc_pq(1, 1), num(2)))
    # $^2 !2: strip two $, one !, then a numeral
    from lal._termkernel import BANG, PAR

    assert got[0] == PAR and got[1][0] == PAR and got[1][1][0] == BANG
    assert dec(got[1][1][1]) == (2, 0)


def test_sum_pn_43_paper_instance():
    from lal.term import tensor_chain

    arg = tensor_chain([L._pars(4, num(1)), L._pars(4, num(0)), L._pars(4, num(4))])
    got = run(Par(App(L.sum_pn(4, 3), arg)))
    assert dec(got) == (5, 5)


def test_iter_p_reduces():
    from lal.term import Bang

    # iter^1 ($ two) !succ $zero  ~>  $$ two
    got = run(
        app(L.iter_p(1), Par(num(2)), Bang(L.DEFS["succ"]), Par(num(0)))
    )
    assert dec(got) == (2, 2)


# --- polynomials -------------------------------------------------------------

def test_polyspec_validation():
    with pytest.raises(ValueError):
        L.PolySpec(())
    with pytest.raises(ValueError):
        L.PolySpec((1, 0))
    with pytest.raises(ValueError):
        L.PolySpec((1, -1, 2))
    p = L.PolySpec((1, 0, 1))
    assert p.degree == 2 and p(2) == 5


def test_poly_flagship_x_squared_plus_one():
    p = L.poly_encode(L.PolySpec((1, 0, 1)))
    got = run(App(p, num(2)), fuel=5_000_000)
    assert dec(got) == (5, 5)


@pytest.mark.parametrize("c", [0, 1, 2])
@pytest.mark.parametrize("n", [0, 1, 2])
def test_poly_constant(c, n):
    p = L.poly_encode(L.PolySpec((c,)))
    assert dec(run(App(p, num(n)))) == (c, 3)


def test_poly_linear():
    p = L.poly_encode(L.PolySpec((2, 3)))
    for n in range(0, 4):
        assert dec(run(App(p, num(n)), fuel=5_000_000)) == (2 + 3 * n, 4)


def test_prelude_text_parses():
    from lal.term import parse_program

    prog = parse_program(L.prelude_text())
    assert alpha_eq(prog.expanded["succ"], L.DEFS["succ"])
    assert alpha_eq(prog.expanded["two"], num(2))
    assert "pred" in prog.types


def test_decode_tape_shapes():
    empty = parse_term(r"\b0 b1. $(\x. x)")
    assert decode_tape(empty) == ("", 0)
    t10 = parse_term(r"\b0 b1. $(\x. ~!b1 (~!b0 x))")
    assert decode_tape(t10) == ("10", 0)
    under = Par(parse_term(r"\b0 b1. $(\x. ~!b1 x)"))
    assert decode_tape(under) == ("1", 1)
