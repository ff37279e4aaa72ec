"""The decorated-calculus checker and the elaborator on the corpus."""

import pytest

from lal import stdlib as L
from lal.formula import Bang, Forall, Lolli, Par, TVar, parse_formula
from lal.term import Var, parse_term
from lal.typecheck import (
    CheckResult,
    ConstEnv,
    Derivation,
    Judgement,
    Status,
    check_derivation,
    check_term,
)
from lal._termkernel import VAR

INT = L.INT


def accepts(m, ty, env=None) -> Derivation:
    res = check_term(m, ty, env)
    assert res.status is Status.ACCEPT, res.reason
    assert check_derivation(res.derivation) == []
    return res.derivation


def stdlib_env() -> ConstEnv:
    return ConstEnv.from_program(L.PRELUDE)


# --- hand-built derivations ---------------------------------------------------

def test_axiom_derivation():
    f = parse_formula("a -o a")
    d = Derivation("Ax", [], Judgement((((VAR, "x"), f),), Var("x"), f))
    assert check_derivation(d) == []


def test_axiom_bad_formula():
    f = parse_formula("a -o a")
    g = parse_formula("a")
    d = Derivation("Ax", [], Judgement((((VAR, "x"), f),), Var("x"), g))
    assert any(i.code == "AxShape" for i in check_derivation(d))


def test_bang_arity_violation():
    a = parse_formula("a")
    prem = Derivation(
        "Ax", [], Judgement((((VAR, "x"), a),), Var("x"), a)
    )
    # fake a two-assumption premise for the ! rule
    two = Judgement((((VAR, "x"), a), ((VAR, "y"), a)), Var("x"), a)
    prem2 = Derivation("Weak", [prem], two)
    conc = Judgement(
        (((VAR, "x"), Bang(a)), ((VAR, "y"), Bang(a))),
        parse_term("!(~!x)"),
        Bang(a),
    )
    d = Derivation("Bang", [prem2], conc)
    assert any(i.code == "BangArity" for i in check_derivation(d))


def test_eigenvariable_violation():
    a = TVar("a")
    prem = Derivation("Ax", [], Judgement((((VAR, "x"), a),), Var("x"), a))
    conc = Judgement((((VAR, "x"), a),), Var("x"), Forall("a", a))
    d = Derivation("ForallR", [prem], conc)
    assert any(i.code == "EigenvariableViolation" for i in check_derivation(d))


# --- elaboration: small cases ---------------------------------------------------

def test_identity_checks():
    accepts(parse_term(r"\x. x"), parse_formula("forall a. a -o a"))


def test_識别_wrong_type_rejected():
    res = check_term(parse_term(r"\x. x"), parse_formula("forall a. forall b. a -o b"))
    assert res.status is Status.REJECT


def test_pattern_projection():
    accepts(parse_term(r"\x * y. y"), parse_formula("forall a. forall b. a * b -o b"))


def test_pattern_absorbs_wider_tensor():
    # extended assumption: a two-variable pattern against a three-part tensor
    accepts(
        parse_term(r"\x * y. x"),
        parse_formula("forall a. forall b. forall c. a * (b * c) -o a"),
    )


def test_tensor_pair():
    accepts(parse_term(r"\x. \y. x * y"), parse_formula("forall a. forall b. a -o b -o a * b"))


def test_weakening_unused():
    accepts(parse_term(r"\x. \y. x"), parse_formula("forall a. forall b. a -o b -o a"))


def test_contraction_needs_bang():
    res = check_term(parse_term(r"\x. x * x"), parse_formula("forall a. a -o a * a"))
    assert res.status is Status.REJECT
    accepts(parse_term(r"\x. x * x"), parse_formula("forall a. !a -o !a * !a"))


def test_zero_at_int():
    accepts(L.RAW["zero"], INT)


def test_box_door_typing():
    # \x. $(~$x) : $a -o $a  (the generic $-shift of an assumption)
    accepts(parse_term(r"\x. $(~$x)"), parse_formula("forall a. $a -o $a"))
    accepts(parse_term(r"\x. $(~!x)"), parse_formula("forall a. !a -o $a"))
    accepts(parse_term(r"\x. !(~!x)"), parse_formula("forall a. !a -o !a"))


def test_bang_shift_of_par_rejected():
    res = check_term(parse_term(r"\x. !(~$x)"), parse_formula("forall a. $a -o !a"))
    assert res.status is Status.REJECT


def test_numerals_check():
    for n in (0, 1, 2, 5):
        accepts(L.numeral(n), INT)


# --- the combinator corpus -----------------------------------------------------

def test_succ_type():
    accepts(L.RAW["succ"], parse_formula(""), None) if False else None
    env = stdlib_env()
    accepts(L.RAW["succ"], env.formula("succ"), env)


@pytest.mark.parametrize("name", ["I", "pi2", "T", "step_fn", "base_fn", "zero", "succ", "sum", "iter", "mult", "coerc", "pred"])
def test_prelude_constant_types(name):
    env = stdlib_env()
    accepts(L.RAW[name], env.formula(name), env)


def test_iter_misuse_rejected():
    env = stdlib_env()
    from lal.term import app, Bang as TBang, Par as TPar

    bad = app(Var("iter"), L.numeral(2), TBang(L.numeral(2)), TPar(L.numeral(0)))
    res = check_term(bad, Par(INT), env)
    assert res.status is Status.REJECT, res.reason


def test_iter_proper_use_accepts():
    env = stdlib_env()
    from lal.term import app, Bang as TBang, Par as TPar

    good = app(Var("iter"), L.numeral(2), TBang(Var("succ")), TPar(L.numeral(0)))
    res = check_term(good, Par(INT), env)
    assert res.status is Status.ACCEPT, res.reason


def test_generalized_ops_check():
    assert check_term(L.sum_n(2), parse_formula("(%s * %s) -o %s" % ((_i(),) * 3))).status is Status.ACCEPT
    assert check_term(
        L.coerc_pq(1, 1),
        parse_formula("%s -o $$!%s" % (_i(), _i())),
    ).status is Status.ACCEPT
    assert check_term(
        L.sum_pn(2, 2),
        parse_formula("($$%s * $$%s) -o $$%s" % ((_i(),) * 3)),
    ).status is Status.ACCEPT
    assert check_term(
        L.tuple_n(2),
        parse_formula("%s -o $(%s * %s)" % ((_i(),) * 3)),
    ).status is Status.ACCEPT
    assert check_term(
        L.mult_p(1),
        parse_formula("$%s -o $!%s -o $$%s" % ((_i(),) * 3)),
    ).status is Status.ACCEPT


def _i() -> str:
    return "(forall a. !(a -o a) -o $(a -o a))"


@pytest.mark.parametrize("theta,coeffs", [(0, (2,)), (1, (1, 2)), (2, (1, 0, 1))])
def test_poly_types(theta, coeffs):
    p = L.poly_encode(L.PolySpec(coeffs))
    res = check_term(p, L.poly_type(theta))
    assert res.status is Status.ACCEPT, res.reason


def test_needs_annotation_on_bare_lambda_argument():
    res = check_term(parse_term(r"(\x. x) (\y. y)"), parse_formula("forall a. a -o a"))
    assert res.status in (Status.NEEDS_ANNOTATION, Status.REJECT)


def test_subject_matches_input():
    env = stdlib_env()
    d = accepts(L.RAW["mult"], env.formula("mult"), env)
    from lal.term import alpha_eq

    assert alpha_eq(d.conclusion.subject, L.DEFS["mult"])
