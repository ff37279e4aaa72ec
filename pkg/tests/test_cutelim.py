"""Cut-elimination rules and the level-by-level strategy, checked
against the term-level oracle on the arithmetic corpus."""

import pytest

from lal import measure as M
from lal import stdlib as L
from lal.cutelim import (
    ALL_KINDS,
    GC_KINDS,
    LINEAR_KINDS,
    RedexKind,
    apply_gc,
    apply_linear,
    find_redexes,
    gc_fixpoint,
)
from lal.net import AX, BANG_BOX, WEAK, canonical_form, validate
from lal.reduce import reduce_term
from lal.term import App, Bang, Var, alpha_eq, app, parse_term
from lal.translate import decode_numeral, net_to_term, term_to_net


def t(s):
    return parse_term(s)


def run_net(term, instrument=False):
    net = term_to_net(term)
    assert validate(net) == []
    M.normalize_sigma(net, instrument=instrument)
    assert validate(net) == []
    return net


def agree(term, fuel=2_000_000, instrument=False):
    want = reduce_term(term, fuel)
    net = run_net(term, instrument=instrument)
    got = net_to_term(net)
    assert alpha_eq(got, want), f"net engine got {got}, oracle says {want}"
    return net


# --- single rules -----------------------------------------------------------

def test_find_redexes_normal_net():
    net = term_to_net(t(r"\x. x"))
    assert find_redexes(net, 0, ALL_KINDS) == []


def test_find_beta_on_identity_application():
    net = term_to_net(App(t(r"\x. x"), L.numeral(0)))
    rs = find_redexes(net, 0, ALL_KINDS)
    assert [r.kind for r in rs] == [RedexKind.Beta]


def test_beta_identity_gives_zero_net():
    term = App(t(r"\x. x"), L.numeral(0))
    net = term_to_net(term)
    r = find_redexes(net, 0, LINEAR_KINDS)[0]
    apply_linear(r)
    assert validate(net) == []
    assert canonical_form(net) == canonical_form(term_to_net(L.numeral(0)))


def test_tensor_annihilation_readback():
    term = t(r"(\x * y. y * x) (a * b)")
    net = term_to_net(term)
    # one beta first, then the tensor pair annihilates
    M.normalize_sigma(net)
    got = net_to_term(net)
    assert alpha_eq(got, t("b * a"))


def test_mult_has_duplicate_redex():
    term = app(L.DEFS["mult"], L.numeral(2), Bang(L.numeral(3)))
    net = term_to_net(term)
    # before any duplication fires, the strategy must find some at level 0
    found = False
    probe = term_to_net(term)
    M.sigma_round(probe, 0)
    for lvl in (0, 1):
        if find_redexes(probe, lvl, {RedexKind.Duplicate}):
            found = True
    assert found


def test_gc_ax_chain():
    # axiom cut against axiom compresses to a single axiom
    from lal.net import Net

    net = Net()
    ax1 = net.new_node(AX)
    ax2 = net.new_node(AX)
    w_in = net.new_wire(consumer=(ax1.id, "in"))
    mid = net.new_wire(producer=(ax1.id, "out"), consumer=(ax2.id, "in"), cut=True)
    out = net.new_wire(producer=(ax2.id, "out"))
    net.root = out.id
    rs = find_redexes(net, 0, GC_KINDS)
    assert rs and rs[0].kind == RedexKind.GcAx
    apply_gc(rs[0])
    assert validate(net) == []
    assert len(net.nodes) == 1 and next(iter(net.nodes.values())).kind == AX


def test_weak_erases_whole_zero_net():
    # (\u v. v) zero zero': the first argument is dropped; garbage
    # collection must erase the whole discarded numeral net
    term = app(t(r"\u v. v"), L.numeral(0), L.numeral(1))
    net = agree(term)
    kinds = [nd.kind for nd in net.nodes.values()]
    assert kinds.count(WEAK) == 0  # closed garbage vanishes entirely
    assert decode_numeral(net_to_term(net)) == (1, 0)


def test_gc_size_monotone_on_mult_run():
    term = app(L.DEFS["mult"], L.numeral(2), Bang(L.numeral(2)))
    net = term_to_net(term)
    # gc_fixpoint asserts strict structure decrease internally
    M.normalize_sigma(net)
    assert validate(net) == []


# --- strategy rounds ---------------------------------------------------------

def test_round_on_already_normal_net():
    net = term_to_net(L.numeral(3))
    rep = M.sigma_round(net, 0)
    assert rep.counted_steps == 0
    rep = M.sigma_round(net, 1)
    assert rep.counted_steps == 0


def test_round_precondition_enforced():
    term = App(L.DEFS["succ"], L.numeral(1))
    net = term_to_net(term)
    with pytest.raises(M.StrategyError):
        M.sigma_round(net, 1)  # not 0-normal yet


def test_succ_net_round_sequence():
    term = App(L.DEFS["succ"], L.numeral(1))
    net = term_to_net(term)
    assert not M.is_l_normal(net, 0)
    r0 = M.sigma_round(net, 0)
    assert M.is_l_normal(net, 0)
    r1 = M.sigma_round(net, 1)
    assert M.is_l_normal(net, 1)
    assert canonical_form(net) == canonical_form(term_to_net(L.numeral(2)))
    assert r0.within_bound and r1.within_bound


def test_is_l_normal_full():
    net = term_to_net(L.numeral(2))
    d = net.depth()
    assert M.is_l_normal(net, d)
    assert M.is_fully_normal(net)


# --- engine agreement on the corpus -------------------------------------------

def test_agree_succ_instrumented():
    net = agree(App(L.DEFS["succ"], L.numeral(1)), instrument=True)
    assert decode_numeral(net_to_term(net)) == (2, 0)


def test_agree_coerc():
    net = agree(App(L.DEFS["coerc"], L.numeral(2)), instrument=True)
    assert decode_numeral(net_to_term(net)) == (2, 1)


@pytest.mark.parametrize("a,b", [(0, 0), (1, 2), (2, 3), (3, 3)])
def test_agree_sum(a, b):
    net = agree(app(L.DEFS["sum"], L.numeral(a), L.numeral(b)), instrument=True)
    assert decode_numeral(net_to_term(net)) == (a + b, 0)


@pytest.mark.parametrize("a,b", [(0, 2), (2, 0), (2, 3), (3, 2)])
def test_agree_mult(a, b):
    net = agree(app(L.DEFS["mult"], L.numeral(a), Bang(L.numeral(b))), instrument=True)
    assert decode_numeral(net_to_term(net)) == (a * b, 1)


@pytest.mark.parametrize("n", [0, 1, 3])
def test_agree_pred(n):
    net = agree(App(L.DEFS["pred"], L.numeral(n)), instrument=True)
    assert decode_numeral(net_to_term(net)) == (max(0, n - 1), 0)


def test_agree_tuple():
    agree(App(L.tuple_n(2), L.numeral(2)), instrument=True)


def test_agree_poly_flagship():
    term = App(L.poly_encode(L.PolySpec((1, 0, 1))), L.numeral(2))
    net = agree(term, fuel=5_000_000)
    assert decode_numeral(net_to_term(net)) == (5, 5)


def test_round_reports_structure():
    term = app(L.DEFS["mult"], L.numeral(2), Bang(L.numeral(3)))
    net = term_to_net(term)
    _, reports = M.normalize_sigma(net, instrument=True)
    assert all(r.within_bound for r in reports)
    assert any(r.steps_p >= 1 for r in reports)
    assert all(r.counted_steps <= r.bound_6D3 for r in reports)
    # gamma strictly decreases within each instrumented round
    for rep in reports:
        for a, b in zip(rep.gamma_trace, rep.gamma_trace[1:]):
            assert b < a


def test_closed_form_bound_values():
    assert M.closed_form_bound(2, 0) == 2 ** 0 + 2  # 6^0 * (1+2) = 3 >= 2
    assert M.closed_form_bound(3, 1) == 240
    assert M.closed_form_bound(2, 0) >= 2
    # monotone in both arguments
    assert M.closed_form_bound(4, 1) > M.closed_form_bound(3, 1)
    assert M.closed_form_bound(3, 2) > M.closed_form_bound(3, 1)


def test_total_bound_on_corpus():
    for term in [
        App(L.DEFS["succ"], L.numeral(4)),
        app(L.DEFS["sum"], L.numeral(2), L.numeral(2)),
        App(L.DEFS["pred"], L.numeral(3)),
    ]:
        net = term_to_net(term)
        mu = M.dims(net)
        d0, dep0 = mu.D, net.depth()
        _, reports = M.normalize_sigma(net)
        assert sum(r.counted_steps for r in reports) <= M.closed_form_bound(d0, dep0)
