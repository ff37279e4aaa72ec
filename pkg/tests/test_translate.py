import pytest

from lal import stdlib as L
from lal.net import (
    AX,
    BANG_BOX,
    CONTR,
    LOLLI_R,
    PAR_BOX,
    WEAK,
    canonical_form,
    nodes_at_level,
    validate,
)
from lal.term import App, alpha_eq, parse_term
from lal.translate import (
    TranslationError,
    decode_numeral,
    net_to_term,
    term_to_net,
)


def t(s):
    return parse_term(s)


def kinds_at(net, level):
    return sorted(
        next(nd.kind for sub_l in [level] for nd in _all_nodes(net, level))
        for _ in [0]
    )


def _all_nodes(net, level):
    from lal.net import nets_at_level

    for sub in nets_at_level(net, level):
        yield from sub.nodes.values()


def kind_multiset(net, level):
    out = {}
    for nd in _all_nodes(net, level):
        out[nd.kind] = out.get(nd.kind, 0) + 1
    return out


def test_identity_net_shape():
    net = term_to_net(t(r"\x. x"))
    assert validate(net) == []
    assert kind_multiset(net, 0) == {LOLLI_R: 1, AX: 1}


def test_zero_levels():
    net = term_to_net(L.numeral(0))
    assert validate(net) == []
    assert kind_multiset(net, 0) == {LOLLI_R: 1, PAR_BOX: 1, WEAK: 1}
    assert kind_multiset(net, 1) == {LOLLI_R: 1, AX: 1}


def test_numeral_contractions_at_level0():
    for n in range(6):
        net = term_to_net(L.numeral(n))
        assert validate(net) == [], n
        contr = kind_multiset(net, 0).get(CONTR, 0)
        assert contr == (n - 1 if n >= 2 else 0)


def test_axiom_net():
    net = term_to_net(t("x"))
    assert kind_multiset(net, 0) == {AX: 1}
    assert net.free_names


def test_levels_partition_nodes():
    net = term_to_net(L.DEFS["pred"])
    total = sum(len(kind_multiset(net, l)) and sum(kind_multiset(net, l).values()) for l in range(net.depth() + 1))
    assert total == net.node_count()


def test_deep_contraction_example():
    # $(K ~$z ~$z) with K = \a b. a: the contraction sits inside the box
    term = t(r"$((\a b. a) ~$z ~$z)")
    net = term_to_net(term)
    assert validate(net) == []
    assert kind_multiset(net, 0).get(CONTR, 0) == 0
    assert kind_multiset(net, 1).get(CONTR, 0) == 1
    box = next(nd for nd in net.nodes.values() if nd.kind == PAR_BOX)
    assert len(box.doors) == 1 and box.doors[0].mark == "$"


def test_mixed_marks_two_doors():
    term = t(r"$((\a b. a * b) ~$z ~!z)")
    net = term_to_net(term)
    assert validate(net) == []
    box = next(nd for nd in net.nodes.values() if nd.kind == PAR_BOX)
    assert sorted(d.mark for d in box.doors) == ["!", "$"]
    # the two z uses then contract at level 0
    assert kind_multiset(net, 0).get(CONTR, 0) == 1


def test_unmarked_crossing_rejected():
    with pytest.raises(TranslationError):
        term_to_net(t(r"\x. $(x)"))


def test_door_outside_box_rejected():
    with pytest.raises(TranslationError):
        term_to_net(t(r"\x. ~$x"))


def test_pardoor_in_bangbox_rejected():
    with pytest.raises(TranslationError):
        term_to_net(t(r"\x. !(~$x)"))


def test_bangbox_two_inputs_rejected():
    with pytest.raises(TranslationError):
        term_to_net(t(r"\x y. !(~!x ~!y)"))


def test_bangbox_single_contracted_door_ok():
    # two !-marked uses entering a !-box share its one door, merged inside
    net = term_to_net(t(r"\x. !((\a b. a b) ~!x ~!x)"))
    assert validate(net) == []
    box = next(nd for nd in net.nodes.values() if nd.kind == BANG_BOX)
    assert len(box.doors) == 1
    assert kind_multiset(net, 1).get(CONTR, 0) == 1


def test_captured_door_payload_rejected():
    with pytest.raises(TranslationError):
        term_to_net(t(r"$(\x. ~$x)"))


def test_roundtrip_corpus():
    corpus = [
        L.numeral(0),
        L.numeral(3),
        L.DEFS["succ"],
        L.DEFS["sum"],
        L.DEFS["iter"],
        L.DEFS["mult"],
        L.DEFS["coerc"],
        L.DEFS["pred"],
        L.tuple_n(3),
        L.sum_pn(2, 2),
        L.coerc_pq(1, 1),
        L.poly_encode(L.PolySpec((1, 0, 1))),
    ]
    for m in corpus:
        net = term_to_net(m)
        assert validate(net) == []
        back = net_to_term(net)
        assert alpha_eq(back, m)
        # canonical fixpoint through a second round-trip
        again = term_to_net(back)
        assert canonical_form(again) == canonical_form(net)


def test_decode_via_readback():
    net = term_to_net(L.numeral(7))
    assert decode_numeral(net_to_term(net)) == (7, 0)


def test_canonical_id_invariance():
    m = App(L.DEFS["succ"], L.numeral(2))
    a = term_to_net(m)
    b = term_to_net(m)
    # fresh allocator means disjoint ids, canonical forms still agree
    assert canonical_form(a) == canonical_form(b)


def test_canonical_distinguishes():
    assert canonical_form(term_to_net(L.numeral(1))) != canonical_form(term_to_net(L.numeral(2)))


def test_nodes_at_level_bounds():
    net = term_to_net(L.numeral(1))
    with pytest.raises(ValueError):
        nodes_at_level(net, net.depth() + 1)


def test_json_roundtrip():
    from lal.net import net_from_json, net_to_json

    net = term_to_net(L.DEFS["pred"])
    data = net_to_json(net)
    back = net_from_json(data)
    assert validate(back) == []
    assert canonical_form(back) == canonical_form(net)


def test_clone_box_counts():
    from lal.net import clone_box

    net = term_to_net(t(r"(\x. x * x) !(\y. y)"))
    box_id = next(n.id for n in net.nodes.values() if n.kind == BANG_BOX)
    before = net.node_count()
    inner_count = net.nodes[box_id].inner.node_count()
    cid = clone_box(net, box_id)
    assert net.node_count() == before + inner_count + 1
    assert validate(net) == []
    assert cid != box_id
    # level structure preserved
    clone = net.nodes[cid]
    orig = net.nodes[box_id]
    assert clone.inner.depth() == orig.inner.depth()
    assert canonical_form(clone.inner) == canonical_form(orig.inner)
