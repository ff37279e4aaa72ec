"""Cut elimination: linear steps, box shifting, box duplication, and the
garbage-collection families, each as a local graph rewrite.

Every rewrite mutates the owning net in place.  New cuts created by a
rewrite are immediately compressed through axiom endpoints (counted as
GcAx steps): this keeps the invariant that no cut wire ends in an
axiom, so running garbage collection can never unmask a redex that the
level-by-level strategy already discharged.

The elided garbage-collection pictures are reconstructed from the
accompanying text; each rule notes the reading it implements:
  * weakening meets a conclusion: erase that node, re-emitting a
    weakening on each premise subnet and a unit on each binder-side
    product ("the weakening goes downward");
  * a unit meets an assumption position: erase the consuming node,
    re-emitting units on its products and weakenings on its other
    premises ("the unit keeps erasing upward");
  * a box dies as a whole when a weakening meets its conclusion or a
    unit feeds one of its doors.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from lal.formula import subst_type
from lal.net import (
    AX,
    BANG_BOX,
    CONCLUSION_PORT,
    CONTR,
    Door,
    FORALL_L,
    FORALL_R,
    LOLLI_L,
    LOLLI_R,
    Net,
    PAR_BOX,
    TENSOR_L,
    TENSOR_R,
    UNIT,
    WEAK,
    consumer_ports,
    nets_at_level,
    producer_ports,
)
from lal.net import clone_box as _clone_box


class RedexKind(Enum):
    Beta = "beta"
    TensorAnnih = "tensor"
    ForallAnnih = "forall"
    Shift = "shift"
    Duplicate = "dup"
    GcAx = "gc-ax"
    GcWeakBeta = "gc-wbeta"
    GcWeakOther = "gc-w"
    GcUnit = "gc-unit"
    GcBoxErase = "gc-box"


LINEAR_KINDS = frozenset({RedexKind.Beta, RedexKind.TensorAnnih, RedexKind.ForallAnnih})
GC_KINDS = frozenset(
    {RedexKind.GcAx, RedexKind.GcWeakBeta, RedexKind.GcWeakOther, RedexKind.GcUnit, RedexKind.GcBoxErase}
)
ALL_KINDS = frozenset(RedexKind)


@dataclass
class Redex:
    kind: RedexKind
    level: int
    net: Net
    wire: int

    @property
    def site(self):
        return self.wire


@dataclass
class StepRecord:
    ordinal: int
    kind: RedexKind
    level: int
    pre_size: int
    post_size: int


class StaleRedex(RuntimeError):
    pass


def classify(net: Net, w) -> RedexKind | None:
    p, c = w.producer, w.consumer
    if p is None or c is None:
        return None
    pn = net.nodes[p[0]]
    cn = net.nodes[c[0]]
    pk, ck = pn.kind, cn.kind
    if w.cut:
        if pk == LOLLI_R and p[1] == "out" and ck == LOLLI_L and c[1] == "fun":
            return RedexKind.Beta
        if pk == TENSOR_R and ck == TENSOR_L and c[1] == "pair":
            return RedexKind.TensorAnnih
        if pk == FORALL_R and ck == FORALL_L and c[1] == "in":
            return RedexKind.ForallAnnih
        if pk in (BANG_BOX, PAR_BOX) and p[1] == "out" and ck in (BANG_BOX, PAR_BOX) and c[1].startswith("aux"):
            mark = cn.doors[int(c[1][3:])].mark
            if (mark == "!" and pk == BANG_BOX) or (mark == "$" and pk == PAR_BOX):
                return RedexKind.Shift
            return None  # mark-incompatible: a validation error, not a redex
        if pk == BANG_BOX and p[1] == "out" and ck == CONTR and c[1] == "in":
            return RedexKind.Duplicate
        if (pk == AX and p[1] == "out") or (ck == AX and c[1] == "in"):
            return RedexKind.GcAx
    if ck == WEAK:
        if CONCLUSION_PORT.get(pk) == p[1]:
            if pk == LOLLI_R:
                return RedexKind.GcWeakBeta
            if pk in (BANG_BOX, PAR_BOX):
                return RedexKind.GcBoxErase
            return RedexKind.GcWeakOther
        return None
    if pk == UNIT:
        if ck in (BANG_BOX, PAR_BOX) and c[1].startswith("aux"):
            return RedexKind.GcBoxErase
        if (
            (ck == LOLLI_L and c[1] == "fun")
            or (ck == TENSOR_L and c[1] == "pair")
            or (ck == CONTR and c[1] == "in")
            or (ck == FORALL_L and c[1] == "in")
            or (ck == AX and c[1] == "in")
        ):
            return RedexKind.GcUnit
    return None


def find_redexes(net: Net, level: int, kinds=ALL_KINDS) -> list[Redex]:
    """All redexes of the requested kinds whose cut lies at the level,
    in ascending site (wire id) order."""
    out = []
    if level < 0:
        return out
    for sub in nets_at_level(net, level):
        for wid in sorted(sub.wires):
            w = sub.wires[wid]
            k = classify(sub, w)
            if k is not None and k in kinds:
                out.append(Redex(k, level, sub, wid))
    out.sort(key=lambda r: r.wire)
    return out


def _revalidate(r: Redex):
    w = r.net.wires.get(r.wire)
    if w is None or classify(r.net, w) != r.kind:
        raise StaleRedex(f"{r.kind} at wire {r.wire} no longer applies")
    return w


def compress_ax(net: Net, w) -> int:
    """Merge cut/axiom chains at both ends of a cut wire.  Returns the
    number of axioms removed (each counts as one GcAx step)."""
    steps = 0
    while w.cut and w.producer is not None:
        pn = net.nodes[w.producer[0]]
        if pn.kind != AX or w.producer[1] != "out":
            break
        win = net.port_wire(pn, "in")
        newp = win.producer
        if win.id in net.free_names:
            net.free_names[w.id] = net.free_names.pop(win.id)
        net.drop_wire(win)
        net.drop_node(pn)
        net.set_producer(w, newp)
        w.cut = _is_conclusion(net, newp)
        if newp is None and net.owner_box is not None:
            for d in net.owner_box.doors:
                if d.inner == win.id:
                    d.inner = w.id
        steps += 1
    while w.cut and w.consumer is not None:
        cn = net.nodes[w.consumer[0]]
        if cn.kind != AX or w.consumer[1] != "in":
            break
        wout = net.port_wire(cn, "out")
        newc = wout.consumer
        net.drop_wire(wout)
        net.drop_node(cn)
        net.set_consumer(w, newc)
        if newc is None:
            net.root = w.id
            w.cut = False
        steps += 1
    return steps


def _is_conclusion(net: Net, endpoint) -> bool:
    if endpoint is None:
        return False
    return CONCLUSION_PORT.get(net.nodes[endpoint[0]].kind) == endpoint[1]


def _point(net: Net, w, new_consumer) -> None:
    """Aim w at a new consumer; a consumerless wire becomes the root.
    The wire is a cut iff a conclusion now feeds an attached position."""
    if new_consumer is None:
        net.set_consumer(w, None)
        net.root = w.id
        w.cut = False
    else:
        net.set_consumer(w, new_consumer)
        w.cut = _is_conclusion(net, w.producer)


def _compress_if_alive(net: Net, w) -> int:
    # an earlier compression may have absorbed this very wire
    if w.id in net.wires:
        return compress_ax(net, w)
    return 0


def _new_cut(net: Net, w, new_consumer) -> int:
    """Point w at a new consumer as a cut; compress axiom ends."""
    _point(net, w, new_consumer)
    return _compress_if_alive(net, w)


def apply_linear(r: Redex) -> int:
    """Beta / tensor / forall annihilation; returns GcAx compressions."""
    w = _revalidate(r)
    net = r.net
    pn = net.nodes[w.producer[0]]
    cn = net.nodes[w.consumer[0]]
    gc = 0
    if r.kind == RedexKind.Beta:
        wb = net.port_wire(pn, "body")
        wx = net.port_wire(pn, "bind")
        wa = net.port_wire(cn, "arg")
        wr = net.port_wire(cn, "res")
        res_consumer = wr.consumer
        bind_consumer = wx.consumer
        net.drop_wire(w)
        net.drop_wire(wr)
        net.drop_wire(wx)
        net.drop_node(pn)
        net.drop_node(cn)
        _point(net, wb, res_consumer)
        _point(net, wa, bind_consumer)
        gc += _compress_if_alive(net, wb)
        gc += _compress_if_alive(net, wa)
    elif r.kind == RedexKind.TensorAnnih:
        wl = net.port_wire(pn, "left")
        wr_ = net.port_wire(pn, "right")
        vl = net.port_wire(cn, "left")
        vr = net.port_wire(cn, "right")
        cl, cr = vl.consumer, vr.consumer
        net.drop_wire(w)
        net.drop_wire(vl)
        net.drop_wire(vr)
        net.drop_node(pn)
        net.drop_node(cn)
        _point(net, wl, cl)
        _point(net, wr_, cr)
        gc += _compress_if_alive(net, wl)
        gc += _compress_if_alive(net, wr_)
    else:  # ForallAnnih
        wb = net.port_wire(pn, "body")
        wi = net.port_wire(cn, "out")
        ci = wi.consumer
        var, inst = pn.var, cn.inst
        dashed = set(pn.dashed or ())
        net.drop_wire(w)
        net.drop_wire(wi)
        net.drop_node(pn)
        net.drop_node(cn)
        if var is not None and inst is not None and dashed:
            _relabel(net, dashed, var, inst)
        gc += _new_cut(net, wb, ci)
    return gc


def _relabel(net: Net, dashed: set, var: str, inst):
    for wid in dashed:
        wire = _find_wire(net, wid)
        if wire is not None and wire.label is not None:
            wire.label = subst_type(wire.label, var, inst)


def _find_wire(net: Net, wid: int):
    if wid in net.wires:
        return net.wires[wid]
    for nd in net.nodes.values():
        if nd.kind in (BANG_BOX, PAR_BOX):
            w = _find_wire(nd.inner, wid)
            if w is not None:
                return w
    return None


def apply_shift(r: Redex) -> int:
    """Merge the producer box into the consumer box through its door."""
    w = _revalidate(r)
    net = r.net
    b1 = net.nodes[w.producer[0]]
    b2 = net.nodes[w.consumer[0]]
    j = int(w.consumer[1][3:])
    door = b2.doors[j]
    inner1, inner2 = b1.inner, b2.inner
    iw = inner2.wires[door.inner]
    root1 = inner1.root
    inner2.nodes.update(inner1.nodes)
    inner2.wires.update(inner1.wires)
    inner1.nodes.clear()
    inner1.wires.clear()
    r1 = inner2.wires[root1]
    gc = 0
    inner_consumer = iw.consumer
    inner2.drop_wire(iw)
    if inner_consumer is None:
        inner2.root = r1.id
    else:
        gc += _new_cut(inner2, r1, inner_consumer)
    # door j is consumed; the dissolved box's doors carry over, marks intact
    new_doors = b2.doors[:j] + b2.doors[j + 1:] + list(b1.doors)
    b1.doors = []
    net.drop_wire(w)
    net.drop_node(b1)
    for port in [p for p in b2.ports if p.startswith("aux")]:
        del b2.ports[port]
    b2.doors = []
    for i, d in enumerate(new_doors):
        b2.doors.append(d)
        if d.outer is not None:
            net.set_consumer(net.wires[d.outer], (b2.id, f"aux{i}"))
    return gc


def apply_duplicate(r: Redex) -> int:
    """Duplicate the !-box; each contraction branch receives one copy."""
    w = _revalidate(r)
    net = r.net
    box = net.nodes[w.producer[0]]
    con = net.nodes[w.consumer[0]]
    assert box.kind == BANG_BOX, "only !-boxes duplicate"
    v1 = net.port_wire(con, "out1")
    v2 = net.port_wire(con, "out2")
    copy = net.nodes[_clone_box(net, box.id)]
    gc = 0
    net.drop_wire(w)
    net.drop_node(con)
    net.set_producer(v1, (box.id, "out"))
    v1.cut = True
    gc += compress_ax(net, v1)
    net.set_producer(v2, (copy.id, "out"))
    v2.cut = True
    gc += compress_ax(net, v2)
    if box.doors:
        outer = net.wires[box.doors[0].outer]
        feeder = outer.producer
        c2 = net.new_node(CONTR)
        u2 = net.new_wire(consumer=(copy.id, "aux0"), label=outer.label)
        copy.doors[0].outer = u2.id
        wm = net.new_wire(consumer=(c2.id, "in"), label=outer.label)
        if outer.id in net.free_names:
            net.free_names[wm.id] = net.free_names.pop(outer.id)
        net.set_producer(wm, feeder)
        wm.cut = _is_conclusion(net, feeder)
        net.set_producer(outer, (c2.id, "out1"))
        outer.cut = False
        net.set_producer(u2, (c2.id, "out2"))
        gc += _compress_if_alive(net, wm)
    return gc


# ---------------------------------------------------------------------------
# Garbage collection


def _erase_node(net: Net, node, via) -> None:
    """Delete a node, re-emitting weakenings toward its premises and
    units toward its products; `via` is the trigger wire, already gone."""
    for port in consumer_ports(node):
        wid = node.ports.get(port)
        if wid is None or wid == via:
            continue
        wire = net.wires.get(wid)
        if wire is None or wire.consumer != (node.id, port):
            continue
        weak = net.new_node(WEAK)
        net.set_consumer(wire, (weak.id, "in"))
    for port in producer_ports(node):
        wid = node.ports.get(port)
        if wid is None or wid == via:
            continue
        wire = net.wires.get(wid)
        if wire is None or wire.producer != (node.id, port):
            continue
        unit = net.new_node(UNIT)
        net.set_producer(wire, (unit.id, "out"))
    net.drop_node(node)


def apply_gc(r: Redex) -> None:
    w = _revalidate(r)
    net = r.net
    if r.kind == RedexKind.GcAx:
        compress_ax(net, w)
        return
    pn = net.nodes[w.producer[0]]
    cn = net.nodes[w.consumer[0]]
    if r.kind in (RedexKind.GcWeakBeta, RedexKind.GcWeakOther):
        net.drop_wire(w)
        net.drop_node(cn)
        _erase_node(net, pn, w.id)
        return
    if r.kind == RedexKind.GcUnit:
        net.drop_wire(w)
        net.drop_node(pn)
        _erase_node(net, cn, w.id)
        return
    # GcBoxErase: either a weakening below the box or a unit at a door
    if cn.kind == WEAK:
        net.drop_wire(w)
        net.drop_node(cn)
        _erase_node(net, pn, w.id)
    else:
        net.drop_wire(w)
        net.drop_node(pn)
        _erase_node(net, cn, w.id)


def gc_fixpoint(top: Net, on_step=None) -> int:
    """Apply garbage-collection steps to exhaustion; structure strictly
    decreases at each step.  Returns the number of steps."""
    steps = 0
    while True:
        progress = False
        for level in range(top.depth() + 1):
            rs = find_redexes(top, level, GC_KINDS)
            for r in rs:
                pre_nodes = top.alloc.node_count
                pre = pre_nodes + top.wire_count()
                try:
                    apply_gc(r)
                except StaleRedex:
                    continue
                post_nodes = top.alloc.node_count
                post = post_nodes + top.wire_count()
                assert post < pre, "garbage collection must shrink structure"
                assert post_nodes <= pre_nodes, "garbage collection never adds nodes"
                steps += 1
                progress = True
                if on_step is not None:
                    on_step(r, pre_nodes, post_nodes)
        if not progress:
            return steps
