"""Term/net translation, net readback, and result-shape decoders.

The translation is compositional and places contractions as deeply as
possible: several door-marked uses of one variable inside a box are
merged inside that box and share a single door, so a duplicated
variable is contracted at the deepest level containing all of its
occurrences.  A variable used as a whole subnet (premise position)
becomes an axiom node; used in an assumption position (function wire,
door) it is the assumption wire itself.

`decode_numeral` and `decode_tape` recognize the canonical value
shapes, possibly under a stack of $-boxes, and report that prefix.
"""

from __future__ import annotations

from lal._termkernel import APP, BANG, BANGD, LAM, PAR, PARD, TNS, VAR
from lal.net import (
    AX,
    BANG_BOX,
    CONTR,
    Door,
    LOLLI_L,
    LOLLI_R,
    Net,
    PAR_BOX,
    TENSOR_L,
    TENSOR_R,
    WEAK,
)
from lal.term import (
    App,
    Bang,
    BangDoor,
    Lam,
    PTensor,
    PVar,
    Par,
    ParDoor,
    Tensor,
    Var,
    pattern_vars,
)


class TranslationError(ValueError):
    pass


class ReadbackError(ValueError):
    pass


class _Frame:
    __slots__ = ("net", "parent", "boxtag", "uses", "door_groups", "door_order")

    def __init__(self, net, parent, boxtag):
        self.net = net
        self.parent = parent
        self.boxtag = boxtag  # BANG / PAR / None at top level
        self.uses = {}        # name -> [Wire], open use wires at this level
        self.door_groups = {}  # (name, mark) -> [inner Wire]
        self.door_order = []   # ("group", key) | ("plain", outer Wire, inner Wire, mark)


def term_to_net(t, free_names=None) -> Net:
    """Translate a term; free variables become net inputs.

    free_names, when given, is the complete ordered list of names the
    term may use freely; unexpected free names then raise.
    """
    _check_door_scopes(t, ((frozenset(),)))
    net = Net()
    fr = _Frame(net, None, None)
    w = _as_premise(_tr(t, fr), fr)
    net.root = w.id
    free = sorted(fr.uses) if free_names is None else list(free_names)
    unexpected = set(fr.uses) - set(free)
    if unexpected:
        raise TranslationError(f"unexpected free variables {sorted(unexpected)}")
    for name in free:
        ws = fr.uses.get(name, [])
        if not ws:
            continue
        merged = _merge(net, ws)
        net.free_names[merged.id] = name
    return net


def _check_door_scopes(t, stack):
    tag = t[0]
    if tag == VAR:
        return
    if tag == LAM:
        top = stack[-1] | pattern_vars(t[1])
        _check_door_scopes(t[2], stack[:-1] + (top,))
    elif tag in (APP, TNS):
        _check_door_scopes(t[1], stack)
        _check_door_scopes(t[2], stack)
    elif tag in (BANG, PAR):
        _check_door_scopes(t[1], stack + (frozenset(),))
    else:  # a door: its payload lives one box level out
        if len(stack) >= 2:
            from lal._termkernel import free_vars

            captured = free_vars(t[1]) & stack[-1]
            if captured:
                raise TranslationError(
                    f"door payload uses {sorted(captured)} bound inside the box it must cross"
                )
            _check_door_scopes(t[1], stack[:-1])
        else:
            # top level: translation will reject the stray door anyway
            _check_door_scopes(t[1], stack)


def _tr(t, fr: _Frame):
    tag = t[0]
    net = fr.net
    if tag == VAR:
        w = net.new_wire()
        fr.uses.setdefault(t[1], []).append(w)
        return w
    if tag == LAM:
        pat = t[1]
        pv = pattern_vars(pat)
        saved = {v: fr.uses.pop(v, None) for v in pv}
        wb = _as_premise(_tr(t[2], fr), fr)
        wpat = _bind(pat, fr)
        for v, old in saved.items():
            if old is not None:
                fr.uses[v] = old
        r = net.new_node(LOLLI_R)
        net.set_consumer(wb, (r.id, "body"))
        net.set_producer(wpat, (r.id, "bind"))
        return net.new_wire(producer=(r.id, "out"))
    if tag == APP:
        wf = _tr(t[1], fr)
        wa = _as_premise(_tr(t[2], fr), fr)
        l = net.new_node(LOLLI_L)
        net.set_consumer(wf, (l.id, "fun"))
        if wf.producer is not None:
            wf.cut = True
        net.set_consumer(wa, (l.id, "arg"))
        return net.new_wire(producer=(l.id, "res"))
    if tag == TNS:
        wl = _as_premise(_tr(t[1], fr), fr)
        wr = _as_premise(_tr(t[2], fr), fr)
        tr = net.new_node(TENSOR_R)
        net.set_consumer(wl, (tr.id, "left"))
        net.set_consumer(wr, (tr.id, "right"))
        return net.new_wire(producer=(tr.id, "out"))
    if tag in (BANG, PAR):
        return _tr_box(tag, t[1], fr)
    # door markers
    mark = "!" if tag == BANGD else "$"
    if fr.parent is None:
        raise TranslationError("door marker outside any box")
    if mark == "$" and fr.boxtag == BANG:
        raise TranslationError("a $-door can only mark $-box inputs")
    payload = t[1]
    if payload[0] == VAR:
        wi = net.new_wire()
        if mark == "$" or fr.boxtag == BANG:
            # contract inside, share one door: the inner face of a
            # $-marked use (and any use entering a !-box) is still
            # duplicable there, so this is the deepest placement
            key = (payload[1], mark)
            if key not in fr.door_groups:
                fr.door_groups[key] = []
                fr.door_order.append(("group", key))
            fr.door_groups[key].append(wi)
        else:
            # a !-marked use entering a $-box loses its ! inside; each
            # occurrence keeps its own door and contraction stays outside
            outer = fr.parent.net.new_wire()
            fr.parent.uses.setdefault(payload[1], []).append(outer)
            fr.door_order.append(("plain", outer, wi, mark))
        return wi
    wout = _tr(payload, fr.parent)
    wi = net.new_wire()
    fr.door_order.append(("plain", wout, wi, mark))
    return wi


def _tr_box(boxtag, body, fr: _Frame):
    box = fr.net.new_node(BANG_BOX if boxtag == BANG else PAR_BOX)
    sub = _Frame(box.inner, fr, boxtag)
    wb = _as_premise(_tr(body, sub), sub)
    box.inner.root = wb.id
    leftovers = sorted(v for v, ws in sub.uses.items() if ws)
    if leftovers:
        raise TranslationError(
            f"variables {leftovers} cross a box boundary without a door marker"
        )
    aux = 0
    for entry in sub.door_order:
        if entry[0] == "group":
            name, mark = entry[1]
            wm = _merge(box.inner, sub.door_groups[entry[1]])
            outer = fr.net.new_wire(consumer=(box.id, f"aux{aux}"))
            fr.uses.setdefault(name, []).append(outer)
            box.doors.append(Door(outer.id, wm.id, mark))
        else:
            _, wout, wi, mark = entry
            fr.net.set_consumer(wout, (box.id, f"aux{aux}"))
            if wout.producer is not None:
                wout.cut = True
            box.doors.append(Door(wout.id, wi.id, mark))
        aux += 1
    if box.kind == BANG_BOX and len(box.doors) > 1:
        raise TranslationError("a !-box admits at most one door-marked input")
    return fr.net.new_wire(producer=(box.id, "out"))


def _as_premise(w, fr: _Frame):
    """Premise positions take whole subnets; a bare assumption wire gets
    an axiom node so it is one."""
    if w.producer is not None:
        return w
    ax = fr.net.new_node(AX)
    fr.net.set_consumer(w, (ax.id, "in"))
    return fr.net.new_wire(producer=(ax.id, "out"))


def _merge(net, ws):
    cur = ws[0]
    for w in ws[1:]:
        c = net.new_node(CONTR)
        net.set_producer(cur, (c.id, "out1"))
        net.set_producer(w, (c.id, "out2"))
        cur = net.new_wire(consumer=(c.id, "in"))
    return cur


def _bind(pat, fr: _Frame):
    net = fr.net
    if pat[0] == VAR:
        ws = fr.uses.pop(pat[1], [])
        if not ws:
            weak = net.new_node(WEAK)
            return net.new_wire(consumer=(weak.id, "in"))
        if len(ws) == 1:
            return ws[0]
        return _merge(net, ws)
    wl = _bind(pat[1], fr)
    wr = _bind(pat[2], fr)
    tl = net.new_node(TENSOR_L)
    net.set_producer(wl, (tl.id, "left"))
    net.set_producer(wr, (tl.id, "right"))
    return net.new_wire(consumer=(tl.id, "pair"))


# ---------------------------------------------------------------------------
# Readback


class _Fresh:
    def __init__(self):
        self.k = 0

    def __call__(self):
        self.k += 1
        return f"v{self.k}"


def net_to_term(net: Net):
    """Invert the translation on nets in its image (no forall nodes and
    no garbage components).  Raises ReadbackError outside the fragment."""
    if net.root is None:
        raise ReadbackError("net has no root")
    names = dict(net.free_names)
    doors: dict[int, tuple] = {}
    fresh = _Fresh()
    term = _read(net, net.wires[net.root], names, doors, fresh)
    return term


def _read(net: Net, w, names, doors, fresh):
    p = w.producer
    if p is None:
        if w.id in doors:
            mark, outer_net, outer_wire = doors[w.id]
            ctor = BangDoor if mark == "!" else ParDoor
            return ctor(_read(outer_net, outer_wire, names, doors, fresh))
        if w.id not in names:
            names[w.id] = fresh()
        return Var(names[w.id])
    node = net.nodes[p[0]]
    port = p[1]
    kind = node.kind
    if kind == AX:
        return _read(net, net.port_wire(node, "in"), names, doors, fresh)
    if kind == CONTR:
        return _read(net, net.port_wire(node, "in"), names, doors, fresh)
    if kind == LOLLI_R:
        if port == "bind":
            return Var(_name_of(w, names, fresh))
        pat = _read_pattern(net, net.port_wire(node, "bind"), names, fresh)
        body = _read(net, net.port_wire(node, "body"), names, doors, fresh)
        return Lam(pat, body)
    if kind == TENSOR_L:
        return Var(_name_of(w, names, fresh))
    if kind == LOLLI_L:
        f = _read(net, net.port_wire(node, "fun"), names, doors, fresh)
        a = _read(net, net.port_wire(node, "arg"), names, doors, fresh)
        return App(f, a)
    if kind == TENSOR_R:
        return Tensor(
            _read(net, net.port_wire(node, "left"), names, doors, fresh),
            _read(net, net.port_wire(node, "right"), names, doors, fresh),
        )
    if kind in (BANG_BOX, PAR_BOX):
        inner = node.inner
        for d in node.doors:
            if d.outer is None:
                raise ReadbackError("unplugged door")
            doors[d.inner] = (d.mark, net, net.wires[d.outer])
        body = _read(inner, inner.wires[inner.root], names, doors, fresh)
        return Bang(body) if kind == BANG_BOX else Par(body)
    raise ReadbackError(f"net outside the term fragment: {kind} node")


def _name_of(w, names, fresh):
    if w.id not in names:
        names[w.id] = fresh()
    return names[w.id]


def _read_pattern(net, w, names, fresh):
    c = w.consumer
    if c is not None:
        node = net.nodes[c[0]]
        if node.kind == TENSOR_L and c[1] == "pair":
            return PTensor(
                _read_pattern(net, net.port_wire(node, "left"), names, fresh),
                _read_pattern(net, net.port_wire(node, "right"), names, fresh),
            )
    return PVar(_name_of(w, names, fresh))


# ---------------------------------------------------------------------------
# Value-shape decoders (term level)


def strip_par_boxes(t):
    k = 0
    while t[0] == PAR:
        k += 1
        t = t[1]
    return t, k


def decode_numeral(t):
    """(value, par_prefix) when t is $^k of a tally integer, else None."""
    t, k = strip_par_boxes(t)
    if t[0] != LAM or t[1][0] != VAR:
        return None
    x = t[1][1]
    body = t[2]
    if body[0] != PAR:
        return None
    inner = body[1]
    if inner[0] != LAM or inner[1][0] != VAR:
        return None
    y = inner[1][1]
    if y == x:
        return None
    chain = inner[2]
    n = 0
    while True:
        if chain == (VAR, y):
            return n, k
        if chain[0] == APP and chain[1][0] == BANGD and chain[1][1] == (VAR, x):
            n += 1
            chain = chain[2]
            continue
        return None


def decode_tape(t):
    """(bits, par_prefix) when t is $^k of a tape value, else None."""
    t, k = strip_par_boxes(t)
    if t[0] != LAM or t[1][0] != VAR:
        return None
    zero_name = t[1][1]
    t = t[2]
    if t[0] != LAM or t[1][0] != VAR:
        return None
    one_name = t[1][1]
    if one_name == zero_name:
        return None
    body = t[2]
    if body[0] != PAR:
        return None
    inner = body[1]
    if inner[0] != LAM or inner[1][0] != VAR:
        return None
    x = inner[1][1]
    if x in (zero_name, one_name):
        return None
    chain = inner[2]
    bits = []
    while True:
        if chain == (VAR, x):
            return "".join(bits), k
        if chain[0] == APP and chain[1][0] == BANGD and chain[1][1][0] == VAR:
            head = chain[1][1][1]
            if head == zero_name:
                bits.append("0")
            elif head == one_name:
                bits.append("1")
            else:
                return None
            chain = chain[2]
            continue
        return None
