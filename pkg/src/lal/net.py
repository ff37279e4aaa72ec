"""The proof-net graph model: typed links, nested boxes, validation.

A net is a set of nodes and wires at one nesting level; box nodes own
a whole inner net, so levels are containment depth.  Wires are
directed from a producer endpoint to a consumer endpoint, either of
which may be missing (a missing producer is an input of the level, the
one missing consumer is the root).  Cuts are flagged on wires: a cut
plugs the conclusion of one subnet into an assumption position of
another, and only cut wires can form redexes.

Ids are drawn from one allocator shared by every net nested under the
same top level, so boxes can be merged or cloned without renumbering.
"""

from __future__ import annotations

from dataclasses import dataclass

from lal.formula import alpha_canon_formula, parse_formula, print_formula

AX = "ax"
WEAK = "weak"
UNIT = "unit"
LOLLI_R = "lolliR"
LOLLI_L = "lolliL"
TENSOR_R = "tensorR"
TENSOR_L = "tensorL"
FORALL_R = "forallR"
FORALL_L = "forallL"
CONTR = "contr"
BANG_BOX = "bangB"
PAR_BOX = "parB"

BOX_KINDS = (BANG_BOX, PAR_BOX)

# fixed ports; boxes also consume at aux0, aux1, ... (one per door)
PRODUCER_PORTS = {
    AX: ("out",),
    WEAK: (),
    UNIT: ("out",),
    LOLLI_R: ("bind", "out"),
    LOLLI_L: ("res",),
    TENSOR_R: ("out",),
    TENSOR_L: ("left", "right"),
    FORALL_R: ("out",),
    FORALL_L: ("out",),
    CONTR: ("out1", "out2"),
    BANG_BOX: ("out",),
    PAR_BOX: ("out",),
}
CONSUMER_PORTS = {
    AX: ("in",),
    WEAK: ("in",),
    UNIT: (),
    LOLLI_R: ("body",),
    LOLLI_L: ("fun", "arg"),
    TENSOR_R: ("left", "right"),
    TENSOR_L: ("pair",),
    FORALL_R: ("body",),
    FORALL_L: ("in",),
    CONTR: ("in",),
    BANG_BOX: (),
    PAR_BOX: (),
}

# the port producing the node's conclusion (garbage collection erases a
# node when a weakening consumes this wire)
CONCLUSION_PORT = {
    AX: "out",
    UNIT: "out",
    LOLLI_R: "out",
    LOLLI_L: "res",
    TENSOR_R: "out",
    FORALL_R: "out",
    BANG_BOX: "out",
    PAR_BOX: "out",
}

# counted by the level dimension d_l
DIM_KINDS = (FORALL_R, FORALL_L, CONTR, BANG_BOX, PAR_BOX, LOLLI_R, LOLLI_L, TENSOR_R, TENSOR_L)
# counted by the refined dimension n_l
N_KINDS = (FORALL_R, FORALL_L, LOLLI_R, LOLLI_L, TENSOR_R, TENSOR_L)


class Alloc:
    """Shared id source plus a live node counter for O(1) sizes."""

    __slots__ = ("next_id", "node_count")

    def __init__(self):
        self.next_id = 0
        self.node_count = 0

    def take(self) -> int:
        i = self.next_id
        self.next_id += 1
        return i


class Wire:
    __slots__ = ("id", "producer", "consumer", "label", "cut")

    def __init__(self, id, producer=None, consumer=None, label=None, cut=False):
        self.id = id
        self.producer = producer
        self.consumer = consumer
        self.label = label
        self.cut = cut

    def __repr__(self):
        c = " cut" if self.cut else ""
        return f"<w{self.id} {self.producer}->{self.consumer}{c}>"


class Door:
    __slots__ = ("outer", "inner", "mark")

    def __init__(self, outer, inner, mark):
        self.outer = outer
        self.inner = inner
        self.mark = mark  # '!' or '$'

    def __repr__(self):
        return f"Door({self.outer}->{self.inner} {self.mark})"


class Node:
    __slots__ = ("id", "kind", "ports", "var", "dashed", "inst", "inner", "doors")

    def __init__(self, id, kind):
        self.id = id
        self.kind = kind
        self.ports: dict[str, int] = {}
        self.var = None      # forallR / forallL bound variable name
        self.dashed = None   # forallR: set of wire ids to relabel
        self.inst = None     # forallL: instantiating formula
        self.inner = None    # boxes: the inner Net
        self.doors = None    # boxes: list[Door]

    def __repr__(self):
        return f"<{self.kind}#{self.id}>"


class Net:
    __slots__ = ("alloc", "nodes", "wires", "root", "free_names", "owner_box")

    def __init__(self, alloc=None):
        self.alloc = alloc if alloc is not None else Alloc()
        self.nodes: dict[int, Node] = {}
        self.wires: dict[int, Wire] = {}
        self.root: int | None = None
        self.free_names: dict[int, str] = {}  # input wire id -> surface name
        self.owner_box: Node | None = None    # the box node containing this net

    # -- construction helpers ------------------------------------------------

    def new_node(self, kind) -> Node:
        n = Node(self.alloc.take(), kind)
        if kind in BOX_KINDS:
            n.inner = Net(self.alloc)
            n.inner.owner_box = n
            n.doors = []
        self.nodes[n.id] = n
        self.alloc.node_count += 1
        return n

    def new_wire(self, producer=None, consumer=None, label=None, cut=False) -> Wire:
        w = Wire(self.alloc.take(), producer, consumer, label, cut)
        self.wires[w.id] = w
        if producer is not None:
            self.nodes[producer[0]].ports[producer[1]] = w.id
        if consumer is not None:
            self.nodes[consumer[0]].ports[consumer[1]] = w.id
        return w

    def set_producer(self, w: Wire, endpoint):
        w.producer = endpoint
        if endpoint is not None:
            self.nodes[endpoint[0]].ports[endpoint[1]] = w.id

    def set_consumer(self, w: Wire, endpoint):
        w.consumer = endpoint
        if endpoint is not None:
            node = self.nodes[endpoint[0]]
            node.ports[endpoint[1]] = w.id
            if node.kind in BOX_KINDS and endpoint[1].startswith("aux"):
                j = int(endpoint[1][3:])
                if j < len(node.doors):
                    node.doors[j].outer = w.id

    def drop_wire(self, w: Wire):
        del self.wires[w.id]

    def drop_node(self, n: Node):
        # caller has already detached/moved all wires
        if n.kind in BOX_KINDS and n.inner is not None:
            n.inner.drop_all()
        del self.nodes[n.id]
        self.alloc.node_count -= 1

    def drop_all(self):
        for nid in list(self.nodes):
            self.drop_node(self.nodes[nid])
        self.wires.clear()

    def port_wire(self, node: Node, port: str) -> Wire:
        return self.wires[node.ports[port]]

    def inputs(self) -> list[int]:
        return sorted(w.id for w in self.wires.values() if w.producer is None)

    # -- structure queries ----------------------------------------------------

    def node_count(self) -> int:
        n = len(self.nodes)
        for nd in self.nodes.values():
            if nd.kind in BOX_KINDS:
                n += nd.inner.node_count()
        return n

    def wire_count(self) -> int:
        n = len(self.wires)
        for nd in self.nodes.values():
            if nd.kind in BOX_KINDS:
                n += nd.inner.wire_count()
        return n

    def depth(self) -> int:
        d = 0
        for nd in self.nodes.values():
            if nd.kind in BOX_KINDS:
                d = max(d, 1 + nd.inner.depth())
        return d


def nets_at_level(net: Net, level: int):
    """The sub-nets whose direct contents sit at the given level."""
    if level == 0:
        yield net
        return
    for nd in net.nodes.values():
        if nd.kind in BOX_KINDS:
            yield from nets_at_level(nd.inner, level - 1)


def nodes_at_level(net: Net, level: int):
    """Node ids enclosed in exactly `level` boxes, ascending."""
    if level < 0 or level > net.depth():
        raise ValueError(f"level {level} out of range")
    out = []
    for sub in nets_at_level(net, level):
        out.extend(sub.nodes.keys())
    return sorted(out)


def consumer_ports(node: Node):
    if node.kind in BOX_KINDS:
        return tuple(f"aux{i}" for i in range(len(node.doors)))
    return CONSUMER_PORTS[node.kind]


def producer_ports(node: Node):
    return PRODUCER_PORTS[node.kind]


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    detail: str

    def __str__(self):
        return f"{self.code} at {self.where}: {self.detail}"


def validate(net: Net) -> list:
    """Structural invariants; an empty list means the net is well formed."""
    out = []
    _validate_level(net, "", out, top=True)
    return out


def _validate_level(net: Net, path: str, out: list, top: bool):
    loc = path or "top"
    root_like = []
    for w in net.wires.values():
        if w.consumer is None:
            root_like.append(w.id)
        for side, ep, table in (
            ("producer", w.producer, PRODUCER_PORTS),
            ("consumer", w.consumer, CONSUMER_PORTS),
        ):
            if ep is None:
                continue
            nid, port = ep
            node = net.nodes.get(nid)
            if node is None:
                out.append(Violation("DanglingEndpoint", f"{loc}/w{w.id}", f"{side} node {nid} missing"))
                continue
            ok_ports = table[node.kind] if node.kind not in BOX_KINDS or side == "producer" else consumer_ports(node)
            if port not in ok_ports:
                out.append(Violation("BadPort", f"{loc}/w{w.id}", f"{side} port {node.kind}.{port}"))
            elif node.ports.get(port) != w.id:
                out.append(Violation("PortMismatch", f"{loc}/w{w.id}", f"{side} {node.kind}#{nid}.{port}"))
    if net.root is not None:
        if net.root not in net.wires:
            out.append(Violation("BadRoot", loc, f"root wire {net.root} missing"))
        elif net.wires[net.root].consumer is not None:
            out.append(Violation("BadRoot", loc, "root wire has a consumer"))
    extra_roots = [i for i in root_like if i != net.root]
    if extra_roots:
        out.append(Violation("DanglingWire", loc, f"unconsumed non-root wires {extra_roots}"))

    for node in net.nodes.values():
        where = f"{loc}/{node.kind}#{node.id}"
        for port in producer_ports(node):
            wid = node.ports.get(port)
            if port == "out" and wid is None:
                continue  # an unused conclusion is allowed (fresh clone)
            if wid is None:
                out.append(Violation("MissingPort", where, f"producer {port} unwired"))
            elif net.wires.get(wid) is None or net.wires[wid].producer != (node.id, port):
                out.append(Violation("PortMismatch", where, f"producer {port}"))
        for port in consumer_ports(node):
            wid = node.ports.get(port)
            if wid is None:
                if node.kind in BOX_KINDS:
                    continue  # unplugged door (fresh clone)
                out.append(Violation("MissingPort", where, f"consumer {port} unwired"))
            elif net.wires.get(wid) is None or net.wires[wid].consumer != (node.id, port):
                out.append(Violation("PortMismatch", where, f"consumer {port}"))

        if node.kind in BOX_KINDS:
            if node.kind == BANG_BOX and len(node.doors) > 1:
                out.append(Violation("BangArityViolation", where, f"{len(node.doors)} inputs"))
            inner_inputs = set(node.inner.inputs())
            door_inners = [d.inner for d in node.doors]
            if len(set(door_inners)) != len(door_inners):
                out.append(Violation("DoorReuse", where, "two doors share an inner wire"))
            if set(door_inners) != inner_inputs:
                out.append(
                    Violation("DoorMismatch", where, f"doors {sorted(door_inners)} vs inner inputs {sorted(inner_inputs)}")
                )
            for i, d in enumerate(node.doors):
                if d.mark not in ("!", "$"):
                    out.append(Violation("BadMark", where, f"door {i} mark {d.mark!r}"))
                if node.kind == BANG_BOX and d.mark != "!":
                    out.append(Violation("BadMark", where, f"$-marked door on a !-box"))
                if d.outer is not None:
                    ow = net.wires.get(d.outer)
                    if ow is None or ow.consumer != (node.id, f"aux{i}"):
                        out.append(Violation("DoorMismatch", where, f"door {i} outer wire"))
                    elif ow.cut and ow.producer is not None:
                        pk = net.nodes[ow.producer[0]].kind
                        if d.mark == "!" and pk == PAR_BOX:
                            out.append(Violation("MarkIncompatible", where, "$-box conclusion on a !-marked door"))
                        if d.mark == "$" and pk == BANG_BOX:
                            out.append(Violation("MarkIncompatible", where, "!-box conclusion on a $-marked door"))
            _validate_level(node.inner, f"{where}/", out, top=False)

        if node.kind == FORALL_R:
            dashed = node.dashed or set()
            wire_ids = _all_wire_ids(net)
            for wid in dashed:
                if wid not in wire_ids:
                    out.append(Violation("DashedTargetMissing", where, f"wire {wid}"))
                elif wid in net.wires and net.wires[wid].producer is None:
                    out.append(Violation("DashedTargetsInput", where, f"wire {wid} is an input"))


def _all_wire_ids(net: Net) -> set:
    out = set(net.wires)
    for nd in net.nodes.values():
        if nd.kind in BOX_KINDS:
            out |= _all_wire_ids(nd.inner)
    return out


# ---------------------------------------------------------------------------
# Cloning


def clone_box(net: Net, box_id: int) -> int:
    """Deep copy of a !-box with fresh ids; the copy's conclusion and door
    outer wires are left unwired for the caller to plug in."""
    box = net.nodes[box_id]
    if box.kind != BANG_BOX:
        raise ValueError(f"node {box_id} is not a !-box")
    copy = net.new_node(BANG_BOX)
    wire_map = _clone_into(box.inner, copy.inner)
    copy.inner.root = wire_map[box.inner.root]
    for d in box.doors:
        copy.doors.append(Door(None, wire_map[d.inner], d.mark))
    return copy.id


def _clone_into(src: Net, dst: Net) -> dict:
    """Copy nodes/wires of src into the empty net dst; returns wire id map."""
    node_map = {}
    wire_map = {}
    for nid, node in sorted(src.nodes.items()):
        c = Node(dst.alloc.take(), node.kind)
        dst.nodes[c.id] = c
        dst.alloc.node_count += 1
        node_map[nid] = c
        c.var = node.var
        c.inst = node.inst
        if node.kind in BOX_KINDS:
            c.inner = Net(dst.alloc)
            c.inner.owner_box = c
            c.doors = []
            inner_map = _clone_into(node.inner, c.inner)
            if node.inner.root is not None:
                c.inner.root = inner_map[node.inner.root]
            for d in node.doors:
                c.doors.append(Door(None, inner_map[d.inner], d.mark))
    for wid, w in sorted(src.wires.items()):
        c = Wire(dst.alloc.take(), None, None, w.label, w.cut)
        dst.wires[c.id] = c
        wire_map[wid] = c.id
    for nid, node in sorted(src.nodes.items()):
        c = node_map[nid]
        for port, wid in node.ports.items():
            if wid in wire_map:
                cw = dst.wires[wire_map[wid]]
                src_w = src.wires[wid]
                if src_w.producer == (nid, port):
                    cw.producer = (c.id, port)
                if src_w.consumer == (nid, port):
                    cw.consumer = (c.id, port)
                c.ports[port] = cw.id
        if node.kind == FORALL_R and node.dashed:
            c.dashed = {wire_map.get(x, x) for x in node.dashed}
        if node.kind in BOX_KINDS:
            for i, d in enumerate(node.doors):
                if d.outer is not None and d.outer in wire_map:
                    c.doors[i].outer = wire_map[d.outer]
    return wire_map


# ---------------------------------------------------------------------------
# Canonical form


def canonical_form(net: Net) -> bytes:
    """Equal byte strings iff the nets are isomorphic as labeled nested
    graphs, children ordered by port index; id-permutation invariant."""
    parts = []
    visited_nodes: set[int] = set()
    if net.root is not None and net.root in net.wires:
        parts.append(_encode_component(net, net.wires[net.root], visited_nodes))
    rest = []
    remaining = [n for n in net.nodes.values() if n.id not in visited_nodes]
    while remaining:
        comp_encodings = []
        comp_sets = []
        for start in remaining:
            seen: set[int] = set()
            enc = _encode_component(net, None, seen, start=start)
            comp_encodings.append(enc)
            comp_sets.append(seen)
        best = min(range(len(comp_encodings)), key=lambda i: comp_encodings[i])
        rest.append(comp_encodings[best])
        visited_nodes |= comp_sets[best]
        remaining = [n for n in net.nodes.values() if n.id not in visited_nodes]
    parts.extend(sorted(rest))
    return b"(" + b";".join(parts) + b")"


def _encode_component(net: Net, root_wire, seen: set, start=None) -> bytes:
    order: dict[int, int] = {}
    out = []
    queue = []
    if root_wire is not None:
        queue.append(("w", root_wire.id))
    else:
        queue.append(("n", start.id))
    wire_order: dict[int, int] = {}

    def wref(wid):
        if wid not in wire_order:
            wire_order[wid] = len(wire_order)
            queue.append(("w", wid))
        return wire_order[wid]

    def nref(nid):
        if nid not in order:
            order[nid] = len(order)
            queue.append(("n", nid))
        return order[nid]

    i = 0
    while i < len(queue):
        kind, xid = queue[i]
        i += 1
        if kind == "w":
            # the cut flag is elimination bookkeeping, not graph structure:
            # a post-beta cut and a fresh tree wire in the same position are
            # the same net
            w = net.wires[xid]
            ends = []
            for ep in (w.producer, w.consumer):
                ends.append(b"-" if ep is None else b"%d.%s" % (nref(ep[0]), ep[1].encode()))
            lab = b"" if w.label is None else repr(alpha_canon_formula(w.label)).encode()
            out.append(b"w(%s,%s,%s)" % (ends[0], ends[1], lab))
        else:
            node = net.nodes[xid]
            seen.add(node.id)
            fields = [node.kind.encode()]
            for port in producer_ports(node) + consumer_ports(node):
                wid = node.ports.get(port)
                fields.append(b"-" if wid is None else b"%d" % wref(wid))
            if node.kind == FORALL_R and node.dashed:
                fields.append(b"D" + b",".join(b"%d" % wref(x) for x in sorted(node.dashed) if x in net.wires))
            if node.inst is not None:
                fields.append(repr(alpha_canon_formula(node.inst)).encode())
            if node.kind in BOX_KINDS:
                fields.append(b"[" + b"|".join(d.mark.encode() for d in node.doors) + b"]")
                fields.append(canonical_form(node.inner))
            out.append(b"n(" + b",".join(fields) + b")")
    return b"".join(out)


# ---------------------------------------------------------------------------
# JSON round-trip


def net_to_json(net: Net) -> dict:
    nodes = []
    for nid, node in sorted(net.nodes.items()):
        item = {"id": nid, "kind": node.kind, "ports": dict(sorted(node.ports.items()))}
        if node.var is not None:
            item["var"] = node.var
        if node.dashed:
            item["dashed"] = sorted(node.dashed)
        if node.inst is not None:
            item["inst"] = print_formula(node.inst)
        if node.kind in BOX_KINDS:
            item["doors"] = [[d.outer, d.inner, d.mark] for d in node.doors]
            item["inner"] = net_to_json(node.inner)
        nodes.append(item)
    wires = []
    for wid, w in sorted(net.wires.items()):
        item = {"id": wid, "producer": list(w.producer) if w.producer else None,
                "consumer": list(w.consumer) if w.consumer else None, "cut": w.cut}
        if w.label is not None:
            item["label"] = print_formula(w.label)
        wires.append(item)
    return {"nodes": nodes, "wires": wires, "root": net.root}


def net_from_json(data: dict, alloc: Alloc | None = None) -> Net:
    net = Net(alloc)
    _fill_from_json(net, data)
    net.alloc.next_id = max(_max_id(data), net.alloc.next_id) + 1
    return net


def _max_id(data) -> int:
    m = 0
    for item in data["nodes"]:
        m = max(m, item["id"])
        if "inner" in item:
            m = max(m, _max_id(item["inner"]))
    for item in data["wires"]:
        m = max(m, item["id"])
    return m


def _fill_from_json(net: Net, data: dict):
    for item in data["nodes"]:
        node = Node(item["id"], item["kind"])
        node.ports = {k: v for k, v in item.get("ports", {}).items()}
        node.var = item.get("var")
        if "dashed" in item:
            node.dashed = set(item["dashed"])
        if "inst" in item:
            node.inst = parse_formula(item["inst"])
        if node.kind in BOX_KINDS:
            node.doors = [Door(*d) for d in item.get("doors", [])]
            node.inner = Net(net.alloc)
            node.inner.owner_box = node
            _fill_from_json(node.inner, item["inner"])
        net.nodes[node.id] = node
        net.alloc.node_count += 1
    for item in data["wires"]:
        w = Wire(
            item["id"],
            tuple(item["producer"]) if item.get("producer") else None,
            tuple(item["consumer"]) if item.get("consumer") else None,
            parse_formula(item["label"]) if item.get("label") else None,
            item.get("cut", False),
        )
        net.wires[w.id] = w
    net.root = data.get("root")
