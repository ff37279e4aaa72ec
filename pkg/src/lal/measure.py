"""Complexity measures and the level-by-level normalization strategy.

Dimensions count, per level, the forall/contraction/box/arrow/tensor
nodes; their sum D drives the per-round budget 6*D^3 and the closed
form total bound.  The cut measure gamma at level l is the tuple

    ( c^W_(l-1), ..., c^1_(l-1), b_(l-1), n_l )

compared lexicographically; every counted strategy step must decrease
it strictly, and the driver asserts the exact per-step deltas in
instrumented mode.  A violated bound is an implementation bug and
raises BoundViolation with a net snapshot attached, never a warning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from lal import cutelim as ce
from lal.cutelim import GC_KINDS, LINEAR_KINDS, Redex, RedexKind, StepRecord
from lal.net import (
    AX,
    BANG_BOX,
    CONTR,
    DIM_KINDS,
    N_KINDS,
    Net,
    PAR_BOX,
    net_to_json,
    nets_at_level,
)


def depth(net: Net) -> int:
    return net.depth()


@dataclass(frozen=True)
class Mu:
    """Per-level dimensions and their refinements."""

    d: tuple            # d_l for l in 0..depth
    n: tuple            # arrow/tensor/forall counts
    b: tuple            # box counts
    c: tuple            # per-level dict weight -> contraction count

    @property
    def D(self) -> int:
        return sum(self.d)

    @property
    def depth(self) -> int:
        return len(self.d) - 1

    def W(self, level: int) -> int:
        if 0 <= level < len(self.c) and self.c[level]:
            return max(self.c[level])
        return 0


def contraction_weight(net: Net, node) -> int:
    """Number of same-level !-boxes this contraction can duplicate:
    follow the producer chain from its merged input downward."""
    w = 0
    wire = net.port_wire(node, "in")
    seen = set()
    while True:
        if wire.id in seen:
            return w
        seen.add(wire.id)
        p = wire.producer
        if p is None:
            return w
        nd = net.nodes[p[0]]
        if nd.kind == AX:
            wire = net.port_wire(nd, "in")
            continue
        if nd.kind == CONTR:
            wire = net.port_wire(nd, "in")
            continue
        if nd.kind == BANG_BOX and p[1] == "out":
            w += 1
            if nd.doors and nd.doors[0].outer is not None:
                wire = net.wires[nd.doors[0].outer]
                continue
            return w
        return w


def dims(net: Net) -> Mu:
    dd, nn, bb, cc = [], [], [], []
    for level in range(net.depth() + 1):
        d = n = b = 0
        c: dict[int, int] = {}
        for sub in nets_at_level(net, level):
            for node in sub.nodes.values():
                k = node.kind
                if k in DIM_KINDS:
                    d += 1
                if k in N_KINDS:
                    n += 1
                elif k in (BANG_BOX, PAR_BOX):
                    b += 1
                elif k == CONTR:
                    w = contraction_weight(sub, node)
                    c[w] = c.get(w, 0) + 1
        dd.append(d)
        nn.append(n)
        bb.append(b)
        cc.append(c)
    return Mu(tuple(dd), tuple(nn), tuple(bb), tuple(cc))


@dataclass(frozen=True)
class Gamma:
    """The cut measure at one level, widest contraction weight first."""

    level: int
    components: tuple

    @classmethod
    def of(cls, mu: Mu, level: int) -> "Gamma":
        lm1 = level - 1
        if 0 <= lm1 <= mu.depth:
            cmap = mu.c[lm1]
            width = max(cmap) if cmap else 0
            cs = tuple(cmap.get(w, 0) for w in range(width, 0, -1))
            b = mu.b[lm1]
        else:
            cs = ()
            b = 0
        n = mu.n[level] if 0 <= level <= mu.depth else 0
        return cls(level, cs + (b, n))

    def key(self, width: int) -> tuple:
        cs = self.components[:-2]
        pad = (0,) * (width - len(cs))
        return pad + cs + self.components[-2:]

    def __lt__(self, other: "Gamma") -> bool:
        width = max(len(self.components), len(other.components)) - 2
        return self.key(width) < other.key(width)

    def is_zero(self) -> bool:
        return not any(self.components)


def gamma(net: Net, level: int) -> Gamma:
    return Gamma.of(dims(net), level)


def measure_for_levels(net: Net, level: int) -> Mu:
    return dims(net)


def find_any_redex(net: Net, kinds, max_level=None):
    top = net.depth() if max_level is None else max_level
    for level in range(top + 1):
        rs = ce.find_redexes(net, level, kinds)
        if rs:
            return rs[0]
    return None


def is_l_normal(net: Net, level: int) -> bool:
    """No linear redexes at levels 0..l, no shift/duplicate at 0..l-1."""
    if level < 0:
        return True
    for i in range(level + 1):
        if ce.find_redexes(net, i, LINEAR_KINDS):
            return False
    for i in range(level):
        if ce.find_redexes(net, i, {RedexKind.Shift, RedexKind.Duplicate}):
            return False
    return True


def is_fully_normal(net: Net) -> bool:
    for level in range(net.depth() + 1):
        if ce.find_redexes(net, level, ce.ALL_KINDS - GC_KINDS):
            return False
    return True


@dataclass
class RoundReport:
    level: int
    steps_p: int = 0
    steps_s: int = 0
    steps_l: int = 0
    steps_gc: int = 0
    D_start: int = 0
    D_end: int = 0
    bound_6D3: int = 0
    within_bound: bool = True
    gamma_trace: list = field(default_factory=list)

    @property
    def counted_steps(self) -> int:
        return self.steps_p + self.steps_s + self.steps_l


class BoundViolation(AssertionError):
    """A proved bound failed: the engine is wrong.  Carries diagnostics."""

    def __init__(self, message, net=None, report=None):
        super().__init__(message)
        self.snapshot = net_to_json(net) if net is not None else None
        self.report = report


class MeasureLawViolation(AssertionError):
    pass


class StrategyError(RuntimeError):
    pass


def closed_form_bound(D: int, depth: int) -> int:
    """6^((3^depth - 1)/2) * sum_{k=0}^{3^depth} D^k, exactly."""
    if D < 0 or depth < 0:
        raise ValueError("bound arguments are nonnegative")
    e = 3 ** depth
    factor = 6 ** ((e - 1) // 2)
    geom = sum(D ** k for k in range(e + 1))
    return factor * geom


def round_budget(D: int) -> int:
    return 6 * D ** 3


def sigma_round(net: Net, level: int, instrument: bool = False, trace: list | None = None) -> RoundReport:
    """One strategy round: all duplications at level-1, then shifts at
    level-1 and linear steps at level interleaved, garbage collection to
    fixpoint after each phase.  Leaves the net level-normal."""
    if not is_l_normal(net, level - 1):
        raise StrategyError(f"round {level} needs a {level - 1}-normal net")
    mu = dims(net)
    rep = RoundReport(level=level, D_start=mu.D, bound_6D3=round_budget(mu.D))
    ordinal = 0

    def on_gc(r, pre, post):
        nonlocal ordinal
        ordinal += 1
        rep.steps_gc += 1
        if trace is not None:
            trace.append(StepRecord(ordinal, r.kind, r.level, pre, post))

    def counted(r: Redex, apply):
        nonlocal ordinal
        pre_nodes = net.alloc.node_count
        g0 = Gamma.of(dims(net), level) if instrument else None
        mu0 = dims(net) if instrument else None
        rw = r.net.wires[r.wire]
        red_weight = None
        if instrument and r.kind == RedexKind.Duplicate:
            red_weight = contraction_weight(r.net, r.net.nodes[rw.consumer[0]])
        gc_inline = apply(r)
        ordinal += 1
        post_nodes = net.alloc.node_count
        if trace is not None:
            trace.append(StepRecord(ordinal, r.kind, r.level, pre_nodes, post_nodes))
        rep.steps_gc += gc_inline
        if instrument:
            mu1 = dims(net)
            g1 = Gamma.of(mu1, level)
            rep.gamma_trace.append(g1)
            if not (g1 < g0):
                raise MeasureLawViolation(f"gamma did not decrease: {g0} -> {g1} on {r.kind}")
            _check_deltas(r, red_weight, mu0, mu1, level)
        if rep.counted_steps > rep.bound_6D3:
            raise BoundViolation(
                f"round {level} exceeded 6*D^3 = {rep.bound_6D3} counted steps",
                net=net,
                report=rep,
            )

    if instrument:
        rep.gamma_trace.append(Gamma.of(mu, level))

    # phase: all duplications at level-1
    while level >= 1:
        rs = ce.find_redexes(net, level - 1, {RedexKind.Duplicate})
        if not rs:
            break
        rep.steps_p += 1
        counted(rs[0], ce.apply_duplicate)
    rep.steps_gc += ce.gc_fixpoint(net, on_gc)

    # phase: shifts at level-1 and linear steps at level, any order
    while True:
        rs = []
        if level >= 1:
            rs.extend(ce.find_redexes(net, level - 1, {RedexKind.Shift}))
        rs.extend(ce.find_redexes(net, level, LINEAR_KINDS))
        if not rs:
            break
        rs.sort(key=lambda r: r.wire)
        r = rs[0]
        if r.kind == RedexKind.Shift:
            rep.steps_s += 1
            counted(r, ce.apply_shift)
        else:
            rep.steps_l += 1
            counted(r, ce.apply_linear)
    rep.steps_gc += ce.gc_fixpoint(net, on_gc)

    rep.D_end = dims(net).D
    rep.within_bound = rep.counted_steps <= rep.bound_6D3
    if not is_l_normal(net, level):
        raise StrategyError(f"round {level} did not reach {level}-normality")
    return rep


def _check_deltas(r: Redex, red_weight, mu0: Mu, mu1: Mu, level: int):
    lm1 = level - 1

    def n_at(mu, l):
        return mu.n[l] if 0 <= l <= mu.depth else 0

    def b_at(mu, l):
        return mu.b[l] if 0 <= l <= mu.depth else 0

    def c_at(mu, l, w):
        if 0 <= l <= mu.depth:
            return mu.c[l].get(w, 0)
        return 0

    if r.kind in LINEAR_KINDS:
        # an annihilation deletes the introduction pair: two counted nodes
        if n_at(mu0, level) - n_at(mu1, level) != 2:
            raise MeasureLawViolation(
                f"linear step changed n_l by {n_at(mu0, level) - n_at(mu1, level)}, expected 2"
            )
    elif r.kind == RedexKind.Shift:
        if b_at(mu0, lm1) - b_at(mu1, lm1) != 1:
            raise MeasureLawViolation("shift must remove exactly one box at level-1")
        if n_at(mu0, level) != n_at(mu1, level):
            raise MeasureLawViolation("shift must not change n at the round level")
    elif r.kind == RedexKind.Duplicate:
        if b_at(mu1, lm1) - b_at(mu0, lm1) != 1:
            raise MeasureLawViolation("duplication must add exactly one box at level-1")
        if n_at(mu1, level) > 2 * n_at(mu0, level):
            raise MeasureLawViolation("duplication more than doubled n at the round level")
        if c_at(mu0, lm1, red_weight) - c_at(mu1, lm1, red_weight) < 1:
            raise MeasureLawViolation("duplication must consume its contraction's weight class")
        if red_weight >= 1 and c_at(mu1, lm1, red_weight - 1) > c_at(mu0, lm1, red_weight - 1) + 1:
            raise MeasureLawViolation("duplication created more than one lighter contraction")


def normalize_sigma(net: Net, instrument: bool = False, trace: list | None = None):
    """Run rounds 0..depth (recomputing depth after garbage collection);
    the result is normal and the total counted work respects the closed
    form bound for the starting dimensions."""
    mu0 = dims(net)
    d0, depth0 = mu0.D, net.depth()
    reports: list[RoundReport] = []
    level = 0
    while level <= net.depth():
        reports.append(sigma_round(net, level, instrument=instrument, trace=trace))
        level += 1
    if not is_fully_normal(net):
        raise StrategyError("strategy finished without reaching normal form")
    total = sum(r.counted_steps for r in reports)
    if total > closed_form_bound(d0, depth0):
        raise BoundViolation(
            f"total counted steps {total} exceed the closed-form bound for D={d0}, depth={depth0}",
            net=net,
        )
    return net, reports
