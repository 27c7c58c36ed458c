"""Correct-by-construction net assembly.

Each function mirrors one sequent-style building rule and type-checks its
arguments eagerly, so everything built here is sequentializable and passes
the switching-acyclicity criterion.  The seeded random generator drives the
property-test corpus.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .formula import (
    Atom,
    Bottom,
    Formula,
    ONE,
    OfCourse,
    One,
    Par,
    Paragraph,
    Tensor,
    WhyNot,
    dual,
)
from .net import Box, Label, Link, Net


class RuleError(ValueError):
    """A building rule was applied to unsuitable conclusions."""


def _counter_start(net: Net) -> int:
    best = 0
    for name in list(net.edges) + list(net.links):
        head = name.rstrip("0123456789")
        if head in ("e", "l") and name != head:
            best = max(best, int(name[len(head):]) + 1)
    return best


class _Fresh:
    def __init__(self, *nets: Net):
        self.n = max((_counter_start(net) for net in nets), default=0)
        self.used: set[str] = set()
        for net in nets:
            self.used |= set(net.edges) | set(net.links)

    def edge(self) -> str:
        return self._next("e")

    def link(self) -> str:
        return self._next("l")

    def _next(self, prefix: str) -> str:
        while True:
            name = f"{prefix}{self.n}"
            self.n += 1
            if name not in self.used:
                self.used.add(name)
                return name


def daimon() -> Net:
    return Net({}, {}, (), ())


def ax(a: Formula) -> Net:
    """Axiom with conclusions dual(a), a."""
    return Net(
        {"e0": Label(dual(a)), "e1": Label(a)},
        {"l0": Link("ax", (), ("e0", "e1"))},
        (),
        ("e0", "e1"),
    )


def one_rule() -> Net:
    return Net({"e0": Label(ONE)}, {"l0": Link("one", (), ("e0",))}, (), ("e0",))


def _relabel(net: Net, fresh: _Fresh) -> tuple[Net, dict[str, str]]:
    emap = {e: fresh.edge() for e in net.edges}
    lmap = {l: fresh.link() for l in net.links}

    def rebox(box: Box) -> Box:
        return Box(
            lmap[box.principal],
            tuple(lmap[a] for a in box.auxiliaries),
            frozenset(lmap[c] for c in box.contents),
            tuple(rebox(ch) for ch in box.children),
        )

    renamed = Net(
        {emap[e]: lab for e, lab in net.edges.items()},
        {
            lmap[l]: Link(lk.kind, tuple(emap[e] for e in lk.premises), tuple(emap[e] for e in lk.conclusions))
            for l, lk in net.links.items()
        },
        tuple(rebox(b) for b in net.boxes),
        tuple(emap[e] for e in net.conclusions),
    )
    return renamed, emap


def mix(a: Net, b: Net) -> Net:
    """Juxtaposition; conclusions of a then b."""
    if set(a.edges) & set(b.edges) or set(a.links) & set(b.links):
        b, _ = _relabel(b, _Fresh(a, b))
    return Net(
        {**a.edges, **b.edges},
        {**a.links, **b.links},
        a.boxes + b.boxes,
        a.conclusions + b.conclusions,
    )


def _conclusion(net: Net, i: int) -> str:
    try:
        return net.conclusions[i]
    except IndexError:
        raise RuleError(f"conclusion index {i} out of range (net has {len(net.conclusions)})")


def cut_rule(a: Net, i: int, b: Net, j: int) -> Net:
    ea, eb = _conclusion(a, i), _conclusion(b, j)
    m = mix(a, b)
    # mix may have renamed b's edges; recompute positions instead of ids
    ea = m.conclusions[i]
    eb = m.conclusions[len(a.conclusions) + j]
    la, lb = m.edges[ea], m.edges[eb]
    if la.flat or lb.flat:
        raise RuleError("cut premises cannot be flat-labelled")
    if dual(la.formula) != lb.formula:
        raise RuleError(f"cut premises are not dual: {la}, {lb}")
    fresh = _Fresh(m)
    lid = fresh.link()
    links = dict(m.links)
    links[lid] = Link("cut", (ea, eb), ())
    conclusions = tuple(e for e in m.conclusions if e not in (ea, eb))
    return Net(m.edges, links, m.boxes, conclusions)


def tensor_rule(a: Net, i: int, b: Net, j: int) -> Net:
    _conclusion(a, i), _conclusion(b, j)
    m = mix(a, b)
    ea = m.conclusions[i]
    eb = m.conclusions[len(a.conclusions) + j]
    la, lb = m.edges[ea], m.edges[eb]
    if la.flat or lb.flat:
        raise RuleError("tensor premises cannot be flat-labelled")
    fresh = _Fresh(m)
    lid, eid = fresh.link(), fresh.edge()
    edges = dict(m.edges)
    edges[eid] = Label(Tensor(la.formula, lb.formula))
    links = dict(m.links)
    links[lid] = Link("tensor", (ea, eb), (eid,))
    conclusions = tuple(e for e in m.conclusions if e not in (ea, eb)) + (eid,)
    return Net(edges, links, m.boxes, conclusions)


def par_rule(a: Net, i: int, j: int) -> Net:
    """Join two distinct conclusions of one net: i becomes the left premise,
    j the right one.  The new conclusion takes the earlier position."""
    if i == j:
        raise RuleError("par needs two distinct conclusions")
    ei, ej = _conclusion(a, i), _conclusion(a, j)
    li, lj = a.edges[ei], a.edges[ej]
    if li.flat or lj.flat:
        raise RuleError("par premises cannot be flat-labelled")
    fresh = _Fresh(a)
    lid, eid = fresh.link(), fresh.edge()
    edges = dict(a.edges)
    edges[eid] = Label(Par(li.formula, lj.formula))
    links = dict(a.links)
    links[lid] = Link("par", (ei, ej), (eid,))
    first = a.conclusions[min(i, j)]
    conclusions = tuple(
        eid if e == first else e for e in a.conclusions if e == first or e not in (ei, ej)
    )
    return Net(edges, links, a.boxes, conclusions)


def bottom_rule(a: Net) -> Net:
    fresh = _Fresh(a)
    lid, eid = fresh.link(), fresh.edge()
    edges = dict(a.edges)
    edges[eid] = Label(Bottom())
    links = dict(a.links)
    links[lid] = Link("bot", (), (eid,))
    return Net(edges, links, a.boxes, a.conclusions + (eid,))


def flat_rule(a: Net, i: int) -> Net:
    ei = _conclusion(a, i)
    li = a.edges[ei]
    if li.flat:
        raise RuleError("conclusion is already flat-labelled")
    fresh = _Fresh(a)
    lid, eid = fresh.link(), fresh.edge()
    edges = dict(a.edges)
    edges[eid] = Label(li.formula, flat=True)
    links = dict(a.links)
    links[lid] = Link("flat", (ei,), (eid,))
    conclusions = tuple(eid if e == ei else e for e in a.conclusions)
    return Net(edges, links, a.boxes, conclusions)


def whynot_rule(a: Net, indices: list[int], weakening_of: Formula | None = None) -> Net:
    """Gather n >= 0 flat conclusions of one formula into a ?-conclusion.
    With an empty index list this is a weakening and the formula must be
    supplied explicitly."""
    if len(set(indices)) != len(indices):
        raise RuleError("duplicate conclusion index")
    picked = [_conclusion(a, i) for i in indices]
    if picked:
        labels = [a.edges[e] for e in picked]
        if not all(l.flat for l in labels):
            raise RuleError("why-not premises must be flat-labelled")
        body = labels[0].formula
        if any(l.formula != body for l in labels):
            raise RuleError("why-not premises must share one formula")
    else:
        if weakening_of is None:
            raise RuleError("a weakening needs an explicit formula")
        body = weakening_of
    fresh = _Fresh(a)
    lid, eid = fresh.link(), fresh.edge()
    edges = dict(a.edges)
    edges[eid] = Label(WhyNot(body))
    links = dict(a.links)
    links[lid] = Link("whynot", tuple(picked), (eid,))
    if picked:
        first = a.conclusions[min(indices)]
        conclusions = tuple(
            eid if e == first else e for e in a.conclusions if e == first or e not in picked
        )
    else:
        conclusions = a.conclusions + (eid,)
    return Net(edges, links, a.boxes, conclusions)


def paragraph_rule(a: Net, i: int) -> Net:
    ei = _conclusion(a, i)
    li = a.edges[ei]
    if li.flat:
        raise RuleError("paragraph premise cannot be flat-labelled")
    fresh = _Fresh(a)
    lid, eid = fresh.link(), fresh.edge()
    edges = dict(a.edges)
    edges[eid] = Label(Paragraph(li.formula))
    links = dict(a.links)
    links[lid] = Link("paragraph", (ei,), (eid,))
    conclusions = tuple(eid if e == ei else e for e in a.conclusions)
    return Net(edges, links, a.boxes, conclusions)


def promotion(a: Net, principal_index: int) -> Net:
    """Enclose the net in a box.  The selected conclusion A becomes !A under
    a new of-course link; every other conclusion must be flat-labelled and
    receives a pax port on the border."""
    ep = _conclusion(a, principal_index)
    lp = a.edges[ep]
    if lp.flat:
        raise RuleError("the principal conclusion cannot be flat-labelled")
    others = [e for e in a.conclusions if e != ep]
    not_flat = [e for e in others if not a.edges[e].flat]
    if not_flat:
        raise RuleError(f"promotion requires flat labels on the non-principal conclusions: {not_flat}")
    fresh = _Fresh(a)
    edges = dict(a.edges)
    links = dict(a.links)
    oc = fresh.link()
    oc_edge = fresh.edge()
    edges[oc_edge] = Label(OfCourse(lp.formula))
    links[oc] = Link("ofcourse", (ep,), (oc_edge,))
    new_conclusions: list[str] = []
    auxiliaries: list[str] = []
    replacement: dict[str, str] = {ep: oc_edge}
    for e in others:
        pax = fresh.link()
        pax_edge = fresh.edge()
        edges[pax_edge] = a.edges[e]
        links[pax] = Link("pax", (e,), (pax_edge,))
        auxiliaries.append(pax)
        replacement[e] = pax_edge
    for e in a.conclusions:
        new_conclusions.append(replacement[e])
    box = Box(oc, tuple(auxiliaries), frozenset(a.links), a.boxes)
    return Net(edges, links, (box,), tuple(new_conclusions))


# -- seeded random generation ------------------------------------------------


@dataclass(frozen=True)
class GenParams:
    target_size: int = 20
    box_bias: float = 0.3
    paragraph_bias: float = 0.2
    exponential_bias: float = 0.3
    cut_bias: float = 0.2

    def clamped(self) -> "GenParams":
        c = lambda x: min(max(x, 0.0), 1.0)
        return GenParams(
            max(self.target_size, 0),
            c(self.box_bias),
            c(self.paragraph_bias),
            c(self.exponential_bias),
            c(self.cut_bias),
        )


_ATOMS = ("X", "Y", "Z")


def random_formula(rng: random.Random, budget: int, params: GenParams) -> Formula:
    if budget <= 0:
        return Atom(rng.choice(_ATOMS), rng.random() < 0.5)
    roll = rng.random()
    p_exp = params.exponential_bias * (0.5 + 0.5 * params.box_bias)
    if roll < p_exp:
        inner = random_formula(rng, budget - 1, params)
        return OfCourse(inner) if rng.random() < 0.5 else WhyNot(inner)
    roll -= p_exp
    if roll < params.paragraph_bias:
        return Paragraph(random_formula(rng, budget - 1, params))
    roll -= params.paragraph_bias
    if roll < 0.1:
        return ONE if rng.random() < 0.5 else Bottom()
    half = (budget - 1) // 2
    left = random_formula(rng, half, params)
    right = random_formula(rng, budget - 1 - half, params)
    return Tensor(left, right) if rng.random() < 0.5 else Par(left, right)


def _gen_with(rng: random.Random, f: Formula, params: GenParams) -> tuple[Net, int]:
    """A sequentializable net having f among its conclusions; returns the
    net and the position of f.  Leaves are atomic axioms, so the output has
    no compound axiom links."""
    match f:
        case Atom():
            return ax(f), 1
        case Tensor(l, r):
            nl, il = _gen_with(rng, l, params)
            nr, ir = _gen_with(rng, r, params)
            net = tensor_rule(nl, il, nr, ir)
            return net, len(net.conclusions) - 1
        case Par(l, r):
            nl, il = _gen_with(rng, l, params)
            nr, ir = _gen_with(rng, r, params)
            m = mix(nl, nr)
            net = par_rule(m, il, len(nl.conclusions) + ir)
            return net, il
        case Paragraph(b):
            n, i = _gen_with(rng, b, params)
            return paragraph_rule(n, i), i
        case OfCourse(b):
            n, i = _gen_with(rng, b, params)
            for pos in range(len(n.conclusions)):
                if pos != i and not n.edges[n.conclusions[pos]].flat:
                    n = flat_rule(n, pos)
            return promotion(n, i), i
        case WhyNot(b):
            k = rng.choice((0, 1, 1, 2))
            if k == 0:
                net = whynot_rule(daimon(), [], weakening_of=b)
                return net, 0
            pieces = []
            for _ in range(k):
                n, i = _gen_with(rng, b, params)
                pieces.append(flat_rule(n, i))
            acc = pieces[0]
            positions = [_find_flat(acc, b)]
            for extra in pieces[1:]:
                offset = len(acc.conclusions)
                acc = mix(acc, extra)
                positions.append(offset + _find_flat(extra, b))
            net = whynot_rule(acc, positions)
            return net, min(positions)
        case One():
            return one_rule(), 0
        case Bottom():
            net = bottom_rule(daimon())
            return net, 0
    raise AssertionError(f"unhandled formula {f!r}")


def _find_flat(net: Net, body: Formula) -> int:
    for pos, e in enumerate(net.conclusions):
        lab = net.edges[e]
        if lab.flat and lab.formula == body:
            return pos
    raise AssertionError("flattened conclusion disappeared")


def random_net(seed: int, params: GenParams | None = None) -> Net:
    """Deterministic in the seed.  Every output is built by the rules above,
    hence valid and switching-acyclic; cut_bias 0 keeps it cut-free."""
    params = (params or GenParams()).clamped()
    rng = random.Random(seed)
    if params.target_size <= 0:
        return ax(Atom(rng.choice(_ATOMS))) if rng.random() < 0.7 else daimon()

    pool: list[Net] = []
    total = 0
    while total < params.target_size:
        depth = rng.randint(1, 3)
        if rng.random() < params.cut_bias:
            a = random_formula(rng, depth, params)
            na, ia = _gen_with(rng, a, params)
            nb, ib = _gen_with(rng, dual(a), params)
            piece = cut_rule(na, ia, nb, ib)
        else:
            f = random_formula(rng, depth, params)
            piece, _ = _gen_with(rng, f, params)
        pool.append(piece)
        total += piece.size()

    net = pool[0]
    for piece in pool[1:]:
        net = mix(net, piece)

    # Consume pending flat conclusions so the result is a DR-net candidate:
    # group them by formula and gather each group under a why-not link.
    while True:
        flats = [(idx, net.edges[e].formula) for idx, e in enumerate(net.conclusions) if net.edges[e].flat]
        if not flats:
            break
        body = flats[0][1]
        group = [idx for idx, f in flats if f == body]
        net = whynot_rule(net, group)

    # Close a few conclusion pairs with pars so multi-conclusion structure
    # does not dominate, keeping at least one conclusion when possible.
    plain = lambda: [
        idx for idx, e in enumerate(net.conclusions) if not net.edges[e].flat
    ]
    while len(plain()) > 2 and rng.random() < 0.6:
        candidates = plain()
        i, j = rng.sample(candidates, 2)
        net = par_rule(net, i, j)
    return net


def generate_corpus(
    count: int, base_seed: int = 0, params: GenParams | None = None
) -> list[Net]:
    return [random_net(base_seed + k, params) for k in range(count)]


__all__ = [
    "RuleError",
    "GenParams",
    "daimon",
    "ax",
    "one_rule",
    "mix",
    "cut_rule",
    "tensor_rule",
    "par_rule",
    "bottom_rule",
    "flat_rule",
    "whynot_rule",
    "paragraph_rule",
    "promotion",
    "random_formula",
    "random_net",
    "generate_corpus",
]
