"""Cut-elimination engine: redex discovery, the five step families,
normalization strategies, and residue tracking.

The exponential step is implemented in full generality.  A why-not premise
may reach its flat link through a chain of pax ports (the flat then lives
inside those boxes), and a box auxiliary wire may exit through the pax
ports of enclosing boxes before meeting the why-not that consumes it.  The
step therefore places each copy of the box contents next to its flat,
re-routes every copied auxiliary wire through fresh pax chains, and merges
the wires into the original target why-not links.
"""

from __future__ import annotations

from dataclasses import dataclass

from .correctness import BudgetExceeded, Indexing, PreconditionError, solve_indexing, BalanceWitness
from .formula import Paragraph
from .net import Box, Label, Link, Net, traversal_order

DEFAULT_STEP_BUDGET = 1_000_000

STEP_AXIOM = "axiom"
STEP_UNIT = "unit"
STEP_MULT = "multiplicative"
STEP_EXP = "exponential"
STEP_PARG = "paragraph"


@dataclass(frozen=True)
class Redex:
    cut: str
    kind: str


@dataclass(frozen=True)
class Step:
    redex: Redex
    lift: dict[str, str]  # result id -> source id; identity entries omitted

    def lift_of(self, x: str) -> str:
        return self.lift.get(x, x)


@dataclass(frozen=True)
class RewriteTrace:
    steps: tuple[Step, ...]

    def to_document(self) -> list:
        return [
            {"cut": s.redex.cut, "kind": s.redex.kind, "lift": dict(sorted(s.lift.items()))}
            for s in self.steps
        ]

    def lift_to_source(self, x: str) -> str:
        for step in reversed(self.steps):
            x = step.lift_of(x)
        return x


def find_redexes(net: Net) -> list[Redex]:
    """One redex per cut whose premise producers match a step pattern.
    In a well-typed net every cut matches; an axiom producer always makes
    an axiom step."""
    out = []
    for lid in sorted(net.links):
        link = net.links[lid]
        if link.kind != "cut":
            continue
        kinds = {net.links[net.producer(p)].kind for p in link.premises}
        if "ax" in kinds:
            out.append(Redex(lid, STEP_AXIOM))
        elif kinds == {"one", "bot"}:
            out.append(Redex(lid, STEP_UNIT))
        elif kinds == {"tensor", "par"}:
            out.append(Redex(lid, STEP_MULT))
        elif kinds == {"ofcourse", "whynot"}:
            out.append(Redex(lid, STEP_EXP))
        elif kinds == {"paragraph"}:
            out.append(Redex(lid, STEP_PARG))
    return out


# -- mutable working copy -----------------------------------------------------


class _MBox:
    __slots__ = ("principal", "auxiliaries", "direct", "children", "parent")

    def __init__(self, principal: str, auxiliaries: list[str], parent: "_MBox | None"):
        self.principal = principal
        self.auxiliaries = auxiliaries
        self.direct: set[str] = set()
        self.children: list[_MBox] = []
        self.parent = parent

    def ancestors(self) -> list["_MBox"]:
        out = []
        cur = self.parent
        while cur is not None:
            out.append(cur)
            cur = cur.parent
        return out


class _Workspace:
    """Mutable view of a net during one rewrite step."""

    def __init__(self, net: Net):
        self.net = net
        self.edges: dict[str, Label] = dict(net.edges)
        self.links: dict[str, Link] = dict(net.links)
        self.conclusions: list[str] = list(net.conclusions)
        self.lift: dict[str, str] = {}
        self.roots: list[_MBox] = []
        self.loc: dict[str, tuple] = {lid: ("top",) for lid in net.links}
        self.box_by_principal: dict[str, _MBox] = {}
        self.box_by_pax: dict[str, _MBox] = {}
        self._serial = 0

        def build(box: Box, parent: _MBox | None) -> _MBox:
            mb = _MBox(box.principal, list(box.auxiliaries), parent)
            self.box_by_principal[box.principal] = mb
            self.loc[box.principal] = ("border", mb)
            for a in box.auxiliaries:
                self.box_by_pax[a] = mb
                self.loc[a] = ("border", mb)
            inner = box.contents
            child_ids: set[str] = set()
            for ch in box.children:
                cmb = build(ch, mb)
                mb.children.append(cmb)
                child_ids |= set(ch.contents) | set(ch.border())
            mb.direct = {lid for lid in inner if lid not in child_ids}
            for lid in mb.direct:
                self.loc[lid] = ("in", mb)
            return mb

        for b in net.boxes:
            self.roots.append(build(b, None))

    # identifiers ------------------------------------------------------------

    def fresh(self, base: str, tag: str) -> str:
        name = f"{base}~{tag}"
        while name in self.edges or name in self.links:
            self._serial += 1
            name = f"{base}~{tag}.{self._serial}"
        return name

    # structural edits --------------------------------------------------------

    def remove_link(self, lid: str) -> None:
        kind = self.loc.pop(lid)
        if kind[0] == "in":
            kind[1].direct.discard(lid)
        elif kind[0] == "border":
            mb = kind[1]
            if mb.principal == lid:
                mb.principal = ""
            else:
                mb.auxiliaries.remove(lid)
        del self.links[lid]

    def remove_edge(self, e: str) -> None:
        del self.edges[e]

    def add_link(self, lid: str, link: Link, where: tuple) -> None:
        self.links[lid] = link
        self.loc[lid] = where
        if where[0] == "in":
            where[1].direct.add(lid)

    def location_of(self, lid: str) -> tuple:
        return self.loc[lid]

    def remove_box_record(self, mb: _MBox) -> None:
        """Drop the box node itself, leaving its (already removed or moved)
        contents alone."""
        owner = mb.parent.children if mb.parent is not None else self.roots
        owner.remove(mb)

    def freeze(self) -> Net:
        def rebuild(mb: _MBox) -> Box:
            children = tuple(rebuild(c) for c in mb.children)
            total: set[str] = set(mb.direct)
            for c, cb in zip(mb.children, children):
                total |= set(cb.contents) | set(cb.border())
            return Box(mb.principal, tuple(mb.auxiliaries), frozenset(total), children)

        boxes = tuple(rebuild(mb) for mb in self.roots)
        return Net(self.edges, self.links, boxes, tuple(self.conclusions))


# -- the five step families ---------------------------------------------------


class StepError(RuntimeError):
    pass


def apply_step(net: Net, redex: Redex) -> tuple[Net, dict[str, str]]:
    """Apply one cut-elimination step; returns the new net and the lift map
    (result link/edge id -> source id, identity entries omitted)."""
    ws = _Workspace(net)
    cut = net.links[redex.cut]
    p1, p2 = cut.premises
    k1 = net.links[net.producer(p1)].kind
    if redex.kind == STEP_AXIOM:
        if k1 != "ax":
            p1, p2 = p2, p1
        # Prefer the lexicographically first axiom for determinism when both
        # producers are axioms.
        prods = sorted(
            p for p in (p1, p2) if net.links[net.producer(p)].kind == "ax"
        )
        pa = prods[0]
        pb = p2 if pa == p1 else p1
        _axiom_step(ws, redex.cut, pa, pb)
    elif redex.kind == STEP_UNIT:
        _unit_step(ws, redex.cut, p1, p2)
    elif redex.kind == STEP_MULT:
        if k1 != "tensor":
            p1, p2 = p2, p1
        _mult_step(ws, redex.cut, p1, p2)
    elif redex.kind == STEP_PARG:
        _paragraph_step(ws, redex.cut, p1, p2)
    elif redex.kind == STEP_EXP:
        if k1 != "ofcourse":
            p1, p2 = p2, p1
        _exponential_step(ws, redex.cut, p1, p2)
    else:
        raise StepError(f"unknown step kind {redex.kind}")
    return ws.freeze(), ws.lift


def _axiom_step(ws: _Workspace, cut: str, pa: str, pb: str) -> None:
    ax_id = ws.net.producer(pa)
    ax = ws.net.links[ax_id]
    other = ax.conclusions[0] if ax.conclusions[1] == pa else ax.conclusions[1]
    if other == pb:
        raise StepError("axiom cut with itself; the net cannot be switching-acyclic")
    ws.remove_link(cut)
    ws.remove_link(ax_id)
    ws.remove_edge(pa)
    consumer = ws.net.consumer(other)
    if consumer is None:
        pos = ws.conclusions.index(other)
        ws.conclusions[pos] = pb
    else:
        lk = ws.links[consumer]
        ws.links[consumer] = Link(
            lk.kind,
            tuple(pb if e == other else e for e in lk.premises),
            lk.conclusions,
        )
    ws.remove_edge(other)


def _unit_step(ws: _Workspace, cut: str, p1: str, p2: str) -> None:
    for p in (p1, p2):
        ws.remove_link(ws.net.producer(p))
        ws.remove_edge(p)
    ws.remove_link(cut)


def _mult_step(ws: _Workspace, cut: str, pt: str, pp: str) -> None:
    tid = ws.net.producer(pt)
    pid = ws.net.producer(pp)
    tens = ws.net.links[tid]
    par = ws.net.links[pid]
    where = ws.location_of(cut)
    ws.remove_link(cut)
    ws.remove_link(tid)
    ws.remove_link(pid)
    ws.remove_edge(pt)
    ws.remove_edge(pp)
    for i in range(2):
        cid = ws.fresh(cut, f"m{i}")
        ws.add_link(cid, Link("cut", (tens.premises[i], par.premises[i]), ()), where)


def _paragraph_step(ws: _Workspace, cut: str, p1: str, p2: str) -> None:
    l1 = ws.net.producer(p1)
    l2 = ws.net.producer(p2)
    where = ws.location_of(cut)
    prem1 = ws.net.links[l1].premises[0]
    prem2 = ws.net.links[l2].premises[0]
    ws.remove_link(cut)
    ws.remove_link(l1)
    ws.remove_link(l2)
    ws.remove_edge(p1)
    ws.remove_edge(p2)
    cid = ws.fresh(cut, "p")
    ws.add_link(cid, Link("cut", (prem1, prem2), ()), where)


# Exponential step helpers ----------------------------------------------------


def _trace_up(ws: _Workspace, premise: str) -> tuple[list[_MBox], str]:
    """From a why-not premise up through pax ports to the producing flat.
    Returns the boxes whose border is crossed (outermost first) and the
    flat link id."""
    boxes: list[_MBox] = []
    e = premise
    while True:
        prod = ws.net.producer(e)
        kind = ws.net.links[prod].kind
        if kind == "flat":
            return boxes, prod
        if kind != "pax":
            raise StepError(f"why-not premise {premise} is produced by a {kind} link")
        mb = ws.box_by_pax[prod]
        boxes.append(mb)
        e = ws.net.links[prod].premises[0]


def _trace_down(ws: _Workspace, pax_conclusion: str) -> tuple[list[tuple[_MBox, str, str]], str]:
    """From a box auxiliary conclusion down through pax ports to the why-not
    that consumes the wire.  Returns [(box, pax id, its conclusion edge)]
    and the target why-not id."""
    chain: list[tuple[_MBox, str, str]] = []
    e = pax_conclusion
    while True:
        consumer = ws.net.consumer(e)
        if consumer is None:
            raise PreconditionError(
                "a box auxiliary wire reaches a net conclusion; the exponential "
                "step needs every flat wire consumed"
            )
        kind = ws.net.links[consumer].kind
        if kind == "whynot":
            return chain, consumer
        if kind != "pax":
            raise StepError(f"auxiliary wire {pax_conclusion} feeds a {kind} link")
        mb = ws.box_by_pax[consumer]
        out_edge = ws.net.links[consumer].conclusions[0]
        chain.append((mb, consumer, out_edge))
        e = out_edge


def _copy_contents(
    ws: _Workspace, box: _MBox, tag: str
) -> tuple[dict[str, str], dict[str, str], list[_MBox], set[str]]:
    """Deep-copy the subnet contained in a box (everything except its own
    border).  Returns (link map, edge map, copied child boxes, loose link
    ids that sat directly in the box)."""
    link_map: dict[str, str] = {}
    edge_map: dict[str, str] = {}

    def collect(mb: _MBox) -> None:
        for lid in mb.direct:
            link_map[lid] = ws.fresh(lid, tag)
        for child in mb.children:
            link_map[child.principal] = ws.fresh(child.principal, tag)
            for a in child.auxiliaries:
                link_map[a] = ws.fresh(a, tag)
            collect(child)

    collect(box)
    for lid in link_map:
        for e in ws.net.links[lid].conclusions:
            edge_map[e] = ws.fresh(e, tag)

    for lid, new_lid in link_map.items():
        lk = ws.net.links[lid]
        ws.links[new_lid] = Link(
            lk.kind,
            tuple(edge_map.get(e, e) for e in lk.premises),
            tuple(edge_map[e] for e in lk.conclusions),
        )
        ws.lift[new_lid] = lid
    for e, new_e in edge_map.items():
        ws.edges[new_e] = ws.net.edges[e]
        ws.lift[new_e] = e

    def clone(mb: _MBox, parent: _MBox | None) -> _MBox:
        nb = _MBox(link_map[mb.principal], [link_map[a] for a in mb.auxiliaries], parent)
        ws.box_by_principal[nb.principal] = nb
        ws.loc[nb.principal] = ("border", nb)
        for a in nb.auxiliaries:
            ws.box_by_pax[a] = nb
            ws.loc[a] = ("border", nb)
        nb.direct = {link_map[l] for l in mb.direct}
        for l in nb.direct:
            ws.loc[l] = ("in", nb)
        nb.children = [clone(c, nb) for c in mb.children]
        return nb

    loose = {link_map[l] for l in box.direct}
    copied_children = [clone(c, None) for c in box.children]
    return link_map, edge_map, copied_children, loose


def _remove_contents(ws: _Workspace, box: _MBox) -> None:
    def wipe(mb: _MBox) -> None:
        for lid in list(mb.direct):
            for e in ws.net.links[lid].conclusions:
                ws.remove_edge(e)
            ws.remove_link(lid)
        for child in list(mb.children):
            for a in list(child.auxiliaries) + [child.principal]:
                for e in ws.net.links[a].conclusions:
                    ws.remove_edge(e)
                ws.remove_link(a)
            wipe(child)
            ws.remove_box_record(child)

    wipe(box)


def _exponential_step(ws: _Workspace, cut: str, p_oc: str, p_wn: str) -> None:
    net = ws.net
    oc_id = net.producer(p_oc)
    wn_id = net.producer(p_wn)
    box = ws.box_by_principal.get(oc_id)
    if box is None:
        raise StepError("of-course link without a box")
    wn = net.links[wn_id]
    premises = list(wn.premises)
    n = len(premises)

    # Resolve both sides of the wiring before any mutation.
    ups = [_trace_up(ws, p) for p in premises]
    for up_boxes, _ in ups:
        if box in up_boxes:
            raise StepError("box feeds its own cut partner; not switching-acyclic")
    aux_info = []
    for pax_id in box.auxiliaries:
        q = net.links[pax_id].conclusions[0]
        u = net.links[pax_id].premises[0]
        down_chain, target_wn = _trace_down(ws, q)
        if target_wn == wn_id:
            raise StepError("auxiliary wire reaches the cut partner; not switching-acyclic")
        aux_info.append((pax_id, u, q, down_chain, target_wn))

    oc_premise = net.links[oc_id].premises[0]  # the A conclusion of the contents

    # New premises to merge into each target why-not, in deterministic order.
    merged: dict[str, list[str]] = {}

    for i, (p, (up_boxes, flat_id)) in enumerate(zip(premises, ups)):
        tag = f"c{i}"
        link_map, edge_map, child_boxes, loose = _copy_contents(ws, box, tag)
        flat_loc = ws.location_of(flat_id)
        # Plant the copy where the flat lives.
        if flat_loc[0] == "in":
            host = flat_loc[1]
            host.direct |= loose
            for lid in loose:
                ws.loc[lid] = ("in", host)
            for cb in child_boxes:
                cb.parent = host
                host.children.append(cb)
        else:
            for lid in loose:
                ws.loc[lid] = ("top",)
            ws.roots.extend(child_boxes)
        # Cut the copied principal premise against the flat's own premise.
        a_i = net.links[flat_id].premises[0]
        cid = ws.fresh(cut, f"x{i}")
        ws.add_link(cid, Link("cut", (edge_map[oc_premise], a_i), ()), flat_loc)
        # Route every copied auxiliary wire out of the up-chain boxes and
        # down the original pax chain to its why-not.
        for (pax_id, u, q, down_chain, target_wn) in aux_info:
            wire = edge_map[u]
            label = ws.edges[wire]
            for mb in reversed(up_boxes):  # innermost first
                wire = _add_pax(ws, mb, wire, label, lift_to=pax_id, edge_lift=q)
            for (mb, chain_pax, chain_edge) in down_chain:
                wire = _add_pax(ws, mb, wire, label, lift_to=chain_pax, edge_lift=chain_edge)
            merged.setdefault(target_wn, []).append(wire)

    # Remove the consumed material: flats, up-chain paxes, the why-not, the
    # cut, the box border, the original aux chains, and the original
    # contents (now replaced by the copies).
    for p, (up_boxes, flat_id) in zip(premises, ups):
        e = p
        while True:
            prod = net.producer(e)
            ws.remove_edge(e)
            if net.links[prod].kind == "flat":
                ws.remove_link(prod)
                break
            nxt = net.links[prod].premises[0]
            ws.remove_link(prod)
            e = nxt
    for (pax_id, u, q, down_chain, target_wn) in aux_info:
        last_edge = q if not down_chain else down_chain[-1][2]
        tgt = ws.links[target_wn]
        new_premises = tuple(e for e in tgt.premises if e != last_edge) + tuple(
            merged.get(target_wn, [])
        )
        ws.links[target_wn] = Link(tgt.kind, new_premises, tgt.conclusions)
        merged.pop(target_wn, None)
        ws.remove_link(pax_id)
        ws.remove_edge(q)
        for (mb, chain_pax, chain_edge) in down_chain:
            ws.remove_link(chain_pax)
            ws.remove_edge(chain_edge)
    for target_wn, wires in merged.items():
        tgt = ws.links[target_wn]
        ws.links[target_wn] = Link(tgt.kind, tgt.premises + tuple(wires), tgt.conclusions)
    ws.remove_link(cut)
    ws.remove_link(wn_id)
    ws.remove_edge(p_wn)
    ws.remove_link(oc_id)
    ws.remove_edge(p_oc)
    _remove_contents(ws, box)
    ws.remove_box_record(box)


def _add_pax(
    ws: _Workspace,
    mb: _MBox,
    wire: str,
    label: Label,
    lift_to: str,
    edge_lift: str,
) -> str:
    pax_id = ws.fresh(lift_to, "px")
    out_edge = ws.fresh(wire, "px")
    ws.edges[out_edge] = label
    ws.links[pax_id] = Link("pax", (wire,), (out_edge,))
    mb.auxiliaries.append(pax_id)
    ws.box_by_pax[pax_id] = mb
    ws.loc[pax_id] = ("border", mb)
    ws.lift[pax_id] = lift_to
    ws.lift[out_edge] = edge_lift
    return out_edge


# -- normalization ------------------------------------------------------------


def _level_map(net: Net) -> dict[str, int]:
    """Level of each cut link under a plain indexing, normalized to start at
    zero per component; falls back to zero when no indexing exists."""
    result = solve_indexing(net, "plain")
    if isinstance(result, BalanceWitness):
        return {lid: 0 for lid in net.cut_links()}
    from .correctness import indexing_components

    comp = indexing_components(net, "plain")
    mins: dict[str, int] = {}
    for e, v in result.assignment.items():
        c = comp[e]
        mins[c] = min(mins.get(c, v), v)
    levels = {}
    for lid in net.cut_links():
        e = net.links[lid].premises[0]
        levels[lid] = result.assignment[e] - mins[comp[e]]
    return levels


def _pick(net: Net, redexes: list[Redex], strategy: str) -> Redex:
    if len(redexes) == 1:
        return redexes[0]
    rank = traversal_order(net)
    if strategy == "lo":
        return min(redexes, key=lambda r: rank[r.cut])
    if strategy == "in":
        return min(redexes, key=lambda r: (-net.depth(r.cut), rank[r.cut]))
    if strategy == "level":
        levels = _level_map(net)
        return min(redexes, key=lambda r: (levels[r.cut], rank[r.cut]))
    raise ValueError(f"unknown strategy {strategy!r}; use lo, in, or level")


def normalize(
    net: Net,
    strategy: str = "lo",
    budget: int = DEFAULT_STEP_BUDGET,
    no_axiom: bool = False,
) -> tuple[Net, RewriteTrace]:
    """Reduce to the cut-free form (or, with no_axiom, to the fixed point of
    the non-axiom steps).  Confluence makes the result independent of the
    strategy; the strategy only shapes the trace."""
    steps: list[Step] = []
    count = 0
    while True:
        redexes = find_redexes(net)
        if no_axiom:
            redexes = [r for r in redexes if r.kind != STEP_AXIOM]
        if not redexes:
            return net, RewriteTrace(tuple(steps))
        if count >= budget:
            raise BudgetExceeded("cut-elimination steps", count + 1, budget)
        redex = _pick(net, redexes, strategy)
        net, lift = apply_step(net, redex)
        steps.append(Step(redex, lift))
        count += 1


def normalize_no_axiom(
    net: Net, strategy: str = "lo", budget: int = DEFAULT_STEP_BUDGET
) -> tuple[Net, RewriteTrace]:
    return normalize(net, strategy=strategy, budget=budget, no_axiom=True)


# -- the shifted net ----------------------------------------------------------


def _shift_label(lab: Label) -> Label:
    from .formula import shift_formula

    if lab.flat:
        return Label(Paragraph(shift_formula(lab.formula)), flat=True)
    return Label(shift_formula(lab.formula))


def shift_net(net: Net) -> Net:
    """Insert a paragraph link above every of-course and flat link and shift
    every edge label accordingly; conclusions become their shifted forms."""
    edges = {e: _shift_label(lab) for e, lab in net.edges.items()}
    links = dict(net.links)
    new_in_box: dict[str, list[str]] = {}
    serial = 0
    for lid in sorted(net.links):
        link = net.links[lid]
        if link.kind not in ("ofcourse", "flat"):
            continue
        prem = link.premises[0]
        pid = f"{lid}~sh{serial}"
        eid = f"{prem}~sh{serial}"
        serial += 1
        edges[eid] = Label(Paragraph(edges[prem].formula))
        links[pid] = Link("paragraph", (prem,), (eid,))
        links[lid] = Link(link.kind, (eid,), link.conclusions)
        new_in_box.setdefault(lid, []).append(pid)

    def rebox(box: Box) -> Box:
        extra: set[str] = set()
        for lid in box.contents | set(box.border()):
            if lid in new_in_box and _paragraph_sits_inside(net, lid, box):
                extra.update(new_in_box[lid])
        return Box(
            box.principal,
            box.auxiliaries,
            frozenset(box.contents) | extra,
            tuple(rebox(c) for c in box.children),
        )

    boxes = tuple(rebox(b) for b in net.boxes)
    return Net(edges, links, boxes, net.conclusions)


def _paragraph_sits_inside(net: Net, lid: str, box: Box) -> bool:
    # A paragraph inserted above a border of-course goes inside that box; one
    # above an interior link shares the link's box.
    if box.principal == lid:
        return True
    return lid in box.contents


# -- transporting quasi-indexings ---------------------------------------------


def transport_indexing(q: Indexing, trace: RewriteTrace, target: Net) -> Indexing:
    """Compose a quasi-indexing of the trace's source with the lift maps of
    every step.  The trace must contain no axiom steps."""
    if q.flavor != "quasi":
        raise ValueError("only quasi-indexings transport along reductions")
    for step in trace.steps:
        if step.redex.kind == STEP_AXIOM:
            raise ValueError("trace contains an axiom step; quasi-indexings do not survive it")
    assignment = {}
    for e in target.edges:
        src = trace.lift_to_source(e)
        assignment[e] = q.assignment[src]
    return Indexing(assignment, "quasi")


__all__ = [
    "DEFAULT_STEP_BUDGET",
    "Redex",
    "Step",
    "RewriteTrace",
    "StepError",
    "find_redexes",
    "apply_step",
    "normalize",
    "normalize_no_axiom",
    "shift_net",
    "transport_indexing",
    "STEP_AXIOM",
    "STEP_UNIT",
    "STEP_MULT",
    "STEP_EXP",
    "STEP_PARG",
]
