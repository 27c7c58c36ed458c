"""Switchings, acyclicity correctness, integer indexings, and the
level-membership deciders that rest on them.

An indexing assigns an integer to every edge so that each link equates the
indexes of its incident edges, except that crossing a paragraph link shifts
by one (plain flavor) and, in the exponential flavor, crossing an of-course
or why-not link shifts as well.  The quasi flavor further drops the
constraint on axiom conclusions.  The solver propagates offsets over each
connected component instead of enumerating cycles; a failed propagation is
returned as a concrete unbalanced cycle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Literal

from .net import Box, Net, UGraph, parr_closure

Flavor = Literal["plain", "exponential", "quasi"]

DEFAULT_SWITCHING_BUDGET = 1 << 20


class BudgetExceeded(RuntimeError):
    def __init__(self, what: str, needed: int, budget: int):
        super().__init__(f"{what} needs {needed} > budget {budget}")
        self.what = what
        self.needed = needed
        self.budget = budget


class PreconditionError(ValueError):
    pass


# -- switchings --------------------------------------------------------------


@dataclass(frozen=True)
class Switching:
    """One premise chosen for every par and non-weakening why-not link at
    depth zero, with depth-zero boxes collapsed into single nodes."""

    chosen: dict[str, str]
    graph: UGraph


def _top_structure(net: Net):
    """Node map collapsing depth-zero boxes, plus the fixed (non-switched)
    graph edges and the premise groups of switched links."""
    node_of: dict[str, str] = {}
    for box in net.boxes:
        name = f"box:{box.principal}"
        for lid in box.border():
            node_of[lid] = name
        for lid in box.contents:
            node_of[lid] = name
    top_links = [lid for lid in net.links if lid not in node_of]
    for lid in top_links:
        node_of[lid] = lid
    nodes = tuple(top_links) + tuple(f"box:{b.principal}" for b in net.boxes)

    switched: list[tuple[str, list[str]]] = []
    switched_premises: set[str] = set()
    for lid in top_links:
        link = net.links[lid]
        if link.kind in ("par", "whynot") and link.premises:
            switched.append((lid, list(link.premises)))
            switched_premises.update(link.premises)

    fixed: list[tuple[str, str, str]] = []
    candidates: dict[str, tuple[str, str]] = {}
    for eid in net.edges:
        cons = net.consumer(eid)
        if cons is None:
            continue
        a = node_of[net.producer(eid)]
        b = node_of[cons]
        if a == b and a.startswith("box:"):
            continue
        if eid in switched_premises:
            candidates[eid] = (a, b)
        else:
            fixed.append((a, b, eid))
    return nodes, fixed, switched, candidates


def count_switchings(net: Net) -> int:
    _, _, switched, _ = _top_structure(net)
    n = 1
    for _, prems in switched:
        n *= len(prems)
    return n


def enumerate_switchings(net: Net, budget: int = DEFAULT_SWITCHING_BUDGET) -> Iterator[Switching]:
    """All switchings of the net at depth zero.  Weakening links contribute
    no choice; deeper levels are reached by recursing into box contents."""
    nodes, fixed, switched, candidates = _top_structure(net)
    total = count_switchings(net)
    if total > budget:
        raise BudgetExceeded("switching enumeration", total, budget)
    names = [lid for lid, _ in switched]
    for combo in itertools.product(*(prems for _, prems in switched)):
        chosen = dict(zip(names, combo))
        edges = list(fixed) + [(candidates[e][0], candidates[e][1], e) for e in combo]
        yield Switching(chosen, UGraph(nodes, tuple(edges)))


@dataclass(frozen=True)
class CyclicSwitching:
    """Witness that some switching contains a cycle."""

    chosen: dict[str, str]
    cycle_edges: tuple[str, ...]
    depth_context: tuple[str, ...]  # principals of the boxes entered

    def __str__(self) -> str:
        where = " inside box " + "/".join(self.depth_context) if self.depth_context else ""
        return f"cyclic switching{where}: cycle through edges {', '.join(self.cycle_edges)}"


def contained_net(net: Net, box: Box) -> Net:
    """The net contained in a box: its conclusions are the premises of the
    border links (auxiliaries first, principal last)."""
    links = {lid: net.links[lid] for lid in box.contents}
    edges = {e: net.edges[e] for lid in links for e in net.links[lid].conclusions}
    conclusions = []
    for lid in box.auxiliaries:
        conclusions.extend(net.links[lid].premises)
    conclusions.extend(net.links[box.principal].premises)
    return Net(edges, links, box.children, tuple(conclusions))


def find_cyclic_switching(
    net: Net, budget: int = DEFAULT_SWITCHING_BUDGET, _context: tuple[str, ...] = ()
) -> CyclicSwitching | None:
    for sw in enumerate_switchings(net, budget):
        cyc = sw.graph.find_cycle()
        if cyc is not None:
            return CyclicSwitching(sw.chosen, tuple(cyc), _context)
    for box in net.boxes:
        inner = find_cyclic_switching(contained_net(net, box), budget, _context + (box.principal,))
        if inner is not None:
            return inner
    return None


def is_dr_correct(net: Net, budget: int = DEFAULT_SWITCHING_BUDGET) -> bool:
    return find_cyclic_switching(net, budget) is None


def is_dr_net(net: Net, budget: int = DEFAULT_SWITCHING_BUDGET) -> bool:
    """Switching-acyclic at every depth and no flat-labelled conclusion."""
    return not net.has_flat_conclusion() and is_dr_correct(net, budget)


# -- indexings ---------------------------------------------------------------


@dataclass(frozen=True)
class Indexing:
    assignment: dict[str, int]
    flavor: Flavor

    def to_document(self) -> dict:
        return {"flavor": self.flavor, "assignment": dict(sorted(self.assignment.items()))}


@dataclass(frozen=True)
class BalanceWitness:
    """An unbalanced cycle (or, for strong indexability, a path between two
    conclusions) as an alternating edge/link sequence."""

    elements: tuple[str, ...]  # e0, l0, e1, l1, ...; links between edges
    balance: int
    flavor: Flavor
    closed: bool = True

    def edge_ids(self) -> tuple[str, ...]:
        return self.elements[0::2]

    def __str__(self) -> str:
        kind = "cycle" if self.closed else "conclusion-to-conclusion path"
        return f"unbalanced {kind} (balance {self.balance}, {self.flavor} weights): " + " - ".join(self.elements)


def _link_constraints(net: Net, flavor: Flavor) -> Iterator[tuple[str, str, int, str]]:
    """Yield (e1, e2, w, link) meaning idx(e1) = idx(e2) + w."""
    shift_exp = flavor in ("exponential", "quasi")
    for lid, link in net.links.items():
        kind = link.kind
        if kind == "ax":
            if flavor != "quasi":
                yield link.conclusions[0], link.conclusions[1], 0, lid
        elif kind == "cut":
            yield link.premises[0], link.premises[1], 0, lid
        elif kind in ("tensor", "par"):
            c = link.conclusions[0]
            yield link.premises[0], c, 0, lid
            yield link.premises[1], c, 0, lid
        elif kind in ("flat", "pax"):
            yield link.premises[0], link.conclusions[0], 0, lid
        elif kind == "whynot":
            c = link.conclusions[0]
            w = 1 if shift_exp else 0
            for p in link.premises:
                yield p, c, w, lid
        elif kind == "ofcourse":
            yield link.premises[0], link.conclusions[0], 1 if shift_exp else 0, lid
        elif kind == "paragraph":
            yield link.premises[0], link.conclusions[0], 1, lid
        # one / bot have a single incident edge and induce no constraint


def _conflict_cycle(
    parents: dict[str, tuple[str, str, int] | None],
    e1: str,
    e2: str,
    via: str,
) -> tuple[str, ...]:
    def path_to_root(x: str) -> list[tuple[str, str]]:
        out = [(x, "")]
        while parents[x] is not None:
            px, lnk, _ = parents[x]  # type: ignore[misc]
            out[-1] = (out[-1][0], lnk)
            out.append((px, ""))
            x = px
        return out

    p1 = path_to_root(e1)
    p2 = path_to_root(e2)
    nodes1 = [n for n, _ in p1]
    set2 = {n for n, _ in p2}
    meet = next(n for n in nodes1 if n in set2)
    seq: list[str] = []
    for n, lnk in p1:
        seq.append(n)
        if n == meet:
            break
        seq.append(lnk)
    seq.reverse()  # meet ... e1
    seq.append(via)
    tail: list[str] = []
    for n, lnk in p2:
        tail.append(n)
        if n == meet:
            break
        tail.append(lnk)
    seq.extend(tail[:-1])  # e2 ... (meet dropped: cycle closes there)
    return tuple(seq)


def solve_indexing(net: Net, flavor: Flavor = "plain") -> Indexing | BalanceWitness:
    """Propagate offsets over each connected component of the underlying
    graph, anchoring one edge per component at zero.  Returns a satisfying
    assignment or a cycle on which the accumulated shift does not cancel."""
    adjacency: dict[str, list[tuple[str, int, str]]] = {e: [] for e in net.edges}
    for e1, e2, w, lid in _link_constraints(net, flavor):
        adjacency[e1].append((e2, -w, lid))  # idx(e2) = idx(e1) - w
        adjacency[e2].append((e1, w, lid))
    assignment: dict[str, int] = {}
    parents: dict[str, tuple[str, str, int] | None] = {}
    for start in net.edges:
        if start in assignment:
            continue
        assignment[start] = 0
        parents[start] = None
        queue = [start]
        while queue:
            cur = queue.pop()
            for other, delta, lid in adjacency[cur]:
                want = assignment[cur] + delta
                if other not in assignment:
                    assignment[other] = want
                    parents[other] = (cur, lid, delta)
                    queue.append(other)
                elif assignment[other] != want:
                    elements = _conflict_cycle(parents, cur, other, lid)
                    bal = abs(assignment[other] - want)
                    return BalanceWitness(elements, bal, flavor, closed=True)
    return Indexing(assignment, flavor)


def check_indexing(net: Net, ix: Indexing) -> bool:
    """Re-check every link constraint; solver soundness oracle."""
    for e1, e2, w, _ in _link_constraints(net, ix.flavor):
        if ix.assignment[e1] != ix.assignment[e2] + w:
            return False
    return set(ix.assignment) >= set(net.edges)


def indexing_components(net: Net, flavor: Flavor = "plain") -> dict[str, str]:
    """Map each edge to its component representative (least edge id) in the
    constraint graph of the given flavor."""
    adjacency: dict[str, list[str]] = {e: [] for e in net.edges}
    for e1, e2, _, _ in _link_constraints(net, flavor):
        adjacency[e1].append(e2)
        adjacency[e2].append(e1)
    rep: dict[str, str] = {}
    for start in sorted(net.edges):
        if start in rep:
            continue
        queue = [start]
        rep[start] = start
        while queue:
            cur = queue.pop()
            for other in adjacency[cur]:
                if other not in rep:
                    rep[other] = start
                    queue.append(other)
    return rep


def shift_indexing(ix: Indexing, net: Net, shifts: dict[str, int]) -> Indexing:
    """Translate each component by its own constant; the result satisfies
    the same constraints."""
    comp = indexing_components(net, ix.flavor)
    known = set(comp.values())
    for c in shifts:
        if c not in known:
            raise KeyError(f"unknown component representative {c!r}")
    moved = {e: v + shifts.get(comp[e], 0) for e, v in ix.assignment.items()}
    return Indexing(moved, ix.flavor)


def conclusion_groups_equal(net: Net, ix: Indexing) -> tuple[bool, tuple[str, str] | None]:
    """Within every component, all net conclusions must receive one index.
    Cross-component differences are repairable by translation."""
    comp = indexing_components(net, ix.flavor)
    seen: dict[str, tuple[str, int]] = {}
    for e in net.conclusions:
        c = comp[e]
        v = ix.assignment[e]
        if c in seen and seen[c][1] != v:
            return False, (seen[c][0], e)
        seen.setdefault(c, (e, v))
    return True, None


def conclusion_path_witness(net: Net, e1: str, e2: str, flavor: Flavor) -> BalanceWitness:
    """A path between two conclusions whose accumulated shift is non-zero."""
    adjacency: dict[str, list[tuple[str, int, str]]] = {e: [] for e in net.edges}
    for a, b, w, lid in _link_constraints(net, flavor):
        adjacency[a].append((b, -w, lid))
        adjacency[b].append((a, w, lid))
    prev: dict[str, tuple[str, str] | None] = {e1: None}
    val: dict[str, int] = {e1: 0}
    queue = [e1]
    while queue:
        cur = queue.pop()
        for other, delta, lid in adjacency[cur]:
            if other not in prev:
                prev[other] = (cur, lid)
                val[other] = val[cur] + delta
                queue.append(other)
    seq = [e2]
    cur = e2
    while prev[cur] is not None:
        p, lid = prev[cur]  # type: ignore[misc]
        seq.append(lid)
        seq.append(p)
        cur = p
    return BalanceWitness(tuple(reversed(seq)), abs(val[e2]), flavor, closed=False)


def is_strongly_indexable(net: Net) -> bool | BalanceWitness:
    """True iff a plain indexing exists and, inside each component, all net
    conclusions receive the same index.  Returns the blocking witness
    instead of False so callers can report it."""
    if net.has_flat_conclusion():
        raise PreconditionError("net has a flat-labelled conclusion")
    result = solve_indexing(net, "plain")
    if isinstance(result, BalanceWitness):
        return result
    ok, pair = conclusion_groups_equal(net, result)
    if ok:
        return True
    return conclusion_path_witness(net, pair[0], pair[1], "plain")


def is_proof_net(net: Net, budget: int = DEFAULT_SWITCHING_BUDGET) -> bool:
    """Switching-acyclic, no flat conclusion, and strongly indexable."""
    if net.has_flat_conclusion():
        return False
    if not is_dr_correct(net, budget):
        return False
    return is_strongly_indexable(net) is True


def _require_l3_preconditions(net: Net, budget: int) -> None:
    if net.has_flat_conclusion():
        raise PreconditionError("net has a flat-labelled conclusion")
    if not is_dr_correct(net, budget):
        raise PreconditionError("net is not switching-acyclic")


def is_l3_indexing_route(
    net: Net, budget: int = DEFAULT_SWITCHING_BUDGET, check_preconditions: bool = True
) -> bool | BalanceWitness:
    """Membership via existence of an exponential indexing with equal
    conclusion indexes (component-wise, translations being free)."""
    if check_preconditions:
        _require_l3_preconditions(net, budget)
    result = solve_indexing(net, "exponential")
    if isinstance(result, BalanceWitness):
        return result
    ok, pair = conclusion_groups_equal(net, result)
    if ok:
        return True
    return conclusion_path_witness(net, pair[0], pair[1], "exponential")


def is_l3_geometric(
    net: Net, budget: int = DEFAULT_SWITCHING_BUDGET, check_preconditions: bool = True
) -> bool | BalanceWitness:
    """Membership via balance: every cycle of the par-closure must cancel
    its exponential and paragraph crossings."""
    if check_preconditions:
        _require_l3_preconditions(net, budget)
    closed = parr_closure(net)
    result = solve_indexing(closed, "exponential")
    if isinstance(result, BalanceWitness):
        return result
    return True


def default_exponential_quasi_indexing(net: Net, allow_cuts: bool = False) -> Indexing:
    """Assign zero to all conclusions and increment upward across the
    paragraph, of-course and why-not links.  Defined on cut-free nets; with
    allow_cuts, cut premises are also anchored at zero, which joins the
    per-part defaults of a composition."""
    if net.cut_links() and not allow_cuts:
        raise PreconditionError("net has cuts; the default quasi-indexing is defined on cut-free nets")
    assignment: dict[str, int] = {}

    def value(e: str) -> int:
        chain: list[str] = []
        cur = e
        while cur not in assignment:
            chain.append(cur)
            cons = net.consumer(cur)
            if cons is None or net.links[cons].kind == "cut":
                assignment[cur] = 0
                break
            link = net.links[cons]
            bump = 1 if link.kind in ("ofcourse", "whynot", "paragraph") else 0
            below = link.conclusions[0]
            if below in assignment:
                assignment[cur] = assignment[below] + bump
                break
            cur = below
        # resolve the collected chain top-down
        for eid in reversed(chain):
            if eid in assignment:
                continue
            cons = net.consumer(eid)
            link = net.links[cons]  # type: ignore[arg-type]
            bump = 1 if link.kind in ("ofcourse", "whynot", "paragraph") else 0
            assignment[eid] = assignment[link.conclusions[0]] + bump
        return assignment[e]

    for e in net.edges:
        value(e)
    return Indexing(assignment, "quasi")


def balance(net: Net, elements: list[str], exponential: bool = False, closed: bool = True) -> int:
    """Balance of a path or cycle given as an alternating edge/link
    sequence e0, l0, e1, l1, ...; paragraph crossings count (plus the
    exponential links when asked)."""
    if not elements:
        return 0
    edges = elements[0::2]
    links = elements[1::2]
    if closed and len(links) == len(edges) - 1:
        raise ValueError("a closed sequence must end with the link back to its first edge")
    counted = {"paragraph"} | ({"ofcourse", "whynot"} if exponential else set())
    total = 0
    pairs = len(links)
    for i in range(pairs):
        a = edges[i]
        b = edges[(i + 1) % len(edges)]
        lid = links[i]
        link = net.links[lid]
        if a not in link.premises + link.conclusions or b not in link.premises + link.conclusions:
            raise ValueError(f"edges {a}, {b} are not both incident to link {lid}")
        if link.kind not in counted:
            continue
        if a in link.premises and b in link.conclusions:
            total += 1
        elif a in link.conclusions and b in link.premises:
            total -= 1
    return abs(total)


__all__ = [
    "Flavor",
    "DEFAULT_SWITCHING_BUDGET",
    "BudgetExceeded",
    "PreconditionError",
    "Switching",
    "CyclicSwitching",
    "count_switchings",
    "enumerate_switchings",
    "contained_net",
    "find_cyclic_switching",
    "is_dr_correct",
    "is_dr_net",
    "Indexing",
    "BalanceWitness",
    "solve_indexing",
    "check_indexing",
    "indexing_components",
    "conclusion_groups_equal",
    "conclusion_path_witness",
    "shift_indexing",
    "is_strongly_indexable",
    "is_proof_net",
    "is_l3_indexing_route",
    "is_l3_geometric",
    "default_exponential_quasi_indexing",
    "balance",
]
