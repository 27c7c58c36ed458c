import pytest

from stratnet.formula import Atom, Paragraph, parse_formula
from stratnet.net import nets_equal
from stratnet import builder
from stratnet.builder import GenParams
from stratnet.correctness import (
    BalanceWitness,
    BudgetExceeded,
    PreconditionError,
    balance,
    check_indexing,
    count_switchings,
    default_exponential_quasi_indexing,
    enumerate_switchings,
    find_cyclic_switching,
    indexing_components,
    is_dr_correct,
    is_l3_geometric,
    is_l3_indexing_route,
    is_proof_net,
    is_strongly_indexable,
    shift_indexing,
    solve_indexing,
)

from conftest import brute_force_indexable, make_unstable_membership_net, tensor_loop_net

X = Atom("X")


# -- switchings -----------------------------------------------------------------


def test_switching_count_trivial():
    n = builder.tensor_rule(builder.ax(X), 1, builder.ax(X), 0)
    assert count_switchings(n) == 1
    assert len(list(enumerate_switchings(n))) == 1


def test_switching_count_one_par():
    n = builder.par_rule(builder.ax(X), 0, 1)
    assert count_switchings(n) == 2
    assert len(list(enumerate_switchings(n))) == 2


def test_switching_count_par_and_binary_whynot():
    par = builder.par_rule(builder.ax(X), 0, 1)
    two_flats = builder.mix(
        builder.flat_rule(builder.ax(X), 0), builder.flat_rule(builder.ax(X), 0)
    )
    wn = builder.whynot_rule(two_flats, [0, 2])
    n = builder.mix(par, wn)
    assert count_switchings(n) == 4
    switchings = list(enumerate_switchings(n))
    assert len(switchings) == 4
    # the product formula agrees with explicit enumeration of choices
    chosen = {tuple(sorted(s.chosen.items())) for s in switchings}
    assert len(chosen) == 4


def test_switching_budget():
    nets = [builder.par_rule(builder.ax(X), 0, 1) for _ in range(5)]
    n = nets[0]
    for extra in nets[1:]:
        n = builder.mix(n, extra)
    assert count_switchings(n) == 32
    with pytest.raises(BudgetExceeded):
        list(enumerate_switchings(n, budget=31))


# -- switching acyclicity ----------------------------------------------------------


def test_axiom_dr_correct():
    assert is_dr_correct(builder.ax(X))


def test_tensor_loop_not_dr():
    bad = tensor_loop_net()
    witness = find_cyclic_switching(bad)
    assert witness is not None
    assert set(witness.cycle_edges) == set(bad.links["looplink"].premises)


def test_builder_outputs_dr():
    for seed in range(40):
        assert is_dr_correct(builder.random_net(seed, GenParams(target_size=12, cut_bias=0.3)))


def test_dr_recurses_into_boxes():
    # a tensor loop inside a box is only visible at depth one
    bad = tensor_loop_net()
    flat = builder.flat_rule(builder.ax(X), 0)
    m = builder.mix(bad, flat)
    m = builder.flat_rule(m, 2)
    pr = builder.promotion(m, 0)  # principal = the loop tensor conclusion
    witness = find_cyclic_switching(pr)
    assert witness is not None and witness.depth_context != ()


# -- indexings ----------------------------------------------------------------------


def test_plain_indexing_paragraph_free_all_zero():
    n = builder.random_net(5, GenParams(target_size=12, paragraph_bias=0, exponential_bias=0))
    result = solve_indexing(n, "plain")
    assert not isinstance(result, BalanceWitness)
    assert set(result.assignment.values()) == {0}


def test_shift_implication_has_no_plain_indexing(par_shift_net):
    # the closure of the shift implication has an unbalanced cycle
    result = solve_indexing(par_shift_net, "plain")
    assert isinstance(result, BalanceWitness)
    assert result.balance == 1
    assert balance(par_shift_net, list(result.elements)) == 1


def test_shift_source_net_exponential_indexing(shift_source_net):
    result = solve_indexing(shift_source_net, "exponential")
    assert not isinstance(result, BalanceWitness)
    assert check_indexing(shift_source_net, result)


def test_solver_soundness_on_corpus():
    for seed in range(60):
        n = builder.random_net(seed, GenParams(target_size=14, cut_bias=0.2))
        for flavor in ("plain", "exponential"):
            result = solve_indexing(n, flavor)
            if isinstance(result, BalanceWitness):
                weights = flavor == "exponential"
                assert balance(n, list(result.elements), exponential=weights) == result.balance > 0
            else:
                assert check_indexing(n, result)


def test_solver_vs_brute_force_small_nets():
    checked = 0
    for seed in range(200):
        n = builder.random_net(seed, GenParams(target_size=6, cut_bias=0.2))
        if len(n.edges) > 12:
            continue
        checked += 1
        for flavor in ("plain", "exponential"):
            fast = not isinstance(solve_indexing(n, flavor), BalanceWitness)
            assert fast == brute_force_indexable(n, flavor), (seed, flavor)
    assert checked >= 50


def test_strongly_indexable_examples(shift_source_net, par_shift_net, shift_par_net):
    assert is_strongly_indexable(builder.ax(X)) is True
    w = is_strongly_indexable(shift_source_net)
    assert isinstance(w, BalanceWitness) and not w.closed and w.balance == 1
    assert is_strongly_indexable(par_shift_net) is not True
    assert is_strongly_indexable(shift_par_net) is not True
    from stratnet.rewrite import shift_net

    assert is_strongly_indexable(shift_net(shift_source_net)) is True


def test_strongly_indexable_rejects_flat_conclusion():
    n = builder.flat_rule(builder.ax(X), 0)
    with pytest.raises(PreconditionError):
        is_strongly_indexable(n)


def test_cross_component_conclusions_are_fine():
    # two identity nets of different level shape, joined by mix: strongly
    # indexable thanks to per-component translation
    a = builder.paragraph_rule(builder.paragraph_rule(builder.ax(X), 0), 1)
    m = builder.mix(a, builder.ax(X))
    assert is_strongly_indexable(m) is True


def test_proof_net_examples(par_shift_net):
    id_par = builder.ax(Paragraph(X))
    assert is_proof_net(id_par)
    assert not is_proof_net(par_shift_net)
    for seed in range(25):
        n = builder.random_net(seed, GenParams(target_size=12, paragraph_bias=0, cut_bias=0.2))
        assert is_proof_net(n)


def test_shift_indexing_examples(shift_source_net):
    ix = solve_indexing(shift_source_net, "exponential")
    comp = indexing_components(shift_source_net, "exponential")
    reps = sorted(set(comp.values()))
    same = shift_indexing(ix, shift_source_net, {})
    assert same.assignment == ix.assignment
    moved = shift_indexing(ix, shift_source_net, {reps[0]: 5})
    assert check_indexing(shift_source_net, moved)
    with pytest.raises(KeyError):
        shift_indexing(ix, shift_source_net, {"nope": 1})


def test_shift_indexing_two_components():
    m = builder.mix(builder.ax(X), builder.paragraph_rule(builder.ax(X), 1))
    ix = solve_indexing(m, "plain")
    comp = indexing_components(m, "plain")
    reps = sorted(set(comp.values()))
    assert len(reps) == 2
    moved = shift_indexing(ix, m, {reps[1]: 5})
    assert check_indexing(m, moved)
    assert any(moved.assignment[e] != ix.assignment[e] for e in m.edges)


# -- level membership -----------------------------------------------------------------


def test_dereliction_not_in_l3(dereliction_net):
    assert is_l3_indexing_route(dereliction_net) is not True
    w = is_l3_geometric(dereliction_net)
    assert isinstance(w, BalanceWitness)
    assert balance(dereliction_net, list(w.elements), exponential=True) == w.balance > 0


def test_shift_source_net_in_l3(shift_source_net):
    assert is_l3_indexing_route(shift_source_net) is True
    assert is_l3_geometric(shift_source_net) is True


def test_unstable_membership_example():
    left, normal_form = make_unstable_membership_net()
    assert is_dr_correct(left)
    assert is_l3_indexing_route(left, check_preconditions=False) is not True
    from stratnet.rewrite import normalize

    nf, _ = normalize(left)
    assert nets_equal(nf, normal_form)
    assert is_l3_indexing_route(nf, check_preconditions=False) is True


def test_l3_routes_agree_on_corpus():
    for seed in range(80):
        n = builder.random_net(seed, GenParams(target_size=14, cut_bias=0.2, exponential_bias=0.4))
        v1 = is_l3_indexing_route(n, check_preconditions=False) is True
        v2 = is_l3_geometric(n, check_preconditions=False) is True
        assert v1 == v2, seed


def test_l3_preconditions():
    with pytest.raises(PreconditionError):
        is_l3_indexing_route(tensor_loop_net())
    with pytest.raises(PreconditionError):
        is_l3_geometric(builder.flat_rule(builder.ax(X), 0))


def test_exponential_free_paragraph_free_in_l3():
    n = builder.random_net(9, GenParams(target_size=10, paragraph_bias=0, exponential_bias=0))
    assert is_l3_geometric(n, check_preconditions=False) is True


# -- quasi-indexings --------------------------------------------------------------------


def test_default_quasi_axiom():
    q = default_exponential_quasi_indexing(builder.ax(X))
    assert set(q.assignment.values()) == {0}


def test_default_quasi_dereliction_mismatch(dereliction_net):
    q = default_exponential_quasi_indexing(dereliction_net)
    ax_id = next(l for l, lk in dereliction_net.links.items() if lk.kind == "ax")
    c1, c2 = dereliction_net.links[ax_id].conclusions
    assert sorted((q.assignment[c1], q.assignment[c2])) == [0, 1]
    assert check_indexing(dereliction_net, q)


def test_default_quasi_requires_cut_free():
    n = builder.cut_rule(builder.ax(X), 1, builder.ax(X), 0)
    with pytest.raises(PreconditionError):
        default_exponential_quasi_indexing(n)
    q = default_exponential_quasi_indexing(n, allow_cuts=True)
    assert check_indexing(n, q)


def test_default_quasi_is_exponential_indexing_for_members():
    from stratnet.interactive import identity_net
    from stratnet.formula import bullet_formula

    for text in ("X", "(X * Y)", "!X", "?(X * X)", "#X"):
        net = identity_net(bullet_formula(parse_formula(text)))
        q = default_exponential_quasi_indexing(net)
        # axiom constraints hold too, so it is a genuine exponential indexing
        for lid, lk in net.links.items():
            if lk.kind == "ax":
                a, b = lk.conclusions
                assert q.assignment[a] == q.assignment[b]
        assert all(q.assignment[e] == 0 for e in net.conclusions)
        assert all(v >= 0 for v in q.assignment.values())


# -- balance ------------------------------------------------------------------------------


def test_balance_empty():
    assert balance(builder.ax(X), []) == 0


def test_balance_up_then_down():
    n = builder.paragraph_rule(builder.ax(X), 1)
    pid = next(l for l, lk in n.links.items() if lk.kind == "paragraph")
    prem = n.links[pid].premises[0]
    conc = n.links[pid].conclusions[0]
    walk = [conc, pid, prem, pid, conc]
    assert balance(n, walk, closed=False) == 0


def test_balance_shift_cycle(par_shift_net):
    w = solve_indexing(par_shift_net, "plain")
    assert isinstance(w, BalanceWitness)
    assert balance(par_shift_net, list(w.elements)) == 1


def test_balance_rejects_non_incident():
    n = builder.paragraph_rule(builder.ax(X), 1)
    pid = next(l for l, lk in n.links.items() if lk.kind == "paragraph")
    other = [e for e in n.edges if e not in n.links[pid].premises + n.links[pid].conclusions]
    with pytest.raises(ValueError):
        balance(n, [other[0], pid, other[0]], closed=False)
