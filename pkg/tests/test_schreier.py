"""Schreier coset geometry: balls, ends estimates, fibers, the line probe.

The kernel of F₂ → Z (a ↦ 1, b ↦ 0) has coset space Z with a acting as the
shift and b trivially, so its Schreier graph is the line with a b-loop at
every vertex: ball of radius 10 = 21 vertices (cosets −10..10), 41 edges
(20 a-edges + 21 b-loops), 2 frontier vertices, 2 ends, probe verdict "Z".
"""

import pytest

from chabauty_lab.errors import BudgetExceededError, MalformedInputError
from chabauty_lab.schreier import (
    build,
    ends_estimate,
    fiber_diameters,
    intermediate_bound,
    qi_constants,
    qi_to_line_probe,
)
from chabauty_lab.stallings import (
    HomSubgroup,
    Target,
    from_generators,
    kernel,
    trivial_subgroup,
)
from chabauty_lab.words import free_group, parse_word
from chabauty_lab.zdlattice import hnf_from_generators

F2 = free_group(2)
KER = kernel(F2, Target("lattice", 1), [(1,), (0,)])


def w(t):
    return parse_word(t, F2)


def gens(*texts):
    return from_generators(F2, [w(t) for t in texts])


# ── the ball construction ────────────────────────────────────────────────────


def test_kernel_ball_is_a_line_segment():
    S = build(KER, 10)
    assert S.nverts == 21
    assert S.nedges == 41
    assert len(S.frontier) == 2
    assert not S.is_complete()
    assert S.sphere_sizes() == [1] + [2] * 10


def test_finite_index_ball_completes():
    S = build(gens("aa", "b", "abA"), 10)
    assert S.is_complete()
    assert S.nverts == 2  # index 2: the whole coset space fits


def test_trivial_subgroup_ball_is_the_group_ball():
    S = build(trivial_subgroup(F2), 3)
    assert S.sphere_sizes() == [1, 4, 12, 36]
    assert S.nverts == 53


def test_generator_sets_match_between_hom_and_graph_subgroups():
    """The same subgroup given two ways yields the same coset geometry."""
    graph_even = gens("aa", "b", "abA")
    hom_even = HomSubgroup(
        F2, Target("cyclic", 2), [1, 0], [0]
    )
    S1, S2 = build(graph_even, 6), build(hom_even, 6)
    assert S1.nverts == S2.nverts
    assert S1.sphere_sizes() == S2.sphere_sizes()


def test_build_respects_vertex_budget():
    with pytest.raises(BudgetExceededError):
        build(trivial_subgroup(F2), 12)  # 3^12 ≫ the default vertex cap


# ── ends estimates ───────────────────────────────────────────────────────────


def test_two_ends_for_the_line():
    S = build(KER, 10)
    assert [ends_estimate(S, r) for r in (2, 3, 4)] == [2, 2, 2]


def test_zero_ends_for_finite_coset_space():
    S = build(gens("aa", "b", "abA"), 8)
    assert ends_estimate(S, 2) == 0


def test_many_ends_for_the_trivial_subgroup():
    S = build(trivial_subgroup(F2), 5)
    # outside B(1), each sphere-2 vertex roots its own component: 4·3 = 12,
    # and the count keeps growing with r — the tree has infinitely many ends
    assert ends_estimate(S, 1) == 12
    assert ends_estimate(S, 2) == 36


def test_ends_estimate_needs_interior_radius():
    S = build(KER, 6)
    with pytest.raises(MalformedInputError):
        ends_estimate(S, 6)  # nothing outside the ball to count


# ── the line probe ───────────────────────────────────────────────────────────


def test_probe_recognizes_the_line():
    p = qi_to_line_probe(KER, 10)
    assert p.verdict == "Z"
    assert not p.complete
    assert p.sphere_sizes[1:] == (2,) * 10


def test_probe_rejects_finite_and_branching():
    assert qi_to_line_probe(gens("aa", "b", "abA"), 8).verdict == "neither"
    assert qi_to_line_probe(trivial_subgroup(F2), 8).verdict == "neither"


# ── fiber diameters ──────────────────────────────────────────────────────────


def test_fibers_of_even_subgroup_in_whole_group():
    H = gens("aa", "b", "abA")
    reports = fiber_diameters(H, from_generators(F2, [w("a"), w("b")]), 6)
    assert len(reports) == 1
    r = reports[0]
    assert r.representative == ()
    assert r.size == 2
    assert r.diameter == 1
    assert not r.lower_bound


def test_fibers_of_kernel_over_index_two_preimage():
    even_preimage = HomSubgroup(
        F2,
        Target("lattice", 1),
        [(1,), (0,)],
        hnf_from_generators(1, [(2,)]),
    )
    reports = fiber_diameters(KER, even_preimage, 10)
    stats = [(r.size, r.diameter, r.lower_bound) for r in reports]
    assert stats == [(11, 20, True), (10, 18, False)]


def test_fiber_containment_enforced():
    with pytest.raises(MalformedInputError):
        fiber_diameters(gens("a"), gens("b"), 6)  # a ∉ ⟨b⟩: not intermediate


# ── quasi-isometry arithmetic ────────────────────────────────────────────────


def test_qi_constant_propagation():
    assert qi_constants(1) == (7, 14)
    assert qi_constants(2) == (34, 68)
    assert qi_constants(3) == (99, 198)


def test_intermediate_bound_for_f2():
    assert intermediate_bound(F2, 1) == 32
