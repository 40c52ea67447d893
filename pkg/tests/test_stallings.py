"""Folded core graphs: membership, rank, index, and the subgroup operations.

The hand-checked fixtures:

* H = ⟨a², b, aba⁻¹⟩ is the even-a-exponent subgroup of F₂ — index 2,
  rank 3 (Nielsen-Schreier: 2·(2−1)+1), core on 2 vertices with all 4
  generator edges present at each (it is a covering of the rose).
* ⟨a, bab⟩ folds to a 3-vertex core that is not a covering (infinite index).
* ⟨a²⟩ ∩ ⟨a³⟩ = ⟨a⁶⟩ (intersection of subgroups of ⟨a⟩ ≅ Z).
* b·⟨a⟩·b⁻¹ = ⟨bab⁻¹⟩.
"""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chabauty_lab.errors import (
    ContextMismatchError,
    MalformedInputError,
)
from chabauty_lab.stallings import (
    HomSubgroup,
    Target,
    conjugate_subgroup,
    from_generators,
    hall_completion,
    intersect,
    join,
    kernel,
    trivial_subgroup,
    whole_group,
)
from chabauty_lab.words import ball, free_group, invert, multiply, parse_word, reduce_word

F2 = free_group(2)
F3 = free_group(3)


def w(text):
    return parse_word(text, F2)


def gens(*texts):
    return from_generators(F2, [w(t) for t in texts])


# ── folding and structure ────────────────────────────────────────────────────


def test_even_subgroup_core():
    H = gens("aa", "b", "abA")
    assert H.nverts == 2
    assert H.nedges == 4
    assert H.rank() == 3
    assert H.index() == 2
    assert H.is_covering()


def test_even_subgroup_membership_is_exponent_parity():
    H = gens("aa", "b", "abA")
    for v in ball(F2, 4):
        a_exp = sum(1 for x in v if x == 1) - sum(1 for x in v if x == -1)
        assert H.contains(v) == (a_exp % 2 == 0)


def test_infinite_index_core():
    H = gens("a", "bab")
    assert H.nverts == 3
    assert H.rank() == 2
    assert H.index() is None
    assert not H.is_covering()


def test_trivial_and_whole():
    T = trivial_subgroup(F2)
    assert T.nverts == 1 and T.rank() == 0 and T.index() is None
    assert T.is_trivial()
    W = whole_group(F2)
    assert W.nverts == 1 and W.rank() == 2 and W.index() == 1
    assert W.contains(w("abAB"))


def test_generators_always_contained():
    H = gens("abab", "bbA")
    assert H.contains(w("abab"))
    assert H.contains(w("bbA"))
    assert H.contains(multiply(w("abab"), invert(w("bbA"))))


def test_basis_regenerates_same_subgroup():
    H = gens("aab", "aba", "abb")
    K = from_generators(F2, H.basis())
    assert K == H
    assert len(H.basis()) == H.rank()


def test_identity_generators_ignored():
    assert gens("", "a") == gens("a")


def test_context_mismatch_rejected():
    H = gens("a")
    K = from_generators(F3, [parse_word("c", F3)])
    with pytest.raises(ContextMismatchError):
        intersect(H, K)


letters = st.sampled_from([1, -1, 2, -2])
gen_words = st.lists(letters, min_size=1, max_size=6).map(reduce_word)
gen_lists = st.lists(gen_words, min_size=1, max_size=4)


@given(gen_lists, st.randoms(use_true_random=False))
@settings(max_examples=50, deadline=None)
def test_folding_is_order_and_duplicate_independent(gs, rng):
    """The folded core is canonical: permuting the generating set, repeating
    a generator, or replacing one by its inverse never changes the graph."""
    H = from_generators(F2, gs)
    shuffled = list(gs)
    rng.shuffle(shuffled)
    assert from_generators(F2, shuffled) == H
    assert from_generators(F2, shuffled + [gs[0]]) == H
    assert from_generators(F2, [invert(gs[0])] + list(gs[1:])) == H


@given(gen_lists)
@settings(max_examples=40, deadline=None)
def test_membership_closed_under_product_and_inverse(gs):
    H = from_generators(F2, gs)
    x = multiply(gs[0], invert(gs[-1]))
    assert H.contains(x)
    assert H.contains(invert(x))


# ── operations ───────────────────────────────────────────────────────────────


def test_intersection_of_powers():
    M = intersect(gens("aa"), gens("aaa"))
    assert M.basis() == [w("aaaaaa")]


def test_intersection_with_whole_group():
    H = gens("ab", "ba")
    assert intersect(H, whole_group(F2)) == H


def test_join_recovers_whole_group():
    assert join(gens("a"), gens("b")) == whole_group(F2)


def test_conjugate_cyclic():
    C = conjugate_subgroup(gens("a"), w("b"))
    assert C.basis() == [w("baB")]


def test_conjugate_round_trip():
    H = gens("ab", "aab")
    g = w("bbA")
    K = conjugate_subgroup(conjugate_subgroup(H, g), invert(g))
    assert K == H


def test_conjugation_preserves_index_and_rank():
    H = gens("aa", "b", "abA")
    C = conjugate_subgroup(H, w("ab"))
    assert C.index() == H.index()
    assert C.rank() == H.rank()
    # normality fails in general, but membership must transport:
    # x ∈ H  ⟺  g·x·g⁻¹ ∈ g·H·g⁻¹
    for x in ("aa", "b", "ba"):
        moved = multiply(multiply(w("ab"), w(x)), invert(w("ab")))
        assert C.contains(moved) == H.contains(w(x))


# ── completions ──────────────────────────────────────────────────────────────


def test_completion_of_trivial_subgroup():
    K = hall_completion(trivial_subgroup(F2), 3)
    assert K.is_covering()
    assert K.index() == K.nverts == 53
    # nothing of length <= 3 sneaks in: the trace is still trivial
    assert all(not K.contains(v) for v in ball(F2, 3) if v != ())
    assert K.shortest_nontrivial() == (1, 1, 1, 1, -2, -1, -1)


def test_completion_contains_subgroup_and_agrees_on_ball():
    H = gens("a", "bab")
    K = hall_completion(H, 4)
    assert K.index() is not None
    for x in H.basis():
        assert K.contains(x)
    for v in ball(F2, 4):
        assert K.contains(v) == H.contains(v)


def test_completion_of_covering_is_itself():
    H = gens("aa", "b", "abA")
    assert hall_completion(H, 5) == H


# ── homomorphism-defined subgroups ───────────────────────────────────────────


def test_kernel_to_z_membership_is_zero_exponent_sum():
    ker = kernel(F2, Target("lattice", 1), [(1,), (0,)])
    assert ker.contains(w("b"))
    assert ker.contains(w("abA"))
    assert not ker.contains(w("a"))
    # infinitely many cosets: aⁿ all land in different ones
    keys = {ker.coset_key(parse_word("a" * n, F2)) for n in range(10)}
    assert len(keys) == 10


def test_preimage_of_even_lattice():
    from chabauty_lab.zdlattice import hnf_from_generators

    even = HomSubgroup(
        F2,
        Target("lattice", 1),
        [(1,), (0,)],
        hnf_from_generators(1, [(2,)]),
    )
    assert even.contains(w("aa")) and even.contains(w("b"))
    assert not even.contains(w("a"))
    assert len({even.coset_key(v) for v in ball(F2, 3)}) == 2


def test_cyclic_target_kernel():
    # a, b both map to 1 mod 3: membership is exponent-sum ≡ 0 (mod 3)
    ker = kernel(F2, Target("cyclic", 3), [1, 1])
    assert ker.contains(w("aaa")) and ker.contains(w("aB"))
    assert not ker.contains(w("ab"))
    assert len({ker.coset_key(v) for v in ball(F2, 3)}) == 3


def test_permutation_target_kernel():
    # a ↦ the swap, b ↦ identity on two points; accepted = {identity}
    sub = HomSubgroup(F2, Target("permutation", 2), [(1, 0), (0, 1)], [(0, 1)])
    assert sub.contains(w("aa")) and sub.contains(w("b"))
    assert not sub.contains(w("a"))
    assert len({sub.coset_key(v) for v in ball(F2, 3)}) == 2


def test_permutation_accepted_must_be_subgroup():
    with pytest.raises(MalformedInputError):
        HomSubgroup(
            F2,
            Target("permutation", 2),
            [(1, 0), (0, 1)],
            [(1, 0)],  # not closed: misses the identity
        )


def test_hom_subgroup_trace_matches_direct_check():
    ker = kernel(F2, Target("cyclic", 2), [1, 0])
    for v in ball(F2, 4):
        a_exp = sum(1 for x in v if x == 1) - sum(1 for x in v if x == -1)
        assert ker.contains(v) == (a_exp % 2 == 0)
