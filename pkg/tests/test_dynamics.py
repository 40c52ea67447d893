"""Dynamics on subgroup space: nonisolation witnesses, free-product
certificates, transitivity moves, variety limits, Folner transfer.

Frozen fixtures:

* the two-pair demo task (move ⟨a⟩ into 𝒱({ab},{ba}) and ⟨b⟩ into
  𝒱({ba},{ab}) with one conjugator) is solved by the 35th candidate aB;
* the deliberately obstructed task refutes all 193 in-budget candidates,
  the best of them passing 4 of 6 checks;
* the interval Folner sets B_i = {a^j : |j| ≤ i} have exact a-ratio
  2/(2i+1) and b-ratio 0.
"""

from fractions import Fraction

import pytest

from chabauty_lab.chabauty import certify_convergence, clopen, distance_up_to, in_clopen
from chabauty_lab.dynamics import (
    folner_transfer_check,
    free_product_certify,
    interval_folner_demo,
    make_task,
    multi_transitivity_move,
    nonisolation_witness,
    obstruction_task,
    variety_limit_sequence,
)
from chabauty_lab.errors import (
    MalformedInputError,
    SearchFailure,
    TaskInvalidError,
)
from chabauty_lab.stallings import from_generators, kernel, Target, whole_group
from chabauty_lab.words import free_group, invert, multiply, parse_word

F2 = free_group(2)


def w(t):
    return parse_word(t, F2)


def gens(*texts):
    return from_generators(F2, [w(t) for t in texts])


# ── nonisolation witnesses ───────────────────────────────────────────────────


def test_nonisolation_terms_squeeze_the_limit():
    H = gens("a")
    witness = nonisolation_witness(H, 4)
    assert len(witness.terms) == 4
    for t in witness.terms:
        Hn = t.term
        assert Hn != H
        assert Hn.index() is None
        for x in H.basis():
            assert Hn.contains(x)
        assert Hn.contains(t.adjoined) and not H.contains(t.adjoined)
        # agreement through radius n is the defining property
        assert distance_up_to(H, Hn, t.n).kind == "at_most"


def test_nonisolation_first_adjoined_is_canonical():
    witness = nonisolation_witness(gens("a"), 3)
    assert witness.terms[0].adjoined == w("baB")


def test_nonisolation_certifies_as_convergent():
    H = gens("a")
    witness = nonisolation_witness(H, 6)
    cert = certify_convergence([t.term for t in witness.terms], H, 6)
    assert cert.certified()


def test_nonisolation_rejects_finite_index():
    with pytest.raises(MalformedInputError):
        nonisolation_witness(gens("aa", "b", "abA"), 4)
    with pytest.raises(MalformedInputError):
        nonisolation_witness(whole_group(F2), 4)


# ── free-product certificates ────────────────────────────────────────────────


def test_free_product_of_the_generators():
    cert = free_product_certify(gens("a"), gens("b"))
    assert cert.certified()
    assert cert.ranks == (1, 1, 2)


def test_free_product_refuted_by_common_power():
    cert = free_product_certify(gens("aa"), gens("aaa"))
    assert not cert.certified()
    assert cert.reason == "nontrivial-intersection"
    assert cert.witness == w("aaaaaa")


def test_free_product_of_conjugates():
    cert = free_product_certify(gens("a"), gens("baB"))
    assert cert.certified()


def test_free_product_rejects_trivial_factor():
    from chabauty_lab.stallings import trivial_subgroup

    with pytest.raises(MalformedInputError):
        free_product_certify(trivial_subgroup(F2), gens("a"))


# ── transitivity tasks and moves ─────────────────────────────────────────────


def _paired_task():
    return make_task(
        F2,
        [
            (
                clopen([w("a")], [w("b")]),
                clopen([w("ab")], [w("ba")]),
                gens("a"),
                gens("ab"),
            ),
            (
                clopen([w("b")], [w("a")]),
                clopen([w("ba")], [w("ab")]),
                gens("b"),
                gens("ba"),
            ),
        ],
    )


def test_paired_move_frozen_outcome():
    cert = multi_transitivity_move(_paired_task())
    assert cert.candidate == w("aB")
    assert cert.conjugator == w("bA")
    assert cert.candidates_tried == 35
    assert cert.reverified
    assert len(cert.pairs) == 2


def test_move_certificate_checks_replay():
    """Re-run the clopen checks by hand: Δ_i ∈ source_i and w⁻¹·Δ_i·w ∈ target_i."""
    task = _paired_task()
    cert = multi_transitivity_move(task)
    from chabauty_lab.stallings import conjugate_subgroup

    for pc, V_src, V_tgt in zip(cert.pairs, task.sources, task.targets):
        assert in_clopen(pc.delta, V_src)
        assert in_clopen(conjugate_subgroup(pc.delta, cert.conjugator), V_tgt)
        assert pc.freeness in ("certified", "absorbed")
        assert pc.source_check and pc.target_check


def test_identity_move_when_source_equals_target():
    V = clopen([w("a")], [w("b")])
    task = make_task(F2, [(V, V, gens("a"), gens("a"))])
    cert = multi_transitivity_move(task)
    assert cert.candidate == ()
    assert cert.candidates_tried == 1
    assert cert.pairs[0].freeness == "absorbed"  # Δ = ⟨a⟩ absorbs both factors


def test_empty_clopen_set_invalidates_task():
    V_bad = clopen([w("a")], [w("aa")])  # any subgroup with a also has a²
    with pytest.raises(TaskInvalidError, match="empty"):
        make_task(F2, [(V_bad, V_bad, gens("a"), gens("a"))])


def test_finite_index_witness_invalidates_task():
    V = clopen([w("a")], [])
    with pytest.raises(TaskInvalidError, match="infinite index"):
        make_task(F2, [(V, V, whole_group(F2), whole_group(F2))])


def test_obstruction_task_produces_verified_failure():
    task = obstruction_task()
    with pytest.raises(SearchFailure) as exc_info:
        multi_transitivity_move(task)
    progress = exc_info.value.progress
    assert progress["candidates_tried"] == 193
    assert progress["best_checks_passed"] == 4
    assert progress["checks_per_candidate"] == 6


# ── variety limits ───────────────────────────────────────────────────────────


def test_variety_terms_have_growing_rank_but_converge():
    L = gens("ab")
    seq = variety_limit_sequence(L, [3, 4, 5, 6])
    assert [T.rank() for T in seq.terms] == [2, 2, 2, 2]
    # each term lives in a bigger ambient group and adds one fresh generator
    assert [T.ctx.rank for T in seq.terms] == [3, 4, 5, 6]
    cert = seq.certify(4)
    assert cert.certified()
    assert cert.n0 == 3


def test_variety_indices_must_be_fresh_and_increasing():
    L = gens("ab")
    with pytest.raises(MalformedInputError):
        variety_limit_sequence(L, [2, 3])  # 2 does not exceed the support rank
    with pytest.raises(MalformedInputError):
        variety_limit_sequence(L, [5, 4])


# ── Folner transfer ──────────────────────────────────────────────────────────


def test_interval_folner_ratios_are_exact():
    H0, sets, elements, tolerances = interval_folner_demo([2, 3, 4, 5])
    report = folner_transfer_check(H0, sets, elements, tolerances)
    assert report.ok()
    first = report.sets[0]  # i = 2: B has 5 cosets
    ratios = dict(first.ratios)
    assert ratios[(1,)] == Fraction(2, 5)
    assert ratios[(2,)] == Fraction(0)
    assert first.tolerance == Fraction(1, 2)


def test_folner_collision_detected():
    H0, _, elements, _ = interval_folner_demo([2])
    # b and the identity represent the same coset of ker(a-exponent... no:
    # H0 = ker(F₂ → Z, a↦1, b↦0) so b ∈ H0 and [b] = [1] collide
    report = folner_transfer_check(H0, [[w("b"), w("")]], elements)
    assert not report.ok()
    assert not report.sets[0].distinct
    assert report.sets[0].collision is not None


def test_folner_tolerance_violation_flags_set():
    H0, sets, elements, _ = interval_folner_demo([2])
    # demand an absurd tolerance: 2/5 > 1/100
    report = folner_transfer_check(H0, sets, elements, [Fraction(1, 100)])
    assert not report.ok()
    assert not report.sets[0].ok


def test_folner_demo_rejects_tiny_intervals():
    with pytest.raises(MalformedInputError):
        interval_folner_demo([1])
