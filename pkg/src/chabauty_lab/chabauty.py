"""Truncated Chabauty metric: traces, clopen sets, distances, certification.

The Chabauty topology on the space of subgroups of a countable group is
metrized (after fixing the word/norm filtration) by d(H, K) = 2^(−ρ) where ρ
is the smallest radius at which the traces H ∩ B(ρ) and K ∩ B(ρ) differ. At
any finite working radius L the computable quantity is the truncation: either
the exact distance (when a distinguishing element of size ≤ L exists) or the
upper bound 2^(−(L+1)).

A subgroup here is anything *membership-capable*: it carries a `.ctx`
(ambient group) and a `.contains(element)` predicate. Stallings graphs,
homomorphism-defined subgroups, and HNF sublattices all qualify, so the same
trace/distance/certification code serves F_r and Z^d.

Convergence certificates are decidable statements about finite sequences:
`certify_convergence` reports the least index from which every term agrees
with the limit on the radius-L ball, or a concrete distinguishing witness if
the agreement never settles.
"""

from __future__ import annotations

import dataclasses
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from . import zdlattice
from .budgets import Budget, current
from .errors import MalformedInputError
from .words import (
    GroupContext,
    Word,
    iter_ball,
    iter_lattice_ball,
    require_same_context,
    sorted_words,
)


def _norm(ctx: GroupContext, x) -> int:
    """Word length in free groups, L¹ norm in lattices."""
    if ctx.kind == "free":
        return len(x)
    return sum(abs(c) for c in x)


def _iter_ball(ctx: GroupContext, radius: int, budget: Budget | None):
    if ctx.kind == "free":
        return iter_ball(ctx.rank, radius, budget)
    return iter_lattice_ball(ctx.rank, radius)


# ── traces ───────────────────────────────────────────────────────────────────


@dataclasses.dataclass(frozen=True)
class SubgroupTrace:
    """H ∩ B(radius), members in canonical order.

    Contains the identity and is closed under inversion within the ball —
    both inherited from H being a subgroup and balls being symmetric.
    """

    ctx: GroupContext
    radius: int
    members: tuple

    def __contains__(self, x) -> bool:
        return x in set(self.members)

    def member_set(self) -> frozenset:
        return frozenset(self.members)


def trace(H, radius: int, budget: Budget | None = None) -> SubgroupTrace:
    """The trace of a membership-capable subgroup on the ball of the given
    radius, in canonical enumeration order."""
    if radius < 0:
        raise MalformedInputError("radius must be >= 0")
    ctx = H.ctx
    if ctx.kind == "lattice" and isinstance(H, zdlattice.HnfSubgroup):
        members = tuple(zdlattice.members_in_ball(H, radius))
    else:
        members = tuple(x for x in _iter_ball(ctx, radius, budget) if H.contains(x))
    return SubgroupTrace(ctx, radius, members)


# ── clopen sets ──────────────────────────────────────────────────────────────


@dataclasses.dataclass(frozen=True)
class ClopenSet:
    """𝒱(ins, outs) = {H : ins ⊆ H, H ∩ outs = ∅} — the basic clopen sets of
    the Chabauty topology.

    `trivially_empty` flags ins ∩ outs ≠ ∅ at construction (no subgroup can
    both contain and avoid an element). The set can be empty for deeper
    reasons — exactly when ⟨ins⟩ meets outs — which `in_clopen` callers check
    where it matters (task validation).
    """

    ins: tuple
    outs: tuple
    trivially_empty: bool = dataclasses.field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "ins", tuple(self.ins))
        object.__setattr__(self, "outs", tuple(self.outs))
        object.__setattr__(
            self, "trivially_empty", bool(set(self.ins) & set(self.outs))
        )


def clopen(ins: Iterable[Word], outs: Iterable[Word]) -> ClopenSet:
    """Canonicalized clopen set over words (sorted, deduplicated)."""
    return ClopenSet(
        tuple(sorted_words(set(ins))), tuple(sorted_words(set(outs)))
    )


def in_clopen(H, V: ClopenSet) -> bool:
    return all(H.contains(w) for w in V.ins) and not any(
        H.contains(w) for w in V.outs
    )


# ── truncated distance ───────────────────────────────────────────────────────


@dataclasses.dataclass(frozen=True)
class DistanceBound:
    """Result of a radius-L distance computation. kind = "exact": the traces
    first differ at `exponent` ≤ L and `witness` is the canonically-least
    distinguishing element; kind = "at_most": agreement through L, so the
    distance is ≤ 2^(−(L+1)) = 2^(−exponent)."""

    kind: str
    exponent: int
    witness: object | None = None

    @property
    def value(self) -> Fraction:
        return Fraction(1, 2 ** self.exponent)

    def is_exact(self) -> bool:
        return self.kind == "exact"


def distance_up_to(H, K, radius: int, budget: Budget | None = None) -> DistanceBound:
    """Truncated Chabauty distance: scan the ball in canonical order for the
    first element on which H and K disagree."""
    require_same_context(H.ctx, K.ctx, "distance")
    for x in _iter_ball(H.ctx, radius, budget):
        if H.contains(x) != K.contains(x):
            return DistanceBound("exact", _norm(H.ctx, x), x)
    return DistanceBound("at_most", radius + 1)


# ── convergence certification ────────────────────────────────────────────────


@dataclasses.dataclass(frozen=True)
class Certification:
    """kind = "certified": every term from n0 (1-based) on agrees with the
    limit on B(radius). kind = "fails": the disagreement reaches the final
    term; `index` is the start of that final disagreeing run and `witness`
    the canonically-least element distinguishing term `index` from the limit."""

    kind: str
    radius: int
    n0: int | None = None
    witness: object | None = None
    index: int | None = None

    def certified(self) -> bool:
        return self.kind == "certified"


def certify_convergence(
    seq: Sequence,
    limit,
    radius: int,
    budget: Budget | None = None,
    trace_fn: Callable[..., SubgroupTrace] | None = None,
) -> Certification:
    """Decide, on the radius-L ball, whether the tail of `seq` has settled on
    the limit."""
    if not seq:
        raise MalformedInputError("cannot certify an empty sequence")
    tf = trace_fn or (lambda S, r: trace(S, r, budget))
    target_trace = tf(limit, radius)
    target = target_trace.member_set()
    agree = []
    term_traces = []
    for term in seq:
        t = tf(term, radius)
        term_traces.append(t)
        agree.append(t.member_set() == target)
    if agree[-1]:
        n0 = len(seq)
        while n0 > 1 and agree[n0 - 2]:
            n0 -= 1
        return Certification("certified", radius, n0=n0)
    start = len(seq)
    while start > 1 and not agree[start - 2]:
        start -= 1
    witness = _least_difference(term_traces[start - 1], target_trace)
    return Certification("fails", radius, witness=witness, index=start)


def _least_difference(t1: SubgroupTrace, t2: SubgroupTrace):
    """Canonically-least element of the symmetric difference of two traces.

    Both member lists come in the same canonical enumeration order, so the
    least element of the difference is whichever list first leaves the common
    prefix: everything before the first one-sided element is shared, and the
    list reaching its first one-sided element at the smaller index holds the
    overall least one.
    """
    s1, s2 = t1.member_set(), t2.member_set()
    i1 = next((i for i, x in enumerate(t1.members) if x not in s2), None)
    i2 = next((i for i, x in enumerate(t2.members) if x not in s1), None)
    if i1 is None:
        return t2.members[i2]
    if i2 is None:
        return t1.members[i1]
    return t1.members[i1] if i1 <= i2 else t2.members[i2]


def nontrivial_flag(seq: Sequence, limit) -> list[bool]:
    """Per-term flag: term ≠ limit as subgroups.

    Both sides are canonical-form objects, so same-type comparison is exact
    structural inequality; mixed representations compare as distinct.
    """
    return [term != limit for term in seq]
