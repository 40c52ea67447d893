"""Subgroups of Z^d in Hermite normal form, erasing ranks, and witness chains.

A subgroup of Z^d is a sublattice; its canonical form here is the row-style
Hermite normal form: pivots positive, each pivot strictly to the right of the
one above, entries above a pivot reduced into [0, pivot). Two generating sets
span the same subgroup iff they produce identical HNFs, so equality is
structural.

The erasing rank implemented by :func:`cb_erasing_rank` is the closed form
d − rk(H) + 1: each witness-sequence step approximates a rank-k subgroup by
rank-(k+1) subgroups that agree with it on a large ball, and after d − k
nested steps the approximants have finite index, which is an isolation
certificate. Witness chains materialize exactly that descent and certify the
convergence of every level; the matching *upper* bound (no deeper nesting
survives) is a statement about all possible approximating sequences and has
no finite certificate, so it is not machine-checked here.

All arithmetic is exact (Python ints); numpy is used only to test membership
of whole L¹ balls at once.
"""

from __future__ import annotations

import dataclasses
import itertools
from typing import Iterable, Sequence

import numpy as np

from .budgets import Budget, current
from .errors import BudgetExceededError, MalformedInputError
from .words import GroupContext, Vector, iter_lattice_ball, lattice


class HnfSubgroup:
    """Sublattice of Z^d in canonical (row) Hermite normal form."""

    __slots__ = ("dim", "rows", "pivots", "_hash")

    def __init__(self, dim: int, rows: tuple[tuple[int, ...], ...]):
        # `rows` must already be in HNF; use hnf_from_generators to build.
        self.dim = dim
        self.rows = rows
        self.pivots = tuple(
            (i, next(j for j, x in enumerate(r) if x != 0)) for i, r in enumerate(rows)
        )
        self._hash = hash((dim, rows))

    @property
    def ctx(self) -> GroupContext:
        return lattice(self.dim)

    @property
    def rank(self) -> int:
        return len(self.rows)

    def contains(self, v: Sequence[int]) -> bool:
        if len(v) != self.dim:
            raise MalformedInputError(f"vector of length {len(v)} in Z^{self.dim}")
        v = list(v)
        for i, c in self.pivots:
            row = self.rows[i]
            p = row[c]
            if v[c] % p != 0:
                return False
            q = v[c] // p
            if q:
                for j in range(self.dim):
                    v[j] -= q * row[j]
        return all(x == 0 for x in v)

    def residue(self, v: Sequence[int]) -> Vector:
        """Canonical representative of the coset v + H: each pivot coordinate
        floors into [0, pivot); rows below a pivot have a zero there, so later
        steps never disturb earlier ones and the result is unique per coset."""
        if len(v) != self.dim:
            raise MalformedInputError(f"vector of length {len(v)} in Z^{self.dim}")
        v = list(v)
        for i, c in self.pivots:
            row = self.rows[i]
            q = v[c] // row[c]
            if q:
                for j in range(self.dim):
                    v[j] -= q * row[j]
        return tuple(v)

    def batch_contains(self, points: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (N, d) int array."""
        v = points.astype(np.int64).copy()
        good = np.ones(len(v), dtype=bool)
        for i, c in self.pivots:
            row = np.asarray(self.rows[i], dtype=np.int64)
            p = int(row[c])
            rem = v[:, c] % p
            good &= rem == 0
            q = (v[:, c] - rem) // p
            v -= q[:, None] * row[None, :]
        good &= np.all(v == 0, axis=1)
        return good

    def index(self) -> int | None:
        """[Z^d : H] = product of pivots when full-rank, else None (infinite)."""
        if self.rank != self.dim:
            return None
        out = 1
        for i, c in self.pivots:
            out *= self.rows[i][c]
        return out

    def matrix(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    def __eq__(self, other):
        if not isinstance(other, HnfSubgroup):
            return NotImplemented
        return self.dim == other.dim and self.rows == other.rows

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"HnfSubgroup(Z^{self.dim}, rows={self.rows})"


def hnf_from_generators(dim: int, generators: Iterable[Sequence[int]]) -> HnfSubgroup:
    """Canonical HNF of the sublattice spanned by the generators.

    Exact integer elimination: for each column in order, combine all rows with
    a nonzero entry there by the Euclidean algorithm until one carries the
    gcd; rows left with a zero entry move on to later columns. A final pass
    reduces above-pivot entries into [0, pivot).
    """
    if not isinstance(dim, int) or dim < 1:
        raise MalformedInputError("dimension must be a positive integer")
    rows: list[list[int]] = []
    for g in generators:
        g = [int(x) for x in g]
        if len(g) != dim:
            raise MalformedInputError(
                f"generator {g} has length {len(g)}, expected {dim}"
            )
        if any(x != 0 for x in g):
            rows.append(g)
    hnf_rows: list[list[int]] = []
    for col in range(dim):
        carrier: list[int] | None = None
        rest: list[list[int]] = []
        for r in rows:
            if r[col] == 0:
                rest.append(r)
                continue
            if carrier is None:
                carrier = r
                continue
            a, b = carrier, r
            while b[col] != 0:
                q = a[col] // b[col]
                a = [x - q * y for x, y in zip(a, b)]
                a, b = b, a
            carrier = a
            if any(b):
                rest.append(b)
        rows = rest
        if carrier is not None:
            if carrier[col] < 0:
                carrier = [-x for x in carrier]
            hnf_rows.append(carrier)
    # reduce above-pivot entries; pivot rows below have zeros at earlier
    # pivot columns, so top-to-bottom passes never undo earlier reductions
    for i in range(len(hnf_rows)):
        c = next(j for j, x in enumerate(hnf_rows[i]) if x != 0)
        p = hnf_rows[i][c]
        for k in range(i):
            q = hnf_rows[k][c] // p
            if q:
                hnf_rows[k] = [x - q * y for x, y in zip(hnf_rows[k], hnf_rows[i])]
    return HnfSubgroup(dim, tuple(tuple(r) for r in hnf_rows))


def membership(H: HnfSubgroup, v: Sequence[int]) -> bool:
    return H.contains(v)


def index(H: HnfSubgroup) -> int | None:
    return H.index()


def cb_erasing_rank(H: HnfSubgroup) -> int:
    """d − rk(H) + 1: how many erasing steps the subgroup survives in the
    Chabauty space of Z^d (trivial subgroup: d + 1; finite index: 1)."""
    return H.dim - H.rank + 1


# ── ball membership (vectorized) ─────────────────────────────────────────────

_BALL_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _ball_array(dim: int, radius: int) -> np.ndarray:
    key = (dim, radius)
    if key not in _BALL_CACHE:
        pts = list(iter_lattice_ball(dim, radius))
        _BALL_CACHE[key] = np.array(pts, dtype=np.int64).reshape(len(pts), dim)
    return _BALL_CACHE[key]


def members_in_ball(H: HnfSubgroup, radius: int) -> list[Vector]:
    """H ∩ {|v|₁ ≤ radius} in canonical (norm, lex) order."""
    if H.rank == 0:
        return [tuple([0] * H.dim)]
    pts = _ball_array(H.dim, radius)
    mask = H.batch_contains(pts)
    return [tuple(int(x) for x in row) for row in pts[mask]]


# ── witness sequences and chains ─────────────────────────────────────────────


@dataclasses.dataclass(frozen=True)
class WitnessSequence:
    """Direction vector v ∉ span(H) and the terms H_m = ⟨H, m·v⟩."""

    subgroup: HnfSubgroup
    direction: Vector
    terms: tuple[HnfSubgroup, ...]


def witness_direction(H: HnfSubgroup) -> Vector:
    """First standard basis vector outside the rational span of H."""
    if H.rank >= H.dim:
        raise MalformedInputError("subgroup already has full rank")
    for c in range(H.dim):
        e = [0] * H.dim
        e[c] = 1
        if hnf_from_generators(H.dim, list(H.rows) + [e]).rank > H.rank:
            return tuple(e)
    raise AssertionError("rank-deficient lattice must miss a basis direction")


def witness_sequence(
    H: HnfSubgroup, radius_max: int = 8, budget: Budget | None = None
) -> WitnessSequence:
    """Strictly larger subgroups H_m = ⟨H, m·v⟩ converging to H.

    Agreement with H on the radius-`radius_max` ball is *not* monotone in m
    (an m-multiple of v can conspire with H to produce a short new vector),
    so the sequence length is chosen adaptively: scan m upward and stop at
    the first m ≥ 2·radius_max + 2 that ends three consecutive terms agreeing
    with H on the ball. Only finitely many m disagree, so the scan terminates.
    """
    v = witness_direction(H)
    base = set(members_in_ball(H, radius_max))
    terms: list[HnfSubgroup] = []
    good_streak = 0
    m = 0
    cap = 500
    while True:
        m += 1
        if m > cap:
            raise BudgetExceededError("witness sequence length", cap)
        H_m = hnf_from_generators(H.dim, list(H.rows) + [tuple(m * x for x in v)])
        terms.append(H_m)
        if set(members_in_ball(H_m, radius_max)) == base:
            good_streak += 1
        else:
            good_streak = 0
        if m >= 2 * radius_max + 2 and good_streak >= 3:
            return WitnessSequence(H, v, tuple(terms))


@dataclasses.dataclass(frozen=True)
class WitnessNode:
    """Node of a witness chain: the subgroup, its approximating sequence, and
    the recursively-expanded children (a suffix of the terms)."""

    subgroup: HnfSubgroup
    sequence: WitnessSequence | None
    expanded: tuple["WitnessNode", ...]

    def leaves(self) -> list["WitnessNode"]:
        if not self.expanded:
            return [self]
        out = []
        for child in self.expanded:
            out.extend(child.leaves())
        return out


def witness_chain(
    H: HnfSubgroup,
    depth: int,
    radius_max: int = 8,
    branch: int = 2,
    budget: Budget | None = None,
) -> WitnessNode:
    """Nested witness sequences to the given depth.

    Every node of positive depth computes its full witness sequence (so every
    level's convergence can be certified), but only the last `branch` terms
    are expanded recursively — expanding all of them is exponentially
    redundant. Fully-expanded leaves have rank rk(H) + depth.
    """
    if depth < 0 or depth > H.dim - H.rank:
        raise MalformedInputError(
            f"depth must lie in [0, {H.dim - H.rank}] for this subgroup"
        )
    if depth == 0:
        return WitnessNode(H, None, ())
    seq = witness_sequence(H, radius_max, budget)
    children = seq.terms[-branch:]
    expanded = tuple(
        witness_chain(child, depth - 1, radius_max, branch, budget)
        for child in children
    )
    return WitnessNode(H, seq, expanded)


# ── enumeration ──────────────────────────────────────────────────────────────


def enumerate_by_index(
    dim: int, max_index: int, budget: Budget | None = None
) -> dict[int, list[HnfSubgroup]]:
    """All finite-index subgroups of Z^d with index ≤ max_index, by index.

    Finite-index sublattices correspond bijectively to full-rank HNF matrices:
    positive diagonal (p_0..p_{d-1}) with Π p_i = index, and above-diagonal
    entries in column i ranging over [0, p_i).
    """
    budget = budget or current()
    if dim > budget.lattice_dim_cap:
        raise BudgetExceededError("lattice dimension", budget.lattice_dim_cap, dim)
    if max_index > budget.lattice_index_cap:
        raise BudgetExceededError("lattice index", budget.lattice_index_cap, max_index)
    if dim < 1 or max_index < 1:
        raise MalformedInputError("dimension and index bound must be >= 1")
    out: dict[int, list[HnfSubgroup]] = {n: [] for n in range(1, max_index + 1)}
    for diag in _diagonals(dim, max_index):
        idx = 1
        for p in diag:
            idx *= p
        column_choices = [
            itertools.product(range(diag[i]), repeat=i) for i in range(dim)
        ]
        for cols in itertools.product(*column_choices):
            rows = [[0] * dim for _ in range(dim)]
            for i in range(dim):
                rows[i][i] = diag[i]
                for k, e in enumerate(cols[i]):
                    rows[k][i] = e
            out[idx].append(HnfSubgroup(dim, tuple(tuple(r) for r in rows)))
    for lst in out.values():
        lst.sort(key=lambda h: h.rows)
    return out


def _diagonals(dim: int, max_index: int) -> Iterable[tuple[int, ...]]:
    if dim == 0:
        yield ()
        return
    for p in range(1, max_index + 1):
        for rest in _diagonals(dim - 1, max_index // p):
            yield (p,) + rest
