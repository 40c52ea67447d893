"""Stallings folded automata for finitely generated subgroups of free groups,
plus homomorphism-defined subgroups (kernels and preimages).

A subgroup H ≤ F_r is stored as its core graph: a finite connected digraph
with edges labelled by generators 1..r, a basepoint, no two equally-labelled
edges sharing a source or a target (folded), and no degree-1 vertex other than
possibly the basepoint (core). Reduced words act by walking edges (positive
letter: forward, negative: backward); w ∈ H iff the walk exists and closes at
the basepoint. Folded graphs admit no backtracking ambiguity, so membership is
a single deterministic walk.

Graphs are canonicalized at construction: vertices are renumbered by BFS from
the basepoint, scanning letters in the canonical order (gen 1 out, gen 1 in,
gen 2 out, ...). Equal subgroups therefore have identical representations, and
equality/hashing are structural.

Everything here is exact and deterministic; resource caps come from
:mod:`chabauty_lab.budgets`.
"""

from __future__ import annotations

import heapq
import math
from typing import Iterable, Sequence

from . import zdlattice
from .budgets import Budget, current
from .errors import (
    BudgetExceededError,
    ContextMismatchError,
    MalformedInputError,
)
from .words import (
    GroupContext,
    IDENTITY,
    Word,
    check_word,
    free_group,
    invert,
    iter_ball,
    multiply,
    reduce_word,
    require_same_context,
    word_key,
)

BASEPOINT = 0


class StallingsGraph:
    """Immutable, canonical folded core graph. Build via :func:`from_generators`
    and the other module functions, not directly."""

    __slots__ = ("ctx", "nverts", "succ", "pred", "_hash")

    def __init__(self, ctx: GroupContext, nverts: int, succ: tuple[dict, ...]):
        self.ctx = ctx
        self.nverts = nverts
        self.succ = succ
        self.pred = tuple({v: u for u, v in s.items()} for s in succ)
        self._hash = hash(
            (ctx, nverts, tuple(tuple(sorted(s.items())) for s in succ))
        )

    # membership ---------------------------------------------------------

    def walk(self, start: int, w: Word) -> int | None:
        """Endpoint of the path spelling w from `start`, or None if it leaves
        the graph."""
        v = start
        for x in w:
            table = self.succ[x - 1] if x > 0 else self.pred[-x - 1]
            v = table.get(v)
            if v is None:
                return None
        return v

    def contains(self, w: Word) -> bool:
        return self.walk(BASEPOINT, w) == BASEPOINT

    # structure ----------------------------------------------------------

    @property
    def nedges(self) -> int:
        return sum(len(s) for s in self.succ)

    def is_covering(self) -> bool:
        """True iff every vertex has an in- and out-edge for every generator,
        i.e. the graph is a finite covering of the rose."""
        return all(
            len(s) == self.nverts and len(p) == self.nverts
            for s, p in zip(self.succ, self.pred)
        )

    def index(self) -> int | None:
        """[F_r : H] — the vertex count when the graph is a covering, else
        None (infinite index)."""
        return self.nverts if self.is_covering() else None

    def rank(self) -> int:
        """Free rank of H: edges − vertices + 1 (the graph is connected)."""
        return self.nedges - self.nverts + 1

    def is_trivial(self) -> bool:
        return self.nedges == 0

    def spanning_tree(self) -> tuple[list[Word], list[tuple[int, int, int]]]:
        """Canonical BFS spanning tree.

        Returns (path, nontree): path[v] = the tree word from the basepoint to
        v, and nontree = the non-tree edges (u, gen, v) sorted by (gen, u).
        """
        path: list[Word | None] = [None] * self.nverts
        path[BASEPOINT] = IDENTITY
        order = [BASEPOINT]
        tree_edges: set[tuple[int, int]] = set()
        qi = 0
        while qi < len(order):
            u = order[qi]
            qi += 1
            for g in range(self.ctx.rank):
                v = self.succ[g].get(u)
                if v is not None and path[v] is None:
                    path[v] = path[u] + (g + 1,)
                    tree_edges.add((u, g))
                    order.append(v)
                v = self.pred[g].get(u)
                if v is not None and path[v] is None:
                    path[v] = path[u] + (-(g + 1),)
                    tree_edges.add((v, g))
                    order.append(v)
        nontree = [
            (u, g, v)
            for g in range(self.ctx.rank)
            for u, v in sorted(self.succ[g].items())
            if (u, g) not in tree_edges
        ]
        nontree.sort(key=lambda e: (e[1], e[0]))
        return [p for p in path], nontree  # type: ignore[list-item]

    def basis(self) -> list[Word]:
        """Free basis of H from the canonical spanning tree: one word
        path(u)·g·path(v)⁻¹ per non-tree edge u --g--> v."""
        path, nontree = self.spanning_tree()
        out = []
        for u, g, v in nontree:
            out.append(multiply(multiply(path[u], (g + 1,)), invert(path[v])))
        return sorted(out, key=word_key)

    def shortest_nontrivial(self) -> Word | None:
        """Shortest nontrivial element of H, or None for the trivial subgroup.

        BFS over non-backtracking walk states (vertex, incoming letter): in a
        folded graph these are exactly the reduced words readable from the
        basepoint, so the first closed walk found is the canonically-least
        nontrivial element.
        """
        if self.is_trivial():
            return None
        letters = [x for i in range(1, self.ctx.rank + 1) for x in (i, -i)]
        start = (BASEPOINT, 0)
        parents: dict[tuple[int, int], tuple[tuple[int, int], int]] = {start: (start, 0)}
        queue = [start]
        while queue:
            nxt = []
            for state in queue:
                v, last = state
                for x in letters:
                    if x == -last:
                        continue
                    table = self.succ[x - 1] if x > 0 else self.pred[-x - 1]
                    w = table.get(v)
                    if w is None:
                        continue
                    if w == BASEPOINT:
                        # reconstruct: word to `state`, then x
                        letters_rev = [x]
                        cur = state
                        while cur != start:
                            prev, lx = parents[cur]
                            letters_rev.append(lx)
                            cur = prev
                        return tuple(reversed(letters_rev))
                    ns = (w, x)
                    if ns not in parents:
                        parents[ns] = (state, x)
                        nxt.append(ns)
            queue = nxt
        return None

    # comparison / export --------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, StallingsGraph):
            return NotImplemented
        return (
            self.ctx == other.ctx
            and self.nverts == other.nverts
            and self.succ == other.succ
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return (
            f"StallingsGraph(rank {self.ctx.rank}, {self.nverts} vertices, "
            f"{self.nedges} edges)"
        )

    def to_dot(self) -> str:
        """Graphviz form; generator i is labelled with its letter."""
        from .words import _LOWER

        lines = ["digraph stallings {", '  rankdir=LR;', "  0 [shape=doublecircle];"]
        for v in range(1, self.nverts):
            lines.append(f"  {v} [shape=circle];")
        for g in range(self.ctx.rank):
            label = _LOWER[g] if g < 26 else f"x{g + 1}"
            for u, v in sorted(self.succ[g].items()):
                lines.append(f'  {u} -> {v} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# ── construction pipeline ────────────────────────────────────────────────────


class _Builder:
    """Mutable multigraph with union-find vertices; fold/trim/canonicalize."""

    def __init__(self, ctx: GroupContext, budget: Budget):
        self.ctx = ctx
        self.budget = budget
        self.parent: list[int] = []
        self.edges: set[tuple[int, int, int]] = set()  # (u, gen0, v)
        self.new_vertex()  # basepoint = 0

    def new_vertex(self) -> int:
        v = len(self.parent)
        if v >= self.budget.vertex_cap:
            raise BudgetExceededError("graph vertices", self.budget.vertex_cap)
        self.parent.append(v)
        return v

    def find(self, v: int) -> int:
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the smaller root so the basepoint (0) always survives
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def add_word_loop(self, w: Word) -> None:
        """Attach a loop at the basepoint spelling the (reduced) word w."""
        if not w:
            return
        prev = 0
        for k, x in enumerate(w):
            nxt = 0 if k == len(w) - 1 else self.new_vertex()
            if x > 0:
                self.edges.add((prev, x - 1, nxt))
            else:
                self.edges.add((nxt, -x - 1, prev))
            prev = nxt

    def add_graph(self, other: StallingsGraph) -> None:
        """Wedge another graph on at the basepoint (basepoints identified)."""
        offset = len(self.parent)
        for _ in range(other.nverts - 1):
            self.new_vertex()

        def mapped(v: int) -> int:
            return 0 if v == BASEPOINT else offset + v - 1

        for g in range(other.ctx.rank):
            for u, v in other.succ[g].items():
                self.edges.add((mapped(u), g, mapped(v)))

    def fold(self) -> None:
        """Identify targets (sources) of equally-labelled edges sharing a
        source (target) until none remain — Stallings folding."""
        changed = True
        while changed:
            changed = False
            self.edges = {(self.find(u), g, self.find(v)) for u, g, v in self.edges}
            by_src: dict[tuple[int, int], int] = {}
            by_dst: dict[tuple[int, int], int] = {}
            for u, g, v in self.edges:
                w = by_src.get((u, g))
                if w is None:
                    by_src[(u, g)] = v
                elif w != v:
                    self.union(v, w)
                    changed = True
                w = by_dst.get((g, v))
                if w is None:
                    by_dst[(g, v)] = u
                elif w != u:
                    self.union(u, w)
                    changed = True

    def finalize(self) -> StallingsGraph:
        """Reachable part from the basepoint, trimmed to the core, canonical."""
        base = self.find(0)
        edges = {(self.find(u), g, self.find(v)) for u, g, v in self.edges}
        adj: dict[int, set[tuple[int, int, int]]] = {base: set()}
        for u, g, v in edges:
            adj.setdefault(u, set()).add((u, g, v))
            adj.setdefault(v, set()).add((u, g, v))
        # reachable component
        seen = {base}
        stack = [base]
        while stack:
            u = stack.pop()
            for e in adj[u]:
                for w in (e[0], e[2]):
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
        # iteratively trim degree<=1 vertices (loops contribute 2)
        degree = {
            v: sum(2 if e[0] == e[2] else 1 for e in adj.get(v, ()))
            for v in seen
        }
        removable = [v for v in seen if v != base and degree[v] <= 1]
        dead: set[int] = set()
        while removable:
            v = removable.pop()
            if v in dead:
                continue
            dead.add(v)
            for e in list(adj.get(v, ())):
                u, g, w = e
                other = w if u == v else u
                adj[u].discard(e)
                adj[w].discard(e)
                if other != v and other not in dead:
                    degree[other] -= 1
                    if other != base and degree[other] <= 1:
                        removable.append(other)
        live = seen - dead
        succ = [dict() for _ in range(self.ctx.rank)]
        pred = [dict() for _ in range(self.ctx.rank)]
        for u, g, v in edges:
            if u in live and v in live:
                succ[g][u] = v
                pred[g][v] = u
        return _canonical(self.ctx, live, succ, pred, base)


def _canonical(
    ctx: GroupContext,
    live: Iterable[int],
    succ: Sequence[dict],
    pred: Sequence[dict],
    base: int,
) -> StallingsGraph:
    """Renumber by BFS from the basepoint in canonical letter order."""
    number = {base: 0}
    order = [base]
    qi = 0
    while qi < len(order):
        u = order[qi]
        qi += 1
        for g in range(ctx.rank):
            for table in (succ[g], pred[g]):
                v = table.get(u)
                if v is not None and v not in number:
                    number[v] = len(order)
                    order.append(v)
    if len(number) != len(set(live)):
        raise AssertionError("core graph must be connected")
    new_succ = tuple(
        {number[u]: number[v] for u, v in succ[g].items()} for g in range(ctx.rank)
    )
    return StallingsGraph(ctx, len(number), new_succ)


# ── public constructors and operations ───────────────────────────────────────


def trivial_subgroup(ctx: GroupContext) -> StallingsGraph:
    return StallingsGraph(ctx, 1, tuple({} for _ in range(ctx.rank)))


def whole_group(ctx: GroupContext) -> StallingsGraph:
    return StallingsGraph(ctx, 1, tuple({0: 0} for _ in range(ctx.rank)))


def from_generators(
    ctx: GroupContext,
    generators: Iterable[Word],
    budget: Budget | None = None,
) -> StallingsGraph:
    """Fold the wedge of generator loops into the canonical core graph of
    ⟨generators⟩. Order and redundancy of the input do not affect the result."""
    if ctx.kind != "free":
        raise ContextMismatchError("Stallings graphs live over free groups")
    budget = budget or current()
    builder = _Builder(ctx, budget)
    for w in generators:
        builder.add_word_loop(check_word(reduce_word(w), ctx))
    builder.fold()
    return builder.finalize()


def join(
    H: StallingsGraph,
    other: StallingsGraph | Iterable[Word],
    budget: Budget | None = None,
) -> StallingsGraph:
    """⟨H ∪ other⟩: wedge the graphs (or extra generator loops) and refold."""
    budget = budget or current()
    builder = _Builder(H.ctx, budget)
    builder.add_graph(H)
    if isinstance(other, StallingsGraph):
        require_same_context(H.ctx, other.ctx, "join")
        builder.add_graph(other)
    else:
        for w in other:
            builder.add_word_loop(check_word(reduce_word(w), H.ctx))
    builder.fold()
    return builder.finalize()


def intersect(
    H: StallingsGraph, K: StallingsGraph, budget: Budget | None = None
) -> StallingsGraph:
    """H ∩ K via the fibre product: vertices are pairs (u, v) reachable from
    (basepoint, basepoint) along edges present in both graphs. The product of
    folded graphs is folded, so only trimming is needed afterwards."""
    require_same_context(H.ctx, K.ctx, "intersect")
    budget = budget or current()
    r = H.ctx.rank
    start = (BASEPOINT, BASEPOINT)
    number = {start: 0}
    order = [start]
    succ: list[dict] = [dict() for _ in range(r)]
    pred: list[dict] = [dict() for _ in range(r)]
    qi = 0
    while qi < len(order):
        u = order[qi]
        qi += 1
        for g in range(r):
            for table_h, table_k, out in (
                (H.succ[g], K.succ[g], True),
                (H.pred[g], K.pred[g], False),
            ):
                a = table_h.get(u[0])
                b = table_k.get(u[1])
                if a is None or b is None:
                    continue
                v = (a, b)
                if v not in number:
                    if len(number) >= budget.vertex_cap:
                        raise BudgetExceededError("graph vertices", budget.vertex_cap)
                    number[v] = len(order)
                    order.append(v)
                if out:
                    succ[g][number[u]] = number[v]
                    pred[g][number[v]] = number[u]
                else:
                    succ[g][number[v]] = number[u]
                    pred[g][number[u]] = number[v]
    builder = _Builder(H.ctx, budget)
    builder.parent = list(range(len(number)))
    builder.edges = {
        (u, g, v) for g in range(r) for u, v in succ[g].items()
    }
    return builder.finalize()


def conjugate_subgroup(
    H: StallingsGraph, g: Word, budget: Budget | None = None
) -> StallingsGraph:
    """g·H·g⁻¹: hang a tail spelling g⁻¹ off the old basepoint, move the
    basepoint to the free end of the tail, and refold.

    (A loop at the new basepoint spells g·h·g⁻¹ iff it runs down the tail,
    around a loop of H, and back.)
    """
    budget = budget or current()
    g = check_word(reduce_word(g), H.ctx)
    if not g or H.is_trivial():
        return H
    if H.is_covering():
        # Conjugating a finite-index subgroup only moves the basepoint: the
        # covering graph itself is unchanged, and the walk is total.  A loop
        # w at the vertex reached by g^-1 means g^-1 w g closes at the old
        # basepoint, i.e. w lies in g H g^-1.
        base = H.walk(BASEPOINT, invert(g))
        return _canonical(H.ctx, range(H.nverts), H.succ, H.pred, base)
    builder = _Builder(H.ctx, budget)
    # tail: new basepoint --g--> old basepoint (old vertices shifted by +len(g))
    # builder vertex 0 is the new basepoint; create tail interior vertices.
    tail = [0] + [builder.new_vertex() for _ in range(len(g) - 1)]
    old_base = builder.new_vertex()
    for _ in range(H.nverts - 1):
        builder.new_vertex()
    chain = tail + [old_base]
    for k, x in enumerate(g):
        u, v = chain[k], chain[k + 1]
        if x > 0:
            builder.edges.add((u, x - 1, v))
        else:
            builder.edges.add((v, -x - 1, u))
    offset = old_base

    def mapped(v: int) -> int:
        return offset + v

    for gen in range(H.ctx.rank):
        for u, v in H.succ[gen].items():
            builder.edges.add((mapped(u), gen, mapped(v)))
    builder.fold()
    return builder.finalize()


# ── Hall completions ─────────────────────────────────────────────────────────


def hall_completion(
    H: StallingsGraph, agreement_radius: int, budget: Budget | None = None
) -> StallingsGraph:
    """A finite-index K ≥ H whose trace agrees with H up to `agreement_radius`.

    Construction: take the core of H together with its Schreier ball of radius
    L (grown by BFS, creating hanging-tree vertices for missing edges), then
    complete each generator's partial permutation by matching deficient
    sources to deficient targets in canonical vertex order. Every deficient
    vertex lies at Schreier distance ≥ L from the basepoint, and a reduced
    basepoint loop of length ℓ ≤ L stays within distance ⌊ℓ/2⌋ < L, so no loop
    of length ≤ L uses a completion edge: the ball of K equals the ball of H.

    For finite-index H the graph is already a covering and is returned as-is.
    """
    budget = budget or current()
    L = agreement_radius
    if L < 0:
        raise MalformedInputError("agreement radius must be >= 0")
    if H.is_covering():
        return H
    for attempt in range(3):
        K = _complete(H, L + attempt, budget)
        if _traces_agree(H, K, L, budget):
            return K
    raise AssertionError("completion failed to preserve the trace")  # unreachable


def _complete(H: StallingsGraph, L: int, budget: Budget) -> StallingsGraph:
    r = H.ctx.rank
    succ = [dict(s) for s in H.succ]
    pred = [dict(p) for p in H.pred]
    nverts = H.nverts
    # Schreier distances of the existing core vertices.
    dist = {BASEPOINT: 0}
    frontier = [BASEPOINT]
    while frontier:
        nxt = []
        for u in frontier:
            for g in range(r):
                for table in (succ[g], pred[g]):
                    v = table.get(u)
                    if v is not None and v not in dist:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
        frontier = nxt
    # Grow the Schreier ball: expand every vertex closer than L. Hanging-tree
    # vertices cannot shorten core distances, so distances never need updates.
    heap = [(d, v) for v, d in dist.items()]
    heapq.heapify(heap)
    while heap:
        d, u = heapq.heappop(heap)
        if d >= L:
            continue
        for g in range(r):
            if u not in succ[g]:
                if nverts >= budget.vertex_cap:
                    raise BudgetExceededError("completion vertices", budget.vertex_cap)
                v = nverts
                nverts += 1
                succ[g][u] = v
                pred[g][v] = u
                dist[v] = d + 1
                heapq.heappush(heap, (d + 1, v))
            if u not in pred[g]:
                if nverts >= budget.vertex_cap:
                    raise BudgetExceededError("completion vertices", budget.vertex_cap)
                v = nverts
                nverts += 1
                pred[g][u] = v
                succ[g][v] = u
                dist[v] = d + 1
                heapq.heappush(heap, (d + 1, v))
    # Complete each generator's partial injection into a permutation.
    for g in range(r):
        sources = [v for v in range(nverts) if v not in succ[g]]
        targets = [v for v in range(nverts) if v not in pred[g]]
        for u, v in zip(sources, targets):
            succ[g][u] = v
            pred[g][v] = u
    return _canonical(H.ctx, range(nverts), succ, pred, BASEPOINT)


def _traces_agree(
    H: StallingsGraph, K: StallingsGraph, L: int, budget: Budget
) -> bool:
    ball_budget = budget if L <= budget.ball_radius_cap else budget.replace(
        ball_radius_cap=L
    )
    for w in iter_ball(H.ctx.rank, L, ball_budget):
        if H.contains(w) != K.contains(w):
            return False
    return True


# ── homomorphism-defined subgroups ───────────────────────────────────────────


class Target:
    """Target of a homomorphism from F_r: Z^k, Z/m, or a permutation group."""

    __slots__ = ("kind", "param")

    def __init__(self, kind: str, param: int):
        if kind not in ("lattice", "cyclic", "permutation"):
            raise MalformedInputError(f"unknown target kind {kind!r}")
        if not isinstance(param, int) or param < 1:
            raise MalformedInputError("target parameter must be a positive integer")
        self.kind = kind
        self.param = param

    def __eq__(self, other):
        return (
            isinstance(other, Target)
            and self.kind == other.kind
            and self.param == other.param
        )

    def __hash__(self):
        return hash((self.kind, self.param))

    def __repr__(self):
        return {
            "lattice": f"Z^{self.param}",
            "cyclic": f"Z/{self.param}",
            "permutation": f"Sym({self.param})",
        }[self.kind]


def _perm_mul(p: tuple, q: tuple) -> tuple:
    """Left-to-right composition: apply p, then q."""
    return tuple(q[i] for i in p)


def _perm_inv(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


class HomSubgroup:
    """φ⁻¹(A) for a homomorphism φ: F_r → T and an accepted subgroup A ≤ T.

    Membership-complete even when the subgroup is not finitely generated
    (kernels of F_r → Z^k are the main use). `coset_key` canonically labels
    the right coset H·w, which is what Schreier constructions consume.

    No rank is defined here: rank = edges − vertices + 1 needs a finite core
    graph, and these subgroups generally have none.
    """

    __slots__ = ("ctx", "target", "images", "accepted", "_cyclic_gcd", "_hash")

    def __init__(self, ctx: GroupContext, target: Target, images, accepted):
        if ctx.kind != "free":
            raise ContextMismatchError("homomorphism sources are free groups")
        self.ctx = ctx
        self.target = target
        if len(images) != ctx.rank:
            raise MalformedInputError(
                f"need {ctx.rank} generator images, got {len(images)}"
            )
        if target.kind == "lattice":
            imgs = []
            for v in images:
                v = tuple(int(x) for x in v)
                if len(v) != target.param:
                    raise MalformedInputError("image vector has wrong dimension")
                imgs.append(v)
            self.images = tuple(imgs)
            if accepted == "zero":
                accepted = zdlattice.hnf_from_generators(target.param, [])
            if not isinstance(accepted, zdlattice.HnfSubgroup):
                raise MalformedInputError(
                    "lattice targets accept an HnfSubgroup or 'zero'"
                )
            if accepted.dim != target.param:
                raise MalformedInputError("accepted sublattice has wrong dimension")
            self.accepted = accepted
            self._cyclic_gcd = None
        elif target.kind == "cyclic":
            m = target.param
            self.images = tuple(int(v) % m for v in images)
            vals = frozenset(int(v) % m for v in accepted)
            if not vals:
                raise MalformedInputError("accepted subgroup cannot be empty")
            g = math.gcd(m, *vals) if vals != {0} else m
            if vals != {(g * k) % m for k in range(m // g if g else 1)} and vals != {0}:
                raise MalformedInputError(
                    f"accepted set {sorted(vals)} is not a subgroup of Z/{m}"
                )
            self.accepted = vals
            self._cyclic_gcd = g if vals != {0} else m
        else:  # permutation
            n = target.param
            imgs = []
            for p in images:
                p = tuple(int(x) for x in p)
                if sorted(p) != list(range(n)):
                    raise MalformedInputError(f"{p} is not a permutation of 0..{n - 1}")
                imgs.append(p)
            self.images = tuple(imgs)
            perms = frozenset(tuple(int(x) for x in p) for p in accepted)
            ident = tuple(range(n))
            if ident not in perms:
                raise MalformedInputError("accepted permutations must include the identity")
            for p in perms:
                if _perm_inv(p) not in perms:
                    raise MalformedInputError("accepted permutations not inverse-closed")
                for q in perms:
                    if _perm_mul(p, q) not in perms:
                        raise MalformedInputError("accepted permutations not closed")
            self.accepted = perms
            self._cyclic_gcd = None
        self._hash = hash((ctx, target, self.images, self._accepted_key()))

    def _accepted_key(self):
        if self.target.kind == "lattice":
            return self.accepted
        return tuple(sorted(self.accepted))

    # ---------------------------------------------------------------------

    def image(self, w: Word):
        """φ(w)."""
        if self.target.kind == "lattice":
            out = [0] * self.target.param
            for x in w:
                img = self.images[abs(x) - 1]
                s = 1 if x > 0 else -1
                for i, c in enumerate(img):
                    out[i] += s * c
            return tuple(out)
        if self.target.kind == "cyclic":
            m = self.target.param
            total = 0
            for x in w:
                img = self.images[abs(x) - 1]
                total += img if x > 0 else -img
            return total % m
        p = tuple(range(self.target.param))
        for x in w:
            img = self.images[abs(x) - 1]
            p = _perm_mul(p, img if x > 0 else _perm_inv(img))
        return p

    def contains(self, w: Word) -> bool:
        img = self.image(w)
        if self.target.kind == "lattice":
            return self.accepted.contains(img)
        if self.target.kind == "cyclic":
            return img in self.accepted
        return img in self.accepted

    def coset_key(self, w: Word):
        """Canonical label of the right coset H·w (equal keys ⟺ equal cosets)."""
        img = self.image(w)
        if self.target.kind == "lattice":
            return self.accepted.residue(img)
        if self.target.kind == "cyclic":
            return img % self._cyclic_gcd
        return min(_perm_mul(p, img) for p in self.accepted)

    def __eq__(self, other):
        if not isinstance(other, HomSubgroup):
            return NotImplemented
        return (
            self.ctx == other.ctx
            and self.target == other.target
            and self.images == other.images
            and self._accepted_key() == other._accepted_key()
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"HomSubgroup(F_{self.ctx.rank} → {self.target!r})"


def kernel(ctx: GroupContext, target: Target, images) -> HomSubgroup:
    """ker φ as a membership-complete subgroup."""
    if target.kind == "lattice":
        return HomSubgroup(ctx, target, images, "zero")
    if target.kind == "cyclic":
        return HomSubgroup(ctx, target, images, [0])
    return HomSubgroup(ctx, target, images, [tuple(range(target.param))])
