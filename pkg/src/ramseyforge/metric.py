"""Exact-arithmetic algorithms for metric spaces with a finite distance set.

All distances are exact rationals.  The truncated addition
a (+) b = max{x in S : x <= a + b} is the workhorse: it is associative
exactly when S satisfies the 4-values exchange condition, and then minimal
fold-lengths of walks compute the pointwise-least metric completion.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import PreconditionError, StructureError
from .structures import Language, Structure

Rational = Fraction


def _coerce(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        from .rsf import parse_rational

        return parse_rational(x)
    raise StructureError(f"distances must be exact rationals, got {type(x).__name__}")


@dataclass(frozen=True)
class DistanceSet:
    """A finite set of positive exact rationals."""

    distances: frozenset[Fraction]

    def __init__(self, values: Iterable):
        vals = frozenset(_coerce(v) for v in values)
        if not vals:
            raise StructureError("distance sets must be nonempty")
        if any(v <= 0 for v in vals):
            raise StructureError("distances must be positive")
        object.__setattr__(self, "distances", vals)

    def sorted(self) -> tuple[Fraction, ...]:
        return tuple(sorted(self.distances))

    def __contains__(self, x) -> bool:
        return _coerce(x) in self.distances

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.distances)

    @property
    def max(self) -> Fraction:
        return max(self.distances)

    @property
    def min(self) -> Fraction:
        return min(self.distances)


def distance_set(*values) -> DistanceSet:
    return DistanceSet(values)


_OPLUS_MEMO: dict[frozenset, dict] = {}
_FOUR_VALUES_MEMO: dict[frozenset, tuple] = {}
_JUMP_MEMO: dict[frozenset, frozenset] = {}


def _oplus_table(S: DistanceSet) -> dict:
    table = _OPLUS_MEMO.get(S.distances)
    if table is None:
        vals = S.sorted()
        table = {}
        for a in vals:
            for b in vals:
                s = a + b
                table[(a, b)] = max(x for x in vals if x <= s)
        _OPLUS_MEMO[S.distances] = table
    return table


def oplus(S: DistanceSet, a, b) -> Fraction:
    """Truncated addition: the largest element of S not above a + b."""
    a, b = _coerce(a), _coerce(b)
    try:
        return _oplus_table(S)[(a, b)]
    except KeyError:
        raise PreconditionError("oplus arguments must lie in the distance set")


def _triangle(a: Fraction, b: Fraction, c: Fraction) -> bool:
    return a <= b + c and b <= a + c and c <= a + b


def four_values(S: DistanceSet) -> tuple[bool, Optional[tuple]]:
    """Two-triangle exchange condition; witness (a,b,c,d,x) on failure."""
    cached = _FOUR_VALUES_MEMO.get(S.distances)
    if cached is not None:
        return cached
    vals = S.sorted()
    result: tuple = (True, None)
    done = False
    for a, b, c, d in itertools.product(vals, repeat=4):
        if done:
            break
        for x in vals:
            if _triangle(a, b, x) and _triangle(c, d, x):
                if not any(
                    _triangle(a, c, y) and _triangle(b, d, y) for y in vals
                ):
                    result = (False, (a, b, c, d, x))
                    done = True
                break
    _FOUR_VALUES_MEMO[S.distances] = result
    return result


def is_associative(S: DistanceSet) -> tuple[bool, Optional[tuple]]:
    """Associativity of truncated addition; witness triple on failure."""
    vals = S.sorted()
    for a, b, c in itertools.product(vals, repeat=3):
        if oplus(S, oplus(S, a, b), c) != oplus(S, a, oplus(S, b, c)):
            return False, (a, b, c)
    return True, None


def jump_numbers(S: DistanceSet) -> frozenset[Fraction]:
    """Non-maximal a with a (+) a = a: truncated addition stalls at a."""
    cached = _JUMP_MEMO.get(S.distances)
    if cached is None:
        top = S.max
        table = _oplus_table(S)
        cached = frozenset(
            a for a in S.distances if a != top and table[(a, a)] == a
        )
        _JUMP_MEMO[S.distances] = cached
    return cached


def blocks(S: DistanceSet) -> tuple[DistanceSet, ...]:
    """Inclusion-maximal jump-free subsets satisfying the 4-values condition.

    Asserts the decomposition facts: the blocks partition S and each block's
    maximum is a jump number of S or max(S).
    """
    if len(S) > 16:
        raise PreconditionError("blocks guard: more than 16 distances")
    vals = S.sorted()
    good = []
    for r in range(1, len(vals) + 1):
        for combo in itertools.combinations(vals, r):
            B = DistanceSet(combo)
            if four_values(B)[0] and not jump_numbers(B):
                good.append(frozenset(B.distances))
    maximal = [
        b for b in good if not any(b < other for other in good)
    ]
    maximal.sort(key=lambda b: min(b))
    seen: set[Fraction] = set()
    for b in maximal:
        if b & seen:
            raise StructureError("block decomposition is not a partition")
        seen |= b
    if seen != S.distances:
        raise StructureError("block decomposition does not cover the set")
    jumps = jump_numbers(S)
    for b in maximal:
        m = max(b)
        if m != S.max and m not in jumps:
            raise StructureError("block maximum is neither a jump nor max(S)")
    return tuple(DistanceSet(b) for b in maximal)


def block_of(S: DistanceSet, j: Fraction) -> DistanceSet:
    j = _coerce(j)
    for b in blocks(S):
        if j in b.distances:
            return b
    raise StructureError(f"{j} not in the distance set")


def s_length(S: DistanceSet, walk: Sequence) -> Fraction:
    """Left fold of truncated addition over the walk's distances."""
    ds = [_coerce(d) for d in walk]
    if not ds:
        raise PreconditionError("walks must have at least one edge")
    acc = ds[0]
    if acc not in S.distances:
        raise PreconditionError("walk distances must lie in the distance set")
    for d in ds[1:]:
        acc = oplus(S, acc, d)
    return acc


# ---------------------------------------------------------------------------
# S-graphs


def _pair(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u <= v else (v, u)


class SGraph:
    """A graph with edges coloured by distances: a partial symmetric distance
    map with no self-distances.  Total S-graphs are metric-space candidates."""

    __slots__ = ("vertices", "dist")

    def __init__(self, vertices: Iterable[str], dist: Mapping = ()):
        verts = sorted(set(vertices))
        self.vertices = tuple(verts)
        vset = set(verts)
        d: dict[tuple[str, str], Fraction] = {}
        items = dist.items() if hasattr(dist, "items") else dist
        for key, value in items:
            u, v = key
            if u == v:
                raise StructureError("no self-distances")
            if u not in vset or v not in vset:
                raise StructureError(f"distance on undeclared pair {key!r}")
            p = _pair(u, v)
            q = _coerce(value)
            if p in d and d[p] != q:
                raise StructureError(f"conflicting distances on {p!r}")
            d[p] = q
        self.dist = d

    def get(self, u: str, v: str) -> Optional[Fraction]:
        return self.dist.get(_pair(u, v))

    def pairs(self) -> Iterator[tuple[str, str]]:
        for u, v in itertools.combinations(self.vertices, 2):
            yield u, v

    def is_total(self) -> bool:
        n = len(self.vertices)
        return len(self.dist) == n * (n - 1) // 2

    def values(self) -> frozenset[Fraction]:
        return frozenset(self.dist.values())

    def __eq__(self, other):
        return (
            isinstance(other, SGraph)
            and self.vertices == other.vertices
            and self.dist == other.dist
        )

    def __hash__(self):
        return hash((self.vertices, tuple(sorted(self.dist.items()))))

    def __repr__(self):
        return f"SGraph({len(self.vertices)} vertices, {len(self.dist)} distances)"

    def induced(self, S: Iterable[str]) -> "SGraph":
        keep = set(S)
        return SGraph(
            keep, {p: q for p, q in self.dist.items() if p[0] in keep and p[1] in keep}
        )

    def is_metric(self, S: DistanceSet) -> bool:
        """Total triangle-inequality check (requires a total graph)."""
        if not self.is_total():
            return False
        if not self.values() <= S.distances:
            return False
        for u, v, w in itertools.combinations(self.vertices, 3):
            a, b, c = self.get(u, v), self.get(u, w), self.get(v, w)
            if not _triangle(a, b, c):
                return False
        return True


def metric_language(S: DistanceSet, ordered: bool = False) -> Language:
    from .rsf import format_rational

    symbols = [(f"d:{format_rational(q)}", 2) for q in S.sorted()]
    if ordered:
        symbols.append(("leq", 2))
        return Language(tuple(symbols), "leq")
    return Language(tuple(symbols))


def sgraph_to_structure(G: SGraph, S: DistanceSet) -> Structure:
    from .rsf import format_rational

    rels: dict[str, list] = {f"d:{format_rational(q)}": [] for q in S.sorted()}
    for (u, v), q in G.dist.items():
        name = f"d:{format_rational(q)}"
        if name not in rels:
            raise StructureError(f"distance {q} not in the distance set")
        rels[name].append((u, v))
        rels[name].append((v, u))
    return Structure(metric_language(S), G.vertices, rels)


def structure_to_sgraph(A: Structure, S: DistanceSet) -> SGraph:
    """Interpret a distance-language structure as an S-graph.

    Raises when the structure is not a well-formed S-graph (loops, one-way
    tuples, or two distances on a pair).
    """
    from .rsf import format_rational

    dist: dict[tuple[str, str], Fraction] = {}
    for q in S.sorted():
        name = f"d:{format_rational(q)}"
        ts = A.tuples(name)
        for (u, v) in ts:
            if u == v:
                raise StructureError(f"loop in {name!r}")
            if (v, u) not in ts:
                raise StructureError(f"one-way distance tuple {(u, v)!r}")
            p = _pair(u, v)
            if p in dist and dist[p] != q:
                raise StructureError(f"two distances on pair {p!r}")
            dist[p] = q
    return SGraph(A.vertices, dist)


# ---------------------------------------------------------------------------
# completion


@dataclass(frozen=True)
class NonMetricCertificate:
    """A violated pair with the short walk beating its recorded distance."""

    pair: tuple[str, str]
    recorded: Fraction
    shortest: Fraction
    walk: tuple[str, ...]

    def cycle_distances(self, G: "SGraph") -> tuple[Fraction, ...]:
        edges = [G.get(self.walk[i], self.walk[i + 1]) for i in range(len(self.walk) - 1)]
        return tuple(edges) + (self.recorded,)


@dataclass(frozen=True)
class MetricCompletionResult:
    status: str  # "completed" | "no-completion"
    space: Optional[SGraph]
    certificate: Optional[NonMetricCertificate]

    @property
    def completed(self) -> bool:
        return self.status == "completed"


def complete_metric_graph(G: SGraph, S: DistanceSet) -> MetricCompletionResult:
    """All-pairs minimal fold-length completion.

    Succeeds iff G can be completed to a metric space with distances in S;
    the output is then the pointwise-least completion.  Pairs joined by no
    walk are set to max(S).
    """
    ok, witness = four_values(S)
    if not ok:
        raise PreconditionError(f"distance set fails the 4-values condition at {witness}")
    if not G.values() <= S.distances:
        raise PreconditionError("graph uses distances outside the set")
    verts = list(G.vertices)
    idx = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    INF = None
    d: list[list[Optional[Fraction]]] = [[INF] * n for _ in range(n)]
    nxt: list[list[Optional[int]]] = [[None] * n for _ in range(n)]
    for (u, v), q in G.dist.items():
        i, j = idx[u], idx[v]
        d[i][j] = d[j][i] = q
        nxt[i][j] = j
        nxt[j][i] = i
    table = _oplus_table(S)
    for k in range(n):
        dk = d[k]
        for i in range(n):
            dik = d[i][k]
            if dik is None or i == k:
                continue
            di = d[i]
            for j in range(i + 1, n):
                if j == k:
                    continue
                dkj = dk[j]
                if dkj is None:
                    continue
                cand = table[(dik, dkj)]
                if di[j] is None or cand < di[j]:
                    di[j] = cand
                    d[j][i] = cand
                    nxt[i][j] = nxt[i][k]
                    nxt[j][i] = nxt[j][k]
    # check recorded distances are the minima
    for (u, v), q in sorted(G.dist.items()):
        i, j = idx[u], idx[v]
        if d[i][j] < q:
            walk = _reconstruct(nxt, idx, verts, u, v)
            walk = _cut_loops(walk)
            return MetricCompletionResult(
                "no-completion",
                None,
                NonMetricCertificate((u, v), q, d[i][j], tuple(walk)),
            )
    out: dict[tuple[str, str], Fraction] = {}
    top = S.max
    for u, v in G.pairs():
        i, j = idx[u], idx[v]
        out[(u, v)] = d[i][j] if d[i][j] is not None else top
    return MetricCompletionResult("completed", SGraph(verts, out), None)


def _reconstruct(nxt, idx, verts, u, v) -> list[str]:
    i, j = idx[u], idx[v]
    path = [u]
    while i != j:
        i = nxt[i][j]
        path.append(verts[i])
    return path


def _cut_loops(walk: Sequence[str]) -> list[str]:
    seen: dict[str, int] = {}
    out: list[str] = []
    for v in walk:
        if v in seen:
            out = out[: seen[v] + 1]
            seen = {w: i for i, w in enumerate(out)}
        else:
            out.append(v)
            seen[v] = len(out) - 1
    return out


# ---------------------------------------------------------------------------
# non-metric cycles and unimportant paths


def fold_violates(S: DistanceSet, distances: Sequence[Fraction]) -> bool:
    """Does the last distance exceed the fold of the others (non-metric cycle)?"""
    if len(distances) < 3:
        raise PreconditionError("cycles have at least three edges")
    return distances[-1] > s_length(S, distances[:-1])


@dataclass(frozen=True)
class UnimportantReduction:
    segments: tuple[tuple[int, int], ...]  # index ranges of dropped path edges
    reduced: tuple[Fraction, ...]  # reduced cycle, long edge last


def unimportant_paths(distances: Sequence, S: DistanceSet) -> UnimportantReduction:
    """Collapse maximal fold-stalling runs of a non-metric cycle.

    ``distances`` lists the cycle's edges; the edge violating the fold of the
    remaining path is rotated to the last position (it is the unique maximal
    edge).  The reduced cycle is still non-metric and has at most 2|S|
    vertices.
    """
    ds = [_coerce(d) for d in distances]
    if len(ds) < 3:
        raise PreconditionError("cycles have at least three edges")
    top = max(ds)
    i = ds.index(top)
    ds = ds[i + 1 :] + ds[:i]  # path in cyclic order
    long_edge = top
    if not long_edge > s_length(S, ds):
        # already metric: nothing to reduce
        return UnimportantReduction((), tuple(ds) + (long_edge,))
    folds = []
    acc = None
    for d in ds:
        acc = d if acc is None else oplus(S, acc, d)
        folds.append(acc)
    # edge k (k>=1) stalls when folds[k] == folds[k-1]
    keep = {0} | {k for k in range(1, len(ds)) if folds[k] != folds[k - 1]}
    if len(keep) < 2:
        # keep one stalled edge so the reduction stays a cycle (a triangle)
        keep.add(next(k for k in range(1, len(ds)) if k not in keep))
    segments = []
    start = None
    for k in range(1, len(ds)):
        if k not in keep and start is None:
            start = k
        if k in keep and start is not None:
            segments.append((start, k - 1))
            start = None
    if start is not None:
        segments.append((start, len(ds) - 1))
    reduced = tuple(ds[k] for k in sorted(keep)) + (long_edge,)
    if fold_violates(S, reduced) is False:
        raise StructureError("reduction lost the violation")
    return UnimportantReduction(tuple(segments), reduced)


@dataclass(frozen=True)
class CycleCertificate:
    """A non-metric cycle: vertices (when drawn from a graph) and the cyclic
    distance list with the violated edge last."""

    distances: tuple[Fraction, ...]
    vertices: Optional[tuple[str, ...]]

    def verify(self, S: DistanceSet) -> bool:
        return fold_violates(S, self.distances)


def non_metric_cycle_scan(G: SGraph, S: DistanceSet) -> Optional[CycleCertificate]:
    """Find a witness cycle when G is not metrisable over S.

    Jump-free sets yield cycles with at most |S|+1 vertices directly; with
    jumps the unimportant-path reduction trims the certificate to at most
    2|S| vertices.
    """
    result = complete_metric_graph(G, S)
    if result.completed:
        return None
    cert = result.certificate
    cycle_vertices = tuple(cert.walk)
    distances = cert.cycle_distances(G)
    bound = (len(S) + 1) if not jump_numbers(S) else 2 * len(S)
    if len(distances) <= bound:
        return CycleCertificate(distances, cycle_vertices)
    reduction = unimportant_paths(distances, S)
    return CycleCertificate(reduction.reduced, None)


# ---------------------------------------------------------------------------
# amalgamation


def strong_amalgam_metric(B1: SGraph, B2: SGraph, A: SGraph, S: DistanceSet) -> SGraph:
    """Strong amalgamation of two metric spaces agreeing on A.

    Free superposition followed by minimal fold-length completion; cross
    pairs joined by no walk get max(S).
    """
    if set(B1.vertices) & set(B2.vertices) != set(A.vertices):
        raise PreconditionError("overlap of the sides must be exactly A")
    for side in (B1, B2):
        if side.induced(A.vertices) != A:
            raise PreconditionError("sides must agree with A on the overlap")
        if not side.is_metric(S):
            raise PreconditionError("amalgamation sides must be metric spaces")
    union = dict(B1.dist)
    union.update(B2.dist)
    G = SGraph(set(B1.vertices) | set(B2.vertices), union)
    result = complete_metric_graph(G, S)
    if not result.completed:
        raise StructureError("strong amalgamation failed on metric inputs")
    return result.space


# ---------------------------------------------------------------------------
# block equivalences and convex lifts


def block_equivalence(A: SGraph, S: DistanceSet, j) -> tuple[frozenset[str], ...]:
    """Classes of the walk-connectivity relation over distances <= max(B_j)."""
    j = _coerce(j)
    bound = block_of(S, j).max
    adj: dict[str, set[str]] = {v: set() for v in A.vertices}
    for (u, v), q in A.dist.items():
        if q <= bound:
            adj[u].add(v)
            adj[v].add(u)
    seen: set[str] = set()
    classes = []
    for v in A.vertices:
        if v in seen:
            continue
        comp = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        classes.append(frozenset(comp))
    return tuple(sorted(classes, key=lambda c: sorted(c)[0] if c else ""))


@dataclass(frozen=True)
class ConvexLift:
    """A convexly ordered metric space with explicit class-closure vertices.

    Per jump number j, every block-equivalence class gets a fresh vertex
    marked E_j and linked from each member by a U_j pair; closure vertices
    come after the originals in the extended order.
    """

    base: SGraph
    S: DistanceSet
    order: tuple[str, ...]
    closure_vertices: tuple[tuple[Fraction, tuple[tuple[frozenset, str], ...]], ...]
    extended_order: tuple[str, ...]

    def shadow(self) -> SGraph:
        return self.base

    def jump_names(self) -> list[str]:
        from .rsf import format_rational

        return [format_rational(j) for j, _ in self.closure_vertices]

    def language(self) -> Language:
        from .rsf import format_rational

        symbols = list(metric_language(self.S).symbols)
        for j, _ in self.closure_vertices:
            name = format_rational(j)
            symbols.append((f"E:{name}", 1))
            symbols.append((f"U:{name}", 2))
        symbols.append(("leq", 2))
        return Language(tuple(symbols), "leq")

    def as_structure(self) -> Structure:
        from .build import linear_order_tuples
        from .rsf import format_rational

        lang = self.language()
        rels: dict[str, list] = {name: [] for name, _ in lang.symbols}
        for (u, v), q in self.base.dist.items():
            name = f"d:{format_rational(q)}"
            rels[name].append((u, v))
            rels[name].append((v, u))
        for j, classes in self.closure_vertices:
            jname = format_rational(j)
            for cls, cv in classes:
                rels[f"E:{jname}"].append((cv,))
                for v in sorted(cls):
                    rels[f"U:{jname}"].append((v, cv))
        rels["leq"] = linear_order_tuples(self.extended_order)
        return Structure(lang, self.extended_order, rels)

    def closure_description(self):
        """Single-vertex ordered roots, one entry per jump number."""
        from .closures import closure_description
        from .rsf import format_rational

        lang = self.language()
        entries = []
        for j, _ in self.closure_vertices:
            root = Structure(lang, ["1"], {"leq": [("1", "1")]})
            entries.append((f"U:{format_rational(j)}", root))
        return closure_description(*entries)


def convex_lift(A: SGraph, S: DistanceSet, order: Sequence[str]) -> ConvexLift:
    """Build the closure-vertex lift of a convexly ordered metric space."""
    order = tuple(order)
    if sorted(order) != list(A.vertices):
        raise PreconditionError("order must enumerate exactly the space's vertices")
    if A.vertices and not A.is_metric(S):
        raise PreconditionError("convex lifts require a total metric space")
    pos = {v: i for i, v in enumerate(order)}
    jumps = sorted(jump_numbers(S))
    closure: list = []
    counter = 0
    extended = list(order)
    from .rsf import format_rational

    for j in jumps:
        classes = block_equivalence(A, S, j)
        for cls in classes:
            idxs = sorted(pos[v] for v in cls)
            if idxs != list(range(idxs[0], idxs[-1] + 1)):
                raise PreconditionError(
                    f"order is not convex for the {j} block class {sorted(cls)}"
                )
        ordered_classes = sorted(classes, key=lambda c: min(pos[v] for v in c))
        out = []
        for cls in ordered_classes:
            cv = f"cl:{format_rational(j)}:{counter}"
            counter += 1
            out.append((cls, cv))
            extended.append(cv)
        closure.append((j, tuple(out)))
    return ConvexLift(A, S, order, tuple(closure), tuple(extended))
