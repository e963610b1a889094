"""Completion and strong completion relative to pluggable structure classes.

A plugin owns a class of finite irreducible structures: it decides
membership, attempts strong completions with re-checkable obstacle
certificates, and enumerates its pattern class (structures that could embed
into the ambient irreducible class) for obstacle search, local-finiteness
probing and the completion-iff-strong-completion equivalence check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from . import metric as metric_mod
from .build import POSET, ORDERED_GRAPH, linear_order_tuples
from .errors import PreconditionError, StructureError
from .metric import DistanceSet, SGraph
from .structures import (
    Language,
    Morphism,
    Structure,
    canonical_key,
    induced_substructure,
    is_irreducible,
    search_morphisms,
    verify_morphism,
)


# ---------------------------------------------------------------------------
# results and certificates


@dataclass(frozen=True)
class ObstacleCertificate:
    """A re-checkable reason a structure admits no strong completion.

    ``present``/``absent`` list tuple membership facts in the examined
    structure; ``holds`` re-checks them.  ``extra`` carries kind-specific
    data such as the distances of a non-metric cycle.
    """

    kind: str
    vertices: tuple[str, ...]
    present: tuple[tuple[str, tuple[str, ...]], ...] = ()
    absent: tuple[tuple[str, tuple[str, ...]], ...] = ()
    note: str = ""
    extra: tuple[tuple[str, str], ...] = ()

    def holds(self, A: Structure) -> bool:
        try:
            for sym, t in self.present:
                if t not in A.tuples(sym):
                    return False
            for sym, t in self.absent:
                if t in A.tuples(sym):
                    return False
        except StructureError:
            return False
        return True

    def to_obj(self) -> dict:
        return {
            "kind": self.kind,
            "vertices": list(self.vertices),
            "present": [[sym, list(t)] for sym, t in self.present],
            "absent": [[sym, list(t)] for sym, t in self.absent],
            "note": self.note,
            "extra": dict(self.extra),
        }


@dataclass(frozen=True)
class CompletionResult:
    status: str  # "completed" | "no-completion"
    completed: Optional[Structure] = None
    certificate: Optional[ObstacleCertificate] = None

    def __post_init__(self):
        if (self.status == "completed") != (self.completed is not None):
            raise StructureError("completed results carry exactly a structure")
        if (self.status == "no-completion") != (self.certificate is not None):
            raise StructureError("failures carry exactly a certificate")

    @property
    def ok(self) -> bool:
        return self.status == "completed"


def is_completion(C: Structure, C_prime: Structure, strong: bool) -> bool:
    """Does C_prime complete C: irreducible plus a (one-to-one when strong)
    homomorphism-embedding C -> C_prime, decided by search."""
    if not is_irreducible(C_prime):
        return False
    for _ in search_morphisms(
        C, C_prime, "homomorphism-embedding", require_injective=strong
    ):
        return True
    return False


def holes(A: Structure) -> list[tuple[str, str]]:
    """Pairs of distinct vertices sharing no tuple."""
    adj = A.adjacency()
    out = []
    for u, v in itertools.combinations(A.vertices, 2):
        if v not in adj[u]:
            out.append((u, v))
    return out


# ---------------------------------------------------------------------------
# plugin protocol


class ClassPlugin:
    """A pluggable class of finite irreducible structures."""

    name: str
    language: Language

    def membership(self, A: Structure) -> bool:
        raise NotImplementedError

    def try_strong_completion(self, A: Structure) -> CompletionResult:
        raise NotImplementedError

    def patterns(self, k: int) -> Iterator[Structure]:
        """All candidate structures on k vertices, up to isomorphism, drawn
        from the plugin's pattern class (structures admitting a completion
        into the ambient irreducible class)."""
        raise NotImplementedError

    # -- shared machinery ---------------------------------------------------

    def patterns_up_to(self, n: int) -> Iterator[Structure]:
        for k in range(1, n + 1):
            yield from self.patterns(k)

    def obstacles_up_to(self, n: int) -> list[Structure]:
        """Minimal structures with no strong completion, at most n vertices.

        Minimality: every proper induced substructure strongly completes
        (completability is hereditary, so checking co-dimension one
        substructures suffices)."""
        out = []
        for P in self.patterns_up_to(n):
            if self.try_strong_completion(P).ok:
                continue
            if all(
                self.try_strong_completion(
                    induced_substructure(P, set(P.vertices) - {v})
                ).ok
                for v in P.vertices
            ):
                out.append(P)
        out.sort(key=canonical_key)
        return out


def _pattern_vertices(k: int) -> list[str]:
    return [f"v{i}" for i in range(k)]


def _dedupe(structures: Iterable[Structure]) -> Iterator[Structure]:
    seen = set()
    for A in structures:
        key = canonical_key(A)
        if key not in seen:
            seen.add(key)
            yield A


def _pair_perm_maps(k: int) -> list[list[tuple[int, bool]]]:
    pairs = list(itertools.combinations(range(k), 2))
    index = {p: i for i, p in enumerate(pairs)}
    maps = []
    for sigma in itertools.permutations(range(k)):
        if sigma == tuple(range(k)):
            continue
        row = []
        for (i, j) in pairs:
            a, b = sigma[i], sigma[j]
            row.append((index[(a, b)], False) if a < b else (index[(b, a)], True))
        maps.append(row)
    return maps


def _canonical_pair_vectors(
    k: int, num_states: int, flip: Sequence[int]
) -> Iterator[tuple[int, ...]]:
    """Pair-state vectors on k vertices, canonical under vertex permutation.

    A state describes one unordered pair; ``flip[s]`` is the state seen when
    the pair's orientation reverses.  Only lexicographically minimal vectors
    are yielded, so the output is duplicate-free up to isomorphism.
    """
    maps = _pair_perm_maps(k)
    npairs = k * (k - 1) // 2
    for vec in itertools.product(range(num_states), repeat=npairs):
        minimal = True
        for row in maps:
            out = [0] * npairs
            for p in range(npairs):
                q, fl = row[p]
                s = vec[p]
                out[q] = flip[s] if fl else s
            if tuple(out) < vec:
                minimal = False
                break
        if minimal:
            yield vec


# ---------------------------------------------------------------------------
# partial orders with linear extension


@dataclass(frozen=True)
class QuasiCycle:
    """Vertices u1..un with consecutive pairs in both relations and the
    closing pair in the order only."""

    vertices: tuple[str, ...]

    def holds(self, A: Structure) -> bool:
        vs = self.vertices
        if len(vs) < 3 or len(set(vs)) != len(vs):
            return False
        leq, prec = A.tuples("leq"), A.tuples("prec")
        if (vs[0], vs[-1]) not in leq or (vs[0], vs[-1]) in prec:
            return False
        return all(
            (vs[i], vs[i + 1]) in leq and (vs[i], vs[i + 1]) in prec
            for i in range(len(vs) - 1)
        )


def quasi_cycle_scan(A: Structure) -> Optional[QuasiCycle]:
    """Find a quasi-cycle as a not-necessarily-induced substructure."""
    leq, prec = A.tuples("leq"), A.tuples("prec")
    chain_edges: dict[str, list[str]] = {v: [] for v in A.vertices}
    for (u, v) in sorted(prec):
        if u != v and (u, v) in leq:
            chain_edges[u].append(v)
    for (a, b) in sorted(leq):
        if a == b or (a, b) in prec:
            continue
        # shortest simple prec-and-leq path from a to b
        parent = {a: None}
        queue = [a]
        while queue:
            u = queue.pop(0)
            if u == b:
                break
            for w in chain_edges[u]:
                if w not in parent:
                    parent[w] = u
                    queue.append(w)
        if b in parent:
            path = [b]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            path.reverse()
            return QuasiCycle(tuple(path))
    return None


def _transitive_closure(pairs: set[tuple[str, str]], verts) -> set[tuple[str, str]]:
    closure = set(pairs)
    changed = True
    while changed:
        changed = False
        for (a, b) in list(closure):
            for (c, d) in list(closure):
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
    return closure


def _digraph_cycle(edges: set[tuple[str, str]], verts: Sequence[str]) -> Optional[list[str]]:
    """A vertex cycle in the strict digraph, or None."""
    adj: dict[str, list[str]] = {v: [] for v in verts}
    for (u, v) in sorted(edges):
        if u != v:
            adj[u].append(v)
    state = {v: 0 for v in verts}
    stack_path: list[str] = []

    def dfs(u) -> Optional[list[str]]:
        state[u] = 1
        stack_path.append(u)
        for w in adj[u]:
            if state[w] == 1:
                return stack_path[stack_path.index(w):] + [w]
            if state[w] == 0:
                found = dfs(w)
                if found:
                    return found
        stack_path.pop()
        state[u] = 2
        return None

    for v in sorted(verts):
        if state[v] == 0:
            found = dfs(v)
            if found:
                return found
    return None


def _toposort(verts: Sequence[str], edges: set[tuple[str, str]]) -> list[str]:
    """Stable topological order: ties broken by vertex token."""
    preds: dict[str, set[str]] = {v: set() for v in verts}
    for (u, v) in edges:
        if u != v:
            preds[v].add(u)
    out = []
    remaining = set(verts)
    while remaining:
        ready = sorted(v for v in remaining if not (preds[v] & remaining))
        if not ready:
            raise StructureError("cycle while sorting")
        v = ready[0]
        out.append(v)
        remaining.remove(v)
    return out


class PosetPlugin(ClassPlugin):
    """Partial orders (prec) with a linear extension (leq).

    Both relations are stored reflexively.  Strong completion: transitive
    closure of prec, then a linear extension by stable topological sort on
    vertex tokens.
    """

    name = "posets"
    language = POSET

    def membership(self, A: Structure) -> bool:
        leq, prec = A.tuples("leq"), A.tuples("prec")
        vs = A.vertices
        for v in vs:
            if (v, v) not in leq or (v, v) not in prec:
                return False
        for u, v in itertools.combinations(vs, 2):
            if ((u, v) in leq) == ((v, u) in leq):
                return False
            if (u, v) in prec and (v, u) in prec:
                return False
        if not prec <= leq:
            return False
        for rel in (prec, leq):
            for (a, b) in rel:
                for (c, d) in rel:
                    if b == c and (a, d) not in rel:
                        return False
        return True

    def try_strong_completion(self, A: Structure) -> CompletionResult:
        leq, prec = A.tuples("leq"), A.tuples("prec")
        vs = A.vertices

        def fail(kind, vertices, present=(), absent=(), note="", extra=()):
            return CompletionResult(
                "no-completion",
                certificate=ObstacleCertificate(
                    kind, tuple(vertices), tuple(present), tuple(absent), note, tuple(extra)
                ),
            )

        for v in vs:
            for sym in ("prec", "leq"):
                if (v, v) not in A.tuples(sym):
                    return fail(
                        "missing-reflexive", (v,), absent=[(sym, (v, v))],
                        note=f"{sym} misses the reflexive pair",
                    )
        adj = A.adjacency()
        for u, v in itertools.combinations(vs, 2):
            frozen = v in adj[u]
            fwd, bwd = (u, v) in leq, (v, u) in leq
            if fwd and bwd:
                return fail(
                    "order-antisymmetry", (u, v),
                    present=[("leq", (u, v)), ("leq", (v, u))],
                )
            if (u, v) in prec and (v, u) in prec:
                return fail(
                    "prec-antisymmetry", (u, v),
                    present=[("prec", (u, v)), ("prec", (v, u))],
                )
            if frozen and not (fwd or bwd):
                return fail(
                    "unordered-pair", (u, v),
                    absent=[("leq", (u, v)), ("leq", (v, u))],
                    note="pair shares a tuple but has no orientation",
                )
            for (a, b) in (((u, v) if fwd else (v, u)),) if (fwd or bwd) else ():
                if (b, a) in prec:
                    return fail(
                        "prec-against-order", (a, b),
                        present=[("leq", (a, b)), ("prec", (b, a))],
                    )

        strict_prec = {(a, b) for (a, b) in prec if a != b}
        closure = _transitive_closure(strict_prec, vs)
        cyc = _digraph_cycle(closure, vs)
        if cyc:
            edges = [("prec", (cyc[i], cyc[i + 1])) for i in range(len(cyc) - 1)]
            return fail("prec-cycle", tuple(cyc), note="prec chain closes on itself")
        for (a, b) in sorted(closure - strict_prec):
            if b in adj[a]:
                # frozen pair forced into prec by transitivity
                qc = quasi_cycle_scan(A)
                if qc is not None:
                    return fail(
                        "quasi-cycle", qc.vertices,
                        present=[("leq", (qc.vertices[0], qc.vertices[-1]))],
                        absent=[("prec", (qc.vertices[0], qc.vertices[-1]))],
                        note="prec chain against a frozen pair",
                    )
                return fail(
                    "frozen-prec-gap", (a, b),
                    absent=[("prec", (a, b))],
                    note="transitivity forces prec on a frozen pair without it",
                )
        strict_leq = {(a, b) for (a, b) in leq if a != b}
        order_edges = strict_leq | closure
        cyc = _digraph_cycle(order_edges, vs)
        if cyc:
            return fail("order-cycle", tuple(cyc), note="no linear extension exists")
        topo = _toposort(vs, order_edges)
        final_prec = sorted(closure | {(v, v) for v in vs})
        completed = Structure(
            POSET, vs, {"prec": final_prec, "leq": linear_order_tuples(topo)}
        )
        if not self.membership(completed):
            raise StructureError("poset completion produced a non-member")
        return CompletionResult("completed", completed=completed)

    def patterns(self, k: int) -> Iterator[Structure]:
        # pair states: 0 hole, 1/2 order one way, 3/4 order plus prec
        verts = _pattern_vertices(k)
        pairs = list(itertools.combinations(verts, 2))
        diag = [(v, v) for v in verts]
        for states in _canonical_pair_vectors(k, 5, (0, 2, 1, 4, 3)):
            leq = list(diag)
            prec = list(diag)
            for (u, v), s in zip(pairs, states):
                if s == 0:
                    continue
                a, b = (u, v) if s in (1, 3) else (v, u)
                leq.append((a, b))
                if s in (3, 4):
                    prec.append((a, b))
            yield Structure(POSET, verts, {"leq": leq, "prec": prec})


# ---------------------------------------------------------------------------
# S-metric spaces


class MetricPlugin(ClassPlugin):
    """Metric spaces over a fixed finite distance set with 4-values."""

    def __init__(self, S: DistanceSet):
        ok, witness = metric_mod.four_values(S)
        if not ok:
            raise PreconditionError(
                f"metric plugin needs the 4-values condition; fails at {witness}"
            )
        self.S = S
        self.language = metric_mod.metric_language(S)
        from .rsf import format_rational

        self.name = "metric:" + ",".join(format_rational(q) for q in S.sorted())

    def membership(self, A: Structure) -> bool:
        try:
            G = metric_mod.structure_to_sgraph(A, self.S)
        except StructureError:
            return False
        return G.is_metric(self.S)

    def try_strong_completion(self, A: Structure) -> CompletionResult:
        from .rsf import format_rational

        try:
            G = metric_mod.structure_to_sgraph(A, self.S)
        except StructureError as exc:
            return CompletionResult(
                "no-completion",
                certificate=ObstacleCertificate(
                    "malformed-distance-graph", tuple(A.vertices), note=str(exc)
                ),
            )
        result = metric_mod.complete_metric_graph(G, self.S)
        if result.completed:
            return CompletionResult(
                "completed",
                completed=metric_mod.sgraph_to_structure(result.space, self.S),
            )
        cert = result.certificate
        cycle = cert.cycle_distances(G)
        verts = cert.walk + (cert.walk[0],)
        present = []
        for i in range(len(cert.walk) - 1):
            q = G.get(cert.walk[i], cert.walk[i + 1])
            present.append(
                (f"d:{format_rational(q)}", (cert.walk[i], cert.walk[i + 1]))
            )
        present.append((f"d:{format_rational(cert.recorded)}", cert.pair))
        return CompletionResult(
            "no-completion",
            certificate=ObstacleCertificate(
                "non-metric-cycle",
                cert.walk,
                present=tuple(present),
                note=f"recorded {cert.recorded} exceeds walk length {cert.shortest}",
                extra=(
                    ("distances", ",".join(format_rational(q) for q in cycle)),
                    ("shortest", format_rational(cert.shortest)),
                ),
            ),
        )

    def patterns(self, k: int) -> Iterator[Structure]:
        # pair states: 0 hole, i >= 1 the i-th smallest distance
        verts = _pattern_vertices(k)
        pairs = list(itertools.combinations(verts, 2))
        vals = self.S.sorted()
        flip = tuple(range(len(vals) + 1))
        for states in _canonical_pair_vectors(k, len(vals) + 1, flip):
            dist = {
                (u, v): vals[s - 1]
                for (u, v), s in zip(pairs, states)
                if s != 0
            }
            yield metric_mod.sgraph_to_structure(SGraph(verts, dist), self.S)


# ---------------------------------------------------------------------------
# ordered graphs with forbidden embedded irreducibles


class ForbiddenPlugin(ClassPlugin):
    """Ordered graphs avoiding embeddings of given ordered irreducibles.

    Completion fills holes with non-edges and completes the order to a
    linear one (ordered free amalgamation style); the family is assumed to
    be closed under re-ordering, so any linear extension is as good as any
    other.
    """

    language = ORDERED_GRAPH

    def __init__(self, forbidden: Sequence[Structure], name: str = "forbidden"):
        self.forbidden = tuple(forbidden)
        for F in self.forbidden:
            if F.language != ORDERED_GRAPH:
                raise PreconditionError("forbidden members must be ordered graphs")
            if not is_irreducible(F, ignore_order=True):
                raise PreconditionError(
                    "forbidden members must be irreducible without order"
                )
        self.name = name

    def _is_linear(self, A: Structure) -> bool:
        leq = A.tuples("leq")
        for v in A.vertices:
            if (v, v) not in leq:
                return False
        for u, v in itertools.combinations(A.vertices, 2):
            if ((u, v) in leq) == ((v, u) in leq):
                return False
        strict = {(a, b) for (a, b) in leq if a != b}
        return _digraph_cycle(strict, A.vertices) is None

    def _forbidden_witness(self, A: Structure):
        for F in self.forbidden:
            for m in search_morphisms(F, A, "embedding"):
                return F, m
        return None

    def membership(self, A: Structure) -> bool:
        if not self._is_linear(A):
            return False
        edges = A.tuples("E")
        for (u, v) in edges:
            if u == v or (v, u) not in edges:
                return False
        return self._forbidden_witness(A) is None

    def try_strong_completion(self, A: Structure) -> CompletionResult:
        leq, edges = A.tuples("leq"), A.tuples("E")
        vs = A.vertices

        def fail(kind, vertices, present=(), absent=(), note=""):
            return CompletionResult(
                "no-completion",
                certificate=ObstacleCertificate(
                    kind, tuple(vertices), tuple(present), tuple(absent), note
                ),
            )

        for v in vs:
            if (v, v) in edges:
                return fail("edge-loop", (v,), present=[("E", (v, v))])
            if (v, v) not in leq:
                return fail("missing-reflexive", (v,), absent=[("leq", (v, v))])
        adj = A.adjacency()
        for u, v in itertools.combinations(vs, 2):
            fwd, bwd = (u, v) in leq, (v, u) in leq
            if fwd and bwd:
                return fail(
                    "order-antisymmetry", (u, v),
                    present=[("leq", (u, v)), ("leq", (v, u))],
                )
            if v in adj[u] and not (fwd or bwd):
                return fail(
                    "unordered-pair", (u, v),
                    absent=[("leq", (u, v)), ("leq", (v, u))],
                )
            if (u, v) in edges and (v, u) not in edges:
                return fail(
                    "one-way-edge", (u, v),
                    present=[("E", (u, v))], absent=[("E", (v, u))],
                )
            if (v, u) in edges and (u, v) not in edges:
                return fail(
                    "one-way-edge", (v, u),
                    present=[("E", (v, u))], absent=[("E", (u, v))],
                )
        strict = {(a, b) for (a, b) in leq if a != b}
        cyc = _digraph_cycle(strict, vs)
        if cyc:
            return fail("order-cycle", tuple(cyc))
        topo = _toposort(vs, strict)
        completed = Structure(
            ORDERED_GRAPH, vs, {"E": sorted(edges), "leq": linear_order_tuples(topo)}
        )
        witness = self._forbidden_witness(completed)
        if witness is not None:
            F, m = witness
            return CompletionResult(
                "no-completion",
                certificate=ObstacleCertificate(
                    "forbidden-member",
                    tuple(sorted(m.image_vertices())),
                    note=f"embeds a forbidden structure on {len(F.vertices)} vertices",
                    extra=tuple(
                        ("witness:" + src, dst) for src, dst in m.map
                    ),
                ),
            )
        return CompletionResult("completed", completed=completed)

    def patterns(self, k: int) -> Iterator[Structure]:
        # pair states: 0 hole, 1/2 order one way, 3/4 order plus an edge
        verts = _pattern_vertices(k)
        pairs = list(itertools.combinations(verts, 2))
        diag = [(v, v) for v in verts]
        for states in _canonical_pair_vectors(k, 5, (0, 2, 1, 4, 3)):
            leq = list(diag)
            edges = []
            for (u, v), s in zip(pairs, states):
                if s == 0:
                    continue
                a, b = (u, v) if s in (1, 3) else (v, u)
                leq.append((a, b))
                if s in (3, 4):
                    edges.append((a, b))
                    edges.append((b, a))
            yield Structure(ORDERED_GRAPH, verts, {"leq": leq, "E": edges})


def kfree_plugin(k: int) -> ForbiddenPlugin:
    """Ordered graphs with no embedded ordered K_k."""
    verts = [f"v{i}" for i in range(k)]
    edges = []
    for u, v in itertools.combinations(verts, 2):
        edges.append((u, v))
        edges.append((v, u))
    member = Structure(
        ORDERED_GRAPH, verts, {"E": edges, "leq": linear_order_tuples(verts)}
    )
    members = []
    seen = set()
    for perm in itertools.permutations(verts):
        M = Structure(
            ORDERED_GRAPH, verts, {"E": edges, "leq": linear_order_tuples(list(perm))}
        )
        key = canonical_key(M)
        if key not in seen:
            seen.add(key)
            members.append(M)
    return ForbiddenPlugin(tuple(members), name=f"forbidden:K{k}")


def get_plugin(selector: str) -> ClassPlugin:
    """Resolve a plugin selector: posets | metric:<d,d,...> | forbidden:<file>."""
    if selector == "posets":
        return PosetPlugin()
    if selector.startswith("metric:"):
        from .rsf import parse_rational

        vals = [parse_rational(s) for s in selector[len("metric:"):].split(",") if s]
        return MetricPlugin(DistanceSet(vals))
    if selector.startswith("forbidden:"):
        import json
        from pathlib import Path

        from .rsf import obj_to_structure

        path = Path(selector[len("forbidden:"):])
        arr = json.loads(path.read_text(encoding="utf-8"))
        members = []
        for obj in arr:
            A, root = obj_to_structure(obj)
            if root is not None:
                raise PreconditionError("forbidden members carry no roots")
            members.append(A)
        return ForbiddenPlugin(tuple(members), name=f"forbidden:{path.name}")
    raise PreconditionError(f"unknown class selector {selector!r}")


def complete_with(A: Structure, plugin: ClassPlugin) -> CompletionResult:
    """Strong completion of A in the plugin's class."""
    return plugin.try_strong_completion(A)


# ---------------------------------------------------------------------------
# quotients: completions that identify vertices


def _partitions(items: Sequence[str]) -> Iterator[list[list[str]]]:
    """All set partitions, most blocks first (the identity comes first)."""
    items = list(items)

    def rec(i: int, blocks: list[list[str]]) -> Iterator[list[list[str]]]:
        if i == len(items):
            yield [list(b) for b in blocks]
            return
        v = items[i]
        blocks.append([v])
        yield from rec(i + 1, blocks)
        blocks.pop()
        for b in blocks:
            b.append(v)
            yield from rec(i + 1, blocks)
            b.pop()

    yield from sorted(rec(0, []), key=lambda bs: -len(bs))


def quotient_structure(A: Structure, blocks: Sequence[Sequence[str]]) -> tuple[Structure, Morphism]:
    """Image structure of the block-collapsing map (representatives: min token)."""
    rep = {}
    for b in blocks:
        r = min(b)
        for v in b:
            rep[v] = r
    verts = sorted(set(rep.values()))
    rels = {
        name: [tuple(rep[v] for v in t) for t in ts]
        for name, ts in A.relations.items()
    }
    Q = Structure(A.language, verts, rels)
    q = Morphism.make(A, Q, rep, "homomorphism-embedding")
    return Q, q


def try_completion(A: Structure, plugin: ClassPlugin) -> Optional[tuple[Morphism, Structure]]:
    """A completion that may identify vertices: quotient then strong-complete.

    Returns (quotient map, completed structure) for the first partition (in
    most-blocks-first order) whose collapse is a homomorphism-embedding and
    whose image strongly completes; None when no completion exists.
    """
    for blocks in _partitions(A.vertices):
        Q, q = quotient_structure(A, blocks)
        if not verify_morphism(q):
            continue
        result = plugin.try_strong_completion(Q)
        if result.ok:
            return q, result.completed
    return None


@dataclass(frozen=True)
class EquivalenceReport:
    plugin: str
    size_cap: int
    checked: int
    violations: tuple[Structure, ...]

    @property
    def holds(self) -> bool:
        return not self.violations


def completion_iff_strong(plugin: ClassPlugin, size_cap: int) -> EquivalenceReport:
    """Exhaustively compare completion and strong completion over the
    plugin's pattern class up to size_cap vertices."""
    checked = 0
    violations = []
    for P in plugin.patterns_up_to(size_cap):
        checked += 1
        strong = plugin.try_strong_completion(P).ok
        weak = try_completion(P, plugin) is not None
        if strong and not weak:
            raise StructureError("strong completion without a completion")
        if weak and not strong:
            violations.append(P)
    return EquivalenceReport(plugin.name, size_cap, checked, tuple(violations))


# ---------------------------------------------------------------------------
# local finiteness probing


@dataclass(frozen=True)
class ProbeReport:
    plugin: str
    n: int
    size_cap: int
    examined: int
    counterexamples: tuple[Structure, ...]
    inconclusive: bool

    @property
    def holds(self) -> bool:
        return not self.counterexamples


def _pullback_patterns(C0: Structure, k: int) -> Iterator[Structure]:
    """Structures on k vertices with a homomorphism-embedding to C0.

    Binary languages only.  A candidate is a vertex map f into C0 (taken
    non-decreasing, which is harmless up to isomorphism) together with a set
    of non-glued pairs that copy the exact induced pair of C0; the resulting
    map is a homomorphism-embedding by construction.
    """
    if any(arity > 2 for _, arity in C0.language.symbols):
        raise PreconditionError("pullback probing supports binary languages only")
    verts = _pattern_vertices(k)
    pairs = list(itertools.combinations(range(k), 2))
    c0verts = sorted(C0.vertices)
    for image in itertools.combinations_with_replacement(c0verts, k):
        f = dict(zip(verts, image))
        open_pairs = [(i, j) for (i, j) in pairs if image[i] != image[j]]
        base: dict[str, list] = {name: [] for name in C0.language.names()}
        for v in verts:
            for name, ts in C0.relations.items():
                arity = C0.language.arity(name)
                w = f[v]
                if arity == 1 and (w,) in ts:
                    base[name].append((v,))
                if arity == 2 and (w, w) in ts:
                    base[name].append((v, v))
        pair_tuples = []
        for (i, j) in open_pairs:
            u, v = verts[i], verts[j]
            wu, wv = image[i], image[j]
            extra = []
            for name, ts in C0.relations.items():
                if C0.language.arity(name) != 2:
                    continue
                if (wu, wv) in ts:
                    extra.append((name, (u, v)))
                if (wv, wu) in ts:
                    extra.append((name, (v, u)))
            pair_tuples.append(extra)
        for mask in range(1 << len(open_pairs)):
            rels = {name: list(ts) for name, ts in base.items()}
            for p, extra in enumerate(pair_tuples):
                if mask >> p & 1:
                    for name, t in extra:
                        rels[name].append(t)
            yield Structure(C0.language, verts, rels)


def probe_local_finiteness(
    plugin: ClassPlugin,
    C0: Structure,
    n: int,
    size_cap: int = 7,
    budget: int = 200_000,
) -> ProbeReport:
    """Search for structures violating the local finiteness bound n at C0.

    A counterexample has a homomorphism-embedding to C0, every substructure
    with at most n vertices strongly completes, yet itself does not.
    Candidates are pullback patterns along vertex maps into C0; the sweep
    stops (flagged inconclusive) when the budget runs out.
    """
    if C0.language != plugin.language:
        raise PreconditionError("C0 must live in the plugin's language")
    examined = 0
    counterexamples = []
    seen = set()
    inconclusive = False
    for k in range(n + 1, size_cap + 1):
        if inconclusive:
            break
        for P in _pullback_patterns(C0, k):
            examined += 1
            if examined > budget:
                inconclusive = True
                break
            if plugin.try_strong_completion(P).ok:
                continue
            small_ok = True
            for r in range(1, min(n, k) + 1):
                for S in itertools.combinations(P.vertices, r):
                    if not plugin.try_strong_completion(
                        induced_substructure(P, S)
                    ).ok:
                        small_ok = False
                        break
                if not small_ok:
                    break
            if small_ok:
                key = canonical_key(P)
                if key not in seen:
                    seen.add(key)
                    counterexamples.append(P)
    return ProbeReport(
        plugin.name, n, size_cap, examined, tuple(counterexamples), inconclusive
    )
