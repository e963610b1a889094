"""Finite relational structures: languages, morphisms, amalgamation.

Vertices are opaque text tokens; every enumeration is ordered
lexicographically on tokens so that all outputs are deterministic.
Undirected edges are stored as both ordered pairs and the order relation,
when present, is stored reflexively; neither convention is inferred, callers
declare the tuples they mean.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import LanguageMismatchError, MorphismError, StructureError

MORPHISM_KINDS = (
    "homomorphism",
    "monomorphism",
    "embedding",
    "homomorphism-embedding",
)


@dataclass(frozen=True)
class Language:
    """A relational signature: named symbols with positive arities.

    ``order_symbol`` optionally designates one binary symbol as the linear
    order used by ordered classes; it takes part in irreducibility checks
    unless a caller asks for irreducible-without-order semantics.
    """

    symbols: tuple[tuple[str, int], ...]
    order_symbol: Optional[str] = None

    def __post_init__(self):
        names = [name for name, _ in self.symbols]
        if len(set(names)) != len(names):
            raise StructureError("duplicate symbol names in language")
        for name, arity in self.symbols:
            if not isinstance(arity, int) or arity < 1:
                raise StructureError(f"symbol {name!r} has invalid arity {arity!r}")
        if self.order_symbol is not None:
            if self.arity(self.order_symbol) != 2:
                raise StructureError("order symbol must be binary")

    def arity(self, name: str) -> int:
        for sym, arity in self.symbols:
            if sym == name:
                return arity
        raise StructureError(f"unknown symbol {name!r}")

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.symbols)

    def has(self, name: str) -> bool:
        return any(sym == name for sym, _ in self.symbols)


def language(*symbols: tuple[str, int], order_symbol: Optional[str] = None) -> Language:
    return Language(tuple(symbols), order_symbol)


class Structure:
    """An immutable finite relational structure over a fixed language.

    ``vertices`` is kept sorted; ``relations`` maps every symbol of the
    language to a frozenset of tuples. Tuples may only use declared vertices
    and must match the symbol's arity.
    """

    __slots__ = ("language", "vertices", "_relations", "_key", "_hash", "_adj")

    def __init__(
        self,
        language: Language,
        vertices: Iterable[str],
        relations: Optional[Mapping[str, Iterable[Sequence[str]]]] = None,
    ):
        verts = list(vertices)
        if len(set(verts)) != len(verts):
            raise StructureError("vertex identifiers must be distinct")
        object.__setattr__(self, "language", language)
        object.__setattr__(self, "vertices", tuple(sorted(verts)))
        vset = set(verts)
        rels: dict[str, frozenset] = {name: frozenset() for name in language.names()}
        for name, tuples in (relations or {}).items():
            arity = language.arity(name)
            out = set()
            for t in tuples:
                t = tuple(t)
                if len(t) != arity:
                    raise StructureError(
                        f"tuple {t!r} has length {len(t)}, expected {arity} for {name!r}"
                    )
                for v in t:
                    if v not in vset:
                        raise StructureError(f"tuple {t!r} uses undeclared vertex {v!r}")
                out.add(t)
            rels[name] = frozenset(out)
        object.__setattr__(self, "_relations", rels)
        key = (
            language,
            self.vertices,
            tuple((name, tuple(sorted(rels[name]))) for name in sorted(rels)),
        )
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))
        object.__setattr__(self, "_adj", None)

    # -- basic accessors ---------------------------------------------------

    def tuples(self, name: str) -> frozenset:
        try:
            return self._relations[name]
        except KeyError:
            raise StructureError(f"unknown symbol {name!r}") from None

    @property
    def relations(self) -> dict[str, frozenset]:
        return dict(self._relations)

    def all_tuples(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        for name in sorted(self._relations):
            for t in sorted(self._relations[name]):
                yield name, t

    def vertex_count(self) -> int:
        return len(self.vertices)

    def tuple_count(self) -> int:
        return sum(len(ts) for ts in self._relations.values())

    def __eq__(self, other) -> bool:
        return isinstance(other, Structure) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        rels = ", ".join(
            f"{name}:{len(ts)}" for name, ts in sorted(self._relations.items()) if ts
        )
        return f"Structure({len(self.vertices)} vertices; {rels})"

    # -- derived data -------------------------------------------------------

    def adjacency(self, ignore_order: bool = False) -> dict[str, set[str]]:
        """Gaifman adjacency: u ~ v iff distinct and co-occurring in a tuple."""
        cached = self._adj
        if cached is None:
            cached = {}
            object.__setattr__(self, "_adj", cached)
        if ignore_order not in cached:
            adj: dict[str, set] = {v: set() for v in self.vertices}
            skip = self.language.order_symbol if ignore_order else None
            for name, ts in self._relations.items():
                if name == skip:
                    continue
                for t in ts:
                    uniq = set(t)
                    for u, v in itertools.combinations(sorted(uniq), 2):
                        adj[u].add(v)
                        adj[v].add(u)
            cached[ignore_order] = adj
        return cached[ignore_order]

    def replace(self, relations: Mapping[str, Iterable[Sequence[str]]]) -> "Structure":
        """Copy with some relations replaced wholesale."""
        rels = {name: ts for name, ts in self._relations.items()}
        for name, ts in relations.items():
            rels[name] = ts
        return Structure(self.language, self.vertices, rels)

    def rename(self, mapping: Mapping[str, str]) -> "Structure":
        """Copy with vertices renamed by an injective mapping."""
        if len(set(mapping.values())) != len(mapping):
            raise StructureError("rename mapping must be injective")
        def m(v):
            return mapping.get(v, v)
        rels = {
            name: [tuple(m(v) for v in t) for t in ts]
            for name, ts in self._relations.items()
        }
        return Structure(self.language, [m(v) for v in self.vertices], rels)


@dataclass(frozen=True)
class Morphism:
    """A map between structures together with its claimed kind.

    The certificate is re-checkable: ``verify_morphism`` decides whether the
    mapping really is of the declared kind.
    """

    source: Structure
    target: Structure
    map: tuple[tuple[str, str], ...]
    kind: str

    def __post_init__(self):
        if self.kind not in MORPHISM_KINDS:
            raise MorphismError(f"unknown morphism kind {self.kind!r}")

    @staticmethod
    def make(source: Structure, target: Structure, mapping: Mapping[str, str], kind: str) -> "Morphism":
        return Morphism(source, target, tuple(sorted(mapping.items())), kind)

    def as_dict(self) -> dict[str, str]:
        return dict(self.map)

    def apply(self, t: Sequence[str]) -> tuple[str, ...]:
        d = self.as_dict()
        return tuple(d[v] for v in t)

    def image_vertices(self) -> frozenset:
        return frozenset(v for _, v in self.map)

    def compose(self, other: "Morphism", kind: Optional[str] = None) -> "Morphism":
        """self after other: other maps into self's source."""
        if other.target != self.source:
            raise MorphismError("composition mismatch")
        d = self.as_dict()
        comp = {u: d[v] for u, v in other.map}
        return Morphism.make(other.source, self.target, comp, kind or self.kind)


# ---------------------------------------------------------------------------
# verification


def _check_total(f: Morphism) -> dict[str, str]:
    d = f.as_dict()
    src = set(f.source.vertices)
    if set(d) != src:
        raise MorphismError("map is not total on the source vertices")
    tgt = set(f.target.vertices)
    for v in d.values():
        if v not in tgt:
            raise MorphismError(f"map sends a vertex to undeclared {v!r}")
    return d


def _is_homomorphism(source: Structure, target: Structure, d: Mapping[str, str]) -> bool:
    for name, ts in source._relations.items():
        tt = target.tuples(name)
        for t in ts:
            if tuple(d[v] for v in t) not in tt:
                return False
    return True


def _reflects_on_image(source: Structure, target: Structure, d: Mapping[str, str]) -> bool:
    """For injective d: every target tuple inside the image pulls back."""
    inv = {w: v for v, w in d.items()}
    img = set(inv)
    for name, ts in target._relations.items():
        st = source.tuples(name)
        for t in ts:
            if all(w in img for w in t):
                if tuple(inv[w] for w in t) not in st:
                    return False
    return True


def _spans_irreducible(A: Structure, span: frozenset) -> bool:
    """Is span contained in some irreducible induced substructure of A?

    Backtracking over choices of covering tuples: a vertex set S induces an
    irreducible substructure iff every pair of S co-occurs in a tuple lying
    inside S.  Memoised per call on grown sets.
    """
    if len(span) <= 1:
        return True
    adj = A.adjacency()
    # quick necessary condition
    for u, v in itertools.combinations(sorted(span), 2):
        if v not in adj[u]:
            return False
    all_tuples = [set(t) for _, t in A.all_tuples()]
    seen_fail: set[frozenset] = set()

    def grow(S: frozenset) -> bool:
        if S in seen_fail:
            return False
        for u, v in itertools.combinations(sorted(S), 2):
            covered = False
            options = []
            for tv in all_tuples:
                if u in tv and v in tv:
                    if tv <= S:
                        covered = True
                        break
                    options.append(tv)
            if covered:
                continue
            for tv in options:
                if grow(S | frozenset(tv)):
                    return True
            seen_fail.add(S)
            return False
        return True

    return grow(frozenset(span))


def _is_hom_embedding(source: Structure, target: Structure, d: Mapping[str, str]) -> bool:
    if not _is_homomorphism(source, target, d):
        return False
    # injectivity on every pair that co-occurs in a tuple
    adj = source.adjacency()
    for u in source.vertices:
        for v in adj[u]:
            if u < v and d[u] == d[v]:
                return False
    # reflection on spans that sit inside an irreducible substructure
    preim: dict[str, list[str]] = {}
    for v, w in d.items():
        preim.setdefault(w, []).append(v)
    for name, ts in target._relations.items():
        st = source.tuples(name)
        for t in ts:
            pools = [preim.get(w) for w in t]
            if any(p is None for p in pools):
                continue
            for s in itertools.product(*pools):
                if s in st:
                    continue
                if _spans_irreducible(source, frozenset(s)):
                    return False
    return True


def verify_morphism(f: Morphism) -> bool:
    """Re-check a morphism certificate against its declared kind."""
    d = _check_total(f)
    if not _is_homomorphism(f.source, f.target, d):
        return False
    if f.kind == "homomorphism":
        return True
    if f.kind == "monomorphism":
        return len(set(d.values())) == len(d)
    if f.kind == "embedding":
        if len(set(d.values())) != len(d):
            return False
        return _reflects_on_image(f.source, f.target, d)
    return _is_hom_embedding(f.source, f.target, d)


def hom_embedding_oracle(f: Morphism) -> bool:
    """Exhaustive homomorphism-embedding check over all irreducible
    substructures; reference oracle for small sources (<= ~6 vertices)."""
    d = _check_total(f)
    if not _is_homomorphism(f.source, f.target, d):
        return False
    verts = f.source.vertices
    for r in range(1, len(verts) + 1):
        for S in itertools.combinations(verts, r):
            sub = induced_substructure(f.source, S)
            if not is_irreducible(sub):
                continue
            restricted = Morphism.make(sub, f.target, {v: d[v] for v in S}, "embedding")
            if not verify_morphism(restricted):
                return False
    return True


# ---------------------------------------------------------------------------
# enumeration


def _forward_ok(source, target, d, newly: str) -> bool:
    """All source tuples fully assigned after mapping `newly` land in target."""
    for name, ts in source._relations.items():
        tt = target.tuples(name)
        for t in ts:
            if newly in t and all(v in d for v in t):
                if tuple(d[v] for v in t) not in tt:
                    return False
    return True


def _vertex_profile(A: Structure) -> dict[str, tuple]:
    """Per-vertex occurrence counts by (symbol, position), for pruning."""
    prof: dict[str, dict] = {v: {} for v in A.vertices}
    for name, ts in A._relations.items():
        for t in ts:
            for i, v in enumerate(t):
                key = (name, i)
                prof[v][key] = prof[v].get(key, 0) + 1
    return {v: p for v, p in prof.items()}


def search_morphisms(
    A: Structure,
    B: Structure,
    kind: str,
    fixed: Optional[Mapping[str, str]] = None,
    require_injective: bool = False,
) -> Iterator[Morphism]:
    """Backtracking enumeration of morphisms A -> B of the given kind.

    ``fixed`` pins part of the map.  Deterministic: source vertices are
    processed in sorted order and candidates tried in sorted order, so the
    output order is the lexicographic order of assignment vectors.
    """
    if A.language != B.language:
        raise LanguageMismatchError("morphism search requires a shared language")
    if kind not in MORPHISM_KINDS:
        raise MorphismError(f"unknown morphism kind {kind!r}")
    injective = require_injective or kind in ("monomorphism", "embedding")
    pairwise = kind == "homomorphism-embedding"
    fixed = dict(fixed or {})
    for v, w in fixed.items():
        if v not in set(A.vertices) or w not in set(B.vertices):
            raise MorphismError("fixed assignment uses undeclared vertices")

    if injective and len(A.vertices) > len(B.vertices):
        return

    order = [v for v in A.vertices if v not in fixed]
    order = sorted(fixed) + order
    prune_profiles = kind in ("monomorphism", "embedding")
    profA = _vertex_profile(A) if prune_profiles else None
    profB = _vertex_profile(B) if prune_profiles else None
    adjA = A.adjacency()

    d: dict[str, str] = {}

    def candidates(v):
        if v in fixed:
            return [fixed[v]]
        return B.vertices

    def extend(i: int) -> Iterator[dict]:
        if i == len(order):
            yield dict(d)
            return
        v = order[i]
        used = set(d.values()) if injective else None
        for w in candidates(v):
            if injective and w in used:
                continue
            if pairwise and any(
                (u in d and d[u] == w) for u in adjA[v]
            ):
                continue
            if profA is not None:
                # an embedding cannot send v somewhere with fewer
                # occurrences in any (symbol, position) slot
                pa, pb = profA[v], profB[w]
                if any(pb.get(k, 0) < c for k, c in pa.items()):
                    continue
            d[v] = w
            if _forward_ok(A, B, d, v):
                yield from extend(i + 1)
            del d[v]

    for full in extend(0):
        m = Morphism.make(A, B, full, kind)
        if kind == "embedding":
            if not _reflects_on_image(A, B, full):
                continue
        elif kind == "homomorphism-embedding":
            if not _is_hom_embedding(A, B, full):
                continue
        yield m


def enumerate_morphisms(A: Structure, B: Structure, kind: str) -> list[Morphism]:
    """Complete, duplicate-free, deterministically ordered morphism set."""
    return list(search_morphisms(A, B, kind))


def copies_of(A: Structure, B: Structure) -> dict[frozenset, list[Morphism]]:
    """Copies of A in B: image vertex sets with their witness embeddings."""
    out: dict[frozenset, list[Morphism]] = {}
    for m in search_morphisms(A, B, "embedding"):
        out.setdefault(m.image_vertices(), []).append(m)
    return dict(sorted(out.items(), key=lambda kv: tuple(sorted(kv[0]))))


# ---------------------------------------------------------------------------
# substructures, irreducibility, connectivity


def induced_substructure(A: Structure, S: Iterable[str]) -> Structure:
    S = set(S)
    for v in S:
        if v not in set(A.vertices):
            raise StructureError(f"unknown vertex {v!r}")
    rels = {
        name: [t for t in ts if all(v in S for v in t)]
        for name, ts in A._relations.items()
    }
    return Structure(A.language, sorted(S), rels)


GAIFMAN_LANGUAGE = Language((("E", 2),))


def gaifman_graph(A: Structure, ignore_order: bool = False) -> Structure:
    """The 2-section: symmetric binary structure of co-occurring pairs."""
    adj = A.adjacency(ignore_order)
    edges = []
    for u in A.vertices:
        for v in adj[u]:
            edges.append((u, v))
    return Structure(GAIFMAN_LANGUAGE, A.vertices, {"E": edges})


def is_irreducible(A: Structure, ignore_order: bool = False) -> bool:
    adj = A.adjacency(ignore_order)
    n = len(A.vertices)
    return all(len(adj[v]) == n - 1 for v in A.vertices)


def connected_components(A: Structure, ignore_order: bool = False) -> list[frozenset]:
    adj = A.adjacency(ignore_order)
    seen: set[str] = set()
    comps = []
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
        comps.append(frozenset(comp))
    return comps


def is_connected(A: Structure) -> bool:
    return len(connected_components(A)) <= 1


# ---------------------------------------------------------------------------
# amalgamation


@dataclass(frozen=True)
class Amalgam:
    structure: Structure
    left: Morphism
    right: Morphism


def free_amalgamation(
    B1: Structure,
    B2: Structure,
    A: Structure,
    alpha1: Optional[Morphism] = None,
    alpha2: Optional[Morphism] = None,
) -> Amalgam:
    """Glue B1 and B2 along A with no identifications and no cross tuples.

    When the alphas are omitted, A must be an induced substructure of both
    (inclusion embeddings).  The result keeps B1's vertex names; fresh names
    are derived for B2's private vertices when they collide.
    """
    if alpha1 is None:
        alpha1 = Morphism.make(A, B1, {v: v for v in A.vertices}, "embedding")
    if alpha2 is None:
        alpha2 = Morphism.make(A, B2, {v: v for v in A.vertices}, "embedding")
    for alpha in (alpha1, alpha2):
        if not verify_morphism(alpha):
            raise MorphismError("free amalgamation requires embedding inputs")
    if alpha1.source != A or alpha2.source != A:
        raise MorphismError("alpha maps must start at the shared structure")

    a1 = alpha1.as_dict()
    a2inv = {w: v for v, w in alpha2.map}
    beta1 = {v: v for v in B1.vertices}
    taken = set(B1.vertices)
    beta2 = {}
    for w in B2.vertices:
        if w in a2inv:
            beta2[w] = a1[a2inv[w]]
        else:
            name = w
            while name in taken:
                name += "'"
            beta2[w] = name
            taken.add(name)

    verts = sorted(taken)
    rels: dict[str, list] = {name: [] for name in B1.language.names()}
    for name, ts in B1._relations.items():
        rels[name].extend(ts)
    for name, ts in B2._relations.items():
        rels[name].extend(tuple(beta2[v] for v in t) for t in ts)
    C = Structure(B1.language, verts, rels)
    return Amalgam(
        C,
        Morphism.make(B1, C, beta1, "embedding"),
        Morphism.make(B2, C, beta2, "embedding"),
    )


def is_strong_amalgamation(
    C: Structure,
    B1: Structure,
    B2: Structure,
    A: Structure,
    beta1: Morphism,
    beta2: Morphism,
) -> bool:
    """beta1(x1) = beta2(x2) exactly when x1 = x2 is a vertex of A."""
    if not (verify_morphism(beta1) and verify_morphism(beta2)):
        return False
    d1, d2 = beta1.as_dict(), beta2.as_dict()
    avs = set(A.vertices)
    for x1 in B1.vertices:
        for x2 in B2.vertices:
            same = d1[x1] == d2[x2]
            expected = x1 == x2 and x1 in avs
            if same != expected:
                return False
    return True


# ---------------------------------------------------------------------------
# isomorphism and canonical forms


def _invariant(A: Structure, v: str) -> tuple:
    out = []
    for name, ts in sorted(A._relations.items()):
        occ = [0] * A.language.arity(name)
        loops = 0
        for t in ts:
            for i, u in enumerate(t):
                if u == v:
                    occ[i] += 1
            if all(u == v for u in t):
                loops += 1
        out.append((name, tuple(occ), loops))
    return tuple(out)


def are_isomorphic(A: Structure, B: Structure) -> Optional[Morphism]:
    """A witness isomorphism, or None.  Deterministic."""
    if A.language != B.language:
        return None
    if len(A.vertices) != len(B.vertices):
        return None
    for name in A.language.names():
        if len(A.tuples(name)) != len(B.tuples(name)):
            return None
    if sorted(_invariant(A, v) for v in A.vertices) != sorted(
        _invariant(B, v) for v in B.vertices
    ):
        return None
    for m in search_morphisms(A, B, "embedding"):
        return Morphism.make(A, B, m.as_dict(), "embedding")
    return None


def canonical_key(A: Structure, pinned: Sequence[str] = ()) -> tuple:
    """A complete isomorphism invariant by brute-force relabelling.

    Vertices in ``pinned`` are assigned the labels 0..len(pinned)-1 in the
    given order (used for rooted structures); the rest are permuted within
    invariant classes.  Desk-scale only: guards at 10 free vertices.
    """
    pinned = list(pinned)
    free = [v for v in A.vertices if v not in set(pinned)]
    if len(free) > 10:
        raise StructureError("canonical_key guard: more than 10 free vertices")
    groups: dict[tuple, list[str]] = {}
    for v in free:
        groups.setdefault(_invariant(A, v), []).append(v)
    group_items = sorted(groups.items())
    pools = [itertools.permutations(vs) for _, vs in group_items]

    base = len(pinned)
    best = None
    for arrangement in itertools.product(*pools):
        label = {v: i for i, v in enumerate(pinned)}
        i = base
        for perm in arrangement:
            for v in perm:
                label[v] = i
                i += 1
        enc = tuple(
            (name, tuple(sorted(tuple(label[v] for v in t) for t in ts)))
            for name, ts in sorted(A._relations.items())
        )
        if best is None or enc < best:
            best = enc
    return (A.language, len(A.vertices), len(pinned), best)
