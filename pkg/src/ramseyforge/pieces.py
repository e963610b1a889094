"""Pieces of structures, piece equivalence, and homogenising lifts.

A piece is a connected chunk cut off by a minimal separating cut, rooted at
the cut.  For a finite family F, pieces are grouped by their incompatibility
sets (which complements glue back to a member); the classes index the lifted
relations of the canonical F-lift, the homogenisation of the class of
structures avoiding homomorphism-embeddings from F.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .errors import PreconditionError, StructureError
from .structures import (
    Language,
    Morphism,
    Structure,
    are_isomorphic,
    canonical_key,
    connected_components,
    induced_substructure,
    is_connected,
    search_morphisms,
)


@dataclass(frozen=True)
class RootedStructure:
    """A structure with an ordered tuple of distinct root vertices."""

    body: Structure
    root: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.root)) != len(self.root):
            raise StructureError("root vertices must be distinct")
        vs = set(self.body.vertices)
        for v in self.root:
            if v not in vs:
                raise StructureError(f"root vertex {v!r} not in the body")

    @property
    def width(self) -> int:
        return len(self.root)

    def key(self) -> tuple:
        return canonical_key(self.body, pinned=self.root)

    def root_structure(self) -> Structure:
        return induced_substructure(self.body, self.root)

    def interior(self) -> frozenset:
        return frozenset(self.body.vertices) - frozenset(self.root)


def rooted_isomorphic(P: RootedStructure, Q: RootedStructure) -> bool:
    """Isomorphism carrying roots onto each other in order."""
    return P.width == Q.width and P.key() == Q.key()


@dataclass(frozen=True)
class Piece:
    """A piece of ``origin``: the side of a minimal separating cut together
    with the cut, rooted at the cut in a fixed order."""

    body: Structure
    root: tuple[str, ...]
    origin: Structure

    def rooted(self) -> RootedStructure:
        return RootedStructure(self.body, self.root)

    @property
    def width(self) -> int:
        return len(self.root)


@dataclass(frozen=True)
class Cut:
    cut: frozenset
    sides: tuple[frozenset, frozenset]


def minimal_separating_cuts(A: Structure) -> list[Cut]:
    """All (R, component pair) with R = N(side1) = N(side2)."""
    adj = A.adjacency()
    verts = list(A.vertices)
    out = []
    seen = set()
    for r in range(0, len(verts) - 1):
        for R in itertools.combinations(verts, r):
            Rset = frozenset(R)
            rest = [v for v in verts if v not in Rset]
            if not rest:
                continue
            comps = connected_components(induced_substructure(A, rest))
            if len(comps) < 2:
                continue
            neigh = {
                comp: frozenset().union(*(adj[v] for v in comp)) - comp
                for comp in comps
            }
            for c1, c2 in itertools.combinations(sorted(comps, key=sorted), 2):
                if neigh[c1] == Rset and neigh[c2] == Rset:
                    key = (Rset, frozenset((c1, c2)))
                    if key not in seen:
                        seen.add(key)
                        out.append(Cut(Rset, (c1, c2)))
    out.sort(key=lambda c: (sorted(c.cut), sorted(map(sorted, c.sides))))
    return out


def pieces(A: Structure) -> list[Piece]:
    """Pieces of a connected structure, up to rooted isomorphism.

    Every minimal separating cut contributes each of its sides under every
    root ordering; representatives are deterministic.
    """
    if not is_connected(A):
        raise PreconditionError("pieces are defined for connected structures")
    found: dict[tuple, Piece] = {}
    for cut in minimal_separating_cuts(A):
        for side in cut.sides:
            body = induced_substructure(A, side | cut.cut)
            for order in itertools.permutations(sorted(cut.cut)):
                piece = Piece(body, tuple(order), A)
                found.setdefault(piece.rooted().key(), piece)
    return [found[k] for k in sorted(found)]


# ---------------------------------------------------------------------------
# gluing


def piece_glue(P1: RootedStructure, P2: RootedStructure) -> Optional[Structure]:
    """Free amalgamation identifying the roots in order; None when the
    root-induced structures disagree under the order bijection."""
    if P1.width != P2.width:
        return None
    r1, r2 = P1.root_structure(), P2.root_structure()
    bij = dict(zip(P1.root, P2.root))
    image = r1.rename({v: f"g{i}" for i, v in enumerate(P1.root)})
    image2 = r2.rename({v: f"g{i}" for i, v in enumerate(P2.root)})
    if image != image2:
        return None
    m1 = {v: f"g{P1.root.index(v)}" if v in P1.root else f"a.{v}" for v in P1.body.vertices}
    m2 = {v: f"g{P2.root.index(v)}" if v in P2.root else f"b.{v}" for v in P2.body.vertices}
    verts = sorted(set(m1.values()) | set(m2.values()))
    rels: dict[str, list] = {name: [] for name in P1.body.language.names()}
    for name, ts in P1.body.relations.items():
        rels[name].extend(tuple(m1[v] for v in t) for t in ts)
    for name, ts in P2.body.relations.items():
        rels[name].extend(tuple(m2[v] for v in t) for t in ts)
    return Structure(P1.body.language, verts, rels)


# ---------------------------------------------------------------------------
# families and equivalence


class PieceFamily:
    """A finite family F with its derived piece data.

    Pieces of one class share their incompatibility set: the complements
    (drawn from decompositions of members) gluing with them to a member.  For
    finite F equality of these restricted sets decides the full equivalence.
    """

    def __init__(self, members: Sequence[Structure]):
        members = tuple(members)
        if not members:
            raise PreconditionError("piece families must be nonempty")
        lang = members[0].language
        for M in members:
            if M.language != lang:
                raise PreconditionError("family members must share a language")
            if not is_connected(M):
                raise PreconditionError("family members must be connected")
        self.language = lang
        self.members = members
        self.member_keys = frozenset(canonical_key(M) for M in members)
        self._members_by_sig: dict[tuple, list[Structure]] = {}
        for M in members:
            self._members_by_sig.setdefault(_size_signature(M), []).append(M)

        piece_pool: dict[tuple, Piece] = {}
        complement_pool: dict[tuple, RootedStructure] = {}
        for M in members:
            for cut in minimal_separating_cuts(M):
                for side in cut.sides:
                    body = induced_substructure(M, side | cut.cut)
                    co_body = induced_substructure(M, set(M.vertices) - side)
                    for order in itertools.permutations(sorted(cut.cut)):
                        piece = Piece(body, tuple(order), M)
                        piece_pool.setdefault(piece.rooted().key(), piece)
                        comp = RootedStructure(co_body, tuple(order))
                        complement_pool.setdefault(comp.key(), comp)
        self.pieces = [piece_pool[k] for k in sorted(piece_pool)]
        self.complements = [complement_pool[k] for k in sorted(complement_pool)]

        self._inc_cache: dict[tuple, frozenset] = {}
        groups: dict[tuple[int, frozenset], list[Piece]] = {}
        for piece in self.pieces:
            inc = self.incompatibility_keys(piece.rooted())
            groups.setdefault((piece.width, inc), []).append(piece)
        ordered = sorted(
            groups.items(), key=lambda kv: (kv[0][0], kv[1][0].rooted().key())
        )
        self.classes = tuple(
            PieceClass(i, width, tuple(ps))
            for i, ((width, _), ps) in enumerate(ordered)
        )

    def is_member(self, A: Structure) -> bool:
        """Isomorphic to some family member (by backtracking search)."""
        for M in self._members_by_sig.get(_size_signature(A), ()):
            if are_isomorphic(A, M) is not None:
                return True
        return False

    def incompatibility_keys(self, P: RootedStructure) -> frozenset:
        cached = self._inc_cache.get(P.key())
        if cached is not None:
            return cached
        keys = set()
        for D in self.complements:
            if D.width != P.width:
                continue
            glued = piece_glue(P, D)
            if glued is not None and self.is_member(glued):
                keys.add(D.key())
        result = frozenset(keys)
        self._inc_cache[P.key()] = result
        return result

    def incompatibility_set(self, P: RootedStructure) -> list[RootedStructure]:
        keys = self.incompatibility_keys(P)
        return [D for D in self.complements if D.key() in keys]

    def class_of(self, P: RootedStructure) -> Optional[int]:
        inc = self.incompatibility_keys(P)
        for cls in self.classes:
            if cls.width == P.width and self.incompatibility_keys(
                cls.pieces[0].rooted()
            ) == inc:
                return cls.index
        return None


def _size_signature(A: Structure) -> tuple:
    return (
        len(A.vertices),
        tuple((name, len(ts)) for name, ts in sorted(A.relations.items())),
    )


@dataclass(frozen=True)
class PieceClass:
    index: int
    width: int
    pieces: tuple[Piece, ...]

    @property
    def representative(self) -> Piece:
        return self.pieces[0]


def incompatibility_set(P, family) -> list[RootedStructure]:
    family = family if isinstance(family, PieceFamily) else PieceFamily(family)
    rooted = P.rooted() if isinstance(P, Piece) else P
    return family.incompatibility_set(rooted)


def piece_equivalence_classes(family) -> tuple[PieceClass, ...]:
    family = family if isinstance(family, PieceFamily) else PieceFamily(family)
    return family.classes


# ---------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class MembershipReport:
    member: bool
    forbidden: Optional[Structure] = None
    witness: Optional[Morphism] = None

    def __bool__(self):
        return self.member


_MODE_KINDS = {
    "hom-embedding": "homomorphism-embedding",
    "homomorphism": "homomorphism",
    "embedding": "embedding",
    "monomorphism": "monomorphism",
}


def forb_membership(A: Structure, members: Iterable[Structure], mode: str = "hom-embedding") -> MembershipReport:
    """Does A avoid every family member under the given morphism mode?"""
    kind = _MODE_KINDS.get(mode)
    if kind is None:
        raise PreconditionError(f"unknown membership mode {mode!r}")
    for F in members:
        for m in search_morphisms(F, A, kind):
            return MembershipReport(False, F, m)
    return MembershipReport(True)


# ---------------------------------------------------------------------------
# lifts


@dataclass(frozen=True)
class LiftedStructure:
    """An F-lift: a base structure plus class-indexed tuple relations."""

    base: Structure
    ext: tuple[tuple[int, frozenset], ...]
    family: PieceFamily

    @staticmethod
    def make(base: Structure, ext: Mapping[int, Iterable[tuple]], family: PieceFamily) -> "LiftedStructure":
        widths = {cls.index: cls.width for cls in family.classes}
        norm = []
        for i in sorted(widths):
            tuples = frozenset(map(tuple, ext.get(i, ())))
            for t in tuples:
                if len(t) != widths[i]:
                    raise StructureError(
                        f"class {i} tuples must have width {widths[i]}"
                    )
            norm.append((i, tuples))
        return LiftedStructure(base, tuple(norm), family)

    def ext_map(self) -> dict[int, frozenset]:
        return dict(self.ext)

    def restrict(self, vertices: Iterable[str]) -> "LiftedStructure":
        keep = set(vertices)
        return LiftedStructure.make(
            induced_substructure(self.base, keep),
            {
                i: {t for t in ts if all(v in keep for v in t)}
                for i, ts in self.ext
            },
            self.family,
        )

    def lifted_language(self) -> Language:
        symbols = list(self.base.language.symbols)
        for cls in self.family.classes:
            symbols.append((f"ext:{cls.index}:{cls.width}", cls.width))
        return Language(tuple(symbols), self.base.language.order_symbol)

    def as_structure(self) -> Structure:
        rels = {name: list(ts) for name, ts in self.base.relations.items()}
        for i, ts in self.ext:
            cls = self.family.classes[i]
            rels[f"ext:{cls.index}:{cls.width}"] = sorted(ts)
        return Structure(self.lifted_language(), self.base.vertices, rels)

    def __eq__(self, other):
        return (
            isinstance(other, LiftedStructure)
            and self.base == other.base
            and self.ext == other.ext
            and self.family.member_keys == other.family.member_keys
        )

    def __hash__(self):
        return hash((self.base, self.ext))


def _root_tuples(A: Structure, width: int) -> Iterator[tuple[str, ...]]:
    yield from itertools.permutations(A.vertices, width)


def _piece_roots_in(piece: Piece, A: Structure, at: tuple[str, ...]) -> bool:
    fixed = dict(zip(piece.root, at))
    for _ in search_morphisms(
        piece.body, A, "homomorphism-embedding", fixed=fixed
    ):
        return True
    return False


def canonical_lift(A: Structure, family) -> LiftedStructure:
    """Tuples of class i: roots of homomorphism-embeddings of class-i pieces
    into A that are injective on the root."""
    family = family if isinstance(family, PieceFamily) else PieceFamily(family)
    if A.language != family.language:
        raise PreconditionError("lift base must share the family's language")
    ext: dict[int, set] = {cls.index: set() for cls in family.classes}
    for cls in family.classes:
        for at in _root_tuples(A, cls.width):
            if any(_piece_roots_in(piece, A, at) for piece in cls.pieces):
                ext[cls.index].add(at)
    return LiftedStructure.make(A, ext, family)


@dataclass(frozen=True)
class MaximalLiftResult:
    lift: LiftedStructure
    witness: Structure
    status: str  # "stable" | "inconclusive"


def maximal_lift(A: Structure, family, growth_cap: Optional[int] = None) -> MaximalLiftResult:
    """Saturate the canonical lift of A by attaching pieces inside Forb(F).

    Grows a witness W containing A; a class tuple can be added when a fresh
    copy of a class piece attaches at it without creating a family member.
    Stable when no attachment is possible within the growth cap; otherwise
    the result is flagged inconclusive.
    """
    family = family if isinstance(family, PieceFamily) else PieceFamily(family)
    if not forb_membership(A, family.members):
        raise PreconditionError("the base structure must avoid the family")
    if growth_cap is None:
        growth_cap = max(len(M.vertices) for M in family.members)

    W = A
    capped = False
    changed = True
    counter = 0
    while changed:
        changed = False
        current = canonical_lift(W, family).restrict(A.vertices)
        ext = current.ext_map()
        for cls in family.classes:
            for at in _root_tuples(A, cls.width):
                if at in ext[cls.index]:
                    continue
                for piece in cls.pieces:
                    extra = len(piece.body.vertices) - piece.width
                    if len(W.vertices) - len(A.vertices) + extra > growth_cap:
                        capped = True
                        continue
                    W2 = _attach(W, piece, at, counter)
                    if W2 is None:
                        continue
                    if forb_membership(W2, family.members):
                        W = W2
                        counter += 1
                        changed = True
                        break
                if changed:
                    break
            if changed:
                break
    final = canonical_lift(W, family).restrict(A.vertices)
    return MaximalLiftResult(final, W, "inconclusive" if capped else "stable")


def _attach(W: Structure, piece: Piece, at: tuple[str, ...], counter: int) -> Optional[Structure]:
    """W plus a fresh copy of the piece's interior glued at the root tuple,
    or None when the piece's root-internal tuples are absent at the site."""
    root_map = dict(zip(piece.root, at))
    rootset = set(piece.root)
    for name, ts in piece.body.relations.items():
        target = W.tuples(name)
        for t in ts:
            if all(v in rootset for v in t):
                if tuple(root_map[v] for v in t) not in target:
                    return None
    rename = dict(root_map)
    for v in piece.body.vertices:
        if v not in rootset:
            rename[v] = f"x{counter}.{v}"
    rels = {name: list(ts) for name, ts in W.relations.items()}
    for name, ts in piece.body.relations.items():
        rels[name].extend(tuple(rename[v] for v in t) for t in ts)
    verts = list(W.vertices) + [rename[v] for v in piece.body.vertices if v not in rootset]
    return Structure(W.language, verts, rels)


@dataclass(frozen=True)
class WitnessAmalgamResult:
    ok: bool
    structure: Optional[Structure]
    lift: Optional[LiftedStructure]
    failures: tuple[str, ...]

    def __bool__(self):
        return self.ok


def witness_amalgam(
    X: LiftedStructure,
    Y: LiftedStructure,
    Z: LiftedStructure,
    W_X: Structure,
    W_Y: Structure,
) -> WitnessAmalgamResult:
    """Free amalgamation of two witnesses over the shadow of their common
    part; re-checks membership and that the amalgam still witnesses X and Y."""
    family = X.family
    failures: list[str] = []
    zv = set(Z.base.vertices)
    if set(W_X.vertices) & set(W_Y.vertices) != zv:
        raise PreconditionError("witness overlap must be exactly the common part")
    for label, W, L in (("left", W_X, X), ("right", W_Y, Y)):
        if not set(L.base.vertices) <= set(W.vertices):
            raise PreconditionError(f"{label} witness does not contain its lift base")
        if induced_substructure(W, L.base.vertices) != L.base:
            raise PreconditionError(f"{label} witness does not induce its lift base")
    if induced_substructure(W_X, zv) != Z.base or induced_substructure(W_Y, zv) != Z.base:
        raise PreconditionError("witnesses disagree on the shadow of the common part")

    from .structures import free_amalgamation

    am = free_amalgamation(W_X, W_Y, induced_substructure(W_X, zv))
    D = am.structure
    membership = forb_membership(D, family.members)
    if not membership:
        failures.append("amalgam contains a family member")
        return WitnessAmalgamResult(False, D, None, tuple(failures))
    lift = canonical_lift(D, family)
    for label, L in (("left", X), ("right", Y), ("common", Z)):
        if lift.restrict(L.base.vertices) != L:
            failures.append(f"amalgam lift does not restrict to the {label} part")
    return WitnessAmalgamResult(not failures, D, lift, tuple(failures))


# ---------------------------------------------------------------------------
# serialization sidecar


def lift_sidecar(L: LiftedStructure) -> dict:
    from .rsf import structure_to_obj

    return {
        str(cls.index): {
            "width": cls.width,
            "piece": structure_to_obj(
                cls.representative.body, root=cls.representative.root
            ),
        }
        for cls in L.family.classes
    }
