"""Convenience constructors for common fixture structures."""

from __future__ import annotations

import itertools
from typing import Iterable, Optional, Sequence

from .structures import Structure, language

GRAPH = language(("E", 2))
ORDERED_GRAPH = language(("E", 2), ("leq", 2), order_symbol="leq")
POSET = language(("prec", 2), ("leq", 2), order_symbol="leq")
POINTED = language(("U", 2), ("S", 1))
ORDERED_POINTED = language(("U", 2), ("S", 1), ("leq", 2), order_symbol="leq")


def _sym(edges: Iterable[tuple[str, str]]) -> list[tuple[str, str]]:
    out = []
    for u, v in edges:
        out.append((u, v))
        out.append((v, u))
    return out


def graph(vertices: Iterable[str], edges: Iterable[tuple[str, str]]) -> Structure:
    """Undirected graph; edges stored as both ordered pairs."""
    return Structure(GRAPH, vertices, {"E": _sym(edges)})


def linear_order_tuples(order: Sequence[str]) -> list[tuple[str, str]]:
    """Reflexive linear order pairs for the given vertex sequence."""
    out = [(v, v) for v in order]
    for i, u in enumerate(order):
        for v in order[i + 1 :]:
            out.append((u, v))
    return out


def ordered_graph(
    vertices: Sequence[str],
    edges: Iterable[tuple[str, str]],
    order: Optional[Sequence[str]] = None,
) -> Structure:
    """Undirected graph with a reflexive linear order (vertex order by default)."""
    order = list(order) if order is not None else sorted(vertices)
    return Structure(
        ORDERED_GRAPH,
        vertices,
        {"E": _sym(edges), "leq": linear_order_tuples(order)},
    )


def cycle_graph(n: int, prefix: str = "c") -> Structure:
    verts = [f"{prefix}{i}" for i in range(n)]
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    return graph(verts, edges)


def path_graph(n: int, prefix: str = "p") -> Structure:
    verts = [f"{prefix}{i}" for i in range(n)]
    edges = [(verts[i], verts[i + 1]) for i in range(n - 1)]
    return graph(verts, edges)


def complete_graph(n: int, prefix: str = "k") -> Structure:
    verts = [f"{prefix}{i}" for i in range(n)]
    edges = list(itertools.combinations(verts, 2))
    return graph(verts, edges)


def poset(
    vertices: Sequence[str],
    prec_pairs: Iterable[tuple[str, str]],
    order: Optional[Sequence[str]] = None,
) -> Structure:
    """Two-relation structure: prec pairs (reflexive closure added) plus a
    reflexive linear order when ``order`` is given, else only diagonals."""
    verts = list(vertices)
    prec = set((v, v) for v in verts) | set(prec_pairs)
    if order is not None:
        leq = linear_order_tuples(list(order))
    else:
        leq = [(v, v) for v in verts]
    return Structure(POSET, verts, {"prec": sorted(prec), "leq": leq})


def pointed_equivalence(
    classes: Sequence[Sequence[str]],
    ordered: bool = False,
    order: Optional[Sequence[str]] = None,
) -> Structure:
    """Pointed equivalence: last vertex of each class is its special point;
    every non-special vertex is linked to it by a U pair."""
    verts = [v for cls in classes for v in cls]
    special = [cls[-1] for cls in classes]
    upairs = [(v, cls[-1]) for cls in classes for v in cls[:-1]]
    rels = {"U": upairs, "S": [(s,) for s in special]}
    if ordered:
        rels["leq"] = linear_order_tuples(list(order) if order else sorted(verts))
        return Structure(ORDERED_POINTED, verts, rels)
    return Structure(POINTED, verts, rels)
