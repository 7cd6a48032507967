"""Tilings, clique-degree statistics and cover verification.

A tiling is a set of vertex-disjoint monochromatic copies of family
members.  Clique degrees count monochromatic transversal cliques through
a vertex; densities are exact rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Iterable, Optional, Sequence

from .errors import InvalidInput
from .graphs import ColouredCompleteGraph, FamilySpec, bits_of, mask_of


@dataclass(frozen=True)
class Piece:
    """One monochromatic copy: pattern vertex i maps to vertices[i]."""

    colour: int
    vertices: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.vertices)

    def vertex_set(self) -> frozenset[int]:
        return frozenset(self.vertices)


@dataclass(frozen=True)
class Tiling:
    pieces: tuple[Piece, ...]

    @classmethod
    def of(cls, pieces: Iterable[Piece]) -> "Tiling":
        return cls(tuple(pieces))

    def __iter__(self):
        return iter(self.pieces)

    def __len__(self) -> int:
        return len(self.pieces)

    def vertex_set(self) -> set[int]:
        out: set[int] = set()
        for p in self.pieces:
            out.update(p.vertices)
        return out

    def __add__(self, other: "Tiling") -> "Tiling":
        return Tiling(self.pieces + other.pieces)


def as_disjoint_parts(parts: Sequence[Iterable[int]]) -> tuple[tuple[int, ...], ...]:
    """Normalize and validate a tuple of pairwise-disjoint vertex sets."""
    norm = tuple(tuple(sorted(set(p))) for p in parts)
    seen: set[int] = set()
    for i, p in enumerate(norm):
        for v in p:
            if v in seen:
                raise InvalidInput(f"parts overlap at vertex {v} (part index {i})")
            seen.add(v)
    return norm


def clique_degree(
    g: ColouredCompleteGraph,
    v: int,
    parts: Sequence[Iterable[int]],
    colours: Iterable[int],
) -> int:
    """Count tuples (v_2,..,v_k) in V_2 x..x V_k spanning, together with v,
    a clique monochromatic in a single colour c, summed over c in `colours`.
    """
    norm = as_disjoint_parts(parts)
    for p in norm:
        if v in p:
            raise InvalidInput(f"vertex {v} lies inside a part")
    masks = [mask_of(p) for p in norm]
    total = 0
    for c in set(colours):
        if not 1 <= c <= g.r:
            raise InvalidInput(f"colour {c} out of range 1..{g.r}")
        total += _count_mono_tuples(g, c, v, masks)
    return total


def _count_mono_tuples(g: ColouredCompleteGraph, c: int, v: int, masks: list[int]) -> int:
    # DFS over parts, narrowing each later part to the common colour-c
    # neighbourhood of everything chosen so far; prune on empty intersection.
    k = len(masks)
    if k == 0:
        return 1

    def rec(i: int, cands: list[int]) -> int:
        if i == k - 1:
            return cands[i].bit_count()
        total = 0
        m = cands[i]
        while m:
            low = m & -m
            m ^= low
            w = low.bit_length() - 1
            nbr = g.neighbours(c, w)
            nxt = [cands[j] & nbr for j in range(i + 1, k)]
            if all(nxt):
                total += rec(i + 1, cands[: i + 1] + nxt)
        return total

    first = [mk & g.neighbours(c, v) for mk in masks]
    if not all(first):
        return 0
    return rec(0, first)


def clique_density(
    g: ColouredCompleteGraph,
    v: int,
    parts: Sequence[Iterable[int]],
    colours: Iterable[int],
) -> Fraction:
    norm = as_disjoint_parts(parts)
    sizes = [len(p) for p in norm]
    if any(s == 0 for s in sizes):
        raise InvalidInput("clique density undefined: empty part")
    return Fraction(clique_degree(g, v, norm, colours), prod(sizes))


@dataclass(frozen=True)
class TilingVerdict:
    ok: bool
    reason: str = ""
    witness: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.ok


def verify_tiling(
    g: ColouredCompleteGraph,
    family: FamilySpec,
    tiling: Tiling,
    universe: Iterable[int],
) -> TilingVerdict:
    """Accept iff pieces are disjoint, each one a monochromatic copy of the
    family member at its size (via the stated map), and their vertex sets
    partition `universe`.  Rejections carry the first violation found.
    """
    uni = set(universe)
    seen: set[int] = set()
    for idx, piece in enumerate(tiling):
        if not 1 <= piece.colour <= g.r:
            return TilingVerdict(False, "bad-colour", (idx, piece.colour))
        if len(set(piece.vertices)) != len(piece.vertices):
            return TilingVerdict(False, "non-injective-map", (idx,))
        for v in piece.vertices:
            if not 0 <= v < g.n:
                return TilingVerdict(False, "vertex-out-of-range", (idx, v))
            if v in seen:
                return TilingVerdict(False, "overlap", (idx, v))
            seen.add(v)
        pattern = family.member(piece.size)
        for a, b in pattern.edges:
            u, w = piece.vertices[a], piece.vertices[b]
            if g.colour(u, w) != piece.colour:
                return TilingVerdict(False, "miscoloured-edge", (idx, u, w, g.colour(u, w)))
    if seen != uni:
        missing = uni - seen
        if missing:
            return TilingVerdict(False, "uncovered-vertex", (min(missing),))
        extra = seen - uni
        return TilingVerdict(False, "vertex-outside-universe", (min(extra),))
    return TilingVerdict(True)


@dataclass(frozen=True)
class CoverVerdict:
    ok: bool
    reason: str = ""
    witness: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.ok


def canonical_cover_check(tiling: Tiling, parts: Sequence[Iterable[int]]) -> CoverVerdict:
    """Accept iff the tiling covers all of the first part while touching no
    other part in more vertices than it touches the first.
    """
    norm = as_disjoint_parts(parts)
    if not norm:
        raise InvalidInput("need at least one part")
    covered = tiling.vertex_set()
    first = set(norm[0])
    if not first <= covered:
        return CoverVerdict(False, "first-part-not-covered", (min(first - covered),))
    used_first = len(covered & first)
    for i, p in enumerate(norm[1:], start=2):
        used = len(covered & set(p))
        if used > used_first:
            return CoverVerdict(False, "part-overused", (i, used, used_first))
    return CoverVerdict(True)
