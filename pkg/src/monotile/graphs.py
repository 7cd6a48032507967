"""Edge-coloured complete graphs, pattern graphs and graph families.

Vertices are 0-based integers, colours are 1-based integers in [1, r].
Hot paths (neighbourhood intersections, clique counting) work on Python
int bitmasks, one bit per vertex.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

from .errors import InvalidInput, MissingFamilyMember


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def bits_of(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


class ColouredCompleteGraph:
    """Complete graph on n vertices with every pair coloured in [1, r].

    Immutable after construction; all query methods are pure and safe to
    call concurrently.
    """

    def __init__(self, n: int, r: int, colour_matrix: Sequence[Sequence[int]]):
        if n < 1:
            raise InvalidInput(f"need n >= 1, got {n}")
        if r < 1:
            raise InvalidInput(f"need r >= 1, got {r}")
        self.n = n
        self.r = r
        self._colour = [[0] * n for _ in range(n)]
        # neighbour bitmasks per colour (index 1..r)
        self._nbr = [[0] * n for _ in range(r + 1)]
        for u in range(n):
            for v in range(u + 1, n):
                c = colour_matrix[u][v]
                if not 1 <= c <= r:
                    raise InvalidInput(f"pair ({u},{v}) has colour {c}, expected 1..{r}")
                self._colour[u][v] = c
                self._colour[v][u] = c
                self._nbr[c][u] |= 1 << v
                self._nbr[c][v] |= 1 << u

    # -- constructors ---------------------------------------------------

    @classmethod
    def from_function(cls, n: int, r: int, colour_of: Callable[[int, int], int]) -> "ColouredCompleteGraph":
        mat = [[0] * n for _ in range(n)]
        for u in range(n):
            for v in range(u + 1, n):
                mat[u][v] = colour_of(u, v)
        return cls(n, r, mat)

    @classmethod
    def monochromatic(cls, n: int, r: int = 1, colour: int = 1) -> "ColouredCompleteGraph":
        return cls.from_function(n, r, lambda u, v: colour)

    @classmethod
    def random(cls, n: int, r: int, rng: random.Random | int) -> "ColouredCompleteGraph":
        if isinstance(rng, int):
            rng = random.Random(rng)
        return cls.from_function(n, r, lambda u, v: rng.randint(1, r))

    # -- queries ----------------------------------------------------------

    def colour(self, u: int, v: int) -> int:
        if u == v:
            raise InvalidInput(f"no self-loop at vertex {u}")
        return self._colour[u][v]

    def neighbours(self, colour: int, v: int) -> int:
        """Bitmask of the colour-`colour` neighbourhood of v."""
        return self._nbr[colour][v]

    def vertices(self) -> range:
        return range(self.n)

    def vertex_mask(self) -> int:
        return (1 << self.n) - 1

    def pairs(self):
        for u in range(self.n):
            for v in range(u + 1, self.n):
                yield u, v

    def degree(self, colour: int, v: int, within: Optional[int] = None) -> int:
        m = self._nbr[colour][v]
        if within is not None:
            m &= within
        return m.bit_count()

    def count_edges(self, colour: int, left_mask: int, right_mask: int) -> int:
        """Number of colour-c pairs with one endpoint in each mask (disjoint masks)."""
        total = 0
        for v in bits_of(left_mask):
            total += (self._nbr[colour][v] & right_mask).bit_count()
        return total

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ColouredCompleteGraph)
            and self.n == other.n
            and self.r == other.r
            and self._colour == other._colour
        )

    def __repr__(self) -> str:
        return f"ColouredCompleteGraph(n={self.n}, r={self.r})"


# -- colouring file format -----------------------------------------------
#
# line 1: "n r"
# lines 2..n: line for vertex i (0-based, i = 0..n-2) holds the colours of
# pairs {i, j} for j = i+1..n-1, space-separated.


def dump_colouring(g: ColouredCompleteGraph) -> str:
    lines = [f"{g.n} {g.r}"]
    for u in range(g.n - 1):
        lines.append(" ".join(str(g._colour[u][v]) for v in range(u + 1, g.n)))
    return "\n".join(lines) + "\n"


def load_colouring(text: str) -> ColouredCompleteGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInput("empty colouring file")
    head = lines[0].split()
    if len(head) != 2:
        raise InvalidInput(f"bad header {lines[0]!r}, expected 'n r'")
    n, r = int(head[0]), int(head[1])
    if len(lines) != 1 + max(n - 1, 0):
        raise InvalidInput(f"expected {n - 1} rows, found {len(lines) - 1}")
    mat = [[0] * n for _ in range(n)]
    for u in range(n - 1):
        row = [int(tok) for tok in lines[1 + u].split()]
        if len(row) != n - 1 - u:
            raise InvalidInput(f"row {u} has {len(row)} entries, expected {n - 1 - u}")
        for off, c in enumerate(row):
            mat[u][u + 1 + off] = c
    return ColouredCompleteGraph(n, r, mat)


def write_colouring(g: ColouredCompleteGraph, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dump_colouring(g))


def read_colouring(path: str) -> ColouredCompleteGraph:
    with open(path) as fh:
        return load_colouring(fh.read())


# -- pattern graphs ---------------------------------------------------------


@dataclass(frozen=True)
class PatternGraph:
    """Small uncoloured graph to be embedded; vertices 0..n-1."""

    n: int
    edges: frozenset[tuple[int, int]]
    label: str = ""

    def __post_init__(self):
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise InvalidInput(f"bad edge ({u},{v}) for pattern on {self.n} vertices")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], label: str = "") -> "PatternGraph":
        norm = frozenset((min(u, v), max(u, v)) for u, v in edges)
        return cls(n, norm, label)

    @property
    def adjacency(self) -> tuple[int, ...]:
        masks = [0] * self.n
        for u, v in self.edges:
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        return tuple(masks)

    @property
    def degrees(self) -> tuple[int, ...]:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return tuple(deg)

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0) if self.n else 0

    def edge_count(self) -> int:
        return len(self.edges)


def complete_pattern(n: int) -> PatternGraph:
    return PatternGraph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)], f"K_{n}")


# -- family file format ------------------------------------------------------
#
# line 1: "m"; then one "u v" edge per line, vertices 0-based.


def dump_family_member(p: PatternGraph) -> str:
    lines = [str(p.n)]
    for u, v in sorted(p.edges):
        lines.append(f"{u} {v}")
    return "\n".join(lines) + "\n"


def load_family_member(text: str, label: str = "") -> PatternGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InvalidInput("empty family file")
    m = int(lines[0])
    edges = []
    for ln in lines[1:]:
        u, v = ln.split()
        edges.append((int(u), int(v)))
    return PatternGraph.from_edges(m, edges, label)


# -- graph families ----------------------------------------------------------


def _cycle_member(m: int) -> PatternGraph:
    # single vertices and single edges count as degenerate cycles
    if m == 1:
        return PatternGraph.from_edges(1, [], "C_1")
    if m == 2:
        return PatternGraph.from_edges(2, [(0, 1)], "C_2")
    return PatternGraph.from_edges(m, [(i, (i + 1) % m) for i in range(m)], f"C_{m}")


def _path_member(m: int) -> PatternGraph:
    return PatternGraph.from_edges(m, [(i, i + 1) for i in range(m - 1)], f"P_{m}")


def _star_member(m: int) -> PatternGraph:
    return PatternGraph.from_edges(m, [(0, i) for i in range(1, m)], f"S_{m}")


def _cycle_power_member(m: int, k: int) -> PatternGraph:
    if m <= 2 * k + 1:
        return complete_pattern(m)
    edges = set()
    for i in range(m):
        for d in range(1, k + 1):
            j = (i + d) % m
            edges.add((min(i, j), max(i, j)))
    return PatternGraph.from_edges(m, edges, f"C_{m}^{k}")


@dataclass(frozen=True)
class FamilySpec:
    """A sequence of graphs, one member on m vertices for every m >= 1."""

    kind: str
    generator: Callable[[int], PatternGraph] = field(compare=False)
    max_degree_cap: Optional[int] = None

    def member(self, m: int) -> PatternGraph:
        if m < 1:
            raise InvalidInput(f"family member size must be >= 1, got {m}")
        p = self.generator(m)
        if p.n != m:
            raise InvalidInput(f"family {self.kind!r} produced {p.n} vertices at size {m}")
        if self.max_degree_cap is not None and p.max_degree > self.max_degree_cap:
            raise InvalidInput(
                f"family {self.kind!r} member at size {m} has max degree "
                f"{p.max_degree} > cap {self.max_degree_cap}"
            )
        return p

    def has_member(self, m: int) -> bool:
        try:
            self.member(m)
            return True
        except MissingFamilyMember:
            return False

    @classmethod
    def cycles(cls) -> "FamilySpec":
        return cls("cycles", _cycle_member, max_degree_cap=2)

    @classmethod
    def paths(cls) -> "FamilySpec":
        return cls("paths", _path_member, max_degree_cap=2)

    @classmethod
    def stars(cls) -> "FamilySpec":
        return cls("stars", _star_member, max_degree_cap=None)

    @classmethod
    def cycle_power(cls, k: int) -> "FamilySpec":
        if k < 1:
            raise InvalidInput(f"cycle power must be >= 1, got {k}")
        return cls(
            f"cycle-power({k})",
            lru_cache(maxsize=None)(lambda m: _cycle_power_member(m, k)),
            max_degree_cap=2 * k,
        )

    @classmethod
    def custom(cls, directory: str, max_degree_cap: Optional[int] = None) -> "FamilySpec":
        """Family read from a directory of per-size files named '<m>.txt'.

        A missing size is an error, never interpolated.
        """

        def load(m: int) -> PatternGraph:
            path = os.path.join(directory, f"{m}.txt")
            if not os.path.exists(path):
                raise MissingFamilyMember(f"no family file for size {m} in {directory}")
            with open(path) as fh:
                return load_family_member(fh.read(), label=f"custom_{m}")

        return cls(f"custom({directory})", load, max_degree_cap=max_degree_cap)


def family_member(family: FamilySpec, m: int) -> PatternGraph:
    """Functional alias for FamilySpec.member."""
    return family.member(m)


def family_by_name(name: str) -> FamilySpec:
    if name == "cycles":
        return FamilySpec.cycles()
    if name == "paths":
        return FamilySpec.paths()
    if name == "stars":
        return FamilySpec.stars()
    if name.startswith("cycle-power(") and name.endswith(")"):
        return FamilySpec.cycle_power(int(name[len("cycle-power(") : -1]))
    if os.path.isdir(name):
        return FamilySpec.custom(name)
    raise InvalidInput(f"unknown family {name!r}")
