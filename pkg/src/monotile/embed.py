"""Monochromatic embedding by backtracking, greedy covering, and
exhaustive small-n colouring checks.

Search kernels operate on per-vertex neighbour bitmasks.  Pattern
vertices are tried in descending-degree order; host candidates in
ascending colour-degree order, pruning by intersecting the colour
neighbourhoods of already-embedded pattern neighbours.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .covers import Piece, Tiling
from .errors import BudgetExceeded, InvalidInput
from .graphs import ColouredCompleteGraph, FamilySpec, PatternGraph, bits_of, mask_of


def iter_embeddings(
    adj: Sequence[int],
    pattern: PatternGraph,
    allowed_mask: int,
    part_of: Optional[Sequence[int]] = None,
    caps: Optional[list[int]] = None,
    must_cover: int = 0,
    node_counter: Optional[list[int]] = None,
):
    """Yield injective maps of `pattern` into the graph given by `adj`
    masks, as image tuples indexed by pattern vertex.

    Optional constraints: per-part usage capacities and a mask of host
    vertices the image has to contain.  `node_counter` is a mutable
    [nodes, budget] pair; exceeding the budget raises BudgetExceeded.
    """
    pn = pattern.n
    if allowed_mask.bit_count() < pn:
        return
    if must_cover and must_cover & ~allowed_mask:
        return
    if must_cover and must_cover.bit_count() > pn:
        return
    deg = pattern.degrees
    order = sorted(range(pn), key=lambda q: (-deg[q], q))
    pos = {q: i for i, q in enumerate(order)}
    padj = pattern.adjacency
    # for each search slot, the earlier slots holding pattern neighbours
    back_nbrs = [
        [pos[w] for w in bits_of(padj[order[i]]) if pos[w] < i] for i in range(pn)
    ]
    image = [0] * pn
    used_caps = list(caps) if caps is not None else None

    def rec(i: int, used: int, covered: int):
        if node_counter is not None:
            node_counter[0] += 1
            if node_counter[0] > node_counter[1]:
                raise BudgetExceeded(f"embedding search budget {node_counter[1]} exhausted")
        if i == pn:
            if covered == must_cover:
                out = [0] * pn
                for slot, q in enumerate(order):
                    out[q] = image[slot]
                yield tuple(out)
            return
        # cannot cover the remaining required vertices with the slots left
        if (must_cover & ~covered).bit_count() > pn - i:
            return
        cand = allowed_mask & ~used
        for j in back_nbrs[i]:
            cand &= adj[image[j]]
            if not cand:
                return
        # prefer required vertices, then scarce ones (low degree)
        need = cand & must_cover & ~covered
        cand_list = sorted(
            bits_of(cand),
            key=lambda v: (not (need >> v) & 1, (adj[v] & allowed_mask).bit_count(), v),
        )
        for v in cand_list:
            if used_caps is not None:
                p = part_of[v]
                if used_caps[p] == 0:
                    continue
                used_caps[p] -= 1
            image[i] = v
            yield from rec(i + 1, used | (1 << v), covered | ((1 << v) & must_cover))
            if used_caps is not None:
                used_caps[part_of[v]] += 1

    yield from rec(0, 0, 0)


def _backtrack_embed(
    adj: Sequence[int],
    pattern: PatternGraph,
    allowed_mask: int,
    part_of: Optional[Sequence[int]] = None,
    caps: Optional[list[int]] = None,
    must_cover: int = 0,
) -> Optional[tuple[int, ...]]:
    """First embedding or None after exhausting the search space."""
    return next(
        iter_embeddings(adj, pattern, allowed_mask, part_of, caps, must_cover), None
    )


def find_mono_copy(
    g: ColouredCompleteGraph,
    pattern: PatternGraph,
    colour: Optional[int] = None,
    allowed: Optional[Iterable[int]] = None,
) -> Optional[Piece]:
    """First monochromatic copy of `pattern` inside `allowed`, or None.

    With `colour` given, only that colour is searched; otherwise colours
    are tried in increasing order.
    """
    allowed_mask = g.vertex_mask() if allowed is None else mask_of(allowed)
    if pattern.n > allowed_mask.bit_count():
        return None
    colours = [colour] if colour is not None else list(range(1, g.r + 1))
    if not pattern.edges:
        verts = tuple(bits_of(allowed_mask)[: pattern.n])
        return Piece(colours[0], verts)
    for c in colours:
        if not 1 <= c <= g.r:
            raise InvalidInput(f"colour {c} out of range 1..{g.r}")
        image = _backtrack_embed(g._nbr[c], pattern, allowed_mask)
        if image is not None:
            return Piece(c, image)
    return None


@dataclass
class GreedyResult:
    pieces: Tiling
    leftover: tuple[int, ...]
    history: list[tuple[int, int, int]] = field(default_factory=list)  # (|uncovered|, target, achieved)
    singleton_fallback: bool = False

    @property
    def piece_count(self) -> int:
        return len(self.pieces)


def greedy_cover(
    g: ColouredCompleteGraph,
    family: FamilySpec,
    universe: Iterable[int],
    gamma: Fraction | float,
    t: Fraction | float,
) -> GreedyResult:
    """Repeatedly embed a monochromatic family member on a t-fraction of the
    uncovered vertices until at most a gamma-fraction of `universe` is left.

    When the target size fails to embed, falls back to the largest
    embeddable smaller size; once the uncovered set has at most 2/t
    vertices it is finished off with single-vertex pieces.
    """
    gamma = Fraction(gamma)
    t = Fraction(t)
    if not 0 < gamma <= 1:
        raise InvalidInput(f"need 0 < gamma <= 1, got {gamma}")
    if not 0 < t <= 1:
        raise InvalidInput(f"need 0 < t <= 1, got {t}")
    uni = sorted(set(universe))
    goal = gamma * len(uni)
    uncovered = set(uni)
    pieces: list[Piece] = []
    history: list[tuple[int, int, int]] = []
    singleton_fallback = False
    while len(uncovered) > goal:
        cur = len(uncovered)
        if cur <= 2 / t:
            for v in sorted(uncovered):
                if len(uncovered) <= goal:
                    break
                pieces.append(Piece(1, (v,)))
                history.append((len(uncovered), 1, 1))
                uncovered.discard(v)
            break
        target = max(int(t * cur), 1)
        placed = None
        for m in range(target, 0, -1):
            try:
                member = family.member(m)
            except LookupError:
                continue
            placed = find_mono_copy(g, member, None, uncovered)
            if placed is not None:
                break
        if placed is None:
            raise InvalidInput("family has no embeddable member of any size >= 1")
        if placed.size == 1 and target > 1:
            singleton_fallback = True
        history.append((cur, target, placed.size))
        uncovered.difference_update(placed.vertices)
        pieces.append(placed)
    return GreedyResult(Tiling.of(pieces), tuple(sorted(uncovered)), history, singleton_fallback)


# -- exhaustive colouring enumeration ------------------------------------


@dataclass(frozen=True)
class AllColouringsResult:
    holds: bool
    counterexample: Optional[ColouredCompleteGraph]
    checked: int


class _MutableColouring:
    """Colour assignment over pair slots with incremental neighbour masks."""

    def __init__(self, n: int, r: int):
        self.n = n
        self.r = r
        self.slots = [(u, v) for u in range(n) for v in range(u + 1, n)]
        self.slot_colour = [1] * len(self.slots)
        self.nbr = [[0] * n for _ in range(r + 1)]
        for u, v in self.slots:
            self.nbr[1][u] |= 1 << v
            self.nbr[1][v] |= 1 << u

    def set_slot(self, j: int, c: int) -> None:
        u, v = self.slots[j]
        old = self.slot_colour[j]
        if old == c:
            return
        self.nbr[old][u] &= ~(1 << v)
        self.nbr[old][v] &= ~(1 << u)
        self.nbr[c][u] |= 1 << v
        self.nbr[c][v] |= 1 << u
        self.slot_colour[j] = c

    def snapshot(self) -> ColouredCompleteGraph:
        mat = [[0] * self.n for _ in range(self.n)]
        for j, (u, v) in enumerate(self.slots):
            mat[u][v] = self.slot_colour[j]
        return ColouredCompleteGraph(self.n, self.r, mat)


def _find_any_witness(col: _MutableColouring, patterns: Sequence[PatternGraph], full_mask: int):
    """A monochromatic copy of pattern i in colour i for some i, with the
    set of pair slots it occupies, or None."""
    for i, pat in enumerate(patterns):
        image = _backtrack_embed(col.nbr[i + 1], pat, full_mask)
        if image is not None:
            slot_index = {}
            for j, (u, v) in enumerate(col.slots):
                slot_index[(u, v)] = j
            used_slots = set()
            for a, b in pat.edges:
                u, v = image[a], image[b]
                used_slots.add(slot_index[(min(u, v), max(u, v))])
            return i, image, used_slots
    return None


def _enumerate_prefixed(
    n: int,
    patterns: Sequence[PatternGraph],
    prefix: tuple[int, ...],
    budget: int,
) -> AllColouringsResult:
    """Check every colouring extending `prefix` (values for the first slots).

    Enumeration walks a reflected mixed-radix Gray code over the free
    slots, so consecutive colourings differ in one pair; the current
    monochromatic witness is reused until one of its pairs is recoloured.
    """
    r = len(patterns)
    col = _MutableColouring(n, r)
    m = len(col.slots)
    full_mask = (1 << n) - 1
    for j, c in enumerate(prefix):
        col.set_slot(j, c + 1)
    free = list(range(len(prefix), m))
    mf = len(free)
    digits = [0] * mf
    for j in free:
        col.set_slot(j, 1)
    direction = [1] * mf
    focus = list(range(mf + 1))
    witness = _find_any_witness(col, patterns, full_mask)
    checked = 0
    while True:
        checked += 1
        if checked > budget:
            raise BudgetExceeded(
                f"colouring budget {budget} exhausted at n={n}",
                partial={"checked": checked - 1, "counterexample": None},
            )
        if witness is None:
            return AllColouringsResult(False, col.snapshot(), checked)
        j = focus[0]
        focus[0] = 0
        if j == mf:
            return AllColouringsResult(True, None, checked)
        digits[j] += direction[j]
        if digits[j] == 0 or digits[j] == r - 1:
            direction[j] = -direction[j]
            focus[j] = focus[j + 1]
            focus[j + 1] = j + 1
        slot = free[j]
        col.set_slot(slot, digits[j] + 1)
        if witness is not None and slot in witness[2]:
            witness = _find_any_witness(col, patterns, full_mask)


def check_all_colourings(
    n: int,
    patterns: Sequence[PatternGraph],
    budget: int = 4_500_000,
    workers: int = 1,
) -> AllColouringsResult:
    """TRUE iff every r-colouring of K_n (r = number of patterns) has a
    monochromatic copy of pattern i in colour i for some i.  FALSE comes
    with a counterexample colouring.
    """
    r = len(patterns)
    if r < 1:
        raise InvalidInput("need at least one pattern")
    m = n * (n - 1) // 2
    total = r**m
    if workers <= 1 or m < 2 or total <= 4 * r * r:
        return _enumerate_prefixed(n, patterns, (), budget)
    # split the colouring space by fixed two-slot prefixes
    prefixes = [(a, b) for a in range(r) for b in range(r)]
    per_budget = max(budget // len(prefixes), 1)
    checked = 0
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_enumerate_prefixed, n, patterns, pref, per_budget)
            for pref in prefixes
        ]
        for fut in futures:
            res = fut.result()
            checked += res.checked
            if not res.holds:
                return AllColouringsResult(False, res.counterexample, checked)
    return AllColouringsResult(True, None, checked)
