"""Ground-truth oracles: exact minimum monochromatic tilings, worst-case
tiling numbers over all colourings at tiny n, exact minimum star covers,
and the stars failure-probability bound.

The two-colour cycle checks at n <= 7 run over all colourings with
numpy bit tricks: a colouring of K_n is a bitmask over pair slots
(bit 0 = colour 1, bit 1 = colour 2) and spanning-cycle feasibility is
an OR over precomputed cycle masks, evaluated for every colouring at
once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Optional, Sequence

import mpmath
import numpy as np

from .covers import Piece, Tiling
from .errors import InvalidInput, SearchExhausted
from .graphs import ColouredCompleteGraph, FamilySpec, PatternGraph, bits_of, mask_of
from .embed import _backtrack_embed


# -- exact minimum tiling ---------------------------------------------------


@dataclass
class MinTilingResult:
    tiling: Tiling
    size: int
    optimal: bool
    nodes: int


def _candidate_pieces(
    g: ColouredCompleteGraph, family: FamilySpec, universe: Sequence[int]
) -> list[tuple[int, Piece]]:
    """All monochromatic spanning pieces, canonical per (vertex set, colour)."""
    out: list[tuple[int, Piece]] = []
    verts = sorted(universe)
    for m in range(1, len(verts) + 1):
        try:
            member = family.member(m)
        except LookupError:
            continue
        edgeless = not member.edges
        for subset in combinations(verts, m):
            smask = mask_of(subset)
            if edgeless:
                out.append((smask, Piece(1, subset)))
                continue
            for c in range(1, g.r + 1):
                image = _backtrack_embed(g._nbr[c], member, smask)
                if image is not None:
                    out.append((smask, Piece(c, image)))
    return out


def min_tiling(
    g: ColouredCompleteGraph,
    family: FamilySpec,
    universe: Optional[Sequence[int]] = None,
    cap: int = 12,
    node_budget: int = 2_000_000,
) -> MinTilingResult:
    """Provably minimum monochromatic tiling of `universe` by branch and
    bound over spanning pieces.  If the node budget runs out the best
    tiling found so far is returned with optimal=False.
    """
    verts = sorted(universe) if universe is not None else list(range(g.n))
    if len(verts) > cap:
        raise InvalidInput(f"universe size {len(verts)} exceeds cap {cap}")
    cands = _candidate_pieces(g, family, verts)
    if not cands:
        raise SearchExhausted("no embeddable family member")
    full = mask_of(verts)
    max_piece = max(m.bit_count() for m, _ in cands)
    by_vertex: dict[int, list[tuple[int, Piece]]] = {v: [] for v in verts}
    for m, piece in cands:
        for v in bits_of(m):
            by_vertex[v].append((m, piece))
    for v in verts:
        by_vertex[v].sort(key=lambda mp: -mp[0].bit_count())

    best_size = full.bit_count() + 1
    best: Optional[list[Piece]] = None
    nodes = 0
    out_of_budget = False

    def dfs(uncovered: int, chosen: list[Piece]) -> None:
        nonlocal best_size, best, nodes, out_of_budget
        nodes += 1
        if nodes > node_budget:
            out_of_budget = True
            return
        if uncovered == 0:
            if len(chosen) < best_size:
                best_size = len(chosen)
                best = list(chosen)
            return
        lb = len(chosen) + -(-uncovered.bit_count() // max_piece)
        if lb >= best_size:
            return
        v = (uncovered & -uncovered).bit_length() - 1
        for m, piece in by_vertex[v]:
            if m & ~uncovered:
                continue
            chosen.append(piece)
            dfs(uncovered & ~m, chosen)
            chosen.pop()
            if out_of_budget:
                return

    dfs(full, [])
    if best is None:
        raise SearchExhausted("no tiling exists for this family on this universe")
    return MinTilingResult(Tiling.of(best), best_size, not out_of_budget, nodes)


# -- all-colourings machinery for two-coloured cycle tilings ----------------


def _pair_slots(n: int) -> list[tuple[int, int]]:
    return [(u, v) for u in range(n) for v in range(u + 1, n)]


def _slot_index(n: int) -> dict[tuple[int, int], int]:
    return {p: i for i, p in enumerate(_pair_slots(n))}


def _cycle_masks(subset: Sequence[int], slot: dict[tuple[int, int], int]) -> list[int]:
    """Pair-slot masks of all distinct spanning cycles on `subset` (size >= 3)."""
    s = sorted(subset)
    first, rest = s[0], s[1:]
    masks = []
    for perm in permutations(rest):
        if perm[0] > perm[-1]:  # each cycle once, not twice per direction
            continue
        cyc = (first,) + perm
        m = 0
        for i, u in enumerate(cyc):
            v = cyc[(i + 1) % len(cyc)]
            m |= 1 << slot[(min(u, v), max(u, v))]
        masks.append(m)
    return masks


def _piece_feasible(colourings: np.ndarray, subset: tuple[int, ...], colour: int, slot) -> np.ndarray:
    """Boolean array over all colourings: `subset` spans a single
    monochromatic cycle piece of the given colour (1 = bit clear)."""
    size = len(subset)
    if size == 1:
        return np.ones(colourings.shape, dtype=bool)
    if size == 2:
        bit = slot[(subset[0], subset[1])]
        has = (colourings >> np.uint64(bit)) & np.uint64(1)
        return has == (0 if colour == 1 else 1)
    out = np.zeros(colourings.shape, dtype=bool)
    for m in _cycle_masks(subset, slot):
        mm = np.uint64(m)
        if colour == 1:
            out |= (colourings & mm) == 0
        else:
            out |= (colourings & mm) == mm
    return out


@dataclass
class LehelReport:
    n: int
    total: int
    all_at_most_two: bool
    all_optimal_two_piece_bicolour: bool
    count_single_piece: int
    count_two_piece: int
    violations: list[int] = field(default_factory=list)


def colouring_from_index(n: int, index: int) -> ColouredCompleteGraph:
    """Decode a pair-slot bitmask into a 2-colouring (bit set = colour 2)."""
    mat = [[0] * n for _ in range(n)]
    for i, (u, v) in enumerate(_pair_slots(n)):
        mat[u][v] = 2 if (index >> i) & 1 else 1
    return ColouredCompleteGraph(n, 2, mat)


def lehel_exhaustive(n: int) -> LehelReport:
    """For every 2-colouring of K_n, decide whether the vertex set splits
    into at most two monochromatic cycle pieces, and whether an optimal
    two-piece split can use pieces of different colours.  Pieces on one
    or two vertices take any colour label (no edges) or the edge colour.
    """
    if n < 1:
        raise InvalidInput("need n >= 1")
    slots = _pair_slots(n)
    m = len(slots)
    slot = _slot_index(n)
    total = 1 << m
    cols = np.arange(total, dtype=np.uint64)
    verts = tuple(range(n))
    if n <= 2:
        single = np.ones(total, dtype=bool)
    else:
        single = _piece_feasible(cols, verts, 1, slot) | _piece_feasible(cols, verts, 2, slot)
    two_any = np.zeros(total, dtype=bool)
    two_diff = np.zeros(total, dtype=bool)
    for size_s in range(1, n):
        for left in combinations(range(1, n), size_s - 1):
            s_side = (0,) + left
            c_side = tuple(v for v in verts if v not in s_side)
            if not c_side:
                continue
            f1s = _piece_feasible(cols, s_side, 1, slot)
            f2s = _piece_feasible(cols, s_side, 2, slot)
            f1c = _piece_feasible(cols, c_side, 1, slot)
            f2c = _piece_feasible(cols, c_side, 2, slot)
            # one/two-vertex pieces are edgeless or single-edge: a vertex
            # piece may take either colour label, so feasibility in "both
            # colours" is what the arrays already encode.
            two_any |= (f1s | f2s) & (f1c | f2c)
            two_diff |= (f1s & f2c) | (f2s & f1c)
    at_most_two = single | two_any
    optimal_diff = single | two_diff
    violations = [int(i) for i in np.flatnonzero(~at_most_two)[:16]]
    return LehelReport(
        n=n,
        total=total,
        all_at_most_two=bool(at_most_two.all()),
        all_optimal_two_piece_bicolour=bool(optimal_diff.all()),
        count_single_piece=int(single.sum()),
        count_two_piece=int((~single & two_any).sum()),
        violations=violations,
    )


# -- worst-case tiling number ------------------------------------------------


@dataclass
class TilingNumberResult:
    value: int
    extremal: ColouredCompleteGraph
    optimal: bool
    colourings_checked: int


def _canonical_colour_sequences(m: int, r: int):
    """Colour assignments over m slots, one per orbit of the colour
    permutation action (restricted-growth strings): a slot may take any
    colour seen so far or the next unseen one."""
    seq = [0] * m

    def rec(i: int, used: int):
        if i == m:
            yield tuple(seq)
            return
        top = min(used, r - 1)
        for c in range(top + 1):
            seq[i] = c
            yield from rec(i + 1, used + 1 if c == used else used)

    yield from rec(0, 0)


def tiling_number(
    n: int,
    r: int,
    family: FamilySpec,
    colouring_budget: int = 4_500_000,
    min_tiling_cap: int = 12,
) -> TilingNumberResult:
    """max over all r-colourings of K_n of the minimum monochromatic tiling
    size, with one extremal colouring.  Colourings are enumerated once per
    colour-permutation orbit; the value is invariant under relabelling.
    """
    if n < 1:
        raise InvalidInput("need n >= 1")
    slots = _pair_slots(n)
    m = len(slots)
    if family.kind == "cycles" and r == 2 and 3 <= n <= 7:
        return _tiling_number_cycles2(n, family, min_tiling_cap)
    checked = 0
    best_val = 0
    best_col: Optional[ColouredCompleteGraph] = None
    complete = True
    for seq in _canonical_colour_sequences(m, r):
        checked += 1
        if checked > colouring_budget:
            complete = False
            break
        mat = [[0] * n for _ in range(n)]
        for i, (u, v) in enumerate(slots):
            mat[u][v] = seq[i] + 1
        g = ColouredCompleteGraph(n, r, mat)
        res = min_tiling(g, family, cap=min_tiling_cap)
        if res.size > best_val:
            best_val = res.size
            best_col = g
    assert best_col is not None
    return TilingNumberResult(best_val, best_col, complete, checked)


def _tiling_number_cycles2(n: int, family: FamilySpec, cap: int) -> TilingNumberResult:
    report = lehel_exhaustive(n)
    slots = _pair_slots(n)
    m = len(slots)
    total = 1 << m
    cols = np.arange(total, dtype=np.uint64)
    slot = _slot_index(n)
    single = _piece_feasible(cols, tuple(range(n)), 1, slot) | _piece_feasible(
        cols, tuple(range(n)), 2, slot
    )
    value = 1
    extremal_idx = 0
    if report.count_two_piece > 0:
        value = 2
        extremal_idx = int(np.flatnonzero(~single)[0])
    for idx in report.violations:
        res = min_tiling(colouring_from_index(n, idx), family, cap=cap)
        if res.size > value:
            value = res.size
            extremal_idx = idx
    return TilingNumberResult(value, colouring_from_index(n, extremal_idx), True, total)


# -- exact minimum star cover -------------------------------------------------


@dataclass
class StarCoverResult:
    size: int
    stars: list[tuple[int, int, tuple[int, ...]]]  # (centre, colour, leaves)
    tiling: Tiling
    optimal: bool
    lower_bound: int
    nodes: int


def min_star_cover(
    g: ColouredCompleteGraph,
    cap: int = 20,
    node_budget: int = 20_000_000,
) -> StarCoverResult:
    """Exact minimum number of vertex-disjoint monochromatic stars covering
    all vertices.  Stars may be truncated to any sub-neighbourhood (the
    family has a star at every size), so a cover by closed colour
    neighbourhoods with distinct centres is trimmed to a disjoint tiling.
    """
    if g.n > cap:
        raise InvalidInput(f"n={g.n} exceeds cap {cap}; raise cap for exact mode")
    full = g.vertex_mask()
    sets: list[tuple[int, int, int]] = []  # (mask, centre, colour)
    for v in range(g.n):
        for c in range(1, g.r + 1):
            sets.append((g.neighbours(c, v) | (1 << v), v, c))
    max_cover = max(s[0].bit_count() for s in sets)
    max_mono_deg = max_cover - 1
    lower_bound = -(-g.n // (1 + max_mono_deg))
    containing: list[list[int]] = [[] for _ in range(g.n)]
    for i, (mask, _, _) in enumerate(sets):
        for v in bits_of(mask):
            containing[v].append(i)
    for v in range(g.n):
        containing[v].sort(key=lambda i: -sets[i][0].bit_count())

    nodes = 0
    out_of_budget = False

    def depth_limited(uncovered: int, depth: int, used_centres: int, acc: list[int]) -> Optional[list[int]]:
        nonlocal nodes, out_of_budget
        nodes += 1
        if nodes > node_budget:
            out_of_budget = True
            return None
        if uncovered == 0:
            return list(acc)
        if depth == 0 or uncovered.bit_count() > depth * max_cover:
            return None
        u = (uncovered & -uncovered).bit_length() - 1
        for i in containing[u]:
            mask, centre, _ = sets[i]
            if (used_centres >> centre) & 1:
                continue
            acc.append(i)
            found = depth_limited(uncovered & ~mask, depth - 1, used_centres | (1 << centre), acc)
            acc.pop()
            if found is not None or out_of_budget:
                return found
        return None

    solution: Optional[list[int]] = None
    tau = lower_bound
    while solution is None and not out_of_budget:
        solution = depth_limited(full, tau, 0, [])
        if solution is None:
            tau += 1
            if tau > g.n:
                raise SearchExhausted("no star cover found")  # cannot happen
    if solution is None:
        raise SearchExhausted(f"node budget exhausted at depth {tau}")

    # trim the chosen closed neighbourhoods to a disjoint tiling:
    # every centre keeps itself, every other vertex goes to one covering star
    chosen = [sets[i] for i in solution]
    centres = {c for _, c, _ in chosen}
    leaves: dict[int, list[int]] = {c: [] for _, c, _ in chosen}
    for v in range(g.n):
        if v in centres:
            continue
        for mask, centre, _ in chosen:
            if (mask >> v) & 1:
                leaves[centre].append(v)
                break
    stars = [(centre, colour, tuple(leaves[centre])) for _, centre, colour in chosen]
    pieces = [Piece(colour, (centre,) + lv) for centre, colour, lv in stars]
    size = len(stars)
    assert size >= lower_bound, "star cover beat the degree lower bound"
    return StarCoverResult(size, stars, Tiling.of(pieces), size == tau, lower_bound, nodes)


# -- stars failure-probability bound -----------------------------------------


@dataclass
class ChainLink:
    name: str
    lhs: float
    rhs: float
    holds: bool


@dataclass
class StarsBound:
    n: int
    r: int
    tau: int
    per_choice_probability: Fraction
    choice_count: int
    union_bound: Fraction
    certifies: bool
    chain: list[ChainLink]
    paper_display_value: float
    positive_exponent_display_value: float


def stars_union_bound(n: int, r: int, tau: int, dps: int = 60) -> StarsBound:
    """Exact probability that tau random colour stars cover [n], the union
    bound over all centre/colour choices, and the validity of each link in
    the chain of inequalities bounding it.

    The printed bound with a negative exponent on the choice count is
    evaluated alongside the positive-exponent reading; both are reported.
    """
    if not (n > tau >= 0):
        raise InvalidInput(f"need n > tau >= 0, got n={n}, tau={tau}")
    if r < 1:
        raise InvalidInput("need r >= 1")
    miss = (1 - Fraction(1, r)) ** tau
    per_choice = (1 - miss) ** (n - tau)
    choice_count = r**tau * math.prod(range(n, n - tau, -1))
    union = choice_count * per_choice
    with mpmath.workdps(dps):
        mp = mpmath.mpf
        p_exact = mp(per_choice.numerator) / mp(per_choice.denominator)
        miss_f = (1 - mp(1) / r) ** tau
        b1 = mpmath.e ** (-(n - tau) * miss_f)
        b2 = mpmath.e ** (-n * miss_f * (1 - mp(1) / r))
        b3 = mpmath.e ** (-n * mpmath.e ** (-4 * mp(tau) / r))
        b4 = mpmath.e ** (-mpmath.sqrt(n))
        chain = [
            ChainLink("exact<=exp(-(n-tau)(1-1/r)^tau)", float(p_exact), float(b1), p_exact <= b1),
            ChainLink("<=exp(-n(1-1/r)^(tau+1))", float(b1), float(b2), b1 <= b2),
            ChainLink("<=exp(-n*exp(-4tau/r))", float(b2), float(b3), b2 <= b3),
            ChainLink("<=exp(-sqrt(n))", float(b3), float(b4), b3 <= b4),
        ]
        rn = mp(r) * n
        paper_display = float(rn ** (-tau) * b4)
        positive_display = float(rn ** tau * b4)
    return StarsBound(
        n=n,
        r=r,
        tau=tau,
        per_choice_probability=per_choice,
        choice_count=choice_count,
        union_bound=union,
        certifies=union < 1,
        chain=chain,
        paper_display_value=paper_display,
        positive_exponent_display_value=positive_display,
    )


def stars_bound_threshold(r: int = 2, n_max: int = 4096) -> Optional[tuple[int, int, float]]:
    """First n with tau = ceil(r*ln(n/8)) >= 1 whose exact union bound
    certifies < 1; the value is recorded by the experiments."""
    for n in range(2, n_max + 1):
        tau = math.ceil(r * math.log(n / 8))
        if tau < 1 or tau >= n:
            continue
        b = stars_union_bound(n, r, tau)
        if b.certifies:
            return n, tau, float(b.union_bound)
    return None
