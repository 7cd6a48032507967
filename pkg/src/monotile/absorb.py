"""Density-increment absorption.

A super-regular cylinder is reserved as an absorber, the rest of the
target set is covered greedily, and the leftover is split by clique
density: vertices dense towards the cylinder get absorbed into it via
one covering piece, the others recurse with a strictly larger density
floor.  Every success path is re-checked by the tiling and canonical
cover verifiers before returning.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb, prod
from typing import Iterable, Optional, Sequence

from .covers import (
    Piece,
    Tiling,
    as_disjoint_parts,
    canonical_cover_check,
    clique_density,
    verify_tiling,
)
from .embed import greedy_cover, iter_embeddings
from .errors import BudgetExceeded, InvalidInput, PreconditionError, SearchExhausted, StageFailure
from .graphs import ColouredCompleteGraph, FamilySpec, bits_of, mask_of
from .regularity import Cylinder, as_fraction, find_cylinder_in_dense_kpartite, robust_update


@dataclass(frozen=True)
class AbsorptionConfig:
    """Tunable constants for the absorption pipeline.

    The quantitative constants behind the asymptotic argument are
    unspecified absolute constants; these fields stand in for them and
    `reference_constants` reports the asymptotic formulas next to the
    configured values.
    """

    d: Fraction
    eps: Fraction = Fraction(3, 10)
    gamma: Fraction = Fraction(1, 4)
    eta: Optional[Fraction] = None
    max_depth: int = 3
    greedy_t: Fraction = Fraction(1, 4)
    seed: int = 0

    @classmethod
    def make(cls, d, eps=None, gamma=None, eta=None, max_depth=3, greedy_t=None, seed=0):
        kw = dict(d=as_fraction(d, "d"), max_depth=max_depth, seed=seed)
        if eps is not None:
            kw["eps"] = as_fraction(eps, "eps")
        if gamma is not None:
            kw["gamma"] = as_fraction(gamma, "gamma")
        if eta is not None:
            kw["eta"] = as_fraction(eta, "eta")
        if greedy_t is not None:
            kw["greedy_t"] = as_fraction(greedy_t, "t")
        return cls(**kw)

    def eta_for(self, k: int) -> Fraction:
        if self.eta is not None:
            return self.eta
        return self.d * self.gamma**k / 2

    def validate(self, k: int) -> None:
        if not 0 < self.d <= 1:
            raise InvalidInput(f"need 0 < d <= 1, got {self.d}")
        if not 0 < self.gamma < 1:
            raise InvalidInput(f"need 0 < gamma < 1, got {self.gamma}")
        if self.max_depth < 1:
            raise InvalidInput("max_depth must be >= 1")
        eta = self.eta_for(k)
        if not 0 < eta <= self.d * self.gamma**k / 2:
            raise InvalidInput(
                f"need 0 < eta <= d*gamma^k/2 = {self.d * self.gamma ** k / 2}, got {eta}"
            )

    def reference_constants(self, k: int, r: int, stand_in_constant: int = 1) -> dict:
        """Asymptotic parameter formulas evaluated at a stand-in value of
        the unspecified absolute constant, for side-by-side reporting."""
        kk = stand_in_constant
        delta = k - 2
        eps_ref = (float(self.d) / 100) ** (2 * kk * max(delta, 1))
        gamma_ref = (1 / r) * eps_ref ** (k * k * eps_ref**-12) if eps_ref > 0 else 0.0
        eta_ref = float(self.d) * gamma_ref**k / 2
        return {
            "eps_formula": "(d/100)^(2K'Delta)",
            "eps_reference": eps_ref,
            "eps_configured": float(self.eps),
            "gamma_formula": "(1/r)*eps^(k^2 eps^-12)",
            "gamma_reference": gamma_ref,
            "gamma_configured": float(self.gamma),
            "eta_formula": "d*gamma^k/2",
            "eta_reference": eta_ref,
            "eta_configured": float(self.eta_for(k)),
        }


# -- density ladder ------------------------------------------------------


def density_ladder(d_prime, gamma, k: int) -> tuple[Fraction, ...]:
    """Nondecreasing thresholds d_i = (1-gamma^i)/(1-gamma^k) * d_prime with
    d_k = d_prime exactly; gamma=0 degenerates to the constant ladder."""
    d_prime = as_fraction(d_prime, "d")
    gamma = as_fraction(gamma, "gamma")
    if k < 2:
        raise InvalidInput("need k >= 2")
    if not 0 < d_prime <= 1:
        raise InvalidInput(f"need 0 < d' <= 1, got {d_prime}")
    if gamma == 0:
        return tuple(d_prime for _ in range(k))
    if not 0 < gamma < 1:
        raise InvalidInput(f"need 0 <= gamma < 1, got {gamma}")
    denom = 1 - gamma**k
    return tuple((1 - gamma**i) / denom * d_prime for i in range(1, k + 1))


# -- leftover splitting -----------------------------------------------------


@dataclass
class LeftoverSplit:
    s_sets: dict[int, frozenset[int]]  # i -> S_i, for i = 1..k
    t_sets: dict[int, frozenset[int]]  # i -> T_i, for i = 2..k
    t_disjoint: dict[int, frozenset[int]]  # i -> T'_i
    ladder: tuple[Fraction, ...]

    @property
    def s1(self) -> frozenset[int]:
        return self.s_sets[1]


def split_leftover(
    g: ColouredCompleteGraph,
    colour: int,
    leftover: Iterable[int],
    full_parts: Sequence[Sequence[int]],
    cyl_parts: Sequence[Sequence[int]],
    d_prime,
    gamma,
    eta,
) -> LeftoverSplit:
    """Split the uncovered set by clique density: S_i uses the cylinder
    parts above slot i, T_i swaps slot i for the cylinder complement.
    The union S_1 + T_2 + ... + T_k has to recover the whole leftover;
    a vertex escaping every set is a hard error.
    """
    d_prime = as_fraction(d_prime, "d")
    gamma = as_fraction(gamma, "gamma")
    eta = as_fraction(eta, "eta")
    rset = sorted(set(leftover))
    k = len(full_parts) + 1
    if len(cyl_parts) != k - 1:
        raise InvalidInput("full_parts and cyl_parts must both cover slots 2..k")
    fulls = [tuple(sorted(p)) for p in full_parts]
    cyls = [tuple(sorted(p)) for p in cyl_parts]
    tildes = []
    for i, (vp, up) in enumerate(zip(fulls, cyls), start=2):
        if not set(up) <= set(vp):
            raise PreconditionError(f"cylinder part at slot {i} is not inside its full part")
        tilde = tuple(v for v in vp if v not in set(up))
        if not tilde:
            raise PreconditionError(f"slot {i} has empty complement V_i minus U_i")
        tildes.append(tilde)
    ladder = density_ladder(d_prime, gamma, k)
    for v in rset:
        if clique_density(g, v, fulls, [colour]) < d_prime:
            raise PreconditionError(
                f"leftover vertex {v} has clique density below d'={d_prime}", witness=(v,)
            )
    s_sets: dict[int, frozenset[int]] = {}
    t_sets: dict[int, frozenset[int]] = {}
    for i in range(1, k + 1):
        # slots 2..i take the full parts, slots i+1..k the cylinder parts
        parts_i = list(fulls[: i - 1]) + list(cyls[i - 1 :])
        s_sets[i] = frozenset(
            v for v in rset if clique_density(g, v, parts_i, [colour]) >= ladder[i - 1]
        )
    for i in range(2, k + 1):
        parts_i = list(fulls[: i - 2]) + [tildes[i - 2]] + list(cyls[i - 1 :])
        t_sets[i] = frozenset(
            v for v in rset if clique_density(g, v, parts_i, [colour]) > d_prime + 2 * eta
        )
    union = set(s_sets[1])
    for i in range(2, k + 1):
        union |= t_sets[i]
    missing = set(rset) - union
    if missing:
        raise StageFailure(
            "split-leftover",
            f"vertex {min(missing)} in no S_1/T_i set; the split-cover identity fails",
        )
    t_disjoint: dict[int, frozenset[int]] = {}
    taken = set(s_sets[1])
    for i in range(2, k + 1):
        t_disjoint[i] = frozenset(t_sets[i] - taken)
        taken |= t_sets[i]
    return LeftoverSplit(s_sets, t_sets, t_disjoint, ladder)


# -- cylinder tiling ---------------------------------------------------------


def _cylinder_adjacency(g: ColouredCompleteGraph, cyl: Cylinder, colour: int):
    """Adjacency masks of the colour-restricted k-partite graph on the
    cylinder (within-part pairs are not edges)."""
    all_mask = 0
    part_masks = []
    part_of: dict[int, int] = {}
    for idx, p in enumerate(cyl.parts):
        pm = mask_of(p)
        part_masks.append(pm)
        all_mask |= pm
        for v in p:
            part_of[v] = idx
    maxv = max(part_of) + 1 if part_of else 0
    adj = [0] * maxv
    part_vec = [0] * maxv
    for v, idx in part_of.items():
        adj[v] = g.neighbours(colour, v) & all_mask & ~part_masks[idx]
        part_vec[v] = idx
    return adj, part_vec, all_mask


def _partitions_into(n: int, pieces: int, largest: int):
    """Non-increasing size compositions of n into exactly `pieces` parts."""
    if pieces == 1:
        if 1 <= n <= largest:
            yield (n,)
        return
    lo = -(-n // pieces)
    for first in range(min(largest, n - pieces + 1), lo - 1, -1):
        for rest in _partitions_into(n - first, pieces - 1, first):
            yield (first,) + rest


def cylinder_tile(
    g: ColouredCompleteGraph,
    cyl: Cylinder,
    family: FamilySpec,
    mode: str = "partition",
    max_pieces: Optional[int] = None,
    node_budget: int = 400_000,
    colour: Optional[int] = None,
) -> Tiling:
    """Tile a colour cylinder with monochromatic family members using only
    cross-part edges.

    partition mode: pieces exactly partitioning the cylinder vertices,
    at most max_degree+3 of them.  cover mode: one piece covering the
    whole first part and at most that many vertices of each other part.
    SearchExhausted means the full space was searched; BudgetExceeded
    means the node budget ran out first.
    """
    c = colour if colour is not None else cyl.colour
    if c is None:
        raise InvalidInput("cylinder has no colour tag and none was given")
    adj, part_of, all_mask = _cylinder_adjacency(g, cyl, c)
    total = all_mask.bit_count()
    counter = [0, node_budget]
    if mode == "partition":
        if max_pieces is None:
            cap_delta = family.max_degree_cap
            if cap_delta is None:
                raise InvalidInput("partition mode needs max_pieces for unbounded-degree families")
            max_pieces = cap_delta + 3
        for pieces in range(1, max_pieces + 1):
            for sizes in _partitions_into(total, pieces, total):
                try:
                    members = [family.member(m) for m in sizes]
                except LookupError:
                    continue
                found = _tile_partition(adj, part_of, all_mask, members, c, counter)
                if found is not None:
                    return Tiling.of(found)
        raise SearchExhausted(
            f"no partition into at most {max_pieces} pieces (searched fully, {counter[0]} nodes)"
        )
    if mode == "cover":
        first = cyl.parts[0]
        w1 = len(first)
        cover_mask = mask_of(first)
        caps = [w1] * cyl.k
        for m in range(max(w1, 1), w1 + (cyl.k - 1) * w1 + 1):
            try:
                member = family.member(m)
            except LookupError:
                continue
            image = next(
                iter_embeddings(adj, member, all_mask, part_of, list(caps), cover_mask, counter),
                None,
            )
            if image is not None:
                return Tiling.of([Piece(c, image)])
        raise SearchExhausted(
            f"no single piece covers the first part (searched fully, {counter[0]} nodes)"
        )
    raise InvalidInput(f"unknown mode {mode!r}")


def _tile_partition(adj, part_of, remaining_mask, members, colour, counter):
    if not members:
        return [] if remaining_mask == 0 else None
    member = members[0]
    for image in iter_embeddings(adj, member, remaining_mask, node_counter=counter):
        rest = _tile_partition(
            adj, part_of, remaining_mask & ~mask_of(image), members[1:], colour, counter
        )
        if rest is not None:
            return [Piece(colour, image)] + rest
    return None


# -- absorption ---------------------------------------------------------------


@dataclass
class TraceNode:
    stage: str
    depth: int
    sizes: tuple[int, ...]
    density: float
    pieces: int
    note: str = ""


def format_trace(trace: Sequence[TraceNode]) -> str:
    lines = []
    for t in trace:
        sz = "/".join(str(s) for s in t.sizes)
        lines.append(
            f"depth={t.depth} stage={t.stage} sizes={sz} density={t.density:.4f} "
            f"pieces={t.pieces} note={t.note}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class AbsorptionResult:
    tiling: Tiling
    trace: list[TraceNode]

    def used_per_part(self, parts: Sequence[Sequence[int]]) -> list[int]:
        covered = self.tiling.vertex_set()
        return [len(covered & set(p)) for p in parts]


def absorption_cover_one_colour(
    g: ColouredCompleteGraph,
    parts: Sequence[Iterable[int]],
    colour: int,
    family: FamilySpec,
    cfg: AbsorptionConfig,
    d_floor=None,
    depth: int = 0,
    _trace: Optional[list[TraceNode]] = None,
) -> AbsorptionResult:
    """Cover the first part canonically with monochromatic pieces in one
    colour: reserve a super-regular cylinder, greedily cover the rest of
    the first part internally, absorb the dense leftover into the
    cylinder and recurse on the rest at density floor d'+eta.

    Stage failures raise StageFailure naming the stage; successes are
    verified by the tiling and canonical-cover checkers before returning.
    """
    norm = as_disjoint_parts(parts)
    k = len(norm)
    if k < 2:
        raise InvalidInput("need k >= 2 parts")
    cfg.validate(k)
    trace = _trace if _trace is not None else []
    v1 = norm[0]
    d_prime = as_fraction(d_floor, "d") if d_floor is not None else cfg.d
    for p in norm[1:]:
        if len(p) < 2 * len(v1):
            raise PreconditionError(
                f"need |V_i| >= 2|V_1|: {len(p)} < {2 * len(v1)}", witness=(len(p),)
            )
    for v in v1:
        if clique_density(g, v, norm[1:], [colour]) < d_prime:
            raise PreconditionError(
                f"vertex {v} has colour-{colour} clique density below {d_prime}", witness=(v,)
            )
    if depth >= cfg.max_depth:
        raise StageFailure("recursion-depth", f"depth cap {cfg.max_depth} reached", trace)

    # cylinder extraction: eps must respect d >= 2k*eps for the dense
    # k-partite extraction, so clamp the configured value
    eps_eff = min(cfg.eps, d_prime / (2 * k))
    try:
        found = find_cylinder_in_dense_kpartite(g, colour, norm, eps_eff, d_prime)
    except (PreconditionError, StageFailure) as exc:
        raise StageFailure("cylinder", f"extraction failed: {exc}", trace) from exc
    cyl = found.cylinder
    gamma_ach = found.gamma
    trace.append(
        TraceNode("cylinder", depth, cyl.sizes(), float(found.d), 0, f"gamma={gamma_ach}")
    )

    eta = min(cfg.eta_for(k), d_prime * gamma_ach**k / 2)
    if eta <= 0:
        raise StageFailure("cylinder", f"degenerate cylinder ratio gamma={gamma_ach}", trace)
    eps_cyl = found.eps
    u1 = cyl.parts[0]
    outside = [v for v in v1 if v not in set(u1)]
    r_target = min(
        eta**2 * len(v1),
        Fraction(eta, 4 * k) * len(u1),
        eps_cyl**2 * len(u1),
    )
    pieces: list[Piece] = []
    leftover: tuple[int, ...] = ()
    if outside:
        gamma_greedy = min(Fraction(1), Fraction(r_target) / len(outside)) if r_target > 0 else Fraction(1, 2 * len(outside))
        greedy = greedy_cover(g, family, outside, gamma_greedy, cfg.greedy_t)
        pieces.extend(greedy.pieces)
        leftover = greedy.leftover
        trace.append(
            TraceNode(
                "greedy",
                depth,
                (len(outside),),
                float(d_prime),
                len(greedy.pieces),
                f"leftover={len(leftover)} target={float(r_target):.3f}",
            )
        )
    if len(leftover) > r_target:
        raise StageFailure("greedy", f"leftover {len(leftover)} above target {float(r_target):.3f}", trace)

    s1: frozenset[int] = frozenset()
    covered_by_recursion: set[int] = set()
    if leftover:
        try:
            split = split_leftover(
                g, colour, leftover, norm[1:], cyl.parts[1:], d_prime, gamma_ach, eta
            )
        except PreconditionError as exc:
            raise StageFailure("split", str(exc), trace) from exc
        s1 = split.s1
        trace.append(
            TraceNode(
                "split",
                depth,
                tuple(len(split.t_disjoint[i]) for i in range(2, k + 1)),
                float(d_prime),
                0,
                f"|S_1|={len(s1)}",
            )
        )
        for i in range(2, k + 1):
            t_i = split.t_disjoint[i]
            if not t_i:
                continue
            rec_parts = (
                [tuple(sorted(t_i))]
                + [
                    tuple(v for v in norm[s - 1] if v not in covered_by_recursion)
                    for s in range(2, i)
                ]
                + [
                    tuple(
                        v
                        for v in norm[i - 1]
                        if v not in set(cyl.parts[i - 1]) and v not in covered_by_recursion
                    )
                ]
                + [
                    tuple(v for v in cyl.parts[s - 1] if v not in covered_by_recursion)
                    for s in range(i + 1, k + 1)
                ]
            )
            floor_next = d_prime + eta
            for v in t_i:
                if clique_density(g, v, rec_parts[1:], [colour]) < floor_next:
                    raise StageFailure(
                        "cover-T-floor",
                        f"vertex {v} has density below d'+eta={float(floor_next):.4f} "
                        "after removing covered vertices",
                        trace,
                    )
            sub = absorption_cover_one_colour(
                g, rec_parts, colour, family, cfg, floor_next, depth + 1, trace
            )
            pieces.extend(sub.tiling.pieces)
            covered_by_recursion |= sub.tiling.vertex_set()

    # absorb S_1 into the cylinder and cover it with one piece
    x_sets = [
        tuple(v for v in cyl.parts[i] if v in covered_by_recursion) for i in range(1, k)
    ]
    if 0 < gamma_ach < 1:
        d1 = density_ladder(d_prime, gamma_ach, k)[0]
    else:
        d1 = d_prime / k  # gamma -> 1 limit of the ladder's first rung
    try:
        for i in range(1, k):
            pair = cyl.pair(g, colour, 0, i)
            robust_update(pair, (), x_sets[i - 1], tuple(sorted(s1)), (), eps_cyl, found.d, d1)
        for i, j in combinations(range(1, k), 2):
            pair = cyl.pair(g, colour, i, j)
            robust_update(pair, x_sets[i - 1], x_sets[j - 1], (), (), eps_cyl, found.d, 4 * eps_cyl)
    except PreconditionError as exc:
        raise StageFailure("robust", f"absorber update rejected: {exc}", trace) from exc
    absorber = Cylinder(
        (tuple(sorted(set(u1) | s1)),)
        + tuple(
            tuple(v for v in cyl.parts[i] if v not in covered_by_recursion)
            for i in range(1, k)
        ),
        colour,
    )
    try:
        cover = cylinder_tile(g, absorber, family, mode="cover")
    except SearchExhausted as exc:
        raise StageFailure("tile-cover", str(exc), trace) from exc
    except BudgetExceeded as exc:
        raise StageFailure("tile-cover-budget", str(exc), trace) from exc
    pieces.extend(cover.pieces)
    trace.append(
        TraceNode("absorb", depth, absorber.sizes(), float(found.d), len(cover.pieces), f"|S_1|={len(s1)}")
    )

    tiling = Tiling.of(pieces)
    verdict = verify_tiling(g, family, tiling, tiling.vertex_set())
    if not verdict:
        raise StageFailure("final-verify", f"tiling check failed: {verdict.reason}", trace)
    cover_check = canonical_cover_check(tiling, norm)
    if not cover_check:
        raise StageFailure("final-verify", f"canonical check failed: {cover_check.reason}", trace)
    return AbsorptionResult(tiling, trace)


def absorption_cover(
    g: ColouredCompleteGraph,
    parts: Sequence[Iterable[int]],
    family: FamilySpec,
    cfg: AbsorptionConfig,
) -> AbsorptionResult:
    """Multi-colour wrapper: partition the first part by dominant colour,
    then greedy-cover and one-colour-absorb each block in turn while the
    remaining parts stay large enough."""
    norm = as_disjoint_parts(parts)
    k = len(norm)
    if k < 2:
        raise InvalidInput("need k >= 2 parts")
    cfg.validate(k)
    v1 = norm[0]
    for p in norm[1:]:
        if len(p) < 4 * len(v1):
            raise PreconditionError(f"need |V_i| >= 4|V_1|: {len(p)} < {4 * len(v1)}")
    for v in v1:
        if clique_density(g, v, norm[1:], list(range(1, g.r + 1))) < cfg.d:
            raise PreconditionError(
                f"vertex {v} has total clique density below d={cfg.d}", witness=(v,)
            )
    trace: list[TraceNode] = []
    if g.r == 1:
        return absorption_cover_one_colour(g, norm, 1, family, cfg, _trace=trace)
    d_prime = cfg.d / (2 * g.r)
    gamma_plan = d_prime / (k * g.r)
    # dominant-colour partition, ties to the smallest colour index
    blocks: dict[int, list[int]] = {j: [] for j in range(1, g.r + 1)}
    for v in v1:
        for j in range(1, g.r + 1):
            if clique_density(g, v, norm[1:], [j]) >= Fraction(cfg.d, g.r):
                blocks[j].append(v)
                break
        else:
            raise PreconditionError(f"vertex {v} has no colour with density >= d/r", witness=(v,))
    pieces: list[Piece] = []
    covered: set[int] = set()
    for j in range(1, g.r + 1):
        block = blocks[j]
        if not block:
            continue
        greedy = greedy_cover(g, family, block, max(gamma_plan, Fraction(1, 2 * len(block))), cfg.greedy_t)
        pieces.extend(greedy.pieces)
        covered |= set(b for piece in greedy.pieces for b in piece.vertices)
        trace.append(
            TraceNode("colour-greedy", 0, (len(block),), float(cfg.d), len(greedy.pieces), f"colour={j}")
        )
        residual = list(greedy.leftover)
        if not residual:
            continue
        sub_parts = [tuple(residual)] + [
            tuple(v for v in p if v not in covered) for p in norm[1:]
        ]
        for p in sub_parts[1:]:
            if len(p) < 2 * len(residual):
                raise StageFailure(
                    "colour-bookkeeping",
                    f"parts shrank below 2|V'_1| while covering colour {j}",
                    trace,
                )
        for v in residual:
            if clique_density(g, v, sub_parts[1:], [j]) < d_prime:
                raise StageFailure(
                    "colour-floor",
                    f"vertex {v} lost its colour-{j} density floor {float(d_prime):.4f}",
                    trace,
                )
        sub = absorption_cover_one_colour(g, sub_parts, j, family, cfg, d_prime, 0, trace)
        pieces.extend(sub.tiling.pieces)
        covered |= sub.tiling.vertex_set()
    tiling = Tiling.of(pieces)
    verdict = verify_tiling(g, family, tiling, tiling.vertex_set())
    if not verdict:
        raise StageFailure("final-verify", f"tiling check failed: {verdict.reason}", trace)
    cover_check = canonical_cover_check(tiling, norm)
    if not cover_check:
        raise StageFailure("final-verify", f"canonical check failed: {cover_check.reason}", trace)
    return AbsorptionResult(tiling, trace)


# -- independent transversal ---------------------------------------------------


@dataclass
class TransversalResult:
    transversal: Optional[tuple[int, ...]]
    tries: int
    degree_ok: bool
    union_bound: Fraction
    failures: int

    @property
    def succeeded(self) -> bool:
        return self.transversal is not None


def independent_transversal(
    k: int,
    hyperedges: Iterable[frozenset[int]],
    parts: Sequence[Sequence[int]],
    max_tries: int = 100,
    rng: random.Random | int = 0,
) -> TransversalResult:
    """Sample one vertex per part uniformly until no hyperedge lies inside
    the transversal.  The degree hypothesis (every vertex sees fewer than
    binom(N,k)^-1 of the possible completions) is checked by enumeration;
    a violation only warns, sampling is attempted regardless.  The exact
    union bound on a single draw failing is returned alongside.
    """
    if isinstance(rng, int):
        rng = random.Random(rng)
    parts = [tuple(sorted(p)) for p in parts]
    n_parts = len(parts)
    if any(not p for p in parts):
        raise InvalidInput("parts must be nonempty")
    as_disjoint_parts(parts)
    part_of: dict[int, int] = {}
    for i, p in enumerate(parts):
        for v in p:
            part_of[v] = i
    edges = [frozenset(e) for e in hyperedges]
    for e in edges:
        if len(e) != k:
            raise InvalidInput(f"hyperedge {sorted(e)} has size {len(e)}, expected {k}")
    # group transversal-compatible edges by the sorted tuple of parts they touch
    by_profile: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for e in edges:
        prof = tuple(sorted(part_of[v] for v in e if v in part_of))
        if len(prof) != k or len(set(prof)) != k or any(v not in part_of for v in e):
            continue  # cannot sit inside a transversal
        ordered = tuple(sorted(e, key=lambda v: part_of[v]))
        by_profile.setdefault(prof, []).append(ordered)

    degree_ok = True
    if n_parts >= k:
        inv_choices = Fraction(1, comb(n_parts, k))
        for prof, plist in by_profile.items():
            sizes = [len(parts[i]) for i in prof]
            threshold = inv_choices * prod(sizes[1:])
            counts: dict[int, int] = {}
            for ordered in plist:
                counts[ordered[0]] = counts.get(ordered[0], 0) + 1
            if any(Fraction(cnt) >= threshold for cnt in counts.values()):
                degree_ok = False
    union = Fraction(0)
    for prof, plist in by_profile.items():
        union += Fraction(len(plist), prod(len(parts[i]) for i in prof))

    failures = 0
    for attempt in range(1, max_tries + 1):
        pick = tuple(rng.choice(p) for p in parts)
        pick_set = set(pick)
        if any(e <= pick_set for e in edges):
            failures += 1
            continue
        return TransversalResult(pick, attempt, degree_ok, union, failures)
    return TransversalResult(None, max_tries, degree_ok, union, failures)
