"""Density and regularity calculus for colour subgraphs.

Exact regularity checking enumerates every subset of the smaller side of
a pair (Gray-free, vectorised over all subsets at once) and pairs it
with the extremal same-size subset of the other side; for a fixed left
subset the density deviation is maximised by taking the highest- or
lowest-degree right vertices, so this enumeration is complete.  All
threshold comparisons are integer arithmetic, hence exact.

The cylindrical partition keeps two exact invariants at all times: the
cylinder products partition the product of the trimmed ground parts, and
every cylinder has parts of size floor(gamma * ground_i) for a single
per-cylinder gamma.  Witness splits produce up to four sub-products per
split; rebalancing fragments each sub-product into aligned cylinders,
and vertices that cannot sit in any aligned cylinder are shunted into
the exceptional sets.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import prod
from typing import Iterable, Optional, Sequence

import numpy as np

from .covers import as_disjoint_parts
from .errors import ExactModeError, InvalidInput, PreconditionError, StageFailure
from .graphs import ColouredCompleteGraph, bits_of, mask_of

MAX_EXACT_DENOMINATOR = 10**6


def as_fraction(x, what: str = "value") -> Fraction:
    """Exact rational from user input; float literals are read decimally
    (0.35 becomes 7/20, not the binary expansion)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    if isinstance(x, str):
        return Fraction(x)
    raise InvalidInput(f"cannot interpret {what}={x!r} as an exact rational")


# -- pairs ---------------------------------------------------------------


@dataclass(frozen=True)
class ColourPair:
    """A bipartite pair inside one colour class of a coloured graph."""

    graph: ColouredCompleteGraph
    colour: int
    left: tuple[int, ...]
    right: tuple[int, ...]

    def __post_init__(self):
        as_disjoint_parts([self.left, self.right])

    def sizes(self) -> tuple[int, int]:
        return len(self.left), len(self.right)

    def edge_count(self) -> int:
        rmask = mask_of(self.right)
        return sum((self.graph.neighbours(self.colour, v) & rmask).bit_count() for v in self.left)

    def density(self) -> Fraction:
        n1, n2 = self.sizes()
        if n1 == 0 or n2 == 0:
            raise InvalidInput("density undefined for an empty side")
        return Fraction(self.edge_count(), n1 * n2)

    def adjacency_matrix(self) -> np.ndarray:
        out = np.zeros((len(self.left), len(self.right)), dtype=np.int64)
        for i, v in enumerate(self.left):
            nbr = self.graph.neighbours(self.colour, v)
            for j, w in enumerate(self.right):
                out[i, j] = (nbr >> w) & 1
        return out


def pair_density(g: ColouredCompleteGraph, colour: int, u1: Iterable[int], u2: Iterable[int]) -> Fraction:
    return ColourPair(g, colour, tuple(sorted(set(u1))), tuple(sorted(set(u2)))).density()


@dataclass(frozen=True)
class RegularityVerdict:
    regular: bool
    witness: Optional[tuple[tuple[int, ...], tuple[int, ...]]] = None
    mode: str = "exact"

    def __bool__(self) -> bool:
        return self.regular


def _exact_bipartite_check(adj: np.ndarray, eps: Fraction):
    """All-subset exact regularity check; `adj` rows are the enumerated
    side.  Returns (regular, witness_in_index_space)."""
    n1, n2 = adj.shape
    e_total = int(adj.sum())
    t1 = max(math.ceil(eps * n1), 1)
    t2 = max(math.ceil(eps * n2), 1)
    if t1 > n1 or t2 > n2:
        return True, None
    p, q = eps.numerator, eps.denominator
    scale = n1 * n2 * q
    upper = e_total * q + p * n1 * n2
    lower = e_total * q - p * n1 * n2
    subs = np.arange(1 << n1, dtype=np.uint32)
    u1 = np.bitwise_count(subs).astype(np.int64)
    bits = ((subs[:, None] >> np.arange(n1, dtype=np.uint32)) & 1).astype(np.int64)
    degs = bits @ adj
    degs_sorted = np.sort(degs, axis=1)
    bottom = np.cumsum(degs_sorted, axis=1)
    top = np.cumsum(degs_sorted[:, ::-1], axis=1)
    rows_ok = u1 >= t1
    for s in range(t2, n2 + 1):
        hi = top[:, s - 1] * scale > upper * (u1 * s)
        lo = bottom[:, s - 1] * scale < lower * (u1 * s)
        viol = rows_ok & (hi | lo)
        if viol.any():
            row = int(np.flatnonzero(viol)[0])
            left_idx = tuple(i for i in range(n1) if (int(subs[row]) >> i) & 1)
            order = np.argsort(degs[row], kind="stable")
            if bool(hi[row]):
                right_idx = tuple(int(j) for j in order[::-1][:s])
            else:
                right_idx = tuple(int(j) for j in order[:s])
            return False, (left_idx, tuple(sorted(right_idx)))
    return True, None


def is_regular(
    pair: ColourPair,
    eps,
    mode: str = "exact",
    cap: int = 16,
    samples: int = 200,
    rng: Optional[random.Random] = None,
) -> RegularityVerdict:
    """Exact mode enumerates every qualifying subset pair (the smaller side
    must fit under `cap`); sampled mode tries random subset pairs at the
    threshold sizes and can only refute.
    """
    eps = as_fraction(eps, "eps")
    if eps <= 0:
        raise InvalidInput("eps must be positive")
    if eps.denominator > MAX_EXACT_DENOMINATOR:
        raise InvalidInput(f"eps denominator too large for exact arithmetic: {eps}")
    n1, n2 = pair.sizes()
    if n1 == 0 or n2 == 0:
        return RegularityVerdict(True, None, mode)
    if mode == "exact":
        if min(n1, n2) > cap:
            raise ExactModeError(
                f"exact mode needs a side of at most {cap} vertices, got {n1}x{n2}"
            )
        flip = n2 < n1
        adj = pair.adjacency_matrix()
        base = adj.T.copy() if flip else adj
        ok, wit = _exact_bipartite_check(base, eps)
        if ok:
            return RegularityVerdict(True, None, "exact")
        li, ri = wit
        if flip:
            li, ri = ri, li
        return RegularityVerdict(
            False,
            (tuple(pair.left[i] for i in li), tuple(pair.right[j] for j in ri)),
            "exact",
        )
    if mode == "sampled":
        rng = rng or random.Random(0)
        t1 = max(math.ceil(eps * n1), 1)
        t2 = max(math.ceil(eps * n2), 1)
        d0 = pair.density()
        for _ in range(samples):
            u1 = tuple(sorted(rng.sample(pair.left, t1)))
            u2 = tuple(sorted(rng.sample(pair.right, t2)))
            d = ColourPair(pair.graph, pair.colour, u1, u2).density()
            if abs(d - d0) > eps:
                return RegularityVerdict(False, (u1, u2), "sampled")
        return RegularityVerdict(True, None, "sampled")
    raise InvalidInput(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class SuperRegularVerdict:
    ok: bool
    failed: Optional[str] = None  # regularity | density | min-degree
    witness: Optional[tuple] = None
    regularity: Optional[RegularityVerdict] = None

    def __bool__(self) -> bool:
        return self.ok


def is_super_regular(
    pair: ColourPair,
    eps,
    d,
    delta,
    mode: str = "exact",
    cap: int = 16,
    samples: int = 200,
    rng: Optional[random.Random] = None,
) -> SuperRegularVerdict:
    """eps-regularity plus density >= d plus min cross-degree >= delta
    times the opposite side; reports which conjunct failed."""
    d = as_fraction(d, "d")
    delta = as_fraction(delta, "delta")
    n1, n2 = pair.sizes()
    if n1 == 0 or n2 == 0:
        return SuperRegularVerdict(True, regularity=RegularityVerdict(True, None, mode))
    reg = is_regular(pair, eps, mode=mode, cap=cap, samples=samples, rng=rng)
    if not reg:
        return SuperRegularVerdict(False, "regularity", reg.witness, reg)
    if pair.density() < d:
        return SuperRegularVerdict(False, "density", (pair.density(),), reg)
    rmask, lmask = mask_of(pair.right), mask_of(pair.left)
    for v in pair.left:
        if (pair.graph.neighbours(pair.colour, v) & rmask).bit_count() < delta * n2:
            return SuperRegularVerdict(False, "min-degree", (v,), reg)
    for w in pair.right:
        if (pair.graph.neighbours(pair.colour, w) & lmask).bit_count() < delta * n1:
            return SuperRegularVerdict(False, "min-degree", (w,), reg)
    return SuperRegularVerdict(True, regularity=reg)


# -- parameter transfers -------------------------------------------------


def slice_parameters(eps, d, beta) -> tuple[Fraction, Fraction]:
    """Parameters surviving passage to subsets of relative size >= beta."""
    eps = as_fraction(eps, "eps")
    d = as_fraction(d, "d")
    beta = as_fraction(beta, "beta")
    if not beta > eps > 0:
        raise PreconditionError(f"need beta > eps > 0, got beta={beta}, eps={eps}")
    return max(eps / beta, 2 * eps), d - eps


def robust_update(
    pair: ColourPair,
    x1: Iterable[int],
    x2: Iterable[int],
    y1: Iterable[int],
    y2: Iterable[int],
    eps,
    d,
    delta,
) -> tuple[ColourPair, tuple[Fraction, Fraction, Fraction]]:
    """Remove the small sets X_i and add the small high-degree sets Y_i;
    the result is claimed (8*eps, d-8*eps, delta/2)-super-regular."""
    eps = as_fraction(eps, "eps")
    d = as_fraction(d, "d")
    delta = as_fraction(delta, "delta")
    if not 0 < eps < Fraction(1, 2):
        raise PreconditionError(f"need 0 < eps < 1/2, got {eps}")
    if delta < 4 * eps:
        raise PreconditionError(f"need delta >= 4*eps, got delta={delta}, eps={eps}")
    x1, x2 = set(x1), set(x2)
    y1, y2 = set(y1), set(y2)
    v1, v2 = set(pair.left), set(pair.right)
    if not (x1 <= v1 and x2 <= v2):
        raise PreconditionError("X_i must be subsets of the pair sides")
    if (y1 | y2) & (v1 | v2):
        raise PreconditionError("Y_i must be disjoint from the pair", witness=tuple((y1 | y2) & (v1 | v2)))
    if y1 & y2:
        raise PreconditionError("Y_1 and Y_2 must be disjoint")
    for name, xs, side in (("X_1", x1, v1), ("Y_1", y1, v1), ("X_2", x2, v2), ("Y_2", y2, v2)):
        if len(xs) > eps * eps * len(side):
            raise PreconditionError(
                f"|{name}|={len(xs)} exceeds eps^2*|V|={float(eps * eps * len(side)):.3f}"
            )
    for v in y1:
        if pair.graph.degree(pair.colour, v, mask_of(pair.right)) < delta * len(v2):
            raise PreconditionError(f"added vertex {v} has degree below delta*|V_2|", witness=(v,))
    for w in y2:
        if pair.graph.degree(pair.colour, w, mask_of(pair.left)) < delta * len(v1):
            raise PreconditionError(f"added vertex {w} has degree below delta*|V_1|", witness=(w,))
    new_pair = ColourPair(
        pair.graph,
        pair.colour,
        tuple(sorted((v1 - x1) | y1)),
        tuple(sorted((v2 - x2) | y2)),
    )
    return new_pair, (8 * eps, d - 8 * eps, delta / 2)


# -- cylinders -------------------------------------------------------------


@dataclass(frozen=True)
class Cylinder:
    """Ordered tuple of disjoint vertex sets, optionally tagged with the
    colour it lives in and claimed super-regularity parameters."""

    parts: tuple[tuple[int, ...], ...]
    colour: Optional[int] = None
    params: Optional[tuple[Fraction, Fraction]] = None  # (eps, d)

    def __post_init__(self):
        as_disjoint_parts(self.parts)

    @property
    def k(self) -> int:
        return len(self.parts)

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.parts)

    def product_size(self) -> int:
        return prod(self.sizes())

    def vertex_set(self) -> set[int]:
        out: set[int] = set()
        for p in self.parts:
            out.update(p)
        return out

    def is_balanced(self, eps=0) -> bool:
        eps = as_fraction(eps, "eps")
        sizes = self.sizes()
        return max(sizes) <= (1 + eps) * min(sizes)

    def pair(self, g: ColouredCompleteGraph, colour: int, i: int, j: int) -> ColourPair:
        return ColourPair(g, colour, self.parts[i], self.parts[j])


def is_super_regular_cylinder(
    g: ColouredCompleteGraph,
    cyl: Cylinder,
    eps,
    d,
    delta,
    colour: Optional[int] = None,
    mode: str = "exact",
    cap: int = 16,
) -> SuperRegularVerdict:
    """Every pair of the cylinder must be super-regular in the given colour."""
    c = colour if colour is not None else cyl.colour
    if c is None:
        raise InvalidInput("cylinder has no colour tag and none was given")
    for i in range(cyl.k):
        for j in range(i + 1, cyl.k):
            v = is_super_regular(cyl.pair(g, c, i, j), eps, d, delta, mode=mode, cap=cap)
            if not v:
                return SuperRegularVerdict(False, f"pair({i},{j}):{v.failed}", v.witness, v.regularity)
    return SuperRegularVerdict(True)


def trim_to_super_regular(
    g: ColouredCompleteGraph,
    cyl: Cylinder,
    eps,
    d,
    colour: Optional[int] = None,
) -> tuple[Cylinder, tuple[Fraction, Fraction]]:
    """Remove exactly floor((k-1)*eps*|V_i|) low-degree vertices per part;
    on an eps-regular input with pair densities >= d the result is
    (2*eps, d-k*eps)-super-regular.  Oversized low-degree sets contradict
    the regularity of the input and raise with a witness.
    """
    eps = as_fraction(eps, "eps")
    d = as_fraction(d, "d")
    c = colour if colour is not None else cyl.colour
    if c is None:
        raise InvalidInput("cylinder has no colour tag and none was given")
    k = cyl.k
    if k < 2:
        raise InvalidInput("need a cylinder with at least 2 parts")
    if eps > Fraction(1, 2 * k):
        raise PreconditionError(f"need eps <= 1/(2k), got eps={eps}, k={k}")
    masks = [mask_of(p) for p in cyl.parts]
    low: list[set[int]] = [set() for _ in range(k)]
    for i in range(k):
        for j in range(k):
            if i == j or not cyl.parts[j]:
                continue
            nj = len(cyl.parts[j])
            for v in cyl.parts[i]:
                if g.degree(c, v, masks[j]) < (d - eps) * nj:
                    low[i].add(v)
    target = [math.floor((k - 1) * eps * len(cyl.parts[i])) for i in range(k)]
    trimmed = []
    for i in range(k):
        if len(low[i]) > target[i]:
            raise PreconditionError(
                f"part {i} has {len(low[i])} low-degree vertices, more than "
                f"floor((k-1)*eps*|V_i|)={target[i]}; input was not eps-regular",
                witness=(i, tuple(sorted(low[i]))),
            )
        extra = [v for v in cyl.parts[i] if v not in low[i]]
        pad = target[i] - len(low[i])
        drop = low[i] | set(extra[:pad])
        trimmed.append(tuple(v for v in cyl.parts[i] if v not in drop))
    return Cylinder(tuple(trimmed), c, (2 * eps, d - k * eps)), (2 * eps, d - k * eps)


# -- cylindrical partitions -------------------------------------------------


@dataclass
class CylindricalPartition:
    ground: tuple[tuple[int, ...], ...]
    exceptional: tuple[tuple[int, ...], ...]
    cylinders: list[tuple[Cylinder, Fraction]]
    splits: int = 0
    shunts: int = 0
    budget_exhausted: bool = False

    def effective_ground(self) -> tuple[tuple[int, ...], ...]:
        return tuple(
            tuple(v for v in part if v not in set(exc))
            for part, exc in zip(self.ground, self.exceptional)
        )

    def tuple_identity(self) -> tuple[int, int]:
        lhs = sum(cyl.product_size() for cyl, _ in self.cylinders)
        rhs = prod(len(p) for p in self.effective_ground())
        return lhs, rhs

    def check_invariants(self) -> None:
        lhs, rhs = self.tuple_identity()
        if lhs != rhs:
            raise AssertionError(f"tuple identity fails: {lhs} != {rhs}")
        eff = self.effective_ground()
        gsizes = [len(p) for p in eff]
        for cyl, gamma in self.cylinders:
            for i, part in enumerate(cyl.parts):
                if not set(part) <= set(eff[i]):
                    raise AssertionError(f"cylinder part {i} leaves its ground part")
                if len(part) != math.floor(gamma * gsizes[i]):
                    raise AssertionError(
                        f"cylinder part {i} has {len(part)} vertices, expected "
                        f"floor({gamma}*{gsizes[i]})"
                    )
        # pairwise product disjointness: some axis must be disjoint
        for a in range(len(self.cylinders)):
            for b in range(a + 1, len(self.cylinders)):
                ca, cb = self.cylinders[a][0], self.cylinders[b][0]
                if all(set(pa) & set(pb) for pa, pb in zip(ca.parts, cb.parts)):
                    raise AssertionError(f"cylinder products {a} and {b} intersect")

    def dump(self) -> str:
        lines = []
        for i, part in enumerate(self.ground):
            lines.append("ground " + " ".join(str(v) for v in part))
        for cyl, gamma in self.cylinders:
            cols = " | ".join(" ".join(str(v) for v in part) for part in cyl.parts)
            lines.append(f"cylinder {gamma.numerator}/{gamma.denominator} | {cols}")
        cols = " | ".join(" ".join(str(v) for v in part) for part in self.exceptional)
        lines.append(f"exceptional | {cols}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "CylindricalPartition":
        ground: list[tuple[int, ...]] = []
        cylinders: list[tuple[Cylinder, Fraction]] = []
        exceptional: Optional[tuple[tuple[int, ...], ...]] = None
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("ground"):
                ground.append(tuple(int(t) for t in line.split()[1:]))
            elif line.startswith("cylinder"):
                head, *parts = line.split("|")
                frac = head.split()[1]
                num, den = frac.split("/")
                cylinders.append(
                    (
                        Cylinder(tuple(tuple(int(t) for t in p.split()) for p in parts)),
                        Fraction(int(num), int(den)),
                    )
                )
            elif line.startswith("exceptional"):
                _, *parts = line.split("|")
                exceptional = tuple(tuple(int(t) for t in p.split()) for p in parts)
        if exceptional is None:
            raise InvalidInput("partition dump has no exceptional line")
        return cls(tuple(ground), exceptional, cylinders)


class _StuckProduct(Exception):
    def __init__(self, parts):
        self.parts = parts


def _strict_floor_sizes(sizes: Sequence[int], gsizes: Sequence[int]) -> tuple[list[int], Fraction]:
    """Largest aligned size vector (floor(gamma*G_i) <= sizes_i for one
    common gamma) and a gamma witnessing it."""
    gamma_sup = min(Fraction(s + 1, g) for s, g in zip(sizes, gsizes))
    m = [math.ceil(gamma_sup * g) - 1 for g in gsizes]
    gamma = max(Fraction(mi, g) for mi, g in zip(m, gsizes))
    assert all(math.floor(gamma * g) == mi for mi, g in zip(m, gsizes))
    return m, gamma


def _rebalance(parts: tuple[tuple[int, ...], ...], gsizes: Sequence[int]):
    """Fragment a sub-product into aligned cylinders covering exactly the
    same tuple set.  Raises _StuckProduct when some tuples cannot live in
    any aligned cylinder."""
    out: list[tuple[tuple[tuple[int, ...], ...], Fraction]] = []
    stack = [parts]
    while stack:
        cur = stack.pop()
        sizes = [len(p) for p in cur]
        if any(s == 0 for s in sizes):
            continue
        m, gamma = _strict_floor_sizes(sizes, gsizes)
        if m == sizes:
            out.append((cur, gamma))
            continue
        keep = [p[: m[i]] for i, p in enumerate(cur)]
        excess = [p[m[i] :] for i, p in enumerate(cur)]
        k = len(cur)
        if all(mi >= 1 for mi in m):
            out.append((tuple(tuple(p) for p in keep), gamma))
        for combo_id in range(1, 1 << k):
            child = tuple(
                tuple(excess[i]) if (combo_id >> i) & 1 else tuple(keep[i]) for i in range(k)
            )
            if any(len(p) == 0 for p in child):
                continue
            if child == cur:
                raise _StuckProduct(cur)
            stack.append(child)
    return out


def _witness_candidates(pair: ColourPair, eps: Fraction) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Degree-deviation split candidates: vertices sorted by density toward
    the other side, cut at the extreme eps-fraction."""
    n1, n2 = pair.sizes()
    t1 = max(math.ceil(eps * n1), 1)
    t2 = max(math.ceil(eps * n2), 1)
    rmask, lmask = mask_of(pair.right), mask_of(pair.left)
    by_deg_l = sorted(pair.left, key=lambda v: pair.graph.degree(pair.colour, v, rmask))
    by_deg_r = sorted(pair.right, key=lambda w: pair.graph.degree(pair.colour, w, lmask))
    lows_l, highs_l = tuple(sorted(by_deg_l[:t1])), tuple(sorted(by_deg_l[-t1:]))
    lows_r, highs_r = tuple(sorted(by_deg_r[:t2])), tuple(sorted(by_deg_r[-t2:]))
    cands = []
    for u1 in (lows_l, highs_l, tuple(pair.left)):
        for u2 in (lows_r, highs_r, tuple(pair.right)):
            if len(u1) >= t1 and len(u2) >= t2 and (u1 != pair.left or u2 != pair.right):
                cands.append((u1, u2))
    return cands


def find_irregularity_witness(
    g: ColouredCompleteGraph,
    cyl: Cylinder,
    eps: Fraction,
    colours: Sequence[int],
    cap: int = 16,
) -> Optional[tuple[int, int, int, tuple[int, ...], tuple[int, ...]]]:
    """A certified witness (i, j, colour, U_i, U_j) that some pair of the
    cylinder is eps-irregular in some colour, or None.  Pairs small enough
    are checked exactly; larger pairs get degree-split candidates whose
    deviation is then verified exactly (one-sided: a miss proves nothing).
    """
    for i in range(cyl.k):
        for j in range(i + 1, cyl.k):
            if not cyl.parts[i] or not cyl.parts[j]:
                continue
            for c in colours:
                pair = cyl.pair(g, c, i, j)
                n1, n2 = pair.sizes()
                if min(n1, n2) <= cap:
                    verdict = is_regular(pair, eps, mode="exact", cap=cap)
                    if not verdict:
                        return (i, j, c, verdict.witness[0], verdict.witness[1])
                else:
                    d0 = pair.density()
                    for u1, u2 in _witness_candidates(pair, eps):
                        d = ColourPair(g, c, u1, u2).density()
                        if abs(d - d0) > eps:
                            return (i, j, c, u1, u2)
    return None


def weak_regular_partition(
    g: ColouredCompleteGraph,
    parts: Sequence[Iterable[int]],
    eps,
    colours: Optional[Sequence[int]] = None,
    cap: int = 16,
    max_splits: int = 64,
    max_shunt_restarts: int = 50,
) -> CylindricalPartition:
    """Refine the single full cylinder by certified irregularity witnesses
    until the tuple mass in cylinders with a certified witness is at most
    eps times the full product.  The result keeps the product-partition
    and relative-balance invariants exactly.
    """
    eps = as_fraction(eps, "eps")
    if not 0 < eps < Fraction(1, 2):
        raise InvalidInput(f"need 0 < eps < 1/2, got {eps}")
    ground = as_disjoint_parts(parts)
    colours = list(colours) if colours is not None else list(range(1, g.r + 1))
    threshold = eps * prod(len(p) for p in ground)
    exceptional: list[set[int]] = [set() for _ in ground]
    shunts = 0
    total_splits = 0
    witness_memo: dict[tuple, Optional[tuple]] = {}

    def witness_for(parts_key: tuple[tuple[int, ...], ...]):
        if parts_key not in witness_memo:
            witness_memo[parts_key] = find_irregularity_witness(
                g, Cylinder(parts_key), eps, colours, cap
            )
        return witness_memo[parts_key]

    for _restart in range(max_shunt_restarts + 1):
        eff = tuple(
            tuple(v for v in part if v not in exceptional[i]) for i, part in enumerate(ground)
        )
        gsizes = [len(p) for p in eff]
        if any(s == 0 for s in gsizes):
            # empty ground part: the whole product is empty and trivially regular
            cyl = Cylinder(eff)
            return CylindricalPartition(
                ground,
                tuple(tuple(sorted(x)) for x in exceptional),
                [(cyl, Fraction(1))],
                splits=total_splits,
                shunts=shunts,
            )
        try:
            cylinders = _rebalance(eff, gsizes)
            budget_exhausted = False
            while True:
                flagged = [
                    (cparts, gamma, witness_for(cparts))
                    for cparts, gamma in cylinders
                    if witness_for(cparts) is not None
                ]
                mass = sum(prod(len(p) for p in cparts) for cparts, _, _ in flagged)
                if mass <= threshold:
                    break
                if total_splits >= max_splits:
                    budget_exhausted = True
                    break
                cparts, gamma, wit = max(
                    flagged, key=lambda t: prod(len(p) for p in t[0])
                )
                i, j, _c, u1, u2 = wit
                cylinders = [cg for cg in cylinders if cg[0] != cparts]
                set1, set2 = set(u1), set(u2)
                side_i = [tuple(v for v in cparts[i] if v in set1), tuple(v for v in cparts[i] if v not in set1)]
                side_j = [tuple(v for v in cparts[j] if v in set2), tuple(v for v in cparts[j] if v not in set2)]
                for pi in side_i:
                    for pj in side_j:
                        child = tuple(
                            pi if t == i else pj if t == j else cparts[t]
                            for t in range(len(cparts))
                        )
                        cylinders.extend(_rebalance(child, gsizes))
                total_splits += 1
            result = CylindricalPartition(
                ground,
                tuple(tuple(sorted(x)) for x in exceptional),
                [(Cylinder(cparts), gamma) for cparts, gamma in cylinders],
                splits=total_splits,
                shunts=shunts,
                budget_exhausted=budget_exhausted,
            )
            return result
        except _StuckProduct as stuck:
            sizes = [(len(p), idx) for idx, p in enumerate(stuck.parts) if p]
            _, idx = min(sizes)
            exceptional[idx].update(stuck.parts[idx])
            shunts += 1
    raise StageFailure("weak-partition", f"shunt restarts exceeded {max_shunt_restarts}")


def certified_irregular_mass(
    partition: CylindricalPartition,
    g: ColouredCompleteGraph,
    eps,
    colours: Optional[Sequence[int]] = None,
    cap: int = 16,
) -> Fraction:
    """Tuple fraction (of the full original product) in cylinders with a
    certified irregular pair; cylinders too large for the exact check and
    with no verified witness count as regular (one-sided)."""
    eps = as_fraction(eps, "eps")
    colours = list(colours) if colours is not None else list(range(1, g.r + 1))
    denom = prod(len(p) for p in partition.ground)
    mass = 0
    for cyl, _gamma in partition.cylinders:
        if find_irregularity_witness(g, cyl, eps, colours, cap) is not None:
            mass += cyl.product_size()
    return Fraction(mass, denom)


# -- cylinder extraction ----------------------------------------------------


@dataclass
class CylinderSearchResult:
    colour: int
    cylinder: Cylinder
    gamma: Fraction
    eps: Fraction
    d: Fraction
    partition: CylindricalPartition


def _align_to_ground(
    parts: tuple[tuple[int, ...], ...], gsizes: Sequence[int]
) -> tuple[tuple[tuple[int, ...], ...], Fraction]:
    """Trim parts minimally so sizes become floor(gamma*G_i) for one gamma."""
    sizes = [len(p) for p in parts]
    m, gamma = _strict_floor_sizes(sizes, gsizes)
    if any(mi == 0 for mi in m):
        raise StageFailure("align", f"alignment trims a part to zero: sizes={sizes}, grounds={tuple(gsizes)}")
    return tuple(tuple(p[: m[i]]) for i, p in enumerate(parts)), gamma


def count_transversal_cliques(
    g: ColouredCompleteGraph, colour: int, parts: Sequence[Sequence[int]]
) -> int:
    """Number of colour-monochromatic cliques with one vertex per part."""
    from .covers import _count_mono_tuples

    parts = [tuple(p) for p in parts]
    if any(len(p) == 0 for p in parts):
        return 0
    masks = [mask_of(p) for p in parts[1:]]
    return sum(_count_mono_tuples(g, colour, v, masks) for v in parts[0])


def find_super_regular_cylinder(
    g: ColouredCompleteGraph,
    k: int,
    eps,
    parts_cap: int = 8,
    cap: int = 16,
    max_splits: int = 64,
) -> CylinderSearchResult:
    """Split the vertices into equal parts, take a weak regular partition,
    pick an everywhere-regular cylinder, choose k of its parts forming a
    monochromatic clique in the majority-density auxiliary colouring, and
    trim to super-regularity.  Fails explicitly, never silently.
    """
    eps = as_fraction(eps, "eps")
    if k < 2:
        raise InvalidInput("need k >= 2")
    ktil = min(parts_cap, g.r ** (g.r * k))
    if ktil < k:
        raise StageFailure("cylinder", f"parts cap {ktil} below k={k}")
    block = g.n // ktil
    if block < 1:
        raise StageFailure("cylinder", f"n={g.n} too small for {ktil} nonempty parts")
    grounds = [tuple(range(i * block, (i + 1) * block)) for i in range(ktil)]
    eps_half = eps / 2
    partition = weak_regular_partition(g, grounds, eps_half, cap=cap, max_splits=max_splits)
    colours = list(range(1, g.r + 1))
    choice = None
    for cyl, gamma in sorted(partition.cylinders, key=lambda cg: -cg[0].product_size()):
        if any(len(p) == 0 for p in cyl.parts):
            continue
        if find_irregularity_witness(g, cyl, eps_half, colours, cap) is None:
            choice = (cyl, gamma)
            break
    if choice is None:
        raise StageFailure("cylinder", "no everywhere-regular cylinder in the partition")
    cyl, gamma = choice
    # majority colouring on the parts of the chosen cylinder
    aux: dict[tuple[int, int], int] = {}
    for i in range(cyl.k):
        for j in range(i + 1, cyl.k):
            densities = [
                (ColourPair(g, c, cyl.parts[i], cyl.parts[j]).density(), -c) for c in colours
            ]
            best_d, neg_c = max(densities)
            aux[(i, j)] = -neg_c
    mono = None
    for combo in combinations(range(cyl.k), k):
        cset = {aux[(a, b)] for a, b in combinations(combo, 2)}
        if len(cset) == 1:
            mono = (combo, cset.pop())
            break
    if mono is None:
        raise StageFailure(
            "cylinder",
            f"no monochromatic K_{k} in the {cyl.k}-part majority colouring (cap too small)",
        )
    combo, colour = mono
    sub = Cylinder(tuple(cyl.parts[t] for t in combo), colour)
    dmin = min(
        ColourPair(g, colour, sub.parts[a], sub.parts[b]).density()
        for a in range(k)
        for b in range(a + 1, k)
    )
    trimmed, (eps_out, d_out) = trim_to_super_regular(g, sub, eps_half, dmin)
    aligned, gamma_out = _align_to_ground(trimmed.parts, [g.n] * k)
    final = Cylinder(aligned, colour, (eps_out, d_out))
    return CylinderSearchResult(colour, final, gamma_out, eps_out, d_out, partition)


def find_cylinder_in_dense_kpartite(
    g: ColouredCompleteGraph,
    colour: int,
    parts: Sequence[Iterable[int]],
    eps,
    d,
    cap: int = 16,
    max_splits: int = 64,
) -> CylinderSearchResult:
    """Inside a colour-restricted k-partite graph with at least d*prod|V_i|
    transversal cliques, extract a relatively balanced super-regular
    cylinder.  The selected cylinder's exact clique density certifies at
    least d - 2*eps_tilde before trimming.
    """
    eps = as_fraction(eps, "eps")
    d = as_fraction(d, "d")
    norm = as_disjoint_parts(parts)
    k = len(norm)
    if k < 2:
        raise InvalidInput("need k >= 2 parts")
    if d < 2 * k * eps:
        raise PreconditionError(f"need d >= 2k*eps, got d={d}, k={k}, eps={eps}")
    full = prod(len(p) for p in norm)
    cliques = count_transversal_cliques(g, colour, norm)
    if Fraction(cliques) < d * full:
        raise PreconditionError(
            f"only {cliques} transversal cliques, below d*prod={float(d * full):.1f}",
            witness=(cliques,),
        )
    eps_t = eps / 4
    partition = weak_regular_partition(g, norm, eps_t, colours=[colour], cap=cap, max_splits=max_splits)
    best = None
    for cyl, gamma in partition.cylinders:
        size = cyl.product_size()
        if size == 0:
            continue
        cnt = count_transversal_cliques(g, colour, cyl.parts)
        dens = Fraction(cnt, size)
        if best is None or dens > best[0]:
            best = (dens, cyl, gamma)
    if best is None:
        raise StageFailure("dense-cylinder", "partition has no nonempty cylinder")
    dens, cyl, gamma = best
    if dens < d - 2 * eps_t:
        raise StageFailure(
            "dense-cylinder",
            f"densest cylinder has clique density {float(dens):.3f} < d-2*eps/4={float(d - 2 * eps_t):.3f}",
        )
    tagged = Cylinder(cyl.parts, colour)
    trimmed, (eps_out, d_out) = trim_to_super_regular(g, tagged, eps_t, dens)
    gsizes = [len(p) for p in norm]
    aligned, gamma_out = _align_to_ground(trimmed.parts, gsizes)
    final = Cylinder(aligned, colour, (eps, d / 2))
    return CylinderSearchResult(colour, final, gamma_out, eps_out, d_out, partition)
