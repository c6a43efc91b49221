"""Wasserstein distances (tree closed form plus an exact LP solver) and
f-divergences between finitely supported measures."""
from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .spaces import (
    PI,
    Cone,
    Measure,
    Point,
    Space,
    cone_distance,
    direction_distance,
    measure,
    point,
)

EXACT_LP_LIMIT = 64


class NumericalError(RuntimeError):
    """Raised when a numerical routine cannot certify its result."""


# ---------------------------------------------------------------------------
# f-divergences
# ---------------------------------------------------------------------------

def _kl_gen(x: float) -> float:
    return 0.0 if x == 0.0 else x * math.log(x)


def _js_gen(x: float) -> float:
    out = -(x + 1.0) * math.log((x + 1.0) / 2.0)
    if x > 0.0:
        out += x * math.log(x)
    return out


@dataclass(frozen=True)
class FDivergence:
    """Convex generator f with f(1) = 0 and finite f(0), plus the slope of f
    at infinity (weight of mass that the second measure misses)."""

    name: str
    generator: object
    slope_at_infinity: float

    def __call__(self, x: float) -> float:
        return self.generator(x)


TOTAL_VARIATION = FDivergence("tv", lambda x: 0.5 * abs(x - 1.0), 0.5)
KULLBACK_LEIBLER = FDivergence("kl", _kl_gen, math.inf)
JENSEN_SHANNON = FDivergence("js", _js_gen, math.log(2.0))
SQUARED_HELLINGER = FDivergence("hellinger2", lambda x: 2.0 * (1.0 - math.sqrt(x)), 0.0)

BUILTIN_DIVERGENCES = {
    d.name: d for d in (TOTAL_VARIATION, KULLBACK_LEIBLER, JENSEN_SHANNON,
                        SQUARED_HELLINGER)
}


def custom_divergence(generator, slope_at_infinity: float,
                      name: str = "custom") -> FDivergence:
    if abs(generator(1.0)) > 1e-12:
        raise ValueError("generator must vanish at 1")
    if not math.isfinite(generator(0.0)):
        raise ValueError("generator must be finite at 0")
    return FDivergence(name, generator, slope_at_infinity)


def f_divergence(sp: Space, p: Measure, q: Measure, kind: FDivergence) -> float:
    """D_f(p || q) over the union support, with the mixture (p+q)/2 as the
    dominating measure (the value does not depend on that choice)."""
    pw: dict[Point, float] = defaultdict(float)
    qw: dict[Point, float] = defaultdict(float)
    for z, w in p.atoms:
        pw[z] += w
    for z, w in q.atoms:
        qw[z] += w
    total = 0.0
    for z in pw.keys() | qw.keys():
        pz, qz = pw.get(z, 0.0), qw.get(z, 0.0)
        if qz > 0.0:
            total += qz * kind(pz / qz)
        elif pz > 0.0:
            if math.isinf(kind.slope_at_infinity):
                return math.inf
            total += kind.slope_at_infinity * pz
    total = max(total, 0.0)
    if kind.name == "tv":
        total = min(total, 1.0)
    return total


def perturbed_measure(sp: Space, p: Measure, y: Point, t: float) -> Measure:
    """Mixture (1-t) p + t delta_y."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 1.0:
        return measure(sp, [(y, 1.0)])
    pairs = [(z, w * (1.0 - t)) for z, w in p.atoms]
    if t > 0.0:
        pairs.append((y, t))
    return measure(sp, pairs)


def perturbed_divergence(sp: Space, p: Measure, y: Point, t: float,
                         kind: FDivergence) -> float:
    """Closed form of D_f(p || (1-t) p + t delta_y) for t in [0, 1)."""
    if not 0.0 <= t < 1.0:
        raise ValueError("t must lie in [0, 1)")
    if t == 0.0:
        return 0.0
    y = point(sp, y.direction, y.radius, y.euclidean)
    wy = 0.0
    for z, w in p.atoms:
        if z == y:
            wy = w
            break
    first = (1.0 - t) * (1.0 - wy) * kind(1.0 / (1.0 - t))
    second = (t + (1.0 - t) * wy) * kind(wy / ((1.0 - t) * wy + t))
    return first + second


# ---------------------------------------------------------------------------
# Wasserstein distances
# ---------------------------------------------------------------------------

def _support_is_star(sp: Cone, groups: list) -> bool:
    ds = sp.directions
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            if direction_distance(ds, groups[i], groups[j]) < PI - 1e-12:
                return False
    return True


def w1_tree(sp: Cone, p: Measure, q: Measure) -> float:
    """First Wasserstein distance via the edge-cut integral when the union
    support spans a star tree (always on spiders: every pair of distinct
    directions is at angle >= pi, so geodesics run through the cone point).
    Otherwise falls back to the exact LP."""
    if not isinstance(sp, Cone):
        raise ValueError("w1_tree expects a cone")
    legs: dict[object, list[tuple[float, float]]] = defaultdict(list)
    rep: dict[object, object] = {}
    for mu, sign in ((p, 1.0), (q, -1.0)):
        for z, w in mu.atoms:
            if z.radius == 0.0:
                continue  # mass at the cone point never crosses a cut
            key = _dir_key(sp.directions, z.direction)
            rep.setdefault(key, z.direction)
            legs[key].append((z.radius, sign * w))
    directions = [rep[k] for k in sorted(rep.keys())]
    if not _support_is_star(sp, directions):
        return wq_lp(sp, p, q, 1.0)
    total = 0.0
    for key in legs:
        items = sorted(legs[key])
        radii = [0.0] + [r for r, _ in items]
        suffix = 0.0
        flows = []
        for r, w in reversed(items):
            suffix += w
            flows.append(suffix)
        flows.reverse()
        for k, (r, _w) in enumerate(items):
            total += (r - radii[k]) * abs(flows[k])
    return total


def _dir_key(ds, direction):
    if isinstance(direction, tuple):
        return direction
    if isinstance(direction, float):
        return (direction,)
    return (float(direction),)


def wq_lp(sp: Space, p: Measure, q: Measure, order: float = 1.0) -> float:
    """q-th Wasserstein distance by solving the transportation LP exactly
    (rational pivoting up to 64x64, HiGHS with a duality-gap check beyond)."""
    if order < 1.0:
        raise ValueError("Wasserstein order must be >= 1")
    xs, aw = p.points(), p.weights()
    ys, bw = q.points(), q.weights()
    cost = [[cone_distance(sp, x, y) ** order for y in ys] for x in xs]
    if len(xs) <= EXACT_LP_LIMIT and len(ys) <= EXACT_LP_LIMIT:
        value = float(_exact_transport(aw, bw, cost))
    else:
        value = _highs_transport(aw, bw, cost)
    return max(value, 0.0) ** (1.0 / order)


def _exact_transport(a_weights, b_weights, cost_rows) -> Fraction:
    """Transportation simplex in exact rational arithmetic with Bland's rule
    (anti-cycling), returning the optimal total cost."""
    m, n = len(a_weights), len(b_weights)
    a = [Fraction(w) for w in a_weights]
    b = [Fraction(w) for w in b_weights]
    ta, tb = sum(a), sum(b)
    if ta != tb:
        # float weight vectors rarely sum to exactly the same rational; a
        # rescaling of order 1e-16 keeps the LP feasible without moving the
        # optimum beyond that scale
        scale = ta / tb
        b = [w * scale for w in b]
    cost = [[Fraction(c) for c in row] for row in cost_rows]

    flow: dict[tuple[int, int], Fraction] = {}
    basis: set[tuple[int, int]] = set()
    ra, rb = a[:], b[:]
    i = j = 0
    while True:
        t = min(ra[i], rb[j])
        flow[(i, j)] = t
        basis.add((i, j))
        ra[i] -= t
        rb[j] -= t
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] == 0:
            i += 1
        else:
            j += 1

    zero = Fraction(0)
    while True:
        by_row = defaultdict(list)
        by_col = defaultdict(list)
        for (i0, j0) in basis:
            by_row[i0].append(j0)
            by_col[j0].append(i0)
        u: list[Fraction | None] = [None] * m
        v: list[Fraction | None] = [None] * n
        u[0] = zero
        stack = [("r", 0)]
        while stack:
            side, k = stack.pop()
            if side == "r":
                for j0 in by_row[k]:
                    if v[j0] is None:
                        v[j0] = cost[k][j0] - u[k]
                        stack.append(("c", j0))
            else:
                for i0 in by_col[k]:
                    if u[i0] is None:
                        u[i0] = cost[i0][k] - v[k]
                        stack.append(("r", i0))
        entering = None
        for i0 in range(m):
            ui = u[i0]
            for j0 in range(n):
                if (i0, j0) in basis:
                    continue
                if cost[i0][j0] - ui - v[j0] < 0:
                    entering = (i0, j0)
                    break
            if entering:
                break
        if entering is None:
            return sum(flow[e] * cost[e[0]][e[1]] for e in basis)
        i_star, j_star = entering
        parent = {("r", i_star): None}
        queue = deque([("r", i_star)])
        target = ("c", j_star)
        while queue:
            node = queue.popleft()
            if node == target:
                break
            side, k = node
            nbrs = (("c", j0) for j0 in by_row[k]) if side == "r" \
                else (("r", i0) for i0 in by_col[k])
            for nxt in nbrs:
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        cells = []
        node = target
        while parent[node] is not None:
            prev = parent[node]
            cell = (node[1], prev[1]) if node[0] == "r" else (prev[1], node[1])
            cells.append(cell)
            node = prev
        minus = cells[0::2]
        plus = cells[1::2]
        theta = min(flow[c] for c in minus)
        leaving = min(c for c in minus if flow[c] == theta)
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[entering] = theta
        basis.add(entering)
        basis.remove(leaving)
        del flow[leaving]


def _highs_transport(a_weights, b_weights, cost_rows) -> float:
    from scipy import optimize, sparse

    m, n = len(a_weights), len(b_weights)
    c = np.asarray(cost_rows, dtype=float).ravel()
    rows, cols, vals = [], [], []
    for i in range(m):
        for j in range(n):
            rows.append(i)
            cols.append(i * n + j)
            vals.append(1.0)
            rows.append(m + j)
            cols.append(i * n + j)
            vals.append(1.0)
    a_eq = sparse.csr_matrix((vals, (rows, cols)), shape=(m + n, m * n))
    rhs = np.concatenate([a_weights, b_weights])
    rhs[:m] *= np.sum(b_weights) / np.sum(a_weights)
    res = optimize.linprog(c, A_eq=a_eq, b_eq=rhs, bounds=(0, None),
                           method="highs")
    if res.status != 0:
        raise NumericalError(f"transport LP failed: {res.message}")
    duals = res.eqlin.marginals
    gap = abs(float(res.fun) - float(rhs @ duals))
    if gap > 1e-10 * (1.0 + abs(float(res.fun))):
        raise NumericalError(f"transport LP duality gap {gap} too large")
    return float(res.fun)


def support_diameter(sp: Space, p: Measure, q: Measure) -> float:
    """Diameter of the union of the two supports."""
    pts = p.points() + q.points()
    return max((cone_distance(sp, x, y) for x in pts for y in pts), default=0.0)
