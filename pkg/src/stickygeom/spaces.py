"""Stratified metric spaces: Euclidean cones over direction spaces, and open books.

Conventions used throughout the package:

- A point of a cone is a (direction, radius) pair; every point with radius 0
  is the cone point and compares equal no matter which direction it carries.
- Direction distances are "raw"; the cone metric caps them at pi.
- Angles are radians stored as float64.
- Open books are the product of a K-spider (all page angles pi) with
  R^(d-1); their points additionally carry a euclidean component.
"""
from __future__ import annotations

import heapq
import json
import math
from collections import deque
from dataclasses import dataclass
from functools import cached_property

PI = math.pi
COORD_TOL = 1e-12
WEIGHT_TOL = 1e-12


# ---------------------------------------------------------------------------
# direction spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiniteDirections:
    """Finite direction set given by a symmetric matrix of pairwise angles."""

    angles: tuple[tuple[float, ...], ...]

    @property
    def size(self) -> int:
        return len(self.angles)

    def distance(self, a: int, b: int) -> float:
        return self.angles[a][b]

    def canonical(self, coord) -> int:
        c = int(coord)
        if c != coord or not 0 <= c < self.size:
            raise ValueError(f"direction index {coord!r} out of range 0..{self.size - 1}")
        return c

    @property
    def is_spider(self) -> bool:
        k = self.size
        return all(self.angles[i][j] >= PI - COORD_TOL
                   for i in range(k) for j in range(k) if i != j)


@dataclass(frozen=True)
class CircleDirections:
    """Circle of total length alpha with the wrap-around metric."""

    alpha: float

    def distance(self, a: float, b: float) -> float:
        d = math.fmod(abs(a - b), self.alpha)
        return min(d, self.alpha - d)

    def canonical(self, coord) -> float:
        t = float(coord)
        if not math.isfinite(t):
            raise ValueError(f"circle coordinate {coord!r} is not finite")
        t = math.fmod(t, self.alpha)
        if t < 0.0:
            t += self.alpha
        if t >= self.alpha:  # fmod rounding at the seam
            t = 0.0
        return t


@dataclass(frozen=True)
class GraphDirections:
    """Connected metric graph; coordinates are (edge id, offset from the
    edge's first endpoint)."""

    vertex_count: int
    edges: tuple[tuple[int, int, float], ...]

    @cached_property
    def _vertex_dist(self) -> tuple[tuple[float, ...], ...]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.vertex_count)]
        for u, v, length in self.edges:
            adj[u].append((v, length))
            adj[v].append((u, length))
        rows = []
        for s in range(self.vertex_count):
            dist = [math.inf] * self.vertex_count
            dist[s] = 0.0
            heap = [(0.0, s)]
            while heap:
                d, w = heapq.heappop(heap)
                if d > dist[w]:
                    continue
                for x, length in adj[w]:
                    nd = d + length
                    if nd < dist[x]:
                        dist[x] = nd
                        heapq.heappush(heap, (nd, x))
            rows.append(tuple(dist))
        return tuple(rows)

    @cached_property
    def _vertex_home(self) -> tuple[tuple[int, float], ...]:
        # canonical (edge, offset) representation of each vertex
        home: list[tuple[int, float] | None] = [None] * self.vertex_count
        for eid, (u, v, length) in enumerate(self.edges):
            if home[u] is None:
                home[u] = (eid, 0.0)
            if home[v] is None:
                home[v] = (eid, length)
        return tuple(home)  # connectivity guarantees no None survives

    def canonical(self, coord) -> tuple[int, float]:
        try:
            eid, off = coord
        except (TypeError, ValueError):
            raise ValueError(f"graph coordinate {coord!r} is not an (edge, offset) pair")
        eid = int(eid)
        if not 0 <= eid < len(self.edges):
            raise ValueError(f"edge id {eid} out of range 0..{len(self.edges) - 1}")
        u, v, length = self.edges[eid]
        off = float(off)
        if off < 0.0:
            if off < -COORD_TOL:
                raise ValueError(f"offset {off} below 0 on edge {eid}")
            off = 0.0
        if off > length:
            if off > length + COORD_TOL:
                raise ValueError(f"offset {off} beyond edge {eid} of length {length}")
            off = length
        if off == 0.0:
            return self._vertex_home[u]
        if off == length:
            return self._vertex_home[v]
        return (eid, off)

    def vertex_to_coord(self, w: int, coord: tuple[int, float]) -> float:
        eid, off = coord
        u, v, length = self.edges[eid]
        dv = self._vertex_dist[w]
        return min(dv[u] + off, dv[v] + (length - off))

    def distance(self, a, b) -> float:
        ca, cb = self.canonical(a), self.canonical(b)
        if ca == cb:
            return 0.0
        if cb < ca:  # fixed evaluation order keeps the metric exactly symmetric
            ca, cb = cb, ca
        (e1, o1), (e2, o2) = ca, cb
        u1, v1, l1 = self.edges[e1]
        u2, v2, l2 = self.edges[e2]
        dmat = self._vertex_dist
        best = math.inf
        if e1 == e2:
            best = abs(o1 - o2)
        for w1, s1 in ((u1, o1), (v1, l1 - o1)):
            for w2, s2 in ((u2, o2), (v2, l2 - o2)):
                cand = s1 + dmat[w1][w2] + s2
                if cand < best:
                    best = cand
        return best

    def shortest_path(self, a, b) -> tuple[float, list[tuple[int, float, float]]]:
        """Shortest path realized as edge segments (edge, from_off, to_off).

        Ties are broken by a fixed route order and, inside the graph, by the
        lexicographically smallest sequence of edge ids.
        """
        ca, cb = self.canonical(a), self.canonical(b)
        if ca == cb:
            return 0.0, []
        (e1, o1), (e2, o2) = ca, cb
        u1, v1, l1 = self.edges[e1]
        u2, v2, l2 = self.edges[e2]
        routes: list[tuple[float, int, tuple]] = []
        if e1 == e2:
            routes.append((abs(o1 - o2), 0, ("direct",)))
        order = 1
        for w1, s1 in ((u1, o1), (v1, l1 - o1)):
            for w2, s2 in ((u2, o2), (v2, l2 - o2)):
                mid, epath = self._lex_vertex_path(w1, w2)
                routes.append((s1 + mid + s2, order, ("via", w1, w2, epath)))
                order += 1
        routes.sort(key=lambda r: (r[0], r[1]))
        _, _, route = routes[0]
        segs: list[tuple[int, float, float]] = []
        if route[0] == "direct":
            segs.append((e1, o1, o2))
        else:
            _, w1, w2, epath = route
            if (e1, o1) != self._at_vertex(e1, w1):
                segs.append((e1, o1, 0.0 if w1 == u1 else l1))
            here = w1
            for eid in epath:
                eu, ev, el = self.edges[eid]
                nxt = ev if here == eu else eu
                segs.append((eid, 0.0 if here == eu else el, el if here == eu else 0.0))
                here = nxt
            if (e2, o2) != self._at_vertex(e2, w2):
                segs.append((e2, 0.0 if w2 == u2 else l2, o2))
        total = sum(abs(t - f) for _, f, t in segs)
        return total, [s for s in segs if abs(s[2] - s[1]) > 0.0]

    def _at_vertex(self, eid: int, w: int) -> tuple[int, float]:
        u, v, length = self.edges[eid]
        return (eid, 0.0) if w == u else (eid, length)

    def _lex_vertex_path(self, a: int, b: int) -> tuple[float, tuple[int, ...]]:
        if a == b:
            return 0.0, ()
        # heap orders by (distance, edge id sequence): deterministic tie-break
        heap: list[tuple[float, tuple[int, ...], int]] = [(0.0, (), a)]
        seen: dict[int, tuple[float, tuple[int, ...]]] = {}
        adj: dict[int, list[tuple[int, int]]] = {}
        for eid, (u, v, _l) in enumerate(self.edges):
            adj.setdefault(u, []).append((eid, v))
            adj.setdefault(v, []).append((eid, u))
        while heap:
            d, path, w = heapq.heappop(heap)
            if w in seen:
                continue
            seen[w] = (d, path)
            if w == b:
                return d, path
            for eid, x in adj.get(w, ()):
                if x not in seen:
                    heapq.heappush(heap, (d + self.edges[eid][2], path + (eid,), x))
        raise ValueError("graph is not connected")


DirectionSpace = FiniteDirections | CircleDirections | GraphDirections


def finite_directions(matrix) -> FiniteDirections:
    rows = [tuple(float(x) for x in row) for row in matrix]
    k = len(rows)
    if k == 0 or any(len(r) != k for r in rows):
        raise ValueError("distance matrix must be square and non-empty")
    for i in range(k):
        if rows[i][i] != 0.0:
            raise ValueError(f"distance matrix diagonal entry {i} is not 0")
        for j in range(k):
            if rows[i][j] < 0.0:
                raise ValueError(f"negative distance at ({i},{j})")
            if abs(rows[i][j] - rows[j][i]) > COORD_TOL:
                raise ValueError(f"distance matrix not symmetric at ({i},{j})")
    for i in range(k):
        for j in range(k):
            for l in range(k):
                if rows[i][j] > rows[i][l] + rows[l][j] + COORD_TOL:
                    raise ValueError(
                        f"triangle inequality fails for direction triple ({i},{j},{l})")
    return FiniteDirections(tuple(rows))


def spider_directions(k: int) -> FiniteDirections:
    if k < 2:
        raise ValueError("a spider needs at least 2 legs")
    return FiniteDirections(tuple(
        tuple(0.0 if i == j else PI for j in range(k)) for i in range(k)))


def circle_directions(alpha: float) -> CircleDirections:
    alpha = float(alpha)
    if not (alpha > 0.0 and math.isfinite(alpha)):
        raise ValueError("circle length alpha must be positive and finite")
    return CircleDirections(alpha)


def graph_directions(vertex_count: int, edges) -> GraphDirections:
    vertex_count = int(vertex_count)
    norm = []
    for e in edges:
        u, v, length = int(e[0]), int(e[1]), float(e[2])
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise ValueError(f"edge ({u},{v}) references a vertex out of range")
        if u == v:
            raise ValueError(f"self-loop at vertex {u} is not allowed")
        if not (length > 0.0 and math.isfinite(length)):
            raise ValueError(f"edge ({u},{v}) must have positive finite length")
        norm.append((u, v, length))
    if not norm:
        raise ValueError("graph needs at least one edge")
    seen = {norm[0][0]}
    queue = deque([norm[0][0]])
    adj: dict[int, list[int]] = {}
    for u, v, _ in norm:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    while queue:
        w = queue.popleft()
        for x in adj.get(w, ()):
            if x not in seen:
                seen.add(x)
                queue.append(x)
    if len(seen) != vertex_count:
        raise ValueError("graph is not connected")
    return GraphDirections(vertex_count, tuple(norm))


def petersen_directions(edge_length: float = PI / 2) -> GraphDirections:
    """The Petersen graph; with edge length pi/2 its cone models the space
    of phylogenetic trees on four leaves."""
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5, 7), (6, 8), (7, 9), (8, 5), (9, 6)]
    edges = [(u, v, edge_length) for u, v in outer + spokes + inner]
    return graph_directions(10, edges)


# ---------------------------------------------------------------------------
# spaces, points, measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cone:
    directions: DirectionSpace


@dataclass(frozen=True)
class OpenBook:
    pages: int
    dim: int

    def __post_init__(self):
        if self.pages < 3:
            raise ValueError("an open book needs at least 3 pages")
        if self.dim < 2:
            raise ValueError("an open book needs dimension at least 2")

    @cached_property
    def spider(self) -> Cone:
        return Cone(spider_directions(self.pages))


Space = Cone | OpenBook


def spider(k: int) -> Cone:
    return Cone(spider_directions(k))


def kale(alpha: float) -> Cone:
    """Cone over a circle of length alpha (alpha > 2*pi is the classic kale;
    alpha = 2*pi is the Euclidean plane in polar coordinates)."""
    return Cone(circle_directions(alpha))


def graph_cone(vertex_count: int, edges) -> Cone:
    return Cone(graph_directions(vertex_count, edges))


def petersen_cone(edge_length: float = PI / 2) -> Cone:
    return Cone(petersen_directions(edge_length))


def open_book(pages: int, dim: int) -> OpenBook:
    return OpenBook(pages, dim)


@dataclass(frozen=True)
class Point:
    direction: object
    radius: float
    euclidean: tuple[float, ...] | None = None


def _zero_direction(ds: DirectionSpace):
    if isinstance(ds, FiniteDirections):
        return 0
    if isinstance(ds, CircleDirections):
        return 0.0
    return ds.canonical((0, 0.0))


def point(sp: Space, direction, radius: float, euclidean=None) -> Point:
    """Build a canonical point of `sp`; radius-0 points collapse to the cone
    point (or to the spine for open books)."""
    r = float(radius)
    if r < 0.0:
        if r < -COORD_TOL:
            raise ValueError(f"radius {radius} must be nonnegative")
        r = 0.0
    if isinstance(sp, OpenBook):
        if euclidean is None:
            raise ValueError("open-book points need a euclidean component")
        eu = tuple(float(x) for x in euclidean)
        if len(eu) != sp.dim - 1:
            raise ValueError(
                f"euclidean component has length {len(eu)}, expected {sp.dim - 1}")
        ds = sp.spider.directions
        d = 0 if r == 0.0 else ds.canonical(direction)
        return Point(d, r, eu)
    if euclidean is not None:
        raise ValueError("cone points carry no euclidean component")
    ds = sp.directions
    d = _zero_direction(ds) if r == 0.0 else ds.canonical(direction)
    return Point(d, r, None)


def cone_point(sp: Space, euclidean=None) -> Point:
    if isinstance(sp, OpenBook):
        if euclidean is None:
            euclidean = (0.0,) * (sp.dim - 1)
        return point(sp, 0, 0.0, euclidean)
    return point(sp, _zero_direction(sp.directions), 0.0)


@dataclass(frozen=True)
class Measure:
    """Finitely supported probability measure; weights are positive and sum
    to one within 1e-12."""

    atoms: tuple[tuple[Point, float], ...]

    @property
    def size(self) -> int:
        return len(self.atoms)

    def points(self) -> list[Point]:
        return [p for p, _ in self.atoms]

    def weights(self) -> list[float]:
        return [w for _, w in self.atoms]


def measure(sp: Space, pairs) -> Measure:
    merged: dict[Point, float] = {}
    order: list[Point] = []
    total = 0.0
    for raw_point, w in pairs:
        w = float(w)
        if not w > 0.0:
            raise ValueError(f"atom weight {w} must be positive")
        if isinstance(raw_point, Point):
            p = point(sp, raw_point.direction, raw_point.radius, raw_point.euclidean)
        else:
            p = point(sp, *raw_point)
        if p in merged:
            merged[p] += w
        else:
            merged[p] = w
            order.append(p)
        total += w
    if not order:
        raise ValueError("a measure needs at least one atom")
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(f"weights must sum to 1 (got {total!r})")
    return Measure(tuple((p, merged[p]) for p in order))


def dirac(sp: Space, p) -> Measure:
    return measure(sp, [(p, 1.0)])


def spider_marginal(sp: OpenBook, mu: Measure) -> Measure:
    """Marginal of an open-book measure on its spider factor."""
    if not isinstance(sp, OpenBook):
        raise ValueError("spider_marginal expects an open book")
    return measure(sp.spider, [((p.direction, p.radius), w) for p, w in mu.atoms])


# ---------------------------------------------------------------------------
# metric operations
# ---------------------------------------------------------------------------

def direction_distance(ds: DirectionSpace, a, b) -> float:
    """Raw direction-space distance (not capped at pi)."""
    if isinstance(ds, FiniteDirections):
        return ds.distance(ds.canonical(a), ds.canonical(b))
    if isinstance(ds, CircleDirections):
        return ds.distance(ds.canonical(a), ds.canonical(b))
    return ds.distance(a, b)


def _cone_dist(ds: DirectionSpace, x: Point, y: Point) -> float:
    s, t = x.radius, y.radius
    if s == 0.0 or t == 0.0:
        return s + t
    ang = direction_distance(ds, x.direction, y.direction)
    if ang <= 0.0:
        return abs(s - t)
    if ang >= PI:
        return s + t
    c = math.cos(ang)
    return math.sqrt(max(s * s + t * t - 2.0 * (s * t) * c, 0.0))


def cone_distance(sp: Space, x: Point, y: Point) -> float:
    """Metric of the cone (law of cosines with angles capped at pi); open
    books use the product metric."""
    if isinstance(sp, OpenBook):
        if x.euclidean is None or y.euclidean is None:
            raise ValueError("open-book points need euclidean components")
        base = _cone_dist(sp.spider.directions, x, y)
        esq = sum((a - b) ** 2 for a, b in zip(x.euclidean, y.euclidean))
        return math.sqrt(base * base + esq)
    return _cone_dist(sp.directions, x, y)


def _walk_direction(ds: DirectionSpace, a, b, dist: float):
    """Point at distance `dist` from a on a shortest direction path to b."""
    if dist <= 0.0:
        return a
    if isinstance(ds, FiniteDirections):
        raise ValueError(
            "cone over a finite direction set has no geodesic between "
            "directions at angle below pi")
    if isinstance(ds, CircleDirections):
        ta, tb = ds.canonical(a), ds.canonical(b)
        alpha = ds.alpha
        fwd = math.fmod(tb - ta, alpha)
        if fwd < 0.0:
            fwd += alpha
        back = alpha - fwd
        if abs(fwd - back) <= COORD_TOL:
            # both arcs are shortest: pick the smaller resulting coordinate
            return min(ds.canonical(ta + dist), ds.canonical(ta - dist))
        return ds.canonical(ta + dist if fwd < back else ta - dist)
    total, segs = ds.shortest_path(a, b)
    if dist >= total:
        return ds.canonical(b)
    left = dist
    for eid, f, t in segs:
        seg_len = abs(t - f)
        if left <= seg_len:
            return ds.canonical((eid, f + math.copysign(left, t - f)))
        left -= seg_len
    return ds.canonical(b)


def geodesic_point(sp: Space, x: Point, y: Point, frac: float) -> Point:
    """Unit-speed geodesic from x to y evaluated at the given fraction of its
    length."""
    if not 0.0 <= frac <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    if isinstance(sp, OpenBook):
        base = geodesic_point(sp.spider, Point(x.direction, x.radius),
                              Point(y.direction, y.radius), frac)
        eu = tuple(a + frac * (b - a) for a, b in zip(x.euclidean, y.euclidean))
        return point(sp, base.direction, base.radius, eu)
    ds = sp.directions
    s, t = x.radius, y.radius
    if x == y:
        return x
    if s == 0.0:
        return point(sp, y.direction, frac * t)
    if t == 0.0:
        return point(sp, x.direction, (1.0 - frac) * s)
    raw = direction_distance(ds, x.direction, y.direction)
    if raw <= 0.0:
        return point(sp, x.direction, s + frac * (t - s))
    if raw >= PI:
        u = frac * (s + t)
        if u <= s:
            return point(sp, x.direction, s - u)
        return point(sp, y.direction, u - s)
    # planar unfolding of the sector spanned by the two directions
    px = (1.0 - frac) * s + frac * t * math.cos(raw)
    py = frac * t * math.sin(raw)
    r = math.hypot(px, py)
    if r <= COORD_TOL:
        return cone_point(sp)
    psi = math.atan2(py, px)
    if psi <= 0.0:
        return point(sp, x.direction, r)
    if psi >= raw:
        return point(sp, y.direction, r)
    return point(sp, _walk_direction(ds, x.direction, y.direction, psi), r)


def comparison_angle(kappa: float, dxy: float, dxz: float, dyz: float) -> float:
    """Angle at the first vertex of a triangle with the given side lengths in
    the constant-curvature model plane."""
    if dxy <= 0.0 or dxz <= 0.0:
        raise ValueError("comparison angle needs both adjacent sides positive")
    if dyz > dxy + dxz + COORD_TOL or dxy > dxz + dyz + COORD_TOL \
            or dxz > dxy + dyz + COORD_TOL:
        raise ValueError("side lengths violate the triangle inequality")
    if kappa > 0.0:
        r = PI / math.sqrt(kappa)
        if dxy + dxz + dyz >= 2.0 * r:
            raise ValueError(
                f"triangle perimeter must be below {2.0 * r} for curvature {kappa}")
        s = math.sqrt(kappa)
        num = math.cos(s * dyz) - math.cos(s * dxy) * math.cos(s * dxz)
        den = math.sin(s * dxy) * math.sin(s * dxz)
    elif kappa == 0.0:
        num = dxy * dxy + dxz * dxz - dyz * dyz
        den = 2.0 * dxy * dxz
    else:
        s = math.sqrt(-kappa)
        num = math.cosh(s * dxy) * math.cosh(s * dxz) - math.cosh(s * dyz)
        den = math.sinh(s * dxy) * math.sinh(s * dxz)
    return math.acos(min(1.0, max(-1.0, num / den)))


# ---------------------------------------------------------------------------
# shadows and prismatic points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Shadow:
    """Directions at capped distance exactly pi from a reference direction.

    `indices` is used for finite direction sets; `arcs` holds (start, length)
    for circles and (edge, lo, hi) intervals for graphs.
    """

    indices: tuple[int, ...] = ()
    arcs: tuple[tuple, ...] = ()

    @property
    def is_trivial(self) -> bool:
        if self.indices:
            return len(self.indices) <= 1 and not self.arcs
        if not self.arcs:
            return True
        points = set()
        for arc in self.arcs:
            length = arc[-1] - arc[-2] if len(arc) == 3 else arc[1]
            if length > COORD_TOL:
                return False
            points.add(tuple(round(v, 9) for v in arc[:-1]))
        return len(points) <= 1


def shadow(ds: DirectionSpace, coord) -> Shadow:
    if isinstance(ds, FiniteDirections):
        c = ds.canonical(coord)
        idx = tuple(j for j in range(ds.size) if ds.angles[c][j] >= PI - COORD_TOL)
        return Shadow(indices=idx)
    if isinstance(ds, CircleDirections):
        alpha = ds.alpha
        if alpha < 2.0 * PI - COORD_TOL:
            return Shadow()
        t = ds.canonical(coord)
        start = ds.canonical(t + PI)
        return Shadow(arcs=((start, max(alpha - 2.0 * PI, 0.0)),))
    c = ds.canonical(coord)
    arcs = []
    for eid, (u, v, length) in enumerate(ds.edges):
        da = ds.distance(c, (eid, 0.0))
        db = ds.distance(c, (eid, length))
        lo = max(0.0, PI - da)
        hi = min(length, length - (PI - db))
        if lo > hi + COORD_TOL:
            continue
        hi = max(hi, lo)
        pieces = [(lo, hi)]
        if eid == c[0]:
            off = c[1]
            pieces = [(max(lo, 0.0), min(hi, off - PI)), (max(lo, off + PI), hi)]
        for plo, phi in pieces:
            if phi < plo - COORD_TOL:
                continue
            phi = max(phi, plo)
            if phi - plo <= COORD_TOL:
                # canonical form keeps degenerate arcs at shared vertices from
                # being counted once per incident edge
                ceid, coff = ds.canonical((eid, plo))
                arc = (ceid, coff, coff)
            else:
                arc = (eid, plo, phi)
            if arc not in arcs:
                arcs.append(arc)
    return Shadow(arcs=tuple(arcs))


def _graph_eccentricity(ds: GraphDirections, eid: int):
    """Eccentricity (largest distance to any point of the graph) as a
    function of the offset on edge `eid`."""
    u, v, length = ds.edges[eid]
    dmat = ds._vertex_dist

    def ecc(off: float) -> float:
        best = 0.0
        for fid, (a, b, flen) in enumerate(ds.edges):
            da = min(dmat[u][a] + off, dmat[v][a] + length - off)
            db = min(dmat[u][b] + off, dmat[v][b] + length - off)
            cand_v = [0.0, flen]
            cross = (db + flen - da) / 2.0
            if 0.0 < cross < flen:
                cand_v.append(cross)
            if fid == eid:
                cand_v.append(off)
                cand_v.append((off - da) / 2.0)
                cand_v.append((off + db + flen) / 2.0)
            peak = 0.0
            for w in cand_v:
                if not 0.0 <= w <= flen:
                    continue
                d = min(da + w, db + flen - w)
                if fid == eid:
                    d = min(d, abs(off - w))
                peak = max(peak, d)
            best = max(best, peak)
        return best

    return ecc


def _scan_edge_ecc(ecc, length: float, tol: float):
    """Certified comparison of min eccentricity on one edge against pi.

    Eccentricity is 1-Lipschitz in the offset, so bisection with the
    Lipschitz bound decides `min ecc > pi` or finds a witness below pi;
    offsets where the level pi may be attained are returned for inspection.
    """
    stack = [(0.0, length)]
    critical = []
    budget = 20000
    while stack and budget > 0:
        budget -= 1
        a, b = stack.pop()
        fa, fb = ecc(a), ecc(b)
        if fa < PI - tol:
            return "below", a
        if fb < PI - tol:
            return "below", b
        if min(fa, fb) - (b - a) / 2.0 > PI + tol:
            continue
        if b - a < 1e-9:
            critical.append((a + b) / 2.0)
            continue
        mid = (a + b) / 2.0
        stack.append((a, mid))
        stack.append((mid, b))
    for a, b in stack:  # budget exhausted: treat leftovers as critical
        critical.append((a + b) / 2.0)
    return ("critical", critical) if critical else ("above", None)


def is_prismatic(ds: DirectionSpace, tol: float = COORD_TOL) -> bool:
    """True iff every direction has a shadow with more than one element."""
    if isinstance(ds, FiniteDirections):
        return all(
            sum(1 for j in range(ds.size) if ds.angles[i][j] >= PI - tol) >= 2
            for i in range(ds.size))
    if isinstance(ds, CircleDirections):
        return ds.alpha > 2.0 * PI + tol
    # graph: the shadow of q is {x : d(q, x) >= pi}; it has more than one
    # element iff the eccentricity of q exceeds pi (a neighborhood of the
    # farthest point is then in the shadow) or equals pi with two or more
    # farthest points.
    for eid, (_u, _v, length) in enumerate(ds.edges):
        ecc = _graph_eccentricity(ds, eid)
        verdict, payload = _scan_edge_ecc(ecc, length, tol)
        if verdict == "below":
            return False
        if verdict == "critical":
            for off in payload:
                if shadow(ds, (eid, off)).is_trivial:
                    return False
    return True


def open_book_prismatic(sp: OpenBook) -> bool:
    """Spine points of an open book are never prismatic: a spine direction's
    shadow is the single opposite spine direction."""
    return False


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def space_to_json(sp: Space) -> dict:
    if isinstance(sp, OpenBook):
        return {"kind": "open_book", "K": sp.pages, "d": sp.dim}
    ds = sp.directions
    if isinstance(ds, FiniteDirections):
        if ds.is_spider:
            return {"kind": "spider", "K": ds.size}
        return {"kind": "finite_cone",
                "distance_matrix": [list(row) for row in ds.angles]}
    if isinstance(ds, CircleDirections):
        return {"kind": "kale", "alpha": ds.alpha}
    return {"kind": "graph_cone", "vertices": ds.vertex_count,
            "edges": [[u, v, length] for u, v, length in ds.edges]}


def space_from_json(data: dict) -> Space:
    kind = data.get("kind")
    if kind == "spider":
        return spider(int(data["K"]))
    if kind == "finite_cone":
        return Cone(finite_directions(data["distance_matrix"]))
    if kind == "kale":
        return kale(float(data["alpha"]))
    if kind == "graph_cone":
        return graph_cone(int(data["vertices"]), data["edges"])
    if kind == "open_book":
        return open_book(int(data["K"]), int(data["d"]))
    raise ValueError(f"unknown space kind {kind!r}")


def point_to_json(sp: Space, p: Point) -> dict:
    d = p.direction
    if isinstance(d, tuple):
        d = [d[0], d[1]]
    out = {"dir": d, "r": p.radius}
    if p.euclidean is not None:
        out["eu"] = list(p.euclidean)
    return out


def point_from_json(sp: Space, data: dict) -> Point:
    direction = data.get("dir", 0)
    if isinstance(direction, list):
        direction = (direction[0], direction[1])
    return point(sp, direction, data.get("r", 0.0), data.get("eu"))


def measure_to_json(sp: Space, mu: Measure) -> dict:
    return {"atoms": [{"point": point_to_json(sp, p), "weight": w}
                      for p, w in mu.atoms]}


def measure_from_json(sp: Space, data: dict) -> Measure:
    return measure(sp, [(point_from_json(sp, a["point"]), a["weight"])
                        for a in data["atoms"]])


def json_roundtrip(sp: Space) -> str:
    return json.dumps(space_to_json(sp), sort_keys=True)
