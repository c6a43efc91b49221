"""Internal machinery for minimizing direction derivatives of the Frechet
function at the cone point.

The derivative in direction sigma is -sum_i w_i r_i cos(d_pi(sigma, dir_i)).
Between breakpoints (atom directions, points where an atom's capped distance
reaches pi, branch switches of graph distances) every atom contributes either
a constant or cos(theta + delta_i), so each smooth piece is a single sinusoid
plus a constant.  The scalar minimizer runs golden-section per piece with all
breakpoints as candidates; the batched minimizer used by the Monte Carlo
paths evaluates the per-piece closed form instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spaces import (
    PI,
    CircleDirections,
    FiniteDirections,
    GraphDirections,
    Measure,
    OpenBook,
    Space,
    spider_marginal,
)

TWO_PI = 2.0 * PI
GOLDEN_TOL = 1e-10
TIE_TOL = 1e-12
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo: float, hi: float, tol: float = GOLDEN_TOL):
    """Golden-section search for a minimum on [lo, hi]; returns (x, f(x)).

    Correct for unimodal pieces; on monotone or rising-falling pieces it
    converges toward an endpoint, which callers cover separately.
    """
    a, b = lo, hi
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
    x = (a + b) / 2.0
    return x, f(x)


@dataclass
class Piece:
    lo: float
    hi: float
    col_a: np.ndarray  # atom coefficients of cos(theta)
    col_b: np.ndarray  # atom coefficients of sin(theta)
    col_c: np.ndarray  # constant contribution of capped atoms
    edge: int | None = None


@dataclass
class DirectionSystem:
    """Per-measure support structure for direction-derivative queries."""

    kind: str                      # finite | circle | graph | book
    space: Space
    radii: np.ndarray              # (m,)
    candidates: list               # direction coords: enumeration or breakpoints
    pulls: np.ndarray              # (m, len(candidates)) pull of atom i at candidate
    pieces: list[Piece] = field(default_factory=list)
    atom_dirs: list = field(default_factory=list)
    alpha: float | None = None
    edge_data: dict | None = None  # graph: per-edge per-atom endpoint distances

    def derivative_at(self, weights, coord) -> float:
        """Exact scalar derivative -sum w_i * pull_i(coord)."""
        return -math.fsum(w * p for w, p in zip(weights, self._pull_column(coord)))

    def _pull_column(self, coord):
        if self.kind in ("finite", "book"):
            ds: FiniteDirections = self.space.directions if self.kind == "finite" \
                else self.space.spider.directions
            c = ds.canonical(coord)
            return [r * math.cos(min(ds.distance(c, d), PI))
                    for r, d in zip(self.radii, self.atom_dirs)]
        if self.kind == "circle":
            ds = self.space.directions
            t = ds.canonical(coord)
            return [r * math.cos(min(ds.distance(t, d), PI))
                    for r, d in zip(self.radii, self.atom_dirs)]
        eid, off = coord
        u, v, length = self.space.directions.edges[eid]
        ra, rb = self.edge_data[eid]
        cols = []
        for i, (r, d) in enumerate(zip(self.radii, self.atom_dirs)):
            dist = min(ra[i] + off, rb[i] + (length - off))
            if d[0] == eid:
                dist = min(dist, abs(off - d[1]))
            cols.append(r * math.cos(min(dist, PI)))
        return cols


# ---------------------------------------------------------------------------
# system construction
# ---------------------------------------------------------------------------

def build_system(sp: Space, mu: Measure) -> DirectionSystem:
    if isinstance(sp, OpenBook):
        marg = spider_marginal(sp, mu)
        sub = build_system(sp.spider, marg)
        return DirectionSystem("book", sp, sub.radii, sub.candidates, sub.pulls,
                               [], sub.atom_dirs)
    ds = sp.directions
    radii = np.array([p.radius for p in mu.points()])
    dirs = [p.direction for p in mu.points()]
    if isinstance(ds, FiniteDirections):
        cands = list(range(ds.size))
        pulls = np.array([[r * math.cos(min(ds.distance(d, g), PI)) for g in cands]
                          for r, d in zip(radii, dirs)])
        return DirectionSystem("finite", sp, radii, cands, pulls, [], dirs)
    if isinstance(ds, CircleDirections):
        return _build_circle(sp, ds, radii, dirs)
    return _build_graph(sp, ds, radii, dirs)


def _wrap_sorted_unique(values, period):
    out = []
    for val in sorted(values):
        if not out or val - out[-1] > 1e-14:
            out.append(val)
    if out and period - (out[-1] - out[0]) <= 1e-14:
        out.pop()
    return out


def _build_circle(sp, ds: CircleDirections, radii, dirs) -> DirectionSystem:
    alpha = ds.alpha
    bps = set()
    for r, theta in zip(radii, dirs):
        if r <= 0.0:
            continue
        bps.add(ds.canonical(theta))
        if alpha >= TWO_PI:
            bps.add(ds.canonical(theta + PI))
            bps.add(ds.canonical(theta - PI))
        else:
            bps.add(ds.canonical(theta + alpha / 2.0))
    if not bps:
        bps.add(0.0)
    cands = _wrap_sorted_unique(bps, alpha)
    pulls = np.array([[r * math.cos(min(ds.distance(d, g), PI)) for g in cands]
                      for r, d in zip(radii, dirs)])
    pieces = []
    m = len(radii)
    for idx, lo in enumerate(cands):
        hi = cands[idx + 1] if idx + 1 < len(cands) else cands[0] + alpha
        if hi - lo <= 1e-14:
            continue
        mid = (lo + hi) / 2.0
        col_a = np.zeros(m)
        col_b = np.zeros(m)
        col_c = np.zeros(m)
        for i, (r, theta) in enumerate(zip(radii, dirs)):
            if r <= 0.0:
                continue
            best_k, best_d = 0, math.inf
            for k in (-2, -1, 0, 1, 2):
                d = abs(mid - theta + k * alpha)
                if d < best_d:
                    best_k, best_d = k, d
            if best_d >= PI:
                col_c[i] = r
            else:
                delta = best_k * alpha - theta
                col_a[i] = r * math.cos(delta)
                col_b[i] = -r * math.sin(delta)
        pieces.append(Piece(lo, hi, col_a, col_b, col_c))
    return DirectionSystem("circle", sp, radii, cands, pulls, pieces, dirs,
                           alpha=alpha)


def _build_graph(sp, ds: GraphDirections, radii, dirs) -> DirectionSystem:
    m = len(radii)
    edge_data = {}
    pieces = []
    cand_coords: list[tuple[int, float]] = []
    for eid, (u, v, length) in enumerate(ds.edges):
        ra = [ds.vertex_to_coord(u, d) for d in dirs]
        rb = [ds.vertex_to_coord(v, d) for d in dirs]
        edge_data[eid] = (ra, rb)
        cuts = {0.0, length}
        for i, r in enumerate(radii):
            if r <= 0.0:
                continue
            branches = [(ra[i], 1.0), (rb[i] + length, -1.0)]
            cuts.add((rb[i] + length - ra[i]) / 2.0)
            if dirs[i][0] == eid:
                off = dirs[i][1]
                cuts.add(off)
                cuts.add((off - ra[i]) / 2.0)
                cuts.add((off + rb[i] + length) / 2.0)
                branches += [(off, -1.0), (-off, 1.0)]
            for b, s in branches:
                cuts.add((PI - b) / s)
        cut_list = sorted(c for c in cuts if -1e-14 <= c <= length + 1e-14)
        cleaned = []
        for c in cut_list:
            c = min(max(c, 0.0), length)
            if not cleaned or c - cleaned[-1] > 1e-14:
                cleaned.append(c)
        for coord in cleaned:
            cand_coords.append((eid, coord))
        for lo, hi in zip(cleaned, cleaned[1:]):
            mid = (lo + hi) / 2.0
            col_a = np.zeros(m)
            col_b = np.zeros(m)
            col_c = np.zeros(m)
            for i, r in enumerate(radii):
                if r <= 0.0:
                    continue
                opts = [(ra[i] + mid, 1.0), (rb[i] + length - mid, -1.0)]
                if dirs[i][0] == eid:
                    off = dirs[i][1]
                    opts.append((abs(mid - off), 1.0 if mid >= off else -1.0))
                dist, slope = min(opts, key=lambda t: t[0])
                if dist >= PI:
                    col_c[i] = r
                else:
                    delta = slope * dist - mid
                    col_a[i] = r * math.cos(delta)
                    col_b[i] = -r * math.sin(delta)
            pieces.append(Piece(lo, hi, col_a, col_b, col_c, edge=eid))
    pulls = np.array([
        [0.0] * len(cand_coords) for _ in range(m)]) if m else np.zeros((0, 0))
    for i, (r, d) in enumerate(zip(radii, dirs)):
        for g, coord in enumerate(cand_coords):
            pulls[i][g] = r * math.cos(min(ds.distance(d, coord), PI))
    return DirectionSystem("graph", sp, radii, cand_coords,
                           np.asarray(pulls), pieces, dirs, edge_data=edge_data)


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------

def _coord_key(system: DirectionSystem, coord):
    if system.kind in ("finite", "book"):
        return (coord,)
    if system.kind == "circle":
        return (system.space.directions.canonical(coord),)
    c = system.space.directions.canonical(coord)
    return c


def min_derivative(system: DirectionSystem, weights) -> tuple[object, float]:
    """Minimize the direction derivative over all directions.

    Breakpoints are always candidates (the derivative is non-smooth there);
    each smooth piece contributes its golden-section minimizer and its exact
    interior critical point.  Ties go to the smallest coordinate."""
    w = np.asarray(weights, dtype=float)
    entries = []
    for g, coord in enumerate(system.candidates):
        val = -math.fsum(wi * pi_ for wi, pi_ in zip(w, system.pulls[:, g]))
        entries.append((val, _coord_key(system, coord), coord))
    for piece in system.pieces:
        if piece.edge is None:
            f = lambda t: system.derivative_at(w, t)
            coord_of = lambda t: system.space.directions.canonical(t)
        else:
            eid = piece.edge
            f = lambda t, eid=eid: system.derivative_at(w, (eid, t))
            coord_of = lambda t, eid=eid: system.space.directions.canonical((eid, t))
        x, fx = golden_section(f, piece.lo, piece.hi)
        # golden-section localizes the argmin only to ~sqrt(eps); the interior
        # critical point of the piece sinusoid pins it to full precision and
        # supersedes the golden point whenever it is at least as good
        star = None
        a = float(w @ piece.col_a)
        b = float(w @ piece.col_b)
        if a != 0.0 or b != 0.0:
            cand = piece.lo + math.fmod(math.atan2(b, a) - piece.lo, TWO_PI)
            if cand < piece.lo:
                cand += TWO_PI
            if piece.lo <= cand <= piece.hi:
                star = cand
        if star is not None:
            fs = f(star)
            if fs <= fx + TIE_TOL * (1.0 + abs(fx)):
                coord = coord_of(star)
                entries.append((fs, _coord_key(system, coord), coord))
                continue
            coord = coord_of(star)
            entries.append((fs, _coord_key(system, coord), coord))
        coord = coord_of(x)
        entries.append((fx, _coord_key(system, coord), coord))
    best = min(e[0] for e in entries)
    tol = TIE_TOL * (1.0 + abs(best))
    tied = [e for e in entries if e[0] <= best + tol]
    tied.sort(key=lambda e: e[1])
    _, _, coord = tied[0]
    if system.kind in ("finite", "book"):
        return coord, min(e[0] for e in tied if e[1] == tied[0][1])
    # return the exact value at the winning coordinate
    return coord, system.derivative_at(w, coord)


def batch_min_derivative(system: DirectionSystem, coeffs: np.ndarray) -> np.ndarray:
    """Vectorized minimum derivative for rows of atom coefficients.

    Each row plays the role of (weight * radius-normalization) per atom, e.g.
    resample counts / n.  Uses the closed form per smooth piece.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    best = -(coeffs @ system.pulls).max(axis=1)
    # note: min over candidates of -(c . pull) == -(max of c . pull)
    for piece in system.pieces:
        a = coeffs @ piece.col_a
        b = coeffs @ piece.col_b
        c = coeffs @ piece.col_c
        radius = np.hypot(a, b)
        phi = np.arctan2(b, a)
        theta = piece.lo + np.mod(phi - piece.lo, TWO_PI)
        feasible = theta <= piece.hi + 1e-15
        cand = np.where(feasible, c - radius, np.inf)
        best = np.minimum(best, cand)
    return best
