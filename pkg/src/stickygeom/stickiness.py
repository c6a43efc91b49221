"""Sticky-flavor classification: direction-derivative certificates, folded
moments, the pull condition, exact perturbation thresholds, and seeded
sample-stickiness experiments with the exponential tail bound."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from ._mc import resample_counts
from .directions import batch_min_derivative, build_system, min_derivative
from .frechet import directional_derivative, frechet_mean, pull
from .spaces import (
    PI,
    CircleDirections,
    Cone,
    FiniteDirections,
    GraphDirections,
    Measure,
    OpenBook,
    Point,
    Space,
    point,
    spider_marginal,
)
from .transport import perturbed_measure

CLASSIFY_TOL = 1e-10


@dataclass(frozen=True)
class StickinessReport:
    """Classification of a measure at the cone point (open books: at the
    spine).  label is sticky when the smallest direction derivative c_min is
    positive, boundary when it vanishes within tolerance, else nonsticky."""

    label: str
    c_min: float
    argmin_direction: object
    pull_condition: bool
    mean: Point
    derivatives: tuple[tuple[object, float], ...]


def _page_derivatives(sp: OpenBook, mu: Measure):
    marg = spider_marginal(sp, mu)
    vals = [directional_derivative(sp.spider, marg, j) for j in range(sp.pages)]
    return marg, vals


def classify(sp: Space, mu: Measure, tol: float = CLASSIFY_TOL) -> StickinessReport:
    """Directional-stickiness certificate; by the flavor equivalences the
    label also certifies Wasserstein, perturbation and sample stickiness."""
    if isinstance(sp, OpenBook):
        marg, vals = _page_derivatives(sp, mu)
        argmin = min(range(sp.pages), key=lambda j: (vals[j], j))
        c_min = vals[argmin]
        derivs = tuple((j, vals[j]) for j in range(sp.pages))
        pc = pull_condition(sp.spider, marg)
    else:
        system = build_system(sp, mu)
        argmin, c_min = min_derivative(system, mu.weights())
        w = mu.weights()
        derivs = tuple((c, system.derivative_at(w, c)) for c in system.candidates)
        pc = pull_condition(sp, mu)
    if c_min > tol:
        label = "sticky"
    elif c_min < -tol:
        label = "nonsticky"
    else:
        label = "boundary"
    return StickinessReport(label, c_min, argmin, pc, frechet_mean(sp, mu), derivs)


def folded_moments(sp: OpenBook, mu: Measure) -> np.ndarray:
    """j-th folded moment: mean page coordinate after folding all pages but
    page j onto the negative axis.  Negative for every page certifies sample
    stickiness on the spine; equals the negative page-direction derivative."""
    if not isinstance(sp, OpenBook):
        raise ValueError("folded_moments expects an open book")
    out = np.zeros(sp.pages)
    for p, w in mu.atoms:
        for j in range(sp.pages):
            out[j] += w * (p.radius if (p.direction == j and p.radius > 0.0) else -p.radius)
    return out


def kale_folded_moment(sp: Cone, mu: Measure, theta: float) -> float:
    """First folded moment of a circle-cone measure at angle theta; equals
    the negative direction derivative there."""
    if not (isinstance(sp, Cone) and isinstance(sp.directions, CircleDirections)):
        raise ValueError("kale_folded_moment expects a cone over a circle")
    return -directional_derivative(sp, mu, theta)


def max_kale_folded_moment(sp: Cone, mu: Measure) -> tuple[float, float]:
    """Maximizing angle and value of the folded moment (breakpoint plus
    per-piece search); stickiness holds iff the maximum is negative."""
    argmin, value = min_derivative(build_system(sp, mu), mu.weights())
    return argmin, -value


def pull_condition(sp: Cone, mu: Measure) -> bool:
    """True iff no direction has vanishing pull on the whole support.

    The pull at the cone point vanishes iff the atom sits at the cone point
    or its direction is at angle exactly pi/2, so the condition fails iff the
    intersection of those per-atom zero sets is nonempty."""
    if not isinstance(sp, Cone):
        raise ValueError(
            "pull_condition works on cones; reduce open books to the spider "
            "marginal")
    carried = [z for z, _ in mu.atoms if z.radius > 0.0]
    if not carried:
        return False  # the pull vanishes everywhere for a point mass at the apex
    ds = sp.directions
    if isinstance(ds, FiniteDirections):
        for sigma in range(ds.size):
            if all(abs(ds.distance(sigma, z.direction) - PI / 2.0) <= 1e-12
                   for z in carried):
                return False
        return True
    for sigma in _right_angle_set(ds, carried[0].direction):
        if all(abs(min(ds.distance(sigma, z.direction), PI) - PI / 2.0) <= 1e-12
               for z in carried):
            return False
    return True


def _right_angle_set(ds, direction):
    """Directions at distance exactly pi/2 from the given one (finite set:
    the distance functions are piecewise linear with slopes +-1)."""
    if isinstance(ds, CircleDirections):
        if ds.alpha < PI:
            return []
        t = ds.canonical(direction)
        cands = {ds.canonical(t + PI / 2.0), ds.canonical(t - PI / 2.0)}
        return [c for c in cands if abs(ds.distance(c, t) - PI / 2.0) <= 1e-12]
    assert isinstance(ds, GraphDirections)
    out = []
    c = ds.canonical(direction)
    for eid, (u, v, length) in enumerate(ds.edges):
        ra = ds.vertex_to_coord(u, c)
        rb = ds.vertex_to_coord(v, c)
        cands = {PI / 2.0 - ra, rb + length - PI / 2.0}
        if eid == c[0]:
            cands.add(c[1] - PI / 2.0)
            cands.add(c[1] + PI / 2.0)
        for off in cands:
            if -1e-12 <= off <= length + 1e-12:
                coord = ds.canonical((eid, min(max(off, 0.0), length)))
                if abs(ds.distance(coord, c) - PI / 2.0) <= 1e-12 \
                        and coord not in out:
                    out.append(coord)
    return out


def perturbation_threshold(sp: Space, mu: Measure, y: Point,
                           tol: float = CLASSIFY_TOL) -> float:
    """Largest mixing weight t such that (1-t) mu + t delta_y keeps its mean
    at the cone point (open books: on the spine).

    The derivative in each direction is affine in t, so for finite direction
    sets the threshold is the smallest positive per-direction root; circles
    and graphs bisect the concave map t -> smallest derivative."""
    if isinstance(sp, OpenBook):
        marg, vals = _page_derivatives(sp, mu)
        y_marg = point(sp.spider, y.direction, y.radius)
        pulls = [pull(sp.spider, j, y_marg) for j in range(sp.pages)]
        return _finite_threshold(vals, pulls)
    if not isinstance(sp, Cone):
        raise ValueError("perturbation_threshold expects a cone or open book")
    y = point(sp, y.direction, y.radius)
    system = build_system(sp, mu)
    _, c_min = min_derivative(system, mu.weights())
    if c_min < -tol:
        return 0.0
    if y.radius == 0.0:
        return 1.0  # mixing with the apex mass never unsticks
    if isinstance(sp.directions, FiniteDirections):
        w = mu.weights()
        vals = [system.derivative_at(w, j) for j in range(sp.directions.size)]
        pulls = [pull(sp, j, y) for j in range(sp.directions.size)]
        return _finite_threshold(vals, pulls)

    # the mixture's support is fixed across t, so one system serves every
    # bisection step (coefficient rows (1-t) w, t)
    mixed = perturbed_measure(sp, mu, y, 0.5)
    augmented = build_system(sp, mixed)
    base = np.zeros(mixed.size)
    for z, w in mu.atoms:
        base[_atom_index(mixed, z)] += w
    y_row = np.zeros(mixed.size)
    y_row[_atom_index(mixed, point(sp, y.direction, y.radius))] = 1.0

    def smallest_derivative(t: float) -> float:
        coeffs = (1.0 - t) * base + t * y_row
        return float(batch_min_derivative(augmented, coeffs[None, :])[0])

    if smallest_derivative(1.0 - 1e-15) >= 0.0:
        return 1.0
    lo, hi = 0.0, 1.0 - 1e-15
    for _ in range(60):
        mid = (lo + hi) / 2.0
        if smallest_derivative(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def _atom_index(mu: Measure, z: Point) -> int:
    for k, (p, _) in enumerate(mu.atoms):
        if p == z:
            return k
    raise ValueError("atom not found in measure")


def _finite_threshold(derivs, pulls) -> float:
    best = 1.0
    for a, b in zip(derivs, pulls):
        a = max(a, 0.0)
        if a + b > 0.0:
            best = min(best, a / (a + b))
    return best + 0.0  # normalizes -0.0


# ---------------------------------------------------------------------------
# sample stickiness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SampleStickingResult:
    n: int
    trials: int
    p_hat: float
    se: float
    seed: int


def sample_sticking(sp: Space, mu: Measure, n: int, trials: int, seed: int,
                    threads: int = 1) -> SampleStickingResult:
    """Monte Carlo estimate of the probability that the mean of an n-sample
    leaves the cone point (open books: leaves the spine); deterministic given
    the seed and independent of the thread count."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    system = build_system(sp, mu)
    counts = resample_counts(mu.weights(), n, trials, seed, threads)
    # raw counts keep tied leg sums exactly zero (the sign is scale-free);
    # dividing by n first would turn ties into float noise
    minvals = batch_min_derivative(system, counts.astype(float))
    nonstick = minvals < 0.0
    p_hat = float(nonstick.mean())
    se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / trials)
    return SampleStickingResult(n, trials, p_hat, se, seed)


def tail_bound(c_min: float, k: float, n: int) -> float:
    """Shape of the non-sticking tail bound (sqrt(n) c_min)^k exp(-2 n
    c_min^2); the multiplicative constant of the bound is not estimated.

    k is the covering exponent of the direction space (0 for finite
    direction sets)."""
    if c_min <= 0.0:
        raise ValueError("tail bound needs a positive smallest derivative")
    if k < 0.0:
        raise ValueError("covering exponent must be nonnegative")
    if n == 0:
        return 0.0 if k > 0.0 else 1.0
    base = math.sqrt(n) * c_min
    return base ** k * math.exp(-2.0 * n * c_min * c_min)


# ---------------------------------------------------------------------------
# exact spider resampling oracle
# ---------------------------------------------------------------------------

def _spider_enumeration(sp: Cone, mu: Measure, n: int):
    """Distribution of max(0, -smallest empirical derivative) over all
    resample count vectors; exact, for spider cones with at most 4 atoms."""
    if not (isinstance(sp, Cone) and isinstance(sp.directions, FiniteDirections)
            and sp.directions.is_spider):
        raise ValueError("exact enumeration needs a spider cone")
    m = mu.size
    if m > 4:
        raise ValueError("exact enumeration supports at most 4 atoms")
    if n > 400:
        raise ValueError("exact enumeration supports n <= 400")
    radii = np.array([p.radius for p in mu.points()])
    legs = [p.direction for p in mu.points()]
    logw = np.log(np.array(mu.weights()))
    lg = gammaln(np.arange(n + 2))

    def leg_matrix(counts):
        # counts: (..., m); returns S and max leg sum
        contrib = counts * radii
        total = contrib.sum(axis=-1)
        sums = {}
        for i, leg in enumerate(legs):
            sums[leg] = sums.get(leg, 0) + contrib[..., i]
        best = None
        for v in sums.values():
            best = v if best is None else np.maximum(best, v)
        return total, best

    if m == 1:
        counts = np.array([[n]])
    elif m == 2:
        c0 = np.arange(n + 1)
        counts = np.stack([c0, n - c0], axis=-1)
    elif m == 3:
        rows = []
        for c0 in range(n + 1):
            c1 = np.arange(n - c0 + 1)
            rows.append(np.stack([np.full_like(c1, c0), c1, n - c0 - c1], axis=-1))
        counts = np.concatenate(rows, axis=0)
    else:
        rows = []
        for c0 in range(n + 1):
            for c1 in range(n - c0 + 1):
                c2 = np.arange(n - c0 - c1 + 1)
                rows.append(np.stack([np.full_like(c2, c0), np.full_like(c2, c1),
                                      c2, n - c0 - c1 - c2], axis=-1))
        counts = np.concatenate(rows, axis=0)
    logpmf = lg[n + 1] - lg[counts + 1].sum(axis=-1) + (counts * logw).sum(axis=-1)
    pmf = np.exp(logpmf)
    total, best = leg_matrix(counts)
    dist = np.maximum(0.0, (2.0 * best - total) / n)
    return dist, pmf


def exact_nonstick_probability(sp: Cone, mu: Measure, n: int) -> float:
    """Exact probability that an n-sample mean leaves the cone point, by
    enumeration of multinomial resample counts (spider cones, <= 4 atoms)."""
    dist, pmf = _spider_enumeration(sp, mu, n)
    return float(pmf[dist > 0.0].sum())


def exact_mean_distance_moment(sp: Cone, mu: Measure, n: int, q: float) -> float:
    """Exact E[d(cone point, mean of n-sample)^q] for spider cones."""
    dist, pmf = _spider_enumeration(sp, mu, n)
    return float((pmf * dist ** q).sum())
