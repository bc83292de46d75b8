"""Angular and spatial quadrature rules.

Angular: equal-weight trapezoidal points on the unit circle, the standard
choice for 2D discrete ordinates.  With at least three ordinates the rule
integrates constants, odd moments, and second moments of the direction
vector exactly (sum w = 1, sum w*omega = 0, sum w*cos^2 = 1/2).

Spatial: polygons are integrated by fanning triangles from the centroid and
mapping a symmetric positive-weight Gauss rule onto each triangle; segments
use Gauss-Legendre.  Rules are tabulated up to exactness degree 10; higher
degrees fall back to a tensor Gauss rule on the collapsed (Duffy) square,
which keeps all weights positive at the cost of a few extra points.
"""

from dataclasses import dataclass
from math import ceil, factorial

import numpy as np

from ._geometry import polygon_area, polygon_centroid


@dataclass
class AngularQuadrature:
    """Unit-circle ordinate set: directions (n, 2) and weights summing to 1."""

    ordinates: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.weights)


def trapezoidal_angular(n_ordinates):
    """Equally spaced, equally weighted directions on the unit circle."""
    n = int(n_ordinates)
    if n < 2:
        raise ValueError(f"need at least 2 ordinates, got {n_ordinates}")
    theta = 2.0 * np.pi * np.arange(n) / n
    ordinates = np.column_stack([np.cos(theta), np.sin(theta)])
    weights = np.full(n, 1.0 / n)
    return AngularQuadrature(ordinates, weights)


@dataclass
class PolygonRule:
    """Quadrature points (n, 2) and positive weights summing to the area."""

    points: np.ndarray
    weights: np.ndarray
    exactness: int


# Symmetric triangle rules in barycentric form.  Orbits:
#   ("c",)        centroid, 1 point
#   ("s3", a)     permutations of (1 - 2a, a, a), 3 points
#   ("s6", a, b)  permutations of (a, b, 1 - a - b), 6 points
# Weights are per point and sum to 1 over the triangle.  Only rules with
# strictly positive weights are tabulated; requested degrees 3 and 7 are
# served by the 4- and 8-degree rules for that reason.
_TRIANGLE_RULES = {
    1: [("c", 1.0)],
    2: [("s3", 1.0 / 6.0, 1.0 / 3.0)],
    4: [
        ("s3", 0.445948490915965, 0.223381589678011),
        ("s3", 0.091576213509771, 0.109951743655322),
    ],
    5: [
        ("c", 0.225),
        ("s3", 0.470142064105115, 0.132394152788506),
        ("s3", 0.101286507323456, 0.125939180544827),
    ],
    6: [
        ("s3", 0.249286745170910, 0.116786275726379),
        ("s3", 0.063089014491502, 0.050844906370207),
        ("s6", 0.310352451033785, 0.053145049844816, 0.082851075618374),
    ],
    8: [
        ("c", 0.144315607677787),
        ("s3", 0.459292588292723, 0.095091634413245),
        ("s3", 0.170569307751760, 0.103217370534718),
        ("s3", 0.050547228317031, 0.032458497623198),
        ("s6", 0.263112829634638, 0.008394777409958, 0.027230314174435),
    ],
    9: [
        ("c", 0.097135796282799),
        ("s3", 0.489682519198738, 0.031334700227139),
        ("s3", 0.437089591492937, 0.077827541004774),
        ("s3", 0.188203535619033, 0.079647738927210),
        ("s3", 0.044729513394453, 0.025577675658698),
        ("s6", 0.221962989160766, 0.036838412054736, 0.043283539377289),
    ],
    10: [
        ("c", 0.090817990382754),
        ("s3", 0.485577633383657, 0.036725957756467),
        ("s3", 0.109481575485037, 0.045321059435528),
        ("s6", 0.141707219414880, 0.307939838764121, 0.072757916845420),
        ("s6", 0.025003534762686, 0.246672560639903, 0.028327242531057),
        ("s6", 0.009540815400299, 0.066803251012200, 0.009421666963733),
    ],
}

_MAX_TABULATED = max(_TRIANGLE_RULES)


def _expand_orbits(spec):
    bary = []
    weights = []
    orbit_of = []
    for o, orbit in enumerate(spec):
        if orbit[0] == "c":
            bary.append((1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0))
            weights.append(orbit[1])
            orbit_of.append(o)
        elif orbit[0] == "s3":
            a, w = orbit[1], orbit[2]
            b = 1.0 - 2.0 * a
            for pt in ((b, a, a), (a, b, a), (a, a, b)):
                bary.append(pt)
                weights.append(w)
                orbit_of.append(o)
        else:
            a, b, w = orbit[1], orbit[2], orbit[3]
            c = 1.0 - a - b
            for pt in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
                bary.append(pt)
                weights.append(w)
                orbit_of.append(o)
    return np.asarray(bary), np.asarray(weights), np.asarray(orbit_of)


def _refined_tabulated(degree):
    """Expand a tabulated rule and re-solve its orbit weights.

    The 15-digit published weights carry rounding at the 1e-12 level (the
    degree-8 set sums to 1 + 4.4e-10), too coarse for round-off-exact
    assembly.  The node pattern is kept and the handful of orbit weights is
    re-fit to the exact monomial moments of the reference triangle, which
    restores machine-precision exactness.
    """
    bary, weights, orbit_of = _expand_orbits(_TRIANGLE_RULES[degree])
    n_orbits = orbit_of.max() + 1
    x, y = bary[:, 1], bary[:, 2]
    rows = []
    rhs = []
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            vals = x**i * y**j
            rows.append(np.bincount(orbit_of, weights=vals, minlength=n_orbits))
            # integral of x^i y^j over the unit triangle is i! j! / (i+j+2)!;
            # weights are normalized to sum to 1, so scale by 1/area = 2
            rhs.append(2.0 * factorial(i) * factorial(j) / factorial(i + j + 2))
    fit, *_ = np.linalg.lstsq(np.asarray(rows), np.asarray(rhs), rcond=None)
    refined = fit[orbit_of]
    if not np.all(refined > 0.0) or np.max(np.abs(refined - weights)) > 1e-9:
        raise RuntimeError(f"triangle rule of degree {degree} failed refinement")
    return bary, refined


def _duffy_triangle(degree):
    """Tensor Gauss rule on the square collapsed onto the reference triangle.

    Map (u, v) -> (u, v*(1 - u)) has Jacobian (1 - u), raising the u-degree
    of the integrand by one; the node counts account for that.
    """
    nu = ceil((degree + 2) / 2)
    xu, wu = np.polynomial.legendre.leggauss(nu)
    xu = 0.5 * (xu + 1.0)
    wu = 0.5 * wu
    x = np.repeat(xu, nu)
    y = np.tile(xu, nu) * (1.0 - x)
    w = np.repeat(wu, nu) * np.tile(wu, nu) * (1.0 - x)
    bary = np.column_stack([1.0 - x - y, x, y])
    # reference triangle area is 1/2; normalize weights to sum to 1
    return bary, 2.0 * w


_RULE_CACHE = {}


def triangle_rule(degree):
    """Barycentric points and weights (summing to 1) exact to `degree`."""
    if degree < 0:
        raise ValueError(f"exactness degree must be nonnegative, got {degree}")
    if degree not in _RULE_CACHE:
        if degree <= _MAX_TABULATED:
            use = min(d for d in _TRIANGLE_RULES if d >= max(degree, 1))
            _RULE_CACHE[degree] = _refined_tabulated(use)
        else:
            _RULE_CACHE[degree] = _duffy_triangle(degree)
    return _RULE_CACHE[degree]


def polygon_rule(verts, exactness):
    """Volume rule on a polygon, exact for total degree `exactness`.

    The polygon must be star-shaped with respect to its centroid (convex
    Voronoi cells always are); each centroid-edge fan triangle carries an
    affinely mapped triangle rule.
    """
    verts = np.asarray(verts, dtype=float)
    if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
        raise ValueError("polygon needs at least 3 vertices of dimension 2")
    area = polygon_area(verts)
    if area <= 0.0:
        raise ValueError("polygon must be counter-clockwise with positive area")
    centroid = polygon_centroid(verts)
    bary, wref = triangle_rule(int(exactness))

    pts = []
    wts = []
    n = len(verts)
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        tri_area = 0.5 * ((a[0] - centroid[0]) * (b[1] - centroid[1])
                          - (b[0] - centroid[0]) * (a[1] - centroid[1]))
        if tri_area <= 0.0:
            raise ValueError("polygon is not star-shaped about its centroid")
        pts.append(bary @ np.vstack([centroid, a, b]))
        wts.append(wref * tri_area)
    return PolygonRule(np.vstack(pts), np.concatenate(wts), int(exactness))


def segment_rule(a, b, exactness):
    """Gauss-Legendre rule on the segment [a, b], weights summing to |b - a|."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if int(exactness) < 0:
        raise ValueError("exactness degree must be nonnegative")
    length = float(np.hypot(*(b - a)))
    if length == 0.0:
        raise ValueError("zero-length segment")
    n = max(1, ceil((int(exactness) + 1) / 2))
    t, wt = np.polynomial.legendre.leggauss(n)
    pts = 0.5 * (a + b) + 0.5 * np.outer(t, b - a)
    return pts, 0.5 * length * wt
