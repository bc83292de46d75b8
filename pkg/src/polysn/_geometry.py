"""Small planar-polygon primitives shared by the mesh and assembly code.

Polygons are (n, 2) float arrays with vertices in counter-clockwise order.
Everything here assumes convexity where stated; Voronoi cells clipped to a
rectangle are always convex.
"""

import numpy as np


def polygon_area(verts):
    """Signed shoelace area; positive for counter-clockwise order."""
    x = verts[:, 0]
    y = verts[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def polygon_centroid(verts):
    """Area centroid of a simple polygon."""
    x = verts[:, 0]
    y = verts[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * np.sum(cross)
    if a == 0.0:
        raise ValueError("degenerate polygon has no centroid")
    cx = np.sum((x + xn) * cross) / (6.0 * a)
    cy = np.sum((y + yn) * cross) / (6.0 * a)
    return np.array([cx, cy])


def polygon_diameter(verts):
    """Largest vertex-to-vertex distance (polygon diameter for convex cells)."""
    d = verts[:, None, :] - verts[None, :, :]
    return float(np.sqrt((d * d).sum(axis=2).max()))


def clip_halfplane(verts, normal, offset):
    """Clip a convex polygon against {x : normal.x <= offset}.

    Sutherland-Hodgman step for one half-plane.  Returns a new vertex array,
    possibly empty.  Orientation is preserved.
    """
    if len(verts) == 0:
        return verts
    side = verts @ normal - offset
    out = []
    n = len(verts)
    for i in range(n):
        j = (i + 1) % n
        si, sj = side[i], side[j]
        if si <= 0.0:
            out.append(verts[i])
        if (si < 0.0) != (sj < 0.0) and si != sj:
            t = si / (si - sj)
            out.append(verts[i] + t * (verts[j] - verts[i]))
    if len(out) < 3:
        return np.empty((0, 2))
    return np.asarray(out)


def min_width_box(verts):
    """Extents (larger, smaller) of the minimal-width oriented bounding box.

    Convex input assumed.  Candidate boxes are aligned with polygon edges;
    the one with the smallest short side wins.  A square gives (s, s), a
    2x1 rectangle gives (2, 1).
    """
    n = len(verts)
    best = None
    for i in range(n):
        e = verts[(i + 1) % n] - verts[i]
        ln = np.hypot(e[0], e[1])
        if ln == 0.0:
            continue
        u = e / ln
        v = np.array([-u[1], u[0]])
        pu = verts @ u
        pv = verts @ v
        e1 = pu.max() - pu.min()
        e2 = pv.max() - pv.min()
        short = min(e1, e2)
        if best is None or short < best[0]:
            best = (short, max(e1, e2))
    if best is None:
        raise ValueError("degenerate polygon")
    return best[1], best[0]


def inscribed_diameter(verts, rel_tol=1e-12):
    """Diameter of the largest inscribed disc of a convex polygon.

    Bisection on the radius: the polygon offset inward by r is nonempty
    exactly when r does not exceed the inradius.
    """
    n = len(verts)
    normals = []
    offsets = []
    for i in range(n):
        a = verts[i]
        b = verts[(i + 1) % n]
        e = b - a
        ln = np.hypot(e[0], e[1])
        if ln == 0.0:
            continue
        # outward normal for CCW orientation
        nf = np.array([e[1], -e[0]]) / ln
        normals.append(nf)
        offsets.append(nf @ a)
    normals = np.asarray(normals)
    offsets = np.asarray(offsets)

    def shrunk_nonempty(r):
        poly = verts
        for nf, off in zip(normals, offsets):
            poly = clip_halfplane(poly, nf, off - r)
            if len(poly) == 0:
                return False
        return True

    hi = polygon_diameter(verts) / 2.0
    lo = 0.0
    tol = rel_tol * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if shrunk_nonempty(mid):
            lo = mid
        else:
            hi = mid
    return 2.0 * lo


def segment_lengths(verts):
    """Edge lengths of the closed polygon loop."""
    d = np.roll(verts, -1, axis=0) - verts
    return np.hypot(d[:, 0], d[:, 1])
