"""Polytopic meshes of axis-aligned rectangles.

Meshes are built as bounded Voronoi diagrams: every cell is the intersection
of the rectangle with the half-planes closer to its own site than to each
other site.  Sites are processed in order of increasing distance so the loop
can stop once no remaining bisector can reach the current cell (a bisector
at site distance d cuts a polygon contained in the ball of radius R around
the site only when d < 2R).  Optional Lloyd smoothing moves each site to the
centroid of its clipped cell.

Cell polygons are stitched into shared topology by snapping vertices within
1e-12 of the domain diameter.  Construction failures caused by near-degenerate
site configurations (a facet claimed by more than two cells, a single-cell
facet that does not lie on the boundary) are detected by validation and the
generator retries with a tiny deterministic jitter before giving up.
"""

from dataclasses import dataclass, field

import numpy as np

from ._geometry import (
    clip_halfplane,
    inscribed_diameter,
    min_width_box,
    polygon_area,
    polygon_centroid,
    polygon_diameter,
    segment_lengths,
)


class MeshConstructionError(RuntimeError):
    """Raised when cell polygons cannot be stitched into a valid mesh."""


@dataclass(frozen=True)
class Rectangle:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError("degenerate domain: rectangle sides must be positive")

    @property
    def lo(self):
        return np.array([self.xmin, self.ymin])

    @property
    def hi(self):
        return np.array([self.xmax, self.ymax])

    @property
    def area(self):
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def diameter(self):
        return float(np.hypot(self.xmax - self.xmin, self.ymax - self.ymin))

    def corners(self):
        return np.array([
            [self.xmin, self.ymin],
            [self.xmax, self.ymin],
            [self.xmax, self.ymax],
            [self.xmin, self.ymax],
        ])

    def contains(self, points, tol=0.0):
        points = np.atleast_2d(points)
        return (
            (points[:, 0] >= self.xmin - tol)
            & (points[:, 0] <= self.xmax + tol)
            & (points[:, 1] >= self.ymin - tol)
            & (points[:, 1] <= self.ymax + tol)
        )


class PolyMesh:
    """Conforming polygonal mesh with facet adjacency.

    Facet arrays use a minus/plus convention: the facet normal points out of
    the minus cell; the plus entry is -1 on the boundary.  Cell vertex loops
    are counter-clockwise.
    """

    def __init__(self, domain, vertices, cells, validate=True):
        self.domain = domain
        self.vertices = np.asarray(vertices, dtype=float)
        self.cells = [np.asarray(c, dtype=np.int64) for c in cells]
        self._build_geometry()
        self._build_facets()
        if validate:
            self.validate()

    # -- construction ---------------------------------------------------

    @classmethod
    def from_polygons(cls, domain, polygons, validate=True):
        """Stitch per-cell coordinate loops into shared vertices and facets."""
        snap = 1e-12 * domain.diameter
        lookup = {}
        verts = []

        def vertex_id(p):
            kx, ky = int(np.floor(p[0] / snap)), int(np.floor(p[1] / snap))
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    hit = lookup.get((kx + dx, ky + dy))
                    if hit is not None and np.hypot(*(verts[hit] - p)) <= snap:
                        return hit
            verts.append(np.asarray(p, dtype=float))
            lookup[(kx, ky)] = len(verts) - 1
            return len(verts) - 1

        cells = []
        for poly in polygons:
            ids = [vertex_id(p) for p in poly]
            loop = [ids[i] for i in range(len(ids)) if ids[i] != ids[i - 1]]
            if len(loop) < 3:
                raise MeshConstructionError("cell collapsed under vertex snapping")
            cells.append(np.asarray(loop, dtype=np.int64))
        return cls(domain, np.asarray(verts), cells, validate=validate)

    def _build_geometry(self):
        self.cell_areas = np.empty(len(self.cells))
        self.cell_centroids = np.empty((len(self.cells), 2))
        self.cell_diameters = np.empty(len(self.cells))
        for i, loop in enumerate(self.cells):
            coords = self.vertices[loop]
            self.cell_areas[i] = polygon_area(coords)
            if self.cell_areas[i] <= 0.0:
                raise MeshConstructionError(f"cell {i} is not counter-clockwise")
            self.cell_centroids[i] = polygon_centroid(coords)
            self.cell_diameters[i] = polygon_diameter(coords)

    def _build_facets(self):
        seen = {}
        order = []
        for c, loop in enumerate(self.cells):
            for k in range(len(loop)):
                a, b = int(loop[k]), int(loop[(k + 1) % len(loop)])
                key = (a, b) if a < b else (b, a)
                if key not in seen:
                    seen[key] = []
                    order.append(key)
                seen[key].append((c, a, b))

        nf = len(order)
        self.facet_vertices = np.empty((nf, 2), dtype=np.int64)
        self.facet_cells = np.full((nf, 2), -1, dtype=np.int64)
        self.facet_normals = np.empty((nf, 2))
        self.facet_lengths = np.empty(nf)
        for f, key in enumerate(order):
            owners = seen[key]
            if len(owners) > 2:
                raise MeshConstructionError(
                    f"facet {key} is claimed by {len(owners)} cells"
                )
            c0, a, b = owners[0]
            self.facet_vertices[f] = (a, b)
            self.facet_cells[f, 0] = c0
            if len(owners) == 2:
                c1, a1, b1 = owners[1]
                if (a1, b1) != (b, a):
                    raise MeshConstructionError(
                        f"facet {key} traversed in the same direction twice"
                    )
                self.facet_cells[f, 1] = c1
            d = self.vertices[b] - self.vertices[a]
            ln = np.hypot(d[0], d[1])
            if ln == 0.0:
                raise MeshConstructionError(f"facet {key} has zero length")
            # right-hand normal of the minus cell's traversal direction
            self.facet_normals[f] = (d[1] / ln, -d[0] / ln)
            self.facet_lengths[f] = ln

        self.cell_facets = [[] for _ in self.cells]
        for f in range(nf):
            self.cell_facets[self.facet_cells[f, 0]].append(f)
            if self.facet_cells[f, 1] >= 0:
                self.cell_facets[self.facet_cells[f, 1]].append(f)
        self.cell_facets = [np.asarray(v, dtype=np.int64) for v in self.cell_facets]

    # -- queries ---------------------------------------------------------

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_facets(self):
        return len(self.facet_lengths)

    @property
    def h(self):
        return float(self.cell_diameters.max())

    def cell_coords(self, i):
        return self.vertices[self.cells[i]]

    def is_boundary_facet(self, f):
        return self.facet_cells[f, 1] < 0

    def validate(self):
        """Check conformity invariants; raises MeshConstructionError."""
        dom = self.domain
        tol = 1e-9 * dom.diameter
        if not np.all(self.contains_all(tol)):
            raise MeshConstructionError("vertex outside the domain")
        total = self.cell_areas.sum()
        if abs(total - dom.area) > 1e-10 * dom.area:
            raise MeshConstructionError(
                f"cell areas sum to {total!r}, domain has {dom.area!r}"
            )
        for f in range(self.n_facets):
            if self.facet_cells[f, 1] >= 0:
                gap = (
                    self.cell_centroids[self.facet_cells[f, 1]]
                    - self.cell_centroids[self.facet_cells[f, 0]]
                )
                if gap @ self.facet_normals[f] <= 0.0:
                    raise MeshConstructionError(
                        f"facet {f} normal points toward its minus cell"
                    )
            else:
                a, b = self.facet_vertices[f]
                if not self._on_one_side(self.vertices[a], self.vertices[b], tol):
                    raise MeshConstructionError(
                        f"single-cell facet {f} does not lie on the boundary"
                    )
        for i, fs in enumerate(self.cell_facets):
            if len(fs) < 3:
                raise MeshConstructionError(f"cell {i} has fewer than 3 facets")

    def contains_all(self, tol):
        return self.domain.contains(self.vertices, tol)

    def _on_one_side(self, p, q, tol):
        dom = self.domain
        for val, coord in ((dom.xmin, 0), (dom.xmax, 0), (dom.ymin, 1), (dom.ymax, 1)):
            if abs(p[coord] - val) <= tol and abs(q[coord] - val) <= tol:
                return True
        return False

    # -- persistence -----------------------------------------------------

    def save(self, path):
        """Write the mesh in the plain-text `polymesh 2d` format.

        Coordinates use 17 significant digits, which round-trips doubles
        exactly.  Facet records are included for self-description; on load
        they are checked against the topology rebuilt from the cell loops.
        """
        dom = self.domain
        with open(path, "w") as fh:
            fh.write("polymesh 2d\n")
            fh.write(
                f"domain {dom.xmin:.17g} {dom.ymin:.17g} "
                f"{dom.xmax:.17g} {dom.ymax:.17g}\n"
            )
            fh.write(f"vertices {self.n_vertices}\n")
            for x, y in self.vertices:
                fh.write(f"{x:.17g} {y:.17g}\n")
            fh.write(f"cells {self.n_cells}\n")
            for loop in self.cells:
                fh.write(" ".join([str(len(loop))] + [str(v) for v in loop]) + "\n")
            fh.write(f"facets {self.n_facets}\n")
            for f in range(self.n_facets):
                a, b = self.facet_vertices[f]
                cm, cp = self.facet_cells[f]
                nx, ny = self.facet_normals[f]
                fh.write(
                    f"{a} {b} {cm} {cp} {nx:.17g} {ny:.17g} "
                    f"{self.facet_lengths[f]:.17g}\n"
                )

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines or lines[0] != "polymesh 2d":
            raise ValueError("not a polymesh 2d file")
        tok = lines[1].split()
        if tok[0] != "domain" or len(tok) != 5:
            raise ValueError("malformed domain line")
        dom = Rectangle(*[float(t) for t in tok[1:]])
        tok = lines[2].split()
        if tok[0] != "vertices":
            raise ValueError("malformed vertex count")
        nv = int(tok[1])
        verts = np.array(
            [[float(t) for t in lines[3 + i].split()] for i in range(nv)]
        )
        tok = lines[3 + nv].split()
        if tok[0] != "cells":
            raise ValueError("malformed cell count")
        nc = int(tok[1])
        cells = []
        for i in range(nc):
            vals = [int(t) for t in lines[4 + nv + i].split()]
            if vals[0] != len(vals) - 1:
                raise ValueError(f"cell {i} length mismatch")
            cells.append(np.asarray(vals[1:], dtype=np.int64))
        mesh = cls(dom, verts, cells)
        base = 4 + nv + nc
        if base < len(lines):
            tok = lines[base].split()
            if tok[0] != "facets":
                raise ValueError("malformed facet count")
            if int(tok[1]) != mesh.n_facets:
                raise ValueError("facet records disagree with cell topology")
            for f in range(mesh.n_facets):
                rec = lines[base + 1 + f].split()
                stored = tuple(int(t) for t in rec[:4])
                built = (
                    int(mesh.facet_vertices[f, 0]),
                    int(mesh.facet_vertices[f, 1]),
                    int(mesh.facet_cells[f, 0]),
                    int(mesh.facet_cells[f, 1]),
                )
                if stored != built:
                    raise ValueError(f"facet record {f} disagrees with topology")
        return mesh


def _bounded_cells(sites, domain):
    """Clipped Voronoi cell polygon for every site."""
    sites = np.asarray(sites, dtype=float)
    if sites.ndim != 2 or sites.shape[1] != 2 or len(sites) == 0:
        raise ValueError("sites must be a nonempty (n, 2) array")
    if not np.all(domain.contains(sites)):
        raise ValueError("all sites must lie inside the domain")
    rect = domain.corners()
    cells = []
    for i in range(len(sites)):
        diff = sites - sites[i]
        dist2 = np.einsum("ij,ij->i", diff, diff)
        nearest = np.argsort(dist2, kind="stable")
        if len(sites) > 1 and dist2[nearest[1]] == 0.0:
            raise ValueError(f"duplicate site at index {i}")
        poly = rect
        r2 = ((poly - sites[i]) ** 2).sum(axis=1).max()
        for j in nearest[1:]:
            if dist2[j] >= 4.0 * r2:
                break
            mid = 0.5 * (sites[i] + sites[j])
            poly = clip_halfplane(poly, diff[j], diff[j] @ mid)
            if len(poly) == 0:
                raise MeshConstructionError(f"cell of site {i} clipped away")
            r2 = ((poly - sites[i]) ** 2).sum(axis=1).max()
        cells.append(poly)
    return cells


def lloyd_step(sites, domain):
    """One Lloyd relaxation: move every site to its clipped cell's centroid."""
    return np.array([polygon_centroid(p) for p in _bounded_cells(sites, domain)])


def generate_voronoi(domain, n_sites, seed=0, lloyd_iterations=10):
    """Voronoi mesh of `n_sites` random sites, Lloyd-smoothed, clipped.

    Deterministic in (seed, n_sites, lloyd_iterations).  Near-degenerate
    site sets that break facet matching are retried a few times with a
    seed-derived jitter.
    """
    if n_sites < 1:
        raise ValueError("need at least one site")
    rng = np.random.default_rng(seed)
    base = domain.lo + rng.random((n_sites, 2)) * (domain.hi - domain.lo)
    last_error = None
    for attempt in range(4):
        sites = base
        if attempt > 0:
            jitter = np.random.default_rng([seed, attempt]).standard_normal(base.shape)
            sites = base + 1e-8 * domain.diameter * jitter
            sites = np.clip(sites, domain.lo + 1e-9, domain.hi - 1e-9)
        try:
            for _ in range(lloyd_iterations):
                sites = lloyd_step(sites, domain)
            return PolyMesh.from_polygons(domain, _bounded_cells(sites, domain))
        except MeshConstructionError as err:
            last_error = err
    raise MeshConstructionError(
        f"mesh generation failed after retries: {last_error}"
    )


@dataclass
class MeshQuality:
    """Per-cell shape diagnostics plus aggregates."""

    anisotropy: np.ndarray
    isoperimetric: np.ndarray
    facets_per_cell: np.ndarray
    inscribed_diameters: np.ndarray | None = None
    summary: dict = field(default_factory=dict)


def mesh_quality(mesh, inscribed=True):
    """Shape metrics: bounding-box anisotropy, isoperimetric quotient,
    facet counts, and (optionally, it is the slow one) inscribed-ball
    diameters."""
    n = mesh.n_cells
    aniso = np.empty(n)
    isop = np.empty(n)
    for i in range(n):
        coords = mesh.cell_coords(i)
        long_side, short_side = min_width_box(coords)
        aniso[i] = long_side / short_side
        perim = segment_lengths(coords).sum()
        isop[i] = 4.0 * np.pi * mesh.cell_areas[i] / perim**2
    counts = np.array([len(fs) for fs in mesh.cell_facets])
    inscribed_d = None
    if inscribed:
        inscribed_d = np.array(
            [inscribed_diameter(mesh.cell_coords(i), rel_tol=1e-9) for i in range(n)]
        )
    summary = {
        "n_cells": n,
        "h": mesh.h,
        "max_anisotropy": float(aniso.max()),
        "min_isoperimetric": float(isop.min()),
        "facets_min": int(counts.min()),
        "facets_mean": float(counts.mean()),
        "facets_max": int(counts.max()),
    }
    if inscribed_d is not None:
        summary["min_inscribed_diameter"] = float(inscribed_d.min())
    return MeshQuality(aniso, isop, counts, inscribed_d, summary)
