"""Hyperbolic Voronoi/Delaunay complexes of colored Poisson samples.

The hyperbolic Delaunay complex equals the sub-complex of the Euclidean
Delaunay triangulation of the Poincare images whose circumdisks stay
inside the open unit disk, so construction runs Euclidean Delaunay
(Qhull) and filters faces.  Voronoi vertices are the hyperbolic
circumcenters of the kept faces.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay as _EuclideanDelaunay

from .graphs import csr_adjacency
from .hypgeo import GeodesicPolygon, HPoint, circumcenters_arrays
from .pointprocess import ColoredPointSet


class DegenerateInput(ValueError):
    """Raised for duplicate nuclei or fewer than three points."""


class NotInterior(ValueError):
    """Raised when asking for the cell polygon of a boundary-masked nucleus."""


@dataclass(frozen=True)
class Window:
    """Finite-volume truncation: sample in R_sample, measure in R_window."""

    R_sample: float
    R_window: float

    def __post_init__(self):
        if not 0 < self.R_window < self.R_sample:
            raise ValueError("need 0 < R_window < R_sample")

    @property
    def margin(self) -> float:
        return self.R_sample - self.R_window

    @staticmethod
    def with_margin(R_window: float, margin: float = 2.0) -> "Window":
        return Window(R_window + margin, R_window)


@dataclass
class VoronoiComplex:
    """Delaunay adjacency plus Voronoi vertices of a colored point set."""

    points: ColoredPointSet
    delaunay_edges: np.ndarray    # (k, 2) nucleus index pairs, u < v
    faces: np.ndarray             # (m, 3) kept triangles (nucleus indices)
    vor_rho: np.ndarray           # (m,) Voronoi vertex polar coordinates
    vor_theta: np.ndarray
    interior_mask: np.ndarray     # per nucleus
    nucleus_faces: list           # per nucleus: indices of incident kept faces

    _csr: tuple = field(default=None, repr=False)

    @property
    def n_nuclei(self) -> int:
        return len(self.points)

    @property
    def n_voronoi_vertices(self) -> int:
        return len(self.vor_rho)

    def csr(self):
        if self._csr is None:
            self._csr = csr_adjacency(self.n_nuclei, self.delaunay_edges)
        return self._csr

    def voronoi_vertex(self, j: int) -> HPoint:
        return HPoint(float(self.vor_rho[j]), float(self.vor_theta[j]))

    def serialize(self) -> str:
        buf = io.StringIO()
        buf.write(
            "#hvc v1 n=%d edges=%d vverts=%d\n"
            % (self.n_nuclei, len(self.delaunay_edges), self.n_voronoi_vertices)
        )
        buf.write("NUCLEI\n")
        buf.write(self.points.serialize())
        buf.write("DELAUNAY_EDGES\n")
        for u, v in self.delaunay_edges:
            buf.write(f"{u} {v}\n")
        buf.write("VORONOI_VERTICES\n")
        for j in range(self.n_voronoi_vertices):
            a, b, c = self.faces[j]
            buf.write(
                "%.17g %.17g %d %d %d\n"
                % (self.vor_rho[j], self.vor_theta[j], a, b, c)
            )
        return buf.getvalue()


def delaunay(points: ColoredPointSet, window: Window | None = None) -> VoronoiComplex:
    """Build the hyperbolic Delaunay/Voronoi complex of a colored sample.

    A nucleus is interior when all its incident Voronoi vertices exist
    (no incident face was filtered, nucleus off the Euclidean hull) and
    lie within R_sample - 1 of the origin.
    """
    n = len(points)
    if n < 3:
        raise DegenerateInput("need at least 3 nuclei")
    xy = points.disk_xy
    # exact duplicates break the empty-disk property
    order = np.lexsort((xy[:, 1], xy[:, 0]))
    s = xy[order]
    if np.any(np.all(s[1:] == s[:-1], axis=1)):
        raise DegenerateInput("duplicate nuclei")
    R_sample = points.R if window is None else window.R_sample

    tri = _EuclideanDelaunay(xy)  # Qhull; cocircular ties broken by joggle-free merge
    simplices = tri.simplices

    a, b, c = xy[simplices[:, 0]], xy[simplices[:, 1]], xy[simplices[:, 2]]
    cx, cy, r2 = _euclidean_circumcircles(a, b, c)
    keep = np.hypot(cx, cy) + np.sqrt(r2) < 1.0

    faces = simplices[keep]
    lifts = _hyperboloid(points.rho, points.theta)
    A, B, C = lifts[faces[:, 0]], lifts[faces[:, 1]], lifts[faces[:, 2]]
    vr, vt, finite = circumcenters_arrays(
        A[:, 0], A[:, 1], A[:, 2],
        B[:, 0], B[:, 1], B[:, 2],
        C[:, 0], C[:, 1], C[:, 2],
    )
    # containment of the Euclidean circumdisk implies a finite center
    faces = faces[finite]
    vr, vt = vr[finite], vt[finite]

    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [0, 2]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)

    nucleus_faces = [[] for _ in range(n)]
    for j, f in enumerate(faces):
        for v in f:
            nucleus_faces[int(v)].append(j)

    # star completeness: every Euclidean incident simplex must survive
    star_total = np.zeros(n, dtype=np.int64)
    np.add.at(star_total, simplices.ravel(), 1)
    star_kept = np.zeros(n, dtype=np.int64)
    np.add.at(star_kept, faces.ravel(), 1)
    on_hull = np.zeros(n, dtype=bool)
    on_hull[tri.convex_hull.ravel()] = True

    interior = (~on_hull) & (star_kept == star_total) & (star_total > 0)
    vmax = np.zeros(n)
    for i in range(n):
        if interior[i] and nucleus_faces[i]:
            vmax[i] = vr[nucleus_faces[i]].max()
    interior &= vmax <= R_sample - 1.0

    return VoronoiComplex(
        points=points,
        delaunay_edges=edges.astype(np.int64),
        faces=faces.astype(np.int64),
        vor_rho=vr,
        vor_theta=vt,
        interior_mask=interior,
        nucleus_faces=nucleus_faces,
    )


def _euclidean_circumcircles(a, b, c):
    ax, ay = a[:, 0], a[:, 1]
    bx, by = b[:, 0] - ax, b[:, 1] - ay
    cx, cy = c[:, 0] - ax, c[:, 1] - ay
    d = 2.0 * (bx * cy - by * cx)
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    return ax + ux, ay + uy, ux * ux + uy * uy


def _hyperboloid(rho, theta):
    s = np.sinh(rho)
    return np.column_stack([s * np.cos(theta), s * np.sin(theta), np.cosh(rho)])


def cell_polygon(V: VoronoiComplex, i: int) -> GeodesicPolygon:
    """Voronoi cell of an interior nucleus, vertices ordered ccw."""
    if not V.interior_mask[i]:
        raise NotInterior(f"nucleus {i} is boundary-masked")
    js = V.nucleus_faces[i]
    tanh_half = np.tanh(V.vor_rho[js] / 2.0)
    zv = tanh_half * np.exp(1j * V.vor_theta[js])
    nx, ny = V.points.disk_xy[i]
    zn = complex(nx, ny)
    # cell is hyperbolically convex, so geodesic directions at the
    # nucleus (Mobius-translated to the origin) order its vertices ccw
    ang = np.angle((zv - zn) / (1.0 - np.conj(zn) * zv))
    order = np.argsort(ang)
    verts = tuple(
        HPoint(float(V.vor_rho[js[k]]), float(V.vor_theta[js[k]])) for k in order
    )
    return GeodesicPolygon(verts)


def adjacency_graph(V: VoronoiComplex, color_filter: str = "any"):
    """Delaunay adjacency restricted to a color class, as a networkx graph.

    Connectivity of this graph equals connectivity of the union of the
    corresponding closed tiles (cells share a boundary arc iff their
    nuclei are Delaunay neighbors).
    """
    import networkx as nx

    cf = color_filter.lower()
    if cf not in ("any", "white", "black"):
        raise ValueError("color_filter must be any, white or black")
    if cf == "any":
        mask = np.ones(V.n_nuclei, dtype=bool)
    elif cf == "white":
        mask = V.points.white
    else:
        mask = ~V.points.white
    g = nx.Graph()
    g.add_nodes_from(np.flatnonzero(mask).tolist())
    e = V.delaunay_edges
    keep = mask[e[:, 0]] & mask[e[:, 1]]
    g.add_edges_from(e[keep].tolist())
    return g


def core_cell_mask(V: VoronoiComplex, r_core: float) -> np.ndarray:
    """Cells meeting the central ball of radius r_core (vertex/nucleus proxy).

    A cell counts as a core cell when its nucleus or one of its Voronoi
    vertices lies within r_core; the cell containing the origin (nearest
    nucleus) is always included.
    """
    mask = V.points.rho <= r_core
    for j in range(V.n_voronoi_vertices):
        if V.vor_rho[j] <= r_core:
            for v in V.faces[j]:
                mask[int(v)] = True
    mask[int(np.argmin(V.points.rho))] = True
    return mask


def shell_cell_mask(V: VoronoiComplex, R_window: float) -> np.ndarray:
    """Cells touching the outer shell {rho > R_window} or boundary-masked."""
    return (V.points.rho > R_window) | ~V.interior_mask
