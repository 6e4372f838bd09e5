"""Bernoulli percolation on tiling balls and Voronoi complexes.

Cluster structure is computed by union-find kernels (see _kernels).  The
workhorse estimator is the per-replica reach threshold: with one uniform
mark per edge (or site), the level p* at which the core first connects
to the shell is found by a single sorted union-find sweep, which yields
the whole reach curve theta_hat(p) = P[p* <= p] from one pass.  Critical
points are located where size-weighted reach curves of successive window
sizes cross: at criticality the center-to-shell reach probability decays
like 1/L (tree-like mean-field scaling), so L * theta_L(p) tends to 0
below, to a constant at, and to infinity above the critical level, and
successive sizes cross near it.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import (
    bond_reach_threshold,
    label_clusters_kernel,
    site_reach_threshold,
)
from .graphs import bfs_distances, csr_adjacency
from .hypvoronoi import Window, core_cell_mask, delaunay, shell_cell_mask
from .pointprocess import ColoredPointSet, replica_rng, sample_poisson_ball
from .tilinggraph import DualBall, TilingBall, build_ball, dual_ball


class NoCrossing(RuntimeError):
    """Raised when reach curves of successive sizes never cross in the grid."""


class InsufficientData(RuntimeError):
    """Raised when too few positive connectivity frequencies remain to fit."""


# ---------------------------------------------------------------------------
# configurations


@dataclass
class BondConfig:
    """One realization of Bernoulli bond percolation on a (dual) tiling ball."""

    host: object               # TilingBall or DualBall
    open_edges: np.ndarray     # bool per edge
    p: float
    seed: int

    def __post_init__(self):
        if len(self.open_edges) != len(self.host.edges):
            raise ValueError("open_edges length must match host edge count")


@dataclass
class SiteConfig:
    """One realization of Bernoulli site percolation."""

    host: object
    open_sites: np.ndarray     # bool per vertex
    p: float
    seed: int

    def __post_init__(self):
        if len(self.open_sites) != self.host.n_vertices:
            raise ValueError("open_sites length must match host vertex count")


def bernoulli_bond(host, p: float, seed: int, experiment: str = "bond",
                   replica: int = 0) -> BondConfig:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = replica_rng(seed, experiment, replica)
    return BondConfig(host, rng.random(len(host.edges)) < p, p, seed)


def bernoulli_site(host, p: float, seed: int, experiment: str = "site",
                   replica: int = 0) -> SiteConfig:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = replica_rng(seed, experiment, replica)
    return SiteConfig(host, rng.random(host.n_vertices) < p, p, seed)


def dual_config(c: BondConfig, dual: DualBall | None = None) -> BondConfig:
    """Dual configuration: the dual edge is open iff its primal edge is closed."""
    if isinstance(c.host, DualBall):
        # back to the primal: primal edge open iff its dual (when present)
        # is closed; edges with no dual keep their mark unset (closed)
        primal = c.host.primal
        open_primal = np.zeros(len(primal.edges), dtype=bool)
        open_primal[c.host.primal_edge] = ~c.open_edges
        return BondConfig(primal, open_primal, 1.0 - c.p, c.seed)
    d = dual if dual is not None else dual_ball(c.host)
    return BondConfig(d, ~c.open_edges[d.primal_edge], 1.0 - c.p, c.seed)


# ---------------------------------------------------------------------------
# cluster labeling


@dataclass
class ClusterLabeling:
    """Union-find labels, with optional core/shell window bookkeeping.

    labels[i] is the cluster id of site i (-1 for closed sites); ids are
    the minimal member index of the cluster.
    """

    labels: np.ndarray
    core: np.ndarray = None
    shell: np.ndarray = None

    @property
    def sizes(self) -> dict:
        live = self.labels[self.labels >= 0]
        ids, counts = np.unique(live, return_counts=True)
        return dict(zip(ids.tolist(), counts.tolist()))

    @property
    def boundary_reaching(self) -> set:
        if self.shell is None:
            raise ValueError("labeling carries no shell mask")
        ls = self.labels[self.shell]
        return set(np.unique(ls[ls >= 0]).tolist())

    @property
    def k_proxy(self) -> int:
        if self.core is None or self.shell is None:
            raise ValueError("labeling carries no window masks")
        lc = self.labels[self.core]
        lc = np.unique(lc[lc >= 0])
        ls = self.labels[self.shell]
        ls = np.unique(ls[ls >= 0])
        return int(len(np.intersect1d(lc, ls, assume_unique=True)))


def label_clusters(n: int, edges: np.ndarray, edge_open=None, site_open=None,
                   core=None, shell=None) -> ClusterLabeling:
    """Connected components of the open subgraph.

    edge_open defaults to all open (site percolation), site_open to all
    open (bond percolation); closed sites get label -1.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edge_open is None:
        edge_open = np.ones(len(edges), dtype=bool)
    if site_open is None:
        site_open = np.ones(n, dtype=bool)
    labels = label_clusters_kernel(
        n,
        np.ascontiguousarray(edges[:, 0]),
        np.ascontiguousarray(edges[:, 1]),
        np.asarray(edge_open, dtype=bool),
        np.asarray(site_open, dtype=bool),
    )
    return ClusterLabeling(labels, core=core, shell=shell)


# ---------------------------------------------------------------------------
# core/shell instances


@dataclass
class PercInstance:
    """A finite graph with distinguished core and shell site masks."""

    n: int
    edges: np.ndarray
    core: np.ndarray
    shell: np.ndarray

    _csr: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if (self.core & self.shell).any():
            raise ValueError("core and shell must be disjoint")
        if not self.core.any() or not self.shell.any():
            raise ValueError("core and shell must be nonempty")

    def csr(self):
        if self._csr is None:
            self._csr = csr_adjacency(self.n, self.edges)
        return self._csr


def tiling_instance(ball, core_radius: int | None = 2,
                    center: int = 0) -> PercInstance:
    """Core/shell instance on a TilingBall or DualBall.

    The shell is the set of combinatorially incomplete vertices (degree
    below the regular value).  core_radius=None scales the core with the
    ball: radius = eccentricity // 2 (used for crossing estimators).
    """
    dist = bfs_distances(ball.n_vertices, ball.edges, center)
    shell = ~ball.interior_vertex_mask
    if core_radius is None:
        core_radius = max(1, int(dist[dist >= 0].max()) // 2)
    core = (dist >= 0) & (dist <= core_radius) & ~shell
    return PercInstance(ball.n_vertices, ball.edges, core, shell)


def voronoi_instance(V, R_window: float, r_core: float = 0.0) -> PercInstance:
    """Core/shell instance on a Voronoi complex.

    r_core=0 keeps only the cell containing the origin.
    """
    shell = shell_cell_mask(V, R_window)
    core = core_cell_mask(V, r_core) & ~shell
    return PercInstance(V.n_nuclei, V.delaunay_edges, core, shell)


# ---------------------------------------------------------------------------
# reach thresholds and curves


def bond_thresholds(inst: PercInstance, replicas: int, master_seed: int,
                    experiment: str, mapper=map) -> np.ndarray:
    """Per-replica levels p* at which the core first reaches the shell.

    mapper lets callers substitute an order-preserving parallel map
    (replicas are independent, so any such mapper reproduces the serial
    result bit for bit).
    """
    eu = np.ascontiguousarray(inst.edges[:, 0])
    ev = np.ascontiguousarray(inst.edges[:, 1])

    def one(rep):
        rng = replica_rng(master_seed, experiment, rep)
        u = rng.random(len(eu))
        return bond_reach_threshold(
            inst.n, eu, ev, u, np.argsort(u), inst.core, inst.shell
        )

    return np.fromiter(mapper(one, range(replicas)), dtype=float, count=replicas)


def site_thresholds(inst: PercInstance, replicas: int, master_seed: int,
                    experiment: str, mapper=map) -> np.ndarray:
    indptr, indices, _ = inst.csr()

    def one(rep):
        rng = replica_rng(master_seed, experiment, rep)
        u = rng.random(inst.n)
        return site_reach_threshold(
            inst.n, indptr, indices, u, np.argsort(u), inst.core, inst.shell
        )

    return np.fromiter(mapper(one, range(replicas)), dtype=float, count=replicas)


def voronoi_threshold(lam: float, window: Window, master_seed: int,
                      experiment: str, replica: int,
                      r_core: float = 0.0) -> float:
    """One replica of the white-reach threshold for Voronoi percolation.

    The per-cell uniforms couple all p at once: a cell is white at level
    p iff its uniform is below p.
    """
    rng = replica_rng(master_seed, experiment, replica)
    rho, theta = sample_poisson_ball(lam, window.R_sample, rng)
    u = rng.random(len(rho))
    pts = ColoredPointSet(
        rho=rho, theta=theta, white=u < 0.5, lam=lam, p=0.5,
        R=window.R_sample, seed=master_seed,
    )
    V = delaunay(pts)
    shell = shell_cell_mask(V, window.R_window)
    core = core_cell_mask(V, r_core)
    # a core cell already touching the shell reaches as soon as it is white
    overlap = core & shell
    best = float(u[overlap].min()) if overlap.any() else 2.0
    core &= ~shell
    if core.any():
        inst = PercInstance(V.n_nuclei, V.delaunay_edges, core, shell)
        indptr, indices, _ = inst.csr()
        t = float(
            site_reach_threshold(
                inst.n, indptr, indices, u, np.argsort(u), core, shell
            )
        )
        best = min(best, t)
    return best


def voronoi_thresholds(lam: float, window: Window, replicas: int,
                       master_seed: int, experiment: str,
                       r_core: float = 0.0, mapper=map) -> np.ndarray:
    def one(rep):
        return voronoi_threshold(lam, window, master_seed, experiment, rep, r_core)

    return np.fromiter(mapper(one, range(replicas)), dtype=float, count=replicas)


def reach_curve(thresholds: np.ndarray, p_grid: np.ndarray) -> np.ndarray:
    """Empirical reach probability theta_hat(p) = fraction of p* <= p."""
    t = np.sort(np.asarray(thresholds))
    return np.searchsorted(t, np.asarray(p_grid), side="right") / len(t)


def wilson_interval(k: int, n: int, z: float = 1.96):
    """Wilson score interval for a binomial frequency."""
    if n == 0:
        return 0.0, 0.0, 1.0
    ph = k / n
    denom = 1.0 + z * z / n
    center = (ph + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n))
    return ph, max(0.0, center - half), min(1.0, center + half)


def reach_probability(thresholds: np.ndarray, p: float):
    """Reach frequency at level p with a Wilson confidence interval."""
    n = len(thresholds)
    k = int(np.count_nonzero(np.asarray(thresholds) <= p))
    return wilson_interval(k, n)


# ---------------------------------------------------------------------------
# critical point estimation


@dataclass
class PcEstimate:
    value: float
    ci_lo: float
    ci_hi: float
    crossings: tuple
    sizes: tuple
    p_grid: np.ndarray
    curves: tuple              # theta_hat arrays, one per size


def _crossing(curve_small, curve_large, p_grid):
    """First upward zero of curve_large - curve_small after its minimum.

    With size-weighted curves the difference is negative in the
    subcritical stretch and positive past the critical level.
    """
    d = np.asarray(curve_large) - np.asarray(curve_small)
    i0 = int(np.argmin(d))
    if d[i0] >= 0:
        return None
    for i in range(i0 + 1, len(d)):
        if d[i] >= 0:
            d0, d1 = d[i - 1], d[i]
            if d1 == d0:
                return float(p_grid[i])
            t = -d0 / (d1 - d0)
            return float(p_grid[i - 1] + t * (p_grid[i] - p_grid[i - 1]))
    return None


def estimate_pc(thresholds_by_size, p_grid, n_bootstrap: int = 200,
                bootstrap_seed: int = 0) -> PcEstimate:
    """Critical level from crossings of size-weighted reach curves.

    thresholds_by_size: list of (size, thresholds array), ordered by
    increasing window size; needs at least 3 sizes.  Curves are weighted
    by their size before intersecting (see module docstring).  The
    estimate is the median pairwise crossing; the CI is a bootstrap
    percentile interval over replica resampling.
    """
    if len(thresholds_by_size) < 3:
        raise ValueError("need a ladder of at least 3 window sizes")
    p_grid = np.asarray(p_grid, dtype=float)
    sizes = tuple(float(s) for s, _ in thresholds_by_size)
    samples = [np.asarray(t, dtype=float) for _, t in thresholds_by_size]
    curves = tuple(reach_curve(t, p_grid) for t in samples)

    def crossings_of(curve_list):
        out = []
        scaled = [s * c for s, c in zip(sizes, curve_list)]
        for small, large in zip(scaled, scaled[1:]):
            c = _crossing(small, large, p_grid)
            if c is None:
                return None
            out.append(c)
        return out

    crossings = crossings_of(list(curves))
    if crossings is None:
        raise NoCrossing(
            "reach curves do not cross within the p-grid "
            f"[{p_grid[0]:g}, {p_grid[-1]:g}]; widen the grid or the ladder"
        )
    value = float(np.median(crossings))

    rng = np.random.default_rng(bootstrap_seed)
    boots = []
    for _ in range(n_bootstrap):
        resampled = [t[rng.integers(0, len(t), len(t))] for t in samples]
        cs = crossings_of([reach_curve(t, p_grid) for t in resampled])
        if cs is not None:
            boots.append(np.median(cs))
    if len(boots) < n_bootstrap // 2:
        raise NoCrossing("crossing unstable under bootstrap resampling")
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return PcEstimate(
        value=value,
        ci_lo=float(min(lo, value)),
        ci_hi=float(max(hi, value)),
        crossings=tuple(crossings),
        sizes=sizes,
        p_grid=p_grid,
        curves=curves,
    )


def pu_from_dual_pc(pc: PcEstimate) -> PcEstimate:
    """Uniqueness level via planar duality: p_u = 1 - p_c(dual)."""
    return PcEstimate(
        value=1.0 - pc.value,
        ci_lo=1.0 - pc.ci_hi,
        ci_hi=1.0 - pc.ci_lo,
        crossings=tuple(1.0 - c for c in pc.crossings),
        sizes=pc.sizes,
        p_grid=pc.p_grid,
        curves=pc.curves,
    )


def tiling_pc(p_gon: int, q_deg: int, ladder, p_grid, replicas: int,
              master_seed: int, mode: str = "bond",
              use_dual: bool = False, mapper=map) -> PcEstimate:
    """Crossing estimate of p_c for bond/site percolation on a {p,q} ball."""
    if mode not in ("bond", "site"):
        raise ValueError("mode must be bond or site")
    pairs = []
    for L in ladder:
        ball = build_ball(p_gon, q_deg, L)
        host = dual_ball(ball) if use_dual else ball
        inst = tiling_instance(host, core_radius=0)
        tag = f"pc-{p_gon}-{q_deg}-L{L}-{mode}" + ("-dual" if use_dual else "")
        if mode == "bond":
            t = bond_thresholds(inst, replicas, master_seed, tag, mapper=mapper)
        else:
            t = site_thresholds(inst, replicas, master_seed, tag, mapper=mapper)
        pairs.append((L, t))
    return estimate_pc(pairs, p_grid, bootstrap_seed=master_seed)


def tiling_pu(p_gon: int, q_deg: int, ladder, p_grid, replicas: int,
              master_seed: int, mapper=map) -> PcEstimate:
    """p_u of the {p,q} ball from bond p_c of its dual."""
    return pu_from_dual_pc(
        tiling_pc(p_gon, q_deg, ladder, p_grid, replicas, master_seed,
                  mode="bond", use_dual=True, mapper=mapper)
    )


def voronoi_pc(lam: float, window_ladder, p_grid, replicas: int,
               master_seed: int, mapper=map) -> PcEstimate:
    """Crossing estimate of p_c(lambda) for Voronoi color percolation."""
    pairs = []
    for w in window_ladder:
        window = w if isinstance(w, Window) else Window.with_margin(float(w))
        tag = f"vorpc-lam{lam:g}-Rw{window.R_window:g}"
        t = voronoi_thresholds(lam, window, replicas, master_seed, tag,
                               mapper=mapper)
        pairs.append((window.R_window, t))
    return estimate_pc(pairs, p_grid, bootstrap_seed=master_seed)


def voronoi_pu(lam: float, window_ladder, p_grid, replicas: int,
               master_seed: int, mapper=map) -> PcEstimate:
    """p_u(lambda) = 1 - p_c(lambda) by white/black color symmetry."""
    return pu_from_dual_pc(
        voronoi_pc(lam, window_ladder, p_grid, replicas, master_seed,
                   mapper=mapper)
    )


# ---------------------------------------------------------------------------
# phase signatures


def phase_signature(c: BondConfig, dual: DualBall | None = None,
                    core_radius: int = 2):
    """(k, k_dagger): boundary-reaching clusters meeting the core, both layers.

    k counts distinct open primal clusters that touch both the core
    (combinatorial radius core_radius around the center) and the shell;
    k_dagger is the same count for the dual configuration.
    """
    ball = c.host
    if isinstance(ball, DualBall):
        raise ValueError("phase_signature expects a primal configuration")
    if dual is None:
        dual = dual_ball(ball)
    inst = tiling_instance(ball, core_radius)
    lab = label_clusters(inst.n, inst.edges, edge_open=c.open_edges,
                         core=inst.core, shell=inst.shell)
    dc = dual_config(c, dual)
    dinst = tiling_instance(dual, core_radius)
    dlab = label_clusters(dinst.n, dinst.edges, edge_open=dc.open_edges,
                          core=dinst.core, shell=dinst.shell)
    return lab.k_proxy, dlab.k_proxy


def voronoi_phase_signature(V, white: np.ndarray, R_window: float,
                            r_core: float = 2.0):
    """(k_white, k_black) for a colored Voronoi complex."""
    inst = voronoi_instance(V, R_window, r_core)
    white = np.asarray(white, dtype=bool)
    kw = label_clusters(inst.n, inst.edges, site_open=white,
                        core=inst.core, shell=inst.shell).k_proxy
    kb = label_clusters(inst.n, inst.edges, site_open=~white,
                        core=inst.core, shell=inst.shell).k_proxy
    return kw, kb


# ---------------------------------------------------------------------------
# sweeps


SWEEP_HEADER = (
    "model,p,lambda,pgon,qdeg,R,replicas,theta,theta_lo,theta_hi,"
    "kw,kb,unique_freq,seed"
)


@dataclass
class SweepRow:
    model: str
    p: float
    lam: float = float("nan")
    pgon: int = 0
    qdeg: int = 0
    R: float = 0.0
    replicas: int = 0
    theta: float = 0.0
    theta_lo: float = 0.0
    theta_hi: float = 0.0
    kw: float = 0.0
    kb: float = 0.0
    unique_freq: float = 0.0
    seed: int = 0
    # black/dual-side frequencies; carried for phase labeling, not in the CSV
    theta_b: float = 0.0
    unique_b: float = 0.0

    def to_line(self) -> str:
        return (
            f"{self.model},{self.p:.6f},{self.lam:g},{self.pgon},{self.qdeg},"
            f"{self.R:g},{self.replicas},{self.theta:.6f},{self.theta_lo:.6f},"
            f"{self.theta_hi:.6f},{self.kw:.6f},{self.kb:.6f},"
            f"{self.unique_freq:.6f},{self.seed}"
        )


@dataclass
class SweepResult:
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(SWEEP_HEADER + "\n")
        for row in self.rows:
            buf.write(row.to_line() + "\n")
        return buf.getvalue()


def _aggregate_rows(model, p_values, k_pairs_by_p, meta):
    """Turn per-replica (k, k_dual/black) pairs into SweepRows."""
    rows = []
    for p in p_values:
        pairs = k_pairs_by_p[p]
        n = len(pairs)
        kw = np.array([a for a, _ in pairs], dtype=float)
        kb = np.array([b for _, b in pairs], dtype=float)
        reach = int(np.count_nonzero(kw >= 1))
        theta, lo, hi = wilson_interval(reach, n)
        rows.append(
            SweepRow(
                model=model,
                p=float(p),
                theta=theta,
                theta_lo=lo,
                theta_hi=hi,
                kw=float(kw.mean()),
                kb=float(kb.mean()),
                unique_freq=float(np.count_nonzero(kw == 1) / n),
                theta_b=float(np.count_nonzero(kb >= 1) / n),
                unique_b=float(np.count_nonzero(kb == 1) / n),
                replicas=n,
                **meta,
            )
        )
    return rows


def tiling_signature_sweep(p_gon: int, q_deg: int, layers: int, p_values,
                           replicas: int, master_seed: int,
                           core_radius: int = 2, mapper=map) -> SweepResult:
    """Bond percolation sweep on one {p,q} ball with coupled uniforms per replica."""
    ball = build_ball(p_gon, q_deg, layers)
    dual = dual_ball(ball)
    inst = tiling_instance(ball, core_radius)
    dinst = tiling_instance(dual, core_radius)
    eu = np.ascontiguousarray(inst.edges[:, 0])
    ev = np.ascontiguousarray(inst.edges[:, 1])
    deu = np.ascontiguousarray(dinst.edges[:, 0])
    dev = np.ascontiguousarray(dinst.edges[:, 1])
    all_sites = np.ones(inst.n, dtype=bool)
    all_dsites = np.ones(dinst.n, dtype=bool)
    tag = f"sweep-{p_gon}-{q_deg}-L{layers}"

    def one(rep):
        rng = replica_rng(master_seed, tag, rep)
        u = rng.random(len(eu))
        u_dual = u[dual.primal_edge]
        out = []
        for p in p_values:
            open_e = u < p
            lab = ClusterLabeling(
                label_clusters_kernel(inst.n, eu, ev, open_e, all_sites),
                core=inst.core, shell=inst.shell,
            )
            dlab = ClusterLabeling(
                label_clusters_kernel(dinst.n, deu, dev, u_dual >= p, all_dsites),
                core=dinst.core, shell=dinst.shell,
            )
            out.append((lab.k_proxy, dlab.k_proxy))
        return out

    k_pairs = {p: [] for p in p_values}
    for rep_pairs in mapper(one, range(replicas)):
        for p, pair in zip(p_values, rep_pairs):
            k_pairs[p].append(pair)
    meta = dict(pgon=p_gon, qdeg=q_deg, R=float(layers), seed=master_seed)
    return SweepResult(_aggregate_rows("tiling-bond", p_values, k_pairs, meta))


def voronoi_signature_sweep(lam: float, p_values, window: Window,
                            replicas: int, master_seed: int,
                            r_core: float = 2.0, mapper=map) -> SweepResult:
    """Color percolation sweep over Voronoi replicas with coupled uniforms."""
    tag = f"vorsweep-lam{lam:g}-Rw{window.R_window:g}"

    def one(rep):
        rng = replica_rng(master_seed, tag, rep)
        rho, theta = sample_poisson_ball(lam, window.R_sample, rng)
        u = rng.random(len(rho))
        pts = ColoredPointSet(
            rho=rho, theta=theta, white=u < 0.5, lam=lam, p=0.5,
            R=window.R_sample, seed=master_seed,
        )
        V = delaunay(pts)
        inst = voronoi_instance(V, window.R_window, r_core)
        eu = np.ascontiguousarray(inst.edges[:, 0])
        ev = np.ascontiguousarray(inst.edges[:, 1])
        all_edges = np.ones(len(eu), dtype=bool)
        out = []
        for p in p_values:
            white = u < p
            kw = ClusterLabeling(
                label_clusters_kernel(inst.n, eu, ev, all_edges, white),
                core=inst.core, shell=inst.shell,
            ).k_proxy
            kb = ClusterLabeling(
                label_clusters_kernel(inst.n, eu, ev, all_edges, ~white),
                core=inst.core, shell=inst.shell,
            ).k_proxy
            out.append((kw, kb))
        return out

    k_pairs = {p: [] for p in p_values}
    for rep_pairs in mapper(one, range(replicas)):
        for p, pair in zip(p_values, rep_pairs):
            k_pairs[p].append(pair)
    meta = dict(lam=lam, R=window.R_window, seed=master_seed)
    return SweepResult(_aggregate_rows("voronoi", p_values, k_pairs, meta))


# ---------------------------------------------------------------------------
# connectivity decay


@dataclass
class DecayFit:
    p: float
    distances: np.ndarray
    tau: np.ndarray
    counts: np.ndarray
    trials: np.ndarray
    slope: float
    intercept: float
    a_hat: float
    r_squared: float


def connectivity_decay(ball: TilingBall, p: float, distances, replicas: int,
                       master_seed: int, targets_per_distance: int = 8,
                       center: int = 0, mapper=map) -> DecayFit:
    """Two-point connectivity tau_hat(d) and its exponential-decay fit.

    Edges are sampled lazily while exploring the open cluster of the
    center, so subcritical replicas cost only the cluster size.  For each
    d, up to targets_per_distance vertices at graph distance d serve as
    endpoints; the fit regresses log tau_hat on d over positive entries.
    """
    distances = np.asarray(sorted(set(int(d) for d in distances)))
    dist = bfs_distances(ball.n_vertices, ball.edges, center)
    targets = []
    for d in distances:
        cand = np.flatnonzero(dist == d)
        if len(cand) == 0:
            raise ValueError(f"no vertex at distance {d} from the center")
        targets.append(cand[:targets_per_distance])

    indptr, indices, edge_id = csr_adjacency(ball.n_vertices, ball.edges)
    tag = f"decay-{ball.p_gon}-{ball.q_deg}-p{p:g}"

    def one(rep):
        rng = replica_rng(master_seed, tag, rep)
        edge_state = {}
        visited = {center}
        stack = [center]
        while stack:
            v = stack.pop()
            for j in range(indptr[v], indptr[v + 1]):
                k = edge_id[j]
                st = edge_state.get(k)
                if st is None:
                    st = bool(rng.random() < p)
                    edge_state[k] = st
                if not st:
                    continue
                w = int(indices[j])
                if w not in visited:
                    visited.add(w)
                    stack.append(w)
        return np.array(
            [sum(1 for t in tg if int(t) in visited) for tg in targets],
            dtype=np.int64,
        )

    counts = np.zeros(len(distances), dtype=np.int64)
    for c in mapper(one, range(replicas)):
        counts += c

    trials = np.array([replicas * len(tg) for tg in targets], dtype=np.int64)
    tau = counts / trials
    pos = tau > 0
    if int(pos.sum()) < 2:
        raise InsufficientData(
            "fewer than two distances with positive connectivity"
        )
    x = distances[pos].astype(float)
    y = np.log(tau[pos])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(
        p=p,
        distances=distances,
        tau=tau,
        counts=counts,
        trials=trials,
        slope=float(slope),
        intercept=float(intercept),
        a_hat=float(math.exp(slope)),
        r_squared=r2,
    )
