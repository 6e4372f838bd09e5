import numpy as np
import pytest

from hyperperc.hypvoronoi import Window, delaunay
from hyperperc.percolation import (
    BondConfig,
    InsufficientData,
    NoCrossing,
    bernoulli_bond,
    bernoulli_site,
    bond_thresholds,
    connectivity_decay,
    dual_config,
    estimate_pc,
    label_clusters,
    phase_signature,
    reach_curve,
    reach_probability,
    tiling_instance,
    tiling_signature_sweep,
    voronoi_phase_signature,
    voronoi_signature_sweep,
    wilson_interval,
    SWEEP_HEADER,
)
from hyperperc.pointprocess import sample_colored
from hyperperc.tilinggraph import build_ball, dual_ball

from oracle_duality import center_to_boundary_cut, winding_dual_cycle_exists
from oracle_perc import bfs_labels


class TestBernoulli:
    def test_extremes(self):
        b = build_ball(3, 7, 3)
        assert bernoulli_bond(b, 1.0, 1).open_edges.all()
        assert not bernoulli_bond(b, 0.0, 1).open_edges.any()
        assert bernoulli_site(b, 1.0, 1).open_sites.all()
        assert not bernoulli_site(b, 0.0, 1).open_sites.any()

    def test_open_fraction_concentrates(self):
        b = build_ball(3, 7, 5)
        c = bernoulli_bond(b, 0.3, 123)
        m = b.n_edges
        sd = np.sqrt(0.3 * 0.7 / m)
        assert abs(c.open_edges.mean() - 0.3) < 3 * sd

    def test_deterministic(self):
        b = build_ball(3, 7, 4)
        a = bernoulli_bond(b, 0.4, 9, replica=3)
        c = bernoulli_bond(b, 0.4, 9, replica=3)
        assert np.array_equal(a.open_edges, c.open_edges)

    def test_bad_p(self):
        b = build_ball(3, 7, 3)
        with pytest.raises(ValueError):
            bernoulli_bond(b, 1.5, 1)


class TestDualConfig:
    def test_empty_primal_gives_full_dual(self):
        b = build_ball(3, 7, 3)
        c = BondConfig(b, np.zeros(b.n_edges, dtype=bool), 0.0, 0)
        dc = dual_config(c)
        assert dc.open_edges.all()
        assert dc.p == 1.0

    def test_involution_on_dualizable_edges(self):
        b = build_ball(4, 5, 3)
        d = dual_ball(b)
        c = bernoulli_bond(b, 0.4, 7)
        back = dual_config(dual_config(c, d))
        has_dual = d.dual_edge_of >= 0
        assert np.array_equal(back.open_edges[has_dual], c.open_edges[has_dual])

    def test_dual_open_fraction(self):
        b = build_ball(3, 7, 5)
        d = dual_ball(b)
        c = bernoulli_bond(b, 0.3, 11)
        dc = dual_config(c, d)
        m = len(dc.open_edges)
        sd = np.sqrt(0.3 * 0.7 / m)
        assert abs(dc.open_edges.mean() - 0.7) < 3 * sd


class TestLabelClusters:
    def test_all_open_single_cluster(self):
        b = build_ball(3, 7, 3)
        lab = label_clusters(b.n_vertices, b.edges)
        assert (lab.labels == 0).all()
        assert lab.sizes == {0: b.n_vertices}

    def test_no_open_edge_all_singletons(self):
        b = build_ball(3, 7, 3)
        lab = label_clusters(
            b.n_vertices, b.edges, edge_open=np.zeros(b.n_edges, dtype=bool)
        )
        assert np.array_equal(lab.labels, np.arange(b.n_vertices))

    def test_closed_sites_unlabeled(self):
        b = build_ball(3, 7, 3)
        site_open = np.zeros(b.n_vertices, dtype=bool)
        lab = label_clusters(b.n_vertices, b.edges, site_open=site_open)
        assert (lab.labels == -1).all()
        assert lab.sizes == {}

    @pytest.mark.parametrize("trial", range(10))
    def test_matches_bfs_oracle(self, trial):
        rng = np.random.default_rng(1000 + trial)
        b = build_ball(3, 7, 4)
        edge_open = rng.random(b.n_edges) < 0.4
        site_open = rng.random(b.n_vertices) < 0.8
        lab = label_clusters(b.n_vertices, b.edges, edge_open, site_open)
        assert np.array_equal(
            lab.labels, bfs_labels(b.n_vertices, b.edges, edge_open, site_open)
        )

    def test_monotone_coupling_refines(self):
        # every cluster at p1 sits inside one cluster at p2 >= p1
        rng = np.random.default_rng(5)
        b = build_ball(3, 7, 4)
        u = rng.random(b.n_edges)
        lab1 = label_clusters(b.n_vertices, b.edges, edge_open=u < 0.2).labels
        lab2 = label_clusters(b.n_vertices, b.edges, edge_open=u < 0.5).labels
        parent_of = {}
        for l1, l2 in zip(lab1.tolist(), lab2.tolist()):
            assert parent_of.setdefault(l1, l2) == l2


class TestPhaseSignature:
    def test_full_and_empty(self):
        b = build_ball(3, 7, 4)
        d = dual_ball(b)
        full = BondConfig(b, np.ones(b.n_edges, dtype=bool), 1.0, 0)
        empty = BondConfig(b, np.zeros(b.n_edges, dtype=bool), 0.0, 0)
        assert phase_signature(full, d) == (1, 0)
        assert phase_signature(empty, d) == (0, 1)

    def test_voronoi_extremes(self):
        pts = sample_colored(1.0, 0.5, 6.0, 3, "sig", 0)
        V = delaunay(pts)
        n = len(pts)
        assert voronoi_phase_signature(V, np.ones(n, dtype=bool), 4.0) == (1, 0)
        assert voronoi_phase_signature(V, np.zeros(n, dtype=bool), 4.0) == (0, 1)


class TestReach:
    def test_extreme_levels(self):
        b = build_ball(3, 7, 4)
        inst = tiling_instance(b, core_radius=2)
        t = bond_thresholds(inst, 50, 77, "reach-test")
        f0, lo0, hi0 = reach_probability(t, 0.0)
        f1, lo1, hi1 = reach_probability(t, 1.0)
        assert f0 == 0.0
        assert f1 == 1.0
        assert lo1 > 0.9

    def test_curve_monotone(self):
        b = build_ball(3, 7, 4)
        inst = tiling_instance(b, core_radius=2)
        t = bond_thresholds(inst, 100, 78, "curve-test")
        grid = np.linspace(0, 1, 21)
        c = reach_curve(t, grid)
        assert (np.diff(c) >= 0).all()
        assert c[0] == 0.0 and c[-1] == 1.0

    def test_wilson_bounds(self):
        ph, lo, hi = wilson_interval(8, 10)
        assert 0 <= lo < ph < hi <= 1


class TestEstimatePc:
    def test_requires_ladder(self):
        with pytest.raises(ValueError):
            estimate_pc([(1, np.array([0.5]))], np.linspace(0, 1, 5))

    def test_smoke_on_tiling(self):
        pairs = []
        for L in (4, 5, 6):
            inst = tiling_instance(build_ball(3, 7, L), core_radius=0)
            pairs.append((L, bond_thresholds(inst, 250, 42, f"pc-smoke-{L}")))
        grid = np.arange(0.04, 0.62, 0.02)
        est = estimate_pc(pairs, grid, bootstrap_seed=1)
        assert 0.05 < est.value < 0.45
        assert est.ci_lo <= est.value <= est.ci_hi
        assert len(est.crossings) == 2

    def test_no_crossing_raises(self):
        pairs = []
        for L in (4, 5, 6):
            inst = tiling_instance(build_ball(3, 7, L), core_radius=0)
            pairs.append((L, bond_thresholds(inst, 100, 42, f"pc-smoke-{L}")))
        # deep supercritical grid: all curves saturated, no sign change
        with pytest.raises(NoCrossing):
            estimate_pc(pairs, np.arange(0.7, 0.96, 0.05), bootstrap_seed=1)


class TestPrimalDualExclusivity:
    @pytest.mark.parametrize("p", [0.15, 0.35, 0.5, 0.65, 0.85])
    def test_no_coexistence(self, p):
        # an open primal center-to-shell path and an open dual cycle
        # winding around the center exclude each other
        ball = build_ball(3, 7, 3)
        dual = dual_ball(ball)
        inst = tiling_instance(ball, core_radius=0)
        cut = center_to_boundary_cut(ball)
        for rep in range(120):
            c = bernoulli_bond(ball, p, 321, "exclusivity", rep)
            lab = label_clusters(inst.n, inst.edges, edge_open=c.open_edges,
                                 core=inst.core, shell=inst.shell)
            primal_reach = lab.k_proxy >= 1
            dc = dual_config(c, dual)
            winding = winding_dual_cycle_exists(ball, dual, dc.open_edges, cut)
            assert not (primal_reach and winding)


class TestSweeps:
    def test_tiling_sweep_rows(self):
        sw = tiling_signature_sweep(3, 7, 6, [0.05, 0.5, 0.95], 30, 99)
        text = sw.to_csv()
        lines = text.splitlines()
        assert lines[0] == SWEEP_HEADER
        assert len(lines) == 4
        rows = {r.p: r for r in sw.rows}
        assert rows[0.95].kw >= 0.9
        assert rows[0.95].kb <= 0.1
        assert rows[0.05].kb >= 0.9
        assert rows[0.05].theta <= 0.2

    def test_voronoi_sweep_rows(self):
        sw = voronoi_signature_sweep(1.0, [0.1, 0.9], Window.with_margin(4.0), 15, 99)
        rows = {r.p: r for r in sw.rows}
        assert rows[0.9].kw >= 0.9
        assert rows[0.1].kb >= 0.9
        assert all(0 <= r.theta <= 1 for r in sw.rows)

    def test_sweep_deterministic(self):
        a = tiling_signature_sweep(3, 7, 3, [0.3], 10, 5).to_csv()
        b = tiling_signature_sweep(3, 7, 3, [0.3], 10, 5).to_csv()
        assert a == b


class TestDecay:
    def test_distance_zero_is_certain(self):
        b = build_ball(3, 7, 5)
        fit = connectivity_decay(b, 0.3, [0, 1, 2], 200, 7)
        assert fit.tau[0] == 1.0

    def test_p_zero_insufficient(self):
        b = build_ball(3, 7, 5)
        with pytest.raises(InsufficientData):
            connectivity_decay(b, 0.0, [1, 2, 3], 50, 7)

    def test_subcritical_fit(self):
        b = build_ball(3, 7, 7)
        fit = connectivity_decay(b, 0.15, range(1, 6), 3000, 11)
        assert fit.slope < 0
        assert fit.a_hat < 1
        assert fit.r_squared > 0.9
