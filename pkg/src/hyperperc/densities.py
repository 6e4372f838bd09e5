"""Vertex, edge, and face densities of the Poisson-Voronoi tessellation.

Densities are per unit hyperbolic area, estimated by counting inside a
window ball of radius R_window strictly inside the sampling ball.  The
face density is estimated twice, by counting nuclei and by the mean
inverse area of the cell containing the origin; the two must agree (the
origin lands in a cell with probability proportional to its area, so the
inverse-area mean undoes exactly that size bias).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .hypgeo import ball_area, polygon_area
from .hypvoronoi import VoronoiComplex, Window, cell_polygon, delaunay
from .pointprocess import ColoredPointSet, replica_rng, sample_poisson_ball


class OriginNotInterior(ValueError):
    """Raised when the cell containing the origin is boundary-masked."""


@dataclass
class DensityEstimate:
    """Windowed density estimates with per-replica standard errors."""

    lam: float
    window: Window
    replicas_used: int
    replicas_discarded: int
    D_V_hat: float
    D_V_se: float
    D_E_hat: float
    D_E_se: float
    D_F_hat_count: float
    D_F_count_se: float
    D_F_hat_inverse_area: float
    D_F_inv_se: float
    A_o_samples: list
    euler: float
    euler_se: float
    seed: int = 0

    def cross_check_sigma(self) -> float:
        """Distance between the two face-density estimators in sigmas."""
        se = math.hypot(self.D_F_count_se, self.D_F_inv_se)
        return abs(self.D_F_hat_count - self.D_F_hat_inverse_area) / se

    def validate(self, max_sigma: float = 4.0) -> None:
        s = self.cross_check_sigma()
        if s > max_sigma:
            raise RuntimeError(
                f"face-density estimators disagree by {s:.1f} sigma"
            )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("lambda,R,Rw,replicas,DV,DV_se,DE,DF_count,DF_inv,"
                  "euler,euler_se,seed\n")
        buf.write(
            "%g,%g,%g,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n"
            % (
                self.lam, self.window.R_sample, self.window.R_window,
                self.replicas_used, self.D_V_hat, self.D_V_se, self.D_E_hat,
                self.D_F_hat_count, self.D_F_hat_inverse_area, self.euler,
                self.euler_se, self.seed,
            )
        )
        return buf.getvalue()


def origin_cell_area(V: VoronoiComplex) -> float:
    """Area of the Voronoi cell containing the origin.

    The origin lies in the cell of its nearest nucleus; raises
    OriginNotInterior when that cell is boundary-masked.
    """
    i = int(np.argmin(V.points.rho))
    if not V.interior_mask[i]:
        raise OriginNotInterior("origin cell is boundary-masked")
    return polygon_area(cell_polygon(V, i))


def estimate_densities(complexes, window: Window, lam: float,
                       seed: int = 0) -> DensityEstimate:
    """Density estimates from an iterable of Voronoi complexes (replicas).

    Counting uses nucleus/vertex positions only; replicas whose origin
    cell is boundary-masked contribute counts but no inverse-area sample
    and are flagged as discarded for that estimator.
    """
    area = ball_area(window.R_window)
    dv, de, df, inv_a = [], [], [], []
    discarded = 0
    for V in complexes:
        in_win = V.vor_rho <= window.R_window
        n_vv = int(np.count_nonzero(in_win))
        dv.append(n_vv / area)
        # every Voronoi vertex of a generic Poisson sample has degree 3
        de.append(3 * n_vv / (2 * area))
        df.append(int(np.count_nonzero(V.points.rho <= window.R_window)) / area)
        try:
            inv_a.append(1.0 / origin_cell_area(V))
        except OriginNotInterior:
            discarded += 1
    if not dv:
        raise ValueError("no replicas supplied")
    if not inv_a:
        raise OriginNotInterior("origin cell boundary-masked in every replica")
    dv = np.asarray(dv)
    de = np.asarray(de)
    df = np.asarray(df)
    inv_a = np.asarray(inv_a)
    euler_per_rep = 2.0 * math.pi * (df - de + dv)

    def se(x):
        return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else float("inf")

    return DensityEstimate(
        lam=lam,
        window=window,
        replicas_used=len(dv),
        replicas_discarded=discarded,
        D_V_hat=float(dv.mean()),
        D_V_se=se(dv),
        D_E_hat=float(de.mean()),
        D_E_se=se(de),
        D_F_hat_count=float(df.mean()),
        D_F_count_se=se(df),
        D_F_hat_inverse_area=float(inv_a.mean()),
        D_F_inv_se=se(inv_a),
        A_o_samples=(1.0 / inv_a).tolist(),
        euler=float(euler_per_rep.mean()),
        euler_se=se(euler_per_rep),
        seed=seed,
    )


def euler_check(D: DensityEstimate):
    """The combination 2*pi*(D_F - D_E + D_V) and its standard error.

    For the hyperbolic Poisson-Voronoi tessellation the exact value is -1
    for every intensity.
    """
    return D.euler, D.euler_se


def density_experiment(lam: float, window: Window, replicas: int,
                       master_seed: int,
                       experiment: str = "densities") -> DensityEstimate:
    """Sample `replicas` tessellations and estimate their densities."""

    def gen():
        for rep in range(replicas):
            rng = replica_rng(master_seed, f"{experiment}-lam{lam:g}", rep)
            rho, theta = sample_poisson_ball(lam, window.R_sample, rng)
            pts = ColoredPointSet(
                rho=rho, theta=theta, white=np.ones(len(rho), dtype=bool),
                lam=lam, p=1.0, R=window.R_sample, seed=master_seed,
            )
            yield delaunay(pts)

    return estimate_densities(gen(), window, lam, seed=master_seed)
