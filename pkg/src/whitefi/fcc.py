"""How far outside a service contour full-power nodes must stay.

Nodes populate an annular sector just outside a tower's service contour:
``depth_km`` deep and ``arc_km`` wide (measured along the contour).  A
trial draws the nodes once as radial offsets and angles; moving the
sector outward by ``D`` shifts every node by ``D`` along its radius.  The
aggregate interference at the worst point of the contour then falls
monotonically in ``D``, and the smallest compliant ``D`` is found on a
``tol_km`` grid.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .params import DEFAULT_IMAX_W, MacParams, RadioParams
from .scenario import TvTransmitter


@dataclass(frozen=True)
class BandRegion:
    """Populated sector next to the contour."""

    depth_km: float = 20.0
    arc_km: float = 20.0

    def area_km2(self, contour_radius_km: float) -> float:
        width = self.arc_km / contour_radius_km                  # radians
        r0, r1 = contour_radius_km, contour_radius_km + self.depth_km
        return 0.5 * width * (r1 ** 2 - r0 ** 2)


@dataclass
class DistanceResult:
    density: float
    mean_km: float
    std_km: float
    per_trial_km: np.ndarray
    protection_buffer_km: float
    n_nodes: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def buffer_sufficient(self) -> bool:
        return self.mean_km <= self.protection_buffer_km


def _offsets(rng, count, region: BandRegion, r_s: float):
    """Uniform points in the sector, as (radial offset beyond the contour, angle)."""
    width = region.arc_km / r_s
    r0, r1 = r_s, r_s + region.depth_km
    # uniform in area: radius^2 uniform between r0^2 and r1^2
    u = rng.random((count, 2))
    radius = np.sqrt(r0 ** 2 + u[:, 0] * (r1 ** 2 - r0 ** 2))
    theta = (u[:, 1] - 0.5) * width
    return radius - r_s, theta


def worst_interference(offset_km, theta, distance_km, r_s, radio: RadioParams, power_w, n_grid=361):
    """Largest aggregate interference (W) along the contour near the sector.

    A uniform grid of contour angles is scanned and the best few grid
    points are refined with a bounded scalar search.
    """
    if len(offset_km) == 0:
        return 0.0
    rad = r_s + distance_km + np.asarray(offset_km)
    nx, ny = rad * np.cos(theta), rad * np.sin(theta)

    def agg(phi):
        phi = np.atleast_1d(phi)
        cx, cy = r_s * np.cos(phi), r_s * np.sin(phi)
        d = np.hypot(nx[None, :] - cx[:, None], ny[None, :] - cy[:, None])
        d = np.maximum(d, radio.pathloss_ref_km)
        return (radio.pathloss_ref_gain * (radio.pathloss_ref_km / d) ** radio.pathloss_exponent * power_w).sum(axis=1)

    span = max(float(np.ptp(theta)), 1e-6)
    grid = np.linspace(theta.min() - span, theta.max() + span, n_grid)
    vals = agg(grid)
    best = float(vals.max())
    h = grid[1] - grid[0]
    for k in np.argsort(vals)[-3:]:
        res = minimize_scalar(lambda x: -agg(x)[0], bounds=(grid[k] - h, grid[k] + h), method="bounded",
                              options={"xatol": 1e-9})
        best = max(best, -float(res.fun))
    return best


def min_distance(offset_km, theta, r_s, radio: RadioParams, power_w, imax_w, tol_km=0.01):
    """Smallest multiple of ``tol_km`` at which the worst interference is within ``imax_w``."""
    ok = lambda k: worst_interference(offset_km, theta, k * tol_km, r_s, radio, power_w) <= imax_w
    if ok(0):
        return 0.0
    hi = 1
    while not ok(hi):
        hi *= 2
        if hi * tol_km > 1e6:
            raise RuntimeError("no compliant separation found")
    lo = hi // 2                          # infeasible (or 0, checked above)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi * tol_km


def separation_distance(tv_tx: TvTransmitter, density_nodes_per_km2: float, region: BandRegion | None = None,
                        radio: RadioParams | None = None, mac: MacParams | None = None, seed: int = 0,
                        n_trials: int = 20, imax_w: float = DEFAULT_IMAX_W, tol_km: float = 0.01,
                        offsets=None) -> DistanceResult:
    """Average minimum separation over ``n_trials`` node placements.

    Every node transmits at the power budget.  Draws are nested across
    densities (each trial's stream is independent of the density), so the
    result is non-decreasing in density.  ``offsets`` replaces the random
    placement with explicit ``(radial_offset_km, angle_rad)`` pairs.
    """
    region = region or BandRegion()
    radio = radio or RadioParams()
    mac = mac or MacParams()
    if density_nodes_per_km2 < 0:
        raise ValueError("density must be non-negative")
    if n_trials < 1:
        raise ValueError("need at least one trial")
    r_s = tv_tx.service_radius_km
    if region.depth_km <= 0 or region.arc_km <= 0 or region.arc_km >= 2 * np.pi * r_s:
        raise ValueError("region must be a proper sector outside the contour")
    buffer_km = tv_tx.protection_radius_km - tv_tx.service_radius_km
    if offsets is not None:
        off = np.asarray(offsets, dtype=float).reshape(-1, 2)
        d = min_distance(off[:, 0], off[:, 1], r_s, radio, mac.power_budget_w, imax_w, tol_km)
        return DistanceResult(density_nodes_per_km2, d, 0.0, np.array([d]), buffer_km, len(off))
    count = int(round(density_nodes_per_km2 * region.area_km2(r_s)))
    out = np.empty(n_trials)
    for k in range(n_trials):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), k]))
        off, th = _offsets(rng, count, region, r_s)
        out[k] = min_distance(off, th, r_s, radio, mac.power_budget_w, imax_w, tol_km)
    return DistanceResult(density_nodes_per_km2, float(out.mean()), float(out.std(ddof=1)) if n_trials > 1 else 0.0,
                          out, buffer_km, count)


def distance_table(results, header_lines=()) -> str:
    """CSV with columns density, mean_D_km, std_D_km, trials."""
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf)
    w.writerow(["density", "mean_D_km", "std_D_km", "trials", "nodes", "protection_buffer_km"])
    for r in results:
        w.writerow([r.density, repr(r.mean_km), repr(r.std_km), len(r.per_trial_km), r.n_nodes,
                    round(r.protection_buffer_km, 9)])
    return buf.getvalue()
