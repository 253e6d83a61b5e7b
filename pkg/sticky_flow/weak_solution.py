"""
The Eulerian pair (rho_t, v) induced by a simulated particle system, and
numerical checks of the integral identities it satisfies.

rho_t is the mass distribution of the clusters at time t and v is the
cluster right-velocity on the atoms, 0 elsewhere. Space integrals against
rho_t are exact atom sums; time integrals are Gauss-Legendre per cluster
lifetime, since every trajectory is linear there.
"""
from dataclasses import dataclass
from typing import Optional
import logging
import math

import numpy as np

from sticky_flow.config import SETTINGS
from sticky_flow.errors import DomainError, InvalidInputError, TimeRangeError
from sticky_flow.measures import DiscreteMeasure, wasserstein1
from sticky_flow.utils.quadrature import bump, bump_derivative, \
    composite_nodes

log = logging.getLogger('sticky_flow.weak_solution')

WHICH = ('mass', 'momentum')


@dataclass(frozen=True)
class TestFunction(object):
    """
    phi(x, t) = B((x - center)/radius) * eta(t) with B the standard bump.

    eta is B((t - T/2)/(T/2)) (centred, vanishing at 0 and T) or, when
    anchored, B(t/T) for t >= 0 (eta(0) = 1). A radius of None makes phi
    constant in x.
    """
    __test__ = False

    horizon: float
    center: float = 0.0
    radius: Optional[float] = None
    anchored: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise InvalidInputError("test function horizon must be a "
                                    "positive number, got %r"
                                    % (self.horizon,))
        if not math.isfinite(self.center):
            raise InvalidInputError("test function center must be finite")
        if self.radius is not None and not (math.isfinite(self.radius) and
                                            self.radius > 0):
            raise InvalidInputError("test function radius must be positive, "
                                    "got %r" % (self.radius,))

    @classmethod
    def random(cls, rng, support, t_max, anchored=None):
        """
        Bump centred inside support=(lo, hi) with a radius of up to the
        support width and a horizon in [t_max/4, t_max]
        """
        lo, hi = support
        width = max(hi - lo, 1.0)
        if anchored is None:
            anchored = bool(rng.random() < 0.5)
        return cls(horizon=float(rng.uniform(0.25, 1.0) * t_max),
                   center=float(rng.uniform(lo, hi)),
                   radius=float(rng.uniform(0.1, 1.0) * width),
                   anchored=anchored)

    @property
    def spatial_support(self):
        if self.radius is None:
            return -math.inf, math.inf
        return self.center - self.radius, self.center + self.radius

    def _u(self, t):
        t = np.asarray(t, dtype=float)
        if self.anchored:
            return t / self.horizon, 1.0 / self.horizon
        half = 0.5 * self.horizon
        return (t - half) / half, 1.0 / half

    def time_factor(self, t):
        u, _ = self._u(t)
        return bump(u)

    def time_slope(self, t):
        u, scale = self._u(t)
        return bump_derivative(u) * scale

    def space_factor(self, x):
        x = np.asarray(x, dtype=float)
        if self.radius is None:
            return np.ones_like(x)
        return bump((x - self.center) / self.radius)

    def space_slope(self, x):
        x = np.asarray(x, dtype=float)
        if self.radius is None:
            return np.zeros_like(x)
        return bump_derivative((x - self.center) / self.radius) / self.radius

    def __call__(self, x, t):
        return self.space_factor(x) * self.time_factor(t)

    def dt(self, x, t):
        return self.space_factor(x) * self.time_slope(t)

    def dx(self, x, t):
        return self.space_slope(x) * self.time_factor(t)


class WeakSolutionView(object):
    """
    Read-only Eulerian view of a TrajectorySet
    """

    def __init__(self, traj, settings=SETTINGS):
        self.traj = traj
        self.settings = settings
        self.initial = traj.init.measure()

    def __repr__(self):
        return "<WeakSolutionView over %r>" % (self.traj,)

    def measure_at(self, t):
        _, positions, masses, _ = self.traj.clusters_at(t)
        return DiscreteMeasure.from_arrays(positions, masses, merge_tol=0.0)

    def velocity_field_at(self, t, x):
        _, positions, _, velocities = self.traj.clusters_at(t)
        eps = self.settings.event_position_tol * (1.0 + abs(x))
        k = int(np.searchsorted(positions, x))
        best = None
        for j in (k - 1, k):
            if 0 <= j < len(positions) and abs(positions[j] - x) <= eps:
                if best is None or abs(positions[j] - x) < \
                        abs(positions[best] - x):
                    best = j
        if best is None:
            return 0.0
        return float(velocities[best])

    def momentum_at(self, t):
        """
        integral of v d rho_t
        """
        return self.traj.total_momentum(t)

    def energy_profile(self, times):
        return [self.traj.kinetic_energy(float(t)) for t in times]

    def _pieces(self, phi, panels):
        """
        (cluster, start, stop) time panels covering every cluster lifetime
        inside [0, T], cut where the trajectory crosses the edge of the
        spatial support; panels on which phi vanishes are dropped.

        A piece gets at least `panels` panels and 2*panels per time scale of
        phi along the trajectory: the half-width of eta, or radius/|v| when
        that is shorter.
        """
        traj = self.traj
        horizon = phi.horizon
        lo_x, hi_x = phi.spatial_support
        time_scale = horizon if phi.anchored else 0.5 * horizon
        ids, starts, stops = [], [], []
        for c in range(traj.n_clusters):
            a = float(traj.born[c])
            b = min(float(traj.died[c]), horizon)
            if not b > a:
                continue
            x0, v = float(traj.x0[c]), float(traj.velocity[c])
            cuts = [a, b]
            if v != 0.0:
                for edge in (lo_x, hi_x):
                    if math.isfinite(edge):
                        tc = a + (edge - x0) / v
                        if a < tc < b:
                            cuts.append(tc)
            cuts.sort()
            scale = time_scale
            if phi.radius is not None and v != 0.0:
                scale = min(scale, phi.radius / abs(v))
            for s, e in zip(cuts[:-1], cuts[1:]):
                if not e > s:
                    continue
                mid = x0 + v * (0.5 * (s + e) - a)
                if not lo_x < mid < hi_x:
                    continue
                count = max(panels, int(math.ceil(2 * panels * (e - s) /
                                                  scale)))
                edges = np.linspace(s, e, count + 1)
                ids.extend([c] * count)
                starts.extend(edges[:-1])
                stops.extend(edges[1:])
        return (np.array(ids, dtype=np.int64), np.array(starts, dtype=float),
                np.array(stops, dtype=float))

    def weak_form_residual(self, phi, which='mass', order=None, panels=None):
        """
        |int int (phi_t + v phi_x) [v] d rho_t dt + int phi(., 0) [v0] d rho0|
        with [v] present for the momentum identity
        """
        if which not in WHICH:
            raise InvalidInputError("which must be one of %s, got %r"
                                    % (", ".join(WHICH), which))
        if phi.horizon > self.traj.t_end:
            raise TimeRangeError("test function horizon %r exceeds t_end=%r"
                                 % (phi.horizon, self.traj.t_end))
        if order is None:
            order = self.settings.quadrature_order
        if panels is None:
            panels = self.settings.quadrature_panels
        if panels < 1:
            raise InvalidInputError("panels must be positive")
        traj = self.traj
        ids, starts, stops = self._pieces(phi, panels)
        total = 0.0
        if len(ids):
            nodes, weights = composite_nodes(starts, stops, order)
            v = traj.velocity[ids][:, None]
            x = traj.x0[ids][:, None] + v * (nodes - traj.born[ids][:, None])
            integrand = phi.dt(x, nodes) + v * phi.dx(x, nodes)
            if which == 'momentum':
                integrand = integrand * v
            integrand = integrand * traj.mass[ids][:, None]
            total = float(np.sum(weights * integrand))
        init = traj.init
        start = init.masses * phi(init.positions, 0.0)
        if which == 'momentum':
            start = start * init.velocities
        total += float(np.sum(start))
        log.debug("%s residual %r over %d panels (order %d)", which,
                  abs(total), len(ids), order)
        return abs(total)

    def oleinik_residual(self, t, pairs=None, chunk=512):
        """
        max over cluster pairs of (v(x)-v(y))(x-y) - (x-y)^2/t; 0 with fewer
        than two clusters
        """
        if not t > 0:
            raise DomainError("the entropy inequality needs t > 0, got %r"
                              % (t,))
        _, x, _, v = self.traj.clusters_at(t)
        k = len(x)
        if k < 2:
            return 0.0
        if pairs is not None:
            i, j = pairs
            d = x[i] - x[j]
            return float(np.max((v[i] - v[j]) * d - d * d / t))
        worst = -math.inf
        cols = np.arange(k)
        for start in range(0, k - 1, chunk):
            rows = np.arange(start, min(start + chunk, k - 1))
            d = x[rows, None] - x[None, :]
            val = (v[rows, None] - v[None, :]) * d - d * d / t
            val = np.where(cols[None, :] > rows[:, None], val, -math.inf)
            worst = max(worst, float(np.max(val)))
        return worst

    def time_continuity_residual(self, times):
        """
        max over consecutive sample times s < t of
        W1(rho_s, rho_t) - (t - s) * sum m|v0|
        """
        times = np.sort(np.asarray(times, dtype=float))
        init = self.traj.init
        speed = float(np.sum(init.masses * np.abs(init.velocities)))
        worst = -math.inf
        prev = None
        for t in times:
            here = self.measure_at(float(t))
            if prev is not None:
                s, there = prev
                worst = max(worst, wasserstein1(here, there) - (t - s) * speed)
            prev = (float(t), here)
        return 0.0 if worst == -math.inf else worst

    def narrow_continuity_residual(self, levels=6, horizon=None):
        """
        time_continuity_residual on dyadic grids of [0, horizon] with
        2, 4, ..., 2**levels intervals
        """
        if horizon is None:
            horizon = self.traj.t_end
            if not math.isfinite(horizon):
                ev = self.traj.event_times
                horizon = float(ev[-1]) + 1.0 if len(ev) else 1.0
        worst = -math.inf
        for level in range(1, levels + 1):
            grid = np.linspace(0.0, horizon, 2 ** level + 1)
            worst = max(worst, self.time_continuity_residual(grid))
        return worst


def measure_at(view, t):
    return view.measure_at(t)


def velocity_field_at(view, t, x):
    return view.velocity_field_at(t, x)


def weak_form_residual(view, phi, which='mass', order=None, panels=None):
    return view.weak_form_residual(phi, which, order, panels)


def oleinik_residual(view, t):
    return view.oleinik_residual(t)


def energy_profile(view, times):
    return view.energy_profile(times)
