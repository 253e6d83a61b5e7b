"""
Refinement studies: discretize a continuum initial measure at increasing
atom counts, simulate every level and compare the flow maps and the
pushed-forward measures of consecutive levels.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from sticky_flow.config import SETTINGS
from sticky_flow.dynamics import ParticleInit, simulate
from sticky_flow.errors import InvalidGridError, InvalidInputError
from sticky_flow.flow_map import FlowMap
from sticky_flow.measures import discretize, wasserstein1
from sticky_flow.tasks import sweep
from sticky_flow.utils import time_f
from sticky_flow.utils.quadrature import bump
from sticky_flow.weak_solution import WeakSolutionView

log = logging.getLogger('sticky_flow.convergence')

CONVERGING = 'converging'
NON_MONOTONE = 'non-monotone'
DIVERGING = 'diverging'

_VERDICT_RANK = {CONVERGING: 0, NON_MONOTONE: 1, DIVERGING: 2}


@dataclass(frozen=True, eq=False)
class LevelResult(object):
    """
    One simulated discretization: X(grid, t) and rho_t at every study time
    """
    n: int
    flow: FlowMap
    values: dict
    measures: dict

    @property
    def initial(self):
        return self.flow.measure


@dataclass(eq=False)
class RefinementStudy(object):
    spec: object
    v0: object
    levels: list
    times: list
    grid: np.ndarray
    results: list = field(default_factory=list)

    def level(self, n):
        for result in self.results:
            if result.n == n:
                return result
        raise InvalidInputError("%r is not a level of this study (%s)"
                                % (n, ", ".join(map(str, self.levels))))

    def _time(self, t):
        for s in self.times:
            if s == t:
                return s
        raise InvalidInputError("%r is not a time of this study" % (t,))

    def flow_difference(self, k, k2, t):
        """
        D(k, k2, t): max over the grid of |X^k(y, t) - X^k2(y, t)|
        """
        t = self._time(t)
        a, b = self.level(k).values[t], self.level(k2).values[t]
        return float(np.max(np.abs(a - b)))

    def wasserstein(self, k, k2, t):
        t = self._time(t)
        return wasserstein1(self.level(k).measures[t],
                            self.level(k2).measures[t])

    def joint_distance(self, k, k2, t):
        """
        max over the test family h of |int h d sigma^k_t - int h d
        sigma^k2_t|, sigma_t the law of (y, X(y, t)) under rho0
        """
        t = self._time(t)
        family = _joint_family(self.spec, self.v0, t)
        worst = 0.0
        a, b = self.level(k), self.level(k2)
        for _, h in family:
            diff = abs(_joint_integral(a, t, h) - _joint_integral(b, t, h))
            worst = max(worst, diff)
        return worst

    def uniform_bound(self):
        """
        B from the coarsest level, and how far finer levels exceed it, for
        |X(y, t)| <= B(1 + t)(1 + |y|) on the grid
        """
        ratios = []
        for result in self.results:
            worst = 0.0
            for t in self.times:
                scale = (1.0 + t) * (1.0 + np.abs(self.grid))
                worst = max(worst, float(np.max(np.abs(result.values[t]) /
                                                scale)))
            ratios.append(worst)
        bound = ratios[0]
        excess = max([r - bound for r in ratios[1:]] + [0.0])
        return bound, excess

    def lipschitz_residuals(self):
        """
        Per level: max over consecutive study times (0 included) of
        ||X(t) - X(s)||_{L2(rho0)} - (t - s)||v0||_{L2(rho0)}
        """
        times = sorted(set([0.0] + list(self.times)))
        out = {}
        for result in self.results:
            worst = -math.inf
            for s, t in zip(times[:-1], times[1:]):
                dist, bound = result.flow.lipschitz_in_time(s, t)
                worst = max(worst, dist - bound)
            out[result.n] = 0.0 if worst == -math.inf else worst
        return out

    def table(self, settings=SETTINGS):
        rows = []
        for k, k2 in zip(self.levels[:-1], self.levels[1:]):
            for t in self.times:
                rows.append({
                    'level_pair': [k, k2],
                    't': t,
                    'D': self.flow_difference(k, k2, t),
                    'W1': self.wasserstein(k, k2, t),
                    'joint': self.joint_distance(k, k2, t),
                })
        bound, excess = self.uniform_bound()
        table = ConvergenceTable(rows=rows, times=list(self.times),
                                 growth_factor=settings.growth_factor,
                                 bound=bound, bound_excess=excess,
                                 lipschitz=self.lipschitz_residuals())
        verdict = table.verdict
        if verdict == NON_MONOTONE:
            log.warning("flow-map differences are not monotone in the "
                        "level: %s", table.verdicts())
        elif verdict == DIVERGING:
            log.error("flow-map differences grow at the finest level "
                      "pair: %s", table.verdicts())
        return table


@dataclass
class ConvergenceTable(object):
    rows: list
    times: list
    growth_factor: float = SETTINGS.growth_factor
    bound: float = 0.0
    bound_excess: float = 0.0
    lipschitz: dict = field(default_factory=dict)

    def series(self, t, column='D'):
        return [row[column] for row in self.rows if row['t'] == t]

    def verdict_at(self, t, column='D'):
        """
        converging when the column never goes up from one level pair to the
        next, diverging when its last step grows by more than
        growth_factor, non-monotone otherwise
        """
        values = self.series(t, column)
        if len(values) < 2:
            return CONVERGING
        if values[-1] > self.growth_factor * values[-2]:
            return DIVERGING
        if all(b <= a for a, b in zip(values[:-1], values[1:])):
            return CONVERGING
        return NON_MONOTONE

    def verdicts(self, column='D'):
        return dict((t, self.verdict_at(t, column)) for t in self.times)

    @property
    def verdict(self):
        found = list(self.verdicts().values()) or [CONVERGING]
        return max(found, key=_VERDICT_RANK.get)

    @property
    def passed(self):
        return self.verdict != DIVERGING

    def to_dict(self):
        return {
            'rows': self.rows,
            'verdict': self.verdict,
            'verdicts': [{'t': t, 'D': v, 'W1': self.verdict_at(t, 'W1')}
                         for t, v in self.verdicts().items()],
            'bound': self.bound,
            'bound_excess': self.bound_excess,
            'lipschitz_time': [{'level': n, 'residual': r}
                               for n, r in sorted(self.lipschitz.items())],
        }


def _joint_family(spec, v0, t):
    """
    (name, h(y, x)) test functions for the joint law of (y, X(y, t)): the
    first and second moments and three bounded bumps placed on where the
    quartiles of rho0 travel freely
    """
    lo, hi = spec.support()
    width = (hi - lo) or 1.0
    spread = width * (1.0 + t * v0.max_abs_slope())
    family = [
        ('y', lambda y, x: y),
        ('x', lambda y, x: x),
        ('y^2', lambda y, x: y * y),
        ('x^2', lambda y, x: x * x),
        ('xy', lambda y, x: x * y),
    ]
    for q in (0.25, 0.5, 0.75):
        c = float(spec.quantile(q))
        cx = c + t * v0(c)
        family.append(('bump@%g' % q, lambda y, x, c=c, cx=cx: (
            bump((y - c) / width) * bump((x - cx) / spread))))
    return family


def _joint_integral(result, t, h):
    measure = result.initial
    x = result.flow.at_atoms(t)
    return float(np.sum(measure.masses * h(measure.positions, x)))


def _quantile_grid(spec, size):
    return np.asarray(spec.quantile((np.arange(size) + 0.5) / size),
                      dtype=float)


def _simulate_level(spec, v0, n, times, grid, settings):
    measure = discretize(spec, n)
    init = ParticleInit(measure.masses, measure.positions,
                        v0(measure.positions))
    traj = simulate(init, max(times), settings)
    flow = FlowMap(traj, v0)
    view = WeakSolutionView(traj, settings)
    values = dict((t, flow.eval_many(grid, t)) for t in times)
    measures = dict((t, view.measure_at(t)) for t in times)
    log.info("level %d: %d atoms, %d events", n, len(init),
             len(traj.events))
    return LevelResult(n=n, flow=flow, values=values, measures=measures)


def refinement_study(spec, v0, levels, times, grid=None, threads=1,
                     settings=SETTINGS):
    """
    Simulate every level of the refinement (levels in parallel) and collect
    the flow map on a common grid of quantiles of spec
    """
    levels = [int(n) for n in levels]
    if len(levels) < 2:
        raise InvalidInputError("a refinement study needs at least two "
                                "levels")
    if any(n < 1 for n in levels) or \
            any(b <= a for a, b in zip(levels[:-1], levels[1:])):
        raise InvalidInputError("levels must be positive and strictly "
                                "increasing, got %s" % levels)
    times = sorted(set(float(t) for t in times))
    if not times or any(not (math.isfinite(t) and t >= 0) for t in times):
        raise InvalidInputError("study times must be finite and >= 0")
    if grid is None:
        grid = _quantile_grid(spec, settings.grid_size)
    else:
        grid = np.asarray(grid, dtype=float)
        outside = [float(y) for y in grid if not spec.contains(float(y))]
        if outside:
            raise InvalidGridError("grid points %s lie outside the support "
                                   "of the initial measure" % outside)
    study = RefinementStudy(spec=spec, v0=v0, levels=levels, times=times,
                            grid=grid)

    def level(n):
        return time_f(_simulate_level, 'sticky-flow.converge.level', spec,
                      v0, n, times, grid, settings)

    study.results = sweep(level, levels, threads)
    return study


def joint_distance(study, k, k2, t):
    return study.joint_distance(k, k2, t)
