"""
Checkers for the estimates every sticky particle system satisfies, plus a
brute-force time-stepping oracle for cross-validating the event-driven
simulator.

Each check returns a VerificationReport. Its worst_residual is the largest
violation found, lhs - rhs scaled by max(1, |rhs|), so values of very
different size share one tolerance; a check passes when the worst residual
is <= its tolerance. A check with nothing to test reports -inf.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from sticky_flow.config import CHECKS, SETTINGS
from sticky_flow.dynamics import simulate
from sticky_flow.errors import (AmbiguousTimeError, InvalidInputError,
                                TimeRangeError)
from sticky_flow.flow_map import FlowMap, continuity_modulus
from sticky_flow.tasks import sweep
from sticky_flow.utils import time_f
from sticky_flow.utils.piecewise import PiecewiseLinearFn
from sticky_flow.weak_solution import TestFunction, WeakSolutionView

log = logging.getLogger('sticky_flow.verification')

GAP_BOUNDS = ('tv', 'two-point', 'modulus')

DEFAULT_FAMILY = {
    '1': np.ones_like,
    'id': lambda x: x,
    'x^2': np.square,
    'cos': np.cos,
}

# sampled times start here (as a fraction of the horizon) for checks that
# divide by t
_T_FLOOR = 1e-3


@dataclass
class VerificationReport(object):
    name: str
    worst_residual: float
    tolerance: float
    witness: dict = field(default_factory=dict)
    instances: int = 1

    @property
    def passed(self):
        return self.worst_residual <= self.tolerance

    def to_dict(self):
        return {
            'check': self.name,
            'instances': self.instances,
            # null when there was nothing to check
            'worst_residual': None if self.worst_residual == -math.inf
            else self.worst_residual,
            'witness': self.witness,
            'pass': self.passed,
            'tolerance': self.tolerance,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(name=data['check'],
                   worst_residual=-math.inf if data['worst_residual'] is None
                   else float(data['worst_residual']),
                   tolerance=float(data['tolerance']),
                   witness=dict(data.get('witness') or {}),
                   instances=int(data.get('instances', 1)))


class _Worst(object):
    """
    Running maximum of residuals with the witness of the largest one
    """

    def __init__(self):
        self.value = -math.inf
        self.witness = {}

    def offer(self, residuals, witness):
        residuals = np.asarray(residuals, dtype=float)
        if residuals.size == 0:
            return
        k = int(np.argmax(residuals))
        value = float(residuals.flat[k])
        if value > self.value:
            self.value = value
            self.witness = witness(k)

    def report(self, name, tol):
        return VerificationReport(name=name, worst_residual=self.value,
                                  tolerance=tol, witness=self.witness)


def horizon(traj):
    """
    t_end, or one time unit past the last event when the run is unbounded
    """
    if math.isfinite(traj.t_end):
        return traj.t_end
    if len(traj.event_times):
        return float(traj.event_times[-1]) + 1.0
    return 1.0


def _rng(rng):
    return np.random.default_rng(0) if rng is None else rng


def _times(traj, rng, samples, times, floor=0.0, settings=SETTINGS):
    if times is not None:
        return np.sort(np.asarray(times, dtype=float))
    h = horizon(traj)
    if h <= 0:
        return np.zeros(0) if floor > 0 else np.zeros(1)
    count = samples or settings.time_samples
    return traj.sample_times(rng, count, floor * h, h)


def _with_events(traj, times):
    h = times[-1] if len(times) else horizon(traj)
    events = traj.event_times[traj.event_times <= h]
    return np.unique(np.concatenate(([0.0], times, events)))


def _pairs(n, rng, settings):
    """
    Every pair i < j up to the scan limit, random pairs above it
    """
    if n < 2:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if n <= settings.pair_scan_limit:
        return np.triu_indices(n, k=1)
    i = rng.integers(0, n, settings.random_pairs)
    j = rng.integers(0, n, settings.random_pairs)
    keep = i != j
    i, j = i[keep], j[keep]
    return np.minimum(i, j), np.maximum(i, j)


def _positions(traj, times):
    return np.array([traj.positions(float(t)) for t in times])


def _scaled(diff, scale):
    # witnesses carry the unscaled excess as "absolute"
    return diff / np.maximum(1.0, np.abs(scale))


def check_qspp(traj, samples=None, times=None, rng=None, settings=SETTINGS):
    """
    |g_i(t) - g_j(t)|/t is nonincreasing in t
    """
    rng = _rng(rng)
    times = _times(traj, rng, samples, times, _T_FLOOR, settings)
    times = times[times > 0]
    i, j = _pairs(len(traj), rng, settings)
    worst = _Worst()
    if len(times) >= 2 and len(i):
        pos = _positions(traj, times)
        ratio = np.abs(pos[:, j] - pos[:, i]) / times[:, None]
        excess = ratio[1:] - ratio[:-1]
        resid = _scaled(excess, ratio[:-1])

        def witness(k):
            row, col = divmod(k, len(i))
            return {'pair': [int(i[col]), int(j[col])],
                    's': float(times[row]), 't': float(times[row + 1]),
                    'ratio_s': float(ratio[row, col]),
                    'ratio_t': float(ratio[row + 1, col]),
                    'absolute': float(excess[row, col])}
        worst.offer(resid, witness)
    return worst.report('qspp', settings.check_tol)


def check_gap_bound(traj, v0=None, bound='tv', samples=None, times=None,
                    rng=None, settings=SETTINGS):
    """
    0 <= g_j(t) - g_i(t) <= x_j - x_i + t*S for x_i < x_j, where S is the
    total variation of the initial velocities over the intermediate atoms
    ('tv'), |v_j - v_i| ('two-point', which only holds for nondecreasing
    velocities) or the modulus of continuity of v0 at x_j - x_i ('modulus')
    """
    if bound not in GAP_BOUNDS:
        raise InvalidInputError("bound must be one of %s, got %r"
                                % (", ".join(GAP_BOUNDS), bound))
    init = traj.init
    x, v = init.positions, init.velocities
    if v0 is not None and not v0.interpolates(x, v):
        raise InvalidInputError("v0 does not interpolate the initial "
                                "velocities at the initial positions")
    rng = _rng(rng)
    times = _times(traj, rng, samples, times, 0.0, settings)
    i, j = _pairs(len(traj), rng, settings)
    name = 'gap-bound' if bound == 'tv' else 'gap-bound[%s]' % bound
    worst = _Worst()
    if not (len(times) and len(i)):
        return worst.report(name, settings.check_tol)
    width = x[j] - x[i]
    if bound == 'tv':
        variation = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(v)))))
        slope = variation[j] - variation[i]
    elif bound == 'two-point':
        slope = np.abs(v[j] - v[i])
    else:
        if v0 is None:
            v0 = PiecewiseLinearFn.from_points(x, v)
        slope = continuity_modulus(v0, width)
    pos = _positions(traj, times)
    gap = pos[:, j] - pos[:, i]
    rhs = width[None, :] + times[:, None] * slope[None, :]
    excess = np.maximum(gap - rhs, -gap)
    resid = _scaled(excess, rhs)

    def witness(k):
        row, col = divmod(k, len(i))
        return {'pair': [int(i[col]), int(j[col])], 't': float(times[row]),
                'gap': float(gap[row, col]), 'bound': float(rhs[row, col]),
                'absolute': float(excess[row, col])}
    worst.offer(resid, witness)
    return worst.report(name, settings.check_tol)


def check_gap_concavity(traj, samples=None, times=None, rng=None,
                        settings=SETTINGS):
    """
    For each adjacent pair until it merges: y(t) <= y(0) + t*y'(0+), and
    the slope y'(t+) never goes up
    """
    rng = _rng(rng)
    worst = _Worst()
    if len(traj) < 2:
        return worst.report('gap-concavity', settings.check_tol)
    times = _with_events(traj, _times(traj, rng, samples, times, 0.0,
                                      settings))
    init = traj.init
    y0 = np.diff(init.positions)
    dy0 = np.diff(init.velocities)
    prev_slope = None
    prev_t = None
    for t in times:
        t = float(t)
        labels = traj.grouping(t)
        apart = labels[1:] != labels[:-1]
        y = np.diff(traj.positions(t))
        line = y0 + t * dy0
        resid = np.where(apart, _scaled(y - line, line), -math.inf)
        worst.offer(resid, lambda k, t=t: {
            'pair': [k, k + 1], 't': t, 'gap': float(y[k]),
            'tangent': float(line[k]), 'absolute': float(y[k] - line[k])})
        slope = np.diff(traj.velocities(t))
        if prev_slope is not None:
            resid = np.where(apart, _scaled(slope - prev_slope, prev_slope),
                             -math.inf)
            worst.offer(resid, lambda k, s=prev_t, t=t, a=prev_slope,
                        b=slope: {'pair': [k, k + 1], 's': s, 't': t,
                                  'slope_s': float(a[k]),
                                  'slope_t': float(b[k]),
                                  'absolute': float(b[k] - a[k])})
        prev_slope, prev_t = slope, t
    return worst.report('gap-concavity', settings.check_tol)


def check_averaging(traj, g_family=None, samples=None, times=None, rng=None,
                    settings=SETTINGS):
    """
    sum m g(g_i(t)) g_i'(t+) == sum m g(g_i(t)) g_i'(s+) for s in
    {0, previous sample} and each g of the family
    """
    if g_family is None:
        g_family = DEFAULT_FAMILY
    elif not isinstance(g_family, dict):
        g_family = dict(('g%d' % k, g) for k, g in enumerate(g_family))
    rng = _rng(rng)
    times = _times(traj, rng, samples, times, 0.0, settings)
    m = traj.init.masses
    worst = _Worst()
    prev = 0.0
    for t in times:
        t = float(t)
        pos = traj.positions(t)
        vt = traj.velocities(t)
        for s in sorted(set((0.0, prev))):
            vs = traj.velocities(s)
            for name, g in g_family.items():
                weight = m * np.asarray(g(pos), dtype=float)
                lhs = float(np.sum(weight * vt))
                rhs = float(np.sum(weight * vs))
                scale = float(np.sum(np.abs(weight * vs)))
                worst.offer([_scaled(abs(lhs - rhs), scale)],
                            lambda k, s=s, t=t, name=name, lhs=lhs,
                            rhs=rhs: {'g': name, 's': s, 't': t,
                                      'lhs': lhs, 'rhs': rhs})
        prev = t
    return worst.report('averaging', settings.check_tol)


def check_oleinik(traj, samples=None, times=None, rng=None,
                  settings=SETTINGS):
    """
    (v(x) - v(y))(x - y) <= (x - y)^2/t over pairs of cluster positions
    """
    rng = _rng(rng)
    times = _times(traj, rng, samples, times, _T_FLOOR, settings)
    worst = _Worst()
    for t in times[times > 0]:
        t = float(t)
        _, x, _, v = traj.clusters_at(t)
        i, j = _pairs(len(x), rng, settings)
        if not len(i):
            continue
        d = x[j] - x[i]
        bound = d * d / t
        excess = (v[j] - v[i]) * d - bound
        resid = _scaled(excess, bound)
        worst.offer(resid, lambda k, t=t, x=x, i=i, j=j, e=excess: {
            't': t, 'x': float(x[i[k]]), 'y': float(x[j[k]]),
            'absolute': float(e[k])})
    return worst.report('oleinik', settings.check_tol)


def check_energy(traj, samples=None, times=None, rng=None, settings=SETTINGS):
    """
    Kinetic energy never goes up and never exceeds the initial energy
    """
    rng = _rng(rng)
    times = _with_events(traj, _times(traj, rng, samples, times, 0.0,
                                      settings))
    e0 = traj.init.energy()
    energy = np.array([traj.kinetic_energy(float(t)) for t in times])
    worst = _Worst()
    worst.offer(_scaled(np.diff(energy), e0), lambda k: {
        's': float(times[k]), 't': float(times[k + 1]),
        'before': float(energy[k]), 'after': float(energy[k + 1])})
    worst.offer(_scaled(energy - e0, e0), lambda k: {
        't': float(times[k]), 'energy': float(energy[k]), 'initial': e0})
    return worst.report('energy', settings.conservation_tol)


def check_momentum(traj, samples=None, times=None, rng=None,
                   settings=SETTINGS):
    """
    |p(t) - p(0)| <= tol * (1 + |p(0)|)
    """
    rng = _rng(rng)
    times = _with_events(traj, _times(traj, rng, samples, times, 0.0,
                                      settings))
    p0 = traj.init.momentum()
    drift = np.array([abs(traj.total_momentum(float(t)) - p0)
                      for t in times]) / (1.0 + abs(p0))
    worst = _Worst()
    worst.offer(drift, lambda k: {'t': float(times[k]), 'initial': p0})
    return worst.report('momentum', settings.conservation_tol)


def check_order(traj, samples=None, times=None, rng=None, settings=SETTINGS):
    """
    Positions stay ordered, particles that have met stay together, and the
    clusters merged at an event all sit at the event position
    """
    rng = _rng(rng)
    times = _with_events(traj, _times(traj, rng, samples, times, 0.0,
                                      settings))
    worst = _Worst()
    prev = None
    for t in times:
        t = float(t)
        pos = traj.positions(t)
        worst.offer(_scaled(pos[:-1] - pos[1:], pos[1:]),
                    lambda k, t=t: {'rule': 'order', 'pair': [k, k + 1],
                                    't': t})
        labels = traj.grouping(t)
        together = labels[1:] == labels[:-1]
        if prev is not None:
            s, was = prev
            split = (was & ~together).astype(float)
            worst.offer(split, lambda k, s=s, t=t: {
                'rule': 'sticky', 'pair': [k, k + 1], 's': s, 't': t})
        prev = (t, together)
    for event in traj.events:
        ids = np.array(event.merged)
        pos = traj.x0[ids] + traj.velocity[ids] * (event.time -
                                                    traj.born[ids])
        worst.offer(_scaled(np.abs(pos - event.position), event.position),
                    lambda k, e=event: {'rule': 'event', 't': e.time,
                                        'cluster': int(e.merged[k])})
    return worst.report('order', settings.check_tol)


def check_flow_equation(traj, samples=None, times=None, rng=None,
                        settings=SETTINGS):
    """
    X'(t) == E[v0 | X(t)] at times off the events
    """
    rng = _rng(rng)
    if times is None:
        h = horizon(traj)
        times = traj.sample_times(rng, samples or settings.time_samples,
                                  0.0, h) if h > 0 else [0.0]
    flow = FlowMap(traj)
    scale = float(np.max(np.abs(traj.init.velocities)))
    worst = _Worst()
    for t in times:
        t = float(t)
        try:
            resid = flow.flow_equation_residual(t)
        except AmbiguousTimeError:
            continue
        worst.offer([_scaled(resid, scale)], lambda k, t=t: {'t': t})
    return worst.report('flow-equation', settings.flow_equation_tol)


def check_tower(traj, samples=None, times=None, rng=None, settings=SETTINGS):
    """
    E[X'(s+) | X(t)] == X'(t+) for s <= t
    """
    rng = _rng(rng)
    times = _times(traj, rng, samples, times, 0.0, settings)
    flow = FlowMap(traj)
    scale = float(np.max(np.abs(traj.init.velocities)))
    worst = _Worst()
    for s, t in zip(times[:-1], times[1:]):
        resid = flow.tower_residual(float(s), float(t))
        worst.offer([_scaled(resid, scale)], lambda k, s=s, t=t: {
            's': float(s), 't': float(t)})
    return worst.report('tower', settings.check_tol)


def check_lipschitz_time(traj, samples=None, times=None, rng=None,
                         settings=SETTINGS):
    """
    ||X(t) - X(s)||_{L2(rho0)} <= (t - s) ||v0||_{L2(rho0)}
    """
    rng = _rng(rng)
    times = np.unique(np.concatenate(([0.0], _times(traj, rng, samples, times,
                                                     0.0, settings))))
    flow = FlowMap(traj)
    worst = _Worst()
    for s, t in zip(times[:-1], times[1:]):
        dist, bound = flow.lipschitz_in_time(float(s), float(t))
        worst.offer([_scaled(dist - bound, bound)], lambda k, s=s, t=t,
                    dist=dist, bound=bound: {
                        's': float(s), 't': float(t), 'distance': dist,
                        'bound': bound})
    return worst.report('lipschitz-time', settings.check_tol)


def check_narrow_continuity(traj, levels=6, settings=SETTINGS, **_):
    """
    W1(rho_s, rho_t) <= (t - s) sum m|v0| on dyadic time grids
    """
    view = WeakSolutionView(traj, settings)
    h = horizon(traj)
    worst = _Worst()
    if h > 0:
        scale = h * float(np.sum(traj.init.masses *
                                 np.abs(traj.init.velocities)))
        resid = view.narrow_continuity_residual(levels, h)
        worst.offer([_scaled(resid, scale)], lambda k: {
            'horizon': h, 'levels': levels})
    return worst.report('narrow-continuity', settings.check_tol)


def check_weak(traj, which='mass', count=None, order=None, panels=None,
               rng=None, settings=SETTINGS, threads=1):
    """
    Weak-form residual of the mass or momentum identity over random bump
    test functions
    """
    rng = _rng(rng)
    view = WeakSolutionView(traj, settings)
    h = horizon(traj)
    name = 'weak-%s' % which
    worst = _Worst()
    if h <= 0:
        return worst.report(name, settings.weak_form_tol)
    ends = np.concatenate((traj.positions(0.0), traj.positions(h)))
    support = (float(ends.min()) - 1.0, float(ends.max()) + 1.0)
    phis = [TestFunction.random(rng, support, h)
            for _ in range(count or settings.test_functions)]
    resid = sweep(lambda phi: view.weak_form_residual(phi, which, order,
                                                      panels),
                  phis, threads)
    worst.offer(resid, lambda k: {
        'center': phis[k].center, 'radius': phis[k].radius,
        'horizon': phis[k].horizon, 'anchored': phis[k].anchored})
    return worst.report(name, settings.weak_form_tol)


@dataclass(frozen=True, eq=False)
class OraclePaths(object):
    """
    Positions of every particle (columns) at each sample time (rows)
    """
    times: np.ndarray
    positions: np.ndarray


def _merge_inverted(x, v, m, size, x_ref, t_ref, t):
    """
    Merge every maximal run of crossed or touching neighbours into its
    centre of mass, repeating until the positions are strictly increasing.
    A merged group restarts its free flight from (x, t).
    """
    while len(x) > 1:
        inverted = x[1:] <= x[:-1]
        if not inverted.any():
            break
        labels = np.concatenate(([0], np.cumsum(~inverted)))
        mass = np.bincount(labels, weights=m)
        count = np.bincount(labels)
        first = np.searchsorted(labels, np.arange(len(mass)))
        x = np.bincount(labels, weights=m * x) / mass
        v = np.bincount(labels, weights=m * v) / mass
        size = np.bincount(labels, weights=size).astype(np.int64)
        kept = count == 1
        x_ref = np.where(kept, x_ref[first], x)
        t_ref = np.where(kept, t_ref[first], t)
        m = mass
    return x, v, m, size, x_ref, t_ref


def oracle_simulate(init, t_end, dt, sample_times=None):
    """
    Explicit stepping on the grid k*dt (sample times inserted): move every
    group, then merge groups whose order has inverted, conserving mass and
    momentum. Groups are moved from the point of their last merge so the
    step count adds no round-off.
    """
    if not dt > 0:
        raise InvalidInputError("oracle step must be positive, got %r"
                                % (dt,))
    if not (math.isfinite(t_end) and t_end >= 0):
        raise TimeRangeError("oracle needs a finite t_end >= 0, got %r"
                             % (t_end,))
    times = [t_end] if sample_times is None else \
        sorted(float(t) for t in sample_times)
    if times and not (0.0 <= times[0] and times[-1] <= t_end):
        raise TimeRangeError("sample times must lie in [0, %r]" % t_end)
    x_ref = init.positions.copy()
    t_ref = np.zeros(len(x_ref))
    v = init.velocities.copy()
    m = init.masses.copy()
    size = np.ones(len(x_ref), dtype=np.int64)
    x = x_ref
    t = 0.0
    k = 0
    steps = 0
    out = []
    for target in times:
        while t < target:
            following = (k + 1) * dt
            if following <= target:
                k += 1
                t = following
            else:
                t = target
            x = x_ref + v * (t - t_ref)
            x, v, m, size, x_ref, t_ref = _merge_inverted(x, v, m, size,
                                                          x_ref, t_ref, t)
            steps += 1
        out.append(np.repeat(x, size))
    log.debug("oracle took %d steps of %r to t=%r", steps, dt, t)
    return OraclePaths(times=np.array(times, dtype=float),
                       positions=np.array(out))


def compare_oracle(init, t_end, dt=None, tol=None, times=None, traj=None,
                   settings=SETTINGS):
    """
    Sup-norm distance between simulated and time-stepped positions over the
    sample times (11 evenly spaced ones by default)
    """
    dt = settings.oracle_dt if dt is None else dt
    tol = settings.oracle_tol if tol is None else tol
    if traj is None:
        traj = simulate(init, t_end, settings)
    if times is None:
        times = np.linspace(0.0, t_end, 11)
    paths = oracle_simulate(init, t_end, dt, times)
    exact = _positions(traj, paths.times)
    err = np.abs(exact - paths.positions)
    worst = _Worst()

    def witness(k):
        row, col = divmod(k, len(init))
        return {'particle': col, 't': float(paths.times[row]),
                'exact': float(exact[row, col]),
                'oracle': float(paths.positions[row, col]), 'dt': dt}
    worst.offer(err, witness)
    return worst.report('oracle', tol)


def run_check(name, traj, rng=None, settings=SETTINGS, tol=None, order=None,
              panels=None, dt=None, threads=1):
    """
    Run one named check of config.CHECKS on traj
    """
    if name == 'weak-mass':
        report = check_weak(traj, 'mass', order=order, panels=panels,
                            rng=rng, settings=settings, threads=threads)
    elif name == 'weak-momentum':
        report = check_weak(traj, 'momentum', order=order, panels=panels,
                            rng=rng, settings=settings, threads=threads)
    elif name == 'oracle':
        report = compare_oracle(traj.init, horizon(traj), dt=dt,
                                settings=settings)
    elif name in _CHECKERS:
        report = _CHECKERS[name](traj, rng=rng, settings=settings)
    else:
        raise InvalidInputError("unknown check %r" % (name,))
    if tol is not None:
        report.tolerance = tol
    return report


_CHECKERS = {
    'qspp': check_qspp,
    'gap-bound': check_gap_bound,
    'gap-concavity': check_gap_concavity,
    'averaging': check_averaging,
    'oleinik': check_oleinik,
    'energy': check_energy,
    'momentum': check_momentum,
    'order': check_order,
    'flow-equation': check_flow_equation,
    'tower': check_tower,
    'lipschitz-time': check_lipschitz_time,
    'narrow-continuity': check_narrow_continuity,
}


def run_suite(instances, checks, t_end=math.inf, settings=SETTINGS,
              tol=None, order=None, panels=None, dt=None, threads=1):
    """
    Simulate each (seed, ParticleInit) instance to t_end and run the named
    checks on it. Returns one VerificationReport per check holding the
    largest residual over all instances; ties go to the earliest instance.
    """
    instances = list(instances)
    checks = list(checks)
    if not instances:
        raise InvalidInputError("no instances to verify")
    inner = threads if len(instances) == 1 else 1

    def one(item):
        seed, init = item
        traj = simulate(init, t_end, settings)
        reports = []
        for name in checks:
            rng = np.random.default_rng([seed, CHECKS.index(name)])
            reports.append(time_f(run_check, 'sticky-flow.verify.%s' % name,
                                  name, traj, rng=rng, settings=settings,
                                  tol=tol, order=order, panels=panels, dt=dt,
                                  threads=inner))
        return reports

    results = sweep(one, instances, threads)
    suite = []
    for k, name in enumerate(checks):
        best = None
        for (seed, _), reports in zip(instances, results):
            report = reports[k]
            if best is None or report.worst_residual > best.worst_residual:
                best = VerificationReport(
                    name=report.name, worst_residual=report.worst_residual,
                    tolerance=report.tolerance,
                    witness=dict(report.witness, instance=seed))
        best.instances = len(instances)
        if best.passed:
            log.info("%s passed on %d instances (worst %r)", name,
                     len(instances), best.worst_residual)
        else:
            log.warning("%s failed: worst residual %r > %r at %s", name,
                        best.worst_residual, best.tolerance, best.witness)
        suite.append(best)
    return suite
