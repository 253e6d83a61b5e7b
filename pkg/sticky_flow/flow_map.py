"""
The Lagrangian flow map X(y, t) of a simulated system: exact on the initial
atoms, extended to the whole line by an inf-convolution, plus transition
maps, conditional expectations and the flow-equation residual.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np

from sticky_flow.errors import (AmbiguousTimeError, DomainError,
                                InvalidInputError, InvalidPartitionError)
from sticky_flow.utils.piecewise import PiecewiseLinearFn

log = logging.getLogger('sticky_flow.flow_map')


def inf_extension(xs, values, lip, ys):
    """
    min_i values_i + lip*|y - xs_i| for every y, with xs sorted
    nondecreasing. O((N + len(ys)) log N).
    """
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    ys = np.asarray(ys, dtype=float)
    below = np.concatenate(([np.inf],
                            np.minimum.accumulate(values - lip * xs)))
    above = np.concatenate((np.minimum.accumulate(
        (values + lip * xs)[::-1])[::-1], [np.inf]))
    k = np.searchsorted(xs, ys, side='right')
    return np.minimum(below[k] + lip * ys, above[k] - lip * ys)


def _labels(grouping, n):
    """
    Normalise a grouping (label per atom, or a sequence of index groups)
    into a label array, checking it partitions range(n)
    """
    groups = list(grouping) if not isinstance(grouping, np.ndarray) \
        else grouping
    if len(groups) and not np.isscalar(groups[0]) and \
            not isinstance(groups, np.ndarray):
        labels = np.full(n, -1, dtype=np.int64)
        for g, members in enumerate(groups):
            for i in members:
                if not 0 <= i < n:
                    raise InvalidPartitionError("atom index %r out of range"
                                                % (i,))
                if labels[i] >= 0:
                    raise InvalidPartitionError("atom %d is in two groups"
                                                % i)
                labels[i] = g
        if np.any(labels < 0):
            missing = np.nonzero(labels < 0)[0].tolist()
            raise InvalidPartitionError("atoms %s are in no group" % missing)
        return labels
    labels = np.asarray(groups)
    if labels.shape != (n,):
        raise InvalidPartitionError("grouping labels %d atoms, measure has %d"
                                    % (len(labels), n))
    return labels


def conditional_expectation(measure, values, grouping):
    """
    Mass-weighted mean of values over the group of each atom
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (len(measure),):
        raise InvalidInputError("values must have one entry per atom")
    labels = _labels(grouping, len(measure))
    _, inverse = np.unique(labels, return_inverse=True)
    inverse = inverse.reshape(-1)
    m = measure.masses
    weight = np.bincount(inverse, weights=m)
    moment = np.bincount(inverse, weights=m * values)
    return (moment / weight)[inverse]


def jensen_gap(measure, values, grouping):
    """
    sum m E[g]^2 - sum m g^2, never positive
    """
    values = np.asarray(values, dtype=float)
    cond = conditional_expectation(measure, values, grouping)
    m = measure.masses
    return float(np.sum(m * cond ** 2) - np.sum(m * values ** 2))


def continuity_modulus(v0, r):
    """
    omega(r): largest variation of v0 over a window of width <= r inside
    the knot span. Accepts a scalar or an array of widths.
    """
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise DomainError("window width must be a finite number >= 0")
    first, last = v0.span
    span = last - first
    total = v0.total_variation(first, last)
    out = np.full(r.shape, total)
    short = r < span
    if np.any(short):
        rs = r[short][:, None]
        knots = v0.xs[None, :]
        # the window integral is piecewise linear in its left end, so its
        # max sits where an end touches a knot
        cand = np.concatenate((np.broadcast_to(knots, (len(rs),
                                                       knots.shape[1])),
                               knots - rs), axis=1)
        cand = np.clip(cand, first, last - rs)
        var = v0.cumulative_variation(cand + rs) - \
            v0.cumulative_variation(cand)
        out[short] = var.max(axis=1)
    if scalar:
        return float(out[0])
    return out


class FlowMap(object):
    """
    X(y, t) over a TrajectorySet. v0 defaults to the piecewise-linear
    interpolant of the initial velocities.
    """

    def __init__(self, traj, v0=None):
        self.traj = traj
        self.measure = traj.init.measure()
        self.atoms = traj.init.positions
        if v0 is None and len(self.atoms) >= 2:
            v0 = PiecewiseLinearFn.from_points(self.atoms,
                                               traj.init.velocities)
        self.v0 = v0

    def __repr__(self):
        return "<FlowMap over %r>" % (self.traj,)

    def at_atoms(self, t):
        return self.traj.positions(t)

    def velocity(self, t):
        """
        X'(t+) on the atoms
        """
        return self.traj.velocities(t)

    def slope_cap(self, t):
        if self.v0 is None:
            return 1.0
        return 1.0 + t * self.v0.max_abs_slope()

    def lipschitz_bound(self, t):
        """
        L(t): largest adjacent-atom slope of X(t), capped by
        1 + t*max|v0'|
        """
        cap = self.slope_cap(t)
        if len(self.atoms) < 2:
            return cap
        x = self.at_atoms(t)
        slopes = np.diff(x) / np.diff(self.atoms)
        return float(min(np.max(slopes), cap))

    def eval(self, y, t):
        return float(self.eval_many([y], t)[0])

    def eval_many(self, ys, t):
        ys = np.asarray(ys, dtype=float)
        x = self.at_atoms(t)
        out = inf_extension(self.atoms, x, self.lipschitz_bound(t), ys)
        for k, y in enumerate(ys):
            j = self.measure.index_of(y)
            if j is not None:
                out[k] = x[j]
        return out

    def transition(self, s, t):
        if s <= 0:
            raise DomainError("transition maps need s > 0, got %r" % s)
        if t < s:
            raise DomainError("transition maps need s <= t, got s=%r t=%r"
                              % (s, t))
        self.traj.check_time(t)
        return TransitionFn(s=float(s), t=float(t),
                            sources=self.at_atoms(s),
                            targets=self.at_atoms(t))

    def flow_equation_residual(self, t):
        """
        max |X'(t) - E[v0 | X(t)]| over the atoms at a time between events
        """
        self.traj.check_time(t)
        if self.traj.is_event_time(t):
            raise AmbiguousTimeError("t=%r is an event time" % t)
        cond = conditional_expectation(self.measure,
                                       self.traj.init.velocities,
                                       self.traj.grouping(t))
        return float(np.max(np.abs(self.velocity(t) - cond)))

    def tower_residual(self, s, t):
        """
        max |E[X'(s+) | X(t)] - X'(t+)|, zero because cluster partitions
        only coarsen
        """
        if s > t:
            raise DomainError("tower property needs s <= t")
        cond = conditional_expectation(self.measure, self.velocity(s),
                                       self.traj.grouping(t))
        return float(np.max(np.abs(cond - self.velocity(t))))

    def lipschitz_in_time(self, s, t):
        """
        (||X(t) - X(s)||_{L2(rho0)}, (t - s) ||v0||_{L2(rho0)})
        """
        m = self.measure.masses
        dist = math.sqrt(float(np.sum(m * (self.at_atoms(t) -
                                           self.at_atoms(s)) ** 2)))
        speed = math.sqrt(float(np.sum(m * self.traj.init.velocities ** 2)))
        return dist, abs(t - s) * speed

    def extension_modulus_residual(self, t, pairs=None):
        """
        max over atom pairs of |X(z,t)-X(y,t)| - |z-y| - t*omega(|z-y|)
        """
        if self.v0 is None or len(self.atoms) < 2:
            return 0.0
        x = self.at_atoms(t)
        if pairs is None:
            i, j = np.triu_indices(len(self.atoms), k=1)
        else:
            i, j = pairs
        width = np.abs(self.atoms[j] - self.atoms[i])
        lhs = np.abs(x[j] - x[i])
        rhs = width + t * continuity_modulus(self.v0, width)
        return float(np.max(lhs - rhs))


@dataclass(frozen=True, eq=False)
class TransitionFn(object):
    """
    f_{t,s}: sends X(y, s) to X(y, t); Lipschitz with constant t/s
    """
    s: float
    t: float
    sources: np.ndarray
    targets: np.ndarray

    @property
    def lipschitz(self):
        return self.t / self.s

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        out = inf_extension(self.sources, self.targets, self.lipschitz,
                            np.atleast_1d(x))
        return float(out[0]) if scalar else out

    def worst_ratio(self):
        """
        Largest |f(a)-f(b)|/|a-b| over the sample points; inf if two
        coincident sources map apart
        """
        src, tgt = self.sources, self.targets
        same = np.diff(src) == 0
        if np.any(np.diff(tgt)[same] != 0):
            return math.inf
        keep = np.concatenate(([True], ~same))
        src, tgt = src[keep], tgt[keep]
        if len(src) < 2:
            return 0.0
        # monotone data: the widest secant slope is an adjacent one
        return float(np.max(np.abs(np.diff(tgt)) / np.diff(src)))

    def check(self, tol=1e-10):
        return self.worst_ratio() <= self.lipschitz + tol


def transition(flow, s, t):
    return flow.transition(s, t)


def flow_equation_residual(flow, t):
    return flow.flow_equation_residual(t)
