"""
Exact event-driven sticky particle dynamics on the line.

Clusters move freely between collisions. Only neighbouring clusters can meet
first, so each adjacent pair gets one candidate collision in a heap; entries
whose clusters have since merged are dropped when popped (cluster ids are
never reused, so a dead id is a stale version stamp). When clusters meet at
one point at one time they all merge, conserving mass and momentum.
"""
from dataclasses import dataclass
import heapq
import logging
import math

import numpy as np

from sticky_flow.config import SETTINGS
from sticky_flow.errors import InvalidInputError, TimeRangeError
from sticky_flow.measures import DiscreteMeasure
from sticky_flow.utils import time_f
from sticky_flow.utils.piecewise import PiecewiseLinearFn

log = logging.getLogger('sticky_flow.dynamics')

INF = float('inf')


class ParticleInit(object):
    """
    Masses, positions and velocities of N particles, held in increasing
    position order. Particle index i always means the i-th particle from the
    left; `order[i]` is the row it came from.
    """

    def __init__(self, masses, positions, velocities, mass_tol=None):
        masses = np.array(masses, dtype=float)
        positions = np.array(positions, dtype=float)
        velocities = np.array(velocities, dtype=float)
        if not (masses.ndim == positions.ndim == velocities.ndim == 1):
            raise InvalidInputError("masses, positions and velocities must "
                                    "be flat sequences")
        if not (len(masses) == len(positions) == len(velocities)):
            raise InvalidInputError(
                "masses, positions and velocities differ in length "
                "(%d, %d, %d)" % (len(masses), len(positions),
                                  len(velocities)))
        if len(masses) == 0:
            raise InvalidInputError("no particles")
        for name, arr in (('masses', masses), ('positions', positions),
                          ('velocities', velocities)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError("%s contain NaN or infinite values"
                                        % name)
        if np.any(masses <= 0):
            raise InvalidInputError("masses must be positive")
        if mass_tol is None:
            mass_tol = SETTINGS.mass_sum_tol
        total = float(np.sum(masses))
        if abs(total - 1.0) > mass_tol:
            raise InvalidInputError("masses sum to %r, not 1" % total)
        masses = masses / total
        order = np.argsort(positions, kind='stable')
        positions = positions[order]
        if np.any(np.diff(positions) == 0):
            dup = positions[np.nonzero(np.diff(positions) == 0)[0][0]]
            raise InvalidInputError("duplicate initial position %r" % dup)
        self.masses = masses[order]
        self.positions = positions
        self.velocities = velocities[order]
        self.order = order
        for arr in (self.masses, self.positions, self.velocities, self.order):
            arr.flags.writeable = False

    @classmethod
    def from_rows(cls, rows, mass_tol=None):
        """
        Build from [[m, x, v], ...]
        """
        rows = [tuple(r) for r in rows]
        if any(len(r) != 3 for r in rows):
            raise InvalidInputError("particle rows must be [m, x, v]")
        return cls([r[0] for r in rows], [r[1] for r in rows],
                   [r[2] for r in rows], mass_tol=mass_tol)

    @classmethod
    def random(cls, n, seed, spread=1.0, speed=1.0):
        """
        Seeded instance: random masses normalised to 1, sorted uniform
        positions on [0, spread*n) and normal velocities.
        """
        rng = np.random.default_rng(seed)
        masses = rng.uniform(0.1, 1.0, n)
        masses = masses / masses.sum()
        positions = np.sort(rng.uniform(0.0, spread * n, n))
        while np.any(np.diff(positions) == 0):
            positions = np.sort(rng.uniform(0.0, spread * n, n))
        velocities = rng.normal(0.0, speed, n)
        return cls(masses, positions, velocities)

    def __len__(self):
        return len(self.masses)

    def rows(self):
        return [[float(m), float(x), float(v)] for m, x, v in
                zip(self.masses, self.positions, self.velocities)]

    def measure(self):
        return DiscreteMeasure.from_arrays(self.positions, self.masses,
                                           merge_tol=0.0)

    def momentum(self):
        return float(np.sum(self.masses * self.velocities))

    def energy(self):
        return 0.5 * float(np.sum(self.masses * self.velocities ** 2))

    def __repr__(self):
        return "<ParticleInit N=%d>" % len(self)


@dataclass(frozen=True)
class Cluster(object):
    """
    A maximal group of particles sharing a trajectory between two events.
    Members are the contiguous particle indices lo..hi-1.
    """
    id: int
    lo: int
    hi: int
    mass: float
    position: float
    velocity: float
    born: float
    died: float
    parent: int
    children: tuple

    @property
    def members(self):
        return range(self.lo, self.hi)

    def position_at(self, t):
        return self.position + self.velocity * (t - self.born)


@dataclass(frozen=True)
class Event(object):
    time: float
    position: float
    merged: tuple
    cluster: int


def _eps(tol, value):
    return tol * (1.0 + abs(value))


def simulate(init, t_end, settings=SETTINGS):
    """
    Run the sticky dynamics of init up to t_end (inf runs until no further
    collision is possible) and return the TrajectorySet.
    """
    if t_end is None or math.isnan(t_end) or t_end < 0:
        raise TimeRangeError("t_end must be a nonnegative number, got %r"
                             % (t_end,))
    return time_f(_simulate, 'sticky-flow.simulate', init, float(t_end),
                  settings)


def _simulate(init, t_end, settings):
    n = len(init)
    tol_t = settings.event_time_tol
    tol_x = settings.event_position_tol

    lo = list(range(n))
    hi = list(range(1, n + 1))
    mass = init.masses.tolist()
    x0 = init.positions.tolist()
    vel = init.velocities.tolist()
    t0 = [0.0] * n
    died = [INF] * n
    parent = [-1] * n
    alive = [True] * n
    left = list(range(-1, n - 1))
    right = list(range(1, n)) + [-1]

    def pos(c, t):
        return x0[c] + vel[c] * (t - t0[c])

    def collision(a, b, now):
        # a is the left neighbour of b
        if vel[a] <= vel[b]:
            return None
        ref = t0[a] if t0[a] > t0[b] else t0[b]
        gap = pos(b, ref) - pos(a, ref)
        dt = gap / (vel[a] - vel[b])
        t = ref + (dt if dt > 0 else 0.0)
        return t if t > now else now

    heap = []
    seq = 0

    def schedule(a, b, now):
        if a < 0 or b < 0:
            return
        t = collision(a, b, now)
        if t is None or t > t_end:
            return
        heapq.heappush(heap, (t, pos(a, t), seq, a, b))

    for i in range(n - 1):
        schedule(i, i + 1, 0.0)
        seq += 1

    events = []
    stale = 0
    while heap:
        t, x, _, a, b = heapq.heappop(heap)
        if not (alive[a] and alive[b]):
            stale += 1
            continue
        run = [a, b]
        eps_t = _eps(tol_t, t)
        eps_x = _eps(tol_x, x)
        # pull in neighbours meeting the run at the same time and place
        while left[run[0]] >= 0:
            nb = left[run[0]]
            tc = collision(nb, run[0], t)
            if tc is None or abs(tc - t) > eps_t or \
                    abs(pos(nb, t) - x) > eps_x:
                break
            run.insert(0, nb)
        while right[run[-1]] >= 0:
            nb = right[run[-1]]
            tc = collision(run[-1], nb, t)
            if tc is None or abs(tc - t) > eps_t or \
                    abs(pos(nb, t) - x) > eps_x:
                break
            run.append(nb)

        c = len(mass)
        total = 0.0
        momentum = 0.0
        moment = 0.0
        for k in run:
            total += mass[k]
            momentum += mass[k] * vel[k]
            moment += mass[k] * pos(k, t)
            alive[k] = False
            died[k] = t
            parent[k] = c
        lo.append(lo[run[0]])
        hi.append(hi[run[-1]])
        mass.append(total)
        vel.append(momentum / total)
        x_new = moment / total
        x0.append(x_new)
        t0.append(t)
        died.append(INF)
        parent.append(-1)
        alive.append(True)
        ln, rn = left[run[0]], right[run[-1]]
        left.append(ln)
        right.append(rn)
        if ln >= 0:
            right[ln] = c
        if rn >= 0:
            left[rn] = c
        events.append(Event(time=t, position=x_new, merged=tuple(run),
                            cluster=c))
        log.debug("t=%r x=%r merged clusters %s into %d", t, x_new, run, c)
        schedule(ln, c, t)
        seq += 1
        schedule(c, rn, t)
        seq += 1

    log.info("simulated %d particles to t=%r: %d events, %d stale queue "
             "entries", n, t_end, len(events), stale)
    return TrajectorySet(init, t_end, events, lo, hi, mass, x0, vel, t0,
                         died, parent, settings)


class TrajectorySet(object):
    """
    Result of simulate: the cluster genealogy, from which every trajectory,
    velocity and cluster partition is read off exactly.

    Clusters 0..N-1 are the single particles; later ids are merged clusters
    in order of creation.
    """

    def __init__(self, init, t_end, events, lo, hi, mass, x0, velocity,
                 born, died, parent, settings=SETTINGS):
        self.init = init
        self.t_end = t_end
        self.events = tuple(events)
        self.settings = settings
        self.lo = np.array(lo, dtype=np.int64)
        self.hi = np.array(hi, dtype=np.int64)
        self.mass = np.array(mass, dtype=float)
        self.x0 = np.array(x0, dtype=float)
        self.velocity = np.array(velocity, dtype=float)
        self.born = np.array(born, dtype=float)
        self.died = np.array(died, dtype=float)
        self.parent = np.array(parent, dtype=np.int64)
        for arr in (self.lo, self.hi, self.mass, self.x0, self.velocity,
                    self.born, self.died, self.parent):
            arr.flags.writeable = False
        self.event_times = np.array([e.time for e in self.events],
                                    dtype=float)

    def __len__(self):
        return len(self.init)

    @property
    def n_clusters(self):
        return len(self.mass)

    def __repr__(self):
        return "<TrajectorySet N=%d t_end=%r events=%d>" % (
            len(self), self.t_end, len(self.events))

    def check_time(self, t, side='right'):
        if not (0.0 <= t <= self.t_end) or math.isnan(t):
            raise TimeRangeError("t=%r outside [0, %r]" % (t, self.t_end))
        if side == 'left' and t <= 0:
            raise TimeRangeError("left-sided values need t > 0")
        if side not in ('left', 'right'):
            raise ValueError("side must be 'left' or 'right'")

    def _check_index(self, i):
        if not 0 <= i < len(self):
            raise IndexError("particle index %r out of range" % (i,))

    def cluster_of(self, i, t, side='right'):
        """
        Id of the cluster holding particle i at t (on the given side of t)
        """
        self._check_index(i)
        self.check_time(t, side)
        c = i
        if side == 'right':
            while self.died[c] <= t:
                c = self.parent[c]
        else:
            while self.died[c] < t:
                c = self.parent[c]
        return int(c)

    def cluster(self, c):
        return Cluster(id=int(c), lo=int(self.lo[c]), hi=int(self.hi[c]),
                       mass=float(self.mass[c]), position=float(self.x0[c]),
                       velocity=float(self.velocity[c]),
                       born=float(self.born[c]), died=float(self.died[c]),
                       parent=int(self.parent[c]),
                       children=tuple(self.genealogy().get(int(c), ())))

    def genealogy(self):
        """
        Map of merged cluster id -> ids of the clusters it was formed from
        """
        tree = getattr(self, '_tree', None)
        if tree is None:
            tree = dict((e.cluster, e.merged) for e in self.events)
            self._tree = tree
        return tree

    def position_at(self, i, t):
        c = self.cluster_of(i, t)
        return float(self.x0[c] + self.velocity[c] * (t - self.born[c]))

    def velocity_at(self, i, t, side='right'):
        return float(self.velocity[self.cluster_of(i, t, side)])

    def alive(self, t, side='right'):
        """
        Ids of the clusters present at t, left to right
        """
        self.check_time(t, side)
        if side == 'right':
            mask = (self.born <= t) & (t < self.died)
        else:
            mask = (self.born < t) & (t <= self.died)
        ids = np.nonzero(mask)[0]
        return ids[np.argsort(self.lo[ids], kind='stable')]

    def clusters_at(self, t, side='right'):
        """
        (ids, positions, masses, velocities) of the clusters present at t
        """
        ids = self.alive(t, side)
        positions = self.x0[ids] + self.velocity[ids] * (t - self.born[ids])
        return ids, positions, self.mass[ids], self.velocity[ids]

    def positions(self, t):
        ids, positions, _, _ = self.clusters_at(t)
        return np.repeat(positions, self.hi[ids] - self.lo[ids])

    def velocities(self, t, side='right'):
        ids = self.alive(t, side)
        return np.repeat(self.velocity[ids], self.hi[ids] - self.lo[ids])

    def grouping(self, t, side='right'):
        """
        Cluster id of every particle at t
        """
        ids = self.alive(t, side)
        return np.repeat(ids, self.hi[ids] - self.lo[ids])

    def total_momentum(self, t):
        ids = self.alive(t)
        return float(np.sum(self.mass[ids] * self.velocity[ids]))

    def kinetic_energy(self, t):
        ids = self.alive(t)
        return 0.5 * float(np.sum(self.mass[ids] * self.velocity[ids] ** 2))

    def is_event_time(self, t):
        if len(self.event_times) == 0:
            return False
        eps = _eps(self.settings.event_time_tol, t)
        k = np.searchsorted(self.event_times, t)
        for j in (k - 1, k):
            if 0 <= j < len(self.event_times) and \
                    abs(self.event_times[j] - t) <= eps:
                return True
        return False

    def sample_times(self, rng, count, lo=0.0, hi=None, avoid_events=True):
        """
        count sorted times drawn uniformly from [lo, hi], nudged off the
        event times when avoid_events is set
        """
        if hi is None:
            hi = self.t_end
        if not math.isfinite(hi):
            hi = (self.event_times[-1] + 1.0) if len(self.event_times) \
                else 1.0
        times = np.sort(rng.uniform(lo, hi, count))
        if avoid_events and len(self.event_times):
            nudged = []
            for t in times:
                tries = 0
                while self.is_event_time(t) and tries < 8:
                    step = 8 * _eps(self.settings.event_time_tol, t)
                    t = t + step if t + step <= hi else t - step
                    tries += 1
                nudged.append(t)
            times = np.sort(np.array(nudged))
        return times

    def breakpoints(self, i):
        """
        (t, x) knots of gamma_i on [0, t_end]: the start, every merge the
        particle took part in and t_end itself. A single knot when
        t_end = 0; for an unbounded run the last knot is one time unit
        past the last merge, fixing the final slope.
        """
        self._check_index(i)
        knots = [(0.0, float(self.x0[i]))]
        c = i
        while self.parent[c] >= 0:
            p = self.parent[c]
            t = float(self.born[p])
            if t > self.t_end:
                break
            c = p
            if t == knots[-1][0]:
                knots[-1] = (t, float(self.x0[c]))
            else:
                knots.append((t, float(self.x0[c])))
        end = self.t_end if math.isfinite(self.t_end) else knots[-1][0] + 1.0
        if end > knots[-1][0]:
            knots.append((end, float(self.x0[c] + self.velocity[c] *
                                     (end - self.born[c]))))
        return knots

    def trajectory(self, i):
        """
        gamma_i as a PiecewiseLinearFn in t over breakpoints(i), extended
        one time unit along the final velocity when that is a single knot
        """
        knots = self.breakpoints(i)
        if len(knots) == 1:
            c = self.cluster_of(i, knots[0][0])
            t, x = knots[0]
            knots.append((t + 1.0, x + float(self.velocity[c])))
        return PiecewiseLinearFn(knots)


def position_at(traj, i, t):
    return traj.position_at(i, t)


def velocity_at(traj, i, t, side='right'):
    return traj.velocity_at(i, t, side)


def total_momentum(traj, t):
    return traj.total_momentum(t)


def kinetic_energy(traj, t):
    return traj.kinetic_energy(t)
