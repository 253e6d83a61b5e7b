"""
Probability measures on the line: atomic measures, the continuum specs they
are drawn from, quantile discretization, W1 and moments.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy import stats

from sticky_flow.config import SETTINGS
from sticky_flow.errors import InvalidInputError, InvalidSpecError
from sticky_flow.utils.piecewise import PiecewiseLinearFn

log = logging.getLogger('sticky_flow.measures')

MASS_TOL = 1e-12


class DiscreteMeasure(object):
    """Finitely many weighted atoms, sorted by position.

    Coincident atoms are merged by summing their masses:

    >>> DiscreteMeasure([(0.75, 0.5), (0.25, 0.25), (0.25, 0.25)])
    <DiscreteMeasure (0.25, 0.5) (0.75, 0.5)>
    >>> DiscreteMeasure([(-1, 0.5), (1, 0.5)]).second_moment()
    1.0
    """

    def __init__(self, atoms, merge_tol=None):
        atoms = [tuple(a) for a in atoms]
        if not atoms:
            raise InvalidInputError("a measure needs at least one atom")
        if any(len(a) != 2 for a in atoms):
            raise InvalidInputError("atoms must be (position, mass) pairs")
        positions = np.array([a[0] for a in atoms], dtype=float)
        masses = np.array([a[1] for a in atoms], dtype=float)
        self._setup(positions, masses, merge_tol)

    @classmethod
    def from_arrays(cls, positions, masses, merge_tol=None):
        self = cls.__new__(cls)
        self._setup(np.array(positions, dtype=float),
                    np.array(masses, dtype=float), merge_tol)
        return self

    @classmethod
    def dirac(cls, x):
        return cls([(x, 1.0)])

    def _setup(self, positions, masses, merge_tol):
        if positions.shape != masses.shape or positions.ndim != 1:
            raise InvalidInputError("positions and masses must be 1-d arrays "
                                    "of equal length")
        if len(positions) == 0:
            raise InvalidInputError("a measure needs at least one atom")
        if not (np.all(np.isfinite(positions)) and
                np.all(np.isfinite(masses))):
            raise InvalidInputError("atoms must be finite")
        if np.any(masses <= 0):
            raise InvalidInputError("atom masses must be positive")
        total = float(np.sum(masses))
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidInputError("atom masses sum to %r, not 1" % total)
        if merge_tol is None:
            merge_tol = SETTINGS.atom_merge_tol
        order = np.argsort(positions, kind='stable')
        positions = positions[order]
        masses = masses[order]
        # start a new atom wherever the gap exceeds the coincidence tolerance
        gaps = np.diff(positions)
        scale = np.maximum(1.0, np.abs(positions[1:]))
        starts = np.concatenate(([True], gaps > merge_tol * scale))
        if not np.all(starts):
            groups = np.cumsum(starts) - 1
            merged = np.zeros(groups[-1] + 1)
            np.add.at(merged, groups, masses)
            positions = positions[starts]
            masses = merged
        positions.flags.writeable = False
        masses.flags.writeable = False
        self.positions = positions
        self.masses = masses

    def __len__(self):
        return len(self.positions)

    def __iter__(self):
        return iter(self.atoms())

    def atoms(self):
        return [(float(x), float(m))
                for x, m in zip(self.positions, self.masses)]

    def integrate(self, g):
        """
        Integral of g against the measure; g takes and returns arrays
        """
        return float(np.sum(self.masses * g(self.positions)))

    def mean(self):
        return float(np.sum(self.masses * self.positions))

    def second_moment(self):
        return float(np.sum(self.masses * self.positions ** 2))

    def push_forward(self, f):
        """
        Image measure f_# mu; f maps the position array to new positions
        """
        return DiscreteMeasure.from_arrays(f(self.positions), self.masses)

    def contains(self, y, tol=None):
        """
        True when y is an atom up to the coincidence tolerance
        """
        return self.index_of(y, tol) is not None

    def index_of(self, y, tol=None):
        if tol is None:
            tol = SETTINGS.atom_merge_tol
        k = int(np.searchsorted(self.positions, y))
        for j in (k - 1, k):
            if 0 <= j < len(self) and \
                    abs(self.positions[j] - y) <= tol * max(1.0, abs(y)):
                return j
        return None

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (np.array_equal(self.positions, other.positions) and
                np.array_equal(self.masses, other.masses))

    def __hash__(self):
        return hash((self.positions.tobytes(), self.masses.tobytes()))

    def __repr__(self):
        return "<DiscreteMeasure %s>" % " ".join(
            "(%r, %r)" % a for a in self.atoms())


### Continuum specs

class MeasureSpec(object):
    """
    Input description of an initial measure. Subclasses know their support,
    moments, quantile function and equal-mass block means.
    """
    kind = None

    def support(self):
        raise NotImplementedError

    def contains(self, y):
        lo, hi = self.support()
        return lo <= y <= hi

    def mean(self):
        raise NotImplementedError

    def second_moment(self):
        raise NotImplementedError

    def quantile(self, u):
        raise NotImplementedError

    def block_means(self, n):
        """
        Conditional means of the n equal-mass quantile blocks, ascending
        """
        raise NotImplementedError


@dataclass(frozen=True)
class AtomsSpec(MeasureSpec):
    measure: DiscreteMeasure
    kind = 'atoms'

    def support(self):
        return float(self.measure.positions[0]), float(
            self.measure.positions[-1])

    def contains(self, y):
        return self.measure.contains(y)

    def mean(self):
        return self.measure.mean()

    def second_moment(self):
        return self.measure.second_moment()

    def _cumulative(self):
        cum = np.concatenate(([0.0], np.cumsum(self.measure.masses)))
        cum[-1] = 1.0
        return cum

    def quantile(self, u):
        cum = self._cumulative()
        k = np.searchsorted(cum[1:], np.asarray(u, dtype=float), side='left')
        k = np.minimum(k, len(self.measure) - 1)
        return self.measure.positions[k]

    def block_means(self, n):
        # integral of the quantile function is piecewise linear in u
        cum = self._cumulative()
        first = np.concatenate(([0.0], np.cumsum(self.measure.masses *
                                                 self.measure.positions)))
        edges = np.linspace(0.0, 1.0, n + 1)
        integral = np.interp(edges, cum, first)
        return np.diff(integral) * n


@dataclass(frozen=True)
class UniformSpec(MeasureSpec):
    a: float
    b: float
    kind = 'uniform'

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise InvalidSpecError("uniform bounds must be finite")
        if not self.b > self.a:
            raise InvalidSpecError("uniform(a, b) needs a < b, got (%r, %r)"
                                   % (self.a, self.b))

    def support(self):
        return self.a, self.b

    def mean(self):
        return 0.5 * (self.a + self.b)

    def second_moment(self):
        return (self.a ** 2 + self.a * self.b + self.b ** 2) / 3.0

    def quantile(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)

    def block_means(self, n):
        return self.a + (self.b - self.a) * (np.arange(n) + 0.5) / n


@dataclass(frozen=True)
class TruncatedGaussianSpec(MeasureSpec):
    mean_: float
    sd: float
    a: float
    b: float
    kind = 'truncated-gaussian'

    def __post_init__(self):
        values = (self.mean_, self.sd, self.a, self.b)
        if not all(math.isfinite(v) for v in values):
            raise InvalidSpecError("truncated-gaussian parameters must be "
                                   "finite")
        if self.sd <= 0:
            raise InvalidSpecError("truncated-gaussian needs sd > 0")
        if not self.b > self.a:
            raise InvalidSpecError("truncated-gaussian needs a < b")
        if not math.isfinite(self._log_mass()):
            raise InvalidSpecError("truncation window carries no mass")

    def _standard(self, x):
        return (np.asarray(x, dtype=float) - self.mean_) / self.sd

    def _log_mass(self):
        """
        log of the normal mass of [a, b], from the tail on the far side of
        the mean so windows deep in a tail neither cancel nor underflow
        """
        alpha, beta = float(self._standard(self.a)), \
            float(self._standard(self.b))
        if alpha > 0:
            near, far = stats.norm.logsf(alpha), stats.norm.logsf(beta)
        elif beta < 0:
            near, far = stats.norm.logcdf(beta), stats.norm.logcdf(alpha)
        else:
            return float(np.log(stats.norm.cdf(beta) - stats.norm.cdf(alpha)))
        return float(near + np.log1p(-np.exp(far - near)))

    def _dist(self):
        return stats.truncnorm(self._standard(self.a), self._standard(self.b),
                               loc=self.mean_, scale=self.sd)

    def support(self):
        return self.a, self.b

    def mean(self):
        return float(self._dist().mean())

    def second_moment(self):
        mean, var = self._dist().stats(moments='mv')
        return float(var + mean ** 2)

    def quantile(self, u):
        return self._dist().ppf(np.asarray(u, dtype=float))

    def block_means(self, n):
        edges = self.quantile(np.linspace(0.0, 1.0, n + 1))
        edges[0], edges[-1] = self.a, self.b
        # each block carries mass Z/n of the untruncated normal
        ratio = np.exp(stats.norm.logpdf(self._standard(edges)) -
                       self._log_mass())
        return self.mean_ + self.sd * (ratio[:-1] - ratio[1:]) * n


@dataclass(frozen=True)
class PLDensitySpec(MeasureSpec):
    """
    Density given by knots, zero outside the knot span; normalised on use.
    """
    density: PiecewiseLinearFn
    kind = 'pl-density'

    def __post_init__(self):
        if np.any(self.density.values < 0):
            raise InvalidSpecError("pl-density values must be nonnegative")
        if self._segment_mass().sum() <= 0:
            raise InvalidSpecError("pl-density integrates to zero and cannot "
                                   "be normalised")

    def _segment_mass(self):
        f = self.density.values
        return 0.5 * np.diff(self.density.xs) * (f[:-1] + f[1:])

    def _norm(self):
        return float(self._segment_mass().sum())

    def support(self):
        return self.density.span

    def _first_moment_to(self, x):
        """
        Unnormalised integral of t f(t) from the first knot to x
        """
        xs, f, s = self.density.xs, self.density.values, self.density.slopes
        h = np.diff(xs)
        seg = xs[:-1] * f[:-1] * h + (xs[:-1] * s + f[:-1]) * h ** 2 / 2 + \
            s * h ** 3 / 3
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        x = np.clip(np.asarray(x, dtype=float), xs[0], xs[-1])
        k = np.clip(np.searchsorted(xs, x, side='right') - 1, 0, len(h) - 1)
        tau = x - xs[k]
        xk, fk, sk = xs[k], f[k], s[k]
        return cum[k] + xk * fk * tau + (xk * sk + fk) * tau ** 2 / 2 + \
            sk * tau ** 3 / 3

    def mean(self):
        return float(self._first_moment_to(self.density.xs[-1])) / \
            self._norm()

    def second_moment(self):
        xs, f, s = self.density.xs, self.density.values, self.density.slopes
        h = np.diff(xs)
        x0, f0 = xs[:-1], f[:-1]
        seg = (x0 ** 2 * f0 * h + (x0 ** 2 * s + 2 * x0 * f0) * h ** 2 / 2 +
               (2 * x0 * s + f0) * h ** 3 / 3 + s * h ** 4 / 4)
        return float(seg.sum()) / self._norm()

    def quantile(self, u):
        xs, f, s = self.density.xs, self.density.values, self.density.slopes
        mass = self._segment_mass()
        cum = np.concatenate(([0.0], np.cumsum(mass)))
        target = np.clip(np.asarray(u, dtype=float), 0.0, 1.0) * cum[-1]
        k = np.clip(np.searchsorted(cum, target, side='right') - 1, 0,
                    len(mass) - 1)
        r = target - cum[k]
        fk, sk = f[k], s[k]
        disc = np.sqrt(np.maximum(fk * fk + 2.0 * sk * r, 0.0))
        denom = fk + disc
        safe = np.where(denom > 0, denom, 1.0)
        tau = np.where(denom > 0, 2.0 * r / safe, 0.0)
        return np.minimum(xs[k] + tau, xs[k + 1])

    def block_means(self, n):
        edges = self.quantile(np.linspace(0.0, 1.0, n + 1))
        edges[0], edges[-1] = self.density.xs[0], self.density.xs[-1]
        first = self._first_moment_to(edges)
        return np.diff(first) * n / self._norm()


def discretize(spec, n):
    """
    n equal-mass atoms at the conditional means of the quantile blocks of
    spec. An atomic spec asked for its own atom count comes back unchanged.
    """
    if n < 1:
        raise InvalidInputError("discretize needs n >= 1, got %r" % n)
    if isinstance(spec, AtomsSpec) and n == len(spec.measure):
        return spec.measure
    means = spec.block_means(n)
    log.debug("discretized %s into %d blocks", spec.kind, n)
    return DiscreteMeasure.from_arrays(means, np.full(n, 1.0 / n))


def wasserstein1(a, b):
    """
    Exact 1-d W1 through the CDF difference integral
    """
    return float(stats.wasserstein_distance(a.positions, b.positions,
                                            a.masses, b.masses))


def second_moment(a):
    return a.second_moment()


if __name__ == "__main__":
    import doctest
    doctest.testmod()
