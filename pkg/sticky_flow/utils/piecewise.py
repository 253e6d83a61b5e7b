"""
piecewise.py - continuous piecewise-linear functions on the real line

Used for the initial velocity v0 and for the per-particle trajectories.
Beyond the extreme knots the first and last segments are extended with their
own slopes, so evaluation is continuous everywhere.
"""
import numpy as np

from sticky_flow.errors import InvalidInputError


class PiecewiseLinearFn(object):
    """Knots-and-slopes representation of a continuous piecewise-linear map.

    >>> f = PiecewiseLinearFn([(0, 1), (1, 0), (2, 1)])
    >>> f
    <PiecewiseLinearFn (0.0, 1.0) (1.0, 0.0) (2.0, 1.0)>
    >>> f(0.5)
    0.5
    >>> f(3.0)
    2.0
    >>> f.total_variation(0, 2)
    2.0
    """

    def __init__(self, knots):
        knots = [tuple(k) for k in knots]
        if len(knots) < 2:
            raise InvalidInputError("a piecewise-linear function needs at "
                                    "least 2 knots, got %d" % len(knots))
        if any(len(k) != 2 for k in knots):
            raise InvalidInputError("knots must be (x, value) pairs")
        xs = np.array([k[0] for k in knots], dtype=float)
        values = np.array([k[1] for k in knots], dtype=float)
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(values))):
            raise InvalidInputError("knots must be finite")
        if np.any(np.diff(xs) <= 0):
            raise InvalidInputError("knot positions must be strictly "
                                    "increasing")
        xs.flags.writeable = False
        values.flags.writeable = False
        self.xs = xs
        self.values = values
        slopes = np.diff(values) / np.diff(xs)
        slopes.flags.writeable = False
        self.slopes = slopes
        # cumulative variation at each knot, measured from the first one
        self._variation = np.concatenate(([0.0],
                                          np.cumsum(np.abs(np.diff(values)))))

    @classmethod
    def from_points(cls, xs, values):
        return cls(zip(xs, values))

    @classmethod
    def constant(cls, value, a=0.0, b=1.0):
        return cls([(a, value), (b, value)])

    def __call__(self, x):
        scalar = np.ndim(x) == 0
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.xs, self.values)
        left = x < self.xs[0]
        right = x > self.xs[-1]
        out = np.where(left, self.values[0] + self.slopes[0] *
                       (x - self.xs[0]), out)
        out = np.where(right, self.values[-1] + self.slopes[-1] *
                       (x - self.xs[-1]), out)
        if scalar:
            return float(out)
        return out

    def slope_at(self, x, side='right'):
        """
        One-sided derivative at x
        """
        if side == 'right':
            k = np.searchsorted(self.xs, x, side='right') - 1
        elif side == 'left':
            k = np.searchsorted(self.xs, x, side='left') - 1
        else:
            raise ValueError("side must be 'left' or 'right'")
        k = min(max(k, 0), len(self.slopes) - 1)
        return float(self.slopes[k])

    @property
    def span(self):
        return float(self.xs[0]), float(self.xs[-1])

    def max_abs_slope(self):
        return float(np.max(np.abs(self.slopes)))

    def cumulative_variation(self, x):
        """
        G(x) = integral of |f'| from the first knot to x (negative to the
        left of it), exact for the extended function.
        """
        x = np.asarray(x, dtype=float)
        inner = np.interp(x, self.xs, self._variation)
        out = np.where(x < self.xs[0],
                       -abs(self.slopes[0]) * (self.xs[0] - x), inner)
        out = np.where(x > self.xs[-1], self._variation[-1] +
                       abs(self.slopes[-1]) * (x - self.xs[-1]), out)
        if out.ndim == 0:
            return float(out)
        return out

    def total_variation(self, a, b):
        """
        Total variation of the restriction to [a, b]
        """
        if b < a:
            a, b = b, a
        return self.cumulative_variation(b) - self.cumulative_variation(a)

    def interpolates(self, xs, values, tol=1e-12):
        """
        True when f(x_i) == values_i up to tol*(1+|values_i|)
        """
        values = np.asarray(values, dtype=float)
        got = self(np.asarray(xs, dtype=float))
        return bool(np.all(np.abs(got - values) <=
                           tol * (1.0 + np.abs(values))))

    def knots(self):
        return [(float(x), float(v)) for x, v in zip(self.xs, self.values)]

    def __eq__(self, other):
        if not isinstance(other, PiecewiseLinearFn):
            return NotImplemented
        return (np.array_equal(self.xs, other.xs) and
                np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.xs.tobytes(), self.values.tobytes()))

    def __repr__(self):
        return "<PiecewiseLinearFn %s>" % " ".join(
            "(%r, %r)" % k for k in self.knots())


if __name__ == "__main__":
    import doctest
    doctest.testmod()
