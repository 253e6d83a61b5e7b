import math
import unittest

from hypothesis import given, settings, strategies as st
import numpy as np

from sticky_flow.errors import InvalidInputError, InvalidSpecError
from sticky_flow.measures import (AtomsSpec, DiscreteMeasure, PLDensitySpec,
                                  TruncatedGaussianSpec, UniformSpec,
                                  discretize, second_moment, wasserstein1)
from sticky_flow.utils.piecewise import PiecewiseLinearFn


class DiscreteMeasureTests(unittest.TestCase):

    def test_sorted_and_merged(self):
        """Atoms come out sorted with coincident ones merged."""
        mu = DiscreteMeasure([(1.0, 0.25), (0.0, 0.5), (1.0 + 1e-16, 0.25)])
        self.assertEqual([(0.0, 0.5), (1.0, 0.5)], mu.atoms())

    def test_mass_must_sum_to_one(self):
        """Masses off 1 by more than 1e-12 are rejected."""
        self.assertRaises(InvalidInputError, DiscreteMeasure,
                          [(0.0, 0.5), (1.0, 0.4)])

    def test_positive_masses(self):
        """Zero or negative masses are rejected."""
        self.assertRaises(InvalidInputError, DiscreteMeasure,
                          [(0.0, 1.0), (1.0, 0.0)])
        self.assertRaises(InvalidInputError, DiscreteMeasure,
                          [(0.0, 1.5), (1.0, -0.5)])

    def test_empty_and_infinite(self):
        """An empty measure and infinite positions are rejected."""
        self.assertRaises(InvalidInputError, DiscreteMeasure, [])
        self.assertRaises(InvalidInputError, DiscreteMeasure,
                          [(math.inf, 1.0)])

    def test_moments(self):
        """Mean and second moment are atom sums."""
        self.assertEqual(0.0, second_moment(DiscreteMeasure.dirac(0.0)))
        mu = DiscreteMeasure([(-1, 0.5), (1, 0.5)])
        self.assertEqual(1.0, second_moment(mu))
        self.assertEqual(0.0, mu.mean())
        self.assertEqual(1.0, mu.integrate(np.abs))

    def test_push_forward(self):
        """Pushing forward by a map that glues atoms merges them."""
        mu = DiscreteMeasure([(-1, 0.5), (1, 0.5)])
        self.assertEqual(DiscreteMeasure.dirac(1.0), mu.push_forward(np.abs))

    def test_index_of(self):
        """Atoms are found up to the coincidence tolerance."""
        mu = DiscreteMeasure([(0.0, 0.5), (2.0, 0.5)])
        self.assertEqual(1, mu.index_of(2.0))
        self.assertTrue(mu.contains(2.0 + 1e-15))
        self.assertIsNone(mu.index_of(1.0))


class SpecTests(unittest.TestCase):

    def test_uniform_validation(self):
        """uniform(a, b) needs finite a < b."""
        self.assertRaises(InvalidSpecError, UniformSpec, 1.0, 0.0)
        self.assertRaises(InvalidSpecError, UniformSpec, 0.0, math.inf)

    def test_gaussian_validation(self):
        """truncated-gaussian needs sd > 0 and a window with mass."""
        self.assertRaises(InvalidSpecError, TruncatedGaussianSpec,
                          0.0, 0.0, -1.0, 1.0)
        self.assertRaises(InvalidSpecError, TruncatedGaussianSpec,
                          0.0, 1.0, 1e200, 1e201)

    def test_gaussian_far_tail(self):
        """A window deep in either tail keeps its mass."""
        TruncatedGaussianSpec(0.0, 1.0, 40.0, 41.0)
        for a, b in ((9.0, 10.0), (-10.0, -9.0)):
            spec = TruncatedGaussianSpec(0.0, 1.0, a, b)
            means = spec.block_means(4)
            self.assertTrue(np.all(np.diff(means) > 0))
            self.assertTrue(a < means[0] and means[-1] < b)
            self.assertTrue(abs(spec.mean() - means.mean()) <= 1e-9)

    def test_pl_density_validation(self):
        """A density that is negative or integrates to 0 is rejected."""
        self.assertRaises(InvalidSpecError, PLDensitySpec,
                          PiecewiseLinearFn([(0, 0), (1, 0)]))
        self.assertRaises(InvalidSpecError, PLDensitySpec,
                          PiecewiseLinearFn([(0, -1), (1, 2)]))

    def test_pl_density_moments(self):
        """f(x) = 2x on [0, 1] has mean 2/3 and second moment 1/2."""
        spec = PLDensitySpec(PiecewiseLinearFn([(0, 0), (1, 2)]))
        self.assertAlmostEqual(2.0 / 3.0, spec.mean(), places=14)
        self.assertAlmostEqual(0.5, spec.second_moment(), places=14)
        self.assertAlmostEqual(math.sqrt(0.5), float(spec.quantile(0.5)),
                               places=14)

    def test_gaussian_moments(self):
        """A symmetric window keeps the mean."""
        spec = TruncatedGaussianSpec(1.0, 2.0, -3.0, 5.0)
        self.assertAlmostEqual(1.0, spec.mean(), places=12)
        self.assertTrue(spec.contains(0.0))
        self.assertFalse(spec.contains(6.0))


class DiscretizeTests(unittest.TestCase):

    def test_uniform_halves(self):
        """uniform(0,1) in two blocks sits at 0.25 and 0.75."""
        mu = discretize(UniformSpec(0.0, 1.0), 2)
        self.assertEqual([(0.25, 0.5), (0.75, 0.5)], mu.atoms())
        self.assertEqual(0.3125, second_moment(mu))

    def test_atoms_identity(self):
        """An atomic spec at its own atom count comes back unchanged."""
        mu = DiscreteMeasure([(0.0, 0.2), (1.0, 0.3), (3.0, 0.5)])
        self.assertEqual(mu, discretize(AtomsSpec(mu), 3))

    def test_atoms_refined(self):
        """Refining equal atoms splits blocks that merge back."""
        mu = DiscreteMeasure([(0.0, 0.25), (1.0, 0.25), (2.0, 0.25),
                              (3.0, 0.25)])
        fine = discretize(AtomsSpec(mu), 8)
        self.assertEqual(4, len(fine))
        np.testing.assert_allclose(fine.positions, mu.positions, atol=1e-14)

    def test_uniform_second_moment(self):
        """Block means of uniform(0,1) have second moment 1/3 - 1/(12 n^2)."""
        for n in (1, 10, 100):
            self.assertAlmostEqual(1.0 / 3.0 - 1.0 / (12.0 * n * n),
                                   second_moment(discretize(
                                       UniformSpec(0.0, 1.0), n)),
                                   places=12)

    def test_second_moment_from_below(self):
        """Uniform second moments increase towards the continuum value."""
        spec = UniformSpec(-1.0, 3.0)
        values = [second_moment(discretize(spec, n)) for n in (2, 4, 8, 16)]
        self.assertEqual(values, sorted(values))
        self.assertTrue(values[-1] < spec.second_moment())

    def test_means_preserved(self):
        """Block means keep the mean of every kind of spec."""
        specs = [UniformSpec(-2.0, 5.0),
                 TruncatedGaussianSpec(0.5, 1.5, -1.0, 4.0),
                 PLDensitySpec(PiecewiseLinearFn([(0, 0), (1, 2), (3, 0)]))]
        for spec in specs:
            for n in (1, 7, 50):
                self.assertAlmostEqual(spec.mean(),
                                       discretize(spec, n).mean(), places=10)

    def test_pl_density_blocks(self):
        """Conditional means of the two halves of f(x) = 2x."""
        spec = PLDensitySpec(PiecewiseLinearFn([(0, 0), (1, 2)]))
        m = math.sqrt(0.5) ** 3
        mu = discretize(spec, 2)
        self.assertAlmostEqual(4.0 / 3.0 * m, mu.positions[0], places=12)
        self.assertAlmostEqual(4.0 / 3.0 * (1.0 - m), mu.positions[1],
                               places=12)

    def test_needs_positive_n(self):
        """n must be at least 1."""
        self.assertRaises(InvalidInputError, discretize,
                          UniformSpec(0.0, 1.0), 0)

    @settings(max_examples=50, deadline=None)
    @given(a=st.floats(-100, 100), width=st.floats(0.01, 100),
           n=st.integers(1, 300))
    def test_uniform_mass_and_mean(self, a, width, n):
        """Any uniform discretization has mass 1 and the exact mean."""
        spec = UniformSpec(a, a + width)
        mu = discretize(spec, n)
        self.assertAlmostEqual(1.0, float(mu.masses.sum()), places=12)
        self.assertTrue(abs(mu.mean() - spec.mean()) <=
                        1e-10 * (1.0 + abs(a) + width))


class WassersteinTests(unittest.TestCase):

    def test_diracs(self):
        """W1 between two Diracs is their distance."""
        self.assertEqual(1.0, wasserstein1(DiscreteMeasure.dirac(0.0),
                                           DiscreteMeasure.dirac(1.0)))

    def test_identity_and_symmetry(self):
        """W1(mu, mu) = 0 and W1 is symmetric."""
        mu = discretize(UniformSpec(0.0, 1.0), 10)
        nu = discretize(UniformSpec(0.0, 2.0), 7)
        self.assertEqual(0.0, wasserstein1(mu, mu))
        self.assertAlmostEqual(wasserstein1(mu, nu), wasserstein1(nu, mu),
                               places=14)

    def test_shift(self):
        """Shifting every atom by h moves the measure by exactly h."""
        mu = discretize(UniformSpec(0.0, 1.0), 20)
        shifted = mu.push_forward(lambda x: x + 0.125)
        self.assertAlmostEqual(0.125, wasserstein1(mu, shifted), places=14)

    def test_refinement_nonincreasing(self):
        """W1 between consecutive dyadic levels does not grow."""
        for spec in (UniformSpec(0.0, 1.0),
                     TruncatedGaussianSpec(0.0, 1.0, -2.0, 2.0)):
            values = [wasserstein1(discretize(spec, n),
                                   discretize(spec, 2 * n))
                      for n in (2, 4, 8, 16, 32, 64, 128)]
            for a, b in zip(values, values[1:]):
                self.assertTrue(b <= a + 1e-15)
