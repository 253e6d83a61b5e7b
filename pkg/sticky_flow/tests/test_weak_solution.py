import math
import unittest

import numpy as np

from sticky_flow.dynamics import ParticleInit, simulate
from sticky_flow.errors import DomainError, InvalidInputError, TimeRangeError
from sticky_flow.measures import DiscreteMeasure
from sticky_flow.tests import THIRD, gap_counterexample, single, symmetric_triple
from sticky_flow.weak_solution import (TestFunction, WeakSolutionView,
                                       energy_profile, measure_at,
                                       oleinik_residual, velocity_field_at,
                                       weak_form_residual)


class TestFunctionTests(unittest.TestCase):

    def test_centred_vanishes_at_ends(self):
        """A centred bump is 0 at t = 0 and t = T and 1 in the middle."""
        phi = TestFunction(horizon=2.0, center=1.0, radius=1.0)
        self.assertEqual(0.0, float(phi(1.0, 0.0)))
        self.assertEqual(0.0, float(phi(1.0, 2.0)))
        self.assertEqual(1.0, float(phi(1.0, 1.0)))
        self.assertEqual(0.0, float(phi(2.5, 1.0)))

    def test_anchored(self):
        """An anchored bump starts at 1 and dies at T."""
        phi = TestFunction(horizon=2.0, anchored=True)
        self.assertEqual(1.0, float(phi(123.0, 0.0)))
        self.assertEqual(0.0, float(phi(0.0, 2.0)))
        self.assertEqual((-math.inf, math.inf), phi.spatial_support)
        self.assertEqual(0.0, float(phi.dx(5.0, 1.0)))

    def test_derivatives(self):
        """Analytic partials agree with central differences."""
        phi = TestFunction(horizon=3.0, center=0.5, radius=2.0)
        h = 1e-6
        for x, t in ((0.1, 1.0), (1.2, 2.1), (-0.7, 0.6)):
            dt = (phi(x, t + h) - phi(x, t - h)) / (2 * h)
            dx = (phi(x + h, t) - phi(x - h, t)) / (2 * h)
            self.assertAlmostEqual(float(dt), float(phi.dt(x, t)), places=6)
            self.assertAlmostEqual(float(dx), float(phi.dx(x, t)), places=6)

    def test_validation(self):
        """Horizon and radius must be positive and finite."""
        self.assertRaises(InvalidInputError, TestFunction, 0.0)
        self.assertRaises(InvalidInputError, TestFunction, math.inf)
        self.assertRaises(InvalidInputError, TestFunction, 1.0, 0.0, -1.0)

    def test_random(self):
        """Random bumps sit inside the support and the time window."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            phi = TestFunction.random(rng, (-1.0, 4.0), 2.0)
            self.assertTrue(-1.0 <= phi.center <= 4.0)
            self.assertTrue(0.5 <= phi.horizon <= 2.0)
            self.assertTrue(phi.radius > 0)


class EulerianTests(unittest.TestCase):

    def setUp(self):
        self.view = WeakSolutionView(simulate(gap_counterexample(), 3.0))

    def test_measure_at(self):
        """rho_2 carries the merged pair and the free particle."""
        mu = measure_at(self.view, 2.0)
        self.assertEqual(2, len(mu))
        np.testing.assert_allclose([1.5, 4.0], mu.positions)
        np.testing.assert_allclose([2.0 * THIRD, THIRD], mu.masses)
        self.assertEqual(self.view.initial, self.view.measure_at(0.0))

    def test_full_merge_measure(self):
        """After the triple collision rho_t is a single Dirac mass."""
        view = WeakSolutionView(simulate(symmetric_triple(), 3.0))
        self.assertEqual(DiscreteMeasure.dirac(0.0), view.measure_at(2.0))

    def test_unit_mass(self):
        """rho_t has mass 1 at every time."""
        for t in (0.0, 0.5, 1.0, 2.0, 3.0):
            self.assertAlmostEqual(1.0, float(self.view.measure_at(t)
                                              .masses.sum()), places=15)

    def test_velocity_field(self):
        """v is the cluster velocity on the atoms and 0 elsewhere."""
        self.assertAlmostEqual(0.5, velocity_field_at(self.view, 2.0, 1.5),
                               places=14)
        self.assertEqual(1.0, self.view.velocity_field_at(2.0, 4.0))
        self.assertEqual(0.0, self.view.velocity_field_at(2.0, 3.0))

    def test_range(self):
        """Times past t_end are rejected."""
        self.assertRaises(TimeRangeError, self.view.measure_at, 3.5)

    def test_momentum(self):
        """int v d rho_t stays at the initial momentum."""
        for t in (0.0, 1.0, 2.5):
            self.assertAlmostEqual(2.0 * THIRD, self.view.momentum_at(t),
                                   places=14)

    def test_energy_profile(self):
        """Kinetic energy drops from 1/3 to 1/4 at the collision."""
        values = energy_profile(self.view, (0.5, 2.0))
        self.assertAlmostEqual(THIRD, values[0], places=14)
        self.assertAlmostEqual(0.25, values[1], places=14)

    def test_energy_after_full_merge(self):
        """A single final cluster keeps half the squared momentum."""
        init = ParticleInit([0.25, 0.75], [0.0, 1.0], [2.0, 0.0])
        view = WeakSolutionView(simulate(init, math.inf))
        p0 = init.momentum()
        self.assertAlmostEqual(0.5 * p0 * p0,
                               view.energy_profile([5.0])[0], places=14)

    def test_single_particle_energy(self):
        """A free particle keeps its energy."""
        view = WeakSolutionView(simulate(single(0.6), 5.0))
        for e in view.energy_profile([0, 2.5, 5]):
            self.assertAlmostEqual(0.18, e, places=15)


class OleinikTests(unittest.TestCase):

    def test_three_particles(self):
        """At t = 2 the only cluster pair satisfies the entropy bound."""
        view = WeakSolutionView(simulate(gap_counterexample(), 3.0))
        self.assertAlmostEqual(-1.875, oleinik_residual(view, 2.0),
                               places=14)

    def test_single_cluster(self):
        """Fewer than two clusters gives 0."""
        view = WeakSolutionView(simulate(symmetric_triple(), 3.0))
        self.assertEqual(0.0, view.oleinik_residual(2.0))

    def test_domain(self):
        """t = 0 is outside the domain of the inequality."""
        view = WeakSolutionView(simulate(gap_counterexample(), 3.0))
        self.assertRaises(DomainError, view.oleinik_residual, 0.0)

    def test_random_instances(self):
        """Seeded N = 50 instances satisfy the bound at t = 0.1, 1, 10."""
        for seed in range(5):
            view = WeakSolutionView(simulate(ParticleInit.random(50, seed),
                                             10.0))
            for t in (0.1, 1.0, 10.0):
                self.assertTrue(view.oleinik_residual(t, chunk=7) <= 1e-10)

    def test_explicit_pairs(self):
        """Restricting to a pair list gives the same value on that pair."""
        view = WeakSolutionView(simulate(gap_counterexample(), 3.0))
        self.assertEqual(view.oleinik_residual(2.0),
                         view.oleinik_residual(2.0, pairs=([0], [1])))


class WeakFormTests(unittest.TestCase):

    def test_free_particle(self):
        """The chain rule is exact in free flight, leaving only quadrature."""
        view = WeakSolutionView(simulate(single(0.8), 4.0))
        for phi in (TestFunction(4.0, 1.0, 2.0),
                    TestFunction(3.0, 0.0, 1.5, anchored=True)):
            for which in ('mass', 'momentum'):
                self.assertTrue(view.weak_form_residual(phi, which, 10)
                                <= 1e-10)

    def test_narrow_bumps(self):
        """Bumps crossed in a fraction of their horizon still resolve."""
        view = WeakSolutionView(simulate(single(2.0), 2.0))
        for phi in (TestFunction(2.0, 1.0, 0.3),
                    TestFunction(1.0, 0.5, 0.25, anchored=True)):
            for which in ('mass', 'momentum'):
                for order in (10, 12):
                    self.assertTrue(view.weak_form_residual(phi, which, order)
                                    <= 1e-10)

    def test_constant_in_space(self):
        """eta(t) alone integrates eta' + eta(0) = 0."""
        view = WeakSolutionView(simulate(gap_counterexample(), 3.0))
        phi = TestFunction(horizon=3.0, anchored=True)
        self.assertTrue(view.weak_form_residual(phi, 'mass') <= 1e-10)

    def test_three_particles(self):
        """Both identities hold on the two-cluster run at order 12."""
        view = WeakSolutionView(simulate(gap_counterexample(), 3.0))
        phi = TestFunction(horizon=3.0, center=2.0, radius=3.0)
        for which in ('mass', 'momentum'):
            coarse = weak_form_residual(view, phi, which, 12)
            fine = weak_form_residual(view, phi, which, 24)
            self.assertTrue(coarse <= 1e-8)
            self.assertTrue(fine <= coarse / 10 or fine <= 1e-12)

    def test_order_doubling(self):
        """Doubling the order from 12 to 24 gains a factor of 10 or more."""
        view = WeakSolutionView(simulate(gap_counterexample(), 3.0))
        rng = np.random.default_rng(6)
        for _ in range(10):
            phi = TestFunction.random(rng, (-1.0, 5.0), 3.0)
            for which in ('mass', 'momentum'):
                coarse = view.weak_form_residual(phi, which, 12)
                fine = view.weak_form_residual(phi, which, 24)
                self.assertTrue(coarse <= 1e-8, (phi, which, coarse))
                self.assertTrue(fine <= coarse / 10 or fine <= 1e-12,
                                (phi, which, coarse, fine))

    def test_anchored_momentum(self):
        """The initial momentum term is picked up by an anchored bump."""
        view = WeakSolutionView(simulate(symmetric_triple(), 2.0))
        phi = TestFunction(horizon=2.0, center=0.0, radius=2.5,
                           anchored=True)
        self.assertTrue(view.weak_form_residual(phi, 'momentum', 16) <= 1e-8)
        self.assertTrue(view.weak_form_residual(phi, 'mass', 16) <= 1e-8)

    def test_errors(self):
        """Bad identity names and horizons past t_end are rejected."""
        view = WeakSolutionView(simulate(gap_counterexample(), 3.0))
        self.assertRaises(InvalidInputError, view.weak_form_residual,
                          TestFunction(2.0), 'energy')
        self.assertRaises(TimeRangeError, view.weak_form_residual,
                          TestFunction(4.0), 'mass')


class ContinuityTests(unittest.TestCase):

    def test_time_continuity(self):
        """rho_t moves in W1 no faster than the mean initial speed."""
        view = WeakSolutionView(simulate(gap_counterexample(), 3.0))
        self.assertTrue(view.time_continuity_residual(
            np.linspace(0.0, 3.0, 13)) <= 1e-12)
        self.assertEqual(0.0, view.time_continuity_residual([1.0]))

    def test_narrow_continuity(self):
        """Dyadic grids on a run to full merge."""
        view = WeakSolutionView(simulate(ParticleInit.random(15, 4),
                                         math.inf))
        self.assertTrue(view.narrow_continuity_residual(levels=5) <= 1e-12)
