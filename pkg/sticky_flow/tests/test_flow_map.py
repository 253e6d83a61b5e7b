import math
import unittest

from hypothesis import given, settings, strategies as st
import numpy as np

from sticky_flow.dynamics import ParticleInit, simulate
from sticky_flow.errors import (AmbiguousTimeError, DomainError,
                                InvalidPartitionError, TimeRangeError)
from sticky_flow.flow_map import (FlowMap, conditional_expectation,
                                  continuity_modulus, flow_equation_residual,
                                  inf_extension, jensen_gap, transition)
from sticky_flow.tests import THIRD, gap_counterexample, single
from sticky_flow.utils.piecewise import PiecewiseLinearFn


class HelperTests(unittest.TestCase):

    def test_inf_extension(self):
        """Lower Lipschitz envelope of the data."""
        out = inf_extension([0.0, 1.0], [0.0, 1.0], 1.0, [-1.0, 0.5, 3.0])
        self.assertEqual([1.0, 0.5, 3.0], out.tolist())

    def test_conditional_expectation(self):
        """Group means, with groups given as index lists or labels."""
        measure = gap_counterexample().measure()
        values = [1.0, 0.0, 1.0]
        expected = [0.5, 0.5, 1.0]
        np.testing.assert_allclose(
            expected, conditional_expectation(measure, values,
                                              [[0, 1], [2]]))
        np.testing.assert_allclose(
            expected, conditional_expectation(measure, values,
                                              np.array([7, 7, 3])))

    def test_bad_partition(self):
        """Groupings that miss or repeat an atom are rejected."""
        measure = gap_counterexample().measure()
        for grouping in ([[0], [2]], [[0, 1], [1, 2]], [[0, 1, 2, 3]],
                         np.array([0, 1])):
            self.assertRaises(InvalidPartitionError, conditional_expectation,
                              measure, [1.0, 0.0, 1.0], grouping)

    def test_jensen_gap(self):
        """Averaging within groups can only lose second moment."""
        gap = jensen_gap(gap_counterexample().measure(), [1.0, 0.0, 1.0], [[0, 1], [2]])
        self.assertAlmostEqual(-1.0 / 6.0, gap, places=14)
        self.assertEqual(0.0, jensen_gap(gap_counterexample().measure(), [1.0, 0.0, 1.0],
                                         [[0], [1], [2]]))

    def test_continuity_modulus(self):
        """The tent 1-|x-1| on [0, 2] varies by r over r <= 1."""
        tent = PiecewiseLinearFn([(0, 1), (1, 0), (2, 1)])
        self.assertEqual(0.0, continuity_modulus(tent, 0.0))
        self.assertAlmostEqual(0.5, continuity_modulus(tent, 0.5),
                               places=14)
        self.assertAlmostEqual(1.0, continuity_modulus(tent, 1.0),
                               places=14)
        self.assertAlmostEqual(1.5, continuity_modulus(tent, 1.5),
                               places=14)
        self.assertEqual(2.0, continuity_modulus(tent, 2.0))
        self.assertEqual(2.0, continuity_modulus(tent, 5.0))
        np.testing.assert_allclose([1.0, 2.0],
                                   continuity_modulus(tent, [1.0, 2.0]))
        self.assertRaises(DomainError, continuity_modulus, tent, -1.0)


class FlowMapTests(unittest.TestCase):

    def setUp(self):
        self.traj = simulate(gap_counterexample(), 3.0)
        self.flow = FlowMap(self.traj)

    def test_eval_off_atoms(self):
        """Between atoms at t = 0 the extension is the identity."""
        self.assertEqual(0.5, self.flow.eval(0.5, 0.0))
        np.testing.assert_allclose([0.25, 1.75],
                                   self.flow.eval_many([0.25, 1.75], 0.0))

    def test_eval_on_atoms(self):
        """On the atoms the flow map is the particle trajectory."""
        np.testing.assert_allclose([1.5, 1.5, 4.0],
                                   self.flow.eval_many([0.0, 1.0, 2.0], 2.0))
        self.assertEqual(4.0, self.flow.eval(2.0, 2.0))

    def test_monotone_on_atoms(self):
        """X(., t) keeps the atom order and the extension is L(t)-Lipschitz."""
        ys = np.linspace(-1.0, 3.0, 81)
        for t in (0.5, 1.0, 2.0, 3.0):
            self.assertTrue(np.all(np.diff(self.flow.at_atoms(t)) >= 0))
            x = self.flow.eval_many(ys, t)
            lip = self.flow.lipschitz_bound(t)
            self.assertTrue(np.all(np.abs(np.diff(x)) <=
                                   lip * np.diff(ys) + 1e-12))

    def test_transition_consistency(self):
        """f_{t,s} carries X(s) on the atoms to X(t)."""
        f = self.flow.transition(0.5, 2.5)
        np.testing.assert_allclose(self.flow.at_atoms(2.5),
                                   f(self.flow.at_atoms(0.5)), atol=1e-14)
        same = self.flow.transition(1.5, 1.5)
        np.testing.assert_allclose(same.sources, same.targets)

    def test_lipschitz_bound(self):
        """The slope bound never exceeds 1 + t max|v0'|."""
        for t in (0.0, 0.5, 2.0):
            self.assertTrue(self.flow.lipschitz_bound(t) <=
                            self.flow.slope_cap(t))
        self.assertEqual(1.0, self.flow.lipschitz_bound(0.0))

    def test_transition(self):
        """f_{1.5,0.5} maps the atoms and stays 3-Lipschitz."""
        f = transition(self.flow, 0.5, 1.5)
        self.assertEqual(3.0, f.lipschitz)
        np.testing.assert_allclose([0.5, 1.0, 2.5], f.sources)
        np.testing.assert_allclose([1.25, 1.25, 3.5], f.targets)
        self.assertAlmostEqual(1.5, f.worst_ratio(), places=14)
        self.assertTrue(f.check())
        self.assertAlmostEqual(1.25, f(1.0), places=14)

    def test_transition_domain(self):
        """s must be positive and no later than t."""
        self.assertRaises(DomainError, self.flow.transition, 0.0, 1.0)
        self.assertRaises(DomainError, self.flow.transition, 2.0, 1.0)
        self.assertRaises(TimeRangeError, self.flow.transition, 1.0, 4.0)

    def test_flow_equation(self):
        """X' equals E[v0 | X] between events."""
        for t in (0.5, 1.5, 2.0, 3.0):
            self.assertTrue(flow_equation_residual(self.flow, t) <= 1e-14)
        self.assertRaises(AmbiguousTimeError,
                          self.flow.flow_equation_residual, 1.0)

    def test_tower(self):
        """Conditioning early velocities on a later partition is exact."""
        self.assertTrue(self.flow.tower_residual(0.5, 2.0) <= 1e-14)
        self.assertRaises(DomainError, self.flow.tower_residual, 2.0, 0.5)

    def test_lipschitz_in_time(self):
        """Before any merge the particles move at full speed."""
        dist, bound = self.flow.lipschitz_in_time(0.0, 1.0)
        self.assertAlmostEqual(math.sqrt(2.0 * THIRD), dist, places=14)
        self.assertAlmostEqual(bound, dist, places=14)
        dist, bound = self.flow.lipschitz_in_time(1.0, 3.0)
        self.assertTrue(dist <= bound)

    def test_extension_modulus(self):
        """Atom gaps grow by no more than t omega(gap)."""
        for t in (0.5, 2.0, 3.0):
            self.assertTrue(self.flow.extension_modulus_residual(t) <= 1e-12)

    def test_single_particle(self):
        """A lone particle has no v0 interpolant and a unit slope cap."""
        flow = FlowMap(simulate(single(1.0), 2.0))
        self.assertIsNone(flow.v0)
        self.assertEqual(2.0, flow.eval(0.0, 2.0))
        self.assertEqual(3.0, flow.eval(1.0, 2.0))
        self.assertEqual(0.0, flow.extension_modulus_residual(2.0))


class RandomFlowTests(unittest.TestCase):

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10 ** 6), n=st.integers(2, 30))
    def test_transition_lipschitz(self, seed, n):
        """Every transition map is t/s-Lipschitz on the atoms."""
        traj = simulate(ParticleInit.random(n, seed), 10.0)
        flow = FlowMap(traj)
        rng = np.random.default_rng(seed)
        s, t = np.sort(rng.uniform(0.01, 10.0, 2))
        self.assertTrue(flow.transition(s, t).check(1e-9))
