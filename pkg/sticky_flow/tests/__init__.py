import os
import unittest

from sticky_flow.dynamics import ParticleInit

FIXTURES = os.path.join(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__))), 'fixtures')

THIRD = 1.0 / 3.0


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def gap_counterexample():
    """Three equal masses at 0, 1, 2 moving with velocities 1, 0, 1."""
    return ParticleInit([THIRD] * 3, [0.0, 1.0, 2.0], [1.0, 0.0, 1.0])


def symmetric_triple():
    return ParticleInit([THIRD] * 3, [-1.0, 0.0, 1.0], [1.0, 0.0, -1.0])


def single(v=0.7):
    return ParticleInit([1.0], [0.0], [v])


def slow(test):
    """Timing checks run only with STICKY_FLOW_SLOW=1 in the environment."""
    skip = unittest.skipUnless(os.environ.get("STICKY_FLOW_SLOW"),
                               "set STICKY_FLOW_SLOW=1 for timing checks")
    return skip(test)
