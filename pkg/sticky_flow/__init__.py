"""
Exact event-driven simulation of one-dimensional sticky particles, the
Lagrangian flow map and weak solution they induce, and a harness that checks
the estimates they satisfy.
"""
VERSION = "0.1.0"

from sticky_flow.dynamics import ParticleInit, TrajectorySet, simulate
from sticky_flow.flow_map import FlowMap
from sticky_flow.measures import DiscreteMeasure, discretize, wasserstein1
from sticky_flow.weak_solution import TestFunction, WeakSolutionView

__all__ = ['VERSION', 'DiscreteMeasure', 'FlowMap', 'ParticleInit',
           'TestFunction', 'TrajectorySet', 'WeakSolutionView', 'discretize',
           'simulate', 'wasserstein1']
