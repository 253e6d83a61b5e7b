# -*- coding=UTF-8
"""
Sticky Flow settings

Tolerances and defaults live here, each with a description, so the CLI help
and the reports show the same numbers the code uses.
"""
import os
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

FORMAT = "sticky-flow/1"

CHECKS = (
    'qspp', 'gap-bound', 'gap-concavity', 'averaging', 'oleinik', 'energy',
    'momentum', 'order', 'flow-equation', 'tower', 'lipschitz-time',
    'narrow-continuity', 'weak-mass', 'weak-momentum', 'oracle',
)

DEFAULT_CHECKS = (
    'qspp', 'gap-bound', 'gap-concavity', 'averaging', 'oleinik', 'energy',
    'momentum', 'order', 'flow-equation',
)


class Settings(BaseModel):
    """
    Numerical settings shared by every module. A single frozen instance,
    SETTINGS, is used unless a caller passes its own.
    """
    model_config = ConfigDict(frozen=True, extra='forbid')

    event_time_tol: float = Field(
        1e-12, gt=0,
        description="Relative tolerance for merging events in time: two "
                    "collisions closer than tol*(1+t) are simultaneous")
    event_position_tol: float = Field(
        1e-12, gt=0,
        description="Relative tolerance for coincident collision points: "
                    "tol*(1+|x|)")
    atom_merge_tol: float = Field(
        1e-14, gt=0,
        description="Atoms closer than tol*max(1,|x|) are merged when a "
                    "DiscreteMeasure is built")
    mass_sum_tol: float = Field(
        1e-9, gt=0,
        description="How far particle masses read from a file may sum away "
                    "from 1")
    check_tol: float = Field(
        1e-10, gt=0,
        description="Tolerance for the estimate checks (qspp, gap bounds, "
                    "averaging, Oleinik, tower)")
    conservation_tol: float = Field(
        1e-12, gt=0,
        description="Tolerance for momentum drift (relative to 1+|p0|) and "
                    "energy increase")
    flow_equation_tol: float = Field(
        1e-12, gt=0,
        description="Tolerance for the flow-equation residual")
    weak_form_tol: float = Field(
        1e-8, gt=0,
        description="Tolerance for the weak-form residuals")
    oracle_tol: float = Field(
        1e-3, gt=0,
        description="Sup-norm tolerance between event-driven and time-stepped "
                    "positions")
    oracle_dt: float = Field(
        1e-5, gt=0, description="Default step of the time-stepping oracle")
    time_samples: int = Field(
        50, gt=0, description="Random sample times per instance and check")
    pair_scan_limit: int = Field(
        200, gt=1,
        description="Up to this many particles every pair is checked; above "
                    "it random pairs are drawn")
    random_pairs: int = Field(
        10000, gt=0, description="Random pairs drawn above pair_scan_limit")
    quadrature_order: int = Field(
        12, gt=0, description="Gauss-Legendre order for time integrals")
    quadrature_panels: int = Field(
        16, gt=0,
        description="Minimum equal panels per smooth piece of a cluster "
                    "lifetime in the weak-form time integral; twice this "
                    "many per time scale of the test function")
    test_functions: int = Field(
        10, gt=0, description="Random bump test functions per weak-form check")
    growth_factor: float = Field(
        2.0, gt=1,
        description="A convergence study fails hard when the flow-map "
                    "difference grows by more than this at the finest pair")
    grid_size: int = Field(
        64, gt=0, description="Quantile grid points of a convergence study")


SETTINGS = Settings()


def default_threads():
    return os.cpu_count() or 1


class RunConfig(BaseModel):
    """
    Everything a CLI run needs, validated before any computation starts.
    Unknown keys are rejected.
    """
    model_config = ConfigDict(frozen=True, extra='forbid')

    command: Literal['simulate', 'flow', 'verify', 'converge',
                     'weak-residual', 'discretize']
    input: Optional[str] = Field(
        None, description="Particle file ('-' for stdin)")
    spec: Optional[str] = Field(None, description="MeasureSpec file")
    v0: Optional[str] = Field(None, description="Initial velocity knots file")
    output: Optional[str] = Field(
        None, description="Output path, stdout when omitted")
    output_format: Literal['json', 'csv'] = 'json'
    t_end: Optional[float] = Field(None, ge=0)
    seed: int = Field(0, ge=0)
    n: Optional[int] = Field(None, gt=0)
    instances: int = Field(1, gt=0)
    checks: List[str] = Field(default_factory=lambda: list(DEFAULT_CHECKS))
    tol: Optional[float] = Field(None, gt=0)
    order: int = Field(SETTINGS.quadrature_order, gt=0)
    panels: int = Field(SETTINGS.quadrature_panels, gt=0)
    levels: List[int] = Field(default_factory=list)
    times: List[float] = Field(default_factory=list)
    ys: List[float] = Field(default_factory=list)
    dt: float = Field(SETTINGS.oracle_dt, gt=0)
    threads: int = Field(default_factory=default_threads, gt=0)
    verbose: bool = False

    @model_validator(mode='after')
    def _check_command(self):
        unknown = [c for c in self.checks if c not in CHECKS]
        if unknown:
            raise ValueError("unknown checks: {}".format(", ".join(unknown)))
        needs_input = ('simulate', 'flow', 'weak-residual')
        if self.command in needs_input and self.input is None:
            raise ValueError("{} needs --input".format(self.command))
        if self.command in ('simulate', 'flow', 'weak-residual') \
                and self.t_end is None:
            raise ValueError("{} needs --t-end".format(self.command))
        if self.command == 'verify' and self.input is None and self.n is None:
            raise ValueError("verify needs --input or --n")
        if self.command == 'converge':
            if self.spec is None or self.v0 is None:
                raise ValueError("converge needs --spec and --v0")
            if len(self.levels) < 2:
                raise ValueError("converge needs at least two --levels")
            if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
                raise ValueError("--levels must be strictly increasing")
            if not self.times:
                raise ValueError("converge needs --times")
        if self.command == 'discretize' and (self.spec is None or
                                             self.n is None):
            raise ValueError("discretize needs --spec and --n")
        return self
