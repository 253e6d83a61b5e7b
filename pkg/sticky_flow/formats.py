"""
JSON and CSV documents read and written by the command line.

Every document carries "format": "sticky-flow/1". Input documents are
validated with pydantic; unknown keys are rejected and any parse or
validation failure is raised as a FormatError.
"""
import csv
import io
import json
import logging
import math
import sys
from typing import Annotated, List, Literal, Optional, Tuple, Union

from pydantic import (BaseModel, ConfigDict, Field, TypeAdapter,
                      ValidationError)

from sticky_flow.config import FORMAT, SETTINGS
from sticky_flow.dynamics import ParticleInit
from sticky_flow.errors import FormatError
from sticky_flow.measures import (AtomsSpec, DiscreteMeasure, PLDensitySpec,
                                  TruncatedGaussianSpec, UniformSpec)
from sticky_flow.utils.piecewise import PiecewiseLinearFn

log = logging.getLogger('sticky_flow.formats')

Format = Literal["sticky-flow/1"]


class _Document(BaseModel):
    model_config = ConfigDict(extra='forbid')

    format: Optional[Format] = None


class ParticlesDocument(_Document):
    particles: List[Tuple[float, float, float]]


class V0Document(_Document):
    knots: List[Tuple[float, float]]


class UniformDocument(_Document):
    kind: Literal['uniform']
    a: float
    b: float


class AtomsDocument(_Document):
    kind: Literal['atoms']
    atoms: List[Tuple[float, float]] = Field(min_length=1)


class PLDensityDocument(_Document):
    kind: Literal['pl-density']
    knots: List[Tuple[float, float]]


class TruncatedGaussianDocument(_Document):
    kind: Literal['truncated-gaussian']
    mean: float
    sd: float
    a: float
    b: float


SpecDocument = Annotated[
    Union[UniformDocument, AtomsDocument, PLDensityDocument,
          TruncatedGaussianDocument],
    Field(discriminator='kind')]

_SPEC = TypeAdapter(SpecDocument)


class Breakpoints(BaseModel):
    model_config = ConfigDict(extra='forbid')

    particle: int
    breakpoints: List[Tuple[float, float]]


class EventRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    t: float
    x: float
    merged: List[int]
    cluster: int


class TrajectoryDocument(_Document):
    """
    Exported TrajectorySet: the initial particles, the event log and the
    (t, x) breakpoints of every particle, ending at t_end. t_end is null for
    a run to full merge, whose breakpoints end one time unit past the last
    merge.
    """
    t_end: Optional[float]
    particles: List[Tuple[float, float, float]]
    events: List[EventRecord]
    trajectories: List[Breakpoints]


def _parse(text, model, what):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError("%s is not valid JSON: %s" % (what, e))
    try:
        if isinstance(model, TypeAdapter):
            return model.validate_python(data)
        return model.model_validate(data)
    except ValidationError as e:
        raise FormatError("invalid %s: %s" % (what, e))


def read_text(path):
    """
    Contents of path; '-' reads stdin
    """
    if path == '-':
        return sys.stdin.read()
    with open(path) as f:
        return f.read()


def write_text(text, path=None):
    if path is None or path == '-':
        sys.stdout.write(text)
        return
    with open(path, 'w') as f:
        f.write(text)
    log.info("wrote %s", path)


def dumps(document):
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def load_particles(text):
    doc = _parse(text, ParticlesDocument, "particle file")
    return ParticleInit.from_rows(doc.particles)


def particles_document(init):
    return {'format': FORMAT, 'particles': init.rows()}


def load_v0(text):
    doc = _parse(text, V0Document, "v0 file")
    return PiecewiseLinearFn(doc.knots)


def v0_document(v0):
    return {'format': FORMAT, 'knots': [list(k) for k in v0.knots()]}


def load_spec(text):
    """
    MeasureSpec from a {"kind": ...} document. Atom masses may sum to 1
    within the particle-file tolerance and are normalised.
    """
    doc = _parse(text, _SPEC, "measure spec")
    if doc.kind == 'uniform':
        return UniformSpec(doc.a, doc.b)
    if doc.kind == 'truncated-gaussian':
        return TruncatedGaussianSpec(doc.mean, doc.sd, doc.a, doc.b)
    if doc.kind == 'pl-density':
        return PLDensitySpec(PiecewiseLinearFn(doc.knots))
    total = sum(m for _, m in doc.atoms)
    if not abs(total - 1.0) <= SETTINGS.mass_sum_tol:
        raise FormatError("atom masses sum to %r, not 1" % total)
    return AtomsSpec(DiscreteMeasure([(x, m / total) for x, m in doc.atoms]))


def spec_document(spec):
    doc = {'format': FORMAT, 'kind': spec.kind}
    if isinstance(spec, UniformSpec):
        doc.update(a=spec.a, b=spec.b)
    elif isinstance(spec, TruncatedGaussianSpec):
        doc.update(mean=spec.mean_, sd=spec.sd, a=spec.a, b=spec.b)
    elif isinstance(spec, PLDensitySpec):
        doc['knots'] = [list(k) for k in spec.density.knots()]
    else:
        doc['atoms'] = [list(a) for a in spec.measure.atoms()]
    return doc


def measure_document(measure):
    """
    An atomic measure written as an 'atoms' spec, so it loads back with
    load_spec
    """
    return {'format': FORMAT, 'kind': 'atoms',
            'atoms': [list(a) for a in measure.atoms()]}


def trajectory_document(traj):
    return {
        'format': FORMAT,
        't_end': traj.t_end if math.isfinite(traj.t_end) else None,
        'particles': traj.init.rows(),
        'events': [{'t': e.time, 'x': e.position, 'merged': list(e.merged),
                    'cluster': e.cluster} for e in traj.events],
        'trajectories': [{'particle': i,
                          'breakpoints': [list(k)
                                          for k in traj.breakpoints(i)]}
                         for i in range(len(traj))],
    }


def load_trajectories(text):
    return _parse(text, TrajectoryDocument, "trajectory file")


def trajectory_csv(traj):
    """
    particle,t_break,x_break rows for plotting
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(['particle', 't_break', 'x_break'])
    for i in range(len(traj)):
        for t, x in traj.breakpoints(i):
            writer.writerow([i, repr(t), repr(x)])
    return out.getvalue()


def flow_rows(flow, ys, times):
    return [(float(y), float(t), float(x))
            for t in times
            for y, x in zip(ys, flow.eval_many(ys, t))]


def flow_document(flow, ys, times):
    return {'format': FORMAT,
            'values': [{'y': y, 't': t, 'X': x}
                       for y, t, x in flow_rows(flow, ys, times)]}


def flow_csv(flow, ys, times):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(['y', 't', 'X'])
    for y, t, x in flow_rows(flow, ys, times):
        writer.writerow([repr(y), repr(t), repr(x)])
    return out.getvalue()


def report_document(config, reports):
    return {
        'format': FORMAT,
        'config': config.model_dump(mode='json', exclude={'threads'}),
        'reports': [r.to_dict() for r in reports],
        'pass': all(r.passed for r in reports),
    }


def convergence_document(config, table):
    doc = {'format': FORMAT,
           'config': config.model_dump(mode='json', exclude={'threads'})}
    doc.update(table.to_dict())
    doc['pass'] = table.passed
    return doc
