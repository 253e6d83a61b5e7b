"""
sticky-flow command line: simulate, flow, verify, converge, weak-residual
and discretize.

Exit status is 0 on success, 1 when a check or study fails (the report is
still written) and 2 on bad usage or bad input.
"""
import argparse
import logging
import math
import sys

import numpy as np
from pydantic import ValidationError

from sticky_flow import formats
from sticky_flow.config import CHECKS, FORMAT, SETTINGS, RunConfig
from sticky_flow.convergence import refinement_study
from sticky_flow.dynamics import simulate
from sticky_flow.errors import InvalidInputError, StickyFlowError
from sticky_flow.flow_map import FlowMap
from sticky_flow.measures import discretize
from sticky_flow.tasks import seeded_instances, sweep
from sticky_flow.verification import horizon, run_suite
from sticky_flow.weak_solution import TestFunction, WeakSolutionView

log = logging.getLogger('sticky_flow.cli')

OK, FAILED, USAGE = 0, 1, 2


def _floats(text):
    try:
        return [float(s) for s in text.split(',') if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, "
                                         "got %r" % text)


def _ints(text):
    try:
        return [int(s) for s in text.split(',') if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, "
                                         "got %r" % text)


def _names(text):
    return [s.strip() for s in text.split(',') if s.strip()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog='sticky-flow',
        description="Exact sticky particle simulation and verification")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--output', '-o',
                        help="write here instead of stdout")
    common.add_argument('--verbose', '-v', action='store_true', default=None,
                        help="debug logging on stderr")
    common.add_argument('--threads', type=int,
                        help="worker threads (default: available cores)")
    particles = argparse.ArgumentParser(add_help=False)
    particles.add_argument('--input', '-i',
                           help="particle file, '-' for stdin")
    particles.add_argument('--t-end', dest='t_end', type=float,
                           help="final time ('inf' runs to full merge)")
    quadrature = argparse.ArgumentParser(add_help=False)
    quadrature.add_argument(
        '--order', type=int,
        help="Gauss-Legendre order (default %d)" % SETTINGS.quadrature_order)
    quadrature.add_argument(
        '--panels', type=int,
        help="panels per lifetime piece (default %d)"
        % SETTINGS.quadrature_panels)

    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    p = sub.add_parser('simulate', parents=[common, particles],
                       help="simulate and export trajectories")
    p.add_argument('--format', dest='output_format',
                   choices=('json', 'csv'))

    p = sub.add_parser('flow', parents=[common, particles],
                       help="evaluate the flow map X(y, t)")
    p.add_argument('--y', dest='ys', type=_floats,
                   help="initial positions (default: the particles)")
    p.add_argument('--times', type=_floats, help="times (default: t_end)")
    p.add_argument('--format', dest='output_format',
                   choices=('json', 'csv'))

    p = sub.add_parser('verify', parents=[common, particles, quadrature],
                       help="run property checks")
    p.add_argument('--checks', type=_names,
                   help="comma-separated, from: %s" % ", ".join(CHECKS))
    p.add_argument('--seed', type=int)
    p.add_argument('--n', type=int,
                   help="particles per seeded instance (without --input)")
    p.add_argument('--instances', type=int,
                   help="seeded instances to run (without --input)")
    p.add_argument('--tol', type=float,
                   help="override every check tolerance")
    p.add_argument('--dt', type=float, help="oracle step")

    p = sub.add_parser('converge', parents=[common],
                       help="refinement study of a continuum initial measure")
    p.add_argument('--spec', help="measure spec file")
    p.add_argument('--v0', help="initial velocity knots file")
    p.add_argument('--levels', type=_ints, help="e.g. 50,100,200,400")
    p.add_argument('--times', type=_floats, help="e.g. 0.5,1,2")

    p = sub.add_parser('weak-residual', parents=[common, particles,
                                                 quadrature],
                       help="weak-form residuals over random test functions")
    p.add_argument('--seed', type=int)
    p.add_argument('--tol', type=float)

    p = sub.add_parser('discretize', parents=[common],
                       help="quantile discretization of a measure spec")
    p.add_argument('--spec', help="measure spec file")
    p.add_argument('--n', type=int, help="number of atoms")
    return parser


def _config(args):
    fields = dict((k, v) for k, v in vars(args).items()
                  if v is not None and k in RunConfig.model_fields)
    return RunConfig(**fields)


def _t_end(config):
    return math.inf if config.t_end is None else config.t_end


def cmd_simulate(config):
    init = formats.load_particles(formats.read_text(config.input))
    traj = simulate(init, _t_end(config))
    if config.output_format == 'csv':
        text = formats.trajectory_csv(traj)
    else:
        text = formats.dumps(formats.trajectory_document(traj))
    formats.write_text(text, config.output)
    return OK


def cmd_flow(config):
    init = formats.load_particles(formats.read_text(config.input))
    t_end = _t_end(config)
    times = config.times
    if times:
        if any(not (0.0 <= t <= t_end) or math.isinf(t) for t in times):
            raise InvalidInputError("flow times must be finite and in "
                                    "[0, %r]" % t_end)
        traj = simulate(init, max(times))
    else:
        # t_end, or past the last merge for an unbounded run
        traj = simulate(init, t_end)
        times = [horizon(traj)]
    flow = FlowMap(traj)
    ys = config.ys or init.positions.tolist()
    if config.output_format == 'csv':
        text = formats.flow_csv(flow, ys, times)
    else:
        text = formats.dumps(formats.flow_document(flow, ys, times))
    formats.write_text(text, config.output)
    return OK


def cmd_verify(config):
    if config.input is not None:
        instances = [(config.seed, formats.load_particles(
            formats.read_text(config.input)))]
    else:
        instances = seeded_instances(config.n, config.instances, config.seed)
    reports = run_suite(instances, config.checks, t_end=_t_end(config),
                        tol=config.tol, order=config.order,
                        panels=config.panels, dt=config.dt,
                        threads=config.threads)
    formats.write_text(formats.dumps(formats.report_document(config,
                                                             reports)),
                       config.output)
    return OK if all(r.passed for r in reports) else FAILED


def cmd_converge(config):
    spec = formats.load_spec(formats.read_text(config.spec))
    v0 = formats.load_v0(formats.read_text(config.v0))
    study = refinement_study(spec, v0, config.levels, config.times,
                             threads=config.threads)
    table = study.table()
    formats.write_text(formats.dumps(formats.convergence_document(config,
                                                                  table)),
                       config.output)
    return OK if table.passed else FAILED


def cmd_weak_residual(config):
    """
    Mass and momentum residuals of the weak form for each of
    SETTINGS.test_functions random bumps, at the requested order and at
    twice that order
    """
    init = formats.load_particles(formats.read_text(config.input))
    traj = simulate(init, _t_end(config))
    view = WeakSolutionView(traj)
    h = horizon(traj)
    rng = np.random.default_rng(config.seed)
    ends = np.concatenate((traj.positions(0.0), traj.positions(h)))
    support = (float(ends.min()) - 1.0, float(ends.max()) + 1.0)
    phis = [TestFunction.random(rng, support, h)
            for _ in range(SETTINGS.test_functions)]
    tol = SETTINGS.weak_form_tol if config.tol is None else config.tol

    def residuals(phi):
        row = {'center': phi.center, 'radius': phi.radius,
               'horizon': phi.horizon, 'anchored': phi.anchored}
        for which in ('mass', 'momentum'):
            row[which] = view.weak_form_residual(phi, which, config.order,
                                                 config.panels)
            row[which + '_refined'] = view.weak_form_residual(
                phi, which, 2 * config.order, config.panels)
        return row

    rows = sweep(residuals, phis, config.threads)
    worst = dict((which, max(r[which] for r in rows))
                 for which in ('mass', 'momentum'))
    passed = all(v <= tol for v in worst.values())
    doc = {'format': FORMAT,
           'config': config.model_dump(mode='json', exclude={'threads'}),
           'order': config.order, 'panels': config.panels,
           'functions': rows, 'worst': worst, 'tolerance': tol,
           'pass': passed}
    formats.write_text(formats.dumps(doc), config.output)
    return OK if passed else FAILED


def cmd_discretize(config):
    spec = formats.load_spec(formats.read_text(config.spec))
    measure = discretize(spec, config.n)
    formats.write_text(formats.dumps(formats.measure_document(measure)),
                       config.output)
    return OK


COMMANDS = {
    'simulate': cmd_simulate,
    'flow': cmd_flow,
    'verify': cmd_verify,
    'converge': cmd_converge,
    'weak-residual': cmd_weak_residual,
    'discretize': cmd_discretize,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _config(args)
    except ValidationError as e:
        sys.stderr.write("sticky-flow: invalid arguments: %s\n" % e)
        return USAGE
    try:
        return COMMANDS[config.command](config)
    except (StickyFlowError, OSError) as e:
        log.error("%s failed: %s", config.command, e)
        sys.stderr.write("sticky-flow: error: %s\n" % e)
        return USAGE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == '__main__':
    main()
