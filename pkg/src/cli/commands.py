"""
Command-line interface.

Subcommands:
    check normal|binomial|nig        single conflict checks (JSON)
    lasso means-crit|means-power|reg-power
    quantum g1|g2|physical|power
    reproduce <target> [--describe]

Exit status: 0 on success, 2 on invalid input or config, 1 on numerical failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from ..data.csv_export import export_json, export_lasso_power_csv, export_power_curves_csv
from ..data.models import DEFAULT_SEED, Tail
from ..errors import ConfigError, DomainError, NumericalError
from ..models import analytic_models as am
from ..models import lasso_check as lc
from ..models import quantum_trine as qt
from . import reproduce
from .settings import Settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_VALIDATION = 2

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group('run options')
    group.add_argument('--seed', type=int, help=f'Base random seed (default {DEFAULT_SEED})')
    group.add_argument('--draws', type=int, help='Reference draws per check')
    group.add_argument('--reps', type=int, help='Replicates per grid point in power studies')
    group.add_argument('--workers', type=int, help='Parallel workers (default $PRIOR_CONFLICT_WORKERS or 1)')
    group.add_argument('--alpha', type=float, help='Significance level (default 0.05)')
    group.add_argument('--tail', choices=[t.value for t in Tail], help='Tail for generic checks')
    group.add_argument('--chunk-size', type=int, help='Draws per random stream')
    group.add_argument('--executor', choices=['thread', 'process'], help='Worker pool kind')
    group.add_argument('--out', help='Output file (default: standard output)')
    group.add_argument('--format', choices=['csv', 'json'], help='Format for power-study output')
    group.add_argument('--config', help='JSON config file with per-subcommand sections')
    group.add_argument('--preset', help='Named preset from config/presets.json')
    group.add_argument('--verbose', action='store_true', help='Debug logging')
    group.add_argument('--quiet', action='store_true', help='Warnings and errors only')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog='prior-conflict',
        description='Prior Conflict Checker - score-based prior-data conflict checks'
    )
    parser.add_argument('--version', action='version', version='Prior Conflict Checker v1.0')
    commands = parser.add_subparsers(dest='command', required=True)

    # check
    check = commands.add_parser('check', help='Conflict checks for conjugate models')
    models = check.add_subparsers(dest='model', required=True)

    normal = models.add_parser('normal', parents=[common], help='Normal location, prior variance expansion')
    normal.add_argument('--mu0', type=float)
    normal.add_argument('--tau0sq', type=float)
    normal.add_argument('--sigmasq', type=float)
    normal.add_argument('--y', type=float, nargs='+', help='Observation(s); several are reduced to their mean')
    normal.set_defaults(handler=cmd_check_normal)

    binomial = models.add_parser('binomial', parents=[common], help='Binomial, geometric mixture expansion')
    binomial.add_argument('--n', type=int)
    binomial.add_argument('--a', type=float)
    binomial.add_argument('--b', type=float)
    binomial.add_argument('--target', choices=[t.value for t in am.MixtureTarget])
    binomial.add_argument('--y', type=int)
    binomial.set_defaults(handler=cmd_check_binomial)

    nig = models.add_parser('nig', parents=[common], help='Normal-inverse-gamma, conditional prior check')
    nig.add_argument('--mu0', type=float)
    nig.add_argument('--lambda0', type=float)
    nig.add_argument('--a', type=float)
    nig.add_argument('--b', type=float)
    nig.add_argument('--y', type=float, nargs='+')
    nig.add_argument('--expansion', choices=['lambda', 'mean-shift', 'engine'],
                     help='Expand lambda via (ybar-mu0)^2, the prior mean, or lambda via the exact score')
    nig.set_defaults(handler=cmd_check_nig)

    # lasso
    lasso = commands.add_parser('lasso', help='Laplace prior checks')
    lasso_cmds = lasso.add_subparsers(dest='lasso_command', required=True)

    crit = lasso_cmds.add_parser('means-crit', parents=[common], help='Critical values, many-means setting')
    _add_means_flags(crit)
    crit.set_defaults(handler=cmd_lasso_crit)

    means_power = lasso_cmds.add_parser('means-power', parents=[common], help='Power over q, many means')
    _add_means_flags(means_power)
    means_power.add_argument('--q-grid', type=float, nargs='+')
    means_power.set_defaults(handler=cmd_lasso_means_power)

    reg_power = lasso_cmds.add_parser('reg-power', parents=[common], help='Power over q, regression')
    reg_power.add_argument('--rows', type=int, nargs='+', help='Numbers of observations n')
    reg_power.add_argument('--predictors', type=int, nargs='+', help='Numbers of predictors p')
    reg_power.add_argument('--tau', type=float)
    reg_power.add_argument('--standardize', action='store_true', default=None)
    reg_power.add_argument('--q-grid', type=float, nargs='+')
    reg_power.set_defaults(handler=cmd_lasso_reg_power)

    # quantum
    quantum = commands.add_parser('quantum', help='Constrained multinomial (trine) checks')
    quantum_cmds = quantum.add_subparsers(dest='quantum_command', required=True)
    for kind in ('g1', 'g2'):
        family = quantum_cmds.add_parser(kind, parents=[common], help=f'{kind} expansion check')
        _add_quantum_flags(family)
        family.add_argument('--alpha0', type=float)
        family.add_argument('--q', type=float, nargs=3)
        family.add_argument('--method', choices=['quadrature', 'exact'])
        family.set_defaults(handler=cmd_quantum_family, family=kind)

    physical = quantum_cmds.add_parser('physical', parents=[common], help='Physical (trine angle) check')
    _add_quantum_flags(physical)
    physical.add_argument('--prior-alpha', type=float, help='Symmetric Dirichlet parameter (1 = flat)')
    physical.add_argument('--step', type=float, help='Finite-difference step in the angle')
    physical.set_defaults(handler=cmd_quantum_physical)

    power = quantum_cmds.add_parser('power', parents=[common], help='Power studies')
    _add_quantum_flags(power)
    power.add_argument('--study', choices=['families', 'physical'], default='families')
    power.add_argument('--alpha0', type=float)
    power.add_argument('--prior-alpha', type=float)
    power.add_argument('--n-trials', type=int)
    power.add_argument('--level-mode', choices=[m.value for m in qt.LevelMode])
    power.set_defaults(handler=cmd_quantum_power)

    # reproduce
    repro = commands.add_parser('reproduce', parents=[common], help='Reproduce a worked example or power study')
    repro.add_argument('target', choices=sorted({*reproduce.TARGETS, *reproduce.TARGET_ALIASES}))
    repro.add_argument('--describe', action='store_true', help='Print the expected output and exit')
    repro.set_defaults(handler=cmd_reproduce)

    return parser


def _add_means_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--n', type=int, help='Number of means')
    parser.add_argument('--m', type=int, help='Replicates per mean')
    parser.add_argument('--tau', type=float)
    parser.add_argument('--convention', choices=[c.value for c in lc.ScoreConvention])


def _add_quantum_flags(parser: argparse.ArgumentParser):
    parser.add_argument('--y', type=int, nargs=3, help='Outcome counts')
    parser.add_argument('--cos-sq', type=float, help='cos^2 of the trine angle (1/3 = ideal trine)')


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------

def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"missing required value for {flag}")
    return value


def cmd_check_normal(settings: Settings):
    args = settings.args
    model = am.NormalLocationModel(
        mu0=settings.get('check_normal', 'mu0', args.mu0, 0.0),
        tau0_sq=settings.get('check_normal', 'tau0_sq', args.tau0sq, 1.0),
        sigma_sq=settings.get('check_normal', 'sigma_sq', args.sigmasq, 1.0)
    )
    y = _require(settings.get('check_normal', 'y', args.y), '--y')
    reduced_model, ybar = am.reduce_to_mean(model, y)
    result = am.normal_check(reduced_model, ybar, settings.mc())
    payload = result.to_dict()
    payload['analytic_p_value'] = am.normal_p_value(reduced_model, ybar)
    export_json(payload, settings.output)


def cmd_check_binomial(settings: Settings):
    args = settings.args
    model = am.BinomialBetaModel(
        n=_require(settings.get('check_binomial', 'n', args.n), '--n'),
        a=settings.get('check_binomial', 'a', args.a, 1.0),
        b=settings.get('check_binomial', 'b', args.b, 1.0),
        mixture_target=settings.get('check_binomial', 'target', args.target, 'jeffreys')
    )
    y = _require(settings.get('check_binomial', 'y', args.y), '--y')
    result = am.binomial_check(model, y, settings.mc())
    payload = result.to_dict()
    payload['exact_p_value'] = am.binomial_p_value_exact(model, y, Tail.LOWER)
    export_json(payload, settings.output)


def cmd_check_nig(settings: Settings):
    args = settings.args
    y = _require(settings.get('check_nig', 'y', args.y), '--y')
    model = am.NigModel(
        mu0=settings.get('check_nig', 'mu0', args.mu0, 0.0),
        lambda0=settings.get('check_nig', 'lambda0', args.lambda0, 1.0),
        a=settings.get('check_nig', 'a', args.a, 2.0),
        b=settings.get('check_nig', 'b', args.b, 1.0),
        n=len(y)
    )
    expansion = settings.get('check_nig', 'expansion', args.expansion, 'lambda')
    cfg = settings.mc()
    if expansion == 'mean-shift':
        result = am.nig_mean_shift_check(model, y, cfg)
    elif expansion == 'engine':
        result = am.nig_s1_engine_check(model, y, cfg)
    else:
        result = am.nig_s1_check(model, y, cfg)
    export_json(result, settings.output)


def _means_setup(settings: Settings, n: Optional[int] = None) -> lc.ManyMeansSetup:
    args = settings.args
    return lc.ManyMeansSetup(
        n=n or settings.get('lasso', 'n', args.n, 10),
        m=settings.get('lasso', 'm', args.m, 20),
        tau=settings.get('lasso', 'tau', args.tau, 1.0)
    )


def cmd_lasso_crit(settings: Settings):
    setup = _means_setup(settings)
    convention = settings.get('lasso', 'convention', settings.args.convention, lc.ScoreConvention.TABULATED.value)
    cfg = settings.mc(default_draws=lc.MIN_REFERENCE_DRAWS)
    payload = {
        'n': setup.n, 'm': setup.m, 'tau': setup.tau, 'n_draws': cfg.n_draws, 'seed': cfg.base_seed,
        'score_convention': convention,
        'kurtosis': list(lc.critical_values(lc.LassoStatistic.KURTOSIS, setup, cfg)),
        'score': list(lc.critical_values(lc.LassoStatistic.SCORE, setup, cfg, convention)),
    }
    export_json(payload, settings.output)


def _write_curves(settings: Settings, curves: dict):
    if settings.format == 'json':
        export_json(curves, settings.output)
    else:
        export_power_curves_csv(curves, settings.output)


def _q_grid(settings: Settings, default: List[float]) -> List[float]:
    return list(settings.get('lasso', 'q_grid', settings.args.q_grid, default))


def cmd_lasso_means_power(settings: Settings):
    setup = _means_setup(settings)
    cfg = settings.mc()
    curves = lc.many_means_power_study(setup, _q_grid(settings, reproduce.LASSO_Q_GRID),
                                       settings.reps('lasso', 500), cfg)
    if settings.format == 'json':
        export_json(curves, settings.output)
    else:
        export_lasso_power_csv([(curves, {'n': setup.n, 'm': setup.m, 'tau': setup.tau})], settings.output)


def cmd_lasso_reg_power(settings: Settings):
    args = settings.args
    rows = settings.get('lasso', 'rows', args.rows, [100, 25])
    predictors = settings.get('lasso', 'predictors', args.predictors, [25, 100])
    tau = settings.get('lasso', 'tau', args.tau, 1.0)
    standardize = bool(settings.get('lasso', 'standardize', args.standardize, False))
    q_grid = _q_grid(settings, [0.3, 1.0])
    cfg = settings.mc()
    n_reps = settings.reps('lasso', 200)
    studies = []
    for n in rows:
        for p in predictors:
            setup = lc.RegressionSetup(n=n, p=p, tau=tau, standardize=standardize)
            curves = lc.regression_power_study(setup, q_grid, n_reps, cfg)
            studies.append((curves, {'n': n, 'p': p, 'tau': tau}))
    if settings.format == 'json':
        export_json({f"n{s['n']}_p{s['p']}": c for c, s in studies}, settings.output)
    else:
        export_lasso_power_csv(studies, settings.output)


def _geometry(settings: Settings, default_cos_sq: float = 1.0 / 3.0) -> qt.TrineGeometry:
    return qt.TrineGeometry.from_cos_sq(settings.get('quantum', 'cos_sq', settings.args.cos_sq, default_cos_sq))


def cmd_quantum_family(settings: Settings):
    args = settings.args
    kind = qt.FamilyKind.G1 if args.family == 'g1' else qt.FamilyKind.G2
    family = qt.ExpansionFamily(
        kind,
        alpha0=settings.get('quantum', 'alpha0', args.alpha0, 30.0),
        q=tuple(settings.get('quantum', 'q', args.q, [1.0 / 3.0] * 3))
    )
    y = _require(settings.get('quantum', 'y', args.y), '--y')
    method = settings.get('quantum', 'method', args.method, 'quadrature')
    result = qt.family_check(y, family, _geometry(settings), settings.mc(), method=method)
    export_json(result, settings.output)


def cmd_quantum_physical(settings: Settings):
    args = settings.args
    y = _require(settings.get('quantum', 'y', args.y), '--y')
    results = qt.physical_check(
        y,
        settings.get('quantum', 'prior_alpha', args.prior_alpha, 1.0),
        _geometry(settings),
        settings.mc(),
        step=settings.get('quantum', 'step', args.step, qt.FD_STEP)
    )
    export_json(results, settings.output)


def cmd_quantum_power(settings: Settings):
    args = settings.args
    geom = _geometry(settings)
    cfg = settings.mc()
    n_reps = settings.reps('quantum', 200)
    n_trials = settings.get('quantum', 'n_trials', args.n_trials, 50)
    if args.study == 'physical':
        curves = qt.physical_power_study(
            settings.get('quantum', 'prior_alpha', args.prior_alpha, 1.0),
            geom, qt.angle_grid(geom), n_trials, n_reps, cfg,
            level_mode=settings.get('quantum', 'level_mode', args.level_mode, qt.LevelMode.FULL.value)
        )
        _write_curves(settings, curves)
        return
    study = qt.g1_g2_power_study(
        settings.get('quantum', 'alpha0', args.alpha0, 30.0),
        [1.0 / 3.0] * 3, geom, qt.default_gamma_grids(), n_reps, cfg, n_trials=n_trials
    )
    _write_curves(settings, _flatten_study(study))


def _flatten_study(study: dict) -> dict:
    """{"data_g1": {"g1": c, "g2": c}} -> {"data_g1:g1": c, ...}"""
    return {f"data_{data}:{check}": curve for data, curves in study.items() for check, curve in curves.items()}


def cmd_reproduce(settings: Settings):
    target = reproduce.resolve_target(settings.args.target)
    if settings.args.describe:
        print(target.describe())
        return
    target.run(settings)


# ---------------------------------------------------------------------------
# Entry
# ---------------------------------------------------------------------------

def configure_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT, force=True)


def run(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch, and map errors to exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(getattr(args, 'verbose', False), getattr(args, 'quiet', False))

    try:
        settings = Settings(args)
        args.handler(settings)
    except (DomainError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK
