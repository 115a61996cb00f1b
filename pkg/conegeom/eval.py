import json
import logging
import math
import os
import random
from argparse import Namespace
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from conegeom.affine_surface import as_p, monotone_quantities
from conegeom.applications import section5_integral, surface_body_rhs
from conegeom.asymptotics import expansion_table, residual_decays, stirling_residual
from conegeom.bodies import from_config
from conegeom.centroid import (ball_zp_polar_volume, sandwich_ratios, theorem1_first_limit,
                               theorem1_second_limit, zp_polar_volume_result, zp_support)
from conegeom.config import (ExperimentConfig, FitConfig, QuadratureConfig, default_grids,
                             experiment_settings, load_file)
from conegeom.entropy import entropy_report
from conegeom.enums import BodyKind, Smoothness, Subcommand
from conegeom.errors import ConfigError, ConegeomError, NumericalBudgetError, PolarNotInCatalog
from conegeom.geometry import BodyHandle, normalized, polar_body, spread_directions
from conegeom.omega import omega_lp_closed_form, omega_report
from conegeom.report import CheckRecord, render_lpball_table, render_summary
from conegeom.utils import (default_p_grid, parse_args, parse_floats, parse_grid, write_csv,
                            write_json)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_CHECK = 0, 1, 2, 3

THREADS_ENV = 'CONEGEOM_THREADS'

DEFAULT_BODIES: List[Dict[str, Any]] = [
    {'kind': 'ball', 'n': 2},
    {'kind': 'lp_ball', 'n': 2, 'r': 3.0},
    {'kind': 'ellipsoid', 'matrix': [[2.0, 0.0], [0.0, 0.5]]},
]

DUALITY_EXPONENTS = (0.5, 1.0, 2.0, 5.0)
ROUND_KINDS = (BodyKind.ball, BodyKind.ellipsoid)


class RunContext:
    """Settings shared by the subcommand runners of one run."""

    def __init__(self, experiment: ExperimentConfig, quadrature: QuadratureConfig, fit: FitConfig,
                 progress: bool = True):
        self.experiment = experiment
        self.quadrature = quadrature
        self.fit = fit
        self.progress = progress
        self.checks: List[CheckRecord] = []

    def bodies(self) -> List[Tuple[Dict[str, Any], BodyHandle]]:
        configs = self.experiment.bodies or DEFAULT_BODIES
        return [(config, from_config(config)) for config in configs]

    def map(self, function: Callable, items: Sequence) -> List:
        """Applies `function` over `items` on the configured threads, keeping the input order."""
        items = list(items)
        if self.quadrature.threads <= 1 or len(items) <= 1:
            return [function(item) for item in tqdm(items, disable=not self.progress)]
        with ThreadPoolExecutor(max_workers=self.quadrature.threads) as executor:
            return list(tqdm(executor.map(function, items), total=len(items),
                             disable=not self.progress))

    def check(self, name: str, value: float, threshold: float) -> None:
        value = float(value)
        if math.isnan(value):
            value = math.inf
        self.checks.append(CheckRecord(name=name, value=value, threshold=threshold))


def _label(config: Dict[str, Any]) -> str:
    return json.dumps(config, sort_keys=True, separators=(',', ':'))


def _relative_gap(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _run_omega(ctx: RunContext) -> Dict[str, Any]:
    grid = ctx.experiment.p_grid

    def one(item):
        config, body = item
        return config, omega_report(body, ctx.experiment.routes, grid, ctx.quadrature, ctx.fit)

    results = []
    for config, report in ctx.map(one, ctx.bodies()):
        label = _label(config)
        results.append({'body': config, 'report': report.to_dict()})
        if len(report.estimates()) > 1:
            ctx.check(f"omega route agreement {label}", report.cross_route_max_rel_discrepancy, 1e-2)
        if report.closed_form and report.via_entropy is not None:
            ctx.check(f"omega entropy vs closed form {label}",
                      _relative_gap(report.via_entropy, report.closed_form), 1e-6)
        if report.via_entropy is not None and report.via_dual_entropy is not None:
            ctx.check(f"omega entropy vs dual entropy {label}",
                      _relative_gap(report.via_dual_entropy, report.via_entropy), 1e-6)
    return {'json': results}


def _monotone_violation(values: np.ndarray, increasing: bool) -> float:
    values = values[np.isfinite(values)]
    steps = np.diff(values) if increasing else -np.diff(values)
    return float(max(0.0, -steps.min())) if len(steps) else 0.0


def _run_asp(ctx: RunContext) -> Dict[str, Any]:
    grid = ctx.experiment.p_grid or default_grids()['monotone_p']

    def one(item):
        config, body = item
        table = monotone_quantities(body, grid, ctx.quadrature)
        duality = []
        if body.smoothness is Smoothness.C2_plus:
            try:
                polar = polar_body(body)
            except PolarNotInCatalog:
                polar = None
            if polar is not None:
                n = body.dimension
                duality = [as_p(body, p, ctx.quadrature).value
                           / as_p(polar, n * n / p, ctx.quadrature).value - 1
                           for p in DUALITY_EXPONENTS]
        return config, body, table, duality

    frames = []
    for config, body, table, duality in ctx.map(one, ctx.bodies()):
        label = _label(config)
        frames.append(table.assign(body=label))
        if body.smoothness is not Smoothness.C2_plus:
            continue
        violation = max(_monotone_violation(table['over_as_inf'].to_numpy(), increasing=False),
                        _monotone_violation(table['over_polar'].to_numpy(), increasing=False),
                        _monotone_violation(table['over_volume'].to_numpy(), increasing=True))
        ctx.check(f"as_p monotonicity {label}", violation, 1e-10)
        if duality:
            ctx.check(f"as_p duality {label}", max(abs(d) for d in duality), 1e-6)
    header = ("body: body label; p: exponent (dimensionless); as_p: L_p affine surface area ((n-1)-volume; "
              "anchor: as_p duality as_p(K) = as_{n^2/p}(K°)); over_as_inf = (as_p/as_inf)^(n+p) (dimensionless; "
              "anchor: non-increasing in p); over_polar = (as_p/(n|K°|))^(n+p) (dimensionless; anchor: "
              "non-increasing in p); over_volume = (as_p/(n|K|))^((n+p)/p) (dimensionless; anchor: "
              "non-decreasing in p)")
    return {'csv': pd.concat(frames, ignore_index=True), 'header': header}


def _run_zp(ctx: RunContext) -> Dict[str, Any]:
    grid = ctx.experiment.p_grid or default_p_grid()
    directions = default_grids()['sandwich_directions']

    def one(item):
        config, body = item
        unit = normalized(body, ctx.quadrature)
        thetas = spread_directions(body.dimension, directions)
        rows = []
        for p in grid:
            h = zp_support(unit, p, thetas, ctx.quadrature)
            result = zp_polar_volume_result(unit, p, ctx.quadrature)
            ball = ball_zp_polar_volume(body.dimension, p)
            if body.kind in ROUND_KINDS:
                error, source = abs(result.value - ball), 'closed_form'
            else:
                error, source = result.error_estimate, 'quadrature'
            rows.append({'p': p, 'h_min': float(h.min()), 'h_max': float(h.max()),
                         'polar_volume': result.value, 'error': error, 'error_source': source,
                         'santalo_ratio': result.value / ball})
        return config, body, rows

    frames = []
    for config, body, rows in ctx.map(one, ctx.bodies()):
        label = _label(config)
        table = pd.DataFrame(rows)
        frames.append(table.assign(body=label))
        ctx.check(f"Z_p Santaló bound {label}", table['santalo_ratio'].max() - 1, 1e-6)
        if body.kind in ROUND_KINDS:
            ctx.check(f"Z_p polar volume vs closed form {label}",
                      (table['error'] / table['polar_volume']).max(), 1e-6)
    header = ("body: body label; p: exponent (dimensionless); h_min, h_max: min and max of h_{Z_p(K)} over "
              "spread directions (length, |K| = 1; anchor: Z_p(K) increases to K); polar_volume = |Z_p°(K)| "
              "(volume; anchor: |Z_p°(K)| - |K°| ~ (n(n+1)/2)|K°| log p/p); error: absolute, against the volume-1 "
              "ball closed form for balls and ellipsoids, else the quadrature estimate (error_source); "
              "santalo_ratio = |Z_p°(K)|/|Z_p°(B̃)| <= 1 (anchor: Santaló inequality for centroid bodies)")
    return {'csv': pd.concat(frames, ignore_index=True), 'header': header}


def _run_theorem1(ctx: RunContext) -> Dict[str, Any]:
    def one(item):
        config, body = item
        unit = normalized(body, ctx.quadrature)
        first = theorem1_first_limit(unit, ctx.experiment.p_grid, ctx.quadrature, ctx.fit)
        second = theorem1_second_limit(unit, ctx.experiment.p_grid, ctx.quadrature, ctx.fit)
        return config, unit, first, second

    results = []
    for config, unit, first, second in ctx.map(one, ctx.bodies()):
        label = _label(config)
        n = unit.dimension
        target = 0.5 * n * (n + 1) * second.polar_volume
        results.append({'body': config, 'first_limit': first.to_dict(), 'first_limit_target': target,
                        'second_limit': second.to_dict()})
        ctx.check(f"first centroid limit {label}", _relative_gap(first.limit, target), 2e-2)
        ctx.check(f"second centroid limit {label}", second.relative_error, 5e-2)
        ctx.check(f"second limit right-hand sides {label}", second.rhs_residual, 1e-6)
    return {'json': results}


def _run_floating(ctx: RunContext) -> Dict[str, Any]:
    def one(item):
        config, body = item
        unit = normalized(body, ctx.quadrature)
        return config, sandwich_ratios(unit, ctx.experiment.delta_grid, config=ctx.quadrature)

    frames = []
    for config, result in ctx.map(one, ctx.bodies()):
        label = _label(config)
        frames.append(result.table.assign(body=label))
        ctx.check(f"sandwich lower ratio {label}", 0.2 - result.c1, 0.0)
        ctx.check(f"sandwich upper ratio {label}", result.c2 - 3.0, 0.0)
    header = ("body: body label; delta: floating body parameter (volume fraction, |K| = 1); p = max(1, log(1/delta)) "
              "(dimensionless); direction: index into the spread directions; floating = h_{K_delta} (length); "
              "centroid = h_{Z_p} (length); ratio = floating/centroid (dimensionless; anchor: floating body "
              "sandwich c1 Z_log(1/delta) <= K_delta <= c2 Z_log(1/delta))")
    return {'csv': pd.concat(frames, ignore_index=True), 'header': header}


def _run_entropy(ctx: RunContext) -> Dict[str, Any]:
    mc = ctx.experiment.mc_samples

    def one(item):
        config, body = item
        return config, entropy_report(body, ctx.experiment.caps, mc, ctx.quadrature.seed, ctx.quadrature)

    results = []
    for config, report in ctx.map(one, ctx.bodies()):
        label = _label(config)
        results.append({'body': config, 'report': report.to_dict()})
        ctx.check(f"Gibbs KL(P||Q) {label}", -report.kl_pq, 1e-12)
        ctx.check(f"Gibbs KL(Q||P) {label}", -report.kl_qp, 1e-12)
        for name, residual in report.identity_residuals.items():
            ctx.check(f"entropy identity {name} {label}", abs(residual), 1e-6)
        table = pd.DataFrame(report.cap_table)
        ctx.check(f"cone measure pushforward {label}", table['residual'].max(), 1e-6)
        if 'z_score' in table:
            ctx.check(f"cone measure Monte Carlo {label}", table['z_score'].abs().max(), 3.0)
    return {'json': results}


def _run_appendix(ctx: RunContext) -> Dict[str, Any]:
    grids = default_grids()
    n_values = ctx.experiment.n_values or [2, 3, 5]
    a_values = ctx.experiment.a_values or [0.0, 0.5, 1.0]
    grid = ctx.experiment.p_grid or parse_grid(grids['appendix_p'])
    table = expansion_table(n_values, a_values, grid)
    ctx.check("appendix p^2 residual decay", 0.0 if residual_decays(table) else 1.0, 0.0)
    ctx.check("Stirling bracket at x = 10", abs(stirling_residual(10.0, terms=5)), 1e-7)
    header = ("n: dimension; a: weight (dimensionless); p: exponent (dimensionless); exact: Beta-function power "
              "(dimensionless, 30 digits); expansion: large-p expansion (dimensionless; anchor: large-p expansion "
              "of Beta-function powers to order log p/p); residual = exact - expansion (dimensionless); "
              "p2residual = p^2 residual (dimensionless; anchor: remainder is O(log^2 p/p^2))")
    return {'csv': table, 'header': header}


def _run_lpball_table(ctx: RunContext) -> Dict[str, Any]:
    n_values = ctx.experiment.n_values or [2]
    r_values = ctx.experiment.r_values or [1.5, 2.0, 3.0, 5.0]
    rows = []
    for n in n_values:
        for r in r_values:
            omega = omega_lp_closed_form(int(n), float(r))
            rows.append({'n': int(n), 'r': float(r), 'omega': omega, 'log_omega': math.log(omega)})
            if r == 2:
                ctx.check(f"Omega of the Euclidean ball n={n}", abs(omega - 1), 1e-12)
    table = pd.DataFrame(rows)
    print(render_lpball_table(table))
    header = ("n: dimension; r: exponent of the l_r ball (dimensionless); omega: Omega(B_r^n) in closed form "
              "(length^(2n^2), unit l_r ball; anchor: Omega = 1 for the Euclidean ball); log_omega: natural log "
              "of omega")
    return {'csv': table, 'header': header}


def _run_section5(ctx: RunContext) -> Dict[str, Any]:
    pairs = [(int(n), float(r)) for n in (ctx.experiment.n_values or [2, 3])
             for r in (ctx.experiment.r_values or [3.0])]

    def one(pair):
        n, r = pair
        return section5_integral(n, r, ctx.quadrature.mc_samples, ctx.quadrature.seed, ctx.quadrature)

    results = []
    for result in ctx.map(one, pairs):
        results.append(result.to_dict())
        label = f"n={result.n} r={result.r:g}"
        if result.closed_form != 0:
            ctx.check(f"orthant integral relative error {label}", result.rel_error, 1e-2)
        ctx.check(f"orthant integral z-score {label}", abs(result.z_score), 3.0)
    return {'json': results}


def _run_surface_rhs(ctx: RunContext) -> Dict[str, Any]:
    def one(item):
        config, body = item
        return config, surface_body_rhs(body, ctx.quadrature)

    results = []
    for config, result in ctx.map(one, ctx.bodies()):
        label = _label(config)
        results.append({'body': config, 'result': result.to_dict()})
        scale = max(1.0, abs(result.omega_value))
        ctx.check(f"surface body identity {label}", result.residual / scale, 1e-6)
    return {'json': results}


runners: 'OrderedDict[Subcommand, Callable[[RunContext], Dict[str, Any]]]' = OrderedDict([
    (Subcommand.omega, _run_omega),
    (Subcommand.asp, _run_asp),
    (Subcommand.zp, _run_zp),
    (Subcommand.theorem1, _run_theorem1),
    (Subcommand.floating, _run_floating),
    (Subcommand.entropy, _run_entropy),
    (Subcommand.appendix, _run_appendix),
    (Subcommand.lpball_table, _run_lpball_table),
    (Subcommand.section5, _run_section5),
    (Subcommand.surface_rhs, _run_surface_rhs),
])


def _artifact_path(out: Optional[str], subcommand: Subcommand, suffix: str, many: bool) -> Optional[Path]:
    if out is None:
        return None
    path = Path(out)
    if not many and path.suffix in {'.json', '.csv'}:
        return path
    return path / f"{subcommand.value}{suffix}"


def _write_artifact(artifact: Dict[str, Any], path: Optional[Path]) -> None:
    if path is None:
        return
    if 'csv' in artifact:
        write_csv(path, artifact['csv'], artifact.get('header'))
    else:
        write_json(path, artifact['json'])


def run(experiment: ExperimentConfig, progress: bool = True) -> int:
    """Runs the selected subcommand(s), writes artifacts and prints a pass/fail summary.

    :return: 0 if every check passed, 1 on a configuration error, 2 if a numerical budget ran out
        and 3 if an identity check failed.
    """
    errors: List[Dict[str, str]] = []
    checks: List[CheckRecord] = []
    status = EXIT_OK
    try:
        subcommand = Subcommand(experiment.subcommand)
        quadrature, fit = experiment_settings(experiment)
        selected = list(runners) if subcommand is Subcommand.all else [subcommand]
        for current in selected:
            ctx = RunContext(experiment, quadrature, fit, progress)
            artifact = runners[current](ctx)
            checks.extend(ctx.checks)
            suffix = '.csv' if 'csv' in artifact else '.json'
            _write_artifact(artifact, _artifact_path(experiment.out, current, suffix, len(selected) > 1))
    except NumericalBudgetError as e:
        errors.append({'type': type(e).__name__, 'message': str(e)})
        status = EXIT_BUDGET
    except (ConegeomError, ValueError) as e:
        errors.append({'type': type(e).__name__, 'message': str(e)})
        status = EXIT_CONFIG
    if status == EXIT_OK and not all(check.passed for check in checks):
        status = EXIT_CHECK

    print(render_summary(checks, experiment.subcommand, errors))
    if experiment.out is not None:
        summary_dir = Path(experiment.out)
        if summary_dir.suffix in {'.json', '.csv'}:
            summary_dir = summary_dir.parent
        write_json(summary_dir / 'summary.json', {'subcommand': experiment.subcommand, 'status': status,
                                                  'checks': checks, 'errors': errors})
    return status


def _json_body(text: str) -> Dict[str, Any]:
    try:
        config = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"`--body` must be a JSON object, got {text!r}: {e}") from e
    if not isinstance(config, dict):
        raise ConfigError(f"`--body` must be a JSON object, got {text!r}.")
    return config


def experiment_from_args(args: Namespace) -> ExperimentConfig:
    """An ExperimentConfig from the config file in `args.config`, if any, overridden by the flags."""
    data = load_file(args.config) if args.config else {}
    experiment = ExperimentConfig.from_dict(data)
    experiment.subcommand = args.subcommand
    for name in ('p_grid', 'delta_grid'):
        if getattr(experiment, name) is not None:
            setattr(experiment, name, parse_grid(getattr(experiment, name)))
    if args.body:
        experiment.bodies = [_json_body(text) for text in args.body]
    if args.routes:
        experiment.routes = [route.strip() for route in args.routes.split(',')]
    if args.p_grid:
        experiment.p_grid = parse_grid(args.p_grid)
    if args.delta_grid:
        experiment.delta_grid = parse_grid(args.delta_grid)
    if args.n:
        experiment.n_values = [int(n) for n in parse_floats(args.n)]
    if args.r:
        experiment.r_values = parse_floats(args.r)
    if args.a:
        experiment.a_values = parse_floats(args.a)
    if args.caps is not None:
        experiment.caps = args.caps
    if args.mc is not None:
        experiment.mc_samples = int(args.mc)
    if args.seed is not None:
        experiment.seed = args.seed
    if args.tol is not None:
        experiment.tol = args.tol
    if args.threads is not None:
        experiment.threads = args.threads
    if os.environ.get(THREADS_ENV):
        experiment.threads = int(os.environ[THREADS_ENV])
    if args.out is not None:
        experiment.out = args.out
    return experiment


def main(args: Namespace) -> int:
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    try:
        experiment = experiment_from_args(args)
    except (ConfigError, ValueError) as e:
        print(render_summary([], args.subcommand, [{'type': type(e).__name__, 'message': str(e)}]))
        return EXIT_CONFIG
    np.random.seed(experiment.seed)
    random.seed(experiment.seed)
    return run(experiment)


def cli() -> None:
    raise SystemExit(main(parse_args()))


if __name__ == '__main__':
    # Example:
    # python -m conegeom.eval omega --body '{"kind": "lp_ball", "n": 2, "r": 3}' --out omega.json
    cli()
