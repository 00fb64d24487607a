"""
Command Handler Module for the spectral experiments.

Parses experiment flags, runs the matching service operation, writes
the result tables and returns a JSON-ready summary with an exit code.

WHY: Separating flag handling from the numerical services keeps every
service usable from Python and testable without a command line.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from services.artifact_service import ArtifactService, complex_cells, complex_columns
from services.asymptotics_service import AsymptoticsService, SolutionProfile
from services.coefficient_service import CoefficientFamily, CoefficientService, squeezing_family
from services.errors import UsageError
from services.limits_service import LimitsService
from services.spectral_service import ExtensionParam, SpectralService
from services.squeezing_service import SqueezingService, WignerGrid


def parse_complex(text: str) -> complex:
    """Parse '1j', '0.5+1i', 'i' and plain reals."""
    cleaned = str(text).strip().replace(' ', '').replace('i', 'j')
    if cleaned in ('j', '+j'):
        return 1j
    if cleaned == '-j':
        return -1j
    try:
        return complex(cleaned)
    except ValueError:
        raise UsageError(f"Invalid complex number: {text}")


def parse_int_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in str(text).split(',') if part.strip()]
    except ValueError:
        raise UsageError(f"Invalid integer list: {text}")
    if not values:
        raise UsageError("Integer list is empty")
    return values


def parse_grid(text: str) -> List[float]:
    """
    Parse a coupling grid.

    Accepted forms:
        ``0.5,0.25,0.1``             explicit values in output order
        ``geom:start:stop:count``    geometric spacing, endpoints included
        ``harmonic:c:count``         1/(c j) for j = 1..count

    Raises:
        UsageError: If the grid is malformed, empty or not positive
    """
    raw = str(text or '').strip()
    try:
        if raw.startswith('geom:'):
            _, start, stop, count = raw.split(':')
            values = list(np.geomspace(float(start), float(stop), int(count))) if int(count) > 0 else []
        elif raw.startswith('harmonic:'):
            _, scale, count = raw.split(':')
            values = [1.0 / (float(scale) * j) for j in range(1, int(count) + 1)]
        else:
            values = [float(part) for part in raw.split(',') if part.strip()]
    except ValueError:
        raise UsageError(f"Invalid coupling grid: {text}")

    if not values:
        raise UsageError("Coupling grid is empty")
    if any(not (math.isfinite(v) and v > 0) for v in values):
        raise UsageError(f"Coupling grid must be finite and positive: {text}")
    return [float(v) for v in values]


def parse_extension(text: str) -> ExtensionParam:
    try:
        return ExtensionParam.parse(text)
    except ValueError:
        raise UsageError(f"Invalid extension parameter: {text}")


class CommandHandler:
    """
    Handler class for the experiment subcommands.

    Each ``handle_*`` method takes the parsed arguments and returns a tuple
    (response_data, exit_code). Numerical failures propagate as
    ComputationError for the application-level error mapping.
    """

    def __init__(self, coefficients: CoefficientService, spectral: SpectralService,
                 limits: LimitsService, asymptotics: AsymptoticsService,
                 squeezing: SqueezingService, artifacts: ArtifactService,
                 family_loader: Callable[[Optional[str]], Dict[str, str]]):
        """
        Initialize command handler with configured services.

        Args:
            coefficients: CoefficientService
            spectral: SpectralService
            limits: LimitsService
            asymptotics: AsymptoticsService
            squeezing: SqueezingService
            artifacts: ArtifactService writing the output tables
            family_loader: Callable reading a family file into a definition mapping
        """
        self.coefficients = coefficients
        self.spectral = spectral
        self.limits = limits
        self.asymptotics = asymptotics
        self.squeezing = squeezing
        self.artifacts = artifacts
        self.family_loader = family_loader
        self.logger = logging.getLogger(__name__)

    def _family(self, args) -> Tuple[CoefficientFamily, Dict[str, str]]:
        path = getattr(args, 'family', None) or getattr(args, 'family_file', None)
        definition = self.family_loader(path)
        return self.coefficients.build_family(definition), definition

    def _metadata(self, args, fam: Optional[CoefficientFamily] = None, **extra) -> Dict[str, Any]:
        flags = {key: value for key, value in sorted(vars(args).items())
                 if key not in ('command', 'out') and value is not None}
        data = {'command': args.command, 'flags': flags}
        if fam is not None:
            data['family'] = fam.metadata()
        data.update(extra)
        return data

    def _response(self, args, files: Sequence[Dict[str, str]], **summary) -> Tuple[Dict[str, Any], int]:
        response = {
            'success': True,
            'command': args.command,
            'files': [path for written in files for path in (written['csv'], written['json'])],
        }
        response.update(summary)
        self.logger.info(f"Command {args.command} finished with {len(response['files'])} files")
        return response, 0

    def _write_wigner(self, name: str, grid: WignerGrid, metadata: Dict[str, Any]) -> Dict[str, str]:
        """Row i, column j of the matrix is W(x_i, p_j)."""
        meta = dict(metadata)
        meta.update({
            'convention': grid.convention, 'integral': grid.integral(), 'points': int(grid.x.size),
            'row_axis': 'x', 'column_axis': 'p',
            'x_range': [float(grid.x[0]), float(grid.x[-1])],
            'p_range': [float(grid.p[0]), float(grid.p[-1])],
            'resolution': [float(grid.x[1] - grid.x[0]), float(grid.p[1] - grid.p[0])],
        })
        return self.artifacts.write_matrix(name, grid.values, meta)

    def _write_profiles(self, name: str, profiles: Sequence[SolutionProfile],
                        metadata: Dict[str, Any]) -> List[Dict[str, str]]:
        """One ``<name>_<i>.csv`` per coupling with the per-index solution profile."""
        header = ['n', 'abs_u', 'abs_psi_r', 'abs_w_r', 'r']
        return [self.artifacts.write_table(f'{name}_{i}', header, profile.csv_rows(),
                                           dict(metadata, index=i, lam=profile.lam, h=profile.h,
                                                truncations=[int(profile.u_abs.size)]))
                for i, profile in enumerate(profiles)]

    def dispatch(self, args) -> Tuple[Dict[str, Any], int]:
        """Run the handler registered for args.command."""
        method = getattr(self, f"handle_{args.command}", None)
        if method is None:
            raise UsageError(f"Unknown command: {args.command}")
        self.logger.debug(f"Dispatching {args.command}")
        return method(args)

    # Subcommands

    def handle_validate(self, args) -> Tuple[Dict[str, Any], int]:
        """Finite-window hypothesis report for the selected family."""
        fam, definition = self._family(args)
        report = self.coefficients.validate_hypothesis(fam, args.window)
        data = report.to_dict()
        rows = [[key, data[key]] for key in sorted(data)]
        written = self.artifacts.write_table(
            'validate', ['check', 'value'], rows,
            self._metadata(args, fam, source=definition.get('source')),
        )
        return self._response(args, [written], family=fam.name, all_passed=report.all_passed,
                              report=data)

    def handle_spiral(self, args) -> Tuple[Dict[str, Any], int]:
        """M(z, lambda) samples along a geometric grid plus the limit circle at z."""
        if args.lambda_points < 1:
            raise UsageError("Coupling grid is empty")
        if not (0 < args.lambda_min <= args.lambda_max):
            raise UsageError("Need 0 < lambda-min <= lambda-max")
        fam, _ = self._family(args)
        z = parse_complex(args.z)
        grid = list(np.geomspace(args.lambda_max, args.lambda_min, args.lambda_points))
        result = self.limits.spiral_samples(fam, z, grid, args.circle_samples)

        header = ['index', 'lambda'] + complex_columns('M') + ['circle_distance', 'truncation', 'resolvent_gap']
        rows = [[i, point.lam] + complex_cells(point.m)
                + [point.circle_distance, point.truncation, point.resolvent_gap]
                for i, point in enumerate(result.points)]
        circle = result.circle
        meta = self._metadata(args, fam, z=complex(z), center=circle.center, radius=circle.radius,
                              max_deviation=circle.max_deviation, consistent=result.consistent,
                              truncations=[point.truncation for point in result.points])
        written = [self.artifacts.write_table('spiral', header, rows, meta)]

        circle_rows = [[i, str(t)] + complex_cells(m) for i, (t, m) in enumerate(zip(circle.t_values, circle.samples))]
        written.append(self.artifacts.write_table(
            'spiral_circle', ['index', 't'] + complex_columns('m'), circle_rows,
            self._metadata(args, fam, z=complex(z), center=circle.center, radius=circle.radius),
        ))
        return self._response(
            args, written,
            center=[circle.center.real, circle.center.imag], radius=circle.radius,
            max_deviation=circle.max_deviation,
            consistent=result.consistent,
            distance_first=result.points[0].circle_distance,
            distance_last=result.points[-1].circle_distance,
            winding_monotone=result.winding_monotone,
        )

    def handle_eigencurves(self, args) -> Tuple[Dict[str, Any], int]:
        """Stabilized E^(j)(lambda) with Hellmann-Feynman slopes."""
        fam, _ = self._family(args)
        levels = parse_int_list(args.levels)
        if min(levels) < 0:
            raise UsageError("Eigenvalue levels must be >= 0")
        grid = parse_grid(args.lambda_grid)
        rows = []
        minima = {}
        for level in levels:
            samples = self.spectral.eigenvalue_curve(fam, level, grid)
            minima[str(level)] = min(sample.energy for sample in samples)
            rows.extend([level, i, s.lam, s.energy, s.slope, s.truncation] for i, s in enumerate(samples))
        written = self.artifacts.write_table(
            'eigencurves', ['level', 'index', 'lambda', 'energy', 'slope', 'truncation'], rows,
            self._metadata(args, fam, truncations=sorted({row[-1] for row in rows})),
        )
        return self._response(args, [written], levels=levels, points=len(grid), minimum_energy=minima)

    def handle_select(self, args) -> Tuple[Dict[str, Any], int]:
        """Coupling sequence lambda_j -> 0 converging to J_t."""
        fam, _ = self._family(args)
        t = parse_extension(args.t)
        if args.count < 1:
            raise UsageError("Sequence length must be >= 1")
        z = parse_complex(args.z)
        elements = self.limits.select_sequence(fam, t, args.E, args.count, z=z,
                                               lambda_start=args.lambda_start)
        header = ['j', 'lambda', 'level', 'residual', 'truncation', 'ratio', 'm_error', 't_recomputed', 'certified']
        rows = [[e.j, e.lam, e.level, e.residual, e.truncation, e.ratio, e.m_error, e.t_recomputed, e.certified]
                for e in elements]
        written = self.artifacts.write_table(
            'select', header, rows,
            self._metadata(args, fam, t=str(t), E=args.E, z=complex(z),
                           truncations=[e.truncation for e in elements]),
        )
        return self._response(
            args, [written], t=str(t), E=args.E,
            lambdas=[e.lam for e in elements],
            max_ratio=max((e.ratio for e in elements if e.ratio is not None), default=None),
            final_m_error=elements[-1].m_error,
            all_certified=all(e.certified for e in elements),
        )

    def handle_bound(self, args) -> Tuple[Dict[str, Any], int]:
        """Suprema of the normalized solution profile r_n over n >= n0."""
        fam, _ = self._family(args)
        z = parse_complex(args.z)
        n0_list = parse_int_list(args.n0)
        grid = parse_grid(args.lambda_grid)
        rows_out = self.asymptotics.bound_diagnostic(fam, z, grid, n0_list)

        header = ['index', 'lambda', 'h'] + [f'sup_r_{n0}' for n0 in n0_list] + ['argmax', 'argmax_scaled', 'x0']
        rows = [[i, row.lam, row.h] + [row.sup_r[n0] for n0 in n0_list] + [row.argmax, row.argmax_scaled, row.x0]
                for i, row in enumerate(rows_out)]
        written = self.artifacts.write_table(
            'bound', header, rows,
            self._metadata(args, fam, z=complex(z), n0=n0_list,
                           truncations=[int(row.r.size) for row in rows_out]),
        )
        spread = {}
        for n0 in n0_list:
            values = [row.sup_r[n0] for row in rows_out]
            spread[str(n0)] = {'min': min(values), 'max': max(values), 'ratio': max(values) / min(values)}
        profiles = self._write_profiles('bound', [row.profile for row in rows_out],
                                        self._metadata(args, fam, z=complex(z)))
        return self._response(args, [written] + profiles, sup_r=spread,
                              argmax_scaled=[row.argmax_scaled for row in rows_out])

    def handle_turning(self, args) -> Tuple[Dict[str, Any], int]:
        """Airy approximation error of the recessive solution and its h-scaling."""
        fam, _ = self._family(args)
        z = parse_complex(args.z)
        grid = parse_grid(args.lambda_grid)
        report = self.asymptotics.turning_point_error(fam, grid, z)
        header = ['index', 'lambda', 'h', 'x0', 'sup_error', 'argmax', 'match_index', 'match_residual', 'points']
        rows = [[i, r.lam, r.h, r.x0, r.sup_error, r.argmax, r.match_index, r.match_residual, r.points]
                for i, r in enumerate(report.rows)]
        written = self.artifacts.write_table(
            'turning', header, rows,
            self._metadata(args, fam, z=complex(z), slope=report.slope,
                           truncations=[r.match_index for r in report.rows]),
        )
        profiles = self._write_profiles('turning', [r.profile for r in report.rows],
                                        self._metadata(args, fam, z=complex(z)))
        return self._response(args, [written] + profiles, slope=report.slope,
                              sup_errors=[r.sup_error for r in report.rows])

    def handle_squeeze(self, args) -> Tuple[Dict[str, Any], int]:
        """Vacuum fidelities along a coupling sequence plus Wigner grids."""
        t = parse_extension(args.t_target)
        if args.count < 1:
            raise UsageError("Sequence length must be >= 1")
        experiment = self.squeezing.vacuum_experiment(args.k, args.h, t, args.T, args.count, E=args.E)
        fam = squeezing_family(args.k, args.h, 0)

        meta = self._metadata(args, fam, t_target=str(t), energy=experiment.energy,
                              completeness_defect=experiment.limit_state.defect,
                              extension_eigenvalues=int(experiment.limit_state.energies.size))
        header = ['j', 'lambda', 'K', 'truncation', 'fidelity']
        rows = [[r.j, r.lam, r.K, r.truncation, r.fidelity] for r in experiment.rows]
        written = [self.artifacts.write_table('squeeze_fidelity', header, rows,
                                              dict(meta, truncations=[r.truncation for r in experiment.rows]))]

        extent, points = args.wigner_extent, args.wigner_points
        written.append(self._write_wigner('squeeze_wigner_limit',
                                          self.squeezing.wigner(experiment.limit_state.vector, extent, points), meta))
        written.append(self._write_wigner('squeeze_wigner_final',
                                          self.squeezing.wigner(experiment.final_state, extent, points), meta))
        return self._response(args, written, t_target=str(t), energy=experiment.energy,
                              fidelities=[r.fidelity for r in experiment.rows])

    def handle_parity(self, args) -> Tuple[Dict[str, Any], int]:
        """Distances of lambda = 0 truncated evolutions to the t = 0 and t = inf limits."""
        dims = parse_int_list(args.dims)
        if min(dims) < 2:
            raise UsageError("Truncation dimensions must be >= 2")
        rows_out = self.squeezing.parity_limits(args.k, args.h, args.T, dims)
        rows = [[r.dim, r.parity, r.distance_t0, r.distance_tinf] for r in rows_out]
        fam = squeezing_family(args.k, args.h, 0)
        written = self.artifacts.write_table(
            'parity', ['dim', 'parity', 'distance_t0', 'distance_tinf'], rows,
            self._metadata(args, fam, truncations=dims),
        )
        return self._response(args, [written], rows=[[r.dim, r.parity, r.distance_t0, r.distance_tinf]
                                                     for r in rows_out])


def create_command_parsers(subparsers) -> None:
    """
    Register every experiment subcommand on an argparse subparsers object.

    Args:
        subparsers: Result of ArgumentParser.add_subparsers(dest="command")
    """

    validate = subparsers.add_parser('validate', help='finite-window hypothesis report')
    validate.add_argument('--family', help='family file (overrides --family-file)')
    validate.add_argument('--window', type=int, default=None, help='window length N (default: HYPOTHESIS_WINDOW)')

    spiral = subparsers.add_parser('spiral', help='M(z, lambda) spiral and the limit circle')
    spiral.add_argument('--z', default='1j', help='non-real spectral parameter (default: 1j)')
    spiral.add_argument('--lambda-min', type=float, default=1e-3, help='smallest coupling (default: 1e-3)')
    spiral.add_argument('--lambda-max', type=float, default=1.0, help='largest coupling (default: 1.0)')
    spiral.add_argument('--lambda-points', type=int, default=40, help='geometric grid size (default: 40)')
    spiral.add_argument('--circle-samples', type=int, default=100, help='extension samples on the circle (default: 100)')

    eigencurves = subparsers.add_parser('eigencurves', help='eigenvalue curves E^(j)(lambda)')
    eigencurves.add_argument('--levels', default='0,1,2,3,4', help='comma separated indices (default: 0..4)')
    eigencurves.add_argument('--lambda-grid', default='geom:1:1e-3:30', help='coupling grid (default: geom:1:1e-3:30)')

    select = subparsers.add_parser('select', help='coupling sequence converging to J_t')
    select.add_argument('--t', required=True, help="extension parameter, real or 'inf'")
    select.add_argument('--E', type=float, required=True, help='eigenvalue of J_t')
    select.add_argument('--count', type=int, default=6, help='sequence length (default: 6)')
    select.add_argument('--z', default='1j', help='point of the m-function error column (default: 1j)')
    select.add_argument('--lambda-start', type=float, default=None, help='lambda_0 (default: LAMBDA_START)')

    bound = subparsers.add_parser('bound', help='generalized eigenvector bound diagnostic')
    bound.add_argument('--z', default='1j', help='spectral parameter (default: 1j)')
    bound.add_argument('--n0', default='5,20,50', help='lower indices of the suprema (default: 5,20,50)')
    bound.add_argument('--lambda-grid', default='harmonic:10:40', help='coupling grid (default: harmonic:10:40)')

    turning = subparsers.add_parser('turning', help='turning-point approximation error scaling')
    turning.add_argument('--lambda-grid', default='geom:0.01:0.0005:8', help='coupling grid (default: geom:0.01:0.0005:8)')
    turning.add_argument('--z', default='0.5j', help='spectral parameter (default: 0.5j)')

    squeeze = subparsers.add_parser('squeeze', help='vacuum fidelities and Wigner grids')
    squeeze.add_argument('--k', type=int, default=3, help='squeezing order (default: 3)')
    squeeze.add_argument('--h', type=int, default=3, help='self-interaction power (default: 3)')
    squeeze.add_argument('--t-target', default='inf', help="target extension (default: 'inf')")
    squeeze.add_argument('--T', type=float, default=1.0, help='evolution time (default: 1.0)')
    squeeze.add_argument('--count', type=int, default=6, help='sequence length (default: 6)')
    squeeze.add_argument('--E', type=float, default=None, help='sequence eigenvalue (default: smallest |E| of J_t)')
    squeeze.add_argument('--wigner-extent', type=float, default=None, help='phase space half-width (default: WIGNER_EXTENT)')
    squeeze.add_argument('--wigner-points', type=int, default=None, help='grid points per axis (default: WIGNER_POINTS)')

    parity = subparsers.add_parser('parity', help='parity limits of lambda = 0 truncations')
    parity.add_argument('--k', type=int, default=3, help='squeezing order (default: 3)')
    parity.add_argument('--h', type=int, default=3, help='self-interaction power (default: 3)')
    parity.add_argument('--T', type=float, default=1.0, help='evolution time (default: 1.0)')
    parity.add_argument('--dims', default='40,41,80,81,160,161', help='truncation sizes (default: 40,41,80,81,160,161)')
