"""
Main command-line application for the Jacobi extension toolkit.

This module parses the experiment subcommands, configures logging,
builds the spectral services from the selected configuration and prints
one machine-readable JSON object per run on stdout.

WHY: The entry point orchestrates configuration, logging, service wiring
and error mapping so every subcommand fails the same way with the same
exit codes.
"""

import argparse
import json
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, List, Optional, Tuple, Type

import colorlog

# Add current directory to Python path for imports
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from config import Config, get_config  # noqa: E402
from handlers.command_handler import CommandHandler, create_command_parsers  # noqa: E402
from services.artifact_service import ArtifactService, to_jsonable  # noqa: E402
from services.asymptotics_service import AsymptoticsService  # noqa: E402
from services.coefficient_service import CoefficientService  # noqa: E402
from services.errors import ComputationError, FamilyDefinitionError, UsageError  # noqa: E402
from services.limits_service import LimitsService  # noqa: E402
from services.recurrence_service import RecurrenceService  # noqa: E402
from services.spectral_service import SpectralService  # noqa: E402
from services.squeezing_service import SqueezingService  # noqa: E402

LOG_FORMAT = '%(asctime)s %(levelname)s [%(name)s] [%(funcName)s:%(lineno)d] %(message)s'

logger = logging.getLogger(__name__)


class CommandLineParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting and never expands prefixes."""

    def __init__(self, *args, **kwargs):
        # --t must not resolve to --truncation-start or --truncation-max
        kwargs.setdefault('allow_abbrev', False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(message)


def build_parser() -> CommandLineParser:
    """
    Build the argument parser with global flags, solver overrides and subcommands.

    Returns:
        Configured CommandLineParser
    """
    parser = CommandLineParser(
        prog='jacobi-extensions',
        description='Spectral experiments for Jacobi operators J(lambda) and their limiting extensions.',
    )
    parser.add_argument('--env', default=None, help='configuration environment (default: JACOBI_ENV or development)')
    parser.add_argument('--log-level', default=None, help='override LOG_LEVEL')
    parser.add_argument('--family-file', default=None, help=f'family definition file (default: {Config.FAMILY_FILE})')
    parser.add_argument('--out', default=None, help=f'output directory (default: {Config.OUTPUT_DIR})')

    solver = parser.add_argument_group('solver settings')
    for key, default in Config.get_solver_config().items():
        if key == 'output_dir':
            continue
        solver.add_argument(
            f"--{key.replace('_', '-')}",
            dest=f'solver_{key}',
            type=int if isinstance(default, int) else float,
            default=None,
            help=f'(default: {default})',
        )

    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True
    create_command_parsers(subparsers)
    return parser


def solver_settings(config: Type[Config], args: argparse.Namespace) -> Dict[str, Any]:
    """Solver settings of the configuration with command-line overrides applied."""
    settings = config.get_solver_config()
    for key in list(settings):
        override = getattr(args, f'solver_{key}', None)
        if override is not None:
            settings[key] = override
    if args.out:
        settings['output_dir'] = args.out
    return settings


def setup_logging(config: Type[Config], level_name: Optional[str] = None) -> None:
    """
    Configure logging on the root logger.

    Args:
        config: Configuration class
        level_name: Optional override of config.LOG_LEVEL

    WHY: stdout carries the result JSON, so console logging goes to stderr
    """
    level_name = (level_name or config.LOG_LEVEL).upper()
    log_level = getattr(logging, level_name, logging.INFO)
    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(log_level)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(colorlog.ColoredFormatter('%(log_color)s' + LOG_FORMAT))
    root.addHandler(console_handler)

    if config.LOG_FILE:
        file_handler = RotatingFileHandler(
            config.LOG_FILE,
            maxBytes=10 * 1024 * 1024,  # 10MB
            backupCount=5
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(file_handler)

    logger.debug(f"Logging configured with level: {level_name}")


def setup_error_handlers() -> List[Tuple[Type[BaseException], Tuple[str, int]]]:
    """
    Map exception classes to (error label, exit code), most specific first.

    ComputationError subclasses report their own label.

    Returns:
        Ordered list of (exception class, (label, exit code))
    """
    return [
        (UsageError, ('Usage Error', 2)),
        (FamilyDefinitionError, ('Family Definition Error', 2)),
        (ComputationError, ('Computation Error', 1)),
        (ValueError, ('Invalid Value', 2)),
        (ArithmeticError, ('Arithmetic Error', 1)),
        (Exception, ('Internal Error', 1)),
    ]


def format_error(error: BaseException, handlers=None) -> Tuple[Dict[str, Any], int]:
    """
    Render an exception as the standard failure payload.

    Returns:
        Tuple of (error payload, exit code)
    """
    for error_class, (label, code) in handlers or setup_error_handlers():
        if isinstance(error, error_class):
            if isinstance(error, ComputationError):
                return to_jsonable(error.to_dict()), code
            return {'success': False, 'error': label, 'message': str(error), 'details': {}}, code
    return {'success': False, 'error': 'Internal Error', 'message': str(error), 'details': {}}, 1


def initialize_services(settings: Dict[str, Any], config: Type[Config]) -> CommandHandler:
    """
    Initialize and wire the services behind the command handler.

    Args:
        settings: Solver settings with overrides applied
        config: Configuration class (family file loading)

    Returns:
        Configured CommandHandler
    """
    try:
        coefficients = CoefficientService(settings)
        recurrence = RecurrenceService(settings)
        spectral = SpectralService(settings)
        limits = LimitsService(settings, spectral)
        asymptotics = AsymptoticsService(settings, recurrence)
        squeezing = SqueezingService(settings, spectral, limits)
        artifacts = ArtifactService(settings)

        handler = CommandHandler(coefficients, spectral, limits, asymptotics, squeezing, artifacts,
                                 config.load_family_definition)
        logger.debug("All services initialized successfully")
        return handler

    except Exception as e:
        logger.error(f"Failed to initialize services: {e}")
        raise


def emit(payload: Dict[str, Any]) -> None:
    sys.stdout.write(json.dumps(to_jsonable(payload), sort_keys=True) + '\n')
    sys.stdout.flush()


def main(argv: Optional[List[str]] = None) -> int:
    """
    Application entry point.

    Args:
        argv: Command-line arguments without the program name

    Returns:
        Exit code: 0 success, 1 computational failure, 2 usage error
    """
    handlers = setup_error_handlers()
    try:
        args = build_parser().parse_args(argv)
        config = get_config(args.env)
        setup_logging(config, args.log_level)

        settings = solver_settings(config, args)
        config.validate_settings(settings, explicit_output=bool(args.out))
        handler = initialize_services(settings, config)

        logger.info(f"Running {args.command} with output directory {settings['output_dir']}")
        response, code = handler.dispatch(args)
        emit(response)
        return code

    except Exception as e:
        payload, code = format_error(e, handlers)
        if payload['error'] == 'Internal Error':
            logger.exception(f"Unexpected failure: {e}")
        else:
            logger.error(f"{payload['error']}: {payload['message']}")
        emit(payload)
        return code


if __name__ == '__main__':
    sys.exit(main())
