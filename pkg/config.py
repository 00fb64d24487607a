"""
Configuration module for the Jacobi extension toolkit.

This module defines configuration classes for different environments
(development, testing, production): truncation caps, tolerances, output
locations and the coefficient family to analyse.

WHY: Centralized configuration keeps every tolerance and truncation cap
explicit and overridable, so no numerical constant hides in the services.
"""

import os
from typing import Dict, Any, Optional
from dotenv import load_dotenv

from services.errors import FamilyDefinitionError

# Load environment variables from .env file
load_dotenv()


def _env_float(name: str, default: float) -> float:
    return float(os.environ.get(name, default))


def _env_int(name: str, default: int) -> int:
    return int(os.environ.get(name, default))


class Config:
    """
    Base configuration class with common settings.

    Provides default solver settings and environment variable loading
    with validation of tolerances and truncation caps.
    """

    # Logging Configuration
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')
    LOG_FILE = os.environ.get('LOG_FILE', 'jacobi_extensions.log')

    # Artifact Configuration
    OUTPUT_DIR = os.environ.get('OUTPUT_DIR', 'output')
    FAMILY_FILE = os.environ.get('FAMILY_FILE', 'families/squeezing_k3_h3_m0.txt')

    # Coefficient validation window
    HYPOTHESIS_WINDOW = _env_int('HYPOTHESIS_WINDOW', 400)

    # Truncation Configuration
    TRUNCATION_START = _env_int('TRUNCATION_START', 64)
    TRUNCATION_MAX = _env_int('TRUNCATION_MAX', 40000)
    STABILIZATION_TOL = _env_float('STABILIZATION_TOL', 1e-12)
    EIGENVALUE_TOL = _env_float('EIGENVALUE_TOL', 1e-14)
    WEYL_TOL = _env_float('WEYL_TOL', 1e-12)

    # Limit-circle series (Richardson levels on top of the base truncation)
    NEVANLINNA_BASE = _env_int('NEVANLINNA_BASE', 1024)
    NEVANLINNA_LEVELS = _env_int('NEVANLINNA_LEVELS', 5)

    # Root finding and quadrature
    ROOT_TOL = _env_float('ROOT_TOL', 1e-12)
    SCAN_POINTS = _env_int('SCAN_POINTS', 1000)
    QUAD_TOL = _env_float('QUAD_TOL', 1e-11)

    # Region chart: compact set of spectral parameters |z| <= Z_BOUND
    Z_BOUND = _env_float('Z_BOUND', 1.0)

    # Coupling sequence construction
    LAMBDA_START = _env_float('LAMBDA_START', 1.0)
    LAMBDA_FLOOR = _env_float('LAMBDA_FLOOR', 1e-9)

    # Extension dynamics
    EXTENSION_WINDOW = _env_float('EXTENSION_WINDOW', 100.0)
    COMPLETENESS_TOL = _env_float('COMPLETENESS_TOL', 1e-2)

    # Wigner grids
    WIGNER_EXTENT = _env_float('WIGNER_EXTENT', 6.0)
    WIGNER_POINTS = _env_int('WIGNER_POINTS', 121)

    @classmethod
    def validate_required_config(cls) -> None:
        """
        Validate tolerances and truncation caps of the class defaults.

        Raises:
            ValueError: If any tolerance is non-positive or caps are inconsistent
        """
        cls.validate_settings(cls.get_solver_config())

    @classmethod
    def validate_settings(cls, settings: Dict[str, Any], explicit_output: bool = False) -> None:
        """
        Validate solver settings after command-line overrides were merged in.

        Args:
            settings: Dictionary shaped like get_solver_config()
            explicit_output: True when the output directory came from the command line

        Raises:
            ValueError: If any tolerance is non-positive or caps are inconsistent
        """
        positive = ['stabilization_tol', 'eigenvalue_tol', 'weyl_tol', 'root_tol', 'quad_tol',
                    'completeness_tol', 'z_bound', 'lambda_start', 'lambda_floor',
                    'extension_window', 'wigner_extent']

        invalid = [key.upper() for key in positive if not settings[key] > 0]
        if invalid:
            raise ValueError(f"Settings must be positive: {', '.join(invalid)}")

        start, cap = settings['truncation_start'], settings['truncation_max']
        if start < 2 or cap < start:
            raise ValueError(f"Inconsistent truncation caps: start={start}, max={cap}")

        if settings['hypothesis_window'] < 10:
            raise ValueError("HYPOTHESIS_WINDOW must be at least 10")

        if settings['nevanlinna_base'] < 16 or settings['nevanlinna_levels'] < 2:
            raise ValueError("NEVANLINNA_BASE must be >= 16 and NEVANLINNA_LEVELS >= 2")

        if settings['scan_points'] < 10 or settings['wigner_points'] < 3:
            raise ValueError("SCAN_POINTS must be >= 10 and WIGNER_POINTS >= 3")

    @classmethod
    def load_family_definition(cls, path: Optional[str] = None) -> Dict[str, str]:
        """
        Read a coefficient family definition file.

        Lines hold ``key = value`` pairs; blank lines and lines starting
        with ``#`` are skipped. Relative paths resolve against the project
        directory when they do not exist relative to the working directory.

        Args:
            path: Family file path (defaults to FAMILY_FILE)

        Returns:
            Mapping of keys to raw string values

        Raises:
            FamilyDefinitionError: If the file is missing or a line is malformed
        """
        family_path = path or cls.FAMILY_FILE
        if not os.path.isabs(family_path) and not os.path.exists(family_path):
            current_dir = os.path.dirname(os.path.abspath(__file__))
            family_path = os.path.join(current_dir, family_path)

        if not os.path.exists(family_path):
            raise FamilyDefinitionError(f"Family file not found: {family_path}")

        definition = {}
        with open(family_path, 'r', encoding='utf-8') as file:
            for line_num, line in enumerate(file, 1):
                line = line.strip()
                if not line or line.startswith('#'):
                    continue
                if '=' not in line:
                    raise FamilyDefinitionError(
                        f"Invalid family entry at line {line_num}: {line}"
                    )
                key, value = (part.strip() for part in line.split('=', 1))
                if not key or not value:
                    raise FamilyDefinitionError(
                        f"Empty key or value at line {line_num}: {line}"
                    )
                definition[key] = value

        if 'kind' not in definition:
            raise FamilyDefinitionError(f"Family file {family_path} does not declare a kind")

        definition['source'] = family_path
        return definition

    @classmethod
    def get_solver_config(cls) -> Dict[str, Any]:
        """
        Get solver settings as a dictionary for service construction.

        Returns:
            Dict containing tolerances, caps and output settings
        """
        return {
            'hypothesis_window': cls.HYPOTHESIS_WINDOW,
            'truncation_start': cls.TRUNCATION_START,
            'truncation_max': cls.TRUNCATION_MAX,
            'stabilization_tol': cls.STABILIZATION_TOL,
            'eigenvalue_tol': cls.EIGENVALUE_TOL,
            'weyl_tol': cls.WEYL_TOL,
            'nevanlinna_base': cls.NEVANLINNA_BASE,
            'nevanlinna_levels': cls.NEVANLINNA_LEVELS,
            'root_tol': cls.ROOT_TOL,
            'scan_points': cls.SCAN_POINTS,
            'quad_tol': cls.QUAD_TOL,
            'z_bound': cls.Z_BOUND,
            'lambda_start': cls.LAMBDA_START,
            'lambda_floor': cls.LAMBDA_FLOOR,
            'extension_window': cls.EXTENSION_WINDOW,
            'completeness_tol': cls.COMPLETENESS_TOL,
            'wigner_extent': cls.WIGNER_EXTENT,
            'wigner_points': cls.WIGNER_POINTS,
            'output_dir': cls.OUTPUT_DIR,
        }


class DevelopmentConfig(Config):
    """Development configuration with verbose logging."""

    LOG_LEVEL = 'DEBUG'


class ProductionConfig(Config):
    """
    Production configuration for long sweeps.

    Keeps logging quiet and insists on an explicit artifact directory.
    """

    LOG_LEVEL = 'WARNING'

    @classmethod
    def validate_settings(cls, settings: Dict[str, Any], explicit_output: bool = False) -> None:
        """Enhanced validation for production runs."""
        super().validate_settings(settings, explicit_output)

        # WHY: sweeps in production must not scatter artifacts into the cwd
        if not explicit_output and not os.environ.get('OUTPUT_DIR'):
            raise ValueError("OUTPUT_DIR must be set explicitly in production")


class TestingConfig(Config):
    """Testing configuration with small caps and no log file."""

    TESTING = True
    LOG_LEVEL = 'DEBUG'
    LOG_FILE = None

    HYPOTHESIS_WINDOW = 200
    TRUNCATION_MAX = 20000
    NEVANLINNA_BASE = 1024
    NEVANLINNA_LEVELS = 5
    SCAN_POINTS = 400


# Configuration mapping for easy environment selection
config_map = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(environment: str = None) -> Config:
    """
    Get configuration class for specified environment.

    Args:
        environment: Environment name (development/production/testing)

    Returns:
        Configuration class
    """
    env = environment or os.environ.get('JACOBI_ENV', 'default')
    return config_map.get(env, config_map['default'])
