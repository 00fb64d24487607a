"""
Shared fixtures for the test suite.

Services are built from the testing configuration; artifacts go to a
per-test temporary directory.
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import get_config  # noqa: E402
from services.artifact_service import ArtifactService  # noqa: E402
from services.asymptotics_service import AsymptoticsService  # noqa: E402
from services.coefficient_service import CoefficientService, squeezing_family  # noqa: E402
from services.limits_service import LimitsService  # noqa: E402
from services.recurrence_service import RecurrenceService  # noqa: E402
from services.spectral_service import SpectralService  # noqa: E402
from services.squeezing_service import SqueezingService  # noqa: E402


@pytest.fixture
def settings(tmp_path):
    values = get_config('testing').get_solver_config()
    values['output_dir'] = str(tmp_path / 'output')
    return values


@pytest.fixture(scope='session')
def cubic():
    """Block m = 0 of the cubic squeezing operator with cubic self-interaction."""
    return squeezing_family(3, 3, 0)


@pytest.fixture(scope='session')
def quartic():
    return squeezing_family(4, 3, 0)


@pytest.fixture(scope='session')
def session_settings():
    return get_config('testing').get_solver_config()


@pytest.fixture(scope='session')
def spectral(session_settings):
    return SpectralService(session_settings)


@pytest.fixture(scope='session')
def recurrence(session_settings):
    return RecurrenceService(session_settings)


@pytest.fixture(scope='session')
def limits(session_settings, spectral):
    return LimitsService(session_settings, spectral)


@pytest.fixture(scope='session')
def asymptotics(session_settings, recurrence):
    return AsymptoticsService(session_settings, recurrence)


@pytest.fixture(scope='session')
def squeezing(session_settings, spectral, limits):
    return SqueezingService(session_settings, spectral, limits)


@pytest.fixture
def coefficients(settings):
    return CoefficientService(settings)


@pytest.fixture
def artifacts(settings):
    return ArtifactService(settings)
