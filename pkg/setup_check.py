#!/usr/bin/env python3
"""
Environment check script for the Jacobi extension toolkit.

Verifies the Python version, the numerical dependencies, the
configuration and the family files, and runs a quick smoke computation.
"""

import importlib
import sys
from pathlib import Path


def check_python_version():
    """Check if Python version is compatible."""
    if sys.version_info < (3, 8):
        print("❌ Error: Python 3.8 or higher is required")
        print(f"   Current version: {sys.version}")
        return False
    print(f"✅ Python version: {sys.version.split()[0]}")
    return True


def check_dependencies():
    """Check that the numerical and tooling packages import."""
    missing = []
    for module in ('numpy', 'scipy', 'dotenv', 'colorlog'):
        try:
            importlib.import_module(module)
        except ImportError:
            missing.append(module)
    if missing:
        print(f"❌ Error: missing packages: {', '.join(missing)}")
        print("   Run: pip install -r requirements.txt")
        return False
    print("✅ numpy, scipy, python-dotenv and colorlog found")
    return True


def create_directories():
    """Create the output directory."""
    from config import get_config

    path = Path(get_config().OUTPUT_DIR)
    if not path.exists():
        path.mkdir(parents=True, exist_ok=True)
        print(f"✅ Created directory: {path}")
    else:
        print(f"✅ Directory exists: {path}")
    return True


def check_env_file():
    """Report whether a .env file overrides the defaults."""
    if Path('.env').exists():
        print("✅ .env file found")
    elif Path('.env.example').exists():
        print("⚠️  No .env file; defaults from config.py apply (see .env.example)")
    return True


def check_configuration():
    """Validate every configuration class and the default family file."""
    try:
        from config import config_map

        for name, config in config_map.items():
            if name == 'production':
                continue
            config.validate_required_config()
        definition = config_map['default'].load_family_definition()
        print(f"✅ Configuration valid, default family: {definition['source']}")
        return True
    except Exception as e:
        print(f"❌ Configuration check failed: {e}")
        return False


def run_smoke_test():
    """Build the default family and compare a truncated eigenvalue with a dense solve."""
    print("🧪 Running smoke computation...")
    try:
        import numpy as np

        from config import get_config
        from services.coefficient_service import CoefficientService
        from services.spectral_service import truncated_eigenvalues

        config = get_config('testing')
        service = CoefficientService(config.get_solver_config())
        family = service.build_family(config.load_family_definition())
        N = 64
        matrix = np.diag(0.5 * family.f_values(N)) + np.diag(family.a_values(N - 1), 1) + np.diag(family.a_values(N - 1), -1)
        dense = np.linalg.eigvalsh(matrix)
        banded = truncated_eigenvalues(family, 0.5, N)
        if np.max(np.abs(dense - banded)) > 1e-8 * np.max(np.abs(dense)):
            print("❌ Tridiagonal and dense eigenvalues disagree")
            return False
        print("✅ Tridiagonal eigenvalues agree with a dense solve")
        return True
    except Exception as e:
        print(f"❌ Smoke computation failed: {e}")
        return False


def main():
    """Main check function."""
    print("🚀 Jacobi Extension Toolkit Check")
    print("=" * 40)

    checks = [
        ("Python Version", check_python_version),
        ("Dependencies", check_dependencies),
        ("Environment File", check_env_file),
        ("Configuration", check_configuration),
        ("Directories", create_directories),
        ("Smoke Test", run_smoke_test),
    ]

    all_passed = True

    for check_name, check_func in checks:
        print(f"\n🔍 {check_name}...")
        if not check_func():
            all_passed = False

    print("\n" + "=" * 40)
    if all_passed:
        print("🎉 Environment ready!")
        print("\nNext steps:")
        print("1. Run: python run.py validate")
        print("2. Run: python run.py select --t inf --E 0 --count 6")
        print("3. Run the tests: pytest")
    else:
        print("❌ Environment incomplete. Please fix the issues above.")
        sys.exit(1)


if __name__ == '__main__':
    main()
