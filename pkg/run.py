#!/usr/bin/env python3
"""
Simple runner script for the Jacobi extension toolkit.

Forwards the command line to app.main and exits with its code.
"""

import sys

from app import main

if __name__ == '__main__':
    sys.exit(main())
