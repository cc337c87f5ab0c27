"""
canard-tool library

Flat modules (model, smallmat, multilinear, hopf, lyapunov, canard, oracle,
reports) importing each other by bare name; importing this package puts the
lib directory on sys.path.
"""

import sys
from pathlib import Path


# Module-level setup
lib_dir = Path(__file__).parent
if str(lib_dir) not in sys.path:
    sys.path.insert(0, str(lib_dir))


__all__: list[str] = []
