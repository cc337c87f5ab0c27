"""
Pytest configuration and shared fixtures for canard-tool tests.
"""

import sys
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

# Add lib directory to path
lib_dir = Path(__file__).parent.parent / "lib"
if str(lib_dir) not in sys.path:
    sys.path.insert(0, str(lib_dir))

from hopf import HopfPoint, locate_hopf
from model import SystemModel, builtin_fhn, builtin_vdp, model_from_mapping
from settings import ToolkitSettings


@pytest.fixture
def plugin_root() -> Path:
    """Repository root (holds lib/, config/, scripts/)."""
    return Path(__file__).parent.parent


@pytest.fixture
def config_dir(plugin_root: Path) -> Path:
    return plugin_root / "config"


@pytest.fixture
def vdp_model() -> SystemModel:
    return builtin_vdp()


@pytest.fixture
def fhn_model() -> SystemModel:
    return builtin_fhn()


@pytest.fixture
def settings() -> ToolkitSettings:
    """Built-in numerical defaults (same values as config/defaults.yaml)."""
    return ToolkitSettings()


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator so property tests are reproducible."""
    return np.random.default_rng(20261019)


def planar_model(quadratic: tuple[float, ...] = (0.0,) * 6) -> SystemModel:
    """
    x' = lambda x - omega y + q(x, y) + (a x - b y) r^2
    y' = omega x + lambda y + p(x, y) + (b x + a y) r^2

    with quadratic terms q = c1 x^2 + c2 x y + c3 y^2, p = d1 x^2 + d2 x y + d3 y^2.
    """
    c1, c2, c3, d1, d2, d3 = quadratic
    return model_from_mapping({
        "name": "planar_hopf",
        "states": ["x", "y"],
        "params": {
            "lambda": 0.0, "eps": 1.0, "omega": 1.0, "a": -1.0, "b": 0.0,
            "c1": c1, "c2": c2, "c3": c3, "d1": d1, "d2": d2, "d3": d3,
        },
        "epsilon_param": "eps",
        "bifurcation_param": "lambda",
        "equations": [
            "lambda*x - omega*y + c1*x^2 + c2*x*y + c3*y^2 + (a*x - b*y)*(x^2 + y^2)",
            "omega*x + lambda*y + d1*x^2 + d2*x*y + d3*y^2 + (b*x + a*y)*(x^2 + y^2)",
        ],
    })


PlanarHopfFactory = Callable[..., tuple[SystemModel, HopfPoint]]


@pytest.fixture
def planar_hopf() -> PlanarHopfFactory:
    """
    Factory for planar Hopf points at lambda = 0 with chosen coefficients.

    Usage:
        model, hopf = planar_hopf(a=2.0, omega=1.0)
    """
    def build(
        a: float = -1.0,
        omega: float = 1.0,
        b: float = 0.0,
        quadratic: tuple[float, ...] = (0.0,) * 6,
    ) -> tuple[SystemModel, HopfPoint]:
        model = planar_model(quadratic)
        params = model.bind(a=a, omega=omega, b=b)
        return model, locate_hopf(model, (-0.5, 0.5), params=params)

    return build
