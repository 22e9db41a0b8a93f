import numpy as np
import pytest

from flatlab.catalog import unit_box
from flatlab.fields import ChartBox, FieldSpec


def sphere_spec(radius: float = 1.0, grid: int = 16) -> FieldSpec:
    box = ChartBox((0.5, 0.0), (np.pi - 0.5, 6.0), (grid, grid))
    return FieldSpec("sphere", {"radius": radius}, box)


def random_curvature_tensor(rng: np.random.Generator, n: int) -> np.ndarray:
    from flatlab.flatness import project_curvature

    return project_curvature(rng.normal(size=(n,) * 4))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def box3():
    return unit_box(3, 8)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
