import numpy as np
import pytest

from arealext import data_io, schematic_data_path
from arealext.pipeline import synth_generate


@pytest.fixture(scope="session")
def catalog():
    return data_io.load_stations(schematic_data_path("schematic_stations.csv"))


@pytest.fixture(scope="session")
def triangles(catalog):
    return data_io.load_triangles(schematic_data_path("schematic_triangles.csv"), catalog)


@pytest.fixture(scope="session")
def synth_panel(catalog):
    return synth_generate(catalog, beta=0.05, gamma=0.1, scale=6.0, shift=20.0,
                          n_days=2730, seed=11)


@pytest.fixture
def tri_catalog():
    return data_io.StationCatalog(("A", "B", "C"), np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), "A")


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def schematic_mesh_d2(catalog, triangles):
    from arealext.mesh import build_mesh
    return build_mesh(catalog, triangles, 2)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
