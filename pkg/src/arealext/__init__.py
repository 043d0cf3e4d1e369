"""Areal extreme rainfall from a max-stable field tied to resampled observed days."""
from importlib.resources import files

from .data_io import (DataError, RainPanel, StationCatalog, load_rainfall, load_stations,
                      load_triangles)
from .dependence import DependenceFit, PairEstimate, fit_dependence
from .field import EvalPoints, FieldParams, FieldSample, simulate_eta
from .margins import FitError, MarginalFit, TailModel, fit_margins
from .mesh import TriMesh, build_mesh
from .pipeline import ExperimentConfig, QuantileReport, run_experiment, synth_generate

__version__ = "0.1.0"

__all__ = [
    "DataError", "DependenceFit", "EvalPoints", "ExperimentConfig", "FieldParams",
    "FieldSample", "FitError", "MarginalFit", "PairEstimate", "QuantileReport", "RainPanel",
    "StationCatalog", "TailModel", "TriMesh", "build_mesh", "fit_dependence", "fit_margins",
    "load_rainfall", "load_stations", "load_triangles", "run_experiment",
    "schematic_data_path", "simulate_eta", "synth_generate",
]


def schematic_data_path(name: str):
    """Path of a file in the bundled schematic dataset (not observed data)."""
    return files(__name__) / "data" / name
