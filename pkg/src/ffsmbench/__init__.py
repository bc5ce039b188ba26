"""Benchmark toolkit for active learning of software product line behaviour.

Feature models, featured finite state machines, a seeded family
generator, an instrumented L* learner for Mealy machines and the
benchmark harness that ties them together.
"""

from importlib import resources

from .feature_model import (
    Configuration,
    FeatureModel,
    enumerate_configurations,
    eval_expr,
    parse_constraint,
    parse_feature_model,
    validate_configuration,
    write_feature_model,
)
from .ffsm import FFSM, derive_product, ffsm_size, parse_ffsm_dot, validate_ffsm, write_ffsm_dot
from .generator import GenSpec, generate_family, generate_ffsm
from .harness import accuracy, analyze_rounds, conciseness, run_benchmark
from .learner import LearnerOptions, LearnMetrics, LStarMealy, MachineTeacher, Teacher, learn
from .mealy import MealyMachine, equivalent, minimize, parse_dot, write_dot

__version__ = "0.1.0"

__all__ = [
    "Configuration", "FeatureModel", "enumerate_configurations", "eval_expr", "parse_constraint",
    "parse_feature_model", "validate_configuration", "write_feature_model",
    "FFSM", "derive_product", "ffsm_size", "parse_ffsm_dot", "validate_ffsm", "write_ffsm_dot",
    "GenSpec", "generate_family", "generate_ffsm",
    "accuracy", "analyze_rounds", "conciseness", "run_benchmark",
    "LearnerOptions", "LearnMetrics", "LStarMealy", "MachineTeacher", "Teacher", "learn",
    "MealyMachine", "equivalent", "minimize", "parse_dot", "write_dot",
    "asset_path", "load_game",
]


def asset_path(*parts):
    """Path of a bundled asset, e.g. ``asset_path("game", "model.xml")``."""
    return resources.files(__name__).joinpath("assets", *parts)


def load_game():
    """The bundled computer-game SPL as ``(feature_model, ffsm)``."""
    fm = parse_feature_model(asset_path("game", "model.xml").read_text())
    f = parse_ffsm_dot(asset_path("game", "game.ffsm.dot").read_text(), fm)
    return fm, f
