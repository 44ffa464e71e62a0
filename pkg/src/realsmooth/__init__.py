"""Smooth real points and real dimension of algebraic sets by homotopy continuation."""

from .poly import Polynomial, PolySystem, jacobian, sum_of_squares_pullback
from .parsing import ParseError, parse_polynomial, parse_system
from .reduce import SemiAlgebraicInput, embed_bounded, lift_inequalities
from .solve import limit_points, newton_refine, numerical_rank, solve_square, total_degree_start
from .critical import (DegenerateObjectiveError, build_lagrange, critical_points_perturbed,
                       critical_points_unperturbed)
from .polar import DeflationCapError, minor_g, multiplicity_one_refine, polar_system
from .realdim import real_dimension, smooth_sample
from .io import parse_input, serialize
from .kuramoto import kuramoto_system

__all__ = [
    "Polynomial",
    "PolySystem",
    "jacobian",
    "sum_of_squares_pullback",
    "ParseError",
    "parse_polynomial",
    "parse_system",
    "SemiAlgebraicInput",
    "embed_bounded",
    "lift_inequalities",
    "limit_points",
    "newton_refine",
    "numerical_rank",
    "solve_square",
    "total_degree_start",
    "DegenerateObjectiveError",
    "build_lagrange",
    "critical_points_perturbed",
    "critical_points_unperturbed",
    "DeflationCapError",
    "minor_g",
    "multiplicity_one_refine",
    "polar_system",
    "real_dimension",
    "smooth_sample",
    "parse_input",
    "serialize",
    "kuramoto_system",
]
__version__ = "0.1.0"
