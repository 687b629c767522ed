"""Exact Taylor jets of first- and second-order averaging functions for perturbed planar centers."""

__version__ = "0.1.0"

from .ring import ParamPoly, parse_poly, var
from .polar import PerturbedSystem, PlanarPoly, catalog, catalog_names, conditions, generic_perturbation, \
    parse_system, to_polar
from .engine import FlowJet, Jet, averaging_jet
from .solver import (RankReport, SolveObstruction, Substitution, generic_rank, reparametrize, solve_vanishing,
                     transversality_probe)

__all__ = [
    "ParamPoly", "parse_poly", "var",
    "PerturbedSystem", "PlanarPoly", "catalog", "catalog_names", "conditions", "generic_perturbation",
    "parse_system", "to_polar",
    "FlowJet", "Jet", "averaging_jet",
    "RankReport", "SolveObstruction", "Substitution", "generic_rank", "reparametrize", "solve_vanishing",
    "transversality_probe",
]
