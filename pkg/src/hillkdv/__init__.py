"""Spectral toolchain for zero-mean periodic potentials and the KdV flow.

The package computes the discriminant and band structure of the periodic
operator -d^2/dx^2 + psi, turns its spectral gaps into action variables
through the quasimomentum, links rough potentials to smooth ones by the
quadratic change of variables, integrates the KdV equation
pseudospectrally, and certifies the norm/action identities and
inequalities relating all of these with margin reports.
"""
from . import actions, errors, fourier, hill, kdv, riccati, verify
from .actions import (ActionSpectrum, action, action_via_contour,
                      compute_action_spectrum, gap_v, gap_v_profile,
                      q0_gap_integral, q0_weighted_integral)
from .errors import (ConfigError, FlowError, HillKdvError, QuadratureError,
                     SpectralError)
from .fourier import (TrigPotential, antiderivative, derivative, evaluate_grid,
                      hamiltonian, l2_distance, parse_potential_spec, project,
                      read_potential, sobolev_norm, write_potential)
from .hill import (BandStructure, Discriminant, HillSpectrum, Monodromy,
                   arccosh_one_plus, band_edges, monodromy, normalize_offset)
from .kdv import (CascadeReport, FlowConfig, FlowDiagnostics, FlowResult,
                  cascade_experiment, evolve)
from .riccati import GroundState, RiccatiPair, ground_state
from .verify import (Battery, BatterySummary, EstimateReport,
                     PotentialAnalysis, run_battery)

__version__ = "1.0.0"

__all__ = [
    "ActionSpectrum", "Battery", "BatterySummary", "BandStructure",
    "CascadeReport", "ConfigError", "Discriminant", "EstimateReport",
    "FlowConfig", "FlowDiagnostics", "FlowError", "FlowResult", "GroundState",
    "HillKdvError", "HillSpectrum", "Monodromy", "PotentialAnalysis",
    "QuadratureError", "RiccatiPair", "SpectralError", "TrigPotential",
    "action", "action_via_contour", "actions", "antiderivative",
    "arccosh_one_plus", "band_edges", "cascade_experiment",
    "compute_action_spectrum", "derivative", "errors", "evaluate_grid",
    "evolve", "fourier", "gap_v", "gap_v_profile", "ground_state",
    "hamiltonian", "hill", "kdv", "l2_distance", "monodromy",
    "normalize_offset", "parse_potential_spec", "project", "q0_gap_integral",
    "q0_weighted_integral", "read_potential",
    "riccati", "run_battery", "sobolev_norm", "verify", "write_potential",
]
