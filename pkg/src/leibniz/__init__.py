"""Dynamics on Leibniz manifolds over coordinate charts of R^n.

A Leibniz bracket on a chart is [f, g](m) = grad f(m)^T B(m) grad g(m) for a
tensor field B with a declared symmetry flag (skew, symmetric, or general).
This package provides the bracket calculus (vector fields on both sides,
Jacobiator and Casimir diagnostics, characteristic distributions), numerical
flows with regular-domain tracking, nonholonomic bracket construction by
projection, momentum maps with integrating factors, symmetry reduction to
invariant coordinates, and a catalog of worked systems with a CLI front end.
"""

from .core import (CheckReport, CoordinateChart, LeibnizSystem,
                   LeibnizTensorField, NondegeneracyError, OutOfDomainError,
                   PreconditionError, ScalarField, SmoothMap, VectorField,
                   bracket_eval, bracket_field, characteristic_image,
                   decompose, equivalent_hamiltonians, is_casimir, jacobiator,
                   leibniz_form, leibniz_vector_field, sample_points)
from .dynamics import (DriftReport, IntegratorConfig, StepUnderflowError,
                       Trajectory, TruncatedTrajectoryError, drift_report,
                       flow_commutation_check, integrate, relatedness_check)
from .expr import DomainError, EvalFlags, ParseError, SourceSpan
from .nonholonomic import (ConstraintSpec, TransversalityError,
                           constrained_system, constrained_tensor,
                           constraint_drift, family_independence_check,
                           projector_at)
from .symmetry import (ActionSpec, InvariantReduction, MomentumMapSpec,
                       SubspacePair, momentum_map_check, noether_drift,
                       pointwise_reducibility, reduce_by_invariants,
                       welldefinedness_check)
from .systems import (CatalogEntry, ParameterError, SystemBundle,
                      UnknownSystemError, catalog, catalog_listing,
                      load_system_file, make_system)

__version__ = "0.1.0"

__all__ = [
    "ActionSpec",
    "CatalogEntry",
    "CheckReport",
    "ConstraintSpec",
    "CoordinateChart",
    "DomainError",
    "DriftReport",
    "EvalFlags",
    "IntegratorConfig",
    "InvariantReduction",
    "LeibnizSystem",
    "LeibnizTensorField",
    "MomentumMapSpec",
    "NondegeneracyError",
    "OutOfDomainError",
    "ParameterError",
    "ParseError",
    "PreconditionError",
    "ScalarField",
    "SmoothMap",
    "SourceSpan",
    "StepUnderflowError",
    "SubspacePair",
    "SystemBundle",
    "Trajectory",
    "TransversalityError",
    "TruncatedTrajectoryError",
    "UnknownSystemError",
    "VectorField",
    "bracket_eval",
    "bracket_field",
    "catalog",
    "catalog_listing",
    "characteristic_image",
    "constrained_system",
    "constrained_tensor",
    "constraint_drift",
    "decompose",
    "drift_report",
    "equivalent_hamiltonians",
    "family_independence_check",
    "flow_commutation_check",
    "integrate",
    "is_casimir",
    "jacobiator",
    "leibniz_form",
    "leibniz_vector_field",
    "load_system_file",
    "make_system",
    "momentum_map_check",
    "noether_drift",
    "pointwise_reducibility",
    "projector_at",
    "reduce_by_invariants",
    "relatedness_check",
    "sample_points",
    "welldefinedness_check",
]
