"""Skies of spacetime events as Legendrian links.

Subpackages follow the pipeline: :mod:`geometry` (metrics and geodesics),
:mod:`causality` (the causal oracle), :mod:`skies` (sky sampling),
:mod:`contact` (hodograph, fronts and link signatures), :mod:`genfun`
(generating functions and ``c₋``) and :mod:`scenarios`/:mod:`cli`.
"""
from ._backend import BACKEND
from .causality import (CausalVerdict, Order, Relation, causal_oracle, grid_graph_distance,
                        riemannian_distance, same_null_geodesic, shooting_distance)
from .contact import (Crossing, Cusp, FrontDiagram, Invariants, LegendrianCurve, LinkSignature,
                      LinkVerdict, classical_invariants, fibre_curve, fibre_rigidity,
                      front_diagram, hodograph, inverse_hodograph, legendrian_residual,
                      link_signature, nonneg_isotopy_check, reference_signature,
                      sky_to_legendrian, trivial_link_reference, unlink_verdict)
from .errors import (CapabilityError, ConfigError, DomainError, IntegrationError,
                     IntegrityError, NonGenericFrontError, NumericalError, RangeError,
                     SkylinkError, UnsupportedTopologyError)
from .genfun import (GenFamily, Perturbation, TrigPoly, c_minus, critical_points,
                     genfun_for_front, monotonicity_harness)
from .geometry import (Minkowski, ProductRiemannian, RoundSphereProduct, classify_vector,
                       conformal_bump, geodesic_flow, null_future_direction)
from .skies import (CauchySlice, STStarPoint, SkyFamily, SkySample, build_sky,
                    cauchy_intersection, rho_M, sky_family_along_curve)

__version__ = "0.1.0"
