"""Optimal sensor placement for target localization via tight frames.

Bearing-only, range-only and RSS sensors all reduce to weighted bearings;
a placement is optimal when the weighted frame potential ``||G||^2`` hits
its lower bound.  The package builds such placements in closed form,
certifies given ones, and steers mobile sensors toward them with a
range-preserving gradient flow.
"""

from .coefficients import (CoefficientSequence, IrregularityReport, irregularity,
                           is_regular, range_regularity_check)
from .construction import (ConstructionResult, augmentation_vector, construct,
                           construct_2d, construct_3d_five, construct_detailed,
                           construct_dplus1, construct_irregular, construct_square,
                           platonic_solid, regular_polygon, triangle_decomposition,
                           union_placements)
from .errors import (ConstructionFailure, ContractError, DegenerateGeometryError,
                     InfeasibleError, NumericalFailure, PlacementError,
                     PreconditionViolation, StepSizeError, UnsupportedError)
from .flow import (FlowConfig, Integrator, Outcome, Trajectory, altitude_potential_gradient,
                   check_compatibility, control_velocity, frame_potential_gradient,
                   integrate, integrate_many, lyapunov, simulate)
from .geometry import Placement, Witness, placements_equivalent, transform_placement
from .optimality import (OptimalityCertificate, Regime, certify, certify_bearings,
                         lower_bound, optimality_error)
from .sensors import (FrameOperator, Fim, SensorKind, SensorSpec, coefficient,
                      coefficients_of, criteria_report, fim, frame_operator, objective,
                      specs_for)

__version__ = "0.1.0"
