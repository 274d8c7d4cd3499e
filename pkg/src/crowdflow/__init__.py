"""crowdflow: finite-volume simulation of congested crowd transport.

Density is advected by a prescribed velocity field and produced/absorbed by
a reaction term; a complementarity pressure keeps it below the capacity
ceiling.  Analyzer routines certify the congestion-avoidance conditions and
the contraction/comparison behavior of the scheme as executable properties.
"""

__version__ = "0.1.0"

from .errors import (ConfigurationError, ConvergenceError, CrowdflowError,
                     FieldEvaluationError, ReactionDomainError, StepSizeError)
from .grid import BoundarySpec, Grid, build_grid
from .fields import (FaceField, check_velocity_admissibility, divergence_of_velocity,
                     make_velocity, sample_face_velocity)
from .reaction import (AbsorptionTerm, check_congestion_free, evaluate_reaction,
                       make_reaction, validate_assumptions)
from .transport import explicit_step, stable_dt, upwind_divergence
from .pressure import (LcpProblem, assemble_laplacian, lcp_oracle_enumerate,
                       lcp_solve_pgs, projection_step_one_phase,
                       projection_step_two_phase)
from .scenario import Scenario, load_scenario, materialize
from .stepper import (Envelope, Trajectory, integrate_envelope, picard_global, run,
                      verify_envelope_bound)
from .analysis import (check_mass_ledger, check_order, check_ueq_ordering,
                       compare_runs, continuous_dependence_probe)
from .output import write_outputs
