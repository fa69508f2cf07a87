"""Mesh-based articulated-body dynamics, ground-contact force inference and
motion plausibility metrics."""

from .body import (BodyError, GeometryError, KinematicTree, MassConfig, PartMesh, RestBody, close_part_mesh,
                   load_body, validate_body)
from .contact import contact_basis, contact_force, contact_state
from .dynamics import (DynamicsTerms, angular_jacobian, bias_force, contact_jacobian, dynamics_terms, el_residual,
                       gravity_vector, jacobian_time_derivative, mass_matrix, point_jacobian)
from .kinematics import (MotionSequence, Pose, convert_rotation, finite_difference_derivatives, forward_kinematics,
                         load_motion)
from .massprops import PartMassProperties, body_mass_properties, part_inertia, part_volume_com
from .metrics import (LossReport, LossWeights, MetricReport, contact_loss, euler_lagrange_loss, force_loss,
                      plausibility_metrics, reconstruction_loss, total_loss)
from .solver import ForceSolution, SolverConfig, SolverError, kkt_check, solve_frame, solve_sequence

__version__ = "0.1.0"
