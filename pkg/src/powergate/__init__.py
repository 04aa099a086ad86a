"""powergate: an adaptive power-flow safety layer for fully actuated
6-DoF mechanical systems.

The layer detects divergent closed-loop behavior through a streaming
estimate of the largest Lyapunov exponent of the tracking-error dynamics
and limits the power the controller may inject through control barrier
functions solved as a small quadratic program on a jerk-level input.
A deterministic desk-scale simulator and a scenario CLI reproduce the
free-flight disturbance, cart-pull and damping-sweep experiments.
"""

from .controllers import (InvalidSelection, PoseGains, PoseReference,
                          TrackingErrors, WrenchGains,
                          WrenchTrackingController, mix, pose_control,
                          pose_errors)
from .dynamics import (InertialParams, RigidBodyState, Wrench, accelerate,
                       augmented_wrench_derivative, coriolis_wrench,
                       feedback_linearize, gravity_wrench)
from .lle import (DegenerateState, LleConfig, LleEstimate, LleEstimator,
                  lle_punctual, lowpass_update, nominal_lle, pose_lle,
                  pose_nominal_lle, wrench_lle, wrench_nominal_lle)
from .mathcore import NonSkewInput, rotation_from_euler, skew, vee
from .qp import QpProblem, QpSolution, kkt_check, solve
from .safety import (SafetyConfig, SafetyFilter, power_limit,
                     safeset_geometry, safeset_membership, set_scaling)
from .sim import (DisturbanceEvent, Environment, FigureEight,
                  MeasurementModel, NumericalDivergence, Scenario, Setpoint,
                  Simulator, Surface, WrenchTask, run)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
