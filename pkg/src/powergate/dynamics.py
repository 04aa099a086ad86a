"""Rigid-body model with feedback linearization and the jerk-level input state.

The plant is a single rigid body, fully actuated in all six degrees of
freedom.  Its raw equations of motion are

    M @ vdot + C(omega) - g_B(R) = tau_cmd + tau_ext

with the Coriolis wrench ``C = (0, omega x J omega)`` and ``g_B`` the
gravity force expressed in body coordinates.  Applying the feedback
linearizing command ``tau_cmd = C - g_B + tau_c`` reduces the plant to
``M @ vdot = tau_c + tau_ext``.

For safety filtering the control wrench itself becomes a state ``tau_a``
commanded at the jerk level:

    M @ vdot  = tau_a + tau_ext
    tau_a_dot = tau_c_dot + K_tau @ (tau_c - tau_a)

so that ``tau_a`` tracks the nominal controller output ``tau_c`` unless a
constraint filter overrides its derivative.
"""

from dataclasses import dataclass, field

import numpy as np

from .mathcore import check_finite, is_rotation

GRAVITY = 9.81  # m/s^2

# Matches tau_c tracking well inside the closed-loop bandwidth (slowest
# pole of the default pose loop is ~0.5 1/s).
DEFAULT_K_TAU = 50.0


@dataclass
class InertialParams:
    """Mass, diagonal rotational inertia and gravity of the vehicle."""

    mass: float = 4.58                 # kg
    inertia: np.ndarray = field(default_factory=lambda: np.array([0.12, 0.12, 0.20]))  # kg m^2
    gravity: float = GRAVITY           # m/s^2

    def __post_init__(self):
        self.inertia = check_finite(self.inertia, "inertia")
        if self.mass <= 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.inertia.shape != (3,) or np.any(self.inertia <= 0.0):
            raise ValueError("inertia must be 3 positive diagonal entries")
        self._m_diag = np.concatenate([np.full(3, self.mass), self.inertia])

    @property
    def m_diag(self):
        """Diagonal of the 6x6 generalized inertia matrix."""
        return self._m_diag

    @property
    def m_mat(self):
        return np.diag(self.m_diag)


@dataclass
class Wrench:
    """Force/torque pair with an explicit frame tag (``body`` or ``world``)."""

    f: np.ndarray
    tau: np.ndarray
    frame: str = "body"

    def __post_init__(self):
        self.f = check_finite(self.f, "force")
        self.tau = check_finite(self.tau, "torque")
        if self.frame not in ("body", "world"):
            raise ValueError(f"unknown frame tag {self.frame!r}")

    @property
    def vec(self):
        return np.concatenate([self.f, self.tau])

    @classmethod
    def from_vec(cls, v, frame="body"):
        v = np.asarray(v, dtype=np.float64)
        return cls(v[:3].copy(), v[3:6].copy(), frame)

    @classmethod
    def zero(cls, frame="body"):
        return cls(np.zeros(3), np.zeros(3), frame)

    def to_body(self, r_wb):
        """Express a world-frame wrench in body coordinates."""
        if self.frame == "body":
            return self
        return Wrench(r_wb.T @ self.f, r_wb.T @ self.tau, "body")


@dataclass
class RigidBodyState:
    """Pose, body twist and the augmented control wrench state.

    ``r_wb`` maps body to world coordinates; ``v_b = [v_lin; omega]`` is the
    twist in the body frame; ``tau_a`` is the realized control wrench of
    the jerk-level augmented dynamics.
    """

    p_w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r_wb: np.ndarray = field(default_factory=lambda: np.eye(3))
    v_b: np.ndarray = field(default_factory=lambda: np.zeros(6))
    tau_a: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.p_w = check_finite(self.p_w, "position")
        self.r_wb = check_finite(self.r_wb, "rotation")
        self.v_b = check_finite(self.v_b, "twist")
        self.tau_a = check_finite(self.tau_a, "tau_a")
        if not is_rotation(self.r_wb, tol=1e-6):
            raise ValueError("r_wb is not a valid rotation matrix")

    @property
    def omega(self):
        return self.v_b[3:6]

    def copy(self):
        return RigidBodyState(self.p_w.copy(), self.r_wb.copy(),
                              self.v_b.copy(), self.tau_a.copy())


def coriolis_wrench(params, omega_b):
    """Centrifugal/Coriolis wrench of the rigid body: (0, omega x J omega)."""
    j_omega = params.inertia * omega_b
    return Wrench(np.zeros(3), np.cross(omega_b, j_omega), "body")


def gravity_wrench(params, r_wb):
    """Gravity force acting on the body, expressed in body coordinates."""
    f_world = np.array([0.0, 0.0, -params.mass * params.gravity])
    return Wrench(r_wb.T @ f_world, np.zeros(3), "body")


def feedback_linearize(params, state, tau_c):
    """Actuator command cancelling Coriolis and gravity terms.

    Returns the wrench that, applied to the raw plant, makes it behave as
    ``M @ vdot = tau_c + tau_ext`` exactly.
    """
    c = coriolis_wrench(params, state.omega)
    g = gravity_wrench(params, state.r_wb)
    return Wrench.from_vec(tau_c.vec + c.vec - g.vec, "body")


def raw_acceleration(params, state, tau_cmd, tau_ext):
    """Twist derivative of the raw (non-linearized) plant under ``tau_cmd``."""
    c = coriolis_wrench(params, state.omega)
    g = gravity_wrench(params, state.r_wb)
    return (tau_cmd.vec + tau_ext.vec + g.vec - c.vec) / params.m_diag


def accelerate(params, state, tau_ext):
    """Twist derivative of the linearized augmented plant: M vdot = tau_a + tau_ext."""
    return (state.tau_a + tau_ext.vec) / params.m_diag


def augmented_wrench_derivative(tau_a, tau_c, tau_c_dot, k_tau):
    """Nominal jerk reference: tau_a_dot = tau_c_dot + K_tau (tau_c - tau_a).

    ``k_tau`` is the diagonal of the positive definite tracking gain.
    This is the reference later filtered by the safety QP.
    """
    k_tau = np.asarray(k_tau, dtype=np.float64)
    if np.any(k_tau <= 0.0):
        raise ValueError("k_tau entries must be positive")
    return tau_c_dot + k_tau * (tau_c - tau_a)


def kinetic_energy(params, v_b):
    return 0.5 * float(v_b @ (params.m_diag * v_b))
