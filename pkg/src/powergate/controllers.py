"""Pose-tracking and wrench-tracking control laws plus selection-matrix mixing.

The pose controller is an impedance law on body-frame tracking errors,

    tau_p = M @ a_ref_B - D_v @ e_v6 - K_p @ e_p6

whose closed loop under the linearized plant decouples per DoF into
``m_i e_v_dot + d_i e_v + k_i e_p = tau_ext_i``.  The wrench controller is a
PI law on the force/torque tracking error with a feedforward term,

    tau_f = -tau_ref + K_f @ (tau_meas - tau_ref) + K_I @ integral(tau_meas - tau_ref)

where ``tau_meas`` is the external wrench measured on the body (positive =
applied by the environment on the body).  A diagonal binary selection
matrix mixes the two per DoF: ``tau_c = (I - S) tau_p + S tau_f``.
"""

from dataclasses import dataclass, field

import numpy as np

from .mathcore import check_finite, skew, vee


class InvalidSelection(ValueError):
    """Selection matrix is not diagonal with binary entries."""


@dataclass
class PoseGains:
    """Diagonal damping and stiffness of the impedance loop (linear, angular)."""

    d_v: np.ndarray = field(default_factory=lambda: np.full(6, 5.0))    # N s/m, N m s/rad
    k_p: np.ndarray = field(default_factory=lambda: np.full(6, 20.0))   # N/m, N m/rad

    def __post_init__(self):
        self.d_v = check_finite(self.d_v, "d_v")
        self.k_p = check_finite(self.k_p, "k_p")
        if np.any(self.d_v <= 0.0) or np.any(self.k_p <= 0.0):
            raise ValueError("pose gains must be strictly positive")


@dataclass
class WrenchGains:
    """Diagonal proportional and integral gains of the wrench loop."""

    k_f: np.ndarray = field(default_factory=lambda: np.full(6, 1.0))
    k_i: np.ndarray = field(default_factory=lambda: np.full(6, 0.4))    # 1/s scaled

    def __post_init__(self):
        self.k_f = check_finite(self.k_f, "k_f")
        self.k_i = check_finite(self.k_i, "k_i")
        if np.any(self.k_f <= 0.0) or np.any(self.k_i <= 0.0):
            raise ValueError("wrench gains must be strictly positive")


@dataclass
class PoseReference:
    """Reference pose, twist and acceleration for the pose controller.

    World-frame quantities; the body-frame acceleration feedforward is
    formed against the current attitude via :meth:`a_ref_b`.  ``j_ref_w``
    (reference jerk) only feeds the analytic controller rate.
    """

    p_ref_w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r_ref: np.ndarray = field(default_factory=lambda: np.eye(3))
    v_ref_w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_ref_w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a_ref_w: np.ndarray = field(default_factory=lambda: np.zeros(3))
    j_ref_w: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def a_ref_b(self, r_wb):
        """Reference acceleration feedforward in body coordinates (6,)."""
        return np.concatenate([r_wb.T @ self.a_ref_w, np.zeros(3)])


@dataclass
class TrackingErrors:
    """Body-frame tracking errors of both loops.

    ``e_p``/``e_r`` and ``e_v``/``e_omega`` stack into the 6-vectors used
    by the impedance law; ``e_tau`` is the running integral of the wrench
    error ``e_tau_dot``.
    """

    e_p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    e_tau: np.ndarray = field(default_factory=lambda: np.zeros(6))      # N s
    e_tau_dot: np.ndarray = field(default_factory=lambda: np.zeros(6))  # N

    @property
    def e_p6(self):
        return np.concatenate([self.e_p, self.e_r])

    @property
    def e_v6(self):
        return np.concatenate([self.e_v, self.e_omega])


def pose_errors(state, ref):
    """Tracking errors of the pose loop, all expressed in the body frame."""
    r = state.r_wb
    e_p = r.T @ (state.p_w - ref.p_ref_w)
    e_v = state.v_b[:3] - r.T @ ref.v_ref_w
    e_r = 0.5 * vee(ref.r_ref.T @ r - r.T @ ref.r_ref)
    e_omega = state.v_b[3:] - r.T @ ref.omega_ref_w
    return TrackingErrors(e_p=e_p, e_r=e_r, e_v=e_v, e_omega=e_omega)


def pose_control(params, gains, errors, ref, r_wb):
    """Impedance control wrench; stabilizing signs on both error terms."""
    a_ff = params.m_diag * ref.a_ref_b(r_wb)
    return a_ff - gains.d_v * errors.e_v6 - gains.k_p * errors.e_p6


def _cross3(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def pose_control_rate(params, gains, state, ref, errors, tau_ext_est):
    """Analytic time derivative of the pose control wrench.

    Uses the augmented-plant acceleration ``(tau_a + tau_ext) / M`` and the
    reference derivatives.  Exact for a constant attitude/angular-rate
    reference (the attitude reference is held constant in every bundled
    scenario); the rotational coupling of the translational terms is kept
    in full.
    """
    r = state.r_wb
    omega = state.v_b[3:]
    vdot = (state.tau_a + tau_ext_est) / params.m_diag
    a_ref_body = r.T @ ref.a_ref_w

    e_p_dot = -_cross3(omega, errors.e_p) + errors.e_v
    e_v_dot = vdot[:3] + _cross3(omega, r.T @ ref.v_ref_w) - a_ref_body

    m = ref.r_ref.T @ (r @ skew(omega))
    s = m - m.T
    e_r_dot = 0.5 * np.array([s[2, 1], s[0, 2], s[1, 0]])
    e_omega_dot = vdot[3:] + _cross3(omega, r.T @ ref.omega_ref_w)

    out = np.empty(6)
    out[:3] = params.m_diag[:3] * (-_cross3(omega, a_ref_body) + r.T @ ref.j_ref_w) \
        - gains.d_v[:3] * e_v_dot - gains.k_p[:3] * e_p_dot
    out[3:] = -gains.d_v[3:] * e_omega_dot - gains.k_p[3:] * e_r_dot
    return out


class WrenchTrackingController:
    """PI wrench tracking with trapezoidal integral and per-DoF freeze.

    The integral state is owned here; a freeze mask (set by the safety
    layer while it enforces dissipation on a DoF) holds the corresponding
    integral entries to prevent windup.  The controller rate is a
    first-order backward difference since the law depends on measurements.
    """

    def __init__(self, gains=None):
        self.gains = gains if gains is not None else WrenchGains()
        self.e_tau = np.zeros(6)
        self._prev_e_dot = np.zeros(6)
        self._prev_tau_f = None
        self.last_rate = np.zeros(6)

    def reset(self):
        self.e_tau = np.zeros(6)
        self._prev_e_dot = np.zeros(6)
        self._prev_tau_f = None
        self.last_rate = np.zeros(6)

    @property
    def e_tau_dot(self):
        """Latest wrench error sample (N)."""
        return self._prev_e_dot

    def update(self, tau_meas, tau_ref, dt, freeze=None):
        """Advance the integral and return the wrench control action."""
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        e_dot = np.asarray(tau_meas, dtype=np.float64) - np.asarray(tau_ref, dtype=np.float64)
        inc = 0.5 * dt * (e_dot + self._prev_e_dot)
        if freeze is not None:
            inc = np.where(freeze, 0.0, inc)
        self.e_tau = self.e_tau + inc
        self._prev_e_dot = e_dot

        tau_f = -np.asarray(tau_ref, dtype=np.float64) \
            + self.gains.k_f * e_dot + self.gains.k_i * self.e_tau
        if self._prev_tau_f is None:
            self.last_rate = np.zeros(6)
        else:
            self.last_rate = (tau_f - self._prev_tau_f) / dt
        self._prev_tau_f = tau_f
        return tau_f


def selection_diagonal(s):
    """Validate a selection matrix (6-vector diagonal or 6x6) -> diagonal (6,)."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape == (6, 6):
        if np.max(np.abs(s - np.diag(np.diag(s)))) > 0.0:
            raise InvalidSelection("selection matrix has off-diagonal entries")
        s = np.diag(s)
    if s.shape != (6,):
        raise InvalidSelection(f"selection must be 6-diagonal, got shape {s.shape}")
    if not np.all((s == 0.0) | (s == 1.0)):
        raise InvalidSelection("selection entries must be binary")
    return s


def mix(tau_p, tau_f, s):
    """Per-DoF mix of the two controllers: tau_c = (I - S) tau_p + S tau_f."""
    s = selection_diagonal(s)
    return (1.0 - s) * np.asarray(tau_p) + s * np.asarray(tau_f)
