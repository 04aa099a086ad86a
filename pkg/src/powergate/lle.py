"""Streaming finite-time estimation of the largest Lyapunov exponent.

For a trajectory ``x(t)`` of a (locally) linear system, the punctual
quantity

    lambda_star = (x . xdot) / ||x||^2

is the instantaneous log-derivative of ``||x||``: it recovers the mode
rate exactly on a pure exponential and, near a stable equilibrium, tends
to the largest real part of the Jacobian eigenvalues.  The raw value is
noisy and oscillatory in practice, so the estimate is the output of a
first-order low pass applied to it.

Per degree of freedom the closed loops of interest are the second-order
pose error dynamics with state ``(e_v, e_p)`` and the first-order wrench
error dynamics with state ``e_tau``, giving

    lambda_pose   = [e_v e_p] . [e_v_dot e_v] / ||[e_v e_p]||^2
    lambda_wrench = e_tau_dot / e_tau

The mixed-unit norm in the pose estimator is used verbatim (velocity and
position summed raw); an optional diagonal scaling of the state is
exposed for callers that want to normalize units, default identity.
"""

from dataclasses import dataclass, field

import numpy as np


class DegenerateState(ValueError):
    """State norm below the configured floor; the estimate must be held."""


@dataclass
class LleConfig:
    """Estimator configuration.

    ``filter_cutoff`` is the low-pass bandwidth for the filtered estimate;
    ``eps_norm`` the squared-norm floor below which the estimate is held at
    its previous value (the punctual ratio is 0/0 at the origin);
    ``assume_zero_accel`` drops the acceleration term of the pose
    estimator, matching the deployed configuration (the safe-set scaling
    of the safety module compensates for the resulting enlargement).
    """

    filter_cutoff: float = 10.0        # rad/s
    eps_norm: float = 1e-6
    eps_norm_wrench: float = 1e-4      # (N s)^2; wrench integrals live at N s scale
    lambda_clamp: float = 5.0          # 1/s; bound on the punctual ratio
    assume_zero_accel: bool = True
    state_scale: np.ndarray = field(default_factory=lambda: np.ones(2))  # (e_v, e_p)

    def __post_init__(self):
        if self.filter_cutoff <= 0.0:
            raise ValueError("filter_cutoff must be positive")
        if self.eps_norm <= 0.0 or self.eps_norm_wrench <= 0.0:
            raise ValueError("eps_norm must be positive")
        if self.lambda_clamp <= 0.0:
            raise ValueError("lambda_clamp must be positive")
        self.state_scale = np.asarray(self.state_scale, dtype=np.float64)


@dataclass
class LleEstimate:
    """Per-DoF punctual and filtered exponents for both loops (1/s)."""

    pose_raw: np.ndarray
    pose_hat: np.ndarray
    wrench_raw: np.ndarray
    wrench_hat: np.ndarray


def lle_punctual(x, x_dot, eps_norm=1e-12):
    """Instantaneous log-derivative of the state norm: x.xdot / ||x||^2."""
    x = np.asarray(x, dtype=np.float64)
    n2 = float(x @ x)
    if n2 < eps_norm:
        raise DegenerateState(f"||x||^2 = {n2:.3e} below floor {eps_norm:.1e}")
    return float(x @ np.asarray(x_dot, dtype=np.float64)) / n2


def pose_lle(e_p_i, e_v_i, accel_i=0.0, eps_norm=1e-6, scale=(1.0, 1.0)):
    """Punctual exponent of one second-order pose error DoF.

    Pass ``accel_i=0.0`` for the zero-acceleration approximation.
    """
    sv, sp = scale
    z = np.array([sv * e_v_i, sp * e_p_i])
    z_dot = np.array([sv * accel_i, sp * e_v_i])
    return lle_punctual(z, z_dot, eps_norm)


def wrench_lle(e_tau_i, e_tau_dot_i, eps_norm=1e-6):
    """Punctual exponent of one first-order wrench error DoF."""
    if e_tau_i * e_tau_i < eps_norm:
        raise DegenerateState(f"|e_tau| = {abs(e_tau_i):.3e} below floor")
    return e_tau_dot_i / e_tau_i


def lowpass_update(value, raw, cutoff, dt):
    """One step of the first-order low pass (exact discretization)."""
    if dt < 0.0:
        raise ValueError("dt must be non-negative")
    alpha = 1.0 - np.exp(-cutoff * dt)
    return value + alpha * (np.asarray(raw) - np.asarray(value))


def nominal_lle(jacobian):
    """Largest real part of the eigenvalues of a (square) Jacobian."""
    jacobian = np.atleast_2d(np.asarray(jacobian, dtype=np.float64))
    return float(np.max(np.real(np.linalg.eigvals(jacobian))))


def pose_nominal_lle(mass, d_v, k_p):
    """Closed-form nominal exponent of one pose DoF (roots of m s^2 + d s + k)."""
    disc = d_v * d_v - 4.0 * k_p * mass
    if disc >= 0.0:
        return (-d_v + np.sqrt(disc)) / (2.0 * mass)
    return -d_v / (2.0 * mass)


def wrench_nominal_lle(k_f, k_i):
    """Closed-form nominal exponent of one wrench DoF: -k_i / (k_f + 1)."""
    return -k_i / (k_f + 1.0)


def pose_jacobian(mass, d_v, k_p):
    """2x2 Jacobian of one decoupled pose error DoF, state (e_p, e_v)."""
    return np.array([[0.0, 1.0], [-k_p / mass, -d_v / mass]])


class LleEstimator:
    """Streaming per-DoF estimator for the pose and wrench loops.

    Holds the low-pass filter state for six pose DoFs and six wrench DoFs.
    When a DoF's error state is below the norm floor, both its raw and
    filtered values are held bitwise at the previous step.  ``lambda0``
    values seed the filters; a system starting converged should seed them
    with the nominal exponents of its gains.
    """

    def __init__(self, config=None, lambda0_pose=0.0, lambda0_wrench=0.0):
        self.config = config if config is not None else LleConfig()
        self.pose_hat = np.zeros(6) + np.asarray(lambda0_pose, dtype=np.float64)
        self.pose_raw = self.pose_hat.copy()
        self.wrench_hat = np.zeros(6) + np.asarray(lambda0_wrench, dtype=np.float64)
        self.wrench_raw = self.wrench_hat.copy()
        self._accel_filt = np.zeros(6)
        self._prev_e_v6 = None

    def update_pose(self, e_p6, e_v6, dt, accel6=None):
        """Advance the six pose-DoF estimates by one sample."""
        cfg = self.config
        e_p6 = np.asarray(e_p6, dtype=np.float64)
        e_v6 = np.asarray(e_v6, dtype=np.float64)
        if cfg.assume_zero_accel:
            acc = np.zeros(6)
        elif accel6 is not None:
            acc = np.asarray(accel6, dtype=np.float64)
        else:
            # filtered finite difference of the velocity error
            if self._prev_e_v6 is None:
                fd = np.zeros(6)
            else:
                fd = (e_v6 - self._prev_e_v6) / dt
            self._accel_filt = lowpass_update(self._accel_filt, fd, cfg.filter_cutoff, dt)
            acc = self._accel_filt
        self._prev_e_v6 = e_v6.copy()

        sv, sp = cfg.state_scale
        zv, zp = sv * e_v6, sp * e_p6
        n2 = zv * zv + zp * zp
        ok = n2 >= cfg.eps_norm
        raw = np.where(ok, (zv * sv * acc + zp * zv) / np.where(ok, n2, 1.0), self.pose_raw)
        raw = np.clip(raw, -cfg.lambda_clamp, cfg.lambda_clamp)
        self.pose_raw = raw
        hat = lowpass_update(self.pose_hat, raw, cfg.filter_cutoff, dt)
        self.pose_hat = np.where(ok, hat, self.pose_hat)
        return self.pose_hat

    def update_wrench(self, e_tau, e_tau_dot, dt):
        """Advance the six wrench-DoF estimates by one sample."""
        cfg = self.config
        e_tau = np.asarray(e_tau, dtype=np.float64)
        e_tau_dot = np.asarray(e_tau_dot, dtype=np.float64)
        ok = e_tau * e_tau >= cfg.eps_norm_wrench
        raw = np.where(ok, e_tau_dot / np.where(ok, e_tau, 1.0), self.wrench_raw)
        raw = np.clip(raw, -cfg.lambda_clamp, cfg.lambda_clamp)
        self.wrench_raw = raw
        hat = lowpass_update(self.wrench_hat, raw, cfg.filter_cutoff, dt)
        self.wrench_hat = np.where(ok, hat, self.wrench_hat)
        return self.wrench_hat

    def estimate(self):
        return LleEstimate(
            pose_raw=self.pose_raw.copy(),
            pose_hat=self.pose_hat.copy(),
            wrench_raw=self.wrench_raw.copy(),
            wrench_hat=self.wrench_hat.copy(),
        )
