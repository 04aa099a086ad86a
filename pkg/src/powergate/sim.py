"""Deterministic fixed-step simulator for the safety layer at desk scale.

One control tick runs: measure -> tracking errors -> exponent estimates ->
nominal control and its rate -> safety filter (or pass-through) ->
fixed-step RK4 integration of the augmented rigid-body dynamics -> log.
Physics advance at ``dt`` per substep with ``control_divisor`` substeps
per control tick; the jerk command is held over the tick.  The rotation
matrix is integrated as part of the RK4 state and re-orthonormalized
(polar projection) after every substep, which preserves both the
integrator order and the orthonormality invariant.

Given identical scenarios and seeds, runs are bitwise reproducible.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .controllers import (PoseGains, PoseReference, WrenchGains,
                          WrenchTrackingController, mix, pose_control,
                          pose_control_rate, pose_errors, selection_diagonal)
from .dynamics import (DEFAULT_K_TAU, InertialParams, RigidBodyState, Wrench,
                       augmented_wrench_derivative)
from .lle import (LleConfig, LleEstimator, pose_nominal_lle,
                  wrench_nominal_lle)
from .mathcore import orthonormalize, skew
from .safety import SafetyConfig, SafetyFilter, power_limits

DIVERGENCE_LIMIT = 1e6


class NumericalDivergence(RuntimeError):
    """State magnitude exceeded the divergence limit; carries partial log."""

    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


@dataclass
class DisturbanceEvent:
    """Wrench pulse applied at the COM over a time window."""

    wrench: np.ndarray
    frame: str = "world"
    t_start: float = 0.0
    duration: float = 1.0

    def __post_init__(self):
        self.wrench = np.asarray(self.wrench, dtype=np.float64)

    def active(self, t):
        return self.t_start <= t < self.t_start + self.duration


@dataclass
class Surface:
    """Unilateral spring-damper surface normal to one linear world axis.

    The platform penetrates when its position along ``axis`` exceeds the
    (possibly moving) rest position; the restitution force opposes
    penetration and never pulls.
    """

    axis: int = 0
    position: float = 0.0              # m, rest position along axis
    k_s: float = 30.0                  # N/m
    d_s: float = 5.0                   # N s/m
    pull_time: float | None = None     # s, start of the pull-away ramp
    pull_speed: float = 0.0            # m/s

    def rest_position(self, t):
        if self.pull_time is None or t <= self.pull_time:
            return self.position
        return self.position + (t - self.pull_time) * self.pull_speed


@dataclass
class Environment:
    surface: Surface | None = None
    disturbances: list = field(default_factory=list)


def contact_wrench(env, p_w, v_w, t):
    """World-frame restitution wrench of the surface (zero torque)."""
    f = np.zeros(3)
    s = env.surface
    if s is not None:
        pen = p_w[s.axis] - s.rest_position(t)
        if pen > 0.0:
            force = -s.k_s * pen - s.d_s * v_w[s.axis]
            f[s.axis] = min(force, 0.0)   # unilateral: never pulls
    return Wrench(f, np.zeros(3), "world")


def disturbance_wrench(env, r_wb, t):
    """Sum of active disturbance wrenches, expressed in the body frame."""
    total = np.zeros(6)
    for d in env.disturbances:
        if d.active(t):
            if d.frame == "world":
                total[:3] += r_wb.T @ d.wrench[:3]
                total[3:] += r_wb.T @ d.wrench[3:]
            else:
                total += d.wrench
    return total


@dataclass
class MeasurementModel:
    """Force/torque sensing: zero-order-hold sampling, optional Gaussian
    noise, and a discrete second-order Butterworth low pass."""

    ft_sample_rate: float = 800.0      # Hz
    cutoff: float = 3.0                # rad/s
    noise_std: float = 0.0             # N

    def __post_init__(self):
        if self.ft_sample_rate <= self.cutoff / np.pi:
            raise ValueError("sample rate must exceed twice the cutoff frequency")


class FtSensor:
    """Streaming sensor: advances its own sample clock between sim steps."""

    def __init__(self, model, rng=None):
        self.model = model
        self.rng = rng
        wn = (model.cutoff / (2.0 * np.pi)) / (model.ft_sample_rate / 2.0)
        self.b, self.a = signal.butter(2, wn)
        self.zi0 = signal.lfilter_zi(self.b, self.a)
        self.zi = np.zeros((2, 6))
        self.next_t = 0.0
        self.output = np.zeros(6)

    def advance(self, true_wrench6, t):
        """Process all sensor samples due up to time ``t`` (ZOH of the truth)."""
        period = 1.0 / self.model.ft_sample_rate
        n = int(np.floor((t - self.next_t) / period + 1e-9)) + 1
        if n <= 0:
            return self.output
        x = np.broadcast_to(np.asarray(true_wrench6, dtype=np.float64), (n, 6))
        if self.rng is not None and self.model.noise_std > 0.0:
            x = x + self.rng.normal(0.0, self.model.noise_std, (n, 6))
        y, self.zi = signal.lfilter(self.b, self.a, x, axis=0, zi=self.zi)
        self.output = y[-1]
        self.next_t += n * period
        return self.output


@dataclass
class FigureEight:
    """Lissajous reference: x = A sin(w t), y = B sin(2 w t), constant z."""

    amplitude_x: float = 1.0
    amplitude_y: float = 0.5
    omega: float = 0.5                 # rad/s
    center: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)

    def reference(self, t):
        w = self.omega
        a, b = self.amplitude_x, self.amplitude_y
        p = self.center + np.array([a * np.sin(w * t), b * np.sin(2 * w * t), 0.0])
        v = np.array([a * w * np.cos(w * t), 2 * b * w * np.cos(2 * w * t), 0.0])
        acc = np.array([-a * w * w * np.sin(w * t), -4 * b * w * w * np.sin(2 * w * t), 0.0])
        jrk = np.array([-a * w ** 3 * np.cos(w * t), -8 * b * w ** 3 * np.cos(2 * w * t), 0.0])
        return PoseReference(p_ref_w=p, v_ref_w=v, a_ref_w=acc, j_ref_w=jrk)


@dataclass
class Setpoint:
    """Constant pose reference."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r_ref: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)

    def reference(self, t):
        return PoseReference(p_ref_w=self.position.copy(), r_ref=self.r_ref)


@dataclass
class WrenchTask:
    """Wrench tracking along one linear body axis, engaged at a set time.

    ``push_schedule`` holds (time, force) pairs of the commanded push
    force on the surface; the reference external wrench on the body is
    its negative along ``axis``.
    """

    axis: int = 0
    engage_time: float = 0.0
    push_schedule: list = field(default_factory=lambda: [(0.0, 4.0)])

    def push_force(self, t):
        force = self.push_schedule[0][1]
        for t_k, f_k in self.push_schedule:
            if t >= t_k:
                force = f_k
        return force

    def tau_ref(self, t):
        ref = np.zeros(6)
        ref[self.axis] = -self.push_force(t)
        return ref

    def selection(self, t):
        s = np.zeros(6)
        if t >= self.engage_time:
            s[self.axis] = 1.0
        return s


@dataclass
class Scenario:
    """Declarative description of one simulation run."""

    duration: float = 10.0
    dt: float = 1.0 / 400.0            # physics step
    control_divisor: int = 2           # physics substeps per control tick
    params: InertialParams = field(default_factory=InertialParams)
    pose_gains: PoseGains = field(default_factory=PoseGains)
    wrench_gains: WrenchGains = field(default_factory=WrenchGains)
    k_tau: float = DEFAULT_K_TAU
    trajectory: object = field(default_factory=FigureEight)
    wrench_task: WrenchTask | None = None
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    safety_enabled: bool = True
    lle: LleConfig = field(default_factory=LleConfig)
    lle_seed: str = "nominal"          # "nominal" | "zero"
    environment: Environment = field(default_factory=Environment)
    measurement: MeasurementModel = field(default_factory=MeasurementModel)
    seed: int = 0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.duration < 0.0:
            raise ValueError("duration must be non-negative")
        if self.control_divisor < 1:
            raise ValueError("control_divisor must be >= 1")

    def selection(self, t):
        if self.wrench_task is None:
            return np.zeros(6)
        return self.wrench_task.selection(t)


@dataclass
class LogRecord:
    """One control tick of logged quantities (body frame unless noted)."""

    t: float
    p_w: np.ndarray
    rpy: np.ndarray
    v_b: np.ndarray
    e_p6: np.ndarray
    e_v6: np.ndarray
    tau_c: np.ndarray
    tau_a: np.ndarray
    p_flow: np.ndarray
    p_bar: np.ndarray
    lle_pose: np.ndarray
    lle_wrench: np.ndarray
    qp_status: int                     # 0 none, 1 optimal, 2 max_iter
    slack_p: np.ndarray
    slack_tau: np.ndarray
    tau_ext: np.ndarray
    power_binding: np.ndarray = field(default_factory=lambda: np.zeros(6, dtype=bool))
    input_binding: np.ndarray = field(default_factory=lambda: np.zeros(6, dtype=bool))


def rotation_to_rpy(r):
    """ZYX Euler angles of a rotation matrix."""
    pitch = -np.arcsin(np.clip(r[2, 0], -1.0, 1.0))
    roll = np.arctan2(r[2, 1], r[2, 2])
    yaw = np.arctan2(r[1, 0], r[0, 0])
    return np.array([roll, pitch, yaw])


def _external_wrench(env, p_i, r_i, v_i, t_i):
    """Body-frame external wrench (contact + disturbances) for the hot loop."""
    tau_ext = np.zeros(6)
    s = env.surface
    if s is not None:
        pen = p_i[s.axis] - s.rest_position(t_i)
        if pen > 0.0:
            v_w_axis = float(r_i[s.axis] @ v_i[:3])
            force = -s.k_s * pen - s.d_s * v_w_axis
            if force < 0.0:
                tau_ext[:3] = force * r_i[s.axis]   # world axis force to body
    for d in env.disturbances:
        if d.active(t_i):
            if d.frame == "world":
                tau_ext[:3] += r_i.T @ d.wrench[:3]
                tau_ext[3:] += r_i.T @ d.wrench[3:]
            else:
                tau_ext += d.wrench
    return tau_ext


def rk4_substep(params, env, p, r, v, tau_a, u, t, dt):
    """One RK4 step of the augmented linearized dynamics with jerk held."""
    m_diag = params.m_diag

    def deriv(p_i, r_i, v_i, tau_i, t_i):
        tau_ext = _external_wrench(env, p_i, r_i, v_i, t_i)
        wx, wy, wz = v_i[3:]
        omega_hat = np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])
        return (r_i @ v_i[:3], r_i @ omega_hat, (tau_i + tau_ext) / m_diag, u)

    k1 = deriv(p, r, v, tau_a, t)
    h2 = 0.5 * dt
    k2 = deriv(p + h2 * k1[0], r + h2 * k1[1], v + h2 * k1[2], tau_a + h2 * k1[3], t + h2)
    k3 = deriv(p + h2 * k2[0], r + h2 * k2[1], v + h2 * k2[2], tau_a + h2 * k2[3], t + h2)
    k4 = deriv(p + dt * k3[0], r + dt * k3[1], v + dt * k3[2], tau_a + dt * k3[3], t + dt)
    s = dt / 6.0
    p_n = p + s * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    r_n = orthonormalize(r + s * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]))
    v_n = v + s * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    tau_n = tau_a + s * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    return p_n, r_n, v_n, tau_n


class Simulator:
    """Owns all stateful pieces of one run; single-threaded, deterministic."""

    def __init__(self, scenario):
        self.sc = scenario
        self.rng = np.random.default_rng(scenario.seed)
        self.ft = FtSensor(scenario.measurement, self.rng)
        self.wrench_ctrl = WrenchTrackingController(scenario.wrench_gains)
        m = scenario.params.m_diag
        if scenario.lle_seed == "nominal":
            lam0_p = np.array([pose_nominal_lle(m[i], scenario.pose_gains.d_v[i],
                                                scenario.pose_gains.k_p[i]) for i in range(6)])
            lam0_w = np.array([wrench_nominal_lle(scenario.wrench_gains.k_f[i],
                                                  scenario.wrench_gains.k_i[i]) for i in range(6)])
        else:
            lam0_p = np.zeros(6)
            lam0_w = np.zeros(6)
        self.lle = LleEstimator(scenario.lle, lam0_p, lam0_w)
        self.safety = SafetyFilter(scenario.params, scenario.safety,
                                   filter_cutoff=scenario.lle.filter_cutoff,
                                   pose_gains=scenario.pose_gains)
        self.freeze = np.zeros(6, dtype=bool)
        self.k_tau6 = np.full(6, scenario.k_tau)
        self.t = 0.0
        self.state = self._initial_state()

    def _initial_state(self):
        ref = self.sc.trajectory.reference(0.0)
        r = ref.r_ref.copy()
        v_b = np.concatenate([r.T @ ref.v_ref_w, r.T @ ref.omega_ref_w])
        tau_a = self.sc.params.m_diag * ref.a_ref_b(r)
        return RigidBodyState(p_w=ref.p_ref_w.copy(), r_wb=r, v_b=v_b, tau_a=tau_a)

    def _true_external(self, state, t):
        """(contact wrench in body frame, known disturbance in body frame)."""
        v_w = state.r_wb @ state.v_b[:3]
        cw = contact_wrench(self.sc.environment, state.p_w, v_w, t)
        contact = np.concatenate([state.r_wb.T @ cw.f, cw.tau])
        return contact, disturbance_wrench(self.sc.environment, state.r_wb, t)

    def tick(self):
        """One control tick: sense, decide, integrate; returns the log record."""
        sc = self.sc
        st = self.state
        t = self.t
        dt_c = sc.dt * sc.control_divisor

        contact_b, dist_b = self._true_external(st, t)
        tau_meas = self.ft.advance(contact_b, t)
        tau_ext_est = tau_meas + dist_b
        tau_ext_true = contact_b + dist_b

        ref = sc.trajectory.reference(t)
        errors = pose_errors(st, ref)
        s_diag = selection_diagonal(sc.selection(t))

        tau_p = pose_control(sc.params, sc.pose_gains, errors, ref, st.r_wb)
        tau_p_dot = pose_control_rate(sc.params, sc.pose_gains, st, ref,
                                      errors, tau_ext_est)
        if sc.wrench_task is not None and np.any(s_diag > 0.5):
            tau_ref_w = sc.wrench_task.tau_ref(t)
            tau_f = self.wrench_ctrl.update(tau_meas, tau_ref_w, dt_c,
                                            freeze=self.freeze)
            tau_f_dot = self.wrench_ctrl.last_rate
        else:
            if self.wrench_ctrl._prev_tau_f is not None:
                self.wrench_ctrl.reset()
            tau_f = np.zeros(6)
            tau_f_dot = np.zeros(6)
        errors.e_tau = self.wrench_ctrl.e_tau.copy()
        errors.e_tau_dot = self.wrench_ctrl.e_tau_dot.copy()

        self.lle.update_pose(errors.e_p6, errors.e_v6, dt_c)
        self.lle.update_wrench(errors.e_tau, errors.e_tau_dot, dt_c)

        tau_c = mix(tau_p, tau_f, s_diag)
        tau_c_dot = mix(tau_p_dot, tau_f_dot, s_diag)
        u_ref = augmented_wrench_derivative(st.tau_a, tau_c, tau_c_dot, self.k_tau6)

        v_power = np.where(s_diag > 0.5, st.v_b, errors.e_v6)
        lam6 = np.where(s_diag > 0.5, self.lle.wrench_hat, self.lle.pose_hat)

        if sc.safety_enabled:
            res = self.safety.filter(u_ref, st.tau_a, v_power, lam6,
                                     tau_ext_est, dt_c,
                                     assume_zero_accel=sc.lle.assume_zero_accel)
            u = res.u
            p_bar = res.p_bar
            slack_p, slack_tau = res.slack_power, res.slack_input
            power_binding, input_binding = res.power_binding, res.input_binding
            qp_status = 1 if res.status == "optimal" else 2
            # hold the wrench integral only while dissipation is enforced
            self.freeze = res.power_binding & (s_diag > 0.5) & (lam6 > 0.0)
        else:
            u = u_ref
            p_bar = power_limits(lam6, v_power, sc.safety)
            slack_p = np.zeros(6)
            slack_tau = np.zeros(6)
            power_binding = np.zeros(6, dtype=bool)
            input_binding = np.zeros(6, dtype=bool)
            qp_status = 0
            self.freeze = np.zeros(6, dtype=bool)

        record = LogRecord(
            t=t, p_w=st.p_w.copy(), rpy=rotation_to_rpy(st.r_wb),
            v_b=st.v_b.copy(), e_p6=errors.e_p6, e_v6=errors.e_v6,
            tau_c=tau_c, tau_a=st.tau_a.copy(),
            p_flow=v_power * st.tau_a, p_bar=p_bar,
            lle_pose=self.lle.pose_hat.copy(),
            lle_wrench=self.lle.wrench_hat.copy(),
            qp_status=qp_status, slack_p=slack_p, slack_tau=slack_tau,
            tau_ext=tau_ext_true,
            power_binding=power_binding, input_binding=input_binding,
        )

        p, r, v, tau_a = st.p_w, st.r_wb, st.v_b, st.tau_a
        t_sub = t
        for _ in range(sc.control_divisor):
            p, r, v, tau_a = rk4_substep(sc.params, sc.environment,
                                         p, r, v, tau_a, u, t_sub, sc.dt)
            t_sub += sc.dt
        if not sc.safety_enabled:
            tau_a = np.clip(tau_a, -sc.safety.tau_bar, sc.safety.tau_bar)
        st.p_w, st.r_wb, st.v_b, st.tau_a = p, r, v, tau_a
        self.t = t + dt_c
        return record


def step(scenario, sim=None):
    """Single-tick convenience wrapper; returns (simulator, record)."""
    if sim is None:
        sim = Simulator(scenario)
    return sim, sim.tick()


def run(scenario):
    """Full deterministic rollout; returns the list of log records.

    Raises :class:`NumericalDivergence` (carrying the partial log) when
    any state magnitude exceeds the divergence limit.
    """
    sim = Simulator(scenario)
    dt_c = scenario.dt * scenario.control_divisor
    n_ticks = int(round(scenario.duration / dt_c))
    records = []
    for _ in range(n_ticks + 1):
        records.append(sim.tick())
        big = max(np.max(np.abs(sim.state.p_w)), np.max(np.abs(sim.state.v_b)),
                  np.max(np.abs(sim.state.tau_a)))
        if big > DIVERGENCE_LIMIT:
            raise NumericalDivergence(
                f"state magnitude {big:.3e} exceeded {DIVERGENCE_LIMIT:.0e} "
                f"at t = {sim.t:.3f}", records)
    return records
