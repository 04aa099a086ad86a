"""Power-flow safety layer: CBF constraint assembly, power adaptation law,
QP filtering of the jerk command, and safe-set analysis utilities.

Per DoF the layer limits the power injected by the controller,

    e_v_i * tau_a_i <= p_bar_i,

with a limit adapted from the filtered Lyapunov-exponent estimate:
positive limits (generation allowed) while the loop converges, and a
dissipation demand scaled by the squared velocity when it diverges (a
dissipation request must vanish with the kinetic state or it cannot be
met).  The constraint is imposed on the jerk-level input through the
barrier ``h_p = p_bar - e_v tau_a`` together with an input-magnitude
barrier ``h_tau = tau_bar^2 - tau_a^2`` and a hard jerk box; slack
variables keep the program feasible under saturation.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qp
from .lle import pose_nominal_lle


@dataclass
class SafetyConfig:
    """Gains and limits of the safety layer.

    ``k_lambda`` maps the exponent estimate to a power limit and acts as a
    damping coefficient during enforced dissipation.  ``gamma_p`` /
    ``gamma_tau`` are the proportional class-K gains of the power and
    input barriers.  Non-finite ``tau_bar`` / ``jerk_bar`` entries disable
    the corresponding constraint.
    """

    k_lambda: float = 1.0              # W s
    gamma_p: np.ndarray = field(default_factory=lambda: np.full(6, 10.0))    # 1/s
    gamma_tau: np.ndarray = field(default_factory=lambda: np.full(6, 10.0))  # 1/s
    tau_bar: np.ndarray = field(default_factory=lambda: np.full(6, np.inf))   # N, N m
    jerk_bar: np.ndarray = field(default_factory=lambda: np.full(6, 300.0))   # N/s
    k_delta: float = qp.DEFAULT_K_DELTA
    enable_set_scaling: bool = False

    def __post_init__(self):
        self.gamma_p = np.asarray(self.gamma_p, dtype=np.float64) * np.ones(6)
        self.gamma_tau = np.asarray(self.gamma_tau, dtype=np.float64) * np.ones(6)
        self.tau_bar = np.asarray(self.tau_bar, dtype=np.float64) * np.ones(6)
        self.jerk_bar = np.asarray(self.jerk_bar, dtype=np.float64) * np.ones(6)
        if self.k_lambda <= 0.0:
            raise ValueError("k_lambda must be positive")
        if np.any(self.gamma_p <= 0.0) or np.any(self.gamma_tau <= 0.0):
            raise ValueError("barrier gains must be positive")


@dataclass
class PowerState:
    """Per-DoF power limit, its filtered derivative, and realized flow (W)."""

    p_bar: np.ndarray = field(default_factory=lambda: np.zeros(6))
    p_bar_dot: np.ndarray = field(default_factory=lambda: np.zeros(6))
    p_flow: np.ndarray = field(default_factory=lambda: np.zeros(6))


@dataclass
class SafeSetGeometry:
    """Analytic geometry of one pose-DoF safe set."""

    asymptote_slopes: tuple
    bisector_slope: float
    c1: float
    k_lambda_prime: float


def power_limit(lambda_hat, e_v_i, cfg):
    """Adaptive power-flow limit; continuous in the exponent at zero."""
    if lambda_hat < 0.0:
        return -cfg.k_lambda * lambda_hat
    return -cfg.k_lambda * lambda_hat * e_v_i * e_v_i


def power_limits(lambda_hat6, e_v6, cfg):
    """Vectorized :func:`power_limit` over the six DoFs."""
    lam = np.asarray(lambda_hat6, dtype=np.float64)
    e_v = np.asarray(e_v6, dtype=np.float64)
    return np.where(lam < 0.0, -cfg.k_lambda * lam, -cfg.k_lambda * lam * e_v * e_v)


def assemble_power_constraint(e_v_i, tau_a_i, tau_ext_i, p_bar_i, p_bar_dot_i,
                              mass_i, gamma_p_i):
    """Jerk-level linear constraint rendering the power barrier invariant.

    Returns ``(coeff, bound)`` for ``coeff * u_i <= bound`` with
    ``coeff = e_v_i``; ``bound`` collects the class-K term, the limit
    derivative and the drift of the barrier along the plant dynamics.
    """
    h_p = p_bar_i - e_v_i * tau_a_i
    bound = gamma_p_i * h_p + p_bar_dot_i - tau_a_i * (tau_a_i + tau_ext_i) / mass_i
    return e_v_i, bound


def assemble_input_constraint(tau_a_i, tau_bar_i, gamma_tau_i):
    """Jerk-level linear constraint keeping |tau_a_i| within its limit."""
    h_tau = tau_bar_i * tau_bar_i - tau_a_i * tau_a_i
    return 2.0 * tau_a_i, gamma_tau_i * h_tau


def set_scaling(lambda_hat, mass, d_v, k_p):
    """Scaling coefficient matching the zero-acceleration set to the nominal
    one along the asymptote bisector.  Returns ``(c1, k_lambda_prime)``
    with the coefficient clamped to [0, 1]."""
    c1 = (d_v + np.sqrt(d_v * d_v + k_p * k_p)) / (2.0 * mass)
    k_prime = -lambda_hat / (c1 - lambda_hat)
    return c1, float(np.clip(k_prime, 0.0, 1.0))


def bisector_slope(d_v, k_p):
    """Slope of the bisector of the two safe-set asymptotes."""
    return (d_v - np.sqrt(k_p * k_p + d_v * d_v)) / k_p


def safeset_geometry(mass, d_v, k_p, lambda_hat=None):
    """Analytic safe-set geometry for one pose DoF."""
    if lambda_hat is None:
        lambda_hat = pose_nominal_lle(mass, d_v, k_p)
    c1, k_prime = set_scaling(lambda_hat, mass, d_v, k_p)
    return SafeSetGeometry(
        asymptote_slopes=(0.0, -k_p / d_v),
        bisector_slope=float(bisector_slope(d_v, k_p)),
        c1=float(c1),
        k_lambda_prime=k_prime,
    )


def safeset_membership(e_p, e_v, tau_p, p_bar):
    """Membership and margin of one pose-DoF state in its safe set."""
    margin = p_bar - e_v * tau_p
    return margin >= 0.0, margin


def pose_safeset_margin(e_p, e_v, mass, d_v, k_p, k_lambda,
                        variant="nominal"):
    """Safe-set margin field of the regulating pose loop at (e_p, e_v).

    The exponent entering the power limit is evaluated punctually at the
    queried state: with the true unforced acceleration (``nominal``), with
    the acceleration dropped (``zero_accel``), or the latter with the
    limit rescaled to fit inside the nominal set (``scaled``).  Inputs may
    be arrays (broadcast).
    """
    e_p = np.asarray(e_p, dtype=np.float64)
    e_v = np.asarray(e_v, dtype=np.float64)
    tau_p = -(d_v * e_v + k_p * e_p)
    n2 = e_v * e_v + e_p * e_p
    safe_n2 = np.where(n2 > 0.0, n2, 1.0)
    accel = tau_p / mass
    lam_true = np.where(n2 > 0.0, (e_v * accel + e_p * e_v) / safe_n2, 0.0)
    lam_za = np.where(n2 > 0.0, (e_p * e_v) / safe_n2, 0.0)
    if variant == "nominal":
        lam = lam_true
    elif variant in ("zero_accel", "scaled"):
        lam = lam_za
    else:
        raise ValueError(f"unknown safe-set variant {variant!r}")
    p_bar = np.where(lam < 0.0, -k_lambda * lam, -k_lambda * lam * e_v * e_v)
    if variant == "scaled":
        # match the zero-acceleration set to the nominal one: the scaling
        # coefficient is evaluated at the true-acceleration exponent
        c1 = (d_v + np.sqrt(d_v * d_v + k_p * k_p)) / (2.0 * mass)
        k_prime = np.clip(-lam_true / (c1 - lam_true), 0.0, 1.0)
        p_bar = k_prime * p_bar
    return p_bar - e_v * tau_p


def wrench_safeset_margin(tau_f, v, d_s, k_s, k_f, k_i, tau_ref, k_lambda,
                          mass=4.58, eps=1e-3):
    """Safe-set margin of the wrench loop at (tau_f, v) against a
    spring-damper surface.

    The exponent at a point is reconstructed from the control law: the
    wrench-error rate is the force gap minus the surface reaction rate
    accumulated over one contact-mode period (this is where the surface
    stiffness enters), and the integral error follows from inverting the
    control law at the commanded wrench.  ``tau_ref`` is the reference
    external wrench on the body (negative of the commanded push force).
    Near the regulated point the ratio degenerates and is held at the
    nominal exponent of the wrench loop.
    """
    tau_f = np.asarray(tau_f, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    f_ref = -tau_ref                      # commanded push force on the surface
    rate_drag = d_s + np.sqrt(k_s * mass / (k_f + 1.0))
    e_dot = (f_ref - tau_f) - rate_drag * v
    e_int = (k_f + 1.0) * (tau_f - f_ref) / k_i
    nominal = -k_i / (k_f + 1.0)
    ok = np.abs(e_int) >= eps
    lam = np.where(ok, e_dot / np.where(ok, e_int, 1.0), nominal)
    p_bar = np.where(lam < 0.0, -k_lambda * lam, -k_lambda * lam * v * v)
    return p_bar - v * tau_f


def boundary_points(x_grid, y_grid, margin):
    """Zero crossings of a margin field along each grid column.

    Returns an (k, 2) array of (x, y) samples where the margin changes
    sign along the y direction, linearly interpolated.
    """
    pts = []
    for j, x in enumerate(x_grid):
        col = margin[:, j]
        sign = np.sign(col)
        for i in range(len(y_grid) - 1):
            if sign[i] == 0.0:
                pts.append((x, y_grid[i]))
            elif sign[i] * sign[i + 1] < 0.0:
                f = col[i] / (col[i] - col[i + 1])
                pts.append((x, y_grid[i] + f * (y_grid[i + 1] - y_grid[i])))
    return np.array(pts) if pts else np.zeros((0, 2))


@dataclass
class FilterResult:
    """Output of one safety-filter evaluation."""

    u: np.ndarray
    p_bar: np.ndarray
    p_bar_dot: np.ndarray
    slack_power: np.ndarray
    slack_input: np.ndarray
    power_binding: np.ndarray
    input_binding: np.ndarray
    status: str


class SafetyFilter:
    """Assembles and solves the jerk-level safety QP each control tick.

    Owns the power-limit derivative filter state and the warm-start
    active set.  ``filter_cutoff`` smooths the backward difference of the
    power limit (same bandwidth as the exponent filter) to avoid jerk
    chatter at the adaptation-law branch switch.
    """

    def __init__(self, params, cfg, filter_cutoff=10.0, pose_gains=None):
        self.params = params
        self.cfg = cfg
        self.filter_cutoff = filter_cutoff
        self.pose_gains = pose_gains
        self._p_bar_filt = None
        self._p_bar_dot = np.zeros(6)
        self._warm = ()

    def reset(self):
        self._p_bar_filt = None
        self._p_bar_dot = np.zeros(6)
        self._warm = ()

    def filter(self, u_ref, tau_a, v_power, lambda_hat6, tau_ext_est, dt,
               assume_zero_accel=True):
        """Return the safety-filtered jerk command and diagnostics.

        ``v_power`` is the per-DoF velocity entering the power flow (the
        velocity error for pose-controlled DoFs, the body twist for
        wrench-controlled ones); ``lambda_hat6`` the matching filtered
        exponents.  The enforced limit is the adaptation law's output
        passed through a first-order low pass (same bandwidth as the
        exponent filter); its derivative term in the constraint is then
        the filter's own exact rate, which keeps the barrier enforceable
        without lag or jerk chatter at the branch switch.
        """
        cfg = self.cfg
        m_diag = self.params.m_diag
        p_target = power_limits(lambda_hat6, v_power, cfg)
        if cfg.enable_set_scaling and assume_zero_accel and self.pose_gains is not None:
            for i in range(6):
                _, k_prime = set_scaling(lambda_hat6[i], m_diag[i],
                                         self.pose_gains.d_v[i], self.pose_gains.k_p[i])
                p_target[i] *= k_prime
        if self._p_bar_filt is None:
            self._p_bar_filt = p_target.copy()
        alpha = 1.0 - np.exp(-self.filter_cutoff * dt)
        self._p_bar_filt = self._p_bar_filt + alpha * (p_target - self._p_bar_filt)
        self._p_bar_dot = self.filter_cutoff * (p_target - self._p_bar_filt)
        p_bar = self._p_bar_filt.copy()

        rows, bounds, meta = [], [], []
        for i in range(6):
            coeff, bound = assemble_power_constraint(
                v_power[i], tau_a[i], tau_ext_est[i], p_bar[i],
                self._p_bar_dot[i], m_diag[i], cfg.gamma_p[i])
            row = np.zeros(6)
            row[i] = coeff
            rows.append(row)
            bounds.append(bound)
            meta.append(("power", i))
        for i in range(6):
            if not np.isfinite(cfg.tau_bar[i]):
                continue
            coeff, bound = assemble_input_constraint(tau_a[i], cfg.tau_bar[i],
                                                     cfg.gamma_tau[i])
            row = np.zeros(6)
            row[i] = coeff
            rows.append(row)
            bounds.append(bound)
            meta.append(("input", i))

        problem = qp.QpProblem(
            u_ref=np.asarray(u_ref, dtype=np.float64),
            a=np.stack(rows),
            b=np.array(bounds),
            k_delta=cfg.k_delta,
            lo=-cfg.jerk_bar,
            hi=cfg.jerk_bar,
        )
        sol = qp.solve(problem, warm_set=self._warm)
        self._warm = sol.active_set

        u = sol.u
        if sol.status == "max_iter":
            u = np.clip(u, -cfg.jerk_bar, cfg.jerk_bar)

        slack_power = np.zeros(6)
        slack_input = np.zeros(6)
        power_binding = np.zeros(6, dtype=bool)
        input_binding = np.zeros(6, dtype=bool)
        n_box0 = len(rows)
        for j, (kind, i) in enumerate(meta):
            active = j in sol.active_set
            if kind == "power":
                slack_power[i] = sol.delta[j]
                power_binding[i] = active
            else:
                slack_input[i] = sol.delta[j]
                input_binding[i] = active
        # a binding jerk-box bound on DoF i counts as input limiting
        for j in sol.active_set:
            if j >= n_box0:
                input_binding[(j - n_box0) % 6] = True

        return FilterResult(
            u=u, p_bar=p_bar, p_bar_dot=self._p_bar_dot.copy(),
            slack_power=slack_power, slack_input=slack_input,
            power_binding=power_binding, input_binding=input_binding,
            status=sol.status,
        )
