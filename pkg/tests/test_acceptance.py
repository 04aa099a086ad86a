"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest -s tests/test_acceptance.py`` to see the per-criterion
report.  Scenario-based criteria run the bundled scenario files, so the
suite checks exactly what the CLI ships.
"""

import time
from importlib import resources

import numpy as np
import pytest

from powergate import logio, qp, scenario_io
from powergate.lle import LleConfig, LleEstimator, pose_nominal_lle
from powergate.safety import boundary_points, pose_safeset_margin
from powergate.sim import (Environment, Scenario, Setpoint, Surface,
                           WrenchTask, rk4_substep, run)
from powergate.dynamics import InertialParams

FIG3_MASS, FIG3_D, FIG3_K = 4.58, 5.0, 20.0


def report(criterion, ok, detail):
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


def bundled(name):
    text = (resources.files("powergate") / "scenarios" / name).read_text()
    return scenario_io.loads(text)


def test_criterion_1_nominal_pose_lle():
    """Unforced pose loop converges to the closed-form exponent -0.546."""
    t0 = time.perf_counter()
    w0 = np.sqrt(FIG3_K / FIG3_MASS)
    zeta = FIG3_D / (2 * np.sqrt(FIG3_K * FIG3_MASS))
    wd = w0 * np.sqrt(1 - zeta ** 2)
    sig = -zeta * w0
    cfg = LleConfig(filter_cutoff=1.0, eps_norm=1e-22,
                    assume_zero_accel=False, lambda_clamp=50.0)
    est = LleEstimator(cfg)
    dt = 1 / 200
    ts = np.arange(0.0, 30.0, dt)
    hats = np.empty_like(ts)
    basis = np.eye(6)[0]
    for i, t in enumerate(ts):
        env = np.exp(sig * t)
        e_p = 0.1 * env * (np.cos(wd * t) - sig / wd * np.sin(wd * t))
        e_v = 0.1 * env * (-(sig ** 2 + wd ** 2) / wd * np.sin(wd * t))
        acc = 0.1 * env * (-(sig ** 2 + wd ** 2) / wd
                           * (sig * np.sin(wd * t) + wd * np.cos(wd * t)))
        est.update_pose(e_p * basis, e_v * basis, dt, accel6=acc * basis)
        hats[i] = est.pose_hat[0]
    # the filtered estimate oscillates around the nominal rate (complex
    # pole pair); its average over whole periods is the converged value
    window = ts >= 30.0 - 8 * (np.pi / wd)
    value = float(np.mean(hats[window]))
    target = pose_nominal_lle(FIG3_MASS, FIG3_D, FIG3_K)
    wall = time.perf_counter() - t0
    ok = abs(value - target) <= 0.03 and wall < 1.0
    report(1, ok, f"pose LLE {value:+.4f} vs {target:+.4f} (tol 0.03), "
                  f"runtime {wall:.2f} s (< 1 s)")


def test_criterion_2_nominal_wrench_lle():
    """Regulated contact on a 30 N/m surface converges to -0.2."""
    t0 = time.perf_counter()
    sc = Scenario(
        duration=14.0, dt=1 / 200, control_divisor=2,
        trajectory=Setpoint(position=np.array([0.1, 0.0, 0.0])),
        wrench_task=WrenchTask(axis=0, engage_time=1.0, push_schedule=[(1.0, 4.0)]),
        environment=Environment(surface=Surface(axis=0, position=0.0,
                                                k_s=30.0, d_s=20.0)),
        lle=LleConfig(eps_norm_wrench=1e-6),
        lle_seed="zero", safety_enabled=False)
    recs = run(sc)
    value = float(recs[-1].lle_wrench[0])
    wall = time.perf_counter() - t0
    ok = abs(value + 0.2) <= 0.02 and wall < 1.0
    report(2, ok, f"wrench LLE {value:+.4f} vs -0.2000 (tol 0.02), "
                  f"runtime {wall:.2f} s (< 1 s)")


def test_criterion_3_free_flight_comparison():
    """14 N / 1 s disturbance: overshoot halved, power bounded."""
    t0 = time.perf_counter()
    logs = {}
    for enabled in (False, True):
        sc = bundled("freeflight.scn")
        sc.safety_enabled = enabled
        logs[enabled] = run(sc)
    t_after = 4.0                       # disturbance ends at 3 s + 1 s
    delta = logio.compare_summary(logs[False], logs[True], t_after)
    p_on = delta["peak_power_on_W"]
    p_off = delta["peak_power_off_W"]
    ratio = delta["overshoot_ratio"]
    wall = time.perf_counter() - t0
    ok = ratio <= 0.5 and p_on <= 1.0 and p_off >= 2.0 and wall < 10.0
    report(3, ok, f"overshoot ratio {ratio:.2f} (<= 0.5), "
                  f"peak power on {p_on:.2f} W (<= 1), off {p_off:.2f} W (>= 2), "
                  f"runtime {wall:.1f} s (< 10 s)")


def _contact_loss_time(records, axis):
    t = np.array([r.t for r in records])
    contact = np.array([abs(r.tau_ext[axis]) > 1e-6 for r in records])
    return float(t[contact][-1])


def test_criterion_4_cart_pull():
    """After the cart pulls away the platform detects and stops."""
    t0 = time.perf_counter()
    sc = bundled("cart.scn")
    recs = run(sc)                      # raises on divergence
    axis = sc.wrench_task.axis
    t = np.array([r.t for r in recs])
    v = np.array([r.v_b[axis] for r in recs])
    lle_w = np.array([r.lle_wrench[axis] for r in recs])
    t_loss = _contact_loss_time(recs, axis)
    after = t > t_loss
    crossings = t[after][lle_w[after] > 0.0]
    t_cross = float(crossings[0] - t_loss) if len(crossings) else np.inf
    i_pk = int(np.argmax(np.abs(v) * after))
    t_stop = np.inf
    for i in np.where(after & (t >= t[i_pk]))[0]:
        if abs(v[i]) < 0.05 and np.all(np.abs(v[i:]) < 0.05):
            t_stop = float(t[i] - t_loss)
            break
    sc_off = bundled("cart.scn")
    sc_off.safety_enabled = False
    v_off = np.max(np.abs([r.v_b[axis] for r in run(sc_off)]))
    wall = time.perf_counter() - t0
    ok = (t_cross <= 0.5 and t_stop <= 5.0 and v_off > 1.0 and wall < 10.0)
    report(4, ok, f"LLE crossed zero {t_cross:.2f} s after loss (<= 0.5), "
                  f"stopped in {t_stop:.2f} s (<= 5), safety-off peak "
                  f"{v_off:.1f} m/s (> 1), runtime {wall:.1f} s (< 10 s)")


def test_criterion_5_damping_sweep():
    """Stopping times strictly decrease over the damping-gain sweep."""
    t0 = time.perf_counter()
    stops = []
    for k_lambda in (0.5, 1.0, 2.0, 4.0):
        sc = bundled("damping_sweep.scn")
        sc.safety.k_lambda = k_lambda
        recs = run(sc)
        axis = sc.wrench_task.axis
        t = np.array([r.t for r in recs])
        v = np.array([r.v_b[axis] for r in recs])
        t_loss = _contact_loss_time(recs, axis)
        after = t > t_loss
        i_pk = int(np.argmax(np.abs(v) * after))
        stop = np.inf
        for i in np.where(after & (t >= t[i_pk]))[0]:
            if abs(v[i]) < 0.1 and np.all(np.abs(v[i:]) < 0.1):
                stop = float(t[i] - t_loss)
                break
        stops.append(stop)
    wall = time.perf_counter() - t0
    strict = all(a > b for a, b in zip(stops, stops[1:]))
    ok = strict and wall < 40.0
    report(5, ok, "stopping times " + ", ".join("%.2f" % s for s in stops)
                  + f" s strictly decreasing over k_lambda {{0.5,1,2,4}}, "
                    f"runtime {wall:.1f} s (< 40 s)")


def test_criterion_6_qp_oracle_equivalence():
    """10^4 random QPs agree with an independent oracle (closed-form slack
    elimination plus box-constrained quasi-Newton minimization)."""
    from test_qp import oracle_objective_reduced, random_problem
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    n_checked = 0
    for _ in range(10_000):
        p = random_problem(rng)
        s = qp.solve(p)
        if p.b.size == 0 and not np.any(np.isfinite(p.hi)):
            assert np.array_equal(s.u, p.u_ref)   # unconstrained: exact
            continue
        f_oracle = oracle_objective_reduced(p)
        rel = abs(s.objective - f_oracle) / max(1.0, abs(f_oracle))
        worst = max(worst, rel)
        n_checked += 1
    wall = time.perf_counter() - t0
    ok = worst <= 1e-6
    report(6, ok, f"{n_checked} constrained QPs, worst relative objective "
                  f"error {worst:.2e} (<= 1e-6), runtime {wall:.0f} s")


def _saturation_extended_mask(records, dof, lookback_ticks):
    bind = np.array([bool(r.input_binding[dof]
                          or abs(r.slack_p[dof]) > 1e-4
                          or abs(r.slack_tau[dof]) > 1e-4) for r in records])
    ext = np.zeros(len(records), dtype=bool)
    for k in np.where(bind)[0]:
        ext[k:k + lookback_ticks + 1] = True
    return bind, ext


def test_criterion_7_forward_invariance():
    """Power flow respects its limit except while saturation binds."""
    t0 = time.perf_counter()
    worst_outside = 0.0
    uncovered_intervals = 0
    for name in ("freeflight.scn", "cart.scn", "damping_sweep.scn"):
        sc = bundled(name)
        recs = run(sc)
        dt_c = recs[1].t - recs[0].t
        lookback = int(round(0.3 / dt_c))   # barrier recovery window ~3/gamma
        for dof in range(6):
            bind, ext = _saturation_extended_mask(recs, dof, lookback)
            viol = np.array([r.p_flow[dof] - r.p_bar[dof] for r in recs])
            outside = viol[~ext]
            if outside.size:
                worst_outside = max(worst_outside, float(np.max(outside)))
            # every violation interval must overlap a binding event
            vmask = viol > 1e-3
            start = None
            for k in range(len(vmask) + 1):
                flag = vmask[k] if k < len(vmask) else False
                if flag and start is None:
                    start = k
                elif not flag and start is not None:
                    lo = max(0, start - lookback)
                    if not np.any(bind[lo:k + lookback]):
                        uncovered_intervals += 1
                    start = None
    wall = time.perf_counter() - t0
    ok = worst_outside <= 1e-3 and uncovered_intervals == 0
    report(7, ok, f"worst violation outside saturation windows "
                  f"{worst_outside:.2e} W (<= 1e-3), uncovered violation "
                  f"intervals {uncovered_intervals} (= 0), runtime {wall:.0f} s")


def test_criterion_8_safe_set_geometry():
    """Sampled boundary asymptotes and scaled-set containment."""
    t0 = time.perf_counter()
    e_p = np.linspace(-6.0, 6.0, 481)
    e_v = np.linspace(-26.0, 26.0, 2081)
    pp, vv = np.meshgrid(e_p, e_v)
    marg = pose_safeset_margin(pp, vv, FIG3_MASS, FIG3_D, FIG3_K, 1.0, "nominal")
    pts = boundary_points(e_p, e_v, marg)
    flat = pts[(pts[:, 0] > 4.0) & (np.abs(pts[:, 1]) < 1.0)]
    flat = flat[np.argsort(flat[:, 0])]
    slope_flat = float(np.polyfit(flat[-30:, 0], flat[-30:, 1], 1)[0])
    steep = pts[(pts[:, 0] > 4.0) & (pts[:, 1] < -10.0)]
    steep = steep[np.argsort(steep[:, 0])]
    slope_steep = float(np.polyfit(steep[-30:, 0], steep[-30:, 1], 1)[0])

    bis = (FIG3_D - np.sqrt(FIG3_K ** 2 + FIG3_D ** 2)) / FIG3_K
    theta = np.arctan2(bis, 1.0) + np.pi
    radii = np.linspace(0.005, 3.0, 1200)
    bp, bv = radii * np.cos(theta), radii * np.sin(theta)
    m_nom = pose_safeset_margin(bp, bv, FIG3_MASS, FIG3_D, FIG3_K, 1.0, "nominal")
    m_sc = pose_safeset_margin(bp, bv, FIG3_MASS, FIG3_D, FIG3_K, 1.0, "scaled")
    r_nom = radii[np.where(m_nom < 0)[0][0]] if np.any(m_nom < 0) else np.inf
    r_sc = radii[np.where(m_sc < 0)[0][0]] if np.any(m_sc < 0) else np.inf
    step = radii[1] - radii[0]
    wall = time.perf_counter() - t0
    ok = (abs(slope_flat) <= 0.01 and abs(slope_steep + 4.0) <= 0.01
          and r_sc <= r_nom + step)
    report(8, ok, f"asymptote slopes {slope_flat:+.4f} (|.| <= 0.01) and "
                  f"{slope_steep:+.4f} (vs -4.00 +/- 0.01); scaled boundary "
                  f"{r_sc:.3f} inside nominal {r_nom:.3f} along the bisector, "
                  f"runtime {wall:.0f} s")


def test_criterion_9_numerical_hygiene():
    """Integrator order, rotation drift and bitwise reproducibility."""
    t0 = time.perf_counter()
    params = InertialParams()
    env = Environment()

    def terminal(dt):
        p, r = np.zeros(3), np.eye(3)
        v = np.array([0.3, 0.2, 0.1, 0.9, 0.7, 1.1])
        tau = np.array([0.5, 0.0, 0.2, 0.05, 0.0, 0.02])
        t = 0.0
        for _ in range(int(round(2.0 / dt))):
            p, r, v, tau = rk4_substep(params, env, p, r, v, tau,
                                       np.zeros(6), t, dt)
            t += dt
        return np.concatenate([p, r.ravel(), v, tau])

    e1 = np.linalg.norm(terminal(1 / 100) - terminal(1 / 200))
    e2 = np.linalg.norm(terminal(1 / 200) - terminal(1 / 400))
    order_ratio = e1 / e2

    p, r = np.zeros(3), np.eye(3)
    v = np.array([0.0, 0.0, 0.0, 0.4, 0.3, 0.5])
    tau = np.zeros(6)
    t = 0.0
    drift = 0.0
    for k in range(24000):
        p, r, v, tau = rk4_substep(params, env, p, r, v, tau, np.zeros(6), t, 1 / 400)
        t += 1 / 400
        if k % 2000 == 0:
            drift = max(drift, float(np.max(np.abs(r.T @ r - np.eye(3)))))
    drift = max(drift, float(np.max(np.abs(r.T @ r - np.eye(3)))))

    sc_a = bundled("freeflight.scn")
    sc_b = bundled("freeflight.scn")
    sc_a.duration = sc_b.duration = 4.0
    bitwise = logio.to_csv(run(sc_a)) == logio.to_csv(run(sc_b))
    sc_c = bundled("cart.scn")
    sc_d = bundled("cart.scn")
    sc_c.duration = sc_d.duration = 3.0
    sc_c.measurement.noise_std = sc_d.measurement.noise_std = 0.05
    sc_c.seed = sc_d.seed = 99
    bitwise_noise = logio.to_csv(run(sc_c)) == logio.to_csv(run(sc_d))

    wall = time.perf_counter() - t0
    ok = (10.0 <= order_ratio <= 22.0 and drift < 1e-6
          and bitwise and bitwise_noise)
    report(9, ok, f"RK4 halving ratio {order_ratio:.1f} (in [10, 22]), "
                  f"rotation drift {drift:.1e} over 60 s (< 1e-6), "
                  f"bitwise reproducible: clean {bitwise}, noisy {bitwise_noise}, "
                  f"runtime {wall:.0f} s")
