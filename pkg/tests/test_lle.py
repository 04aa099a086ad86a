import numpy as np
import pytest

from powergate.lle import (DegenerateState, LleConfig, LleEstimator,
                           lle_punctual, lowpass_update, nominal_lle,
                           pose_jacobian, pose_lle, pose_nominal_lle,
                           wrench_lle, wrench_nominal_lle)


def test_punctual_pure_exponential():
    assert abs(lle_punctual([1.0, 0.0], [-0.5, 0.0]) + 0.5) < 1e-15


def test_punctual_orthogonal_motion():
    for k in (0.1, -3.0, 7.0):
        assert lle_punctual([1.0, 0.0], [0.0, k]) == 0.0


def test_punctual_degenerate():
    with pytest.raises(DegenerateState):
        lle_punctual([1e-9, 0.0], [1.0, 0.0], eps_norm=1e-6)


def test_punctual_exact_on_modes():
    # x(t) = e^{lam t} x0 sampled at any rate gives the exact exponent
    rng = np.random.default_rng(11)
    for lam in (-2.0, -0.37, 0.8):
        x0 = rng.normal(size=4)
        for t in rng.uniform(0.0, 3.0, 10):
            x = np.exp(lam * t) * x0
            assert abs(lle_punctual(x, lam * x) - lam) < 1e-10


def test_pose_lle_examples():
    assert pose_lle(1.0, 0.0) == 0.0
    assert abs(pose_lle(1.0, 1.0) - 0.5) < 1e-15


def test_wrench_lle_examples():
    assert abs(wrench_lle(2.0, -0.4) + 0.2) < 1e-15
    with pytest.raises(DegenerateState):
        wrench_lle(1e-5, 1.0, eps_norm=1e-6)


def test_lowpass_dc_gain():
    lam = 0.0
    for _ in range(400):
        lam = lowpass_update(lam, 2.5, cutoff=10.0, dt=0.01)
    assert abs(lam - 2.5) < 1e-10


def test_lowpass_attenuates_fast_oscillation():
    # one decade above cutoff: attenuation of at least 20 dB/decade
    cutoff, w = 1.0, 10.0
    dt = 1e-3
    lam = 0.0
    out = []
    for i in range(60000):
        t = i * dt
        lam = lowpass_update(lam, np.sin(w * t), cutoff, dt)
        if t > 30.0:
            out.append(lam)
    gain = (np.max(out) - np.min(out)) / 2.0
    assert gain < 10 ** (-20 / 20) * 1.05


def test_lowpass_zero_dt():
    assert lowpass_update(1.23, 99.0, cutoff=10.0, dt=0.0) == 1.23


def test_nominal_lle_examples():
    u_p = pose_jacobian(4.58, 5.0, 20.0)
    assert abs(nominal_lle(u_p) + 0.5459) < 1e-3
    assert abs(pose_nominal_lle(4.58, 5.0, 20.0) - nominal_lle(u_p)) < 1e-12
    assert abs(nominal_lle([[-0.2]]) + 0.2) < 1e-15
    assert abs(wrench_nominal_lle(1.0, 0.4) + 0.2) < 1e-15
    assert nominal_lle(np.zeros((3, 3))) == 0.0


def test_pose_nominal_overdamped_branch():
    # d^2 > 4 k m: slowest real root
    lam = pose_nominal_lle(1.0, 5.0, 1.0)
    roots = np.roots([1.0, 5.0, 1.0])
    assert abs(lam - np.max(roots)) < 1e-12


def test_estimator_degenerate_hold_is_bitwise():
    est = LleEstimator(LleConfig(eps_norm=1e-6, eps_norm_wrench=1e-6))
    est.update_pose(np.full(6, 0.1), np.full(6, 0.05), 0.01)
    est.update_wrench(np.full(6, 0.5), np.full(6, -0.1), 0.01)
    pose_before = est.pose_hat.copy()
    wrench_before = est.wrench_hat.copy()
    for _ in range(10):
        est.update_pose(np.full(6, 1e-5), np.full(6, 1e-5), 0.01)
        est.update_wrench(np.full(6, 1e-5), np.full(6, 1.0), 0.01)
    assert np.array_equal(est.pose_hat, pose_before)
    assert np.array_equal(est.wrench_hat, wrench_before)


def test_estimator_tracks_true_mode():
    # feed the exact decaying oscillator; the cycle-averaged filtered
    # estimate recovers the real part of the dominant eigenvalue
    m, d, k = 4.58, 5.0, 20.0
    w0 = np.sqrt(k / m)
    zeta = d / (2 * np.sqrt(k * m))
    wd = w0 * np.sqrt(1 - zeta ** 2)
    sig = -zeta * w0
    cfg = LleConfig(filter_cutoff=1.0, eps_norm=1e-22,
                    assume_zero_accel=False, lambda_clamp=50.0)
    est = LleEstimator(cfg)
    dt = 1 / 200
    t_grid = np.arange(0.0, 30.0, dt)
    hats = np.empty_like(t_grid)
    for i, t in enumerate(t_grid):
        e = np.exp(sig * t)
        ep = 0.1 * e * (np.cos(wd * t) - sig / wd * np.sin(wd * t))
        ev = 0.1 * e * (-(sig ** 2 + wd ** 2) / wd * np.sin(wd * t))
        ac = 0.1 * e * (-(sig ** 2 + wd ** 2) / wd
                        * (sig * np.sin(wd * t) + wd * np.cos(wd * t)))
        z = np.zeros(6)
        est.update_pose(z + ep * np.eye(6)[0], z + ev * np.eye(6)[0], dt,
                        accel6=z + ac * np.eye(6)[0])
        hats[i] = est.pose_hat[0]
    window = t_grid >= 30.0 - 8 * (np.pi / wd)
    assert abs(np.mean(hats[window]) - sig) < 0.01


def test_estimator_sign_tracks_divergence():
    # norm growth must push the estimate positive, recovery negative
    cfg = LleConfig(filter_cutoff=10.0)
    est = LleEstimator(cfg)
    dt = 1 / 200
    for i in range(600):                 # growing errors, aligned
        g = np.exp(0.8 * i * dt)
        est.update_pose(np.eye(6)[0] * 0.01 * g, np.eye(6)[0] * 0.008 * g, dt)
    assert est.pose_hat[0] > 0.0
    for i in range(600):                 # decaying, anti-aligned
        g = np.exp(-0.8 * i * dt)
        est.update_pose(np.eye(6)[0] * 0.01 * g, -np.eye(6)[0] * 0.008 * g, dt)
    assert est.pose_hat[0] < 0.0


def test_estimator_raw_clamped():
    cfg = LleConfig(lambda_clamp=5.0, eps_norm_wrench=1e-8)
    est = LleEstimator(cfg)
    est.update_wrench(np.full(6, 1e-3), np.full(6, 100.0), 0.01)
    assert np.all(est.wrench_raw <= 5.0)


def test_equilibrium_limit_approaches_nominal():
    # unforced pose loop near the origin: raw estimate approaches the
    # Jacobian's largest real part within 5 percent (cycle-averaged)
    m, d, k = 4.58, 5.0, 20.0
    lam_ref = pose_nominal_lle(m, d, k)
    w0 = np.sqrt(k / m)
    zeta = d / (2 * np.sqrt(k * m))
    wd = w0 * np.sqrt(1 - zeta ** 2)
    sig = -zeta * w0
    dt = 1 / 400
    t = np.arange(0.0, 20.0, dt)
    e = np.exp(sig * t)
    ep = 1e-3 * e * (np.cos(wd * t) - sig / wd * np.sin(wd * t))
    ev = 1e-3 * e * (-(sig ** 2 + wd ** 2) / wd * np.sin(wd * t))
    ac = 1e-3 * e * (-(sig ** 2 + wd ** 2) / wd
                     * (sig * np.sin(wd * t) + wd * np.cos(wd * t)))
    raw = (ev * ac + ep * ev) / (ev * ev + ep * ep)
    window = t >= 20.0 - 6 * (np.pi / wd)
    assert abs(np.mean(raw[window]) - lam_ref) / abs(lam_ref) < 0.05
