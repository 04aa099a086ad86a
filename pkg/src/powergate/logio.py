"""CSV emission and summary statistics for simulation logs.

The column order is fixed: time, then per-DoF groups for state, errors,
commands, power, exponent estimates, QP diagnostics and external wrench.
Values render with 9 significant digits, so identical runs produce
byte-identical files.
"""

import numpy as np

_DOF = ["1", "2", "3", "4", "5", "6"]

CSV_COLUMNS = (
    ["t_s"]
    + ["p_x_m", "p_y_m", "p_z_m", "roll_rad", "pitch_rad", "yaw_rad"]
    + [f"v_{i}" for i in _DOF]
    + [f"e_p_{i}" for i in _DOF]
    + [f"e_v_{i}" for i in _DOF]
    + [f"tau_c_{i}" for i in _DOF]
    + [f"tau_a_{i}" for i in _DOF]
    + [f"p_flow_{i}_W" for i in _DOF]
    + [f"p_bar_{i}_W" for i in _DOF]
    + [f"lle_pose_{i}" for i in _DOF]
    + [f"lle_wrench_{i}" for i in _DOF]
    + ["qp_status"]
    + [f"slack_p_{i}" for i in _DOF]
    + [f"slack_tau_{i}" for i in _DOF]
    + [f"tau_ext_{i}" for i in _DOF]
)

CSV_HEADER = ",".join(CSV_COLUMNS)


class SchemaMismatch(ValueError):
    """CSV does not conform to the log schema."""


def record_row(r):
    vals = np.concatenate([
        [r.t], r.p_w, r.rpy, r.v_b, r.e_p6, r.e_v6, r.tau_c, r.tau_a,
        r.p_flow, r.p_bar, r.lle_pose, r.lle_wrench,
        [float(r.qp_status)], r.slack_p, r.slack_tau, r.tau_ext,
    ])
    return ",".join("%.9g" % v for v in vals)


def to_csv(records):
    """Render a list of log records as CSV text."""
    lines = [CSV_HEADER]
    lines.extend(record_row(r) for r in records)
    return "\n".join(lines) + "\n"


def write_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(to_csv(records))


def read_csv(path):
    """Load a schema-conforming log CSV into a dict of column arrays."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise SchemaMismatch("log header does not match the schema")
        body = f.read()
    if not body.strip():
        raise SchemaMismatch("log contains no data rows")
    data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    if data.shape[1] != len(CSV_COLUMNS):
        raise SchemaMismatch(f"expected {len(CSV_COLUMNS)} columns, got {data.shape[1]}")
    return {name: data[:, j] for j, name in enumerate(CSV_COLUMNS)}


def columns(table, prefix, suffix=""):
    """Stack per-DoF columns 'prefix_1..6suffix' into an (n, 6) array."""
    return np.stack([table[f"{prefix}_{i}{suffix}"] for i in _DOF], axis=1)


def zero_crossings(t, y):
    """Times at which a signal crosses zero upward (linear interpolation)."""
    out = []
    for i in range(len(y) - 1):
        if y[i] <= 0.0 < y[i + 1]:
            f = -y[i] / (y[i + 1] - y[i])
            out.append(t[i] + f * (t[i + 1] - t[i]))
    return out


def violation_durations(t, p_flow, p_bar, tol=1e-3):
    """Per-DoF total duration of power-limit violations (s)."""
    if len(t) < 2:
        return np.zeros(p_flow.shape[1])
    dt = np.median(np.diff(t))
    return np.sum(p_flow - p_bar > tol, axis=0) * dt


def summarize(records):
    """Headline statistics of a run, as a dict of floats/lists."""
    t = np.array([r.t for r in records])
    e_v = np.array([r.e_v6 for r in records])
    p_flow = np.array([r.p_flow for r in records])
    p_bar = np.array([r.p_bar for r in records])
    lle_pose = np.array([r.lle_pose for r in records])
    lle_wrench = np.array([r.lle_wrench for r in records])
    summary = {
        "duration_s": float(t[-1]) if len(t) else 0.0,
        "peak_power_W": float(np.max(p_flow)) if len(t) else 0.0,
        "peak_velocity_error": float(np.max(np.abs(e_v))) if len(t) else 0.0,
        "power_violation_s": violation_durations(t, p_flow, p_bar).tolist(),
        "lle_pose_zero_crossings_s": zero_crossings(t, lle_pose[:, 1]) if len(t) > 1 else [],
        "lle_wrench_zero_crossings_s": zero_crossings(t, lle_wrench[:, 0]) if len(t) > 1 else [],
        "qp_max_iter_ticks": int(sum(1 for r in records if r.qp_status == 2)),
    }
    return summary


def summary_text(summary):
    lines = []
    for key, value in summary.items():
        if isinstance(value, list):
            rendered = ", ".join("%.6g" % v for v in value)
            lines.append(f"{key}: [{rendered}]")
        else:
            lines.append(f"{key}: {value:.6g}" if isinstance(value, float)
                         else f"{key}: {value}")
    return "\n".join(lines) + "\n"


def recovery_overshoot(records, t_after):
    """Per-DoF overshoot: peak |e_v| after its first zero crossing past
    ``t_after`` (the swing past the reference while recovering)."""
    t = np.array([r.t for r in records])
    e_v = np.array([r.e_v6 for r in records])
    out = np.zeros(6)
    for i in range(6):
        y = e_v[:, i]
        after = np.where(t >= t_after)[0]
        if len(after) < 2:
            continue
        sign0 = np.sign(y[after[0]])
        if sign0 == 0.0:
            out[i] = np.max(np.abs(y[after]))
            continue
        flipped = [j for j in after[1:] if np.sign(y[j]) == -sign0]
        if flipped:
            out[i] = np.max(np.abs(y[flipped[0]:]))
    return out


def compare_summary(records_off, records_on, t_after):
    """Delta summary of a safety off/on pair (overshoot and power ratios)."""
    os_off = recovery_overshoot(records_off, t_after)
    os_on = recovery_overshoot(records_on, t_after)
    significant = os_off > 0.05
    if np.any(significant):
        ratios = os_on[significant] / os_off[significant]
        overshoot_ratio = float(np.max(ratios))
    else:
        overshoot_ratio = 1.0
    p_off = max(float(np.max([np.max(r.p_flow) for r in records_off])), 1e-12)
    p_on = float(np.max([np.max(r.p_flow) for r in records_on]))
    tail = records_off[-max(1, len(records_off) // 10):]
    v_tail = float(np.max(np.abs([r.v_b for r in tail])))
    diverged_off = (not np.isfinite(v_tail)) or v_tail > 1.0
    return {
        "overshoot_ratio": overshoot_ratio,
        "peak_power_off_W": p_off,
        "peak_power_on_W": p_on,
        "peak_power_ratio": p_on / p_off,
        "off_run_divergent": bool(diverged_off),
    }
