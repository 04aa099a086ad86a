"""Scenario text format: parsing, validation and canonical serialization.

A scenario file is a flat INI-style document with the sections

    [vehicle] [gains] [safety] [environment] [trajectory] [run]

plus zero or more repeatable ``[disturbance]`` blocks.  Keys carry their
SI unit as a suffix (``k_p_lin_N_per_m``); unknown sections or keys are
rejected with the offending line number.  Serialization is canonical, so
parse -> serialize -> parse is the identity.
"""

import numpy as np

from .controllers import PoseGains, WrenchGains
from .dynamics import InertialParams
from .lle import LleConfig
from .safety import SafetyConfig
from .sim import (DisturbanceEvent, Environment, FigureEight,
                  MeasurementModel, Scenario, Setpoint, Surface, WrenchTask)

AXES = {"x": 0, "y": 1, "z": 2}
AXIS_NAMES = {v: k for k, v in AXES.items()}


class ScenarioError(ValueError):
    """Malformed scenario file; message carries the line number."""


_SCHEMA = {
    "vehicle": {
        "mass_kg": float,
        "inertia_xx_kgm2": float,
        "inertia_yy_kgm2": float,
        "inertia_zz_kgm2": float,
        "k_tau_per_s": float,
    },
    "gains": {
        "d_v_lin_Ns_per_m": float,
        "d_v_ang_Nms_per_rad": float,
        "k_p_lin_N_per_m": float,
        "k_p_ang_Nm_per_rad": float,
        "k_f": float,
        "k_i_per_s": float,
    },
    "safety": {
        "enabled": bool,
        "k_lambda_Ws": float,
        "gamma_p_per_s": float,
        "gamma_tau_per_s": float,
        "tau_bar_lin_N": float,
        "tau_bar_ang_Nm": float,
        "jerk_bar_lin_N_per_s": float,
        "jerk_bar_ang_Nm_per_s": float,
        "k_delta": float,
        "enable_set_scaling": bool,
        "lle_cutoff_rad_per_s": float,
        "lle_eps_norm": float,
        "lle_eps_norm_wrench": float,
        "lle_lambda_clamp": float,
        "lle_assume_zero_accel": bool,
        "lle_seed": str,
    },
    "environment": {
        "surface_axis": str,
        "surface_pos_m": float,
        "surface_k_N_per_m": float,
        "surface_d_Ns_per_m": float,
        "surface_pull_t_s": float,
        "surface_pull_speed_m_per_s": float,
        "ft_rate_hz": float,
        "ft_cutoff_rad_per_s": float,
        "ft_noise_std_N": float,
    },
    "trajectory": {
        "type": str,
        "amp_x_m": float,
        "amp_y_m": float,
        "omega_rad_per_s": float,
        "center_x_m": float,
        "center_y_m": float,
        "center_z_m": float,
        "x_m": float,
        "y_m": float,
        "z_m": float,
        "wrench_axis": str,
        "wrench_engage_t_s": float,
        "wrench_push_schedule": str,
    },
    "run": {
        "duration_s": float,
        "dt_s": float,
        "control_divisor": int,
        "seed": int,
    },
    "disturbance": {
        "force_x_N": float,
        "force_y_N": float,
        "force_z_N": float,
        "torque_x_Nm": float,
        "torque_y_Nm": float,
        "torque_z_Nm": float,
        "frame": str,
        "t_start_s": float,
        "duration_s": float,
    },
}


def _convert(raw, typ, lineno):
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() in ("true", "on", "yes", "1"):
                return True
            if raw.lower() in ("false", "off", "no", "0"):
                return False
            raise ValueError(raw)
        if typ is float:
            return float(raw)
        if typ is int:
            return int(raw)
        return raw
    except ValueError:
        raise ScenarioError(f"line {lineno}: cannot parse {raw!r} as {typ.__name__}")


def parse_text(text):
    """Parse scenario text into a dict of sections (disturbances as a list)."""
    sections = {}
    disturbances = []
    current = None
    current_name = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip().lower()
            if name not in _SCHEMA:
                raise ScenarioError(f"line {lineno}: unknown section [{name}]")
            current_name = name
            current = {}
            if name == "disturbance":
                disturbances.append(current)
            else:
                if name in sections:
                    raise ScenarioError(f"line {lineno}: duplicate section [{name}]")
                sections[name] = current
            continue
        if current is None:
            raise ScenarioError(f"line {lineno}: key outside of any section")
        if "=" not in stripped:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        schema = _SCHEMA[current_name]
        if key not in schema:
            raise ScenarioError(f"line {lineno}: unknown key {key!r} in [{current_name}]")
        if key in current:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        current[key] = _convert(raw, schema[key], lineno)
    sections["disturbance"] = disturbances
    return sections


def _parse_schedule(raw, lineno=0):
    """'t0:f0, t1:f1, ...' -> list of (time, force) pairs."""
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ScenarioError(f"line {lineno}: bad schedule entry {item!r}")
        t_s, f_s = item.split(":", 1)
        out.append((float(t_s), float(f_s)))
    if not out:
        raise ScenarioError(f"line {lineno}: empty schedule")
    return out


def scenario_from_sections(sections):
    """Build a Scenario from a parsed section dict."""
    veh = sections.get("vehicle", {})
    params = InertialParams(
        mass=veh.get("mass_kg", 4.58),
        inertia=np.array([veh.get("inertia_xx_kgm2", 0.12),
                          veh.get("inertia_yy_kgm2", 0.12),
                          veh.get("inertia_zz_kgm2", 0.20)]),
    )
    g = sections.get("gains", {})
    pose_gains = PoseGains(
        d_v=np.concatenate([np.full(3, g.get("d_v_lin_Ns_per_m", 5.0)),
                            np.full(3, g.get("d_v_ang_Nms_per_rad", 1.0))]),
        k_p=np.concatenate([np.full(3, g.get("k_p_lin_N_per_m", 20.0)),
                            np.full(3, g.get("k_p_ang_Nm_per_rad", 4.0))]),
    )
    wrench_gains = WrenchGains(
        k_f=np.full(6, g.get("k_f", 1.0)),
        k_i=np.full(6, g.get("k_i_per_s", 0.4)),
    )

    s = sections.get("safety", {})
    safety = SafetyConfig(
        k_lambda=s.get("k_lambda_Ws", 1.0),
        gamma_p=np.full(6, s.get("gamma_p_per_s", 10.0)),
        gamma_tau=np.full(6, s.get("gamma_tau_per_s", 10.0)),
        tau_bar=np.concatenate([np.full(3, s.get("tau_bar_lin_N", np.inf)),
                                np.full(3, s.get("tau_bar_ang_Nm", np.inf))]),
        jerk_bar=np.concatenate([np.full(3, s.get("jerk_bar_lin_N_per_s", 300.0)),
                                 np.full(3, s.get("jerk_bar_ang_Nm_per_s", 300.0))]),
        k_delta=s.get("k_delta", 1e6),
        enable_set_scaling=s.get("enable_set_scaling", False),
    )
    lle_cfg = LleConfig(
        filter_cutoff=s.get("lle_cutoff_rad_per_s", 10.0),
        eps_norm=s.get("lle_eps_norm", 1e-6),
        eps_norm_wrench=s.get("lle_eps_norm_wrench", 1e-4),
        lambda_clamp=s.get("lle_lambda_clamp", 5.0),
        assume_zero_accel=s.get("lle_assume_zero_accel", True),
    )
    lle_seed = s.get("lle_seed", "nominal")
    if lle_seed not in ("nominal", "zero"):
        raise ScenarioError(f"lle_seed must be 'nominal' or 'zero', got {lle_seed!r}")

    env_sec = sections.get("environment", {})
    surface = None
    if "surface_axis" in env_sec:
        axis = env_sec["surface_axis"].lower()
        if axis not in AXES:
            raise ScenarioError(f"surface_axis must be one of x/y/z, got {axis!r}")
        surface = Surface(
            axis=AXES[axis],
            position=env_sec.get("surface_pos_m", 0.0),
            k_s=env_sec.get("surface_k_N_per_m", 30.0),
            d_s=env_sec.get("surface_d_Ns_per_m", 5.0),
            pull_time=env_sec.get("surface_pull_t_s"),
            pull_speed=env_sec.get("surface_pull_speed_m_per_s", 0.0),
        )
    disturbances = []
    for d in sections.get("disturbance", []):
        wrench = np.array([d.get("force_x_N", 0.0), d.get("force_y_N", 0.0),
                           d.get("force_z_N", 0.0), d.get("torque_x_Nm", 0.0),
                           d.get("torque_y_Nm", 0.0), d.get("torque_z_Nm", 0.0)])
        frame = d.get("frame", "world")
        if frame not in ("world", "body"):
            raise ScenarioError(f"disturbance frame must be world|body, got {frame!r}")
        disturbances.append(DisturbanceEvent(
            wrench=wrench, frame=frame,
            t_start=d.get("t_start_s", 0.0), duration=d.get("duration_s", 1.0)))
    environment = Environment(surface=surface, disturbances=disturbances)

    measurement = MeasurementModel(
        ft_sample_rate=env_sec.get("ft_rate_hz", 800.0),
        cutoff=env_sec.get("ft_cutoff_rad_per_s", 3.0),
        noise_std=env_sec.get("ft_noise_std_N", 0.0),
    )

    tr = sections.get("trajectory", {})
    traj_type = tr.get("type", "figure_eight")
    center = np.array([tr.get("center_x_m", 0.0), tr.get("center_y_m", 0.0),
                       tr.get("center_z_m", 0.0)])
    if traj_type == "figure_eight":
        trajectory = FigureEight(
            amplitude_x=tr.get("amp_x_m", 1.0),
            amplitude_y=tr.get("amp_y_m", 0.5),
            omega=tr.get("omega_rad_per_s", 0.5),
            center=center,
        )
    elif traj_type == "setpoint":
        trajectory = Setpoint(position=np.array([tr.get("x_m", 0.0),
                                                 tr.get("y_m", 0.0),
                                                 tr.get("z_m", 0.0)]))
    else:
        raise ScenarioError(f"trajectory type must be figure_eight|setpoint, got {traj_type!r}")

    wrench_task = None
    w_axis = tr.get("wrench_axis", "none").lower()
    if w_axis != "none":
        if w_axis not in AXES:
            raise ScenarioError(f"wrench_axis must be x/y/z/none, got {w_axis!r}")
        wrench_task = WrenchTask(
            axis=AXES[w_axis],
            engage_time=tr.get("wrench_engage_t_s", 0.0),
            push_schedule=_parse_schedule(tr.get("wrench_push_schedule", "0:4")),
        )

    run = sections.get("run", {})
    return Scenario(
        duration=run.get("duration_s", 10.0),
        dt=run.get("dt_s", 1.0 / 400.0),
        control_divisor=run.get("control_divisor", 2),
        params=params,
        pose_gains=pose_gains,
        wrench_gains=wrench_gains,
        k_tau=veh.get("k_tau_per_s", 50.0),
        trajectory=trajectory,
        wrench_task=wrench_task,
        safety=safety,
        safety_enabled=sections.get("safety", {}).get("enabled", True),
        lle=lle_cfg,
        lle_seed=lle_seed,
        environment=environment,
        measurement=measurement,
        seed=run.get("seed", 0),
    )


def load(path):
    """Parse a scenario file from disk."""
    with open(path, "r", encoding="utf-8") as f:
        return scenario_from_sections(parse_text(f.read()))


def loads(text):
    return scenario_from_sections(parse_text(text))


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if np.isfinite(value) else "inf"
    return str(value)


def serialize(scenario):
    """Canonical scenario text for a Scenario object."""
    sc = scenario
    lines = []

    def sec(name, pairs):
        lines.append(f"[{name}]")
        for k, v in pairs:
            lines.append(f"{k} = {_fmt(v)}")
        lines.append("")

    sec("vehicle", [
        ("mass_kg", sc.params.mass),
        ("inertia_xx_kgm2", float(sc.params.inertia[0])),
        ("inertia_yy_kgm2", float(sc.params.inertia[1])),
        ("inertia_zz_kgm2", float(sc.params.inertia[2])),
        ("k_tau_per_s", float(sc.k_tau)),
    ])
    sec("gains", [
        ("d_v_lin_Ns_per_m", float(sc.pose_gains.d_v[0])),
        ("d_v_ang_Nms_per_rad", float(sc.pose_gains.d_v[3])),
        ("k_p_lin_N_per_m", float(sc.pose_gains.k_p[0])),
        ("k_p_ang_Nm_per_rad", float(sc.pose_gains.k_p[3])),
        ("k_f", float(sc.wrench_gains.k_f[0])),
        ("k_i_per_s", float(sc.wrench_gains.k_i[0])),
    ])
    sec("safety", [
        ("enabled", sc.safety_enabled),
        ("k_lambda_Ws", float(sc.safety.k_lambda)),
        ("gamma_p_per_s", float(sc.safety.gamma_p[0])),
        ("gamma_tau_per_s", float(sc.safety.gamma_tau[0])),
        ("tau_bar_lin_N", float(sc.safety.tau_bar[0])),
        ("tau_bar_ang_Nm", float(sc.safety.tau_bar[3])),
        ("jerk_bar_lin_N_per_s", float(sc.safety.jerk_bar[0])),
        ("jerk_bar_ang_Nm_per_s", float(sc.safety.jerk_bar[3])),
        ("k_delta", float(sc.safety.k_delta)),
        ("enable_set_scaling", sc.safety.enable_set_scaling),
        ("lle_cutoff_rad_per_s", float(sc.lle.filter_cutoff)),
        ("lle_eps_norm", float(sc.lle.eps_norm)),
        ("lle_eps_norm_wrench", float(sc.lle.eps_norm_wrench)),
        ("lle_lambda_clamp", float(sc.lle.lambda_clamp)),
        ("lle_assume_zero_accel", sc.lle.assume_zero_accel),
        ("lle_seed", sc.lle_seed),
    ])
    env_pairs = []
    if sc.environment.surface is not None:
        s = sc.environment.surface
        env_pairs += [
            ("surface_axis", AXIS_NAMES[s.axis]),
            ("surface_pos_m", float(s.position)),
            ("surface_k_N_per_m", float(s.k_s)),
            ("surface_d_Ns_per_m", float(s.d_s)),
        ]
        if s.pull_time is not None:
            env_pairs += [("surface_pull_t_s", float(s.pull_time)),
                          ("surface_pull_speed_m_per_s", float(s.pull_speed))]
    env_pairs += [
        ("ft_rate_hz", float(sc.measurement.ft_sample_rate)),
        ("ft_cutoff_rad_per_s", float(sc.measurement.cutoff)),
        ("ft_noise_std_N", float(sc.measurement.noise_std)),
    ]
    sec("environment", env_pairs)

    tr_pairs = []
    if isinstance(sc.trajectory, FigureEight):
        tr_pairs += [
            ("type", "figure_eight"),
            ("amp_x_m", float(sc.trajectory.amplitude_x)),
            ("amp_y_m", float(sc.trajectory.amplitude_y)),
            ("omega_rad_per_s", float(sc.trajectory.omega)),
            ("center_x_m", float(sc.trajectory.center[0])),
            ("center_y_m", float(sc.trajectory.center[1])),
            ("center_z_m", float(sc.trajectory.center[2])),
        ]
    else:
        tr_pairs += [
            ("type", "setpoint"),
            ("x_m", float(sc.trajectory.position[0])),
            ("y_m", float(sc.trajectory.position[1])),
            ("z_m", float(sc.trajectory.position[2])),
        ]
    if sc.wrench_task is not None:
        w = sc.wrench_task
        sched = ", ".join("%s:%s" % (repr(float(t)), repr(float(f)))
                          for t, f in w.push_schedule)
        tr_pairs += [("wrench_axis", AXIS_NAMES[w.axis]),
                     ("wrench_engage_t_s", float(w.engage_time)),
                     ("wrench_push_schedule", sched)]
    else:
        tr_pairs += [("wrench_axis", "none")]
    sec("trajectory", tr_pairs)

    sec("run", [
        ("duration_s", float(sc.duration)),
        ("dt_s", float(sc.dt)),
        ("control_divisor", int(sc.control_divisor)),
        ("seed", int(sc.seed)),
    ])

    for d in sc.environment.disturbances:
        sec("disturbance", [
            ("force_x_N", float(d.wrench[0])),
            ("force_y_N", float(d.wrench[1])),
            ("force_z_N", float(d.wrench[2])),
            ("torque_x_Nm", float(d.wrench[3])),
            ("torque_y_Nm", float(d.wrench[4])),
            ("torque_z_Nm", float(d.wrench[5])),
            ("frame", d.frame),
            ("t_start_s", float(d.t_start)),
            ("duration_s", float(d.duration)),
        ])
    return "\n".join(lines).rstrip() + "\n"
