"""Command-line interface: scenario runs, comparisons, plots and safe sets.

Verbs:
    run      simulate a scenario, write log.csv and summary.txt
    compare  run a scenario with the safety layer off and on, write both
             logs and a delta summary
    plot     render a log CSV into time-series and phase-portrait SVGs
    safeset  sample and render the pose and wrench safe sets
    sweep    repeat a scenario over several damping gains, report
             stopping times

Exit codes: 0 success, 2 invalid input (scenario or log file), 3 the
simulation diverged numerically (a partial log is still written).
"""

import argparse
import os
import sys
from importlib import resources

import numpy as np

from . import logio, scenario_io, svgplot
from .lle import pose_nominal_lle
from .safety import boundary_points, pose_safeset_margin, wrench_safeset_margin
from .sim import NumericalDivergence, run

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3


def _resolve_scenario(path):
    """Accept a filesystem path or the name of a bundled scenario."""
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    name = os.path.basename(path)
    ref = resources.files("powergate") / "scenarios" / name
    if ref.is_file():
        return ref.read_text(encoding="utf-8")
    raise scenario_io.ScenarioError(f"scenario file not found: {path}")


def _load_scenario(path, args):
    sc = scenario_io.loads(_resolve_scenario(path))
    if getattr(args, "seed", None) is not None:
        sc.seed = args.seed
    if getattr(args, "dt", None) is not None:
        sc.dt = args.dt
    if getattr(args, "safety", None) is not None:
        sc.safety_enabled = args.safety == "on"
    if getattr(args, "k_lambda", None) is not None:
        sc.safety.k_lambda = args.k_lambda
    return sc


def _outdir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


def cmd_run(args):
    sc = _load_scenario(args.scenario, args)
    out = _outdir(args)
    try:
        records = run(sc)
        code = EXIT_OK
    except NumericalDivergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        records = exc.records
        code = EXIT_DIVERGED
    logio.write_csv(records, os.path.join(out, "log.csv"))
    with open(os.path.join(out, "summary.txt"), "w", encoding="utf-8") as f:
        f.write(logio.summary_text(logio.summarize(records)))
    return code


def _disturbance_end(sc):
    ends = [d.t_start + d.duration for d in sc.environment.disturbances]
    if sc.environment.surface is not None and sc.environment.surface.pull_time is not None:
        ends.append(sc.environment.surface.pull_time)
    return max(ends) if ends else 0.0


def cmd_compare(args):
    out = _outdir(args)
    code = EXIT_OK
    logs = {}
    for tag, enabled in (("off", False), ("on", True)):
        sc = _load_scenario(args.scenario, args)
        sc.safety_enabled = enabled
        try:
            records = run(sc)
        except NumericalDivergence as exc:
            records = exc.records
            if enabled:
                code = EXIT_DIVERGED
        logs[tag] = records
        logio.write_csv(records, os.path.join(out, f"log_{tag}.csv"))
    t_after = _disturbance_end(_load_scenario(args.scenario, args))
    delta = logio.compare_summary(logs["off"], logs["on"], t_after)
    with open(os.path.join(out, "compare.txt"), "w", encoding="utf-8") as f:
        f.write(logio.summary_text(delta))
    return code


def _timeseries_panels(table):
    t = table["t_s"]
    panels = []
    p = svgplot.Panel(title="control inputs", xlabel="t [s]", ylabel="tau_a [N]")
    for i, name in enumerate(("x", "y", "z")):
        p.add(t, table[f"tau_a_{i + 1}"], svgplot.COLORS[i], name)
    panels.append(p)
    p = svgplot.Panel(title="velocity errors", xlabel="t [s]", ylabel="e_v [m/s]")
    for i, name in enumerate(("x", "y", "z")):
        p.add(t, table[f"e_v_{i + 1}"], svgplot.COLORS[i], name)
    panels.append(p)
    p = svgplot.Panel(title="power flow", xlabel="t [s]", ylabel="P [W]")
    for i, name in enumerate(("x", "y", "z")):
        p.add(t, table[f"p_flow_{i + 1}_W"], svgplot.COLORS[i], name)
        p.add(t, table[f"p_bar_{i + 1}_W"], svgplot.COLORS[i], "", dashed=True)
    panels.append(p)
    e_p = logio.columns(table, "e_p")
    p = svgplot.Panel(title="position error norm", xlabel="t [s]", ylabel="|e_p| [m]")
    p.add(t, np.linalg.norm(e_p[:, :3], axis=1), svgplot.COLORS[0], "linear")
    panels.append(p)
    p = svgplot.Panel(title="exponent estimates", xlabel="t [s]", ylabel="lambda [1/s]")
    for i, name in enumerate(("x", "y", "z")):
        p.add(t, table[f"lle_pose_{i + 1}"], svgplot.COLORS[i], "pose " + name)
    p.add(t, table["lle_wrench_1"], svgplot.COLORS[3], "wrench x")
    panels.append(p)
    return panels


def _phase_panels(table, mass, d_v, k_p, k_lambda):
    panels = []
    grid_p = np.linspace(-0.6, 0.6, 241)
    grid_v = np.linspace(-0.8, 0.8, 321)
    pp, vv = np.meshgrid(grid_p, grid_v)
    marg = pose_safeset_margin(pp, vv, mass, d_v, k_p, k_lambda, "nominal")
    boundary = boundary_points(grid_p, grid_v, marg)
    for i, name in enumerate(("x", "y")):
        p = svgplot.Panel(title=f"phase portrait {name}",
                          xlabel="e_p [m]", ylabel="e_v [m/s]")
        if boundary.size:
            order = np.argsort(boundary[:, 0])
            p.add(boundary[order, 0], boundary[order, 1], "#999999",
                  "safe-set boundary", dashed=True)
        p.add(table[f"e_p_{i + 1}"], table[f"e_v_{i + 1}"],
              svgplot.COLORS[i], "trajectory")
        panels.append(p)
    return panels


def cmd_plot(args):
    out = _outdir(args)
    table = logio.read_csv(args.log)
    svgplot.write(_timeseries_panels(table),
                  os.path.join(out, "timeseries.svg"), ncols=1)
    svgplot.write(_phase_panels(table, args.mass, args.d_v, args.k_p, args.k_lambda),
                  os.path.join(out, "phase.svg"), ncols=2)
    return EXIT_OK


def cmd_safeset(args):
    out = _outdir(args)
    m, d, k, klam = args.mass, args.d_v, args.k_p, args.k_lambda
    grid_p = np.linspace(-args.extent, args.extent, args.samples)
    grid_v = np.linspace(-2 * args.extent, 2 * args.extent, 2 * args.samples)
    pp, vv = np.meshgrid(grid_p, grid_v)

    pose_panel = svgplot.Panel(title="pose safe-set boundaries",
                               xlabel="e_p [m]", ylabel="e_v [m/s]")
    csv_lines = ["variant,e_p_m,e_v_m_per_s"]
    for j, variant in enumerate(("nominal", "zero_accel", "scaled")):
        marg = pose_safeset_margin(pp, vv, m, d, k, klam, variant)
        pts = boundary_points(grid_p, grid_v, marg)
        if pts.size:
            order = np.argsort(pts[:, 0])
            pose_panel.add(pts[order, 0], pts[order, 1], svgplot.COLORS[j], variant)
            csv_lines.extend(f"{variant},%.9g,%.9g" % (a, b) for a, b in pts)
    # asymptote overlays
    pose_panel.add(grid_p, np.zeros_like(grid_p), "#aaaaaa", "", dashed=True)
    pose_panel.add(grid_p, -(k / d) * grid_p, "#aaaaaa", "", dashed=True)

    wrench_panels = []
    grid_f = np.linspace(-1.0, 2.0 * args.push_N, 301)
    grid_w = np.linspace(-0.4, 0.4, 321)
    ff, ww = np.meshgrid(grid_f, grid_w)
    for j, k_s in enumerate((args.k_s_soft, args.k_s_stiff)):
        marg = wrench_safeset_margin(ff, ww, args.d_s, k_s, args.k_f, args.k_i,
                                     -args.push_N, klam, mass=m)
        pts = boundary_points(grid_f, grid_w, marg)
        panel = svgplot.Panel(title=f"wrench safe set, k_s = {k_s:g} N/m",
                              xlabel="tau_f [N]", ylabel="v [m/s]")
        if pts.size:
            order = np.argsort(pts[:, 0])
            panel.add(pts[order, 0], pts[order, 1], svgplot.COLORS[j], "boundary")
            csv_lines.extend(f"wrench_ks{k_s:g},%.9g,%.9g" % (a, b) for a, b in pts)
        wrench_panels.append(panel)

    svgplot.write([pose_panel] + wrench_panels, os.path.join(out, "safesets.svg"),
                  ncols=1)
    with open(os.path.join(out, "boundaries.csv"), "w", encoding="utf-8") as f:
        f.write("\n".join(csv_lines) + "\n")
    return EXIT_OK


def _stopping_time(records, axis, threshold=0.1):
    t = np.array([r.t for r in records])
    v = np.array([r.v_b[axis] for r in records])
    contact = np.array([abs(r.tau_ext[axis]) > 1e-6 for r in records])
    if not contact.any():
        return float("nan"), float("nan")
    t_loss = t[contact][-1]
    after = t > t_loss
    if not after.any():
        return t_loss, float("nan")
    i_pk = int(np.argmax(np.abs(v) * after))
    for i in np.where(after & (t >= t[i_pk]))[0]:
        if abs(v[i]) < threshold and np.all(np.abs(v[i:]) < threshold):
            return t_loss, float(t[i] - t_loss)
    return t_loss, float("inf")


def cmd_sweep(args):
    out = _outdir(args)
    gains = [float(x) for x in args.k_lambdas.split(",")]
    lines = ["k_lambda_Ws,t_contact_loss_s,stopping_time_s"]
    times = []
    code = EXIT_OK
    for klam in gains:
        sc = _load_scenario(args.scenario, args)
        sc.safety.k_lambda = klam
        if sc.wrench_task is None:
            raise scenario_io.ScenarioError(
                "sweep requires a scenario with a wrench task")
        try:
            records = run(sc)
        except NumericalDivergence as exc:
            records = exc.records
            code = EXIT_DIVERGED
        logio.write_csv(records, os.path.join(out, f"log_klambda_{klam:g}.csv"))
        t_loss, t_stop = _stopping_time(records, sc.wrench_task.axis)
        times.append(t_stop)
        lines.append("%g,%.6g,%.6g" % (klam, t_loss, t_stop))
    with open(os.path.join(out, "sweep.csv"), "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    ordered = all(a > b for a, b in zip(times, times[1:]))
    with open(os.path.join(out, "sweep.txt"), "w", encoding="utf-8") as f:
        f.write("stopping times strictly decreasing with k_lambda: %s\n" % ordered)
        for g, ts in zip(gains, times):
            f.write("k_lambda = %g W s: stop %.3f s after contact loss\n" % (g, ts))
    return code


def build_parser():
    parser = argparse.ArgumentParser(
        prog="powergate",
        description="Adaptive power-flow safety layer: scenario runs and analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("scenario", help="scenario file or bundled name (*.scn)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=None, help="physics step [s]")
        p.add_argument("--safety", choices=("on", "off"), default=None)
        p.add_argument("--k-lambda", dest="k_lambda", type=float, default=None,
                       help="override the power damping gain [W s]")

    p_run = sub.add_parser("run", help="simulate a scenario")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run with safety off and on")
    common(p_cmp)
    p_cmp.set_defaults(func=cmd_compare)

    p_plot = sub.add_parser("plot", help="render a log CSV to SVG")
    p_plot.add_argument("log", help="log.csv produced by 'run'")
    p_plot.add_argument("--out", default="out")
    p_plot.add_argument("--mass", type=float, default=4.58)
    p_plot.add_argument("--d-v", dest="d_v", type=float, default=5.0)
    p_plot.add_argument("--k-p", dest="k_p", type=float, default=20.0)
    p_plot.add_argument("--k-lambda", dest="k_lambda", type=float, default=1.0)
    p_plot.set_defaults(func=cmd_plot)

    p_set = sub.add_parser("safeset", help="sample safe-set boundaries")
    p_set.add_argument("--out", default="out")
    p_set.add_argument("--mass", type=float, default=4.58)
    p_set.add_argument("--d-v", dest="d_v", type=float, default=5.0)
    p_set.add_argument("--k-p", dest="k_p", type=float, default=20.0)
    p_set.add_argument("--k-lambda", dest="k_lambda", type=float, default=1.0)
    p_set.add_argument("--d-s", dest="d_s", type=float, default=5.0)
    p_set.add_argument("--k-s-soft", dest="k_s_soft", type=float, default=30.0)
    p_set.add_argument("--k-s-stiff", dest="k_s_stiff", type=float, default=300.0)
    p_set.add_argument("--k-f", dest="k_f", type=float, default=1.0)
    p_set.add_argument("--k-i", dest="k_i", type=float, default=0.4)
    p_set.add_argument("--push-N", dest="push_N", type=float, default=4.0)
    p_set.add_argument("--extent", type=float, default=0.6, help="grid half-width [m]")
    p_set.add_argument("--samples", type=int, default=241)
    p_set.set_defaults(func=cmd_safeset)

    p_sweep = sub.add_parser("sweep", help="damping-gain sweep")
    common(p_sweep)
    p_sweep.add_argument("--k-lambdas", default="0.5,1,2,4",
                         help="comma-separated gains [W s]")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (scenario_io.ScenarioError, logio.SchemaMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
