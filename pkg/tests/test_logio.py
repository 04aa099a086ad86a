import numpy as np
import pytest

from powergate import logio
from powergate.sim import Scenario, Setpoint, run

GOLDEN_HEADER = (
    "t_s,p_x_m,p_y_m,p_z_m,roll_rad,pitch_rad,yaw_rad,"
    "v_1,v_2,v_3,v_4,v_5,v_6,"
    "e_p_1,e_p_2,e_p_3,e_p_4,e_p_5,e_p_6,"
    "e_v_1,e_v_2,e_v_3,e_v_4,e_v_5,e_v_6,"
    "tau_c_1,tau_c_2,tau_c_3,tau_c_4,tau_c_5,tau_c_6,"
    "tau_a_1,tau_a_2,tau_a_3,tau_a_4,tau_a_5,tau_a_6,"
    "p_flow_1_W,p_flow_2_W,p_flow_3_W,p_flow_4_W,p_flow_5_W,p_flow_6_W,"
    "p_bar_1_W,p_bar_2_W,p_bar_3_W,p_bar_4_W,p_bar_5_W,p_bar_6_W,"
    "lle_pose_1,lle_pose_2,lle_pose_3,lle_pose_4,lle_pose_5,lle_pose_6,"
    "lle_wrench_1,lle_wrench_2,lle_wrench_3,lle_wrench_4,lle_wrench_5,lle_wrench_6,"
    "qp_status,"
    "slack_p_1,slack_p_2,slack_p_3,slack_p_4,slack_p_5,slack_p_6,"
    "slack_tau_1,slack_tau_2,slack_tau_3,slack_tau_4,slack_tau_5,slack_tau_6,"
    "tau_ext_1,tau_ext_2,tau_ext_3,tau_ext_4,tau_ext_5,tau_ext_6"
)


def short_run():
    return run(Scenario(duration=0.5, dt=1 / 400, control_divisor=2,
                        trajectory=Setpoint(position=np.array([0.02, 0.0, 0.0]))))


def test_header_is_stable():
    assert logio.CSV_HEADER == GOLDEN_HEADER


def test_write_read_round_trip(tmp_path):
    records = short_run()
    path = tmp_path / "log.csv"
    logio.write_csv(records, path)
    table = logio.read_csv(path)
    assert len(table["t_s"]) == len(records)
    assert abs(table["p_x_m"][0] - records[0].p_w[0]) < 1e-8
    assert abs(table["tau_a_1"][-1] - records[-1].tau_a[0]) < max(
        1e-8, 1e-8 * abs(records[-1].tau_a[0]))


def test_nine_significant_digits():
    records = short_run()
    row = logio.record_row(records[-1]).split(",")
    assert any(len(v.replace("-", "").replace(".", "").replace("e", "").lstrip("0")) >= 8
               for v in row)
    # rendering is %.9g exactly
    assert row[0] == "%.9g" % records[-1].t


def test_schema_mismatch_on_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(logio.SchemaMismatch):
        logio.read_csv(path)


def test_schema_mismatch_on_empty_log(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(logio.CSV_HEADER + "\n")
    with pytest.raises(logio.SchemaMismatch):
        logio.read_csv(path)


def test_zero_crossings_interpolated():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([-1.0, -0.5, 0.5, -0.2])
    crossings = logio.zero_crossings(t, y)
    assert len(crossings) == 1
    assert abs(crossings[0] - 1.5) < 1e-12


def test_summary_keys():
    s = logio.summarize(short_run())
    for key in ("peak_power_W", "peak_velocity_error", "power_violation_s",
                "lle_wrench_zero_crossings_s", "qp_max_iter_ticks"):
        assert key in s
