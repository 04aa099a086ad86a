"""Effect of the power damping gain on stopping behavior.

Repeats the cart-pull experiment over several k_lambda gains.  A larger
gain permits more power while the loops converge and demands a stronger
dissipation when they diverge, so the platform stops sooner after the
cart is pulled away.  Outputs land in demos/output/sweep/.
"""

import os
from importlib import resources

import numpy as np

from powergate import logio, scenario_io
from powergate.sim import run

OUT = os.path.join(os.path.dirname(__file__), "output", "sweep")
os.makedirs(OUT, exist_ok=True)

text = (resources.files("powergate") / "scenarios" / "damping_sweep.scn").read_text()

print(" k_lambda [W s] | peak speed [m/s] | stop after [s]")
print("----------------+------------------+---------------")
for k_lambda in (0.5, 1.0, 2.0, 4.0):
    sc = scenario_io.loads(text)
    sc.safety.k_lambda = k_lambda
    recs = run(sc)
    logio.write_csv(recs, os.path.join(OUT, f"log_klambda_{k_lambda:g}.csv"))
    axis = sc.wrench_task.axis
    t = np.array([r.t for r in recs])
    v = np.array([r.v_b[axis] for r in recs])
    tau_ext = np.array([r.tau_ext[axis] for r in recs])
    t_loss = t[np.abs(tau_ext) > 1e-6][-1]
    after = t > t_loss
    i_pk = int(np.argmax(np.abs(v) * after))
    stop = float("inf")
    for i in np.where(after & (t >= t[i_pk]))[0]:
        if abs(v[i]) < 0.1 and np.all(np.abs(v[i:]) < 0.1):
            stop = t[i] - t_loss
            break
    print(f"     {k_lambda:4.1f}       |      {abs(v[i_pk]):.3f}       |     {stop:.2f}")

print(f"\nwrote per-gain logs to {OUT}")
