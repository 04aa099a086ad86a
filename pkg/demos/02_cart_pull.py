"""Wrench tracking against a cart that gets pulled away.

The tool regulates a stepped 3..5 N push on a stiff surface.  At 14 s
the cart leaves; force tracking becomes impossible, the wrench-loop
exponent estimate shoots past zero within a fraction of a second, and
the power constraint turns the commanded wrench into a brake.  Outputs
land in demos/output/cart/.
"""

import os
from importlib import resources

import numpy as np

from powergate import logio, scenario_io
from powergate.sim import run

OUT = os.path.join(os.path.dirname(__file__), "output", "cart")
os.makedirs(OUT, exist_ok=True)

text = (resources.files("powergate") / "scenarios" / "cart.scn").read_text()
sc = scenario_io.loads(text)
print("running the cart-pull scenario ...")
recs = run(sc)
logio.write_csv(recs, os.path.join(OUT, "log.csv"))

axis = sc.wrench_task.axis
t = np.array([r.t for r in recs])
v = np.array([r.v_b[axis] for r in recs])
lle_w = np.array([r.lle_wrench[axis] for r in recs])
tau_ext = np.array([r.tau_ext[axis] for r in recs])

t_loss = t[np.abs(tau_ext) > 1e-6][-1]
after = t > t_loss
t_cross = t[after][lle_w[after] > 0][0] - t_loss
i_pk = int(np.argmax(np.abs(v) * after))
print(f"force regulated to {tau_ext[np.argmin(np.abs(t - 13.0))]: .2f} N "
      f"just before the pull (commanded -5 N)")
print(f"contact lost at t = {t_loss:.2f} s")
print(f"wrench exponent crossed zero {t_cross * 1e3:.0f} ms later")
print(f"peak runaway speed: {v[i_pk]:.3f} m/s")
for i in np.where(after & (t >= t[i_pk]))[0]:
    if abs(v[i]) < 0.05 and np.all(np.abs(v[i:]) < 0.05):
        print(f"platform stopped (|v| < 0.05 m/s) {t[i] - t_loss:.2f} s after loss")
        break
print(f"\nwrote log to {OUT}; render with: powergate plot {OUT}/log.csv --out {OUT}")
