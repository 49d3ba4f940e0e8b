"""Smoke test for the llr_lab extension module.

Build and stage the module first:

    cargo build --release -p llr-lab-python
    cp target/release/libllr_lab.so python/llr_lab.so

then run `python3 python/smoke_test.py` from the repository root.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import llr_lab

ZETA3 = 1.2020569031595943


def close(a, b, tol):
    assert abs(a - b) < tol, f"{a} vs {b} (tol {tol})"


# Closed forms.
k = llr_lab.limit_constants()
close(k["zeta3"], ZETA3, 1e-14)
close(k["B0"], 16 * ZETA3, 1e-12)
close(k["E0"], 8 * ZETA3 / 13, 1e-12)
assert (k["M0"], k["Binf"], k["Minf"], k["Einf"]) == (26.0, 1.0, 2.0, 0.5)

close(llr_lab.half_moment(1.0, 2.0), math.exp(-math.tanh(0.25)), 1e-14)
close(llr_lab.quarter_moment(0.001, 1.0), math.exp(-3 / 32), 1e-5)
close(llr_lab.solve_ladder_rate(1 / (1 - math.exp(-1))), 1.0, 1e-9)
close(llr_lab.normal_cdf(0.0), 0.5, 1e-7)
mean_pos, second_pos = llr_lab.log_increment_moments(1.0, 0.5, "pos")
assert mean_pos < 0 < second_pos
assert 0 < llr_lab.eta_tail(1.0, 0.5) < 1
assert 1 < llr_lab.eta_exp_quarter_moment(1.0) <= 2

try:
    llr_lab.half_moment(-1.0, 2.0)
except ValueError:
    pass
else:
    raise AssertionError("negative rho must be rejected")

# Monte Carlo rows: keys, determinism, and agreement with the constants.
row = llr_lab.run_infinity(20000, seed=42)
assert set(row) == {
    "rho", "N", "B", "se_B", "M", "se_M", "E", "se_E",
    "rho2B", "rho2M", "truncated", "seed",
}
assert row["rho"] == math.inf and row["rho2B"] is None
close(row["B"], 1.0, 6 * row["se_B"])
close(row["M"], 2.0, 6 * row["se_M"])
assert row == llr_lab.run_infinity(20000, seed=42)
assert row != llr_lab.run_infinity(20000, seed=43)

rowp = llr_lab.run_poisson(2.0, 2000, seed=1)
close(rowp["rho2B"], 4 * rowp["B"], 1e-12 * rowp["rho2B"])
assert rowp["truncated"] == 0

rowb = llr_lab.run_brownian(500, seed=7, h=0.02)
assert rowb["rho"] == 0.0 and rowb["rho2M"] is None
close(rowb["M"], 26.0, 8 * rowb["se_M"])

# Sweep with appended limit rows.
rows = llr_lab.sweep([0.5, 2.0], 1000, seed=3, limits=True, h=0.02)
assert [r["rho"] for r in rows] == [0.5, 2.0, 0.0, math.inf]
assert rows[0]["E"] > rows[1]["E"] - 4 * (rows[0]["se_E"] + rows[1]["se_E"])

# Raw functional draws feed the KS helper.
pairs = llr_lab.draw_functionals(20.0, 400, seed=5)
assert len(pairs) == 400
assert all(math.isfinite(z) and x <= 0 for z, x in pairs)
d = llr_lab.ks_statistic([-x for _, x in pairs], lambda x: -math.expm1(-x))
assert d < 1.63 / math.sqrt(400), d

# Model rescaling: intensity pair with the same canonical jump size.
a, b = 2 * math.exp(2.0), 2.0
scaled = llr_lab.rescale_intensity(rowp, a, b)
close(scaled["B"], rowp["B"] / (a - b) ** 2, 1e-12)
jump = llr_lab.rescale_jump(rowp, 3.0, 1.0, math.exp(2.0))
close(jump["M"], rowp["M"] * 9 / (math.exp(2.0) - 1) ** 2, 1e-12)

print("smoke test passed")
