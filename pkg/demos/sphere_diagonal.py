"""Shrinking sphere with p = q.

The minimizer is the constant curve and the box operator has the closed form
n (1 - k)^2 / (c_s Sigma) with c = 1 - 2 tau, k = sqrt(c_s / c_t) and
Sigma = int_s^t dtau / c.  The second inequality is positive here.
"""

import numpy as np

from steadylength import EndpointPair, FlowSpec, check_inequalities, make_flow

m = make_flow(FlowSpec("shrinking_sphere"))
s, t = 0.0, 0.25
p = np.array([1.3, 0.4])
r = check_inequalities(m, EndpointPair(p, s, p.copy(), t))

cs, ct = 1 - 2 * s, 1 - 2 * t
k = np.sqrt(cs / ct)
box = 2 * (1 - k) ** 2 / (cs * -0.5 * np.log(ct / cs))
print(f"L = {r.L:.10f} (constant curve: ln 2 = {np.log(2):.10f})")
print(f"box = {r.box:.10f} (closed form {box:.10f})")
print(f"ineq1 = {r.ineq1:.6f} (>= 0 holds)")
print(f"ineq2 = {r.ineq2:.6f} (claimed <= 0; closed form {2 * box + 2 / ct - 2 / cs:.6f})")
