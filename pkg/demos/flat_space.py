"""Flat space: the distance has the closed form |q - p|^2 / (t - s) and both
inequalities hold with equality."""

import numpy as np

from steadylength import EndpointPair, FlowSpec, check_inequalities, distance, make_flow

m = make_flow(FlowSpec("euclidean"))
e = EndpointPair(np.array([0.0, 0.0]), 0.0, np.array([1.0, 2.0]), 0.5)

d = distance(m, e)
print(f"L = {d.value:.12f}  (closed form {5 / 0.5:.12f})")
print(f"grad_p = {d.grad_p}, grad_q = {d.grad_q}")
print(f"dL/ds = {d.dL_ds:.6f}, dL/dt = {d.dL_dt:.6f}")

r = check_inequalities(m, e)
print(f"ineq1 = {r.ineq1:.2e}, ineq2 = {r.ineq2:.2e}, soliton residual = {r.saturation:.2e}")
