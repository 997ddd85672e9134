"""Survey both inequalities and the soliton residual on sampled cigar pairs,
then check the monotonicity of the infimum of L over a few times."""

import numpy as np

from steadylength import FlowSpec, GridSpec, check_inequalities, make_flow, monotonicity_scan, sample_pairs

m = make_flow(FlowSpec("cigar"))
print(f"{'pair':>4} {'L':>10} {'ineq1':>10} {'ineq2':>10} {'soliton':>10}")
for i, e in enumerate(sample_pairs(m, 6, seed=0)):
    r = check_inequalities(m, e)
    if r.skipped:
        print(f"{i:>4} skipped: {r.reason}")
        continue
    print(f"{i:>4} {r.L:10.5f} {r.ineq1:10.2e} {r.ineq2:10.2e} {r.saturation:10.2e}")

tr = monotonicity_scan(m, 0.5, np.arange(4) * 0.25, GridSpec(points=4))
print("inf L:", np.round(tr.inf_values, 6), "non-decreasing:", tr.non_decreasing)
