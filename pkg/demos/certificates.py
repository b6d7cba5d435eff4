"""The run-time guarantees that come with a VsaPG run.

1. Parameter feasibility: validate() returns the constants delta and kappa
   and rejects step choices that break them.
2. Descent: every iteration decreases a Lyapunov-type merit function by at
   least the certified amount (descent_slack >= 0).
3. Rate: the best stationarity measure so far stays below Theta k^(-1/3).
4. Transfer: the final smoothed point maps to a near-stationary point of
   the original (unsmoothed) problem with a known accuracy loss.
"""

import numpy as np

from vsapg.bench import gen_sparse, sparse_problem
from vsapg.report import StoppingRule
from vsapg.solver import InfeasibleParameters, VsaPGParams, complexity_certificate, run, validate
from vsapg.stationarity import transfer_error_bound

prob = sparse_problem(gen_sparse(64, 256, seed=1))
d = validate(VsaPGParams(), prob)
print(f"default parameters: delta = {d.delta:.6g}, kappa = {d.kappa:.6g}")
try:
    validate(VsaPGParams(alpha=0.99), prob)
except InfeasibleParameters as exc:
    print(f"alpha = 0.99 rejected:\n  {exc}")

rep = run(prob, stop=StoppingRule("relative_residual", 1e-4, 5000), transfer=True)
slack = rep.column("descent_slack")[:-1]
print(f"\n{rep.iterations} iterations; descent slack min {slack.min():.3e}, "
      f"median {np.median(slack):.3e}")

cert = complexity_certificate(rep)
k = np.arange(1, len(cert.running_min) + 1)
print(f"rate envelope Theta = {cert.theta_cap:.4g}, holds: {cert.holds}")
for j in (1, 10, 100, len(k)):
    print(f"  k = {j:4d}: best measure {cert.running_min[j - 1]:.3e} <= "
          f"bound {cert.bound[j - 1]:.3e}")

last = rep.trace[-1]
eps_bar = transfer_error_bound(last.measure, prob.L12, prob.L22, prob.lipschitz_g,
                               1.0, last.mu_k)
print(f"\nsmoothed measure {last.measure:.3e} at mu = {last.mu_k:.3e}")
print(f"original measure at transfer point {rep.transfer_measure.total:.3e} "
      f"<= guaranteed {eps_bar:.3e}")
