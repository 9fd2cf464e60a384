"""Synthesize controls for the SCP3 fixture and compare SRMs and strategies.

Run: python3 demos/synthesize_scp.py [max_iters]
"""

import sys

from smoothstl import SmoothConfig, SolveOptions, build_scp, optimize, optimize_switching, warm_start_chain

max_iters = int(sys.argv[1]) if len(sys.argv) > 1 else 300
prob = build_scp(3)
opts = SolveOptions(max_iters=max_iters, seed=0, record_bounds=False)

print(f"SCP3, {max_iters} iterations, seed 0")
for srm in ("SRM1", "SRM2", "SRM3", "SRM4"):
    res = optimize(prob, SmoothConfig(srm, 3.0, 3.0), opts)
    iv = res.error_interval
    print(
        f"  {srm}: exact rho {res.exact_value:+.3f}  smooth {res.smooth_value:+.3f}  "
        f"bound [{iv.lo:+.3f}, {iv.hi:+.3f}]  control cost {res.control_cost:.3f}"
    )

res, gap = optimize_switching(prob, SmoothConfig("SRM2", 3.0, 3.0), SmoothConfig("SRM3", 3.0, 3.0), 25, opts)
print(f"  SRM2/SRM3 switching: exact rho {res.exact_value:+.3f}, SRM3 - SRM2 gap {gap:.3f}")

chain = warm_start_chain(prob, [(SmoothConfig("SRM3", 3.0, 3.0), opts), (SmoothConfig("SRM1", 3.0, 3.0), opts)])
print("  SRM3 -> SRM1 warm start, exact rho per stage:", [round(s.exact_value, 3) for s in chain.stages])

u = prob.signal(res.u_star)
print("\nposition trace of the switching solution:")
for t in range(0, prob.T + 1, 4):
    print(f"  t={t:2d}  x={u.x[t, 0]:.2f}  y={u.x[t, 1]:.2f}")
