"""Miniature convergence study on the dissipative triangle grating.

Same geometry family as the shipped symmetric_triangle_dissipative.json
config but with a shorter cell and a cheaper reference so it finishes in
seconds. Errors against the self-converged reference decay with both the
Fourier truncation M and the slice thickness h; least-squares slopes are
fitted in log-log.

The full-size study is driven by the CLI:

    prcwa sweep --config demos/configs/symmetric_triangle_dissipative.json \
        --out sweep.csv
    prcwa fit --csv sweep.csv --axis M
"""

from prcwa import (ConvergenceRecord, GratingDomain, GratingProblem,
                   IncidentWave, TriangleOnStrip, build_slice_mesh, fit_slope,
                   rel_l2_error, solve_grating)

L = 500.0
domain = GratingDomain(period=L, half_height=300.0)
profile = TriangleOnStrip(period=L, base_width=250.0, height=100.0,
                          strip_thickness=100.0, eps_inclusion=15 + 4j,
                          eps_ambient=1 + 1e-6j)
problem = GratingProblem(domain=domain, incident=IncidentWave(600.0, 0.0),
                         profile=profile)

print("solving reference (M=40, h=0.5) ...")
reference = solve_grating(problem, 40, build_slice_mesh(domain, target_h=0.5))

print("\ntruncation sweep at h = 2 nm:")
records_m = []
for M in (2, 4, 8, 16):
    sol = solve_grating(problem, M, build_slice_mesh(domain, target_h=2.0))
    err = rel_l2_error(sol, reference)
    records_m.append(ConvergenceRecord(2.0, M, err, 0.0))
    print(f"  M={M:2d}: relative L2 error {err:.4e}")
fit_m = fit_slope(records_m, axis="M")
print(f"  fitted slope {fit_m.slope:.3f} (r^2 = {fit_m.r_squared:.3f})")

print("\nslice-thickness sweep at M = 40 (matching the reference truncation,")
print("so the staircase error is the only difference):")
records_h = []
for h in (25.0, 10.0, 5.0, 2.0):
    sol = solve_grating(problem, 40, build_slice_mesh(domain, target_h=h))
    err = rel_l2_error(sol, reference)
    records_h.append(ConvergenceRecord(h, 40, err, 0.0))
    print(f"  h={h:5.1f}: relative L2 error {err:.4e}")
fit_h = fit_slope(records_h, axis="h")
print(f"  fitted slope {fit_h.slope:.3f} (r^2 = {fit_h.r_squared:.3f})")
