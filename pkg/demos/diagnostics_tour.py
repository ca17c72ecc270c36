"""Tour of the structural and solution diagnostics.

* Wood-anomaly check: flags diffraction orders grazing a half-space cutoff,
  where the formulation degenerates (period = wavelength puts orders +-1
  exactly at cutoff).
* Non-trapping check: samples the permittivity on a grid and reports
  whether it is vertically monotone; a triangular inclusion is not.
* Energy balance: for lossless materials the efficiencies must sum to one;
  with absorption the deficit is the absorbed fraction.
* Variational residual: the solved field must satisfy the weak form of the
  staircase problem against every hat x Fourier-mode test function.
"""

import numpy as np

from prcwa import (GratingDomain, GratingProblem, IncidentWave, TriangleOnStrip,
                   build_slice_mesh, check_nontrapping, check_wood_anomaly,
                   efficiencies, galerkin_residual, make_mode_basis,
                   solve_grating, uniform_profile)

L = 500.0

print("== Wood anomalies ==")
inc = IncidentWave(600.0, 0.0)
grazing = GratingDomain(period=600.0, half_height=100.0)
basis = make_mode_basis(inc, grazing, 2)
print("period 600 nm at 600 nm wavelength:",
      check_wood_anomaly(basis, grazing).flagged)
safe = GratingDomain(period=L, half_height=100.0)
print("period 500 nm at 600 nm wavelength: clear =",
      check_wood_anomaly(make_mode_basis(inc, safe, 2), safe).clear)

print("\n== Non-trapping diagnostic ==")
domain = GratingDomain(period=L, half_height=300.0)
triangle = TriangleOnStrip(period=L, base_width=250.0, height=100.0,
                           strip_thickness=100.0, eps_inclusion=15 + 4j,
                           eps_ambient=1 + 1e-6j)
mesh = build_slice_mesh(domain, target_h=10.0)
rep = check_nontrapping(triangle, mesh)
print(f"triangle on strip: passed = {rep.passed}, "
      f"worst column x1 = {rep.worst_column_x1:.1f} nm, "
      f"violation = {rep.worst_violation:.3f}")
flat = uniform_profile(L, 2.25, 300.0)
print("uniform medium: passed =", check_nontrapping(flat, mesh).passed)

print("\n== Energy balance and residual ==")
problem = GratingProblem(domain=domain, incident=inc, profile=triangle)
sol = solve_grating(problem, 10, build_slice_mesh(domain, target_h=4.0))
table = efficiencies(sol)
print(f"dissipative triangle: sum R = {table.total_reflected:.6f}, "
      f"sum T = {table.total_transmitted:.6f}, "
      f"absorption = {table.absorption:.6f}")
print(f"variational residual (n_test=300): "
      f"{galerkin_residual(sol, n_test=300):.3e}")
