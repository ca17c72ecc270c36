"""Write the total-field magnitude around the dissipative triangle to CSV.

The grid is evaluated from the per-slice modal solution inside the cell and
from the Rayleigh expansions outside; plot the CSV with any external tool,
e.g.

    python demos/field_map.py
    # then: pandas.read_csv('triangle_field.csv') and a pcolormesh of |u|
"""

import numpy as np

from prcwa import (GratingDomain, GratingProblem, IncidentWave, TriangleOnStrip,
                   build_slice_mesh, reconstruct_field, solve_grating)

L = 500.0
domain = GratingDomain(period=L, half_height=250.0)
profile = TriangleOnStrip(period=L, base_width=250.0, height=100.0,
                          strip_thickness=100.0, eps_inclusion=15 + 4j,
                          eps_ambient=1 + 1e-6j)
problem = GratingProblem(domain=domain, incident=IncidentWave(600.0, 0.0),
                         profile=profile)
sol = solve_grating(problem, 12, build_slice_mesh(domain, target_h=2.0))

x2 = np.linspace(-350.0, 350.0, 141)  # pad beyond the cell on both sides
grid = reconstruct_field(sol, x1_count=100, x2=x2, field="total")

out = "triangle_field.csv"
with open(out, "w", encoding="utf-8") as fh:
    fh.write("x1_nm,x2_nm,re_u,im_u,abs_u\n")
    for i, y in enumerate(grid.x2):
        for j, x in enumerate(grid.x1):
            v = grid.values[i, j]
            fh.write(f"{x:.6g},{y:.6g},{v.real:.8g},{v.imag:.8g},{abs(v):.8g}\n")
print(f"wrote {grid.values.size} samples to {out}")
print(f"|u| range: {np.min(np.abs(grid.values)):.3f} "
      f".. {np.max(np.abs(grid.values)):.3f}")
