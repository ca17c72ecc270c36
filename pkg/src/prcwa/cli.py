"""Command-line entry point.

Subcommands: ``solve`` (one solve, prints coefficients and efficiencies),
``sweep`` (convergence sweep to CSV), ``fit`` (log-log slope from a CSV),
``check`` (structural and solution diagnostics), ``field`` (field grid to
CSV). All output is deterministic for a fixed config.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analysis import efficiencies, galerkin_residual, reconstruct_field, rel_l2_error
from .harness import (SweepConfig, fit_slope, load_config, read_records_csv,
                      run_sweep, write_records_csv)
from .problem import build_slice_mesh, check_nontrapping, check_wood_anomaly, make_mode_basis
from .stitcher import solve_grating


def _solve_params(config: SweepConfig, args) -> tuple[int, float]:
    m = args.m if args.m is not None else min(config.m_list)
    h = args.h if args.h is not None else max(config.h_list)
    return m, h


def _solve_from_config(config: SweepConfig, m: int, h: float):
    mesh = build_slice_mesh(config.problem.domain, target_h=h)
    return solve_grating(config.problem, m, mesh)


def cmd_solve(args) -> int:
    config = load_config(args.config)
    m, h = _solve_params(config, args)
    sol = _solve_from_config(config, m, h)
    table = efficiencies(sol)
    print(f"# M={m} h_nm={h} slices={sol.mesh.nslices}")
    print("order,re_r,im_r,re_t,im_t,R,T")
    for i, n in enumerate(sol.basis.indices):
        print(f"{n},{sol.r[i].real:.12g},{sol.r[i].imag:.12g},"
              f"{sol.t[i].real:.12g},{sol.t[i].imag:.12g},"
              f"{table.reflected[i]:.12g},{table.transmitted[i]:.12g}")
    print(f"# sum_R={table.total_reflected:.12g} sum_T={table.total_transmitted:.12g} "
          f"absorption={table.absorption:.12g}")
    if not table.reliable:
        print("# warning: complex half-space permittivity, efficiencies unreliable")
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    if args.reference:
        config = SweepConfig(problem=config.problem, m_list=config.m_list,
                             h_list=config.h_list, reference_policy=args.reference,
                             m_ref=config.m_ref, h_ref=config.h_ref,
                             csv_path=config.csv_path)
    records = run_sweep(config, threads=args.threads,
                        log=lambda msg: print(msg, file=sys.stderr))
    out = args.out or config.csv_path
    if out is None:
        print("error: no output path (use --out or output.csv in the config)",
              file=sys.stderr)
        return 1
    write_records_csv(records, out)
    print(f"wrote {len(records)} records to {out}")
    return 0


def cmd_fit(args) -> int:
    records = read_records_csv(args.csv)
    fit = fit_slope(records, axis=args.axis,
                    plateau_filter=not args.no_plateau_filter)
    print(f"slope={fit.slope:.6g} r_squared={fit.r_squared:.6g} "
          f"points_used={fit.points_used}")
    return 0


def cmd_check(args) -> int:
    config = load_config(args.config)
    problem = config.problem
    m, h = _solve_params(config, args)
    mesh = build_slice_mesh(problem.domain, target_h=h)
    basis = make_mode_basis(problem.incident, problem.domain, m)

    failures = 0
    wood = check_wood_anomaly(basis, problem.domain)
    if wood.clear:
        print("wood-anomaly: PASS (no order within tolerance of a cutoff)")
    else:
        print(f"wood-anomaly: FLAGGED {wood.flagged}")

    trap = check_nontrapping(problem.profile, mesh)
    direction = ("increasing" if trap.monotone_increasing else
                 "decreasing" if trap.monotone_decreasing else "none")
    if trap.passed:
        print(f"non-trapping: PASS (monotone {direction})")
    else:
        print(f"non-trapping: FAIL (worst column x1={trap.worst_column_x1:.6g}, "
              f"violation {trap.worst_violation:.3g})")

    sol = _solve_from_config(config, m, h)
    table = efficiencies(sol)
    balance = table.total_reflected + table.total_transmitted
    if table.reliable and abs(table.absorption) <= 1e-8:
        print(f"energy-balance: PASS (R+T={balance:.12g})")
    elif table.reliable and table.absorption > 0:
        print(f"energy-balance: PASS (R+T={balance:.12g}, "
              f"absorption={table.absorption:.6g} >= 0)")
    else:
        print(f"energy-balance: FAIL (R+T={balance:.12g})")
        failures += 1

    resid = galerkin_residual(sol, n_test=args.n_test)
    if resid <= 1e-6:
        print(f"galerkin-residual: PASS ({resid:.3e})")
    else:
        print(f"galerkin-residual: FAIL ({resid:.3e})")
        failures += 1
    return 1 if failures else 0


def cmd_field(args) -> int:
    config = load_config(args.config)
    m, h = _solve_params(config, args)
    sol = _solve_from_config(config, m, h)
    H = config.problem.domain.half_height
    pad = args.pad
    x2 = np.linspace(-H - pad, H + pad, args.nx2)
    grid = reconstruct_field(sol, x1_count=args.nx1, x2=x2, field=args.field)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("x1_nm,x2_nm,re_u,im_u\n")
        for i, y in enumerate(grid.x2):
            for j, x in enumerate(grid.x1):
                v = grid.values[i, j]
                fh.write(f"{x:.17g},{y:.17g},{v.real:.17g},{v.imag:.17g}\n")
    print(f"wrote {grid.values.size} samples to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="prcwa",
        description="p-polarized coupled-wave grating solver and convergence harness")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp, with_mh=True):
        sp.add_argument("--config", required=True, help="JSON problem/sweep config")
        if with_mh:
            sp.add_argument("--m", type=int, default=None, help="truncation order")
            sp.add_argument("--h", type=float, default=None, help="slice thickness, nm")

    sp = sub.add_parser("solve", help="solve once and print r, t, efficiencies")
    add_common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="run the configured (h, M) sweep")
    add_common(sp, with_mh=False)
    sp.add_argument("--out", default=None, help="CSV output path")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--reference", choices=("self", "dense", "planar"), default=None)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("fit", help="fit a log-log slope from a sweep CSV")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--axis", choices=("h", "M"), required=True)
    sp.add_argument("--no-plateau-filter", action="store_true")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("check", help="run structural and solution diagnostics")
    add_common(sp)
    sp.add_argument("--n-test", type=int, default=200)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("field", help="write a field grid to CSV")
    add_common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--nx1", type=int, default=64)
    sp.add_argument("--nx2", type=int, default=200)
    sp.add_argument("--pad", type=float, default=0.0)
    sp.add_argument("--field", choices=("total", "scattered"), default="total")
    sp.set_defaults(func=cmd_field)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # deterministic nonzero exit on operation errors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
