"""p-polarized rigorous coupled-wave solver for 2-D periodic gratings.

Field and permittivity are expanded in quasi-periodic Fourier series along
the periodicity direction; the cell is sliced vertically with a staircase
permittivity; each slice's modal ODE system is solved exactly and slices
are joined by a stable scattering-matrix recursion. Independent oracles
(planar transfer matrix, dense global solve) and a convergence harness
measuring error decay in slice thickness and truncation order are included.
"""

from .analysis import (EfficiencyTable, FieldGrid, dtn_apply, efficiencies,
                       galerkin_residual, h1_norm, reconstruct_field, rel_l2_error)
from .fourier import (FourierCoeffs, eps_fourier, inv_eps_fourier,
                      toeplitz_assemble, toeplitz_factor)
from .harness import (ConvergenceRecord, FitResult, SweepConfig, fit_slope,
                      load_config, parse_config, read_records_csv, run_sweep,
                      serialize_config, write_records_csv)
from .problem import (GratingDomain, GratingProblem, IncidentWave, LamellarLayer,
                      LamellarStack, ModeBasis, SampledProfile, SliceMesh, Stack,
                      TriangleOnStrip, build_slice_mesh, check_nontrapping,
                      check_wood_anomaly, make_mode_basis, staircase_cross_section,
                      uniform_profile)
from .reference import (PlanarLayer, PlanarResult, PlanarStack, planar_tmm,
                        planar_reference_solution)
from .slicesolver import (ModalAmplitudes, SliceOperator, build_A, eigensolve,
                          make_slice_operator, slice_field, slice_field_batch,
                          uniform_slice_operator)
from .stitcher import (ScatterSolution, SMatrix, dense_solve, identity_smatrix,
                       layer_smatrix, gap_basis, solve_grating, star)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
