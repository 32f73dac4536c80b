"""2D periodic Navier-Stokes: grid, solver, analytic bounds and snapshot I/O."""
from .bounds import (NseBounds, contraction_M_nse, g_eval, lambda_for_tstar,
                     majorant_dm, majorant_m, nse_bounds, t_star_nse)
from .core import (NseParams, NseSystem, cfl_dt, divergence_max, hermitian_defect,
                   inner, kolmogorov_forcing, leray_project, nonlinear_B,
                   nonlinear_B_rotational, norms, proj_lambda, random_field, rhs, spin_up)
from .grid import FourierGrid
from .io import Snapshot, read_snapshot, write_norm_series, write_snapshot

__all__ = [
    "FourierGrid", "NseParams", "NseSystem", "NseBounds", "Snapshot",
    "nse_bounds", "g_eval", "contraction_M_nse", "majorant_m", "majorant_dm",
    "lambda_for_tstar", "t_star_nse", "leray_project", "divergence_max",
    "hermitian_defect", "nonlinear_B", "nonlinear_B_rotational", "inner", "norms",
    "proj_lambda", "rhs", "kolmogorov_forcing", "random_field", "cfl_dt", "spin_up",
    "read_snapshot", "write_snapshot", "write_norm_series",
]
