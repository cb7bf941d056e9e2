"""Grid solver for the killed generator, its semigroup and first eigenpair."""

from levylab.solver.assembly import DiscretizedOperator, assemble_generator, lattice_weights
from levylab.solver.difference import (IdentityCheck, check_difference_identity,
                                       difference_kernel)
from levylab.solver.eigen import EigenLimitReport, EigenPair, eigen_limit_check, first_eigenpair
from levylab.solver.grid import Grid1D, Grid2D
from levylab.solver.semigroup import (KilledKernel, exit_kernel, exit_probability, green_function,
                                      killed_kernel, survival_pde)

__all__ = [
    "DiscretizedOperator", "EigenLimitReport", "EigenPair", "Grid1D", "Grid2D",
    "IdentityCheck", "KilledKernel", "assemble_generator", "check_difference_identity",
    "difference_kernel", "eigen_limit_check", "exit_kernel", "exit_probability",
    "first_eigenpair", "green_function", "killed_kernel", "lattice_weights", "survival_pde",
]
