"""Spectral Galerkin simulation of pressureless Euler-Poisson and Euler-alignment
flows on the unit box, with verification tooling for energy admissibility,
relative-energy comparisons and empirical Young-measure diagnostics."""

__version__ = "0.1.0"

from .geometry import (
    Domain,
    Quadrature,
    SineBasis,
    CosineBasis,
    Field,
    VectorField,
    build_bases,
    project,
    evaluate,
    integrate,
)
from .poisson import PotentialState, solve_poisson, poisson_force_weak, newform_residual
from .forces import (
    KernelSpec,
    convolve,
    interaction_confinement_force,
    alignment_force,
    alignment_dissipation,
)
from .transport import FlowState, ForwardFlow, step_backward_flow, density, total_mass
from .dynamics import SimConfig, SimState, simulate, sweep_epsilon
from .diagnostics import (
    EnergyReport,
    RelativeEnergyReport,
    total_energy,
    relative_energy,
    gronwall_check,
    identification_residuals,
)
from .young import (
    EmpiricalYoungMeasure,
    TruncationLadder,
    ConcentrationDefect,
    build_empirical_measure,
    moment,
    concentration_defect,
    domination_check,
    projection_consistency,
    inequality_suite,
)
