"""Spectral solvers and analysis tools for the 1-D periodic cubic nonlinear
Schroedinger equation i u_t + u_xx + xi(x) u = lambda |u|^2 u with rough
potentials xi."""

from .spectral import (
    Grid,
    SpectralField,
    apply_dtau,
    apply_js,
    free_propagate,
    inverse_dx,
    make_grid,
    mul_physical,
    project_low,
    sobolev_norm,
    to_physical,
    to_spectral,
)
from .potentials import (
    Potential,
    RoughInitSpec,
    bhat_norm,
    gamma_p,
    gen_delta_comb,
    gen_illposed_potential,
    gen_powerlaw_potential,
    gen_rough_initial,
)
from .integrators import (
    BlowUpError,
    SchemeId,
    StepperConfig,
    evolve,
    lri_step,
)
from .analysis import (
    IllposedFamily,
    IllposedSpec,
    convergence_order,
    decay_slope,
    energy,
    mass,
    norm_inflation_curve,
    relative_l2_error,
    second_iterate_a2,
)
from .experiments import (
    ExperimentKind,
    ExperimentSpec,
    ResultRecord,
    SpecError,
    load_spec,
    run_experiment,
    validate_spec,
    write_results,
)
from .presets import get_preset, preset_names

__version__ = "0.1.0"
