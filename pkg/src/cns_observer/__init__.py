"""Symmetry-preserving observers for the barotropic compressible Navier-Stokes system."""

from .analysis import DecayEstimate, NonStationaryError, estimate_decay, fit_rate_vs_length, steady_amplitude
from .experiments import ConfigError, ScenarioConfig, ScenarioResult, emit_plot_data, load_config, run_scenario
from .kernels import BACKEND
from .observer import ObserverConfig, PairedRun, apply_feedback, run_pair
from .solver import (
    CFLError,
    FieldState,
    GridSpec,
    LinearModel,
    NonlinearModel,
    SolverError,
    TimeStepper,
    rhs_linear,
    rhs_nonlinear,
    step_rk3,
    total_mass,
)
from .spectral import (
    FluidParams,
    ForcingSpec,
    KernelCoeffs,
    ModeEigen,
    ResonanceError,
    SpectralConstants,
    assemble_mode_matrix_density_obs,
    assemble_mode_matrix_system,
    assemble_mode_matrix_wave,
    compute_constants,
    design_kernels_density,
    design_kernels_velocity,
    eigenvalues_closed_form,
    forced_amplitude,
    indicator_fourier,
    optimal_nudging,
    partial_obs_rate,
)

__version__ = "0.1.0"
